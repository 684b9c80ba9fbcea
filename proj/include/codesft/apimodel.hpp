#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "codesft/common.hpp"
#include "codesft/corpus.hpp"
#include "codesft/extractor.hpp"

namespace codesft {

enum class Tier { Basic, Advanced };

inline std::string_view to_string(Tier t) { return t == Tier::Basic ? "basic" : "advanced"; }

inline Tier parse_tier(std::string_view s) {
  if (s == "basic") return Tier::Basic;
  if (s == "advanced") return Tier::Advanced;
  throw FormatError("unknown tier: " + std::string(s));
}

struct ApiRecord {
  std::string qualified_name;
  std::string signature;
  std::string description;
  Tier tier = Tier::Advanced;

  bool operator==(const ApiRecord&) const = default;
};

/// One line of the documentation dump.
struct DocEntry {
  std::string name;
  std::string signature;
  std::string description;
  std::optional<std::string> base_of;  // qualified name of the base-class method
};

/// Longest dotted path a documented API may have.
inline constexpr std::size_t kMaxApiSegments = 4;
inline constexpr std::size_t kDefaultBasicCap = 50;

class ApiCatalog {
 public:
  ApiCatalog() = default;
  ApiCatalog(std::string library, std::vector<ApiRecord> records, std::size_t basic_cap)
      : library_(std::move(library)), records_(std::move(records)), basic_cap_(basic_cap) {
    check();
  }

  const std::string& library() const { return library_; }
  const std::vector<ApiRecord>& records() const { return records_; }
  std::size_t basic_cap() const { return basic_cap_; }

  std::vector<ApiRecord> tier(Tier t) const {
    std::vector<ApiRecord> out;
    for (const auto& r : records_)
      if (r.tier == t) out.push_back(r);
    return out;
  }

  std::set<std::string> names() const {
    std::set<std::string> out;
    for (const auto& r : records_) out.insert(r.qualified_name);
    return out;
  }

  const ApiRecord* find(std::string_view name) const {
    for (const auto& r : records_)
      if (r.qualified_name == name) return &r;
    return nullptr;
  }

  bool operator==(const ApiCatalog&) const = default;

 private:
  void check() const {
    if (records_.empty()) throw FormatError("catalog has no records");
    std::set<std::string_view> seen;
    std::size_t basic = 0;
    for (const auto& r : records_) {
      if (r.qualified_name.empty()) throw FormatError("catalog record without a name");
      if (!seen.insert(r.qualified_name).second)
        throw FormatError("duplicate catalog record: " + r.qualified_name);
      basic += r.tier == Tier::Basic;
    }
    if (basic > basic_cap_)
      throw FormatError("catalog has " + std::to_string(basic) + " basic APIs, cap is " +
                        std::to_string(basic_cap_));
  }

  std::string library_;
  std::vector<ApiRecord> records_;
  std::size_t basic_cap_ = kDefaultBasicCap;
};

/// True for names no catalog may hold: internal dunder or `c.` names, a bare
/// `c` segment, or paths deeper than kMaxApiSegments.
inline bool excluded_api_name(std::string_view name) {
  if (is_internal_name(name)) return true;
  std::size_t segments = 0, start = 0;
  while (true) {
    const auto dot = name.find('.', start);
    const auto seg = name.substr(start, dot == std::string_view::npos ? dot : dot - start);
    if (seg.empty() || seg == "c") return true;
    ++segments;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return segments > kMaxApiSegments;
}

inline std::vector<DocEntry> parse_docs(std::string_view text) {
  std::vector<DocEntry> out;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DocEntry d;
      d.name = j.at("name").get<std::string>();
      d.signature = j.value("signature", "");
      d.description = j.value("description", "");
      if (j.contains("base_of") && !j["base_of"].is_null()) d.base_of = j["base_of"].get<std::string>();
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("docs line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

/// Builds the tiered catalog. Tutorial call counts decide the basic tier:
/// most frequent first, ties by name, truncated to basic_cap.
inline ApiCatalog build_catalog(const std::string& library, std::vector<DocEntry> docs,
                                const Corpus& tutorials, std::size_t basic_cap = kDefaultBasicCap) {
  if (docs.empty()) throw Error("build_catalog: documentation dump is empty");
  std::sort(docs.begin(), docs.end(), [](const DocEntry& a, const DocEntry& b) {
    return std::tie(a.name, a.signature, a.description) < std::tie(b.name, b.signature, b.description);
  });
  std::set<std::string> documented;
  for (const auto& d : docs) documented.insert(d.name);

  std::map<std::string, DocEntry> kept;
  for (auto& d : docs) {
    if (excluded_api_name(d.name)) continue;
    if (d.base_of && *d.base_of != d.name && documented.count(*d.base_of)) continue;
    kept.try_emplace(d.name, std::move(d));
  }
  if (kept.empty()) throw Error("build_catalog: no documented API survives filtering");

  std::map<std::string, std::size_t> counts;
  for (const auto& ex : tutorials.examples) {
    std::vector<ApiUsage> usages;
    try {
      usages = api_usages(ex.code);
    } catch (const python::SyntaxError&) {
      continue;
    }
    for (const auto& u : usages)
      if (kept.count(u.qualified_name)) ++counts[u.qualified_name];
  }
  if (counts.empty()) throw Error("build_catalog: tutorials use none of the documented APIs");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > basic_cap) ranked.resize(basic_cap);

  std::vector<ApiRecord> records;
  for (const auto& [name, n] : ranked) {
    auto& d = kept.at(name);
    records.push_back({name, d.signature, d.description, Tier::Basic});
    kept.erase(name);
  }
  for (auto& [name, d] : kept) records.push_back({name, d.signature, d.description, Tier::Advanced});
  return ApiCatalog(library, std::move(records), basic_cap);
}

inline nlohmann::ordered_json to_json(const ApiCatalog& c) {
  nlohmann::ordered_json j;
  j["library"] = c.library();
  j["basic_cap"] = c.basic_cap();
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : c.records()) {
    nlohmann::ordered_json o;
    o["qualified_name"] = r.qualified_name;
    o["signature"] = r.signature;
    o["description"] = r.description;
    o["tier"] = to_string(r.tier);
    j["records"].push_back(std::move(o));
  }
  return j;
}

inline ApiCatalog catalog_from_json(const nlohmann::json& j) {
  try {
    std::vector<ApiRecord> records;
    for (const auto& o : j.at("records"))
      records.push_back({o.at("qualified_name").get<std::string>(), o.value("signature", ""),
                         o.value("description", ""), parse_tier(o.at("tier").get<std::string>())});
    return ApiCatalog(j.at("library").get<std::string>(), std::move(records),
                      j.at("basic_cap").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("catalog: ") + e.what());
  }
}

inline ApiCatalog load_catalog(const std::string& path) {
  const auto text = read_file(path);
  if (trim(text).empty()) throw FormatError("catalog file is empty: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("catalog " + path + ": " + e.what());
  }
  return catalog_from_json(j);
}

inline void save_catalog(const ApiCatalog& c, const std::string& path) {
  write_file(path, to_json(c).dump(2) + "\n");
}

/// Catalog-restricted extraction.
inline std::set<std::string> extract_api_usages(std::string_view code, const ApiCatalog& catalog) {
  const auto known = catalog.names();
  return extract_api_usages(code, &known);
}

}  // namespace codesft
