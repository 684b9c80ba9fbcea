#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "codesft/common.hpp"
#include "codesft/python/parser.hpp"

namespace codesft {

/// Toolkit tokenizer: identifier/number runs are one token, every other
/// non-whitespace byte is a token of its own. Used for every length measure
/// (corpus lengths, bucket edges, validator bounds, BLEU n-grams).
inline std::vector<std::string> tokenize(std::string_view code) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto word = [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c >= 0x80;
  };
  while (i < code.size()) {
    const auto c = static_cast<unsigned char>(code[i]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      ++i;
    } else if (word(c)) {
      const auto b = i;
      while (i < code.size() && word(static_cast<unsigned char>(code[i]))) ++i;
      out.emplace_back(code.substr(b, i - b));
    } else {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return out;
}

inline std::size_t token_count(std::string_view code) { return tokenize(code).size(); }

struct SftExample {
  std::string id;
  std::string instruction;
  std::string code;
  std::set<std::string> api_set;
  std::size_t length_tokens = 0;

  bool operator==(const SftExample&) const = default;
};

inline SftExample make_example(std::string id, std::string instruction, std::string code) {
  SftExample ex{std::move(id), std::move(instruction), std::move(code), {}, 0};
  ex.length_tokens = token_count(ex.code);
  return ex;
}

struct Corpus {
  std::string source_name;
  std::vector<SftExample> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  bool operator==(const Corpus&) const = default;
};

enum class RejectReason { Syntax, Length, Malformed, MissingField, DuplicateId };

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::Syntax: return "syntax";
    case RejectReason::Length: return "length";
    case RejectReason::Malformed: return "malformed";
    case RejectReason::MissingField: return "missing_field";
    case RejectReason::DuplicateId: return "duplicate_id";
  }
  return "unknown";
}

struct Reject {
  std::string id;
  RejectReason reason;
  std::string detail;
};

using RejectReport = std::vector<Reject>;

struct IngestResult {
  Corpus corpus;
  RejectReport rejects;
};

/// Parses corpus JSONL text. Records without an `id` get `<source>:<line>`
/// with a 0-based line number. Malformed lines, records missing
/// `instruction`/`code`, and duplicate ids are collected as rejects; blank
/// lines are skipped.
inline IngestResult ingest_text(std::string_view text, const std::string& source = "") {
  IngestResult res;
  res.corpus.source_name = source;
  std::unordered_set<std::string> seen;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    const auto fallback_id = source + ":" + std::to_string(ln);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      res.rejects.push_back({fallback_id, RejectReason::Malformed,
                             "line " + std::to_string(ln) + ": " + e.what()});
      continue;
    }
    if (!j.is_object()) {
      res.rejects.push_back({fallback_id, RejectReason::Malformed,
                             "line " + std::to_string(ln) + ": not a JSON object"});
      continue;
    }
    std::string id = fallback_id;
    if (j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
    if (!j.contains("instruction") || !j["instruction"].is_string() || !j.contains("code") ||
        !j["code"].is_string()) {
      res.rejects.push_back({id, RejectReason::MissingField,
                             "line " + std::to_string(ln) + ": needs string fields instruction and code"});
      continue;
    }
    if (!seen.insert(id).second) {
      res.rejects.push_back({id, RejectReason::DuplicateId, "line " + std::to_string(ln)});
      continue;
    }
    res.corpus.examples.push_back(
        make_example(id, j["instruction"].get<std::string>(), j["code"].get<std::string>()));
  }
  return res;
}

inline IngestResult ingest(const std::string& path, const std::string& source = "") {
  return ingest_text(read_file(path), source);
}

inline std::string serialize(const Corpus& c) {
  std::string out;
  for (const auto& ex : c.examples) {
    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["instruction"] = ex.instruction;
    j["code"] = ex.code;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize(const RejectReport& r) {
  std::string out;
  for (const auto& rej : r) {
    nlohmann::ordered_json j;
    j["id"] = rej.id;
    j["reason"] = to_string(rej.reason);
    if (!rej.detail.empty()) j["detail"] = rej.detail;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

struct FilterResult {
  Corpus kept;
  RejectReport rejects;
};

/// Drops examples whose code fails to parse or exceeds max_tokens.
inline FilterResult filter_corpus(const Corpus& c, std::size_t max_tokens) {
  if (max_tokens == 0) throw Error("filter_corpus: max_tokens must be positive");
  FilterResult res;
  res.kept.source_name = c.source_name;
  for (const auto& ex : c.examples) {
    if (!python::syntax_check(ex.code)) {
      res.rejects.push_back({ex.id, RejectReason::Syntax, {}});
    } else if (ex.length_tokens > max_tokens) {
      res.rejects.push_back({ex.id, RejectReason::Length,
                             std::to_string(ex.length_tokens) + " > " + std::to_string(max_tokens)});
    } else {
      res.kept.examples.push_back(ex);
    }
  }
  return res;
}

}  // namespace codesft
