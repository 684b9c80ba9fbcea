#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "codesft/common.hpp"
#include "codesft/corpus.hpp"
#include "codesft/extractor.hpp"
#include "codesft/genclient.hpp"

namespace codesft {

enum class Comparison { AtLeast, StrictGreater };

inline const std::vector<double> kDefaultThresholds{0.2, 0.4, 0.6, 0.8, 1.0};

struct ValidatorConfig {
  std::size_t min_tokens = 32;
  std::size_t max_tokens = 4096;
  double threshold = 0.6;
  Comparison comparison = Comparison::AtLeast;
  bool joint_length = true;  // bounds apply to problem + code; else to each
  std::vector<double> thresholds = kDefaultThresholds;

  void check() const {
    if (!(threshold > 0 && threshold <= 1)) throw Error("threshold must be in (0, 1]");
    if (min_tokens >= max_tokens) throw Error("min_tokens must be below max_tokens");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
      if (!(thresholds[i] > thresholds[i - 1])) throw Error("thresholds must be ascending");
  }
};

struct RecordChecks {
  bool format = false;
  bool length = false;
  bool syntax = false;
  bool content = false;
};

struct RecordVerdict {
  std::string id;
  RecordChecks checks;
  std::vector<std::string> detected_apis;  // every API the code calls
  std::size_t matched = 0;                 // detected and required
  std::size_t required = 0;
  std::size_t tokens = 0;
  bool accepted = false;
};

struct ValidationReport {
  std::vector<RecordVerdict> per_record;
  std::map<double, double> pass_rate_by_threshold;

  std::size_t accepted_count() const {
    std::size_t n = 0;
    for (const auto& r : per_record) n += r.accepted;
    return n;
  }
};

/// Smallest matched count that passes the content check at threshold t.
inline std::size_t required_matches(std::size_t n, double t, Comparison cmp) {
  const double need = static_cast<double>(n) * t;
  if (cmp == Comparison::AtLeast) return static_cast<std::size_t>(std::ceil(need - 1e-9));
  return static_cast<std::size_t>(std::floor(need + 1e-9)) + 1;
}

namespace detail {

inline RecordVerdict check_record(const GenerationRecord& rec, const std::vector<std::string>& required,
                                  const ValidatorConfig& cfg) {
  RecordVerdict v;
  v.id = rec.prompt_id;
  v.required = required.size();
  if (rec.status != GenStatus::Ok) return v;
  const auto s = extract_sections(rec.raw_response);
  v.checks.format = s.has_problem && s.has_solution && !rec.solution_code.empty();

  const auto tp = token_count(rec.problem), tc = token_count(rec.solution_code);
  v.tokens = tp + tc;
  auto in_bounds = [&](std::size_t n) { return n >= cfg.min_tokens && n <= cfg.max_tokens; };
  v.checks.length = cfg.joint_length ? in_bounds(v.tokens) : in_bounds(tp) && in_bounds(tc);

  v.checks.syntax = !rec.solution_code.empty() && python::syntax_check(rec.solution_code);
  if (v.checks.syntax) {
    const auto detected = extract_api_usages(rec.solution_code);
    v.detected_apis.assign(detected.begin(), detected.end());
    const std::set<std::string> req(required.begin(), required.end());
    for (const auto& a : detected) v.matched += req.count(a);
  }
  return v;
}

inline bool passes(const RecordVerdict& v, double t, Comparison cmp) {
  return v.checks.format && v.checks.length && v.checks.syntax &&
         v.matched >= required_matches(v.required, t, cmp);
}

}  // namespace detail

/// Format, length, syntax and API-content checks per record. required[i]
/// lists the APIs prompt i asked for.
inline ValidationReport validate(const std::vector<GenerationRecord>& records,
                                 const std::vector<std::vector<std::string>>& required,
                                 const ValidatorConfig& cfg = {}) {
  cfg.check();
  if (records.size() != required.size()) throw Error("validate: records and required API lists differ in size");
  ValidationReport rep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto v = detail::check_record(records[i], required[i], cfg);
    v.checks.content = v.checks.syntax && v.matched >= required_matches(v.required, cfg.threshold, cfg.comparison);
    v.accepted = v.checks.format && v.checks.length && v.checks.content;
    rep.per_record.push_back(std::move(v));
  }
  if (!records.empty())
    for (auto t : cfg.thresholds) {
      std::size_t ok = 0;
      for (const auto& v : rep.per_record) ok += detail::passes(v, t, cfg.comparison);
      rep.pass_rate_by_threshold[t] = static_cast<double>(ok) / static_cast<double>(records.size());
    }
  return rep;
}

/// Fraction of records accepted at each threshold.
inline std::map<double, double> pass_rate_curve(const std::vector<GenerationRecord>& records,
                                                const std::vector<std::vector<std::string>>& required,
                                                const std::vector<double>& thresholds = kDefaultThresholds,
                                                ValidatorConfig cfg = {}) {
  cfg.thresholds = thresholds;
  if (records.empty()) {
    cfg.check();
    return {};
  }
  return validate(records, required, cfg).pass_rate_by_threshold;
}

/// Accepted records as an SFT corpus (instruction = problem, code = solution).
inline Corpus accepted_corpus(const std::vector<GenerationRecord>& records, const ValidationReport& rep,
                              const std::string& source = "dgen") {
  Corpus c;
  c.source_name = source;
  for (std::size_t i = 0; i < records.size() && i < rep.per_record.size(); ++i)
    if (rep.per_record[i].accepted)
      c.examples.push_back(make_example(records[i].prompt_id, records[i].problem, records[i].solution_code));
  return c;
}

/// Wraps an instruction/code pair back into a response so it can be validated
/// again.
inline GenerationRecord as_generation(const SftExample& ex) {
  GenerationRecord r;
  r.prompt_id = ex.id;
  r.status = GenStatus::Ok;
  r.raw_response = "[Problem Description]\n" + ex.instruction + "\n\n[Solution]\n```python\n" + ex.code;
  if (!ex.code.empty() && ex.code.back() != '\n') r.raw_response.push_back('\n');
  r.raw_response += "```\n";
  const auto s = extract_sections(r.raw_response);
  r.problem = s.problem;
  r.solution_code = s.code;
  return r;
}

inline nlohmann::ordered_json to_json(const ValidationReport& rep) {
  nlohmann::ordered_json j;
  j["per_record"] = nlohmann::ordered_json::array();
  for (const auto& v : rep.per_record) {
    nlohmann::ordered_json o;
    o["id"] = v.id;
    o["checks"] = {{"format", v.checks.format},
                   {"length", v.checks.length},
                   {"syntax", v.checks.syntax},
                   {"content", v.checks.content}};
    o["detected_apis"] = v.detected_apis;
    o["matched"] = v.matched;
    o["required"] = v.required;
    o["tokens"] = v.tokens;
    o["accepted"] = v.accepted;
    j["per_record"].push_back(std::move(o));
  }
  nlohmann::ordered_json curve = nlohmann::ordered_json::object();
  for (const auto& [t, rate] : rep.pass_rate_by_threshold) {
    std::ostringstream key;
    key << t;
    curve[key.str()] = rate;
  }
  j["pass_rate_by_threshold"] = std::move(curve);
  j["accepted"] = rep.accepted_count();
  j["total"] = rep.per_record.size();
  return j;
}

}  // namespace codesft
