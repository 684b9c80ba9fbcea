#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codesft/apimodel.hpp"
#include "codesft/common.hpp"
#include "codesft/corpus.hpp"
#include "codesft/dsel.hpp"
#include "codesft/extractor.hpp"
#include "codesft/genclient.hpp"
#include "codesft/promptgen.hpp"
#include "codesft/validator.hpp"

namespace codesft {

/// Bad command line or configuration; the CLI exits with status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Flat `section.key = value` settings. A `[section]` line prefixes the keys
/// that follow it. Only known keys are accepted.
class PipelineConfig {
 public:
  PipelineConfig()
      : values_{
            {"seed", "42"},
            {"output.dir", "out"},
            {"corpus.input", ""},
            {"corpus.source", ""},
            {"corpus.max_tokens", "4096"},
            {"dsel.budget", "0.05"},
            {"dsel.buckets", "40"},
            {"dsel.tau", ""},
            {"dsel.baseline_runs", "1"},
            {"catalog.path", ""},
            {"catalog.library", ""},
            {"catalog.docs", ""},
            {"catalog.tutorials", ""},
            {"catalog.basic_cap", "50"},
            {"skdsl.enabled", "true"},
            {"skdsl.max_keywords", "8"},
            {"prompts.basic", "50"},
            {"prompts.mix", "50"},
            {"prompts.apis_per_prompt", "5"},
            {"gen.endpoint", "stub"},
            {"gen.stub_script", ""},
            {"gen.model", "default"},
            {"gen.temperature", "0.8"},
            {"gen.top_p", "1.0"},
            {"gen.max_tokens", "4096"},
            {"gen.parallelism", "8"},
            {"gen.max_retries", "3"},
            {"gen.backoff_ms", "200,400,800"},
            {"gen.timeout_s", "120"},
            {"validator.threshold", "0.6"},
            {"validator.min_tokens", "32"},
            {"validator.max_tokens", "4096"},
            {"validator.comparison", "at_least"},
            {"validator.joint_length", "true"},
            {"validator.thresholds", "0.2,0.4,0.6,0.8,1.0"},
            {"dgen.variants", "BASIC,MIX,COMB"},
            {"dgen.comb_both_per_pool", "0"},
        } {}

  static PipelineConfig parse(std::string_view text) {
    PipelineConfig c;
    c.merge(text);
    return c;
  }

  void merge(std::string_view text) {
    std::string section;
    const auto lines = split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      auto line = trim(lines[ln]);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw UsageError("config line " + std::to_string(ln + 1) + ": unterminated section");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw UsageError("config line " + std::to_string(ln + 1) + ": expected key = value");
      std::string key(trim(line.substr(0, eq)));
      if (!section.empty()) key = section + "." + key;
      set(key, std::string(trim(line.substr(eq + 1))));
    }
  }

  /// Applies `key=value`.
  void assign(std::string_view kv) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw UsageError("override must be key=value: " + std::string(kv));
    set(std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1))));
  }

  void set(const std::string& key, std::string value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key: " + key);
    it->second = std::move(value);
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key: " + key);
    return it->second;
  }

  std::uint64_t u64(const std::string& key) const {
    const auto& v = get(key);
    try {
      std::size_t used = 0;
      const auto n = std::stoull(v, &used);
      if (used == v.size() && v.front() != '-') return n;
    } catch (const std::logic_error&) {
    }
    throw UsageError(key + ": expected a non-negative integer, got '" + v + "'");
  }

  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

  double real(const std::string& key) const { return to_real(key, get(key)); }

  std::optional<double> optional_real(const std::string& key) const {
    if (get(key).empty()) return std::nullopt;
    return real(key);
  }

  bool flag(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw UsageError(key + ": expected true or false, got '" + v + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::string_view rest = get(key);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) out.push_back(to_real(key, s));
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

 private:
  static double to_real(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::logic_error&) {
    }
    throw UsageError(key + ": expected a number, got '" + v + "'");
  }

  std::map<std::string, std::string> values_;
};

inline SelectionConfig selection_config(const PipelineConfig& c) {
  SelectionConfig s;
  try {
    s.budget = Budget::parse(c.get("dsel.budget"));
  } catch (const Error& e) {
    throw UsageError(std::string("dsel.budget: ") + e.what());
  }
  s.buckets = c.size("dsel.buckets");
  s.tau = c.optional_real("dsel.tau");
  s.seed = derive_seed(c.u64("seed"), "dsel");
  return s;
}

inline GenConfig gen_config(const PipelineConfig& c) {
  GenConfig g;
  g.endpoint = c.get("gen.endpoint");
  g.model = c.get("gen.model");
  g.temperature = c.real("gen.temperature");
  g.top_p = c.real("gen.top_p");
  g.max_tokens = c.size("gen.max_tokens");
  g.parallelism = c.size("gen.parallelism");
  g.max_retries = static_cast<int>(c.size("gen.max_retries"));
  g.backoff_ms.clear();
  for (auto ms : c.reals("gen.backoff_ms")) g.backoff_ms.push_back(static_cast<int>(ms));
  g.timeout_s = static_cast<int>(c.size("gen.timeout_s"));
  g.api_key = api_key_from_env();
  try {
    g.check();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return g;
}

inline Comparison parse_comparison(std::string_view s) {
  if (s == "at_least") return Comparison::AtLeast;
  if (s == "strict_greater") return Comparison::StrictGreater;
  throw UsageError("comparison must be at_least or strict_greater: " + std::string(s));
}

inline ValidatorConfig validator_config(const PipelineConfig& c) {
  ValidatorConfig v;
  v.threshold = c.real("validator.threshold");
  v.min_tokens = c.size("validator.min_tokens");
  v.max_tokens = c.size("validator.max_tokens");
  v.comparison = parse_comparison(c.get("validator.comparison"));
  v.joint_length = c.flag("validator.joint_length");
  v.thresholds = c.reals("validator.thresholds");
  try {
    v.check();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return v;
}

// ---- provenance ---------------------------------------------------------

/// Content hashes of the files a run read, keyed by config key.
using InputHashes = std::vector<std::pair<std::string, std::string>>;

inline std::string content_hash(std::string_view content) { return hex64(fnv1a64(content)); }

inline nlohmann::ordered_json provenance(const PipelineConfig& cfg, const InputHashes& inputs) {
  nlohmann::ordered_json j;
  j["config"] = cfg.to_json();
  nlohmann::ordered_json in = nlohmann::ordered_json::object();
  for (const auto& [k, h] : inputs) in[k] = h;
  j["inputs"] = std::move(in);
  return j;
}

/// Writes a JSONL artifact and its `<name>.meta.json` sidecar carrying the
/// provenance and the artifact's own hash.
inline void write_artifact(const std::filesystem::path& path, std::string_view content,
                           const nlohmann::ordered_json& prov) {
  write_file(path.string(), content);
  nlohmann::ordered_json meta;
  meta["artifact"] = path.filename().string();
  meta["fnv1a64"] = content_hash(content);
  meta["provenance"] = prov;
  write_file(path.string() + ".meta.json", meta.dump(2) + "\n");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_file(path.string(), j.dump(2) + "\n");
}

namespace detail {

/// Runs one stage, tagging any failure other than a usage error with the
/// stage name.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline std::string read_input(const PipelineConfig& cfg, const std::string& key, InputHashes& hashes) {
  const auto& path = cfg.get(key);
  if (path.empty()) throw UsageError(key + " is not set");
  if (!std::filesystem::is_regular_file(path)) throw UsageError(key + ": no such file: " + path);
  auto text = read_file(path);
  hashes.emplace_back(key, content_hash(text));
  return text;
}

inline std::filesystem::path output_dir(const PipelineConfig& cfg) {
  std::filesystem::path dir = cfg.get("output.dir");
  if (dir.empty()) throw UsageError("output.dir is not set");
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace detail

// ---- Dsel ---------------------------------------------------------------

struct DselOutcome {
  Corpus subset;
  SelectionResult selection;
  std::vector<SelectionResult> baselines;
  RejectReport rejects;
  nlohmann::ordered_json report;
};

/// ingest -> filter -> extract -> select, plus seeded random baselines of the
/// same size. Writes api_stats.jsonl, rejects.jsonl, subset.jsonl (each with a
/// sidecar) and selection.json into output.dir.
inline DselOutcome run_dsel_pipeline(const PipelineConfig& cfg) {
  InputHashes hashes;
  const auto text = detail::read_input(cfg, "corpus.input", hashes);
  const auto sel_cfg = selection_config(cfg);
  const auto max_tokens = cfg.size("corpus.max_tokens");
  const auto baseline_runs = cfg.size("dsel.baseline_runs");
  const auto dir = detail::output_dir(cfg);
  const auto prov = provenance(cfg, hashes);

  DselOutcome out;
  auto ingested = detail::stage("ingest", [&] { return ingest_text(text, cfg.get("corpus.source")); });
  out.rejects = std::move(ingested.rejects);
  auto filtered = detail::stage("filter", [&] { return filter_corpus(ingested.corpus, max_tokens); });
  out.rejects.insert(out.rejects.end(), filtered.rejects.begin(), filtered.rejects.end());
  auto& corpus = filtered.kept;
  const auto extract_rejects = detail::stage("extract", [&] { return extract_corpus(corpus); });
  out.rejects.insert(out.rejects.end(), extract_rejects.begin(), extract_rejects.end());
  const auto stats = api_stats(corpus);

  out.selection = detail::stage("select", [&] { return select_top_api(stats, sel_cfg); });
  detail::stage("baseline", [&] {
    for (std::size_t r = 0; r < baseline_runs; ++r) {
      auto c = sel_cfg;
      c.seed = derive_seed(cfg.u64("seed"), "dsel/random/" + std::to_string(r));
      out.baselines.push_back(select_random(stats, c));
    }
    return 0;
  });

  out.subset.source_name = corpus.source_name;
  for (auto i : out.selection.indices) out.subset.examples.push_back(corpus.examples[i]);

  auto& rep = out.report;
  rep["corpus"] = {{"ingested", ingested.corpus.size() + ingested.rejects.size()},
                   {"kept", corpus.size()},
                   {"rejected", out.rejects.size()}};
  rep["selection"] = to_json(out.selection);
  rep["warnings"] = out.selection.warnings;
  if (!out.baselines.empty()) {
    double cov = 0, jsd = 0;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& b : out.baselines) {
      cov += b.api_coverage;
      jsd += b.jsd;
      runs.push_back({{"api_coverage", b.api_coverage}, {"jsd", b.jsd}});
    }
    const auto n = static_cast<double>(out.baselines.size());
    rep["random_baseline"] = {{"runs", std::move(runs)}, {"mean_api_coverage", cov / n}, {"mean_jsd", jsd / n}};
  }
  rep["provenance"] = prov;

  detail::stage("export", [&] {
    write_artifact(dir / "api_stats.jsonl", serialize(stats), prov);
    write_artifact(dir / "rejects.jsonl", serialize(out.rejects), prov);
    write_artifact(dir / "subset.jsonl", serialize(out.subset), prov);
    write_json(dir / "selection.json", rep);
    return 0;
  });
  return out;
}

// ---- Dgen ---------------------------------------------------------------

inline const std::vector<std::string> kDatasetVariants{"BASIC", "MIX", "COMB", "COMB-BOTH"};

struct DgenOutcome {
  ApiCatalog catalog;
  std::vector<Prompt> prompts;
  std::vector<GenerationRecord> records;
  ValidationReport validation;
  std::map<std::string, Corpus> variants;
  double basic_api_coverage = 0;  // basic-tier APIs named by the BASIC prompts
  nlohmann::ordered_json report;
};

namespace detail {

inline ApiCatalog pipeline_catalog(const PipelineConfig& cfg, InputHashes& hashes) {
  if (!cfg.get("catalog.path").empty()) {
    const auto text = read_input(cfg, "catalog.path", hashes);
    return stage("catalog", [&] {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("catalog: ") + e.what());
      }
      return catalog_from_json(j);
    });
  }
  if (cfg.get("catalog.docs").empty()) throw UsageError("set catalog.path or catalog.docs and catalog.tutorials");
  const auto docs = read_input(cfg, "catalog.docs", hashes);
  const auto tutorials = read_input(cfg, "catalog.tutorials", hashes);
  const auto& library = cfg.get("catalog.library");
  if (library.empty()) throw UsageError("catalog.library is not set");
  return stage("catalog", [&] {
    return build_catalog(library, parse_docs(docs), ingest_text(tutorials, "tutorial").corpus,
                         cfg.size("catalog.basic_cap"));
  });
}

struct PromptPool {
  bool skeletons = true;
  std::vector<Prompt> basic;
  std::vector<Prompt> mix;
};

inline PromptPool make_pool(const ApiCatalog& catalog, const PipelineConfig& cfg, bool skeletons,
                            const std::string& id_suffix) {
  PromptPool pool;
  pool.skeletons = skeletons;
  PromptBatchConfig b;
  b.apis_per_prompt = cfg.size("prompts.apis_per_prompt");
  b.skeletons = skeletons;
  b.max_keywords = cfg.size("skdsl.max_keywords");
  b.seed = derive_seed(cfg.u64("seed"), skeletons ? "prompts/skeleton-on" : "prompts/skeleton-off");
  auto batch = [&](ApiSetKind kind, std::size_t count) {
    b.kind = kind;
    b.count = count;
    auto ps = make_prompts(catalog, b);
    for (auto& p : ps) p.id += id_suffix;
    return ps;
  };
  pool.basic = batch(ApiSetKind::Basic, cfg.size("prompts.basic"));
  pool.mix = batch(ApiSetKind::Mix, cfg.size("prompts.mix"));
  return pool;
}

inline std::vector<GenerationRecord> run_generation(const std::vector<Prompt>& prompts, const PipelineConfig& cfg,
                                                    InputHashes& hashes) {
  auto gen = gen_config(cfg);
  if (gen.endpoint != "stub") return generate_batch(prompts, gen);
  StubServer::Options opts;
  if (!cfg.get("gen.stub_script").empty()) {
    const auto script = read_input(cfg, "gen.stub_script", hashes);
    opts.script = stage("generate", [&] { return parse_stub_script(script); });
  }
  StubServer server(std::move(opts));
  gen.endpoint = server.url();
  return generate_batch(prompts, gen);
}

inline Corpus accepted_subset(const std::vector<GenerationRecord>& records, const ValidationReport& rep,
                              const std::vector<Prompt>& prompts, std::size_t offset, const std::string& name) {
  Corpus c;
  c.source_name = name;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto k = offset + i;
    if (rep.per_record[k].accepted)
      c.examples.push_back(make_example(records[k].prompt_id, records[k].problem, records[k].solution_code));
  }
  return c;
}

}  // namespace detail

/// catalog -> skeletons (when enabled) -> prompts -> generation ->
/// validation. Writes prompts.jsonl, generations.jsonl, one
/// dataset-<VARIANT>.jsonl per requested variant (each with a sidecar) and
/// report.json into output.dir. COMB-BOTH also generates a second pool with
/// skeletons toggled and draws half of the COMB size from each pool unless
/// dgen.comb_both_per_pool is set.
inline DgenOutcome run_dgen_pipeline(const PipelineConfig& cfg) {
  InputHashes hashes;
  const auto variants = cfg.list("dgen.variants");
  for (const auto& v : variants)
    if (std::find(kDatasetVariants.begin(), kDatasetVariants.end(), v) == kDatasetVariants.end())
      throw UsageError("dgen.variants: unknown variant " + v);
  const bool both = std::find(variants.begin(), variants.end(), "COMB-BOTH") != variants.end();
  const bool skeletons = cfg.flag("skdsl.enabled");
  const auto val_cfg = validator_config(cfg);
  gen_config(cfg);
  const auto dir = detail::output_dir(cfg);

  DgenOutcome out;
  out.catalog = detail::pipeline_catalog(cfg, hashes);

  std::vector<detail::PromptPool> pools;
  detail::stage("prompts", [&] {
    pools.push_back(detail::make_pool(out.catalog, cfg, skeletons, ""));
    if (both) pools.push_back(detail::make_pool(out.catalog, cfg, !skeletons, skeletons ? "-noskel" : "-skel"));
    for (const auto& p : pools) {
      out.prompts.insert(out.prompts.end(), p.basic.begin(), p.basic.end());
      out.prompts.insert(out.prompts.end(), p.mix.begin(), p.mix.end());
    }
    return 0;
  });

  out.records = detail::stage("generate", [&] { return detail::run_generation(out.prompts, cfg, hashes); });

  out.validation = detail::stage("validate", [&] {
    std::vector<std::vector<std::string>> required;
    for (const auto& p : out.prompts) required.push_back(p.apis);
    return validate(out.records, required, val_cfg);
  });

  detail::stage("assemble", [&] {
    std::vector<Corpus> combs;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < pools.size(); ++k) {
      const auto& p = pools[k];
      auto basic = detail::accepted_subset(out.records, out.validation, p.basic, offset, "BASIC");
      offset += p.basic.size();
      auto mix = detail::accepted_subset(out.records, out.validation, p.mix, offset, "MIX");
      offset += p.mix.size();
      Corpus comb_c;
      comb_c.source_name = "COMB";
      comb_c.examples = comb(basic.examples, mix.examples);
      if (k == 0) {
        out.variants["BASIC"] = std::move(basic);
        out.variants["MIX"] = std::move(mix);
        out.variants["COMB"] = comb_c;
      }
      combs.push_back(std::move(comb_c));
    }
    if (both) {
      const auto& on = pools[0].skeletons ? combs[0] : combs[1];
      const auto& off = pools[0].skeletons ? combs[1] : combs[0];
      auto per_pool = cfg.size("dgen.comb_both_per_pool");
      if (per_pool == 0) per_pool = std::min(on.size(), off.size()) / 2;
      Corpus c;
      c.source_name = "COMB-BOTH";
      c.examples = comb_both(on.examples, off.examples, per_pool, derive_seed(cfg.u64("seed"), "comb-both"));
      out.variants["COMB-BOTH"] = std::move(c);
    }
    for (auto it = out.variants.begin(); it != out.variants.end();)
      it = std::find(variants.begin(), variants.end(), it->first) == variants.end() ? out.variants.erase(it)
                                                                                     : std::next(it);
    return 0;
  });

  std::set<std::string> named;
  for (const auto& p : pools[0].basic) named.insert(p.apis.begin(), p.apis.end());
  const auto basic = out.catalog.tier(Tier::Basic);
  std::size_t hit = 0;
  for (const auto& r : basic) hit += named.count(r.qualified_name);
  out.basic_api_coverage = basic.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(basic.size());

  const auto prov = provenance(cfg, hashes);
  auto& rep = out.report;
  rep["validation"] = to_json(out.validation);
  rep["basic_api_coverage"] = out.basic_api_coverage;
  nlohmann::ordered_json sizes = nlohmann::ordered_json::object();
  for (const auto& v : variants)
    if (out.variants.count(v)) sizes[v] = out.variants[v].size();
  rep["variants"] = std::move(sizes);
  rep["provenance"] = prov;

  detail::stage("export", [&] {
    write_artifact(dir / "prompts.jsonl", serialize(out.prompts), prov);
    write_artifact(dir / "generations.jsonl", serialize(out.records), prov);
    for (const auto& [name, c] : out.variants) write_artifact(dir / ("dataset-" + name + ".jsonl"), serialize(c), prov);
    write_json(dir / "report.json", rep);
    return 0;
  });
  return out;
}

}  // namespace codesft
