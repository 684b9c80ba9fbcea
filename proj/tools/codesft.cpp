#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "codesft/apimodel.hpp"
#include "codesft/corpus.hpp"
#include "codesft/dsel.hpp"
#include "codesft/extractor.hpp"
#include "codesft/genclient.hpp"
#include "codesft/metrics.hpp"
#include "codesft/pipeline.hpp"
#include "codesft/promptgen.hpp"
#include "codesft/skdsl.hpp"
#include "codesft/synthbench.hpp"
#include "codesft/validator.hpp"

namespace {

using namespace codesft;
using nlohmann::json;
using nlohmann::ordered_json;

// Writes to `path`, or stdout when it is empty.
void emit(const std::string& path, const std::string& content) {
  if (path.empty())
    std::cout << content;
  else
    write_file(path, content);
}

void emit_json(const std::string& path, const ordered_json& j) { emit(path, j.dump(2) + "\n"); }

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

struct Args {
  std::string input, out, rejects, source;
  std::size_t max_tokens = 4096;

  std::string budget = "0.05";
  std::size_t buckets = kDefaultBuckets;
  std::optional<double> tau;
  std::uint64_t seed = 42;

  SynthSpec synth;

  std::string library, docs, tutorials, catalog;
  std::size_t basic_cap = kDefaultBasicCap;

  std::size_t count = 10;
  std::size_t max_keywords = kDefaultMaxKeywords;
  std::string kind = "BASIC";
  std::size_t apis_per_prompt = kDefaultApisPerPrompt;
  bool no_skeleton = false;

  std::string prompts, endpoint, stub_script;
  GenConfig gen;

  std::string gen_path, accepted, comparison = "at_least";
  ValidatorConfig val;
  bool per_part_length = false;

  std::string metric;
  std::vector<std::string> inputs;
  std::vector<std::size_t> ks{1};

  std::string config;
  std::vector<std::string> overrides;
};

SelectionConfig selection_args(const Args& a) {
  SelectionConfig c;
  c.budget = Budget::parse(a.budget);
  c.buckets = a.buckets;
  c.tau = a.tau;
  c.seed = a.seed;
  return c;
}

void run_ingest(const Args& a) {
  auto res = ingest(a.input, a.source);
  emit(a.out, serialize(res.corpus));
  if (!a.rejects.empty()) write_file(a.rejects, serialize(res.rejects));
  std::cerr << res.corpus.size() << " examples, " << res.rejects.size() << " rejected\n";
}

void run_filter(const Args& a) {
  const auto in = ingest(a.input, a.source);
  auto res = filter_corpus(in.corpus, a.max_tokens);
  emit(a.out, serialize(res.kept));
  auto rejects = in.rejects;
  rejects.insert(rejects.end(), res.rejects.begin(), res.rejects.end());
  if (!a.rejects.empty()) write_file(a.rejects, serialize(rejects));
  std::cerr << res.kept.size() << " kept, " << rejects.size() << " rejected\n";
}

void run_extract(const Args& a) {
  auto in = ingest(a.input, a.source);
  auto rejects = extract_corpus(in.corpus);
  emit(a.out, serialize(api_stats(in.corpus)));
  if (!a.rejects.empty()) write_file(a.rejects, serialize(rejects));
}

void run_select(const Args& a, bool random) {
  const auto stats = parse_api_stats(read_file(a.input));
  const auto cfg = selection_args(a);
  const auto res = random ? select_random(stats, cfg) : select_top_api(stats, cfg);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  emit_json(a.out, to_json(res));
}

void run_synth(const Args& a) {
  auto spec = a.synth;
  spec.seed = a.seed;
  emit(a.out, serialize(make_corpus(spec)));
}

void run_catalog(const Args& a) {
  const auto tutorials = ingest(a.tutorials, "tutorial");
  const auto cat = build_catalog(a.library, parse_docs(read_file(a.docs)), tutorials.corpus, a.basic_cap);
  emit_json(a.out, to_json(cat));
}

void run_skeleton(const Args& a) { emit(a.out, serialize(generate_skeletons(a.count, a.seed, a.max_keywords))); }

void run_prompts(const Args& a) {
  PromptBatchConfig cfg;
  cfg.kind = parse_api_set_kind(a.kind);
  cfg.count = a.count;
  cfg.apis_per_prompt = a.apis_per_prompt;
  cfg.skeletons = !a.no_skeleton;
  cfg.max_keywords = a.max_keywords;
  cfg.seed = a.seed;
  emit(a.out, serialize(make_prompts(load_catalog(a.catalog), cfg)));
}

void run_generate(const Args& a) {
  const auto prompts = parse_prompts(read_file(a.prompts));
  auto cfg = a.gen;
  cfg.api_key = api_key_from_env();
  std::vector<GenerationRecord> records;
  if (a.endpoint == "stub") {
    StubServer::Options opts;
    if (!a.stub_script.empty()) opts.script = parse_stub_script(read_file(a.stub_script));
    StubServer server(std::move(opts));
    cfg.endpoint = server.url();
    records = generate_batch(prompts, cfg);
  } else {
    cfg.endpoint = a.endpoint;
    records = generate_batch(prompts, cfg);
  }
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.status == GenStatus::Ok;
  emit(a.out, serialize(records));
  std::cerr << ok << "/" << records.size() << " ok\n";
}

void run_validate(const Args& a) {
  const auto records = parse_generations(read_file(a.gen_path));
  std::map<std::string, std::vector<std::string>> by_id;
  for (auto& p : parse_prompts(read_file(a.prompts))) by_id[p.id] = std::move(p.apis);
  std::vector<std::vector<std::string>> required;
  for (const auto& r : records) {
    auto it = by_id.find(r.prompt_id);
    if (it == by_id.end()) throw FormatError("no prompt with id " + r.prompt_id);
    required.push_back(it->second);
  }
  auto cfg = a.val;
  cfg.comparison = parse_comparison(a.comparison);
  cfg.joint_length = !a.per_part_length;
  const auto rep = validate(records, required, cfg);
  if (!a.accepted.empty()) write_file(a.accepted, serialize(accepted_corpus(records, rep)));
  emit_json(a.out, to_json(rep));
  std::cerr << rep.accepted_count() << "/" << records.size() << " accepted\n";
}

ordered_json codebleu_json(const CodeBleuScore& s) {
  return {{"bleu", s.bleu},
          {"weighted_bleu", s.weighted_bleu},
          {"ast", s.ast},
          {"dataflow", s.dataflow},
          {"codebleu", s.total}};
}

LabeledPoints points_from_json(const json& j) {
  try {
    return {j.at("points").get<std::vector<std::vector<double>>>(), j.at("labels").get<std::vector<int>>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("points: ") + e.what());
  }
}

void run_score(const Args& a) {
  ordered_json out;
  out["metric"] = a.metric;
  if (a.metric == "codebleu") {
    auto scores = ordered_json::array();
    if (a.inputs.size() == 2) {
      scores.push_back(codebleu_json(code_bleu_parts(read_file(a.inputs[0]), read_file(a.inputs[1]))));
    } else if (a.inputs.size() == 1) {
      for (const auto line : split_lines(read_file(a.inputs[0]))) {
        if (trim(line).empty()) continue;
        const auto j = json::parse(line);
        scores.push_back(codebleu_json(
            code_bleu_parts(j.at("candidate").get<std::string>(), j.at("reference").get<std::string>())));
      }
    } else {
      throw UsageError("codebleu takes candidate and reference files, or one JSONL of pairs");
    }
    double mean = 0;
    for (const auto& s : scores) mean += s["codebleu"].get<double>();
    out["scores"] = scores;
    out["mean"] = scores.empty() ? 0.0 : mean / static_cast<double>(scores.size());
  } else if (a.metric == "passk") {
    if (a.inputs.size() != 1) throw UsageError("passk takes one JSON matrix file");
    PassMatrix m;
    for (const auto& row : parse_json_file(a.inputs[0])) {
      std::vector<bool> r;
      for (const auto& v : row) r.push_back(v.is_boolean() ? v.get<bool>() : v.get<int>() != 0);
      m.push_back(std::move(r));
    }
    for (auto k : a.ks) out["pass@" + std::to_string(k)] = pass_at_k(m, k);
  } else if (a.metric == "silhouette" || a.metric == "ch") {
    if (a.inputs.size() != 1) throw UsageError(a.metric + " takes one JSON file of points and labels");
    const auto p = points_from_json(parse_json_file(a.inputs[0]));
    out["value"] = a.metric == "ch" ? calinski_harabasz(p) : silhouette(p);
  } else if (a.metric == "cyclomatic") {
    auto files = ordered_json::object();
    for (const auto& f : a.inputs) files[f] = cyclomatic_complexity(read_file(f));
    out["files"] = files;
  } else {
    throw UsageError("unknown metric: " + a.metric);
  }
  emit_json(a.out, out);
}

PipelineConfig pipeline_config(const Args& a) {
  PipelineConfig cfg;
  if (!a.config.empty()) cfg.merge(read_file(a.config));
  for (const auto& kv : a.overrides) cfg.assign(kv);
  return cfg;
}

void print_report(const nlohmann::ordered_json& rep) {
  auto r = rep;
  r.erase("provenance");
  if (r.contains("validation")) r["validation"].erase("per_record");
  if (r.contains("selection")) {
    r["selection"].erase("indices");
    r["selection"].erase("per_iteration_gain");
  }
  std::cout << r.dump(2) << "\n";
}

void add_pipeline_options(CLI::App* cmd, Args& a) {
  cmd->add_option("--config", a.config, "Key-value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.overrides, "Override a config value (key=value); repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build SFT datasets for code models by selection (Dsel) or generation (Dgen)"};
  app.require_subcommand(1);
  Args a;
  std::function<void()> action;

  auto io = [&](CLI::App* cmd, bool required_input = true) {
    auto in = cmd->add_option("--input", a.input, "Input file");
    if (required_input) in->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "Output file (stdout when omitted)");
  };

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse corpus JSONL and report malformed records");
  io(ingest_cmd);
  ingest_cmd->add_option("--source", a.source, "Source name used in synthesized ids");
  ingest_cmd->add_option("--rejects", a.rejects, "Reject report JSONL");
  ingest_cmd->callback([&] { action = [&] { run_ingest(a); }; });

  auto* filter_cmd = app.add_subcommand("filter", "Drop examples that fail to parse or are too long");
  io(filter_cmd);
  filter_cmd->add_option("--source", a.source, "Source name used in synthesized ids");
  filter_cmd->add_option("--max-tokens", a.max_tokens, "Longest code kept, in tokens")->capture_default_str();
  filter_cmd->add_option("--rejects", a.rejects, "Reject report JSONL");
  filter_cmd->callback([&] { action = [&] { run_filter(a); }; });

  auto* extract_cmd = app.add_subcommand("extract", "Write api_stats JSONL for a corpus");
  io(extract_cmd);
  extract_cmd->add_option("--source", a.source, "Source name used in synthesized ids");
  extract_cmd->add_option("--rejects", a.rejects, "Examples whose code does not parse");
  extract_cmd->callback([&] { action = [&] { run_extract(a); }; });

  for (const bool random : {false, true}) {
    auto* cmd = app.add_subcommand(random ? "select-random" : "select",
                                   random ? "Uniform random subset of the same size"
                                          : "Coverage-maximizing subset under per-length-bucket quotas");
    io(cmd);
    cmd->add_option("--budget", a.budget, "Fraction (0.05, 5%) or count (1234)")->capture_default_str();
    cmd->add_option("--buckets", a.buckets, "Length buckets")->capture_default_str();
    if (!random) cmd->add_option("--tau", a.tau, "Warn when the subset's length divergence exceeds this");
    cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    cmd->callback([&, random] { action = [&, random] { run_select(a, random); }; });
  }

  auto* synth_cmd = app.add_subcommand("synth", "Synthetic corpus with Zipf API popularity");
  synth_cmd->add_option("--cases", a.synth.n_cases)->capture_default_str();
  synth_cmd->add_option("--apis", a.synth.n_apis)->capture_default_str();
  synth_cmd->add_option("--zipf", a.synth.zipf_exponent, "Zipf exponent")->capture_default_str();
  synth_cmd->add_option("--seed", a.seed)->capture_default_str();
  synth_cmd->add_option("--out", a.out, "Output file (stdout when omitted)");
  synth_cmd->callback([&] { action = [&] { run_synth(a); }; });

  auto* catalog_cmd = app.add_subcommand("catalog", "Tiered API catalog from docs and tutorials");
  catalog_cmd->add_option("--library", a.library, "Top-level module, e.g. numpy")->required();
  catalog_cmd->add_option("--docs", a.docs, "Documentation JSONL")->required()->check(CLI::ExistingFile);
  catalog_cmd->add_option("--tutorials", a.tutorials, "Tutorial corpus JSONL")->required()->check(CLI::ExistingFile);
  catalog_cmd->add_option("--basic-cap", a.basic_cap)->capture_default_str();
  catalog_cmd->add_option("--out", a.out, "Catalog JSON (stdout when omitted)");
  catalog_cmd->callback([&] { action = [&] { run_catalog(a); }; });

  auto* skeleton_cmd = app.add_subcommand("skeleton", "Random valid code skeletons");
  skeleton_cmd->add_option("--count", a.count)->capture_default_str();
  skeleton_cmd->add_option("--seed", a.seed)->capture_default_str();
  skeleton_cmd->add_option("--max-keywords", a.max_keywords)->capture_default_str();
  skeleton_cmd->add_option("--out", a.out, "Skeleton JSONL (stdout when omitted)");
  skeleton_cmd->callback([&] { action = [&] { run_skeleton(a); }; });

  auto* prompts_cmd = app.add_subcommand("prompts", "Generation prompts from a catalog");
  prompts_cmd->add_option("--catalog", a.catalog, "Catalog JSON from the catalog command")->required()->check(CLI::ExistingFile);
  prompts_cmd->add_option("--kind", a.kind, "BASIC or MIX")->capture_default_str();
  prompts_cmd->add_option("--count", a.count)->capture_default_str();
  prompts_cmd->add_option("--apis-per-prompt", a.apis_per_prompt)->capture_default_str();
  prompts_cmd->add_flag("--no-skeleton", a.no_skeleton, "Leave the skeleton out of the prompt");
  prompts_cmd->add_option("--max-keywords", a.max_keywords)->capture_default_str();
  prompts_cmd->add_option("--seed", a.seed)->capture_default_str();
  prompts_cmd->add_option("--out", a.out, "Prompt JSONL (stdout when omitted)");
  prompts_cmd->callback([&] { action = [&] { run_prompts(a); }; });

  auto* generate_cmd = app.add_subcommand("generate", "Query a chat-completion endpoint for every prompt");
  generate_cmd->add_option("--prompts", a.prompts, "Prompt JSONL")->required()->check(CLI::ExistingFile);
  generate_cmd->add_option("--endpoint", a.endpoint, "URL, or 'stub' for the built-in local server")->required();
  generate_cmd->add_option("--stub-script", a.stub_script, "Scripted stub replies (JSONL)")
      ->check(CLI::ExistingFile);
  generate_cmd->add_option("--model", a.gen.model)->capture_default_str();
  generate_cmd->add_option("--temperature", a.gen.temperature)->capture_default_str();
  generate_cmd->add_option("--top-p", a.gen.top_p)->capture_default_str();
  generate_cmd->add_option("--max-tokens", a.gen.max_tokens)->capture_default_str();
  generate_cmd->add_option("--parallelism", a.gen.parallelism)->capture_default_str();
  generate_cmd->add_option("--retries", a.gen.max_retries)->capture_default_str();
  generate_cmd->add_option("--timeout", a.gen.timeout_s, "Seconds")->capture_default_str();
  generate_cmd->add_option("--out", a.out, "Generation JSONL (stdout when omitted)");
  generate_cmd->callback([&] { action = [&] { run_generate(a); }; });

  auto* validate_cmd = app.add_subcommand("validate", "Format, length and API-content checks");
  validate_cmd->add_option("--gen", a.gen_path, "Generation JSONL")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--prompts", a.prompts, "Prompt JSONL the generations answer")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--t", a.val.threshold, "Threshold T")->capture_default_str();
  validate_cmd->add_option("--min-tokens", a.val.min_tokens)->capture_default_str();
  validate_cmd->add_option("--max-tokens", a.val.max_tokens)->capture_default_str();
  validate_cmd->add_option("--comparison", a.comparison, "at_least or strict_greater")->capture_default_str();
  validate_cmd->add_flag("--per-part-length", a.per_part_length, "Apply length bounds to problem and code separately");
  validate_cmd->add_option("--accepted", a.accepted, "Accepted pairs as corpus JSONL");
  validate_cmd->add_option("--out", a.out, "Report JSON (stdout when omitted)");
  validate_cmd->callback([&] { action = [&] { run_validate(a); }; });

  auto* score_cmd = app.add_subcommand("score", "CodeBLEU, pass@k, clustering indices, cyclomatic complexity");
  score_cmd->add_option("--metric", a.metric)
      ->required()
      ->check(CLI::IsMember({"codebleu", "passk", "silhouette", "ch", "cyclomatic"}));
  score_cmd->add_option("--inputs", a.inputs, "Candidate and reference for codebleu, else one JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--k", a.ks, "k values for passk")->capture_default_str();
  score_cmd->add_option("--out", a.out, "Report JSON (stdout when omitted)");
  score_cmd->callback([&] { action = [&] { run_score(a); }; });

  auto* dsel_cmd = app.add_subcommand("pipeline-dsel", "ingest, filter, extract and select in one run");
  add_pipeline_options(dsel_cmd, a);
  dsel_cmd->callback([&] { action = [&] { print_report(run_dsel_pipeline(pipeline_config(a)).report); }; });

  auto* dgen_cmd = app.add_subcommand("pipeline-dgen", "catalog, prompts, generation and validation in one run");
  add_pipeline_options(dgen_cmd, a);
  dgen_cmd->callback([&] { action = [&] { print_report(run_dgen_pipeline(pipeline_config(a)).report); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    action();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
