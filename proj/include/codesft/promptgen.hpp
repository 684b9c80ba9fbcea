#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "codesft/apimodel.hpp"
#include "codesft/common.hpp"
#include "codesft/skdsl.hpp"

namespace codesft {

enum class ApiSetKind { Basic, Mix };

inline std::string_view to_string(ApiSetKind k) { return k == ApiSetKind::Basic ? "BASIC" : "MIX"; }

inline ApiSetKind parse_api_set_kind(std::string_view s) {
  if (s == "BASIC" || s == "basic") return ApiSetKind::Basic;
  if (s == "MIX" || s == "mix") return ApiSetKind::Mix;
  throw FormatError("unknown API set kind: " + std::string(s));
}

inline constexpr std::size_t kDefaultApisPerPrompt = 5;

struct PromptSpec {
  std::string library;
  ApiSetKind kind = ApiSetKind::Basic;
  std::vector<ApiRecord> apis;
  std::optional<std::string> skeleton;  // standardized form
  std::uint64_t seed = 0;
};

/// One assembled prompt as written to prompt JSONL.
struct Prompt {
  std::string id;
  std::uint64_t seed = 0;
  std::string library;
  ApiSetKind kind = ApiSetKind::Basic;
  std::vector<std::string> apis;
  std::optional<std::string> skeleton;
  std::string system;
  std::string user;

  bool operator==(const Prompt&) const = default;
};

/// Seeded uniform sample without replacement: basic APIs only for BASIC,
/// basic and advanced for MIX.
inline std::vector<ApiRecord> sample_api_set(const ApiCatalog& catalog, ApiSetKind kind, std::size_t n,
                                             std::uint64_t seed) {
  std::vector<ApiRecord> pool;
  for (const auto& r : catalog.records())
    if (kind == ApiSetKind::Mix || r.tier == Tier::Basic) pool.push_back(r);
  if (pool.size() < n)
    throw Error("sample_api_set: pool of " + std::to_string(pool.size()) + " " +
                std::string(to_string(kind)) + " APIs is smaller than " + std::to_string(n));
  Rng rng(seed);
  std::vector<ApiRecord> out;
  for (auto i : rng.sample_without_replacement(pool.size(), n)) out.push_back(pool[i]);
  return out;
}

/// `name(signature): description`; a signature already wrapped in
/// parentheses is not wrapped again.
inline std::string render_api(const ApiRecord& r) {
  std::string sig(trim(r.signature));
  if (sig.size() >= 2 && sig.front() == '(' && sig.back() == ')') sig = sig.substr(1, sig.size() - 2);
  std::string out = r.qualified_name + "(" + sig + ")";
  if (!r.description.empty()) out += ": " + r.description;
  return out;
}

inline std::string system_prompt(std::string_view library) {
  return "You are a teacher who is good at " + std::string(library) +
         ". You are exceptionally skilled at crafting high-quality programming problems and offering "
         "precise solutions.";
}

inline std::string user_prompt(const std::vector<ApiRecord>& apis, const std::optional<std::string>& skeleton) {
  std::string out =
      "Please take inspiration from the following list of application interfaces and their definitions "
      "to create a quality programming problem. Requirement: Use to all APIs in the list. Present your "
      "output in two distinct sections: [Problem Description] and [Solution].\n"
      "API list for inspiration:\n";
  for (const auto& r : apis) out += render_api(r) + "\n";
  if (skeleton) {
    out +=
        "You will be given a Python code skeleton, and you need to follow the structure to complete your "
        "solution. Example Python code skeleton:\n";
    out += *skeleton;
    if (!skeleton->empty() && skeleton->back() != '\n') out.push_back('\n');
  }
  out +=
      "Guidelines for each section: 1. [Problem Description]: This should be **completely "
      "self-contained**, providing all the contextual information one needs to understand and solve the "
      "problem. Assume common programming knowledge, but ensure that any specific context, variables, or "
      "code snippets pertinent to this problem are explicitly included.\n"
      "2. [Solution]: Offer a comprehensive, **correct** solution that accurately addresses the [Problem "
      "Description] you provided.";
  return out;
}

struct PromptText {
  std::string system;
  std::string user;
};

inline PromptText assemble_prompt(const PromptSpec& spec) {
  return {system_prompt(spec.library), user_prompt(spec.apis, spec.skeleton)};
}

struct PromptBatchConfig {
  ApiSetKind kind = ApiSetKind::Basic;
  std::size_t count = 0;
  std::size_t apis_per_prompt = kDefaultApisPerPrompt;
  bool skeletons = true;
  std::size_t max_keywords = kDefaultMaxKeywords;
  std::uint64_t seed = 0;
};

/// Prompt i draws its APIs and skeleton from seeds derived from
/// (seed, kind, i), so batches of different kinds never share a stream.
inline std::vector<Prompt> make_prompts(const ApiCatalog& catalog, const PromptBatchConfig& cfg) {
  std::vector<Prompt> out;
  out.reserve(cfg.count);
  const auto kind = std::string(to_string(cfg.kind));
  for (std::size_t i = 0; i < cfg.count; ++i) {
    PromptSpec spec;
    spec.library = catalog.library();
    spec.kind = cfg.kind;
    spec.seed = derive_seed(cfg.seed, "prompt/" + kind + "/" + std::to_string(i));
    spec.apis = sample_api_set(catalog, cfg.kind, cfg.apis_per_prompt, spec.seed);
    if (cfg.skeletons) {
      const auto sk_seed = derive_seed(spec.seed, "skeleton");
      spec.skeleton = generate(sample_keywords(sk_seed, cfg.max_keywords), sk_seed).standardized;
    }
    auto text = assemble_prompt(spec);
    Prompt p;
    p.id = catalog.library() + "-" + kind + "-" + std::to_string(i);
    p.seed = spec.seed;
    p.library = spec.library;
    p.kind = spec.kind;
    for (const auto& r : spec.apis) p.apis.push_back(r.qualified_name);
    p.skeleton = spec.skeleton;
    p.system = std::move(text.system);
    p.user = std::move(text.user);
    out.push_back(std::move(p));
  }
  return out;
}

/// COMB: a BASIC batch followed by a MIX batch.
template <typename T>
std::vector<T> comb(std::vector<T> basic, const std::vector<T>& mix) {
  basic.insert(basic.end(), mix.begin(), mix.end());
  return basic;
}

/// COMB-BOTH: `per_pool` items drawn at random from each of two pools, first
/// pool's picks first, each in pool order.
template <typename T>
std::vector<T> comb_both(const std::vector<T>& a, const std::vector<T>& b, std::size_t per_pool,
                         std::uint64_t seed) {
  if (a.size() < per_pool || b.size() < per_pool)
    throw Error("comb_both: each pool needs at least " + std::to_string(per_pool) + " items");
  Rng rng(seed);
  std::vector<T> out;
  for (const auto* pool : {&a, &b}) {
    auto idx = rng.sample_without_replacement(pool->size(), per_pool);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) out.push_back((*pool)[i]);
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Prompt& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["seed"] = p.seed;
  j["library"] = p.library;
  j["kind"] = to_string(p.kind);
  j["apis"] = p.apis;
  if (p.skeleton) j["skeleton"] = *p.skeleton;
  j["system"] = p.system;
  j["user"] = p.user;
  return j;
}

inline Prompt prompt_from_json(const nlohmann::json& j) {
  try {
    Prompt p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.id = j.contains("id") ? j["id"].get<std::string>() : std::to_string(p.seed);
    p.library = j.at("library").get<std::string>();
    p.kind = parse_api_set_kind(j.at("kind").get<std::string>());
    p.apis = j.at("apis").get<std::vector<std::string>>();
    if (j.contains("skeleton") && !j["skeleton"].is_null()) p.skeleton = j["skeleton"].get<std::string>();
    p.system = j.at("system").get<std::string>();
    p.user = j.at("user").get<std::string>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("prompt: ") + e.what());
  }
}

inline std::string serialize(const std::vector<Prompt>& prompts) {
  std::string out;
  for (const auto& p : prompts) out += to_json(p).dump() + "\n";
  return out;
}

inline std::vector<Prompt> parse_prompts(std::string_view text) {
  std::vector<Prompt> out;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    try {
      out.push_back(prompt_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("prompts line " + std::to_string(ln) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("prompts line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace codesft
