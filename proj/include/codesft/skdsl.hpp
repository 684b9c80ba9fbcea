#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "codesft/common.hpp"
#include "codesft/python/parser.hpp"

namespace codesft {

inline constexpr std::array<std::string_view, 10> kSkeletonKeywords = {
    "def", "if", "elif", "else", "for", "while", "try", "except", "return", "with"};

inline constexpr std::size_t kDefaultMaxKeywords = 8;
inline constexpr std::size_t kMaxSkeletonDepth = 4;
inline constexpr int kSkeletonRetries = 100;

using KeywordList = std::vector<std::string>;

struct Skeleton {
  KeywordList keywords;
  std::string concrete;
  std::string standardized;
  std::uint64_t seed = 0;

  bool operator==(const Skeleton&) const = default;
};

inline bool is_skeleton_keyword(std::string_view k) {
  return std::find(kSkeletonKeywords.begin(), kSkeletonKeywords.end(), k) != kSkeletonKeywords.end();
}

namespace detail {

// Open-block states while replaying a keyword list with every block nested
// in the previous one.
enum class OpenKind { IfChain, PendingTry, Try, Block };

inline std::optional<std::size_t> find_if_chain(const std::vector<OpenKind>& stack) {
  for (auto i = stack.size(); i-- > 0;) {
    if (stack[i] == OpenKind::IfChain) return i;
    if (stack[i] == OpenKind::PendingTry) return std::nullopt;
  }
  return std::nullopt;
}

// A try still waiting for its first handler takes precedence over one that
// already has a handler.
inline std::optional<std::size_t> find_try(const std::vector<OpenKind>& stack) {
  for (auto i = stack.size(); i-- > 0;)
    if (stack[i] == OpenKind::PendingTry) return i;
  for (auto i = stack.size(); i-- > 0;)
    if (stack[i] == OpenKind::Try) return i;
  return std::nullopt;
}

inline OpenKind opened_kind(std::string_view k) {
  if (k == "if") return OpenKind::IfChain;
  if (k == "try") return OpenKind::PendingTry;
  return OpenKind::Block;
}

// For each keyword, the index of the opener it continues (elif/else/except)
// or returns from (return); -1 otherwise. Throws on an unpaired list.
inline std::vector<std::ptrdiff_t> link_keywords(const KeywordList& kws) {
  std::vector<std::ptrdiff_t> target(kws.size(), -1);
  std::vector<OpenKind> stack;
  std::vector<std::size_t> owner;  // keyword index of each stack entry
  for (std::size_t i = 0; i < kws.size(); ++i) {
    const auto& k = kws[i];
    if (k == "elif" || k == "else" || k == "except") {
      const auto at = k == "except" ? find_try(stack) : find_if_chain(stack);
      if (!at) throw Error("keyword list: '" + k + "' has no matching opener");
      stack.resize(*at + 1);
      owner.resize(*at + 1);
      target[i] = static_cast<std::ptrdiff_t>(owner[*at]);
      if (k == "else") stack[*at] = OpenKind::Block;
      if (k == "except") stack[*at] = OpenKind::Try;
    } else if (k == "return") {
      for (auto j = owner.size(); j-- > 0;)
        if (kws[owner[j]] == "def") {
          target[i] = static_cast<std::ptrdiff_t>(owner[j]);
          break;
        }
      if (target[i] < 0) throw Error("keyword list: 'return' outside def");
    } else {
      stack.push_back(opened_kind(k));
      owner.push_back(i);
    }
  }
  if (std::find(stack.begin(), stack.end(), OpenKind::PendingTry) != stack.end())
    throw Error("keyword list: 'try' without 'except'");
  return target;
}

}  // namespace detail

/// Inserts the openers and handlers a drawn list needs: `if` before an
/// unmatched elif/else, `try` before an unmatched except, `except` after a
/// try left open, and a leading `def` when the list returns.
inline KeywordList repair_keywords(const KeywordList& drawn) {
  using detail::OpenKind;
  KeywordList out;
  std::vector<OpenKind> stack;
  for (const auto& k : drawn) {
    if (!is_skeleton_keyword(k)) throw Error("not a skeleton keyword: " + k);
    if (k == "elif" || k == "else") {
      auto at = detail::find_if_chain(stack);
      if (!at) {
        out.push_back("if");
        stack.push_back(OpenKind::IfChain);
        at = stack.size() - 1;
      }
      stack.resize(*at + 1);
      if (k == "else") stack[*at] = OpenKind::Block;
    } else if (k == "except") {
      auto at = detail::find_try(stack);
      if (!at) {
        out.push_back("try");
        stack.push_back(OpenKind::Try);
        at = stack.size() - 1;
      }
      stack.resize(*at + 1);
      stack[*at] = OpenKind::Try;
    } else if (k != "return") {
      stack.push_back(detail::opened_kind(k));
    }
    out.push_back(k);
  }
  while (true) {
    const auto it = std::find(stack.rbegin(), stack.rend(), OpenKind::PendingTry);
    if (it == stack.rend()) break;
    const auto at = static_cast<std::size_t>(stack.rend() - it) - 1;
    stack.resize(at + 1);
    stack[at] = OpenKind::Try;
    out.push_back("except");
  }
  if (std::find(out.begin(), out.end(), "return") != out.end() && out.front() != "def")
    out.insert(out.begin(), "def");
  return out;
}

/// Seeded keyword list of 1..max_keywords items after repair. Draws whose
/// repaired form exceeds max_keywords are redrawn.
inline KeywordList sample_keywords(std::uint64_t seed, std::size_t max_keywords = kDefaultMaxKeywords) {
  if (max_keywords == 0) throw Error("sample_keywords: max_keywords must be at least 1");
  Rng rng(seed);
  while (true) {
    const auto len = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(max_keywords)));
    KeywordList drawn;
    for (std::size_t i = 0; i < len; ++i)
      drawn.emplace_back(kSkeletonKeywords[rng.below(kSkeletonKeywords.size())]);
    auto repaired = repair_keywords(drawn);
    if (repaired.size() <= max_keywords) return repaired;
  }
}

namespace detail {

class SkeletonEmitter {
 public:
  SkeletonEmitter(const KeywordList& kws, std::uint64_t seed) : kws_(kws), rng_(seed) {}

  // Returns nullopt when the depth cap cannot be honoured with this seed.
  std::optional<std::string> run() {
    const auto target = link_keywords(kws_);
    std::vector<std::ptrdiff_t> last_use(kws_.size(), -1);
    for (std::size_t i = 0; i < kws_.size(); ++i)
      if (target[i] >= 0) last_use[static_cast<std::size_t>(target[i])] = static_cast<std::ptrdiff_t>(i);

    for (std::size_t i = 0; i < kws_.size(); ++i) {
      if (i > 0) inject(static_cast<int>(rng_.below(3)));
      const auto& k = kws_[i];
      auto pinned = [&](const Open& b) { return last_use[b.index] > static_cast<std::ptrdiff_t>(i); };
      if (k == "elif" || k == "else" || k == "except") {
        while (stack_.back().index != static_cast<std::size_t>(target[i])) close();
        fill(stack_.back());
        auto& b = stack_.back();
        header(b.depth, k == "else" ? "else:" : k == "elif" ? "elif " + condition() + ":" : "except E" + pick() + ":");
        b.has_body = false;
      } else if (k == "return") {
        statement("return a" + std::to_string(static_cast<std::size_t>(target[i])));
      } else {
        const bool can_nest = stack_.size() <= kMaxSkeletonDepth;
        const bool can_close = !stack_.empty() && !pinned(stack_.back());
        if (!stack_.empty()) {
          bool nest = !can_close || rng_.coin();
          if (!can_nest) {
            if (!can_close) return std::nullopt;
            nest = false;
          }
          if (!nest) close();
        }
        if (!stack_.empty()) stack_.back().has_body = true;
        const auto depth = stack_.size();
        header(depth, opener(k, i));
        stack_.push_back({i, depth, false});
      }
    }
    while (!stack_.empty()) close();
    return out_;
  }

 private:
  struct Open {
    std::size_t index;
    std::size_t depth;
    bool has_body;
  };

  std::string pick() { return std::to_string(rng_.below(4)); }
  std::string condition() { return "c" + pick(); }

  std::string opener(const std::string& k, std::size_t i) {
    const auto n = std::to_string(i);
    if (k == "def") return "def f" + n + "(a" + n + "):";
    if (k == "if") return "if " + condition() + ":";
    if (k == "while") return "while " + condition() + ":";
    if (k == "for") return "for i" + n + " in r" + pick() + ":";
    if (k == "with") return "with m" + pick() + " as v" + n + ":";
    return "try:";
  }

  void header(std::size_t depth, const std::string& text) {
    out_.append(depth * 4, ' ');
    out_ += text;
    out_.push_back('\n');
  }

  void statement(const std::string& text) {
    const auto depth = stack_.empty() ? 0 : stack_.back().depth + 1;
    if (!stack_.empty()) stack_.back().has_body = true;
    header(depth, text);
  }

  void inject(int count) {
    for (int j = 0; j < count; ++j) {
      statement("x" + std::to_string(assigned_) + " = " + std::to_string(assigned_ + 1));
      ++assigned_;
    }
  }

  void fill(const Open& b) {
    if (!b.has_body) inject(1);
  }

  void close() {
    fill(stack_.back());
    stack_.pop_back();
  }

  const KeywordList& kws_;
  Rng rng_;
  std::vector<Open> stack_;
  std::string out_;
  std::size_t assigned_ = 0;
};

}  // namespace detail

/// Rewrites a concrete skeleton into placeholder form. Idempotent.
inline std::string standardize(std::string_view concrete) {
  std::string out;
  for (const auto raw : split_lines(concrete)) {
    const auto indent = raw.find_first_not_of(' ');
    if (indent == std::string_view::npos) continue;
    const auto line = raw.substr(indent);
    auto head = [&](std::string_view kw) {
      return starts_with(line, kw) && line.size() > kw.size() &&
             (line[kw.size()] == ' ' || line[kw.size()] == ':' || line[kw.size()] == '(');
    };
    std::string text;
    if (line == "else:" || line == "try:" || line == "except:" || line == "return") {
      text = line;
    } else if (head("def")) {
      text = "def <Func>(<Args>):";
    } else if (head("if")) {
      text = "if <If Condition>:";
    } else if (head("elif")) {
      text = "elif <Elif Condition>:";
    } else if (head("while")) {
      text = "while <While Condition>:";
    } else if (head("for")) {
      text = "for <For Condition>:";
    } else if (head("with")) {
      text = "with <With Condition>:";
    } else if (head("except")) {
      text = "except <Except Condition>:";
    } else if (head("return")) {
      text = "return <Return Value>";
    } else {
      text = "<Random Stmt>";
    }
    out.append(indent, ' ');
    out += text;
    out.push_back('\n');
  }
  return out;
}

inline std::string standardize(const Skeleton& s) { return standardize(s.concrete); }

/// Emits a syntactically valid skeleton using exactly the given keywords.
/// Drafts that fail are regenerated from the next derived seed.
inline Skeleton generate(const KeywordList& keywords, std::uint64_t seed) {
  if (keywords.empty()) throw Error("generate: keyword list is empty");
  detail::link_keywords(keywords);
  std::string last;
  for (int attempt = 0; attempt < kSkeletonRetries; ++attempt) {
    const auto draft_seed = attempt == 0 ? seed : derive_seed(seed, "draft" + std::to_string(attempt));
    auto draft = detail::SkeletonEmitter(keywords, draft_seed).run();
    if (!draft) continue;
    if (!python::syntax_check(*draft)) {
      last = std::move(*draft);
      continue;
    }
    Skeleton s{keywords, std::move(*draft), {}, seed};
    s.standardized = standardize(s.concrete);
    return s;
  }
  throw Error("generate: no valid skeleton after " + std::to_string(kSkeletonRetries) +
              " attempts; last draft:\n" + last);
}

/// Skeleton i of a batch uses seed derive_seed(root, "skeleton/i").
inline std::vector<Skeleton> generate_skeletons(std::size_t count, std::uint64_t root,
                                                std::size_t max_keywords = kDefaultMaxKeywords) {
  std::vector<Skeleton> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto seed = derive_seed(root, "skeleton/" + std::to_string(i));
    out.push_back(generate(sample_keywords(seed, max_keywords), seed));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Skeleton& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["keywords"] = s.keywords;
  j["concrete"] = s.concrete;
  j["standardized"] = s.standardized;
  return j;
}

inline Skeleton skeleton_from_json(const nlohmann::json& j) {
  try {
    return {j.at("keywords").get<KeywordList>(), j.at("concrete").get<std::string>(),
            j.at("standardized").get<std::string>(), j.at("seed").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("skeleton: ") + e.what());
  }
}

inline std::string serialize(const std::vector<Skeleton>& skeletons) {
  std::string out;
  for (const auto& s : skeletons) out += to_json(s).dump() + "\n";
  return out;
}

inline std::vector<Skeleton> parse_skeletons(std::string_view text) {
  std::vector<Skeleton> out;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    try {
      out.push_back(skeleton_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("skeletons line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace codesft
