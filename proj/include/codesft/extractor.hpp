#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "codesft/common.hpp"
#include "codesft/corpus.hpp"
#include "codesft/python/ast.hpp"
#include "codesft/python/parser.hpp"

namespace codesft {

using python::syntax_check;

/// Longest method chain an API call may sit in and still count.
inline constexpr int kMaxChainLength = 3;

/// One call expression. chain_length is the number of call links in the
/// enclosing method chain, so every call of `a.b().c()` reports 2.
struct ApiUsage {
  std::string qualified_name;
  int chain_length = 1;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Local name -> qualified module path, from every import in the module.
using AliasMap = std::map<std::string, std::string, std::less<>>;

inline AliasMap collect_aliases(const python::Node& module) {
  using python::Kind;
  AliasMap aliases;
  python::walk(module, [&](const python::Node& n) {
    if (n.kind == Kind::Import) {
      for (const auto& a : n.children) {
        if (!a->aux.empty()) {
          aliases[a->aux] = a->value;
        } else {
          const auto head = a->value.substr(0, a->value.find('.'));
          aliases[head] = head;
        }
      }
    } else if (n.kind == Kind::ImportFrom && !starts_with(n.value, ".")) {
      for (const auto& a : n.children) {
        if (a->value == "*") continue;
        aliases[a->aux.empty() ? a->value : a->aux] = n.value + "." + a->value;
      }
    }
    return true;
  });
  return aliases;
}

namespace detail {

inline bool is_chain_link(python::Kind k) {
  return k == python::Kind::Call || k == python::Kind::Attribute || k == python::Kind::Subscript;
}

class UsageCollector {
 public:
  explicit UsageCollector(const AliasMap& aliases) : aliases_(aliases) {}

  void visit(const python::Node& n) {
    if (is_chain_link(n.kind)) {
      chain(n);
      return;
    }
    for (const auto& c : n.children) visit(*c);
  }

  std::vector<ApiUsage> take() { return std::move(usages_); }

 private:
  // `top` is the outermost link of a chain. The dotted path is built from
  // the root outwards; call and subscript links do not add segments, so
  // `np.load(f).reshape(2)` yields numpy.load and numpy.load.reshape.
  void chain(const python::Node& top) {
    std::vector<const python::Node*> spine;
    const python::Node* cur = &top;
    while (is_chain_link(cur->kind)) {
      spine.push_back(cur);
      cur = &cur->child(0);
    }
    const auto& root = *cur;
    visit(root);

    int calls = 0;
    for (const auto* link : spine) calls += link->kind == python::Kind::Call;

    std::string path;
    if (root.kind == python::Kind::Name) {
      const auto it = aliases_.find(root.value);
      path = it != aliases_.end() ? it->second : root.value;
    }
    for (auto it = spine.rbegin(); it != spine.rend(); ++it) {
      const auto& link = **it;
      switch (link.kind) {
        case python::Kind::Attribute:
          path = path.empty() ? link.value : path + "." + link.value;
          break;
        case python::Kind::Call:
          if (!path.empty()) usages_.push_back({path, calls, link.begin, link.end});
          for (std::size_t i = 1; i < link.size(); ++i) visit(link.child(i));
          break;
        case python::Kind::Subscript:
          visit(link.child(1));
          break;
        default:
          break;
      }
    }
  }

  const AliasMap& aliases_;
  std::vector<ApiUsage> usages_;
};

}  // namespace detail

/// Every call expression in source order, aliases resolved, unfiltered.
inline std::vector<ApiUsage> find_call_usages(const python::Node& module) {
  const auto aliases = collect_aliases(module);
  detail::UsageCollector collector(aliases);
  collector.visit(module);
  return collector.take();
}

inline std::vector<ApiUsage> find_call_usages(std::string_view code) {
  return find_call_usages(*python::parse(code));
}

/// Names that are never API usages: dunder segments anywhere in the path and
/// the `c.` prefix of C-level internals.
inline bool is_internal_name(std::string_view name) {
  if (name.empty() || starts_with(name, "c.")) return true;
  std::size_t start = 0;
  while (start <= name.size()) {
    if (starts_with(name.substr(start), "__")) return true;
    const auto dot = name.find('.', start);
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return false;
}

inline bool counts_as_api(const ApiUsage& u) {
  return u.chain_length <= kMaxChainLength && !is_internal_name(u.qualified_name);
}

/// Filtered usages in source order (duplicates kept, so callers can count).
inline std::vector<ApiUsage> api_usages(std::string_view code) {
  auto all = find_call_usages(code);
  std::vector<ApiUsage> kept;
  for (auto& u : all)
    if (counts_as_api(u)) kept.push_back(std::move(u));
  return kept;
}

/// Deduplicated qualified API names called in `code`. When `known` is given
/// only names in it are returned. Throws python::SyntaxError when the code
/// does not parse.
inline std::set<std::string> extract_api_usages(std::string_view code,
                                                const std::set<std::string>* known = nullptr) {
  std::set<std::string> out;
  for (auto& u : api_usages(code)) {
    if (known && !known->count(u.qualified_name)) continue;
    out.insert(std::move(u.qualified_name));
  }
  return out;
}

/// Radon-style McCabe complexity of a whole module: 1 plus one per if/elif,
/// conditional expression, loop, except handler, boolean operator,
/// comprehension `for` and comprehension `if`.
inline int cyclomatic_complexity(const python::Node& module) {
  using python::Kind;
  int score = 1;
  python::walk(module, [&](const python::Node& n) {
    switch (n.kind) {
      case Kind::If:
      case Kind::IfExp:
      case Kind::For:
      case Kind::AsyncFor:
      case Kind::While:
      case Kind::ExceptHandler:
        ++score;
        break;
      case Kind::BoolOp:
        score += static_cast<int>(n.size()) - 1;
        break;
      case Kind::Comprehension:
        // target, iter, then one child per `if` clause
        score += 1 + static_cast<int>(n.size()) - 2;
        break;
      default:
        break;
    }
    return true;
  });
  return score;
}

inline int cyclomatic_complexity(std::string_view code) {
  return cyclomatic_complexity(*python::parse(code));
}

// ---- api_stats ----------------------------------------------------------

/// Per-example input of the selection stage.
struct ApiStat {
  std::string id;
  std::vector<std::string> apis;  // sorted, unique
  std::size_t length_tokens = 0;

  bool operator==(const ApiStat&) const = default;
};

/// Fills api_set of every example. Examples whose code fails to parse are
/// reported and left with an empty set.
inline RejectReport extract_corpus(Corpus& corpus) {
  RejectReport rejects;
  for (auto& ex : corpus.examples) {
    try {
      ex.api_set = extract_api_usages(ex.code);
    } catch (const python::SyntaxError& e) {
      ex.api_set.clear();
      rejects.push_back({ex.id, RejectReason::Syntax, e.what()});
    }
  }
  return rejects;
}

inline std::vector<ApiStat> api_stats(const Corpus& corpus) {
  std::vector<ApiStat> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus.examples)
    out.push_back({ex.id, {ex.api_set.begin(), ex.api_set.end()}, ex.length_tokens});
  return out;
}

inline std::string serialize(const std::vector<ApiStat>& stats) {
  std::string out;
  for (const auto& s : stats) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["apis"] = s.apis;
    j["length_tokens"] = s.length_tokens;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<ApiStat> parse_api_stats(std::string_view text) {
  std::vector<ApiStat> out;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ApiStat s;
      s.id = j.at("id").get<std::string>();
      std::set<std::string> apis = j.at("apis").get<std::set<std::string>>();
      s.apis.assign(apis.begin(), apis.end());
      s.length_tokens = j.at("length_tokens").get<std::size_t>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("api_stats line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace codesft
