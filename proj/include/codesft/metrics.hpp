#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codesft/common.hpp"
#include "codesft/corpus.hpp"
#include "codesft/python/ast.hpp"
#include "codesft/python/lexer.hpp"
#include "codesft/python/parser.hpp"

namespace codesft {

// ---- Pass@k ---------------------------------------------------------------

/// rows[i][j]: solution j of problem i passed all its unit tests.
using PassMatrix = std::vector<std::vector<bool>>;

/// Mean over problems of the product of the first k pass indicators, so a
/// problem counts only when all k solutions pass. This is not the unbiased
/// estimator computed from n >= k samples.
inline double pass_at_k(const PassMatrix& m, std::size_t k) {
  if (m.empty()) throw Error("pass_at_k: empty matrix");
  if (k == 0) throw Error("pass_at_k: k must be at least 1");
  std::size_t passed = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() < k) throw Error("pass_at_k: row " + std::to_string(i) + " has fewer than k solutions");
    passed += std::all_of(m[i].begin(), m[i].begin() + static_cast<std::ptrdiff_t>(k), [](bool b) { return b; });
  }
  return static_cast<double>(passed) / static_cast<double>(m.size());
}

// ---- CodeBLEU ---------------------------------------------------------------

struct CodeBleuWeights {
  double alpha = 0.25;
  double beta = 0.25;
  double gamma = 0.25;
  double delta = 0.25;

  void check() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || delta < 0) throw Error("CodeBLEU weights must be nonnegative");
    if (std::abs(alpha + beta + gamma + delta - 1.0) > 1e-12) throw Error("CodeBLEU weights must sum to 1");
  }
};

struct CodeBleuScore {
  double bleu = 0;
  double weighted_bleu = 0;
  double ast = 0;
  double dataflow = 0;
  double total = 0;
};

inline constexpr double kKeywordWeight = 5.0;

namespace detail {

using Gram = std::vector<std::string>;

inline std::map<Gram, std::size_t> ngrams(const std::vector<std::string>& toks, std::size_t n) {
  std::map<Gram, std::size_t> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[Gram(toks.begin() + i, toks.begin() + i + n)];
  return out;
}

// Modified precision for n-grams; unigram counts are weighted by
// `weight(token)`. Returns {matched, total}.
template <typename W>
std::pair<double, double> clipped_precision(const std::vector<std::string>& cand,
                                            const std::vector<std::string>& ref, std::size_t n, W weight) {
  const auto c = ngrams(cand, n), r = ngrams(ref, n);
  double matched = 0, total = 0;
  for (const auto& [g, cnt] : c) {
    const double w = n == 1 ? weight(g[0]) : 1.0;
    const auto it = r.find(g);
    matched += w * static_cast<double>(std::min(cnt, it == r.end() ? 0 : it->second));
    total += w * static_cast<double>(cnt);
  }
  return {matched, total};
}

// Brevity-penalized geometric mean of n = 1..4 precisions. A zero
// precision for n >= 2 is smoothed to (matched + 1) / (total + 1).
template <typename W>
double bleu_score(const std::vector<std::string>& cand, const std::vector<std::string>& ref, W weight) {
  if (cand.empty()) return ref.empty() ? 1.0 : 0.0;
  double log_sum = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto [m, t] = clipped_precision(cand, ref, n, weight);
    double p = t > 0 ? m / t : 0.0;
    if (p == 0) {
      if (n == 1) return 0.0;
      p = (m + 1) / (t + 1);
    }
    log_sum += 0.25 * std::log(p);
  }
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

inline bool keeps_op(python::Kind k) {
  using python::Kind;
  return k == Kind::BinOp || k == Kind::UnaryOp || k == Kind::BoolOp || k == Kind::Compare ||
         k == Kind::AugAssign;
}

// Serializes a subtree with identifiers and literals dropped.
inline std::string shape(const python::Node& n) {
  std::string s(python::kind_name(n.kind));
  if (keeps_op(n.kind)) s += ":" + n.value;
  if (!n.children.empty()) {
    s += "(";
    for (const auto& c : n.children) s += shape(*c) + ",";
    s += ")";
  }
  return s;
}

inline std::vector<std::string> subtrees(const python::Node& root) {
  std::vector<std::string> out;
  python::walk(root, [&](const python::Node& n) {
    if (!n.children.empty()) out.push_back(shape(n));
    return true;
  });
  return out;
}

// Fraction of `cand` found in the `ref` multiset, each reference item used
// at most once. `cand` must be non-empty.
inline double multiset_match(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  std::map<std::string, std::size_t> pool;
  for (const auto& r : ref) ++pool[r];
  std::size_t hit = 0;
  for (const auto& c : cand) {
    auto it = pool.find(c);
    if (it != pool.end() && it->second > 0) {
      --it->second;
      ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(cand.size());
}

// Def-use edges "used->target": `used` was bound earlier in the same scope
// and `target` is a name bound by the statement that reads it ("_" when it
// binds none). Names are renamed v0, v1, ... by first occurrence.
class DataflowEdges {
 public:
  std::vector<std::string> run(const python::Node& module) {
    number(module);
    std::set<std::string> bound;
    block(module, bound);
    return std::move(edges_);
  }

 private:
  using Names = std::vector<const python::Node*>;

  void number(const python::Node& module) {
    std::vector<std::pair<std::size_t, std::string>> seen;
    python::walk(module, [&](const python::Node& n) {
      using python::Kind;
      if (n.kind == Kind::Name || n.kind == Kind::Arg || n.kind == Kind::FunctionDef ||
          n.kind == Kind::AsyncFunctionDef || n.kind == Kind::ClassDef)
        seen.push_back({n.begin, n.value});
      return true;
    });
    std::stable_sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [pos, name] : seen) ids_.try_emplace(name, "v" + std::to_string(ids_.size()));
  }

  const std::string& id(const std::string& name) { return ids_.at(name); }

  static void collect(const python::Node& n, Names& loads, Names& stores) {
    using python::Kind;
    if (n.kind == Kind::Lambda) return;
    if (n.kind == Kind::Name) (n.ctx == python::Ctx::Store ? stores : loads).push_back(&n);
    for (const auto& c : n.children) collect(*c, loads, stores);
  }

  // A simple statement, or the header expressions of a compound one.
  void statement(std::initializer_list<const python::Node*> parts, std::set<std::string>& bound,
                 bool target_is_read = false) {
    Names loads, stores;
    for (const auto* p : parts) collect(*p, loads, stores);
    if (target_is_read) loads.insert(loads.end(), stores.begin(), stores.end());
    std::vector<std::string> targets;
    for (const auto* s : stores) targets.push_back(id(s->value));
    if (targets.empty()) targets.push_back("_");
    for (const auto* u : loads) {
      if (!bound.count(u->value)) continue;
      for (const auto& t : targets) edges_.push_back(id(u->value) + "->" + t);
    }
    for (const auto* s : stores) bound.insert(s->value);
  }

  void block(const python::Node& blk, std::set<std::string>& bound) {
    for (const auto& st : blk.children) stmt(*st, bound);
  }

  void stmt(const python::Node& n, std::set<std::string>& bound) {
    using python::Kind;
    switch (n.kind) {
      case Kind::FunctionDef:
      case Kind::AsyncFunctionDef: {
        std::set<std::string> scope = bound;
        for (const auto& arg : n.child(1).children) scope.insert(arg->value);
        block(n.child(2), scope);
        bound.insert(n.value);
        break;
      }
      case Kind::ClassDef: {
        std::set<std::string> scope = bound;
        block(n.child(2), scope);
        bound.insert(n.value);
        break;
      }
      case Kind::If:
      case Kind::While:
        statement({&n.child(0)}, bound);
        block(n.child(1), bound);
        block(n.child(2), bound);
        break;
      case Kind::For:
      case Kind::AsyncFor:
        statement({&n.child(0), &n.child(1)}, bound);
        block(n.child(2), bound);
        block(n.child(3), bound);
        break;
      case Kind::With:
      case Kind::AsyncWith:
        for (std::size_t i = 0; i + 1 < n.size(); ++i) statement({&n.child(i)}, bound);
        block(*n.children.back(), bound);
        break;
      case Kind::Try:
        for (const auto& part : n.children) {
          if (part->kind == Kind::Block) {
            block(*part, bound);
          } else {
            if (part->size() > 1) statement({&part->child(0)}, bound);
            if (!part->value.empty()) bound.insert(part->value);
            block(*part->children.back(), bound);
          }
        }
        break;
      case Kind::AugAssign:
        statement({&n}, bound, true);
        break;
      default:
        statement({&n}, bound);
        break;
    }
  }

  std::map<std::string, std::string> ids_;
  std::vector<std::string> edges_;
};

}  // namespace detail

/// Keyword-weighted unigram weights: Python keywords 5, other tokens 1.
inline double token_weight(const std::string& tok) {
  return python::is_keyword(tok) ? kKeywordWeight : 1.0;
}

inline double bleu(std::string_view candidate, std::string_view reference) {
  return detail::bleu_score(tokenize(candidate), tokenize(reference), [](const std::string&) { return 1.0; });
}

inline double weighted_bleu(std::string_view candidate, std::string_view reference) {
  return detail::bleu_score(tokenize(candidate), tokenize(reference), token_weight);
}

inline std::vector<std::string> dataflow_edges(const python::Node& module) {
  return detail::DataflowEdges().run(module);
}

inline CodeBleuScore code_bleu_parts(std::string_view candidate, std::string_view reference,
                                     const CodeBleuWeights& w = {}) {
  w.check();
  CodeBleuScore s;
  s.bleu = bleu(candidate, reference);
  s.weighted_bleu = weighted_bleu(candidate, reference);
  python::NodePtr c, r;
  try {
    c = python::parse(candidate);
    r = python::parse(reference);
  } catch (const python::SyntaxError&) {
    c.reset();
  }
  if (c && r) {
    const auto ct = detail::subtrees(*c);
    s.ast = ct.empty() ? 1.0 : detail::multiset_match(ct, detail::subtrees(*r));
    const auto ce = dataflow_edges(*c), re = dataflow_edges(*r);
    if (ce.empty())
      s.dataflow = re.empty() ? 1.0 : 0.0;
    else
      s.dataflow = detail::multiset_match(ce, re);
  }
  s.total = w.alpha * s.bleu + w.beta * s.weighted_bleu + w.gamma * s.ast + w.delta * s.dataflow;
  return s;
}

inline double code_bleu(std::string_view candidate, std::string_view reference, const CodeBleuWeights& w = {}) {
  return code_bleu_parts(candidate, reference, w).total;
}

// ---- clustering indices -------------------------------------------------

struct LabeledPoints {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
};

namespace detail {

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Cluster index per point (0..k-1, in order of first label appearance).
inline std::vector<std::size_t> cluster_index(const LabeledPoints& p, std::size_t& k) {
  if (p.points.size() != p.labels.size()) throw Error("labeled points: point and label counts differ");
  if (!p.points.empty())
    for (const auto& x : p.points)
      if (x.size() != p.points[0].size()) throw Error("labeled points: dimensions differ");
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> out;
  for (auto l : p.labels) out.push_back(ids.try_emplace(l, ids.size()).first->second);
  k = ids.size();
  return out;
}

}  // namespace detail

/// Mean silhouette coefficient (Euclidean). Points in singleton clusters
/// score 0.
inline double silhouette(const LabeledPoints& p) {
  std::size_t k = 0;
  const auto cl = detail::cluster_index(p, k);
  if (k < 2) throw Error("silhouette: needs at least two clusters");
  const auto n = p.points.size();
  std::vector<std::size_t> size(k, 0);
  for (auto c : cl) ++size[c];
  double total = 0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[cl[j]] += detail::distance(p.points[i], p.points[j]);
    if (size[cl[i]] < 2) continue;
    const double a = sums[cl[i]] / static_cast<double>(size[cl[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != cl[i]) b = std::min(b, sums[c] / static_cast<double>(size[c]));
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

/// (SSB / (k - 1)) / (SSW / (n - k)) with centroid-based sums of squares.
/// Infinite when clusters are separated and have no spread.
inline double calinski_harabasz(const LabeledPoints& p) {
  std::size_t k = 0;
  const auto cl = detail::cluster_index(p, k);
  const auto n = p.points.size();
  if (k < 2) throw Error("calinski_harabasz: needs at least two clusters");
  if (n <= k) throw Error("calinski_harabasz: needs more points than clusters");
  const auto dim = p.points[0].size();
  std::vector<double> mean(dim, 0);
  std::vector<std::vector<double>> cent(k, std::vector<double>(dim, 0));
  std::vector<std::size_t> size(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++size[cl[i]];
    for (std::size_t d = 0; d < dim; ++d) {
      mean[d] += p.points[i][d];
      cent[cl[i]][d] += p.points[i][d];
    }
  }
  for (auto& x : mean) x /= static_cast<double>(n);
  for (std::size_t c = 0; c < k; ++c)
    for (auto& x : cent[c]) x /= static_cast<double>(size[c]);
  double ssb = 0, ssw = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double d = detail::distance(cent[c], mean);
    ssb += static_cast<double>(size[c]) * d * d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double d = detail::distance(p.points[i], cent[cl[i]]);
    ssw += d * d;
  }
  if (ssw == 0) return ssb > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  return (ssb / static_cast<double>(k - 1)) / (ssw / static_cast<double>(n - k));
}

}  // namespace codesft
