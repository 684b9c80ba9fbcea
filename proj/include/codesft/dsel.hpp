#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "codesft/common.hpp"
#include "codesft/corpus.hpp"
#include "codesft/extractor.hpp"

namespace codesft {

inline constexpr std::size_t kDefaultBuckets = 40;

/// Selection budget: an absolute count, or a fraction of the corpus that
/// resolves to floor(fraction * N).
struct Budget {
  double value = 0;
  bool fraction = false;

  static Budget count(std::size_t n) { return {static_cast<double>(n), false}; }
  static Budget of(double f) { return {f, true}; }

  /// Parses "0.05" / "5%" as fractions and "1234" as a count.
  static Budget parse(std::string text) {
    text = std::string(trim(text));
    try {
      if (!text.empty() && text.back() == '%') {
        text.pop_back();
        return of(std::stod(text) / 100.0);
      }
      std::size_t used = 0;
      if (text.find_first_of(".eE") == std::string::npos) {
        const auto n = std::stoull(text, &used);
        if (used == text.size()) return count(n);
      } else {
        const auto f = std::stod(text, &used);
        if (used == text.size()) return of(f);
      }
    } catch (const std::logic_error&) {
    }
    throw Error("invalid budget: " + text);
  }

  std::size_t resolve(std::size_t population) const {
    if (!(value > 0)) throw Error("budget must be positive");
    if (fraction) {
      if (value > 1) throw Error("fractional budget must be at most 1");
      return static_cast<std::size_t>(std::floor(value * static_cast<double>(population) + 1e-9));
    }
    return static_cast<std::size_t>(value);
  }
};

struct SelectionConfig {
  Budget budget = Budget::of(0.05);
  std::size_t buckets = kDefaultBuckets;
  std::optional<double> tau;
  std::uint64_t seed = 0;
};

/// Equal-width length bins over the full corpus and the per-bin quota.
struct BucketPlan {
  std::vector<double> edges;             // buckets + 1, ascending
  std::vector<std::size_t> population;   // cases per bucket
  std::vector<std::size_t> quota;        // sums to the resolved budget
  std::vector<std::size_t> bucket_of;    // per case
};

struct SelectionResult {
  std::vector<std::size_t> indices;  // selection order
  double api_coverage = 0;
  double jsd = 0;
  std::vector<std::size_t> per_iteration_gain;
  std::optional<double> tau;
  std::vector<std::string> warnings;

  bool tau_exceeded() const { return tau && jsd > *tau; }
};

namespace detail {

// Bin index of `v` among `bins` equal-width bins over [lo, hi]; values at
// hi land in the last bin and out-of-range values are clamped.
inline std::size_t bin_of(double v, double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return 0;
  const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (pos <= 0) return 0;
  const auto b = static_cast<std::size_t>(pos);
  return std::min(b, bins - 1);
}

// Largest-remainder apportionment of n over weights; ties favour the lower
// index. weights must not all be zero when n > 0.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<std::size_t>& weights) {
  std::vector<std::size_t> q(weights.size(), 0);
  std::size_t total = 0;
  for (auto w : weights) total += w;
  if (n == 0 || total == 0) return q;
  std::vector<std::pair<std::uint64_t, std::size_t>> rem;
  std::size_t given = 0;
  for (std::size_t b = 0; b < weights.size(); ++b) {
    const auto num = static_cast<std::uint64_t>(n) * weights[b];
    q[b] = static_cast<std::size_t>(num / total);
    given += q[b];
    rem.push_back({num % total, b});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; given < n; ++i, ++given) ++q[rem[i].second];
  return q;
}

}  // namespace detail

/// Quotas for selecting `n` cases from cases of the given lengths.
inline BucketPlan plan_buckets(const std::vector<std::size_t>& lengths, std::size_t n, std::size_t buckets) {
  if (lengths.empty()) throw Error("plan_buckets: corpus is empty");
  if (buckets == 0) throw Error("plan_buckets: buckets must be at least 1");
  n = std::min(n, lengths.size());
  const auto [mn, mx] = std::minmax_element(lengths.begin(), lengths.end());
  const double lo = static_cast<double>(*mn), hi = static_cast<double>(*mx);

  BucketPlan plan;
  for (std::size_t b = 0; b <= buckets; ++b)
    plan.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(buckets));
  plan.population.assign(buckets, 0);
  plan.bucket_of.reserve(lengths.size());
  for (auto len : lengths) {
    const auto b = detail::bin_of(static_cast<double>(len), lo, hi, buckets);
    plan.bucket_of.push_back(b);
    ++plan.population[b];
  }

  // Buckets whose share exceeds their population are filled and removed; the
  // rest of the budget is apportioned again over the remaining buckets.
  plan.quota.assign(buckets, 0);
  std::vector<bool> capped(buckets, false);
  std::size_t left = n;
  while (true) {
    std::vector<std::size_t> weights(buckets, 0);
    for (std::size_t b = 0; b < buckets; ++b)
      if (!capped[b]) weights[b] = plan.population[b];
    const auto q = detail::apportion(left, weights);
    bool overflow = false;
    for (std::size_t b = 0; b < buckets; ++b) {
      if (!capped[b] && q[b] > plan.population[b]) {
        capped[b] = true;
        plan.quota[b] = plan.population[b];
        left -= plan.population[b];
        overflow = true;
      }
    }
    if (!overflow) {
      for (std::size_t b = 0; b < buckets; ++b)
        if (!capped[b]) plan.quota[b] = q[b];
      break;
    }
  }
  return plan;
}

/// JSD (base 2) between two normalized histograms of equal size.
inline double js_divergence_hist(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw Error("js_divergence: histogram sizes differ");
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) d += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) d += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::clamp(d, 0.0, 1.0);
}

/// Jensen-Shannon divergence (base 2) between the length histograms of a
/// subset and the full corpus, using equal-width bins over the full range.
inline double js_divergence(const std::vector<double>& subset, const std::vector<double>& full,
                            std::size_t bins) {
  if (subset.empty() || full.empty()) throw Error("js_divergence: empty length list");
  if (bins == 0) throw Error("js_divergence: bins must be at least 1");
  const auto [mn, mx] = std::minmax_element(full.begin(), full.end());
  std::vector<double> p(bins, 0), q(bins, 0);
  for (auto v : subset) p[detail::bin_of(v, *mn, *mx, bins)] += 1;
  for (auto v : full) q[detail::bin_of(v, *mn, *mx, bins)] += 1;
  for (auto& x : p) x /= static_cast<double>(subset.size());
  for (auto& x : q) x /= static_cast<double>(full.size());
  return js_divergence_hist(p, q);
}

namespace detail {

struct Interned {
  std::vector<std::vector<std::uint32_t>> sets;
  std::size_t universe = 0;
};

inline Interned intern(const std::vector<ApiStat>& stats) {
  Interned out;
  std::unordered_map<std::string, std::uint32_t> ids;
  out.sets.reserve(stats.size());
  for (const auto& s : stats) {
    std::vector<std::uint32_t> set;
    for (const auto& a : s.apis) {
      const auto [it, fresh] = ids.try_emplace(a, static_cast<std::uint32_t>(ids.size()));
      set.push_back(it->second);
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    out.sets.push_back(std::move(set));
  }
  out.universe = ids.size();
  return out;
}

inline std::vector<double> lengths_of(const std::vector<ApiStat>& stats) {
  std::vector<double> out;
  out.reserve(stats.size());
  for (const auto& s : stats) out.push_back(static_cast<double>(s.length_tokens));
  return out;
}

inline void finish(SelectionResult& r, const std::vector<ApiStat>& stats, const Interned& in,
                   const SelectionConfig& cfg) {
  std::vector<bool> covered(in.universe, false);
  std::size_t total = 0;
  r.per_iteration_gain.clear();
  for (auto i : r.indices) {
    std::size_t gain = 0;
    for (auto a : in.sets[i])
      if (!covered[a]) {
        covered[a] = true;
        ++gain;
      }
    total += gain;
    r.per_iteration_gain.push_back(gain);
  }
  r.api_coverage = in.universe == 0 ? 1.0 : static_cast<double>(total) / static_cast<double>(in.universe);
  const auto full = lengths_of(stats);
  std::vector<double> sub;
  for (auto i : r.indices) sub.push_back(full[i]);
  r.jsd = sub.empty() ? 1.0 : js_divergence(sub, full, cfg.buckets);
  r.tau = cfg.tau;
}

inline std::size_t resolve_budget(const std::vector<ApiStat>& stats, const SelectionConfig& cfg,
                                  std::vector<std::string>& warnings) {
  if (stats.empty()) throw Error("selection: corpus is empty");
  if (cfg.buckets == 0) throw Error("selection: buckets must be at least 1");
  auto n = cfg.budget.resolve(stats.size());
  if (n == 0) throw Error("selection: budget resolves to zero cases");
  if (n > stats.size()) {
    warnings.push_back("budget " + std::to_string(n) + " exceeds corpus size " +
                       std::to_string(stats.size()) + "; selecting all cases");
    n = stats.size();
  }
  return n;
}

}  // namespace detail

/// Greedy coverage selection under per-bucket length quotas. Each round
/// visits buckets by descending remaining quota (ties to the lower index) and
/// takes, from the first bucket that still has a candidate, the case adding
/// the most uncovered APIs (ties to the lower corpus index).
inline SelectionResult select_top_api(const std::vector<ApiStat>& stats, const SelectionConfig& cfg) {
  SelectionResult res;
  const auto n = detail::resolve_budget(stats, cfg, res.warnings);
  std::vector<std::size_t> lengths;
  for (const auto& s : stats) lengths.push_back(s.length_tokens);
  const auto plan = plan_buckets(lengths, n, cfg.buckets);
  const auto in = detail::intern(stats);

  // Lazy greedy: coverage gains only shrink, so a stale heap entry is an
  // upper bound and a refreshed top that still wins is the true argmax.
  using Entry = std::pair<std::size_t, std::size_t>;  // (gain, index)
  auto worse = [](const Entry& a, const Entry& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  };
  using Heap = std::priority_queue<Entry, std::vector<Entry>, decltype(worse)>;
  std::vector<Heap> heaps(cfg.buckets, Heap(worse));
  for (std::size_t i = 0; i < stats.size(); ++i) heaps[plan.bucket_of[i]].push({in.sets[i].size(), i});

  std::vector<bool> covered(in.universe, false);
  auto gain_of = [&](std::size_t i) {
    std::size_t g = 0;
    for (auto a : in.sets[i]) g += !covered[a];
    return g;
  };

  auto quota = plan.quota;
  std::vector<std::size_t> order(cfg.buckets);
  for (std::size_t round = 0; round < n; ++round) {
    for (std::size_t b = 0; b < order.size(); ++b) order[b] = b;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return quota[a] > quota[b]; });
    std::optional<std::size_t> best;
    for (auto b : order) {
      if (quota[b] == 0) break;
      auto& heap = heaps[b];
      while (!heap.empty()) {
        auto top = heap.top();
        heap.pop();
        top.first = gain_of(top.second);
        if (heap.empty() || !worse(top, heap.top())) {
          best = top.second;
          break;
        }
        heap.push(top);
      }
      if (best) {
        --quota[b];
        break;
      }
    }
    if (!best) break;
    for (auto a : in.sets[*best]) covered[a] = true;
    res.indices.push_back(*best);
  }
  detail::finish(res, stats, in, cfg);
  return res;
}

/// Uniform random subset of the same size, indices in ascending order.
inline SelectionResult select_random(const std::vector<ApiStat>& stats, const SelectionConfig& cfg) {
  SelectionResult res;
  const auto n = detail::resolve_budget(stats, cfg, res.warnings);
  Rng rng(cfg.seed);
  res.indices = rng.sample_without_replacement(stats.size(), n);
  std::sort(res.indices.begin(), res.indices.end());
  detail::finish(res, stats, detail::intern(stats), cfg);
  return res;
}

inline SelectionResult select_top_api(const Corpus& c, const SelectionConfig& cfg) {
  return select_top_api(api_stats(c), cfg);
}

inline SelectionResult select_random(const Corpus& c, const SelectionConfig& cfg) {
  return select_random(api_stats(c), cfg);
}

inline nlohmann::ordered_json to_json(const SelectionResult& r) {
  nlohmann::ordered_json j;
  j["indices"] = r.indices;
  j["api_coverage"] = r.api_coverage;
  j["jsd"] = r.jsd;
  j["per_iteration_gain"] = r.per_iteration_gain;
  if (r.tau) {
    j["tau"] = *r.tau;
    j["tau_exceeded"] = r.tau_exceeded();
  }
  return j;
}

inline SelectionResult selection_from_json(const nlohmann::json& j) {
  try {
    SelectionResult r;
    r.indices = j.at("indices").get<std::vector<std::size_t>>();
    r.api_coverage = j.at("api_coverage").get<double>();
    r.jsd = j.at("jsd").get<double>();
    r.per_iteration_gain = j.at("per_iteration_gain").get<std::vector<std::size_t>>();
    if (j.contains("tau")) r.tau = j["tau"].get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("selection: ") + e.what());
  }
}

}  // namespace codesft
