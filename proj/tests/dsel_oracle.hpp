#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "codesft/dsel.hpp"

// Reference implementations the selection module is checked against. They
// share nothing with the library beyond the ApiStat type and plan_buckets,
// which defines the feasible region.
namespace oracle {

inline double kl2(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) d += p[i] * std::log2(p[i] / q[i]);
  return d;
}

inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * kl2(p, m) + 0.5 * kl2(q, m);
}

// P = (1, 0), Q = (1/2, 1/2), M = (3/4, 1/4):
// KL(P||M) = log2(4/3); KL(Q||M) = 1/2 log2(2/3) + 1/2 log2(2).
inline double jsd_two_bin_closed_form() {
  const double kl_p = std::log2(4.0 / 3.0);
  const double kl_q = 0.5 * std::log2(2.0 / 3.0) + 0.5 * std::log2(2.0);
  return 0.5 * kl_p + 0.5 * kl_q;
}

inline std::size_t union_size(const std::vector<codesft::ApiStat>& stats, unsigned mask) {
  std::set<std::string> u;
  for (std::size_t i = 0; i < stats.size(); ++i)
    if (mask & (1u << i)) u.insert(stats[i].apis.begin(), stats[i].apis.end());
  return u.size();
}

/// Largest number of covered APIs over subsets taking at most quota[b]
/// cases from bucket b.
inline std::size_t best_covered(const std::vector<codesft::ApiStat>& stats, const std::vector<std::size_t>& bucket_of,
                                const std::vector<std::size_t>& quota) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << stats.size()); ++mask) {
    std::vector<std::size_t> used(quota.size(), 0);
    bool ok = true;
    for (std::size_t i = 0; i < stats.size() && ok; ++i)
      if (mask & (1u << i)) ok = ++used[bucket_of[i]] <= quota[bucket_of[i]];
    if (ok) best = std::max(best, union_size(stats, mask));
  }
  return best;
}

inline double best_coverage(const std::vector<codesft::ApiStat>& stats, const std::vector<std::size_t>& bucket_of,
                            const std::vector<std::size_t>& quota) {
  const auto all = union_size(stats, (1u << stats.size()) - 1);
  return all == 0 ? 1.0 : static_cast<double>(best_covered(stats, bucket_of, quota)) / static_cast<double>(all);
}

struct BoundReport {
  std::size_t single_cases = 0, multi_cases = 0;
  std::size_t single_violations = 0, multi_violations = 0;
  double worst_single = 1, worst_multi = 1;  // greedy / OPT
};

/// Random instances with |D| <= 12, n <= 4, |API| <= 8 and 1 to 3 buckets.
inline BoundReport greedy_bound_sweep(std::size_t instances, unsigned seed) {
  std::mt19937 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  BoundReport rep;
  for (std::size_t t = 0; t < instances; ++t) {
    const int n_cases = pick(2, 12), n_apis = pick(1, 8);
    std::vector<codesft::ApiStat> stats;
    for (int i = 0; i < n_cases; ++i) {
      std::set<std::string> apis;
      for (int k = pick(0, 4); k > 0; --k) apis.insert("api" + std::to_string(pick(0, n_apis - 1)));
      stats.push_back({std::to_string(i), {apis.begin(), apis.end()}, static_cast<std::size_t>(pick(1, 60))});
    }
    codesft::SelectionConfig cfg;
    cfg.budget = codesft::Budget::count(static_cast<std::size_t>(pick(1, std::min(4, n_cases))));
    cfg.buckets = static_cast<std::size_t>(pick(1, 3));

    std::vector<std::size_t> lengths;
    for (const auto& s : stats) lengths.push_back(s.length_tokens);
    const auto plan = codesft::plan_buckets(lengths, static_cast<std::size_t>(cfg.budget.value), cfg.buckets);
    std::size_t active = 0;
    for (auto q : plan.quota) active += q > 0;

    const auto greedy = codesft::select_top_api(stats, cfg);
    std::set<std::string> covered;
    for (auto i : greedy.indices) covered.insert(stats[i].apis.begin(), stats[i].apis.end());
    const auto opt = best_covered(stats, plan.bucket_of, plan.quota);
    const double ratio = opt == 0 ? 1.0 : static_cast<double>(covered.size()) / static_cast<double>(opt);
    if (active <= 1) {
      ++rep.single_cases;
      rep.worst_single = std::min(rep.worst_single, ratio);
      if (ratio < 1.0 - 1.0 / std::exp(1.0) - 1e-12) ++rep.single_violations;
    } else {
      ++rep.multi_cases;
      rep.worst_multi = std::min(rep.worst_multi, ratio);
      if (ratio < 0.5 - 1e-12) ++rep.multi_violations;
    }
  }
  return rep;
}

}  // namespace oracle
