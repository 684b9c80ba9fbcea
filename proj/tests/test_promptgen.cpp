#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "codesft/promptgen.hpp"

using namespace codesft;

namespace {

ApiCatalog make_catalog(std::size_t basic, std::size_t advanced) {
  std::vector<ApiRecord> rs;
  for (std::size_t i = 0; i < basic; ++i)
    rs.push_back({"lib.b" + std::to_string(i), "x", "basic " + std::to_string(i), Tier::Basic});
  for (std::size_t i = 0; i < advanced; ++i)
    rs.push_back({"lib.a" + std::to_string(i), "", "advanced " + std::to_string(i), Tier::Advanced});
  return ApiCatalog("lib", std::move(rs), std::max<std::size_t>(basic, 1));
}

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(SampleApiSet, ExactPoolIsReturnedWhole) {
  const auto cat = make_catalog(5, 3);
  const auto s = sample_api_set(cat, ApiSetKind::Basic, 5, 42);
  std::set<std::string> names;
  for (const auto& r : s) names.insert(r.qualified_name);
  EXPECT_EQ(names.size(), 5u);
  for (const auto& n : names) EXPECT_EQ(n.rfind("lib.b", 0), 0u);
}

TEST(SampleApiSet, SeededAndDistinct) {
  const auto cat = make_catalog(20, 30);
  const auto a = sample_api_set(cat, ApiSetKind::Mix, 5, 9), b = sample_api_set(cat, ApiSetKind::Mix, 5, 9);
  EXPECT_EQ(a, b);
  std::set<std::string> names;
  for (const auto& r : a) names.insert(r.qualified_name);
  EXPECT_EQ(names.size(), 5u);
}

TEST(SampleApiSet, PoolTooSmall) {
  EXPECT_THROW(sample_api_set(make_catalog(4, 10), ApiSetKind::Basic, 5, 1), Error);
  EXPECT_THROW(sample_api_set(make_catalog(1, 2), ApiSetKind::Mix, 5, 1), Error);
}

TEST(SampleApiSet, MixInclusionIsUniform) {
  // 10k draws of 5 from 200: each API is included with p = 5/200; the count
  // is binomial-like with sd sqrt(n p (1 - p)) (slightly smaller under the
  // hypergeometric per draw, so 3 sd is conservative).
  const auto cat = make_catalog(40, 160);
  std::map<std::string, int> hits;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d)
    for (const auto& r : sample_api_set(cat, ApiSetKind::Mix, 5, derive_seed(3, std::to_string(d))))
      ++hits[r.qualified_name];
  const double p = 5.0 / 200.0, mean = draws * p, sd = std::sqrt(draws * p * (1 - p));
  EXPECT_EQ(hits.size(), 200u);
  int outside = 0;
  for (const auto& [name, n] : hits) outside += std::abs(n - mean) > 3 * sd;
  // 200 APIs at 3 sd: about 0.5 expected outside by chance
  EXPECT_LE(outside, 3);
}

TEST(AssemblePrompt, SkeletonSentenceOnlyWithSkeleton) {
  const auto cat = make_catalog(6, 0);
  PromptSpec spec{"numpy", ApiSetKind::Basic, sample_api_set(cat, ApiSetKind::Basic, 5, 1), std::nullopt, 1};
  const auto plain = assemble_prompt(spec);
  EXPECT_EQ(plain.user.find("You will be given a Python code skeleton"), std::string::npos);
  EXPECT_EQ(plain.system.find("You are a teacher who is good at numpy."), 0u);

  spec.skeleton = "if <If Condition>:\n    <Random Stmt>\n";
  const auto with = assemble_prompt(spec);
  const auto at = with.user.find("Example Python code skeleton:\n");
  ASSERT_NE(at, std::string::npos);
  EXPECT_EQ(with.user.substr(at + 30, spec.skeleton->size()), *spec.skeleton);
  EXPECT_NE(with.user.find("You will be given a Python code skeleton"), std::string::npos);
}

TEST(AssemblePrompt, SectionMarkersAndApiList) {
  const auto cat = make_catalog(8, 0);
  PromptSpec spec{"lib", ApiSetKind::Basic, sample_api_set(cat, ApiSetKind::Basic, 5, 4), std::nullopt, 4};
  const auto p = assemble_prompt(spec);
  EXPECT_NE(p.user.find("[Problem Description]"), std::string::npos);
  EXPECT_NE(p.user.find("[Solution]"), std::string::npos);
  for (const auto& r : spec.apis) {
    EXPECT_EQ(occurrences(p.user, "\n" + r.qualified_name + "("), 1u) << r.qualified_name;
    EXPECT_NE(p.user.find(render_api(r)), std::string::npos);
  }
  EXPECT_EQ(assemble_prompt(spec).user, p.user);
}

TEST(RenderApi, NameSignatureDescription) {
  EXPECT_EQ(render_api({"numpy.sum", "a, axis=None", "Sum.", Tier::Basic}), "numpy.sum(a, axis=None): Sum.");
  EXPECT_EQ(render_api({"numpy.pi", "(x)", "", Tier::Basic}), "numpy.pi(x)");
}

TEST(MakePrompts, BasicBatchCoversBasicPool) {
  const auto cat = make_catalog(50, 100);
  PromptBatchConfig cfg;
  cfg.count = 2000;
  cfg.seed = 12;
  cfg.skeletons = false;
  std::set<std::string> seen;
  for (const auto& p : make_prompts(cat, cfg)) {
    EXPECT_EQ(p.apis.size(), 5u);
    for (const auto& a : p.apis) {
      EXPECT_EQ(cat.find(a)->tier, Tier::Basic);
      seen.insert(a);
    }
  }
  EXPECT_EQ(seen.size(), 50u);
}

TEST(MakePrompts, IdsSeedsAndRoundTrip) {
  const auto cat = make_catalog(10, 10);
  PromptBatchConfig cfg;
  cfg.kind = ApiSetKind::Mix;
  cfg.count = 4;
  cfg.seed = 3;
  const auto ps = make_prompts(cat, cfg);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(ps[i].id, "lib-MIX-" + std::to_string(i));
    ASSERT_TRUE(ps[i].skeleton);
    EXPECT_NE(ps[i].user.find(*ps[i].skeleton), std::string::npos);
    seeds.insert(ps[i].seed);
  }
  EXPECT_EQ(seeds.size(), ps.size());
  EXPECT_EQ(parse_prompts(serialize(ps)), ps);
  EXPECT_EQ(serialize(make_prompts(cat, cfg)), serialize(ps));
}

TEST(Comb, ConcatenatesBasicThenMix) {
  EXPECT_EQ(comb(std::vector<int>{1, 2}, std::vector<int>{3}), (std::vector<int>{1, 2, 3}));
}

TEST(CombBoth, DrawsEquallyFromEachPool) {
  std::vector<int> a(4000), b(4000);
  for (int i = 0; i < 4000; ++i) {
    a[i] = i;
    b[i] = 10000 + i;
  }
  const auto out = comb_both(a, b, 2000, 5);
  ASSERT_EQ(out.size(), 4000u);
  int from_a = 0;
  for (auto v : out) from_a += v < 10000;
  EXPECT_EQ(from_a, 2000);
  EXPECT_EQ(std::set<int>(out.begin(), out.end()).size(), 4000u);
  EXPECT_EQ(comb_both(a, b, 2000, 5), out);
  EXPECT_THROW(comb_both(a, std::vector<int>(10), 11, 1), Error);
}
