#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "codesft/apimodel.hpp"

using namespace codesft;

namespace {

Corpus tutorials(const std::vector<std::string>& codes) {
  Corpus c;
  for (std::size_t i = 0; i < codes.size(); ++i) c.examples.push_back(make_example(std::to_string(i), "", codes[i]));
  return c;
}

std::set<std::string> names_of(const std::vector<ApiRecord>& rs) {
  std::set<std::string> out;
  for (const auto& r : rs) out.insert(r.qualified_name);
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("codesft_apimodel_" + name);
}

}  // namespace

TEST(BuildCatalog, TiersAndFilters) {
  const auto docs = parse_docs(R"({"name": "numpy.sum", "signature": "a, axis=None", "description": "Sum."}
{"name": "numpy.__array__", "signature": "", "description": "Internal."}
{"name": "numpy.linalg.eig", "signature": "a", "description": "Eigen."}
)");
  const auto cat = build_catalog("numpy", docs, tutorials({"import numpy as np\nnp.sum(x)\n"}));
  EXPECT_EQ(names_of(cat.tier(Tier::Basic)), (std::set<std::string>{"numpy.sum"}));
  EXPECT_EQ(names_of(cat.tier(Tier::Advanced)), (std::set<std::string>{"numpy.linalg.eig"}));
  EXPECT_EQ(cat.find("numpy.__array__"), nullptr);
  EXPECT_EQ(cat.find("numpy.sum")->signature, "a, axis=None");
}

TEST(BuildCatalog, CapsBasicTierByTutorialFrequency) {
  std::vector<DocEntry> docs;
  std::string code = "import lib\n";
  for (int i = 0; i < 60; ++i) {
    const auto name = "lib.f" + std::to_string(i);
    docs.push_back({name, "", "", std::nullopt});
    for (int k = 0; k <= i % 7; ++k) code += name + "(x)\n";
  }
  const auto cat = build_catalog("lib", docs, tutorials({code}));
  const auto basic = cat.tier(Tier::Basic);
  ASSERT_EQ(basic.size(), 50u);
  EXPECT_EQ(cat.tier(Tier::Advanced).size(), 10u);
  // rank order: frequency 7 first (i % 7 == 6), ties by name; the nine
  // frequency-1 names and the last frequency-2 name by name fall out
  EXPECT_EQ(basic.front().qualified_name, "lib.f13");
  for (const auto& r : cat.tier(Tier::Advanced)) {
    const int i = std::stoi(r.qualified_name.substr(5));
    EXPECT_TRUE(i % 7 == 0 || r.qualified_name == "lib.f8") << r.qualified_name;
  }
}

TEST(BuildCatalog, KeepsOnlyBaseClassPath) {
  const auto docs = parse_docs(R"({"name": "lib.Base.fit", "signature": "X", "description": "Fit."}
{"name": "lib.Child.fit", "signature": "X", "description": "Fit.", "base_of": "lib.Base.fit"}
)");
  const auto cat = build_catalog("lib", docs, tutorials({"import lib\nlib.Base.fit(X)\n"}));
  EXPECT_EQ(cat.names(), (std::set<std::string>{"lib.Base.fit"}));
}

TEST(BuildCatalog, DropsInternalAndDeepNames) {
  EXPECT_TRUE(excluded_api_name("c.api"));
  EXPECT_TRUE(excluded_api_name("numpy.__config__.show"));
  EXPECT_TRUE(excluded_api_name("a.b.c.d.e"));
  EXPECT_TRUE(excluded_api_name("a..b"));
  EXPECT_TRUE(excluded_api_name("a.b.c.d"));
  EXPECT_FALSE(excluded_api_name("a.b.x.d"));
  EXPECT_FALSE(excluded_api_name("numpy.char.upper"));
}

TEST(BuildCatalog, Errors) {
  EXPECT_THROW(build_catalog("lib", {}, tutorials({"x = 1"})), Error);
  const std::vector<DocEntry> docs{{"lib.f", "", "", std::nullopt}};
  EXPECT_THROW(build_catalog("lib", docs, tutorials({"other(1)"})), Error);
  EXPECT_THROW(parse_docs("{\"name\": \"a\"}\nnot json\n"), FormatError);
}

TEST(BuildCatalog, OrderIndependent) {
  std::vector<DocEntry> docs;
  for (int i = 0; i < 20; ++i) docs.push_back({"m.g" + std::to_string(i), "s", "d", std::nullopt});
  docs.push_back({"m.Sub.g0", "s", "d", std::string("m.g0")});
  const auto tut = tutorials({"import m\nm.g1(x)\nm.g2(x)\nm.g2(y)\n", "from m import g5\ng5()\n"});
  const auto ref = build_catalog("m", docs, tut, 2);
  std::mt19937 rng(3);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(docs.begin(), docs.end(), rng);
    EXPECT_EQ(build_catalog("m", docs, tut, 2), ref);
  }
  EXPECT_EQ(names_of(ref.tier(Tier::Basic)), (std::set<std::string>{"m.g2", "m.g1"}));
}

TEST(BuildCatalog, TiersPartitionTheRecords) {
  std::vector<DocEntry> docs;
  for (int i = 0; i < 8; ++i) docs.push_back({"k.h" + std::to_string(i), "", "", std::nullopt});
  const auto cat = build_catalog("k", docs, tutorials({"import k\nk.h1()\nk.h3()\n"}));
  const auto b = names_of(cat.tier(Tier::Basic)), a = names_of(cat.tier(Tier::Advanced));
  std::set<std::string> both;
  std::set_intersection(b.begin(), b.end(), a.begin(), a.end(), std::inserter(both, both.end()));
  EXPECT_TRUE(both.empty());
  EXPECT_EQ(b.size() + a.size(), cat.records().size());
}

TEST(CatalogFile, RoundTrip) {
  const ApiCatalog cat("lib",
                       {{"lib.a", "x", "first", Tier::Basic},
                        {"lib.b", "", "second", Tier::Advanced},
                        {"lib.sub.c", "y, z=1", "third", Tier::Advanced}},
                       50);
  const auto path = temp_file("roundtrip.json");
  save_catalog(cat, path.string());
  EXPECT_EQ(load_catalog(path.string()), cat);
  std::filesystem::remove(path);
}

TEST(CatalogFile, RejectsCapViolationAndEmptyFile) {
  const auto over = temp_file("over.json");
  write_file(over.string(), R"({"library": "lib", "basic_cap": 1, "records": [
    {"qualified_name": "lib.a", "signature": "", "description": "", "tier": "basic"},
    {"qualified_name": "lib.b", "signature": "", "description": "", "tier": "basic"}]})");
  EXPECT_THROW(load_catalog(over.string()), FormatError);
  const auto empty = temp_file("empty.json");
  write_file(empty.string(), "");
  EXPECT_THROW(load_catalog(empty.string()), FormatError);
  std::filesystem::remove(over);
  std::filesystem::remove(empty);
}

TEST(CatalogFile, RejectsDuplicates) {
  EXPECT_THROW(ApiCatalog("lib", {{"lib.a", "", "", Tier::Basic}, {"lib.a", "", "", Tier::Advanced}}, 50),
               FormatError);
}

TEST(CatalogExtraction, RestrictsToCatalogNames) {
  const ApiCatalog cat("numpy", {{"numpy.sum", "", "", Tier::Basic}}, 50);
  EXPECT_EQ(extract_api_usages("import numpy as np\nnp.sum(np.abs(x))\nprint(x)\n", cat),
            (std::set<std::string>{"numpy.sum"}));
}
