#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "codesft/genclient.hpp"

using namespace codesft;

namespace {

std::vector<Prompt> prompts(std::size_t n) {
  std::vector<Prompt> out;
  for (std::size_t i = 0; i < n; ++i) {
    Prompt p;
    p.id = "p" + std::to_string(i);
    p.seed = i;
    p.system = "You are a teacher who is good at numpy.";
    p.user = "API list for inspiration:\nnumpy.sum(a): Sum.\nnumpy.mean(a): Mean.\n\nvariant " + std::to_string(i);
    out.push_back(std::move(p));
  }
  return out;
}

GenConfig fast(const StubServer& s) {
  GenConfig c;
  c.endpoint = s.url();
  c.backoff_ms = {1};
  c.timeout_s = 10;
  return c;
}

const std::string kCanned =
    "[Problem Description]\nSum the array.\n\n[Solution]\n```python\nimport numpy as np\nnp.sum(x)\n```\n";

}  // namespace

TEST(ExtractSections, HeadersAndFences) {
  const auto s = extract_sections(kCanned);
  EXPECT_TRUE(s.has_problem);
  EXPECT_TRUE(s.has_solution);
  EXPECT_EQ(s.problem, "Sum the array.");
  EXPECT_EQ(s.code, "import numpy as np\nnp.sum(x)\n");

  const auto bare = extract_sections("[problem description] P\n[SOLUTION]\nx = 1\n");
  EXPECT_EQ(bare.code, "x = 1");

  const auto none = extract_sections("[Problem Description]\nOnly a problem.");
  EXPECT_FALSE(none.has_solution);
  EXPECT_TRUE(none.code.empty());
}

TEST(ParseEndpoint, SplitsBaseAndPath) {
  const auto e = parse_endpoint("http://127.0.0.1:8000/v1/chat/completions");
  EXPECT_EQ(e.base, "http://127.0.0.1:8000");
  EXPECT_EQ(e.path, "/v1/chat/completions");
}

TEST(GenerateBatch, CannedReply) {
  StubServer server({{{200, kCanned, std::nullopt}}, 0, 0});
  const auto out = generate_batch(prompts(1), fast(server));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].status, GenStatus::Ok);
  EXPECT_EQ(out[0].problem, "Sum the array.");
  EXPECT_EQ(out[0].solution_code, "import numpy as np\nnp.sum(x)\n");
  EXPECT_EQ(out[0].attempts, 1);
}

TEST(GenerateBatch, RetriesServerErrors) {
  StubServer server({{{500, "", std::nullopt}, {500, "", std::nullopt}, {200, kCanned, std::nullopt}}, 0, 0});
  const auto out = generate_batch(prompts(1), fast(server));
  EXPECT_EQ(out[0].status, GenStatus::Ok);
  EXPECT_EQ(out[0].attempts, 3);
  EXPECT_EQ(server.requests().size(), 3u);
}

TEST(GenerateBatch, GivesUpAfterMaxRetries) {
  std::vector<StubReply> script(5, StubReply{503, "", std::nullopt});
  StubServer server({script, 0, 0});
  auto cfg = fast(server);
  cfg.max_retries = 2;
  const auto out = generate_batch(prompts(1), cfg);
  EXPECT_EQ(out[0].status, GenStatus::TransportError);
  EXPECT_EQ(out[0].attempts, 3);
  EXPECT_NE(out[0].error.find("503"), std::string::npos);
}

TEST(GenerateBatch, ClientErrorsAreNotRetried) {
  StubServer server({{{400, "", std::nullopt}}, 0, 0});
  const auto out = generate_batch(prompts(1), fast(server));
  EXPECT_EQ(out[0].status, GenStatus::TransportError);
  EXPECT_EQ(out[0].attempts, 1);
}

TEST(GenerateBatch, MalformedBodyIsTransportError) {
  StubServer server({{{200, "", std::string("{not json")}}, 0, 0});
  auto cfg = fast(server);
  cfg.max_retries = 0;
  const auto out = generate_batch(prompts(1), cfg);
  EXPECT_EQ(out[0].status, GenStatus::TransportError);
  EXPECT_NE(out[0].error.find("malformed"), std::string::npos);
}

TEST(GenerateBatch, MissingSolutionLeavesCodeEmpty) {
  StubServer server({{{200, "[Problem Description]\nNo solution here.", std::nullopt}}, 0, 0});
  const auto out = generate_batch(prompts(1), fast(server));
  EXPECT_EQ(out[0].status, GenStatus::Ok);
  EXPECT_TRUE(out[0].solution_code.empty());
}

TEST(GenerateBatch, EmptyContent) {
  StubServer server({{{200, "", std::nullopt}}, 0, 0});
  EXPECT_EQ(generate_batch(prompts(1), fast(server))[0].status, GenStatus::Empty);
}

TEST(GenerateBatch, SendsSamplingParameters) {
  StubServer server;
  generate_batch(prompts(2), fast(server));
  const auto log = server.requests();
  ASSERT_EQ(log.size(), 2u);
  for (const auto& r : log) {
    EXPECT_DOUBLE_EQ(r.temperature, 0.8);
    EXPECT_DOUBLE_EQ(r.top_p, 1.0);
    EXPECT_EQ(r.max_tokens, 4096u);
    EXPECT_EQ(r.model, "default");
  }
}

TEST(GenerateBatch, BoundedParallelismAndOrder) {
  StubServer server({{}, 20, 0});
  auto cfg = fast(server);
  cfg.parallelism = 4;
  const auto ps = prompts(100);
  const auto out = generate_batch(ps, cfg);
  ASSERT_EQ(out.size(), 100u);
  EXPECT_EQ(server.requests().size(), 100u);
  EXPECT_LE(server.max_in_flight(), 4u);
  EXPECT_GE(server.max_in_flight(), 2u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].prompt_id, ps[i].id);
    EXPECT_EQ(out[i].status, GenStatus::Ok);
  }
}

TEST(GenerateBatch, SynthesizedRepliesAreDeterministic) {
  const auto ps = prompts(12);
  StubServer a, b;
  auto ca = fast(a), cb = fast(b);
  cb.parallelism = 3;
  EXPECT_EQ(serialize(generate_batch(ps, ca)), serialize(generate_batch(ps, cb)));
}

TEST(GenerateBatch, UnreachableEndpoint) {
  int port = 0;
  {
    StubServer s;
    port = s.port();
  }
  GenConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.max_retries = 1;
  cfg.backoff_ms = {1};
  cfg.timeout_s = 2;
  const auto out = generate_batch(prompts(1), cfg);
  EXPECT_EQ(out[0].status, GenStatus::TransportError);
  EXPECT_EQ(out[0].attempts, 2);
}

TEST(GenerateBatch, InvalidConfig) {
  GenConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/x";
  cfg.temperature = 3;
  EXPECT_THROW(generate_batch(prompts(1), cfg), Error);
  cfg.temperature = 0.8;
  cfg.parallelism = 0;
  EXPECT_THROW(generate_batch(prompts(1), cfg), Error);
}

TEST(StubServer, BusyPortThrows) {
  StubServer first;
  EXPECT_THROW(StubServer({{}, 0, first.port()}), Error);
}

TEST(StubScript, ParsesAndRejects) {
  const auto s = parse_stub_script("{\"status\": 500}\n\n{\"content\": \"hi\"}\n{\"raw\": \"x\"}\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].status, 500);
  EXPECT_EQ(s[1].content, "hi");
  EXPECT_EQ(*s[2].raw, "x");
  EXPECT_THROW(parse_stub_script("nope\n"), FormatError);
}

TEST(GenerationJson, RoundTrip) {
  StubServer server;
  const auto out = generate_batch(prompts(3), fast(server));
  EXPECT_EQ(parse_generations(serialize(out)), out);
}
