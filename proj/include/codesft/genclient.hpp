#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "codesft/common.hpp"
#include "codesft/promptgen.hpp"
#include "codesft/python/parser.hpp"

namespace codesft {

/// Environment variable holding the bearer token sent to the endpoint.
inline constexpr const char* kApiKeyEnv = "CODESFT_API_KEY";

struct GenConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8000/v1/chat/completions
  std::string model = "default";
  double temperature = 0.8;
  double top_p = 1.0;
  std::size_t max_tokens = 4096;
  std::size_t parallelism = 8;
  int max_retries = 3;
  std::vector<int> backoff_ms{200, 400, 800};
  int timeout_s = 120;
  std::string api_key;

  void check() const {
    if (!(temperature >= 0 && temperature <= 2)) throw Error("temperature must be in [0, 2]");
    if (!(top_p > 0 && top_p <= 1)) throw Error("top_p must be in (0, 1]");
    if (parallelism == 0) throw Error("parallelism must be at least 1");
    if (max_retries < 0) throw Error("max_retries must be non-negative");
    if (max_tokens == 0) throw Error("max_tokens must be positive");
  }
};

enum class GenStatus { Ok, TransportError, Empty };

inline std::string_view to_string(GenStatus s) {
  switch (s) {
    case GenStatus::Ok: return "ok";
    case GenStatus::TransportError: return "transport_error";
    case GenStatus::Empty: return "empty";
  }
  return "unknown";
}

inline GenStatus parse_gen_status(std::string_view s) {
  if (s == "ok") return GenStatus::Ok;
  if (s == "transport_error") return GenStatus::TransportError;
  if (s == "empty") return GenStatus::Empty;
  throw FormatError("unknown generation status: " + std::string(s));
}

struct GenerationRecord {
  std::string prompt_id;
  std::uint64_t seed = 0;
  std::string raw_response;
  std::string problem;
  std::string solution_code;
  GenStatus status = GenStatus::Empty;
  int attempts = 0;
  std::string error;

  bool operator==(const GenerationRecord&) const = default;
};

struct Sections {
  bool has_problem = false;
  bool has_solution = false;
  std::string problem;
  std::string solution;
  std::string code;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string strip_decoration(std::string_view s) {
  const auto junk = " \t\r\n*#:";
  const auto b = s.find_first_not_of(junk);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n*#");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<std::string> first_fenced_block(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body = text.find('\n', open);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  auto close = text.find("```", body);
  if (close == std::string_view::npos) close = text.size();
  return std::string(text.substr(body, close - body));
}

}  // namespace detail

/// Splits a response into its [Problem Description] and [Solution] sections
/// (headers matched case-insensitively). The code is the first fenced block
/// in the solution, else the whole solution when it parses as Python.
inline Sections extract_sections(std::string_view response) {
  static constexpr std::string_view kProblem = "[problem description]";
  static constexpr std::string_view kSolution = "[solution]";
  Sections s;
  const auto low = detail::lower(response);
  const auto p = low.find(kProblem);
  const auto q = p == std::string::npos ? low.find(kSolution) : low.find(kSolution, p + kProblem.size());
  s.has_problem = p != std::string::npos;
  s.has_solution = q != std::string::npos;
  if (s.has_problem) {
    const auto b = p + kProblem.size();
    const auto e = s.has_solution ? q : response.size();
    s.problem = detail::strip_decoration(response.substr(b, e - b));
  }
  if (s.has_solution) {
    s.solution = detail::strip_decoration(response.substr(q + kSolution.size()));
    if (auto block = detail::first_fenced_block(s.solution)) {
      s.code = std::move(*block);
    } else if (!s.solution.empty() && python::syntax_check(s.solution)) {
      s.code = s.solution;
    }
  }
  return s;
}

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

inline Endpoint parse_endpoint(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) throw Error("endpoint needs a scheme: " + std::string(url));
  const auto slash = url.find('/', scheme + 3);
  Endpoint e;
  e.base = std::string(url.substr(0, slash));
  e.path = slash == std::string_view::npos ? "/v1/chat/completions" : std::string(url.substr(slash));
  if (e.base.size() == scheme + 3) throw Error("endpoint has no host: " + std::string(url));
  return e;
}

inline std::string chat_request_body(const Prompt& p, const GenConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = cfg.model;
  j["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", p.system}}, {{"role", "user"}, {"content", p.user}}});
  j["temperature"] = cfg.temperature;
  j["top_p"] = cfg.top_p;
  j["max_tokens"] = cfg.max_tokens;
  return j.dump();
}

namespace detail {

inline bool retryable(int status) { return status == 429 || status >= 500; }

inline GenerationRecord request_one(httplib::Client& client, const Endpoint& ep, const Prompt& p,
                                    const GenConfig& cfg) {
  GenerationRecord rec;
  rec.prompt_id = p.id;
  rec.seed = p.seed;
  const auto body = chat_request_body(p, cfg);
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
  for (int attempt = 0;; ++attempt) {
    rec.attempts = attempt + 1;
    auto res = client.Post(ep.path, headers, body, "application/json");
    bool retry = false;
    if (!res) {
      rec.error = "transport: " + httplib::to_string(res.error());
      retry = true;
    } else if (res->status != 200) {
      rec.error = "http status " + std::to_string(res->status);
      retry = retryable(res->status);
    } else {
      try {
        const auto j = nlohmann::json::parse(res->body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        rec.raw_response = content.is_null() ? "" : content.get<std::string>();
        rec.error.clear();
        if (rec.raw_response.empty()) {
          rec.status = GenStatus::Empty;
        } else {
          rec.status = GenStatus::Ok;
          auto s = extract_sections(rec.raw_response);
          rec.problem = std::move(s.problem);
          rec.solution_code = std::move(s.code);
        }
        return rec;
      } catch (const nlohmann::json::exception& e) {
        rec.error = std::string("malformed response: ") + e.what();
      }
    }
    if (!retry || attempt >= cfg.max_retries) {
      rec.status = GenStatus::TransportError;
      return rec;
    }
    if (!cfg.backoff_ms.empty()) {
      const auto ms = cfg.backoff_ms[std::min<std::size_t>(attempt, cfg.backoff_ms.size() - 1)];
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
  }
}

}  // namespace detail

/// One record per prompt, in prompt order. At most cfg.parallelism requests
/// are in flight; failures become transport_error records.
inline std::vector<GenerationRecord> generate_batch(const std::vector<Prompt>& prompts, const GenConfig& cfg) {
  cfg.check();
  const auto ep = parse_endpoint(cfg.endpoint);
  std::vector<GenerationRecord> out(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    httplib::Client client(ep.base);
    client.set_connection_timeout(cfg.timeout_s);
    client.set_read_timeout(cfg.timeout_s);
    client.set_write_timeout(cfg.timeout_s);
    for (auto i = next++; i < prompts.size(); i = next++) out[i] = detail::request_one(client, ep, prompts[i], cfg);
  };
  const auto n = std::min(cfg.parallelism, std::max<std::size_t>(prompts.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return out;
}

inline nlohmann::ordered_json to_json(const GenerationRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.prompt_id;
  j["seed"] = r.seed;
  j["status"] = to_string(r.status);
  j["attempts"] = r.attempts;
  j["raw_response"] = r.raw_response;
  j["problem"] = r.problem;
  j["solution_code"] = r.solution_code;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline GenerationRecord generation_from_json(const nlohmann::json& j) {
  try {
    GenerationRecord r;
    r.prompt_id = j.at("id").get<std::string>();
    r.seed = j.value("seed", std::uint64_t{0});
    r.status = parse_gen_status(j.at("status").get<std::string>());
    r.attempts = j.value("attempts", 0);
    r.raw_response = j.value("raw_response", "");
    r.problem = j.value("problem", "");
    r.solution_code = j.value("solution_code", "");
    r.error = j.value("error", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("generation record: ") + e.what());
  }
}

inline std::string serialize(const std::vector<GenerationRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

inline std::vector<GenerationRecord> parse_generations(std::string_view text) {
  std::vector<GenerationRecord> out;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    try {
      out.push_back(generation_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("generations line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

// ---- stub server ----------------------------------------------------------

/// One scripted reply. With `raw` set the body is sent as is; otherwise
/// `content` is wrapped in a chat-completion response.
struct StubReply {
  int status = 200;
  std::string content;
  std::optional<std::string> raw;
};

inline std::vector<StubReply> parse_stub_script(std::string_view text) {
  std::vector<StubReply> out;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StubReply r;
      r.status = j.value("status", 200);
      r.content = j.value("content", "");
      if (j.contains("raw")) r.raw = j["raw"].get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("stub script line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

struct StubRequest {
  std::string model;
  double temperature = 0;
  double top_p = 0;
  std::size_t max_tokens = 0;
  std::string user;
};

/// Deterministic answer to a prompt: a problem statement and a solution that
/// calls the listed APIs. A hash of the prompt decides how many of the APIs
/// (all, or all but one or two) the solution leaves out.
inline std::string synthesize_response(std::string_view user_prompt) {
  std::vector<std::string> apis;
  const auto lines = split_lines(user_prompt);
  bool in_list = false;
  for (const auto line : lines) {
    if (starts_with(line, "API list for inspiration:")) {
      in_list = true;
      continue;
    }
    if (!in_list) continue;
    const auto paren = line.find('(');
    if (paren == std::string_view::npos || paren == 0) break;
    apis.emplace_back(line.substr(0, paren));
  }
  const auto h = fnv1a64(user_prompt);
  const auto dropped = std::min<std::size_t>(h % 3, apis.size() > 0 ? apis.size() - 1 : 0);
  const std::vector<std::string> used(apis.begin(), apis.end() - static_cast<std::ptrdiff_t>(dropped));

  std::vector<std::string> modules;
  for (const auto& a : used) {
    const auto dot = a.find('.');
    if (dot != std::string::npos) modules.push_back(a.substr(0, dot));
  }
  std::sort(modules.begin(), modules.end());
  modules.erase(std::unique(modules.begin(), modules.end()), modules.end());

  std::string out = "[Problem Description]\nWrite a function `solve(data)` that processes the input array `data` by ";
  for (std::size_t i = 0; i < used.size(); ++i) {
    out += i == 0 ? "applying " : i + 1 == used.size() ? " and then " : ", then ";
    out += "`" + used[i] + "`";
  }
  if (used.empty()) out += "returning it unchanged";
  out += ", and returns the list of intermediate results.\n\n[Solution]\n```python\n";
  for (const auto& m : modules) out += "import " + m + "\n";
  out += "\n\ndef solve(data):\n    results = []\n";
  for (std::size_t i = 0; i < used.size(); ++i)
    out += "    r" + std::to_string(i) + " = " + used[i] + "(data)\n    results.append(r" + std::to_string(i) + ")\n";
  out += "    return results\n```\n";
  return out;
}

inline std::string chat_response_body(std::string_view content) {
  nlohmann::ordered_json j;
  j["id"] = "stub";
  j["object"] = "chat.completion";
  j["choices"] = nlohmann::ordered_json::array(
      {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", "stop"}}});
  return j.dump();
}

/// Local chat-completion endpoint. Replies come from the script in arrival
/// order; once the script is used up, replies are synthesized from the
/// prompt. Every request's sampling parameters are logged.
class StubServer {
 public:
  struct Options {
    std::vector<StubReply> script;
    int delay_ms = 0;
    int port = 0;  // 0 picks a free port
  };

  explicit StubServer(Options opts) : opts_(std::move(opts)), script_(opts_.script.begin(), opts_.script.end()) {
    server_.new_task_queue = [] { return new httplib::ThreadPool(kStubThreads); };
    // no SO_REUSEPORT, so a port already in use fails to bind
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    server_.Post(R"(.*)", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    port_ = opts_.port == 0 ? server_.bind_to_any_port("127.0.0.1") : opts_.port;
    if (port_ < 0 || (opts_.port != 0 && !server_.bind_to_port("127.0.0.1", opts_.port)))
      throw Error("stub server: cannot bind port " + std::to_string(opts_.port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  StubServer() : StubServer(Options{}) {}

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

  std::vector<StubRequest> requests() const {
    std::lock_guard lock(mu_);
    return log_;
  }

  std::size_t max_in_flight() const { return max_in_flight_.load(); }

 private:
  static constexpr std::size_t kStubThreads = 32;

  void handle(const httplib::Request& req, httplib::Response& res) {
    const auto now = ++in_flight_;
    auto seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    if (opts_.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(opts_.delay_ms));

    StubRequest logged;
    std::optional<StubReply> scripted;
    try {
      const auto j = nlohmann::json::parse(req.body);
      logged.model = j.value("model", "");
      logged.temperature = j.value("temperature", 0.0);
      logged.top_p = j.value("top_p", 0.0);
      logged.max_tokens = j.value("max_tokens", std::size_t{0});
      for (const auto& m : j.at("messages"))
        if (m.value("role", "") == "user") logged.user = m.value("content", "");
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      --in_flight_;
      return;
    }
    {
      std::lock_guard lock(mu_);
      log_.push_back(logged);
      if (!script_.empty()) {
        scripted = std::move(script_.front());
        script_.pop_front();
      }
    }
    if (scripted) {
      res.status = scripted->status;
      res.set_content(scripted->raw ? *scripted->raw : chat_response_body(scripted->content), "application/json");
    } else {
      res.status = 200;
      res.set_content(chat_response_body(synthesize_response(logged.user)), "application/json");
    }
    --in_flight_;
  }

  Options opts_;
  std::deque<StubReply> script_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  mutable std::mutex mu_;
  std::vector<StubRequest> log_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

/// API key from the environment, empty when unset.
inline std::string api_key_from_env() {
  const char* v = std::getenv(kApiKeyEnv);
  return v ? std::string(v) : std::string();
}

}  // namespace codesft
