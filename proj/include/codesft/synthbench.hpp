#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "codesft/common.hpp"
#include "codesft/corpus.hpp"

namespace codesft {

struct SynthSpec {
  std::size_t n_cases = 5000;
  std::size_t n_apis = 300;
  double zipf_exponent = 1.1;
  double length_mu = 4.8;  // log-normal over token counts
  double length_sigma = 0.6;
  std::size_t max_apis_per_case = 8;
  std::uint64_t seed = 42;

  void check() const {
    if (n_cases == 0 || n_apis == 0) throw Error("synth: n_cases and n_apis must be at least 1");
    if (max_apis_per_case == 0) throw Error("synth: max_apis_per_case must be at least 1");
    if (!(zipf_exponent >= 0) || !(length_sigma >= 0)) throw Error("synth: invalid distribution parameters");
  }
};

inline std::string synth_api_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synthlib.api%04zu", j);
  return buf;
}

/// Program calling each API once, padded with a trailing comment to exactly
/// `length` tokens when that is longer than the bare program.
inline std::string synth_program(std::size_t case_index, const std::vector<std::string>& apis, std::size_t length) {
  std::string code = "import synthlib\n\n\ndef case_" + std::to_string(case_index) + "(x):\n";
  for (const auto& a : apis) code += "    " + a + "(x)\n";
  code += "    return x\n";
  const auto have = token_count(code);
  if (length > have) {
    code += "#";
    for (std::size_t i = 1; i < length - have; ++i) code += " pad";
    code += "\n";
  }
  return code;
}

/// Synthetic corpus with Zipf-distributed API popularity and log-normal
/// code lengths; api_set and length_tokens are filled in.
inline Corpus make_corpus(const SynthSpec& spec) {
  spec.check();
  std::vector<double> cdf(spec.n_apis);
  double acc = 0;
  for (std::size_t j = 0; j < spec.n_apis; ++j) {
    acc += 1.0 / std::pow(static_cast<double>(j + 1), spec.zipf_exponent);
    cdf[j] = acc;
  }
  for (auto& c : cdf) c /= acc;

  Rng rng(spec.seed);
  Corpus corpus;
  corpus.source_name = "synth";
  corpus.examples.reserve(spec.n_cases);
  for (std::size_t i = 0; i < spec.n_cases; ++i) {
    // 1..max draws by popularity; repeated draws collapse, so popular APIs
    // also shrink the set.
    const auto draws = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(spec.max_apis_per_case)));
    std::set<std::size_t> picked;
    std::vector<std::string> apis;
    for (std::size_t d = 0; d < draws; ++d) {
      const auto j = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), rng.uniform()) - cdf.begin());
      const auto idx = std::min(j, spec.n_apis - 1);
      if (picked.insert(idx).second) apis.push_back(synth_api_name(idx));
    }
    const auto length = static_cast<std::size_t>(
        std::llround(std::exp(spec.length_mu + spec.length_sigma * rng.normal())));
    const auto instruction = "Pass the input through " + std::to_string(apis.size()) +
                             (apis.size() == 1 ? " library routine." : " library routines.");
    auto ex = make_example("synth:" + std::to_string(i), instruction, synth_program(i, apis, length));
    ex.api_set.insert(apis.begin(), apis.end());
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace codesft
