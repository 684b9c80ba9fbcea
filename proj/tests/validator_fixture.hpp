#pragma once

#include <map>
#include <string>
#include <vector>

#include "codesft/genclient.hpp"

// Ten hand-built generation records. With N = 5 the at-least rule needs
// 1, 2, 3, 4, 5 matches at T = 0.2 .. 1.0; record 9 has N = 4 and needs
// 1, 2, 3, 4, 4.
//
//   0: 5/5 matched            passes every T
//   1: 4/5                    T <= 0.8
//   2: 3/5                    T <= 0.6
//   3: 2/5                    T <= 0.4
//   4: 1/5                    T <= 0.2
//   5: 0/5                    never
//   6: no [Solution] header   never (format)
//   7: 1/1 but 13 tokens      never (length)
//   8: code does not parse    never (syntax)
//   9: 3/4                    T <= 0.6
struct ValidatorFixture {
  std::vector<codesft::GenerationRecord> records;
  std::vector<std::vector<std::string>> required;
  std::map<double, double> curve;
};

inline codesft::GenerationRecord fixture_record(const std::string& id, const std::string& raw) {
  codesft::GenerationRecord r;
  r.prompt_id = id;
  r.status = codesft::GenStatus::Ok;
  r.attempts = 1;
  r.raw_response = raw;
  const auto s = codesft::extract_sections(raw);
  r.problem = s.problem;
  r.solution_code = s.code;
  return r;
}

inline std::string fixture_solution(const std::vector<std::string>& calls) {
  std::string code = "import numpy as np\n\n\ndef solve(x):\n    out = []\n";
  for (const auto& c : calls) code += "    out.append(" + c + "(x))\n";
  code += "    out.append(np.sort(x))\n    return out\n";
  return "[Problem Description]\nGiven a numeric array x, compute a list of summary values and return them "
         "together with a sorted copy of x.\n\n[Solution]\n```python\n" +
         code + "```\n";
}

inline ValidatorFixture validator_fixture() {
  const std::vector<std::string> five{"numpy.sum", "numpy.mean", "numpy.max", "numpy.min", "numpy.std"};
  const std::vector<std::string> calls{"np.sum", "np.mean", "np.max", "np.min", "np.std"};
  auto first = [&](std::size_t k) { return std::vector<std::string>(calls.begin(), calls.begin() + k); };

  ValidatorFixture f;
  for (std::size_t k : {5, 4, 3, 2, 1, 0}) {
    f.records.push_back(fixture_record("r" + std::to_string(f.records.size()), fixture_solution(first(k))));
    f.required.push_back(five);
  }
  f.records.push_back(fixture_record(
      "r6", "[Problem Description]\nSum and average an array x, then report both values in a tuple.\n\n"
            "```python\nimport numpy as np\n\n\ndef solve(x):\n    return np.sum(x), np.mean(x)\n```\n"));
  f.required.push_back(five);
  f.records.push_back(fixture_record("r7", "[Problem Description]\nSum it.\n[Solution]\n```python\n"
                                           "import numpy as np\nnp.sum(x)\n```\n"));
  f.required.push_back({"numpy.sum"});
  f.records.push_back(fixture_record(
      "r8", "[Problem Description]\nGiven a numeric array x, return summary values for every column of x.\n\n"
            "[Solution]\n```python\nimport numpy as np\n\n\ndef solve(x:\n    return [np.sum(x), np.mean(x), "
            "np.max(x), np.min(x), np.std(x)]\n```\n"));
  f.required.push_back(five);
  f.records.push_back(fixture_record("r9", fixture_solution({"np.sum", "np.mean", "np.max"})));
  f.required.push_back({"numpy.sum", "numpy.mean", "numpy.max", "numpy.median"});

  f.curve = {{0.2, 0.6}, {0.4, 0.5}, {0.6, 0.4}, {0.8, 0.2}, {1.0, 0.1}};
  return f;
}
