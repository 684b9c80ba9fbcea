#pragma once

#include <algorithm>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "codesft/common.hpp"
#include "codesft/python/lexer.hpp"
#include "codesft/skdsl.hpp"

// True when every line of a standardized skeleton is indentation followed by
// one of the placeholder forms.
inline bool standardized_form_ok(std::string_view text) {
  static const std::regex line_re(
      R"(^ *(def <Func>\(<Args>\):|if <If Condition>:|elif <Elif Condition>:|else:|)"
      R"(while <While Condition>:|for <For Condition>:|with <With Condition>:|try:|)"
      R"(except <Except Condition>:|except:|return <Return Value>|return|<Random Stmt>)$)");
  for (const auto line : codesft::split_lines(text))
    if (!std::regex_match(line.begin(), line.end(), line_re)) return false;
  return !text.empty();
}

inline std::map<std::string, int> keyword_counts(const std::vector<std::string>& kws) {
  std::map<std::string, int> out;
  for (const auto& k : kws) ++out[k];
  return out;
}

// Skeleton keywords as they occur in concrete code.
inline std::map<std::string, int> keyword_counts_in(const std::string& code) {
  std::map<std::string, int> out;
  for (const auto& t : codesft::python::tokenize_python(code))
    if (t.kind == codesft::python::TokenKind::Keyword && codesft::is_skeleton_keyword(t.text))
      ++out[std::string(t.text)];
  return out;
}

// Necessary pairing conditions checked independently of the repair logic.
inline bool pairing_ok(const std::vector<std::string>& kws) {
  int ifs = 0, tries = 0, excepts = 0;
  for (const auto& k : kws) {
    ifs += k == "if";
    tries += k == "try";
    excepts += k == "except";
    if ((k == "elif" || k == "else") && ifs == 0) return false;
    if (k == "except" && tries == 0) return false;
  }
  if (excepts < tries) return false;
  const bool returns = std::find(kws.begin(), kws.end(), "return") != kws.end();
  return !returns || kws.front() == "def";
}
