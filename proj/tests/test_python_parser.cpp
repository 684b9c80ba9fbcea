#include <gtest/gtest.h>

#include <string>

#include "codesft/python/lexer.hpp"
#include "codesft/python/parser.hpp"
#include "python_snippets.hpp"

using namespace codesft::python;

TEST(PythonLexer, EmitsIndentationTokens) {
  const auto toks = tokenize_python("if a:\n    b\nc\n");
  std::vector<TokenKind> kinds;
  for (const auto& t : toks) kinds.push_back(t.kind);
  const std::vector<TokenKind> expected = {
      TokenKind::Keyword, TokenKind::Name,    TokenKind::Op,      TokenKind::Newline,
      TokenKind::Indent,  TokenKind::Name,    TokenKind::Newline, TokenKind::Dedent,
      TokenKind::Name,    TokenKind::Newline, TokenKind::EndMarker};
  EXPECT_EQ(kinds, expected);
}

TEST(PythonLexer, JoinsLinesInsideBrackets) {
  const auto toks = tokenize_python("x = (1,\n  2)\n");
  int newlines = 0;
  for (const auto& t : toks) newlines += t.kind == TokenKind::Newline;
  EXPECT_EQ(newlines, 1);
}

TEST(PythonLexer, ReportsLineOfError) {
  try {
    tokenize_python("x = 1\ny = 'oops\n");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(PythonParser, AcceptsValidModules) {
  for (const auto& s : kValidSnippets) EXPECT_TRUE(syntax_check(s)) << s;
}

TEST(PythonParser, RejectsInvalidModules) {
  for (const auto& s : kInvalidSnippets) EXPECT_FALSE(syntax_check(s)) << s;
}

TEST(PythonParser, SyntaxCheckExamples) {
  EXPECT_TRUE(syntax_check("x = 1"));
  EXPECT_FALSE(syntax_check("def f(:"));
  EXPECT_FALSE(syntax_check("def f(: pass"));
}

TEST(PythonParser, ElifBecomesNestedIf) {
  const auto mod = parse("if a:\n    pass\nelif b:\n    pass\n");
  ASSERT_EQ(mod->size(), 1u);
  const auto& top = mod->child(0);
  EXPECT_EQ(top.kind, Kind::If);
  const auto& orelse = top.child(2);
  ASSERT_EQ(orelse.size(), 1u);
  EXPECT_EQ(orelse.child(0).kind, Kind::If);
}

TEST(PythonParser, CallChainShape) {
  const auto mod = parse("np.sum(x)\n");
  const auto& call = mod->child(0).child(0);
  ASSERT_EQ(call.kind, Kind::Call);
  const auto& func = call.child(0);
  EXPECT_EQ(func.kind, Kind::Attribute);
  EXPECT_EQ(func.value, "sum");
  EXPECT_EQ(func.child(0).value, "np");
  EXPECT_EQ(call.begin, 0u);
  EXPECT_EQ(call.end, 9u);
}

TEST(PythonParser, AssignmentTargetsGetStoreContext) {
  const auto mod = parse("a, b = c\n");
  const auto& assign = mod->child(0);
  ASSERT_EQ(assign.kind, Kind::Assign);
  const auto& target = assign.child(0);
  EXPECT_EQ(target.kind, Kind::Tuple);
  EXPECT_EQ(target.child(0).ctx, Ctx::Store);
  EXPECT_EQ(assign.child(1).ctx, Ctx::Load);
}
