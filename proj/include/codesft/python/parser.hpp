#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "codesft/common.hpp"
#include "codesft/python/ast.hpp"
#include "codesft/python/lexer.hpp"

namespace codesft::python {

/// Recursive-descent parser for Python 3 modules (the grammar of 3.8-3.11
/// without the soft-keyword `match` statement and 3.12 `type` aliases).
/// Produces the generic tree described in ast.hpp. Semantic checks done by
/// the compiler after parsing (e.g. `return` outside a function) are not
/// performed, matching `ast.parse`.
class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), toks_(tokenize_python(src)) {}

  NodePtr parse_module() {
    auto mod = make_node(Kind::Module, 0, src_.size());
    while (!at(TokenKind::EndMarker)) {
      if (at(TokenKind::Newline)) {
        ++pos_;
        continue;
      }
      statement(mod->children);
    }
    return mod;
  }

 private:
  // ---- token helpers -----------------------------------------------------
  const Token& tok(std::size_t ahead = 0) const {
    const auto i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(TokenKind k) const { return tok().kind == k; }
  bool at_op(std::string_view s) const { return tok().is_op(s); }
  bool at_kw(std::string_view s) const { return tok().is_kw(s); }

  [[noreturn]] void fail_at(const Token& t, const std::string& msg) const {
    throw SyntaxError(msg, t.line, t.col);
  }
  [[noreturn]] void fail_node(const Node& n, const std::string& msg) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < n.begin && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(msg, line, col);
  }
  [[noreturn]] void unexpected() const {
    const auto& t = tok();
    if (t.kind == TokenKind::EndMarker) fail_at(t, "unexpected EOF while parsing");
    if (t.kind == TokenKind::Indent) fail_at(t, "unexpected indent");
    if (t.kind == TokenKind::Dedent) fail_at(t, "unexpected dedent");
    if (t.kind == TokenKind::Newline) fail_at(t, "invalid syntax: unexpected end of line");
    fail_at(t, "invalid syntax near '" + std::string(t.text) + "'");
  }

  const Token& advance() { return toks_[pos_++]; }
  const Token& expect_op(std::string_view s) {
    if (!at_op(s)) unexpected();
    return advance();
  }
  const Token& expect_kw(std::string_view s) {
    if (!at_kw(s)) unexpected();
    return advance();
  }
  const Token& expect(TokenKind k) {
    if (!at(k)) unexpected();
    return advance();
  }
  std::size_t prev_end() const { return pos_ > 0 ? toks_[pos_ - 1].end : 0; }

  static bool starts_expression(const Token& t) {
    switch (t.kind) {
      case TokenKind::Name:
      case TokenKind::Number:
      case TokenKind::String:
        return true;
      case TokenKind::Keyword:
        return t.text == "lambda" || t.text == "not" || t.text == "await" || t.text == "None" ||
               t.text == "True" || t.text == "False";
      case TokenKind::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
               t.text == "+" || t.text == "~" || t.text == "..." || t.text == "*";
      default:
        return false;
    }
  }

  bool at_simple_end() const { return at(TokenKind::Newline) || at_op(";"); }

  // ---- targets -----------------------------------------------------------
  void set_ctx(Node& n, Ctx ctx) {
    switch (n.kind) {
      case Kind::Name:
      case Kind::Attribute:
      case Kind::Subscript:
        n.ctx = ctx;
        return;
      case Kind::Tuple:
      case Kind::List: {
        n.ctx = ctx;
        int starred = 0;
        for (auto& c : n.children) {
          if (c->kind == Kind::Starred) {
            if (ctx == Ctx::Del) fail_node(*c, "cannot delete starred");
            if (++starred > 1) fail_node(*c, "multiple starred expressions in assignment");
          }
          set_ctx(*c, ctx);
        }
        return;
      }
      case Kind::Starred:
        if (ctx == Ctx::Del) fail_node(n, "cannot delete starred");
        n.ctx = ctx;
        set_ctx(n.child(0), ctx);
        return;
      default:
        fail_node(n, std::string("cannot ") + (ctx == Ctx::Del ? "delete " : "assign to ") +
                         std::string(kind_name(n.kind)));
    }
  }

  // ---- statements --------------------------------------------------------
  void statement(std::vector<NodePtr>& out) {
    const auto& t = tok();
    if (t.kind == TokenKind::Keyword) {
      if (t.text == "def") return out.push_back(funcdef(nullptr, false));
      if (t.text == "class") return out.push_back(classdef(nullptr));
      if (t.text == "if") return out.push_back(if_stmt());
      if (t.text == "while") return out.push_back(while_stmt());
      if (t.text == "for") return out.push_back(for_stmt(false));
      if (t.text == "try") return out.push_back(try_stmt());
      if (t.text == "with") return out.push_back(with_stmt(false));
      if (t.text == "async") {
        const auto& n = tok(1);
        if (n.is_kw("def")) return out.push_back(funcdef(nullptr, true));
        if (n.is_kw("for")) return out.push_back(for_stmt(true));
        if (n.is_kw("with")) return out.push_back(with_stmt(true));
        unexpected();
      }
    }
    if (t.is_op("@")) return out.push_back(decorated());
    if (t.kind == TokenKind::Indent) fail_at(t, "unexpected indent");
    simple_stmts(out);
  }

  void simple_stmts(std::vector<NodePtr>& out) {
    while (true) {
      out.push_back(simple_stmt());
      if (at_op(";")) {
        ++pos_;
        if (at(TokenKind::Newline)) break;
        continue;
      }
      break;
    }
    expect(TokenKind::Newline);
  }

  NodePtr block() {
    auto b = make_node(Kind::Block, tok().begin, tok().begin);
    if (at(TokenKind::Newline)) {
      ++pos_;
      if (!at(TokenKind::Indent)) fail_at(tok(), "expected an indented block");
      ++pos_;
      while (!at(TokenKind::Dedent)) {
        if (at(TokenKind::EndMarker)) unexpected();
        statement(b->children);
      }
      ++pos_;
    } else {
      simple_stmts(b->children);
    }
    b->end = prev_end();
    return b;
  }

  NodePtr empty_block() { return make_node(Kind::Block, prev_end(), prev_end()); }

  NodePtr simple_stmt() {
    const auto& t = tok();
    const auto b = t.begin;
    if (t.kind == TokenKind::Keyword) {
      if (t.text == "pass" || t.text == "break" || t.text == "continue") {
        ++pos_;
        return make_node(t.text == "pass"    ? Kind::Pass
                         : t.text == "break" ? Kind::Break
                                             : Kind::Continue,
                         b, t.end);
      }
      if (t.text == "return") {
        ++pos_;
        auto n = make_node(Kind::Return, b, t.end);
        if (!at_simple_end()) n->children.push_back(star_expressions());
        n->end = prev_end();
        return n;
      }
      if (t.text == "raise") {
        ++pos_;
        auto n = make_node(Kind::Raise, b, t.end);
        if (!at_simple_end()) {
          n->children.push_back(expression());
          if (at_kw("from")) {
            ++pos_;
            n->value = "from";
            n->children.push_back(expression());
          }
        }
        n->end = prev_end();
        return n;
      }
      if (t.text == "global" || t.text == "nonlocal") {
        ++pos_;
        auto n = make_node(t.text == "global" ? Kind::Global : Kind::Nonlocal, b, t.end);
        do {
          const auto& id = expect(TokenKind::Name);
          auto nm = make_node(Kind::Name, id.begin, id.end);
          nm->value = std::string(id.text);
          n->children.push_back(std::move(nm));
        } while (at_op(",") && (++pos_, true));
        n->end = prev_end();
        return n;
      }
      if (t.text == "del") {
        ++pos_;
        auto n = make_node(Kind::Delete, b, t.end);
        auto targets = target_list();
        if (targets->kind == Kind::Tuple && targets->aux == "bare") {
          for (auto& c : targets->children) {
            set_ctx(*c, Ctx::Del);
            n->children.push_back(std::move(c));
          }
        } else {
          set_ctx(*targets, Ctx::Del);
          n->children.push_back(std::move(targets));
        }
        n->end = prev_end();
        return n;
      }
      if (t.text == "assert") {
        ++pos_;
        auto n = make_node(Kind::Assert, b, t.end);
        n->children.push_back(expression());
        if (at_op(",")) {
          ++pos_;
          n->children.push_back(expression());
        }
        n->end = prev_end();
        return n;
      }
      if (t.text == "import") return import_name();
      if (t.text == "from") return import_from();
    }
    return expr_stmt();
  }

  static bool is_augassign(const Token& t) {
    if (t.kind != TokenKind::Op) return false;
    static constexpr std::string_view ops[] = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                               ">>=", "<<=", "&=", "|=", "^=", "@="};
    for (auto o : ops)
      if (t.text == o) return true;
    return false;
  }

  NodePtr rhs() { return at_kw("yield") ? yield_expr() : star_expressions(); }

  NodePtr expr_stmt() {
    const auto b = tok().begin;
    NodePtr first = rhs();
    if (at_op("=")) {
      auto n = make_node(Kind::Assign, b, b);
      n->children.push_back(std::move(first));
      while (at_op("=")) {
        ++pos_;
        n->children.push_back(rhs());
      }
      for (std::size_t i = 0; i + 1 < n->children.size(); ++i) {
        if (n->children[i]->kind == Kind::Yield || n->children[i]->kind == Kind::YieldFrom)
          fail_node(*n->children[i], "assignment to yield expression not possible");
        if (n->children[i]->kind == Kind::Starred)
          fail_node(*n->children[i], "starred assignment target must be in a list or tuple");
        set_ctx(*n->children[i], Ctx::Store);
      }
      n->end = prev_end();
      return n;
    }
    if (is_augassign(tok())) {
      const auto& op = advance();
      if (first->kind != Kind::Name && first->kind != Kind::Attribute &&
          first->kind != Kind::Subscript)
        fail_node(*first, "illegal expression for augmented assignment");
      first->ctx = Ctx::Store;
      auto n = make_node(Kind::AugAssign, b, b);
      n->value = std::string(op.text.substr(0, op.text.size() - 1));
      n->children.push_back(std::move(first));
      n->children.push_back(rhs());
      n->end = prev_end();
      return n;
    }
    if (at_op(":")) {
      ++pos_;
      if (first->kind != Kind::Name && first->kind != Kind::Attribute &&
          first->kind != Kind::Subscript)
        fail_node(*first, "illegal target for annotation");
      first->ctx = Ctx::Store;
      auto n = make_node(Kind::AnnAssign, b, b);
      n->children.push_back(std::move(first));
      auto ann = make_node(Kind::Annotation, tok().begin, tok().begin);
      ann->children.push_back(expression());
      ann->end = prev_end();
      n->children.push_back(std::move(ann));
      if (at_op("=")) {
        ++pos_;
        n->children.push_back(rhs());
      }
      n->end = prev_end();
      return n;
    }
    if (first->kind == Kind::Starred) fail_node(*first, "can't use starred expression here");
    auto n = make_node(Kind::Expr, b, prev_end());
    n->children.push_back(std::move(first));
    return n;
  }

  std::string dotted_name() {
    std::string name(expect(TokenKind::Name).text);
    while (at_op(".")) {
      ++pos_;
      name.push_back('.');
      name.append(expect(TokenKind::Name).text);
    }
    return name;
  }

  NodePtr import_name() {
    const auto b = advance().begin;
    auto n = make_node(Kind::Import, b, b);
    do {
      const auto ab = tok().begin;
      auto alias = make_node(Kind::Alias, ab, ab);
      alias->value = dotted_name();
      if (at_kw("as")) {
        ++pos_;
        alias->aux = std::string(expect(TokenKind::Name).text);
      }
      alias->end = prev_end();
      n->children.push_back(std::move(alias));
    } while (at_op(",") && (++pos_, true));
    n->end = prev_end();
    return n;
  }

  NodePtr import_from() {
    const auto b = advance().begin;
    auto n = make_node(Kind::ImportFrom, b, b);
    std::string module;
    while (at_op(".") || at_op("...")) module.append(advance().text);
    if (at(TokenKind::Name)) {
      module += dotted_name();
    } else if (module.empty()) {
      unexpected();
    }
    n->value = module;
    expect_kw("import");
    if (at_op("*")) {
      const auto& s = advance();
      auto alias = make_node(Kind::Alias, s.begin, s.end);
      alias->value = "*";
      n->children.push_back(std::move(alias));
    } else {
      const bool paren = at_op("(");
      if (paren) ++pos_;
      while (true) {
        const auto& id = expect(TokenKind::Name);
        auto alias = make_node(Kind::Alias, id.begin, id.end);
        alias->value = std::string(id.text);
        if (at_kw("as")) {
          ++pos_;
          alias->aux = std::string(expect(TokenKind::Name).text);
        }
        alias->end = prev_end();
        n->children.push_back(std::move(alias));
        if (!at_op(",")) break;
        ++pos_;
        if (paren && at_op(")")) break;
        if (!paren && !at(TokenKind::Name)) unexpected();
      }
      if (paren) expect_op(")");
    }
    n->end = prev_end();
    return n;
  }

  NodePtr decorated() {
    const auto b = tok().begin;
    auto decs = make_node(Kind::Decorators, b, b);
    while (at_op("@")) {
      ++pos_;
      decs->children.push_back(named_expression());
      expect(TokenKind::Newline);
    }
    decs->end = prev_end();
    NodePtr n;
    if (at_kw("def")) {
      n = funcdef(std::move(decs), false);
    } else if (at_kw("async") && tok(1).is_kw("def")) {
      n = funcdef(std::move(decs), true);
    } else if (at_kw("class")) {
      n = classdef(std::move(decs));
    } else {
      unexpected();
    }
    n->begin = b;
    return n;
  }

  NodePtr funcdef(NodePtr decs, bool is_async) {
    const auto b = tok().begin;
    if (is_async) ++pos_;
    expect_kw("def");
    auto n = make_node(is_async ? Kind::AsyncFunctionDef : Kind::FunctionDef, b, b);
    n->value = std::string(expect(TokenKind::Name).text);
    if (!decs) decs = make_node(Kind::Decorators, b, b);
    n->children.push_back(std::move(decs));
    expect_op("(");
    n->children.push_back(parameters(")", true));
    expect_op(")");
    NodePtr returns;
    if (at_op("->")) {
      ++pos_;
      returns = expression();
    }
    expect_op(":");
    n->children.push_back(block());
    if (returns) n->children.push_back(std::move(returns));
    n->end = prev_end();
    return n;
  }

  NodePtr parameters(std::string_view close, bool annotations) {
    auto args = make_node(Kind::Arguments, tok().begin, tok().begin);
    bool seen_default = false;
    bool seen_star = false;
    bool bare_star = false;
    bool seen_kwarg = false;
    bool seen_slash = false;
    while (!at_op(close)) {
      if (seen_kwarg) fail_at(tok(), "arguments cannot follow var-keyword argument");
      if (at_op("/")) {
        const auto& s = advance();
        if (seen_slash || seen_star || args->children.empty())
          fail_at(s, "invalid position for '/'");
        seen_slash = true;
        for (auto& a : args->children) a->aux = "posonly";
      } else if (at_op("*") || at_op("**")) {
        const bool dbl = advance().text == "**";
        if (!dbl && seen_star) fail_at(tok(), "* argument may appear only once");
        if (!dbl && (at_op(",") || at_op(close))) {
          seen_star = true;
          bare_star = true;
        } else {
          auto a = param(annotations, false);
          a->aux = dbl ? "kwarg" : "vararg";
          if (dbl) {
            seen_kwarg = true;
          } else {
            seen_star = true;
          }
          args->children.push_back(std::move(a));
        }
      } else {
        auto a = param(annotations, true);
        const bool has_default = !a->children.empty() && a->children.back()->kind == Kind::Default;
        if (seen_star) {
          a->aux = "kwonly";
          bare_star = false;
        } else {
          a->aux = "pos";
          if (has_default) {
            seen_default = true;
          } else if (seen_default) {
            fail_node(*a, "non-default argument follows default argument");
          }
        }
        args->children.push_back(std::move(a));
      }
      if (!at_op(",")) break;
      ++pos_;
    }
    if (bare_star) fail_at(tok(), "named arguments must follow bare *");
    if (!at_op(close)) unexpected();
    args->end = prev_end();
    return args;
  }

  NodePtr param(bool annotations, bool defaults) {
    const auto& id = expect(TokenKind::Name);
    auto a = make_node(Kind::Arg, id.begin, id.end);
    a->value = std::string(id.text);
    if (annotations && at_op(":")) {
      ++pos_;
      auto ann = make_node(Kind::Annotation, tok().begin, tok().begin);
      ann->children.push_back(at_op("*") ? star_expression() : expression());
      ann->end = prev_end();
      a->children.push_back(std::move(ann));
    }
    if (defaults && at_op("=")) {
      ++pos_;
      auto def = make_node(Kind::Default, tok().begin, tok().begin);
      def->children.push_back(expression());
      def->end = prev_end();
      a->children.push_back(std::move(def));
    }
    a->end = prev_end();
    return a;
  }

  NodePtr classdef(NodePtr decs) {
    const auto b = tok().begin;
    expect_kw("class");
    auto n = make_node(Kind::ClassDef, b, b);
    n->value = std::string(expect(TokenKind::Name).text);
    if (!decs) decs = make_node(Kind::Decorators, b, b);
    n->children.push_back(std::move(decs));
    auto bases = make_node(Kind::Block, tok().begin, tok().begin);
    if (at_op("(")) {
      ++pos_;
      call_arguments(bases->children);
      expect_op(")");
    }
    bases->end = prev_end();
    n->children.push_back(std::move(bases));
    expect_op(":");
    n->children.push_back(block());
    n->end = prev_end();
    return n;
  }

  NodePtr if_stmt() {
    const auto b = advance().begin;  // 'if' or 'elif'
    auto n = make_node(Kind::If, b, b);
    n->children.push_back(named_expression());
    expect_op(":");
    n->children.push_back(block());
    if (at_kw("elif")) {
      auto orelse = make_node(Kind::Block, tok().begin, tok().begin);
      orelse->children.push_back(if_stmt());
      orelse->end = prev_end();
      n->children.push_back(std::move(orelse));
    } else if (at_kw("else")) {
      ++pos_;
      expect_op(":");
      n->children.push_back(block());
    } else {
      n->children.push_back(empty_block());
    }
    n->end = prev_end();
    return n;
  }

  NodePtr else_clause() {
    if (at_kw("else")) {
      ++pos_;
      expect_op(":");
      return block();
    }
    return empty_block();
  }

  NodePtr while_stmt() {
    const auto b = advance().begin;
    auto n = make_node(Kind::While, b, b);
    n->children.push_back(named_expression());
    expect_op(":");
    n->children.push_back(block());
    n->children.push_back(else_clause());
    n->end = prev_end();
    return n;
  }

  NodePtr for_stmt(bool is_async) {
    const auto b = tok().begin;
    if (is_async) ++pos_;
    expect_kw("for");
    auto n = make_node(is_async ? Kind::AsyncFor : Kind::For, b, b);
    auto target = target_list();
    set_ctx(*target, Ctx::Store);
    n->children.push_back(std::move(target));
    expect_kw("in");
    n->children.push_back(star_expressions());
    expect_op(":");
    n->children.push_back(block());
    n->children.push_back(else_clause());
    n->end = prev_end();
    return n;
  }

  NodePtr with_item() {
    const auto b = tok().begin;
    auto item = make_node(Kind::WithItem, b, b);
    item->children.push_back(expression());
    if (at_kw("as")) {
      ++pos_;
      auto target = single_target();
      set_ctx(*target, Ctx::Store);
      item->children.push_back(std::move(target));
    }
    item->end = prev_end();
    return item;
  }

  NodePtr with_stmt(bool is_async) {
    const auto b = tok().begin;
    if (is_async) ++pos_;
    expect_kw("with");
    auto n = make_node(is_async ? Kind::AsyncWith : Kind::With, b, b);
    bool parsed = false;
    if (at_op("(")) {
      const auto save = pos_;
      try {
        ++pos_;
        std::vector<NodePtr> items;
        items.push_back(with_item());
        while (at_op(",")) {
          ++pos_;
          if (at_op(")")) break;
          items.push_back(with_item());
        }
        expect_op(")");
        if (at_op(":")) {
          for (auto& it : items) n->children.push_back(std::move(it));
          parsed = true;
        }
      } catch (const SyntaxError&) {
      }
      if (!parsed) pos_ = save;
    }
    if (!parsed) {
      n->children.push_back(with_item());
      while (at_op(",")) {
        ++pos_;
        n->children.push_back(with_item());
      }
    }
    expect_op(":");
    n->children.push_back(block());
    n->end = prev_end();
    return n;
  }

  NodePtr try_stmt() {
    const auto b = advance().begin;
    auto n = make_node(Kind::Try, b, b);
    expect_op(":");
    n->children.push_back(block());
    bool handlers = false;
    bool bare_seen = false;
    while (at_kw("except")) {
      const auto& ex = advance();
      if (bare_seen) fail_at(ex, "default 'except:' must be last");
      handlers = true;
      if (at_op("*")) ++pos_;
      auto h = make_node(Kind::ExceptHandler, ex.begin, ex.end);
      if (!at_op(":")) {
        h->children.push_back(expression());
        if (at_op(",")) {
          // `except A, B:` is Python 2 only; tuples need parentheses.
          unexpected();
        }
        if (at_kw("as")) {
          ++pos_;
          h->value = std::string(expect(TokenKind::Name).text);
        }
      } else {
        bare_seen = true;
      }
      expect_op(":");
      h->children.push_back(block());
      h->end = prev_end();
      n->children.push_back(std::move(h));
    }
    if (handlers) {
      n->children.push_back(else_clause());
    } else {
      if (at_kw("else")) unexpected();
      n->children.push_back(empty_block());
    }
    if (at_kw("finally")) {
      ++pos_;
      expect_op(":");
      n->children.push_back(block());
    } else {
      if (!handlers) fail_at(tok(), "expected 'except' or 'finally' block");
      n->children.push_back(empty_block());
    }
    n->end = prev_end();
    return n;
  }

  // ---- expressions -------------------------------------------------------
  NodePtr tuple_of(NodePtr first, std::size_t b) {
    auto t = make_node(Kind::Tuple, b, b);
    t->aux = "bare";
    t->children.push_back(std::move(first));
    return t;
  }

  NodePtr star_expressions() {
    const auto b = tok().begin;
    auto first = star_expression();
    if (!at_op(",")) return first;
    auto t = tuple_of(std::move(first), b);
    while (at_op(",")) {
      ++pos_;
      if (!starts_expression(tok())) break;
      t->children.push_back(star_expression());
    }
    t->end = prev_end();
    return t;
  }

  NodePtr star_expression() {
    if (at_op("*")) {
      const auto b = advance().begin;
      auto s = make_node(Kind::Starred, b, b);
      s->value = "*";
      s->children.push_back(bitwise_or());
      s->end = prev_end();
      return s;
    }
    return expression();
  }

  NodePtr star_named_expression() {
    if (at_op("*")) return star_expression();
    return named_expression();
  }

  // Targets of for loops, comprehensions and del: comparison-free operands.
  NodePtr target_list() {
    const auto b = tok().begin;
    auto one = [&]() -> NodePtr {
      if (at_op("*")) {
        const auto sb = advance().begin;
        auto s = make_node(Kind::Starred, sb, sb);
        s->value = "*";
        s->children.push_back(bitwise_or());
        s->end = prev_end();
        return s;
      }
      return bitwise_or();
    };
    auto first = one();
    if (!at_op(",")) return first;
    auto t = tuple_of(std::move(first), b);
    while (at_op(",")) {
      ++pos_;
      if (!starts_expression(tok())) break;
      t->children.push_back(one());
    }
    t->end = prev_end();
    return t;
  }

  NodePtr single_target() {
    if (at_op("*")) fail_at(tok(), "starred target not allowed here");
    return bitwise_or();
  }

  NodePtr named_expression() {
    if (at(TokenKind::Name) && tok(1).is_op(":=")) {
      const auto& id = advance();
      ++pos_;
      auto n = make_node(Kind::NamedExpr, id.begin, id.end);
      auto target = make_node(Kind::Name, id.begin, id.end);
      target->value = std::string(id.text);
      target->ctx = Ctx::Store;
      n->children.push_back(std::move(target));
      n->children.push_back(expression());
      n->end = prev_end();
      return n;
    }
    auto e = expression();
    if (at_op(":=")) fail_node(*e, "cannot use assignment expressions with this target");
    return e;
  }

  NodePtr expression() {
    if (at_kw("lambda")) return lambdef();
    const auto b = tok().begin;
    auto body = disjunction();
    if (at_kw("if")) {
      ++pos_;
      auto n = make_node(Kind::IfExp, b, b);
      auto test = disjunction();
      expect_kw("else");
      auto orelse = expression();
      n->children.push_back(std::move(test));
      n->children.push_back(std::move(body));
      n->children.push_back(std::move(orelse));
      n->end = prev_end();
      return n;
    }
    return body;
  }

  NodePtr lambdef() {
    const auto b = advance().begin;
    auto n = make_node(Kind::Lambda, b, b);
    n->children.push_back(parameters(":", false));
    expect_op(":");
    n->children.push_back(expression());
    n->end = prev_end();
    return n;
  }

  NodePtr bool_chain(std::string_view op, NodePtr (Parser::*next)()) {
    const auto b = tok().begin;
    auto first = (this->*next)();
    if (!at_kw(op)) return first;
    auto n = make_node(Kind::BoolOp, b, b);
    n->value = std::string(op);
    n->children.push_back(std::move(first));
    while (at_kw(op)) {
      ++pos_;
      n->children.push_back((this->*next)());
    }
    n->end = prev_end();
    return n;
  }

  NodePtr disjunction() { return bool_chain("or", &Parser::conjunction); }
  NodePtr conjunction() { return bool_chain("and", &Parser::inversion); }

  NodePtr inversion() {
    if (at_kw("not")) {
      const auto b = advance().begin;
      auto n = make_node(Kind::UnaryOp, b, b);
      n->value = "not";
      n->children.push_back(inversion());
      n->end = prev_end();
      return n;
    }
    return comparison();
  }

  bool comparison_op(std::string& op) {
    const auto& t = tok();
    if (t.kind == TokenKind::Op) {
      static constexpr std::string_view ops[] = {"==", "!=", "<", ">", "<=", ">="};
      for (auto o : ops) {
        if (t.text == o) {
          op = std::string(o);
          ++pos_;
          return true;
        }
      }
      return false;
    }
    if (t.is_kw("in")) {
      op = "in";
      ++pos_;
      return true;
    }
    if (t.is_kw("not") && tok(1).is_kw("in")) {
      op = "not-in";
      pos_ += 2;
      return true;
    }
    if (t.is_kw("is")) {
      ++pos_;
      op = "is";
      if (at_kw("not")) {
        ++pos_;
        op = "is-not";
      }
      return true;
    }
    return false;
  }

  NodePtr comparison() {
    const auto b = tok().begin;
    auto left = bitwise_or();
    std::string op;
    if (!comparison_op(op)) return left;
    auto n = make_node(Kind::Compare, b, b);
    n->children.push_back(std::move(left));
    std::string ops;
    do {
      if (!ops.empty()) ops.push_back(' ');
      ops += op;
      n->children.push_back(bitwise_or());
    } while (comparison_op(op));
    n->value = ops;
    n->end = prev_end();
    return n;
  }

  template <std::size_t N>
  NodePtr binary(const std::string_view (&ops)[N], NodePtr (Parser::*next)()) {
    const auto b = tok().begin;
    auto left = (this->*next)();
    while (true) {
      const auto& t = tok();
      if (t.kind != TokenKind::Op) break;
      bool match = false;
      for (auto o : ops) match = match || t.text == o;
      if (!match) break;
      ++pos_;
      auto n = make_node(Kind::BinOp, b, b);
      n->value = std::string(t.text);
      n->children.push_back(std::move(left));
      n->children.push_back((this->*next)());
      n->end = prev_end();
      left = std::move(n);
    }
    return left;
  }

  NodePtr bitwise_or() {
    static constexpr std::string_view ops[] = {"|"};
    return binary(ops, &Parser::bitwise_xor);
  }
  NodePtr bitwise_xor() {
    static constexpr std::string_view ops[] = {"^"};
    return binary(ops, &Parser::bitwise_and);
  }
  NodePtr bitwise_and() {
    static constexpr std::string_view ops[] = {"&"};
    return binary(ops, &Parser::shift_expr);
  }
  NodePtr shift_expr() {
    static constexpr std::string_view ops[] = {"<<", ">>"};
    return binary(ops, &Parser::sum);
  }
  NodePtr sum() {
    static constexpr std::string_view ops[] = {"+", "-"};
    return binary(ops, &Parser::term);
  }
  NodePtr term() {
    static constexpr std::string_view ops[] = {"*", "/", "//", "%", "@"};
    return binary(ops, &Parser::factor);
  }

  NodePtr factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const auto& t = advance();
      auto n = make_node(Kind::UnaryOp, t.begin, t.end);
      n->value = std::string(t.text);
      n->children.push_back(factor());
      n->end = prev_end();
      return n;
    }
    return power();
  }

  NodePtr power() {
    const auto b = tok().begin;
    auto base = await_primary();
    if (at_op("**")) {
      ++pos_;
      auto n = make_node(Kind::BinOp, b, b);
      n->value = "**";
      n->children.push_back(std::move(base));
      n->children.push_back(factor());
      n->end = prev_end();
      return n;
    }
    return base;
  }

  NodePtr await_primary() {
    if (at_kw("await")) {
      const auto b = advance().begin;
      auto n = make_node(Kind::Await, b, b);
      n->children.push_back(primary());
      n->end = prev_end();
      return n;
    }
    return primary();
  }

  NodePtr primary() {
    const auto b = tok().begin;
    auto e = atom();
    while (true) {
      if (at_op(".")) {
        ++pos_;
        const auto& id = expect(TokenKind::Name);
        auto n = make_node(Kind::Attribute, b, id.end);
        n->value = std::string(id.text);
        n->children.push_back(std::move(e));
        e = std::move(n);
      } else if (at_op("(")) {
        ++pos_;
        auto n = make_node(Kind::Call, b, b);
        n->children.push_back(std::move(e));
        call_arguments(n->children);
        expect_op(")");
        n->end = prev_end();
        e = std::move(n);
      } else if (at_op("[")) {
        ++pos_;
        auto n = make_node(Kind::Subscript, b, b);
        n->children.push_back(std::move(e));
        n->children.push_back(slices());
        expect_op("]");
        n->end = prev_end();
        e = std::move(n);
      } else {
        break;
      }
    }
    return e;
  }

  // Appends arguments to `out` up to (not including) the closing ')'.
  void call_arguments(std::vector<NodePtr>& out) {
    bool seen_keyword = false;
    bool seen_kwargs = false;
    std::size_t count = 0;
    while (!at_op(")")) {
      if (at_op("*")) {
        const auto& s = advance();
        if (seen_kwargs) fail_at(s, "iterable argument unpacking follows keyword argument unpacking");
        auto n = make_node(Kind::Starred, s.begin, s.end);
        n->value = "*";
        n->children.push_back(expression());
        n->end = prev_end();
        out.push_back(std::move(n));
      } else if (at_op("**")) {
        const auto& s = advance();
        auto n = make_node(Kind::Keyword, s.begin, s.end);
        n->children.push_back(expression());
        n->end = prev_end();
        out.push_back(std::move(n));
        seen_kwargs = true;
      } else if (at(TokenKind::Name) && tok(1).is_op("=")) {
        const auto& id = advance();
        ++pos_;
        auto n = make_node(Kind::Keyword, id.begin, id.end);
        n->value = std::string(id.text);
        n->children.push_back(expression());
        n->end = prev_end();
        out.push_back(std::move(n));
        seen_keyword = true;
      } else {
        const auto& start = tok();
        if (seen_kwargs) fail_at(start, "positional argument follows keyword argument unpacking");
        if (seen_keyword) fail_at(start, "positional argument follows keyword argument");
        auto e = named_expression();
        if (at_kw("for") || (at_kw("async") && tok(1).is_kw("for"))) {
          auto g = make_node(Kind::GeneratorExp, e->begin, e->begin);
          g->children.push_back(std::move(e));
          comprehensions(*g);
          g->end = prev_end();
          if (count > 0 || !at_op(")")) fail_node(*g, "generator expression must be parenthesized");
          out.push_back(std::move(g));
          ++count;
          break;
        }
        out.push_back(std::move(e));
      }
      ++count;
      if (!at_op(",")) break;
      ++pos_;
    }
  }

  NodePtr slices() {
    const auto b = tok().begin;
    auto first = slice();
    if (!at_op(",")) return first;
    auto t = tuple_of(std::move(first), b);
    while (at_op(",")) {
      ++pos_;
      if (at_op("]")) break;
      t->children.push_back(slice());
    }
    t->end = prev_end();
    return t;
  }

  NodePtr slice() {
    const auto b = tok().begin;
    NodePtr lower;
    if (!at_op(":")) {
      lower = named_expression();
      if (!at_op(":")) return lower;
    }
    auto s = make_node(Kind::Slice, b, b);
    std::string mask = "000";
    if (lower) {
      mask[0] = '1';
      s->children.push_back(std::move(lower));
    }
    expect_op(":");
    if (!at_op(":") && !at_op("]") && !at_op(",")) {
      mask[1] = '1';
      s->children.push_back(expression());
    }
    if (at_op(":")) {
      ++pos_;
      if (!at_op("]") && !at_op(",")) {
        mask[2] = '1';
        s->children.push_back(expression());
      }
    }
    s->value = mask;
    s->end = prev_end();
    return s;
  }

  void comprehensions(Node& owner) {
    while (at_kw("for") || (at_kw("async") && tok(1).is_kw("for"))) {
      const auto b = tok().begin;
      auto c = make_node(Kind::Comprehension, b, b);
      if (at_kw("async")) {
        ++pos_;
        c->value = "async";
      }
      expect_kw("for");
      auto target = target_list();
      set_ctx(*target, Ctx::Store);
      c->children.push_back(std::move(target));
      expect_kw("in");
      c->children.push_back(disjunction());
      while (at_kw("if")) {
        ++pos_;
        c->children.push_back(disjunction());
      }
      c->end = prev_end();
      owner.children.push_back(std::move(c));
    }
  }

  static void reject_starred_elt(const Node& n, const Parser& p) {
    if (n.kind == Kind::Starred) p.fail_node(n, "iterable unpacking cannot be used in comprehension");
  }

  NodePtr atom() {
    const auto& t = tok();
    switch (t.kind) {
      case TokenKind::Name: {
        ++pos_;
        auto n = make_node(Kind::Name, t.begin, t.end);
        n->value = std::string(t.text);
        return n;
      }
      case TokenKind::Number: {
        ++pos_;
        auto n = make_node(Kind::Constant, t.begin, t.end);
        n->value = std::string(t.text);
        n->aux = "num";
        return n;
      }
      case TokenKind::String: {
        auto n = make_node(Kind::Constant, t.begin, t.end);
        n->aux = "str";
        bool has_bytes = false, has_text = false;
        while (at(TokenKind::String)) {
          const auto& s = advance();
          n->end = s.end;
          const auto quote = s.text.find_first_of("'\"");
          const auto prefix = s.text.substr(0, quote);
          bool fmt = false, bytes = false;
          for (char c : prefix) {
            fmt = fmt || (c | 0x20) == 'f';
            bytes = bytes || (c | 0x20) == 'b';
          }
          (bytes ? has_bytes : has_text) = true;
          if (fmt) {
            n->kind = Kind::JoinedStr;
            fstring_fields(s, quote, *n);
          }
        }
        if (has_bytes && has_text) fail_at(t, "cannot mix bytes and nonbytes literals");
        n->value = std::string(src_.substr(n->begin, n->end - n->begin));
        return n;
      }
      case TokenKind::Keyword:
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          ++pos_;
          auto n = make_node(Kind::Constant, t.begin, t.end);
          n->value = std::string(t.text);
          n->aux = std::string(t.text);
          return n;
        }
        unexpected();
      case TokenKind::Op:
        if (t.text == "...") {
          ++pos_;
          auto n = make_node(Kind::Constant, t.begin, t.end);
          n->value = "...";
          n->aux = "Ellipsis";
          return n;
        }
        if (t.text == "(") return paren_atom();
        if (t.text == "[") return list_atom();
        if (t.text == "{") return brace_atom();
        unexpected();
      default:
        unexpected();
    }
  }

  // Parses the replacement fields of one f-string token into `owner`.
  void fstring_fields(const Token& s, std::size_t quote, Node& owner) const {
    const auto text = s.text;
    const std::size_t qlen =
        text.size() >= quote + 6 && text[quote + 1] == text[quote] && text[quote + 2] == text[quote] ? 3 : 1;
    const std::size_t body_begin = quote + qlen;
    const std::size_t body_end = text.size() - qlen;
    fstring_body(s, body_begin, body_end, owner, 0);
  }

  void fstring_body(const Token& s, std::size_t i, std::size_t stop, Node& owner, int nesting) const {
    const auto text = s.text;
    auto bad = [&](const std::string& msg) { fail_at(s, "f-string: " + msg); };
    while (i < stop) {
      const char c = text[i];
      if (c == '{') {
        if (i + 1 < stop && text[i + 1] == '{' && nesting == 0) {
          i += 2;
          continue;
        }
        if (nesting > 1) bad("expressions nested too deeply");
        i = fstring_field(s, i + 1, stop, owner, nesting);
      } else if (c == '}') {
        if (i + 1 < stop && text[i + 1] == '}' && nesting == 0) {
          i += 2;
          continue;
        }
        bad("single '}' is not allowed");
      } else {
        ++i;
      }
    }
  }

  // `i` is just past '{'. Returns the index just past the closing '}'.
  std::size_t fstring_field(const Token& s, std::size_t i, std::size_t stop, Node& owner,
                            int nesting) const {
    const auto text = s.text;
    auto bad = [&](const std::string& msg) { fail_at(s, "f-string: " + msg); };
    const std::size_t expr_begin = i;
    int depth = 0;
    char in_quote = 0;
    std::size_t expr_end = std::string_view::npos;
    for (; i < stop; ++i) {
      const char c = text[i];
      if (in_quote) {
        if (c == in_quote) in_quote = 0;
        continue;
      }
      if (c == '\\') bad("expression part cannot include a backslash");
      if (c == '\'' || c == '"') {
        in_quote = c;
      } else if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if (c == ')' || c == ']' || c == '}') {
        if (depth == 0) {
          if (c != '}') bad("unmatched '" + std::string(1, c) + "'");
          expr_end = i;
          break;
        }
        --depth;
      } else if (depth == 0 && c == '!' && i + 1 < stop && text[i + 1] != '=') {
        expr_end = i;
        break;
      } else if (depth == 0 && c == ':') {
        expr_end = i;
        break;
      } else if (depth == 0 && c == '=' && i + 1 < stop &&
                 (text[i + 1] == '}' || text[i + 1] == '!' || text[i + 1] == ':') && i > expr_begin &&
                 std::string_view("=!<>").find(text[i - 1]) == std::string_view::npos) {
        expr_end = i++;
        break;
      }
    }
    if (expr_end == std::string_view::npos || in_quote) bad("expecting '}'");
    if (i >= stop) bad("expecting '}'");
    owner.children.push_back(fstring_expression(s, expr_begin, expr_end));
    if (text[i] == '!') {
      if (i + 1 >= stop || std::string_view("rsa").find(text[i + 1]) == std::string_view::npos)
        bad("invalid conversion character");
      i += 2;
    }
    if (i < stop && text[i] == ':') {
      // Format spec: literal text with optional nested fields, up to the
      // matching '}'.
      ++i;
      const auto spec_begin = i;
      int d = 0;
      for (; i < stop; ++i) {
        if (text[i] == '{') ++d;
        if (text[i] == '}') {
          if (d == 0) break;
          --d;
        }
      }
      if (i >= stop) bad("expecting '}'");
      fstring_body(s, spec_begin, i, owner, nesting + 1);
    }
    if (i >= stop || text[i] != '}') bad("expecting '}'");
    return i + 1;
  }

  NodePtr fstring_expression(const Token& s, std::size_t b, std::size_t e) const {
    const auto expr = s.text.substr(b, e - b);
    if (trim(expr).empty()) fail_at(s, "f-string: empty expression not allowed");
    const std::string wrapped = "(" + std::string(expr) + "\n)";
    NodePtr node;
    try {
      Parser sub(wrapped);
      node = sub.fstring_expression_root();
    } catch (const SyntaxError& err) {
      fail_at(s, std::string("f-string: ") + err.what());
    }
    const auto base = s.begin + b;
    walk_mut(*node, [&](Node& n) {
      n.begin = n.begin + base - 1;
      n.end = n.end + base - 1;
    });
    return node;
  }

  NodePtr fstring_expression_root() {
    expect_op("(");
    NodePtr e = at_kw("yield") ? yield_expr() : star_expressions();
    expect_op(")");
    if (!at(TokenKind::Newline)) unexpected();
    return e;
  }

  template <typename F>
  static void walk_mut(Node& n, F&& f) {
    f(n);
    for (auto& c : n.children) walk_mut(*c, f);
  }

  NodePtr paren_atom() {
    const auto b = advance().begin;
    if (at_op(")")) {
      ++pos_;
      return make_node(Kind::Tuple, b, prev_end());
    }
    if (at_kw("yield")) {
      auto y = yield_expr();
      expect_op(")");
      return y;
    }
    auto first = star_named_expression();
    if (at_kw("for") || (at_kw("async") && tok(1).is_kw("for"))) {
      reject_starred_elt(*first, *this);
      auto g = make_node(Kind::GeneratorExp, b, b);
      g->children.push_back(std::move(first));
      comprehensions(*g);
      expect_op(")");
      g->end = prev_end();
      return g;
    }
    if (at_op(",")) {
      auto t = make_node(Kind::Tuple, b, b);
      t->children.push_back(std::move(first));
      while (at_op(",")) {
        ++pos_;
        if (at_op(")")) break;
        t->children.push_back(star_named_expression());
      }
      expect_op(")");
      t->end = prev_end();
      return t;
    }
    if (first->kind == Kind::Starred) fail_node(*first, "cannot use starred expression here");
    expect_op(")");
    // Parenthesized expressions keep their inner span; the parentheses are
    // not part of the tree.
    return first;
  }

  NodePtr list_atom() {
    const auto b = advance().begin;
    auto n = make_node(Kind::List, b, b);
    if (at_op("]")) {
      ++pos_;
      n->end = prev_end();
      return n;
    }
    auto first = star_named_expression();
    if (at_kw("for") || (at_kw("async") && tok(1).is_kw("for"))) {
      reject_starred_elt(*first, *this);
      n->kind = Kind::ListComp;
      n->children.push_back(std::move(first));
      comprehensions(*n);
      expect_op("]");
      n->end = prev_end();
      return n;
    }
    n->children.push_back(std::move(first));
    while (at_op(",")) {
      ++pos_;
      if (at_op("]")) break;
      n->children.push_back(star_named_expression());
    }
    expect_op("]");
    n->end = prev_end();
    return n;
  }

  NodePtr dict_item() {
    const auto b = tok().begin;
    if (at_op("**")) {
      ++pos_;
      auto s = make_node(Kind::Starred, b, b);
      s->value = "**";
      s->children.push_back(bitwise_or());
      s->end = prev_end();
      return s;
    }
    auto kv = make_node(Kind::KeyValue, b, b);
    kv->children.push_back(expression());
    expect_op(":");
    kv->children.push_back(expression());
    kv->end = prev_end();
    return kv;
  }

  NodePtr brace_atom() {
    const auto b = advance().begin;
    if (at_op("}")) {
      ++pos_;
      return make_node(Kind::Dict, b, prev_end());
    }
    if (at_op("**")) {
      auto d = make_node(Kind::Dict, b, b);
      d->children.push_back(dict_item());
      return finish_dict(std::move(d));
    }
    auto first = star_named_expression();
    if (at_op(":")) {
      if (first->kind == Kind::Starred || first->kind == Kind::NamedExpr)
        fail_node(*first, "invalid dictionary key");
      ++pos_;
      auto value = expression();
      if (at_kw("for") || (at_kw("async") && tok(1).is_kw("for"))) {
        auto d = make_node(Kind::DictComp, b, b);
        d->children.push_back(std::move(first));
        d->children.push_back(std::move(value));
        comprehensions(*d);
        expect_op("}");
        d->end = prev_end();
        return d;
      }
      auto d = make_node(Kind::Dict, b, b);
      auto kv = make_node(Kind::KeyValue, first->begin, value->end);
      kv->children.push_back(std::move(first));
      kv->children.push_back(std::move(value));
      d->children.push_back(std::move(kv));
      return finish_dict(std::move(d));
    }
    if (at_kw("for") || (at_kw("async") && tok(1).is_kw("for"))) {
      reject_starred_elt(*first, *this);
      auto s = make_node(Kind::SetComp, b, b);
      s->children.push_back(std::move(first));
      comprehensions(*s);
      expect_op("}");
      s->end = prev_end();
      return s;
    }
    auto s = make_node(Kind::Set, b, b);
    s->children.push_back(std::move(first));
    while (at_op(",")) {
      ++pos_;
      if (at_op("}")) break;
      s->children.push_back(star_named_expression());
    }
    expect_op("}");
    s->end = prev_end();
    return s;
  }

  NodePtr finish_dict(NodePtr d) {
    while (at_op(",")) {
      ++pos_;
      if (at_op("}")) break;
      d->children.push_back(dict_item());
    }
    expect_op("}");
    d->end = prev_end();
    return d;
  }

  NodePtr yield_expr() {
    const auto b = advance().begin;
    if (at_kw("from")) {
      ++pos_;
      auto n = make_node(Kind::YieldFrom, b, b);
      n->children.push_back(expression());
      n->end = prev_end();
      return n;
    }
    auto n = make_node(Kind::Yield, b, b);
    if (starts_expression(tok())) n->children.push_back(star_expressions());
    n->end = prev_end();
    return n;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

/// Parses a module; throws SyntaxError on failure.
inline NodePtr parse(std::string_view src) { return Parser(src).parse_module(); }

/// True iff the text parses as a Python module.
inline bool syntax_check(std::string_view src) {
  try {
    parse(src);
    return true;
  } catch (const SyntaxError&) {
    return false;
  }
}

}  // namespace codesft::python
