#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace codesft::python {

// Node kinds follow the reference interpreter's `ast` module where one exists.
// Block, KeyValue, Annotation, Default and Decorators are grouping nodes that
// stand in for list-valued or optional fields.
enum class Kind {
  Module,
  Block,
  FunctionDef,
  AsyncFunctionDef,
  ClassDef,
  Decorators,
  Arguments,
  Arg,
  Annotation,
  Default,
  Return,
  Delete,
  Assign,
  AugAssign,
  AnnAssign,
  For,
  AsyncFor,
  While,
  If,
  With,
  AsyncWith,
  WithItem,
  Raise,
  Try,
  ExceptHandler,
  Assert,
  Import,
  ImportFrom,
  Alias,
  Global,
  Nonlocal,
  Expr,
  Pass,
  Break,
  Continue,
  BoolOp,
  NamedExpr,
  BinOp,
  UnaryOp,
  Lambda,
  IfExp,
  Dict,
  KeyValue,
  Set,
  ListComp,
  SetComp,
  DictComp,
  GeneratorExp,
  Comprehension,
  Await,
  Yield,
  YieldFrom,
  Compare,
  Call,
  Keyword,
  Constant,
  Attribute,
  Subscript,
  Slice,
  Starred,
  Name,
  List,
  Tuple,
  JoinedStr,
};

inline std::string_view kind_name(Kind k) {
  static constexpr std::string_view names[] = {
      "Module",       "Block",      "FunctionDef", "AsyncFunctionDef", "ClassDef",
      "Decorators",   "Arguments",  "Arg",         "Annotation",       "Default",
      "Return",       "Delete",     "Assign",      "AugAssign",        "AnnAssign",
      "For",          "AsyncFor",   "While",       "If",               "With",
      "AsyncWith",    "WithItem",   "Raise",       "Try",              "ExceptHandler",
      "Assert",       "Import",     "ImportFrom",  "Alias",            "Global",
      "Nonlocal",     "Expr",       "Pass",        "Break",            "Continue",
      "BoolOp",       "NamedExpr",  "BinOp",       "UnaryOp",          "Lambda",
      "IfExp",        "Dict",       "KeyValue",    "Set",              "ListComp",
      "SetComp",      "DictComp",   "GeneratorExp", "Comprehension",   "Await",
      "Yield",        "YieldFrom",  "Compare",     "Call",             "Keyword",
      "Constant",     "Attribute",  "Subscript",   "Slice",            "Starred",
      "Name",         "List",       "Tuple",       "JoinedStr"};
  return names[static_cast<std::size_t>(k)];
}

enum class Ctx { Load, Store, Del };

struct Node;
using NodePtr = std::unique_ptr<Node>;

/// Generic syntax tree node. Child layout per kind:
///
///   Module         [stmt...]
///   Block          [stmt...]
///   FunctionDef    [Decorators, Arguments, Block body, (returns expr)]   value = name
///   ClassDef       [Decorators, Block bases, Block body]                 value = name
///   Arguments      [Arg...]
///   Arg            [(Annotation), (Default)]    value = name, aux = posonly|pos|vararg|kwonly|kwarg
///   Assign         [target..., value]
///   AugAssign      [target, value]              value = operator
///   AnnAssign      [target, Annotation, (value)]
///   For            [target, iter, Block body, Block orelse]
///   While / If     [test, Block body, Block orelse]   (elif is a nested If in orelse)
///   With           [WithItem..., Block body]
///   WithItem       [expr, (target)]
///   Raise          [(exc), (cause)]             value = "from" when a cause is present
///   Try            [Block body, ExceptHandler..., Block orelse, Block finally]
///   ExceptHandler  [(type), Block body]         value = bound name
///   Import         [Alias...]
///   ImportFrom     [Alias...]                   value = module incl. leading dots
///   Alias          []                           value = dotted name, aux = asname
///   BoolOp         [operand...]                 value = and|or
///   BinOp          [left, right]                value = operator
///   UnaryOp        [operand]                    value = operator
///   Compare        [left, right...]             value = space separated operators
///   Call           [func, arg...]               (Keyword and Starred args inline)
///   Keyword        [value]                      value = name, empty for **kwargs
///   Attribute      [value]                      value = attribute name
///   Subscript      [value, slice]
///   Slice          [part...]                    value = presence mask over lower/upper/step
///   Comprehension  [target, iter, cond...]      value = "async" for async for
///   ListComp etc.  [elt, Comprehension...]; DictComp [key, value, Comprehension...]
///   Name           []                           value = identifier
///   Constant       []                           value = source text, aux = str|num|None|True|False|Ellipsis
///   JoinedStr      [expr...]                    f-string; one child per replacement field
struct Node {
  Kind kind;
  std::string value;
  std::string aux;
  Ctx ctx = Ctx::Load;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<NodePtr> children;

  Node(Kind k, std::size_t b, std::size_t e) : kind(k), begin(b), end(e) {}

  Node& child(std::size_t i) const { return *children.at(i); }
  std::size_t size() const { return children.size(); }
};

inline NodePtr make_node(Kind k, std::size_t b, std::size_t e) {
  return std::make_unique<Node>(k, b, e);
}

/// Pre-order traversal; the visitor returns false to skip a subtree.
template <typename F>
void walk(const Node& n, F&& visit) {
  if (!visit(n)) return;
  for (const auto& c : n.children) walk(*c, visit);
}

}  // namespace codesft::python
