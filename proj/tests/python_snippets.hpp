#pragma once

#include <string>
#include <vector>

// Verified with CPython 3.10 ast.parse.
inline const std::vector<std::string> kValidSnippets = {
    "x = 1",
    "",
    "\n\n",
    "# only comment\n",
    "def f(a, b=1, *args, c, d=2, **kw):\n    return a\n",
    "def f(a, /, b, *, c):\n    pass\n",
    "async def g():\n    await h()\n    async for x in y:\n        pass\n    async with a as b:\n        pass\n",
    "class A(B, metaclass=M):\n    '''doc'''\n    def m(self) -> int: return 1\n",
    "@dec\n@dec2(1)\ndef f(): pass\n",
    "if a:\n    pass\nelif b:\n    pass\nelse:\n    pass\n",
    "while x:\n    break\nelse:\n    continue_ = 1\n",
    "for i, (j, k) in enumerate(z):\n    print(i)\nelse:\n    pass\n",
    "try:\n    pass\nexcept (A, B) as e:\n    raise X from e\nexcept:\n    pass\nelse:\n    pass\nfinally:\n    pass\n",
    "try:\n    pass\nfinally:\n    pass\n",
    "with open(f) as fh, open(g):\n    pass\n",
    "with (open(f) as a, open(g) as b):\n    pass\n",
    "with (a, b):\n    pass\n",
    "import numpy as np, os.path\nfrom . import x\nfrom ..a.b import (c as d, e,)\nfrom m import *\n",
    "x: int = 5\ny: list[int]\n",
    "a = b = c = 1\n",
    "a, *b = c\n",
    "x += 1; y -= 2;\n",
    "lambda x, y=2, *a, **k: x + y\n",
    "f = lambda: (yield)\n",
    "def g():\n    yield from h()\n    x = yield 1\n",
    "[x for x in y if x if not x for z in w]\n",
    "{k: v for k, v in d.items()}\n",
    "{x for x in s}\n",
    "(x for x in s)\n",
    "f(x for x in s)\n",
    "f(*a, k=1, **kw)\n",
    "f(a, *b, c=1, *d)\n",
    "a[1:2, ::3, ...]\n",
    "a[:]\n",
    "a[x:=1]\n",
    "print(f'{x!r:>10}')\n",
    "s = 'a' \"b\" '''c\nd'''\n",
    "x = 0x1F + 0o7 + 0b1 + 1_000 + 1.5e-3 + 2j + .5\n",
    "if (n := len(a)) > 10:\n    pass\n",
    "x = a if b else c\n",
    "x = not a and b or c\n",
    "x = a < b <= c != d is not e not in f in g\n",
    "x = -a ** -b\n",
    "x = a @ b // c % d << 1 >> 2 & 3 | 4 ^ 5\n",
    "del a, b[0], c.d\n",
    "global a, b\n",
    "assert x, 'msg'\n",
    "x = [\n  1,\n  2,\n]\n",
    "x = 1 + \\\n    2\n",
    "def f():\n\n    # comment\n    return 1\n",
    "x = {**a, 'b': 1}\n",
    "x = {1, 2, *s}\n",
    "x = ()\ny = (1,)\nz = 1,\n",
    "if x: pass\n",
    "class A: pass\n",
    "x = await_ = 3\n",
    "print(*[1], sep='')\n",
    "x = [*a, *b]\n",
    "match = 1\ncase = 2\n",
    "def f(*, a=1): pass\n",
    "nonlocal_ = 1\n",
    "x = a.b.c(d)[e].f\n",
    "x = y[1][2](3)\n",
    "x = (a\n     + b)\n",
    "for x in 1, 2:\n    pass\n",
    "return 1\n",
    "with a: pass\n",
    "x = 'it\\'s'\n",
    "x = b'\\x00'\n",
    "def f(a, b,): pass\n",
    "f(a,)\n",
    "@property\ndef x(self): pass\n",
    "x = 1 if y else 2 if z else 3\n",
    "x = lambda: lambda: 1\n",
    "s = f'{x!r:>10}'\n",
    "s = f'{{literal}} {a + b}'\n",
    "s = f'{x=}'\n",
    "s = f'{x:{width}.{prec}}'\n",
    "s = f\"{d['k']}\"\n",
    "s = f'''{\n a\n}'''\n",
    "s = f'{x=!r}'[0]\n",
    "s = f'{a if b else c}'\n",
    "s = rf'\\d{n}'\n",
    "s = f'{(lambda: 1)()}'\n",
    "s = f'{x == y}'\n",
    "s = f'{x!s}' 'tail'\n",
};

inline const std::vector<std::string> kInvalidSnippets = {
    "def f(:",
    "def f(: pass",
    "x = = 1",
    "if x\n    pass\n",
    "def f():\nreturn 1\n",
    "  x = 1\n",
    "x = (1, 2\n",
    "x = 1)\n",
    "1 = x\n",
    "f() = 1\n",
    "for 1 in x: pass\n",
    "x = 'abc\n",
    "x = '''abc\n",
    "def f(a=1, b): pass\n",
    "f(a=1, b)\n",
    "f(**k, *a)\n",
    "class A(\n",
    "try:\n    pass\n",
    "x = $\n",
    "import\n",
    "from import x\n",
    "lambda: = 1\n",
    "x += y += 1\n",
    "a, b += 1\n",
    "(*a)\n",
    "del *a\n",
    "else:\n    pass\n",
    "if x:\n    pass\n  else:\n    pass\n",
    "x = [1, 2\n",
    "print 'hello'\n",
    "def f(*): pass\n",
    "def f(**k, a): pass\n",
    "x = 1 +\n",
    "f(x for x in y, 1)\n",
    "x = a if b\n",
    "return\n  x\n",
    "x = 0x\n",
    "x = 1e\n",
    "with a as 1: pass\n",
    "x = {1: 2, 3}\n",
    "x.1 = 2\n",
    "for x in y\n    pass\n",
    "x = ()()\n x\n",
    "a = (yield) = 1\n",
    "def f():\n\tif x:\n        pass\n  y\n",
    "s = f'{}'\n",
    "s = f'{!r}'\n",
    "s = f'{x!z}'\n",
    "s = f'}'\n",
    "s = f'{x'\n",
    "s = f'{a b}'\n",
    "s = f'{x:{y:{z}}}'\n",
    "s = f'{x!r=}'\n",
    "s = f'{\\'a\\'}'\n",
    "s = b'a' 'b'\n",
    "x = 01\n",
    "x[*a]\n",
};
