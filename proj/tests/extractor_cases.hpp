#pragma once

#include <set>
#include <string>
#include <vector>

// Hand-annotated API extraction cases shared by the unit and acceptance suites.
struct ExtractorCase {
  std::string name;
  std::string code;
  std::set<std::string> apis;
};

inline const std::vector<ExtractorCase> kExtractorCases = {
    // aliasing
    {"module alias", "import numpy as np\nnp.sum(x)\n", {"numpy.sum"}},
    {"submodule alias", "import numpy.linalg as la\nla.eig(m)\n", {"numpy.linalg.eig"}},
    {"plain import", "import os\nos.path.join(a, b)\n", {"os.path.join"}},
    {"dotted import binds head", "import os.path\nos.path.exists(p)\n", {"os.path.exists"}},
    {"alias and builtin", "import numpy as np\ny = np.intersect1d(a, b)\nz = max(y)\n", {"numpy.intersect1d", "max"}},
    {"alias inside function", "import pandas as pd\n\ndef load(p):\n    return pd.read_csv(p)\n", {"pandas.read_csv"}},
    {"two aliases", "import numpy as np\nimport pandas as pd\npd.DataFrame(np.zeros(3))\n",
     {"pandas.DataFrame", "numpy.zeros"}},
    {"unresolved receiver", "df.groupby('k').mean()\n", {"df.groupby", "df.groupby.mean"}},
    // from-imports
    {"from import", "from numpy import sum\nsum(x)\n", {"numpy.sum"}},
    {"from import alias", "from numpy import sum as s\ns(x)\n", {"numpy.sum"}},
    {"from submodule", "from numpy.linalg import norm\nnorm(v)\n", {"numpy.linalg.norm"}},
    {"from import class method", "from collections import Counter\nCounter(w).most_common(1)\n",
     {"collections.Counter", "collections.Counter.most_common"}},
    {"relative import unresolved", "from . import helpers\nhelpers.run()\n", {"helpers.run"}},
    {"star import unresolved", "from math import *\nsqrt(2)\n", {"sqrt"}},
    // chains of length 1 to 5
    {"chain 1", "print(x)\n", {"print"}},
    {"chain 2", "import numpy as np\nnp.load(f).reshape(2, 2)\n", {"numpy.load", "numpy.load.reshape"}},
    {"chain 3", "s.strip().lower().split()\n", {"s.strip", "s.strip.lower", "s.strip.lower.split"}},
    {"chain 4", "a.b().c().d().e()\n", {}},
    {"chain 5", "q.f().g().h().i().j()\n", {}},
    {"chain 4 beside chain 1", "a.b().c().d().e()\nlen(a)\n", {"len"}},
    {"nested call args", "import numpy as np\nnp.sum(np.abs(x))\n", {"numpy.sum", "numpy.abs"}},
    {"subscript in chain", "import pandas as pd\npd.read_csv(p)['a'].sum()\n",
     {"pandas.read_csv", "pandas.read_csv.sum"}},
    {"call inside chain argument", "a.b(len(x)).c()\n", {"a.b", "a.b.c", "len"}},
    // dunder and internal names
    {"dunder method", "x.__len__()\n", {}},
    {"dunder module attr", "import numpy as np\nnp.__config__.show()\n", {}},
    {"dunder builtin", "__import__('os')\n", {}},
    {"c prefix", "import c\nc.api(x)\n", {}},
    {"attribute read only", "import numpy as np\nshape = np.pi\n", {}},
    {"lambda and comprehension", "import math\nf = lambda v: math.floor(v)\nys = [abs(v) for v in xs]\n",
     {"math.floor", "abs"}},
    {"duplicates collapse", "import numpy as np\nnp.sum(a)\nnp.sum(b)\nsum(c)\n", {"numpy.sum", "sum"}},
};
