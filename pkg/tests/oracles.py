"""Independent reference implementations used by the tests.

Nothing here calls the code under test except for graph construction.
"""

import numpy as np

from sogppa.sog import AND2, CONST0, CONST1, INPUT, MUX2, NOT, OR2, OUTPUT, REG, XOR2, SogGraph

SOURCES = (REG, INPUT, CONST0, CONST1)


def random_dag(rng, n_nodes, n_inputs=4, n_regs=4, n_outputs=3, n_consts=1, max_fanin_back=None,
               p_source=0.0):
    """Random SOG: sources first, then gates over earlier nodes, then outputs.

    Register D-pins connect to arbitrary gates, so register loops appear.
    Each gate fan-in is a source with probability ``p_source``, which keeps
    the number of combinational paths bounded on large graphs.
    """
    g = SogGraph()
    for i in range(n_inputs):
        g.add_node(INPUT, name=f"i{i}")
    regs = [g.add_node(REG, (0,), name=f"r{i}") for i in range(n_regs)]
    for _ in range(n_consts):
        g.add_node(CONST0 if rng.random() < 0.5 else CONST1)
    n_src = len(g)
    kinds = (AND2, OR2, XOR2, NOT, MUX2)
    arity = {AND2: 2, OR2: 2, XOR2: 2, NOT: 1, MUX2: 3}
    while len(g) < n_nodes:
        k = kinds[rng.integers(len(kinds))]
        lo = 0 if max_fanin_back is None else max(0, len(g) - max_fanin_back)
        fi = tuple(int(rng.integers(0, n_src)) if rng.random() < p_source else int(rng.integers(lo, len(g)))
                   for _ in range(arity[k]))
        g.add_node(k, fi)
    last = len(g)
    for r in regs:
        g.fanins[r] = (int(rng.integers(0, last)),)
    for i in range(n_outputs):
        g.add_node(OUTPUT, (int(rng.integers(0, last)),), name=f"o{i}")
    g._invalidate()
    return g


def fanouts(g):
    fo = [0] * len(g)
    for fi in g.fanins:
        for u in fi:
            fo[u] += 1
    return fo


def oracle_delays(g, coeffs):
    """Per-node delay from ``coeffs[kind] = (a, b)``; registers use ``a`` only."""
    fo = fanouts(g)
    out = []
    for v, k in enumerate(g.kinds):
        if k in (INPUT, OUTPUT, CONST0, CONST1):
            out.append(0.0)
        elif k == REG:
            out.append(coeffs[k][0])
        else:
            a, b = coeffs[k]
            out.append(a + b * fo[v])
    return out


def count_paths(g, node, memo):
    if node in memo:
        return memo[node]
    if g.kinds[node] in SOURCES:
        memo[node] = 1
    else:
        memo[node] = sum(count_paths(g, u, memo) for u in g.fanins[node])
    return memo[node]


def enumerate_paths(g, node):
    """Every combinational path ending at ``node``, as forward node lists."""
    if g.kinds[node] in SOURCES:
        return [[node]]
    out = []
    for u in g.fanins[node]:
        for p in enumerate_paths(g, u):
            out.append(p + [node])
    return out


def brute_endpoint_path(g, end, delays):
    """Max-delay path into an endpoint; ties go to the lexicographically smallest
    reversed node sequence (the lowest fan-in id at every backward step)."""
    first = g.fanins[end][0] if g.kinds[end] == REG else end
    best = None
    for p in enumerate_paths(g, first):
        d = 0.0
        for v in p:
            d += delays[v]
        key = (-d, p[::-1])
        if best is None or key < best[0]:
            best = (key, p)
    nodes = best[1] + ([end] if g.kinds[end] == REG else [])
    return nodes, -best[0][0]


def brute_pair_paths(g, start, end, delays):
    """Every path from ``start`` to the endpoint's data pin that avoids other sources."""
    first = g.fanins[end][0] if g.kinds[end] == REG else end

    def walk(v):
        if v == start:
            return [[v]]
        if g.kinds[v] in SOURCES:
            return []
        return [p + [v] for u in g.fanins[v] for p in walk(u)]

    return [(p, sum(delays[v] for v in p)) for p in walk(first)]


def brute_best_split(X, y, min_leaf=1):
    """Best variance-reduction split by trying every feature and midpoint."""
    n, d = X.shape
    base = ((y - y.mean()) ** 2).sum()
    best = (0.0, None, None)
    for f in range(d):
        vals = np.unique(X[:, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = lo + (hi - lo) / 2.0
            left = X[:, f] <= thr
            nl, nr = left.sum(), (~left).sum()
            if nl < min_leaf or nr < min_leaf:
                continue
            sse = ((y[left] - y[left].mean()) ** 2).sum() + ((y[~left] - y[~left].mean()) ** 2).sum()
            gain = base - sse
            if gain > best[0] + 1e-9 * max(1.0, base):
                best = (gain, f, thr)
    return best




def to_signed(x, w):
    return x - (1 << w) if x >> (w - 1) & 1 else x


def int_semantics(kind, params, a, b=0, s=0):
    """Python-integer meaning of one word-level cell."""
    w = params.get("width", 0)
    signed = params.get("signed", False)
    if kind == "concat":
        return a | (b << params["a_width"])
    if kind == "slice":
        return (a >> params.get("offset", 0)) & ((1 << params["y_width"]) - 1)
    m = (1 << w) - 1
    if kind == "add":
        return (a + b) & m
    if kind == "sub":
        return (a - b) & m
    if kind == "mul":
        yw = params.get("y_width", w)
        if signed:
            a, b = to_signed(a, w), to_signed(b, w)
        return (a * b) & ((1 << yw) - 1)
    if kind in ("and", "or", "xor"):
        return {"and": a & b, "or": a | b, "xor": a ^ b}[kind]
    if kind == "not":
        return ~a & m
    if kind == "reduce_and":
        return int(a == m)
    if kind == "reduce_or":
        return int(a != 0)
    if kind == "reduce_xor":
        return bin(a).count("1") & 1
    if kind in ("eq", "lt", "ge"):
        if signed:
            a, b = to_signed(a, w), to_signed(b, w)
        return int({"eq": a == b, "lt": a < b, "ge": a >= b}[kind])
    if kind == "shl":
        return (a << b) & m if b < w else 0
    if kind == "shr":
        if signed:
            return (to_signed(a, w) >> min(b, w)) & m
        return a >> b if b < w else 0
    if kind == "mux":
        return b if s else a
    raise ValueError(kind)


def eval_sog_by_names(g, assign):
    """Plain recursive evaluation of every output and register D-pin."""
    memo = {}

    def val(v):
        if v in memo:
            return memo[v]
        k, fi = g.kinds[v], g.fanins[v]
        if k in (INPUT, REG):
            r = assign[g.names[v]]
        elif k == CONST0:
            r = 0
        elif k == CONST1:
            r = 1
        elif k == AND2:
            r = val(fi[0]) & val(fi[1])
        elif k == OR2:
            r = val(fi[0]) | val(fi[1])
        elif k == XOR2:
            r = val(fi[0]) ^ val(fi[1])
        elif k == NOT:
            r = 1 - val(fi[0])
        elif k == MUX2:
            r = val(fi[1]) if val(fi[0]) else val(fi[2])
        else:  # OUTPUT
            r = val(fi[0])
        memo[v] = r
        return r

    out = {g.names[o]: val(o) for o in g.outputs}
    out.update({"D:" + g.names[r]: val(g.fanins[r][0]) for r in g.regs})
    return out
