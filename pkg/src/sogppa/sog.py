"""Bit-level simple operator graph (SOG).

Nodes are single-bit AND2/OR2/XOR2/NOT/MUX2 operators, single-bit registers,
primary input/output bits and the two constants. ``MUX2`` fan-ins are
``(select, a, b)`` and the node computes ``select ? a : b``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .netlist import Provenance, WordCell, WordNetlist, cell_port_widths, NetlistError

AND2, OR2, XOR2, NOT, MUX2, REG, INPUT, OUTPUT, CONST0, CONST1 = range(10)
KIND_NAMES = ("AND2", "OR2", "XOR2", "NOT", "MUX2", "REG", "INPUT", "OUTPUT", "CONST0", "CONST1")
KIND_CODES = {name: i for i, name in enumerate(KIND_NAMES)}
FEATURE_KINDS = KIND_NAMES[:6]
COMB_KINDS = KIND_NAMES[:5]
ARITY = {AND2: 2, OR2: 2, XOR2: 2, NOT: 1, MUX2: 3, REG: 1, INPUT: 0, OUTPUT: 1, CONST0: 0, CONST1: 0}
SOURCE_KINDS = (REG, INPUT, CONST0, CONST1)

SOG_FORMAT_VERSION = 1


class SogError(ValueError):
    """Structurally invalid SOG content or file."""


class CycleError(SogError):
    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__("combinational cycle through nodes " + " -> ".join(map(str, cycle)))


@dataclass(eq=False)
class SogGraph:
    kinds: list[int] = field(default_factory=list)
    fanins: list[tuple[int, ...]] = field(default_factory=list)
    tags: list[int] = field(default_factory=list)
    tag_names: list[str] = field(default_factory=lambda: ["top"])
    names: dict[int, str] = field(default_factory=dict)
    inputs: list[int] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)
    regs: list[int] = field(default_factory=list)
    tag_modules: dict[str, str] = field(default_factory=dict)

    def add_node(self, kind: int, fanins: tuple[int, ...] = (), tag: int = 0, name: str | None = None) -> int:
        nid = len(self.kinds)
        self.kinds.append(kind)
        self.fanins.append(tuple(fanins))
        self.tags.append(tag)
        if name is not None:
            self.names[nid] = name
        if kind == INPUT:
            self.inputs.append(nid)
        elif kind == OUTPUT:
            self.outputs.append(nid)
        elif kind == REG:
            self.regs.append(nid)
        self._invalidate()
        return nid

    def _invalidate(self) -> None:
        for attr in ("kind_array", "fanout_counts", "fanout_lists", "_topo", "name_index"):
            self.__dict__.pop(attr, None)

    def __len__(self) -> int:
        return len(self.kinds)

    @cached_property
    def kind_array(self) -> np.ndarray:
        return np.asarray(self.kinds, dtype=np.int8)

    @cached_property
    def fanout_counts(self) -> np.ndarray:
        """Number of fan-out edges per node (a node feeding both pins of a gate counts twice)."""
        flat = [f for fi in self.fanins for f in fi]
        return np.bincount(np.asarray(flat, dtype=np.int64), minlength=len(self.kinds)).astype(np.int64)

    @cached_property
    def fanout_lists(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.kinds]
        for v, fi in enumerate(self.fanins):
            for u in fi:
                out[u].append(v)
        return out

    @cached_property
    def name_index(self) -> dict[str, int]:
        return {name: nid for nid, name in self.names.items()}

    @cached_property
    def _topo(self) -> list[int]:
        return _topo_order(self)

    def tag_of(self, nid: int) -> str:
        return self.tag_names[self.tags[nid]]

    def validate(self) -> None:
        n = len(self.kinds)
        for v, (k, fi) in enumerate(zip(self.kinds, self.fanins)):
            if k not in ARITY:
                raise SogError(f"node {v}: unknown kind {k}")
            if len(fi) != ARITY[k]:
                raise SogError(f"node {v}: {KIND_NAMES[k]} needs {ARITY[k]} fan-ins, has {len(fi)}")
            if any(not 0 <= u < n for u in fi):
                raise SogError(f"node {v}: fan-in out of range")
            if any(self.kinds[u] == OUTPUT for u in fi):
                raise SogError(f"node {v}: OUTPUT nodes cannot drive other nodes")


def _topo_order(g: SogGraph) -> list[int]:
    """Kahn's algorithm; REG fan-in edges do not constrain the order."""
    n = len(g.kinds)
    indeg = [0] * n
    succ: list[list[int]] = [[] for _ in range(n)]
    for v, (k, fi) in enumerate(zip(g.kinds, g.fanins)):
        if k == REG:
            continue
        indeg[v] = len(fi)
        for u in fi:
            succ[u].append(v)
    queue = deque(v for v in range(n) if indeg[v] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    if len(order) != n:
        raise CycleError(_find_cycle(g, {v for v in range(n) if indeg[v] > 0}))
    return order


def _find_cycle(g: SogGraph, remaining: set[int]) -> list[int]:
    start = min(remaining)
    path, index = [], {}
    v = start
    while v not in index:
        index[v] = len(path)
        path.append(v)
        v = min(u for u in g.fanins[v] if u in remaining)
    return path[index[v]:] + [v]


def topo_order(g: SogGraph) -> list[int]:
    """Node order where every combinational node follows its fan-ins."""
    return list(g._topo)


def sog_feature_vector(g: SogGraph) -> np.ndarray:
    """Counts of (AND2, OR2, XOR2, NOT, MUX2, REG)."""
    if not g.kinds:
        return np.zeros(6, dtype=np.int64)
    return np.bincount(g.kind_array.astype(np.int64), minlength=10)[:6].astype(np.int64)


# --------------------------------------------------------------------------
# lowering

class _Lowerer:
    def __init__(self, g: SogGraph):
        self.g = g
        self.tag = 0
        self._const: dict[int, int] = {}

    def node(self, kind: int, *fanins: int) -> int:
        return self.g.add_node(kind, fanins, self.tag)

    def const(self, value: int) -> int:
        kind = CONST1 if value else CONST0
        if kind not in self._const:
            self._const[kind] = self.g.add_node(kind, (), 0)
        return self._const[kind]

    def tree(self, kind: int, bits: list[int]) -> int:
        level = list(bits)
        while len(level) > 1:
            nxt = [self.node(kind, level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
            if len(level) % 2:
                nxt.append(level[-1])
            level = nxt
        return level[0]

    def ripple(self, a: list, b: list, cin=None) -> tuple[list, int | None]:
        """Ripple-carry adder over optional bits (``None`` is a known zero)."""
        out = []
        c = cin
        for x, y in zip(a, b):
            present = [v for v in (x, y) if v is not None]
            if c is not None and len(present) == 2:
                t = self.node(XOR2, x, y)
                s = self.node(XOR2, t, c)
                gen = self.node(AND2, x, y)
                prop = self.node(AND2, t, c)
                c = self.node(OR2, gen, prop)
            elif c is not None and len(present) == 1:
                s = self.node(XOR2, present[0], c)
                c = self.node(AND2, present[0], c)
            elif len(present) == 2:
                s = self.node(XOR2, x, y)
                c = self.node(AND2, x, y)
            elif len(present) == 1:
                s = present[0]
            else:
                s, c = c, None
            out.append(s)
        return out, c

    def carry_ge(self, a: list[int], b: list[int], signed: bool) -> int:
        """Carry-out of ``a + ~b + 1``: 1 iff ``a >= b``."""
        nb = [self.node(NOT, x) for x in b]
        a = list(a)
        if signed:
            # sign-bit pre-swap: invert a's MSB and feed b's MSB uninverted
            a[-1] = self.node(NOT, a[-1])
            nb[-1] = b[-1]
        c = self.const(1)
        for x, y in zip(a, nb):
            t = self.node(XOR2, x, y)
            gen = self.node(AND2, x, y)
            prop = self.node(AND2, t, c)
            c = self.node(OR2, gen, prop)
        return c

    def shift(self, a: list[int], amount: list[int], left: bool, arith: bool) -> list[int]:
        w = len(a)
        fill = a[-1] if arith else self.const(0)
        if all(self.g.kinds[s] in (CONST0, CONST1) for s in amount):
            k = sum(1 << i for i, s in enumerate(amount) if self.g.kinds[s] == CONST1)
            return _static_shift(a, k, left, fill)
        cur = list(a)
        stage_bits = []
        overflow = []
        for j, s in enumerate(amount):
            if (1 << j) < w:
                stage_bits.append((j, s))
            else:
                overflow.append(s)
        for j, s in stage_bits:
            shifted = _static_shift(cur, 1 << j, left, fill)
            cur = [self.node(MUX2, s, sh, c) for sh, c in zip(shifted, cur)]
        if overflow:
            o = self.tree(OR2, overflow)
            cur = [self.node(MUX2, o, fill, c) for c in cur]
        return cur


def _static_shift(a: list[int], k: int, left: bool, fill: int) -> list[int]:
    w = len(a)
    if left:
        return [a[i - k] if i - k >= 0 else fill for i in range(w)]
    return [a[i + k] if i + k < w else fill for i in range(w)]


def _comb_cell_order(cells: list[WordCell]) -> list[WordCell]:
    driver: dict[int, int] = {}
    for i, c in enumerate(cells):
        if c.kind == "reg":
            continue
        _, outs = cell_port_widths(c.kind, c.params)
        for p in outs:
            for b in c.conns[p]:
                driver[b] = i
    comb = [i for i, c in enumerate(cells) if c.kind != "reg"]
    deps: dict[int, set[int]] = {}
    users: dict[int, list[int]] = {i: [] for i in comb}
    for i in comb:
        c = cells[i]
        ins, _ = cell_port_widths(c.kind, c.params)
        d = {driver[b] for p in ins for b in c.conns[p] if isinstance(b, int) and b in driver}
        deps[i] = d
        for j in d:
            users[j].append(i)
    indeg = {i: len(deps[i]) for i in comb}
    queue = deque(i for i in comb if indeg[i] == 0)
    order = []
    while queue:
        i = queue.popleft()
        order.append(i)
        for j in users[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if len(order) != len(comb):
        stuck = sorted(cells[i].name for i in comb if indeg[i] > 0)
        raise NetlistError("combinational loop among cells: " + ", ".join(stuck[:8]))
    return [cells[i] for i in order]


def lower_to_sog(flat: WordNetlist, provenance: Provenance | None = None) -> SogGraph:
    """Bit-blast a flat word-level netlist into a SOG."""
    if not flat.is_flat():
        raise NetlistError("lower_to_sog needs a flat netlist; call flatten_with_provenance first")
    top = flat.top_module
    g = SogGraph()
    if provenance is not None:
        g.tag_modules = dict(provenance.instance_modules)
    tag_ids = {"top": 0}

    def tag_index(cell_name: str) -> int:
        t = provenance.tags.get(cell_name, "top") if provenance else "top"
        if t not in tag_ids:
            tag_ids[t] = len(g.tag_names)
            g.tag_names.append(t)
        return tag_ids[t]

    L = _Lowerer(g)
    net: dict[int, int] = {}

    def bit(b) -> int:
        if isinstance(b, str):
            return L.const(int(b))
        return net[b]

    for pname, p in top.ports.items():
        if p.dir == "input":
            for i, b in enumerate(p.bits):
                net[b] = g.add_node(INPUT, (), 0, f"{pname}[{i}]")
    cells = list(top.cells.values())
    regs = [c for c in cells if c.kind == "reg"]
    for c in regs:
        t = tag_index(c.name)
        for i, b in enumerate(c.conns["Q"]):
            net[b] = g.add_node(REG, (), t, f"{c.name}[{i}]")
    for c in _comb_cell_order(cells):
        L.tag = tag_index(c.name)
        ins = {p: [bit(b) for b in c.conns[p]] for p in cell_port_widths(c.kind, c.params)[0]}
        ys = _lower_cell(L, c, ins)
        for b, nid in zip(c.conns["Y"], ys):
            net[b] = nid
    for c in regs:
        for nid, b in zip((net[q] for q in c.conns["Q"]), c.conns["D"]):
            g.fanins[nid] = (bit(b),)
    L.tag = 0
    for pname, p in top.ports.items():
        if p.dir == "output":
            for i, b in enumerate(p.bits):
                g.add_node(OUTPUT, (bit(b),), 0, f"{pname}[{i}]")
    g._invalidate()
    return g


def _lower_cell(L: _Lowerer, c: WordCell, ins: dict[str, list[int]]) -> list[int]:
    k = c.kind
    a = ins.get("A")
    b = ins.get("B")
    if k in ("and", "or", "xor"):
        op = {"and": AND2, "or": OR2, "xor": XOR2}[k]
        return [L.node(op, x, y) for x, y in zip(a, b)]
    if k == "not":
        return [L.node(NOT, x) for x in a]
    if k == "add":
        return L.ripple(a, b)[0]
    if k == "sub":
        nb = [L.node(NOT, y) for y in b]
        return L.ripple(a, nb, L.const(1))[0]
    if k == "mul":
        return _lower_mul(L, a, b, int(c.params.get("y_width", len(a))), c.signed)
    if k in ("reduce_and", "reduce_or", "reduce_xor"):
        op = {"reduce_and": AND2, "reduce_or": OR2, "reduce_xor": XOR2}[k]
        return [L.tree(op, a)]
    if k == "eq":
        diff = [L.node(XOR2, x, y) for x, y in zip(a, b)]
        return [L.node(NOT, L.tree(OR2, diff))]
    if k == "ge":
        return [L.carry_ge(a, b, c.signed)]
    if k == "lt":
        return [L.node(NOT, L.carry_ge(a, b, c.signed))]
    if k in ("shl", "shr"):
        return L.shift(a, b, left=(k == "shl"), arith=(k == "shr" and c.signed))
    if k == "mux":
        s = ins["S"][0]
        return [L.node(MUX2, s, y, x) for x, y in zip(a, b)]
    if k == "concat":
        return a + b
    if k == "slice":
        off = int(c.params.get("offset", 0))
        return a[off:off + int(c.params["y_width"])]
    raise NetlistError(f"no lowering template for {k!r}")


def _lower_mul(L: _Lowerer, a: list[int], b: list[int], yw: int, signed: bool) -> list[int]:
    if signed and yw > len(a):
        a = a + [a[-1]] * (yw - len(a))
        b = b + [b[-1]] * (yw - len(b))
    acc: list = [None] * yw
    for i, bi in enumerate(b[:yw]):
        row: list = [None] * yw
        for j, aj in enumerate(a):
            if i + j < yw:
                row[i + j] = L.node(AND2, aj, bi)
        if i == 0:
            acc = row
        else:
            hi, _ = L.ripple(acc[i:], row[i:])
            acc = acc[:i] + hi
    return [x if x is not None else L.const(0) for x in acc]


# --------------------------------------------------------------------------
# simulation

def evaluate(g: SogGraph, values: list) -> list:
    """Fill ``values`` for every non-source node, in topological order.

    Source entries (INPUT, REG, CONST) must be set by the caller; values may
    be numpy bool arrays or packed ``uint64`` words (all ops are bitwise).
    """
    kinds, fanins = g.kinds, g.fanins
    for v in g._topo:
        k = kinds[v]
        if k == AND2:
            x, y = fanins[v]
            values[v] = values[x] & values[y]
        elif k == OR2:
            x, y = fanins[v]
            values[v] = values[x] | values[y]
        elif k == XOR2:
            x, y = fanins[v]
            values[v] = values[x] ^ values[y]
        elif k == NOT:
            values[v] = ~values[fanins[v][0]]
        elif k == MUX2:
            s, x, y = fanins[v]
            vs = values[s]
            values[v] = (vs & values[x]) | (~vs & values[y])
        elif k == OUTPUT:
            values[v] = values[fanins[v][0]]
    return values


def seed_constants(g: SogGraph, values: list, zeros, ones) -> None:
    for v, k in enumerate(g.kinds):
        if k == CONST0:
            values[v] = zeros
        elif k == CONST1:
            values[v] = ones


@dataclass
class SimResult:
    outputs: np.ndarray   # (cycles, n_outputs), order of g.outputs
    trace: np.ndarray     # (cycles, n_nodes)


def simulate_sog(g: SogGraph, inputs, reg_init=None, cycles: int | None = None) -> SimResult:
    """Cycle-accurate simulation with synchronous registers.

    ``inputs`` is a sequence of per-cycle bit vectors in ``g.inputs`` order;
    ``reg_init`` gives the initial register bits in ``g.regs`` order.
    """
    inputs = [list(row) for row in inputs]
    if cycles is None:
        cycles = len(inputs)
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if len(inputs) < cycles:
        raise ValueError(f"input stream has {len(inputs)} cycles, {cycles} requested")
    for t in range(cycles):
        if len(inputs[t]) != len(g.inputs):
            raise ValueError(f"cycle {t}: expected {len(g.inputs)} input bits, got {len(inputs[t])}")
    state = [bool(x) for x in (reg_init if reg_init is not None else [0] * len(g.regs))]
    if len(state) != len(g.regs):
        raise ValueError(f"reg_init needs {len(g.regs)} bits")
    n = len(g)
    trace = np.zeros((cycles, n), dtype=bool)
    F, T = np.bool_(False), np.bool_(True)
    for t in range(cycles):
        values: list = [None] * n
        seed_constants(g, values, F, T)
        for nid, bit in zip(g.inputs, inputs[t]):
            values[nid] = np.bool_(bit)
        for nid, bit in zip(g.regs, state):
            values[nid] = np.bool_(bit)
        evaluate(g, values)
        trace[t] = values
        state = [bool(values[g.fanins[r][0]]) for r in g.regs]
    return SimResult(outputs=trace[:, g.outputs] if g.outputs else np.zeros((cycles, 0), bool), trace=trace)


# --------------------------------------------------------------------------
# serialization

def sog_to_dict(g: SogGraph) -> dict:
    return {
        "version": SOG_FORMAT_VERSION,
        "nodes": [{"id": v, "kind": KIND_NAMES[k], "tag": g.tag_names[t], **({"name": g.names[v]} if v in g.names else {})}
                  for v, (k, t) in enumerate(zip(g.kinds, g.tags))],
        "edges": [[u, v] for v, fi in enumerate(g.fanins) for u in fi],
        "regs": list(g.regs),
        "inputs": list(g.inputs),
        "outputs": list(g.outputs),
        "tag_modules": dict(sorted(g.tag_modules.items())),
    }


def sog_from_dict(data: dict) -> SogGraph:
    if data.get("version") != SOG_FORMAT_VERSION:
        raise SogError(f"unsupported SOG file version {data.get('version')!r}")
    g = SogGraph(tag_modules=dict(data.get("tag_modules", {})))
    tag_ids = {"top": 0}
    nodes = sorted(data["nodes"], key=lambda d: d["id"])
    if [d["id"] for d in nodes] != list(range(len(nodes))):
        raise SogError("node ids must be dense")
    fanins: list[list[int]] = [[] for _ in nodes]
    for u, v in data["edges"]:
        fanins[v].append(u)
    for d in nodes:
        if d["kind"] not in KIND_CODES:
            raise SogError(f"unknown node kind {d['kind']!r}")
        t = d.get("tag", "top")
        if t not in tag_ids:
            tag_ids[t] = len(g.tag_names)
            g.tag_names.append(t)
        g.kinds.append(KIND_CODES[d["kind"]])
        g.fanins.append(tuple(fanins[d["id"]]))
        g.tags.append(tag_ids[t])
        if "name" in d:
            g.names[d["id"]] = d["name"]
    g.regs, g.inputs, g.outputs = list(data["regs"]), list(data["inputs"]), list(data["outputs"])
    g.validate()
    return g


def save_sog(g: SogGraph, path) -> None:
    with open(path, "w") as f:
        json.dump(sog_to_dict(g), f, separators=(",", ":"))
        f.write("\n")


def load_sog(path) -> SogGraph:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise SogError(f"malformed SOG file: {e}") from None
    return sog_from_dict(data)
