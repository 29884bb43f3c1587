"""Word-level reference semantics and SOG equivalence checking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netlist import WordNetlist, cell_port_widths
from .sog import SogGraph, _comb_cell_order, evaluate, seed_constants

_U = np.uint64


class EquivalenceCapError(ValueError):
    """Exhaustive checking requested over too many free bits."""


def _mask(w: int) -> np.uint64:
    return _U((1 << w) - 1) if w < 64 else _U(0xFFFFFFFFFFFFFFFF)


def _word(bits: list[np.ndarray]) -> np.ndarray:
    if len(bits) > 64:
        raise ValueError("reference evaluation supports words up to 64 bits")
    out = np.zeros(len(bits[0]), dtype=_U)
    for i, b in enumerate(bits):
        out |= b.astype(_U) << _U(i)
    return out


def _split(word: np.ndarray, w: int) -> list[np.ndarray]:
    return [((word >> _U(i)) & _U(1)).astype(bool) for i in range(w)]


def _sext(x: np.ndarray, w: int, to: int) -> np.ndarray:
    if to <= w:
        return x
    sign = (x >> _U(w - 1)) & _U(1)
    ext = _mask(to) & ~_mask(w)
    return np.where(sign.astype(bool), x | ext, x)


def _shift_amount(b: np.ndarray, w: int) -> tuple[np.ndarray, np.ndarray]:
    big = b >= _U(w)
    return big, np.where(big, _U(0), b)


def eval_cell(kind: str, params: dict, words: dict[str, np.ndarray]) -> np.ndarray:
    """Direct arithmetic semantics of one word-level cell on uint64 vectors."""
    ins, outs = cell_port_widths(kind, params)
    yw = outs.get("Y", outs.get("Q"))
    m = _mask(yw)
    a, b = words.get("A"), words.get("B")
    w = int(params.get("width", 0))
    signed = bool(params.get("signed", False))
    with np.errstate(over="ignore"):
        if kind == "add":
            return (a + b) & m
        if kind == "sub":
            return (a - b) & m
        if kind == "mul":
            if signed:
                a, b = _sext(a, w, yw), _sext(b, w, yw)
            return (a * b) & m
    if kind == "and":
        return a & b
    if kind == "or":
        return a | b
    if kind == "xor":
        return a ^ b
    if kind == "not":
        return ~a & m
    if kind == "reduce_and":
        return (a == _mask(w)).astype(_U)
    if kind == "reduce_or":
        return (a != 0).astype(_U)
    if kind == "reduce_xor":
        return (np.bitwise_count(a) & 1).astype(_U)
    if kind in ("eq", "lt", "ge"):
        if kind == "eq":
            return (a == b).astype(_U)
        if signed:
            flip = _U(1) << _U(w - 1)
            a, b = a ^ flip, b ^ flip
        return (a < b).astype(_U) if kind == "lt" else (a >= b).astype(_U)
    if kind == "shl":
        big, s = _shift_amount(b, w)
        return np.where(big, _U(0), (a << s) & m)
    if kind == "shr":
        big, s = _shift_amount(b, w)
        logical = a >> s
        if not signed:
            return np.where(big, _U(0), logical)
        neg = ((a >> _U(w - 1)) & _U(1)).astype(bool)
        fill = ~(m >> s) & m
        shifted = np.where(neg, logical | fill, logical)
        return np.where(big, np.where(neg, m, _U(0)), shifted)
    if kind == "mux":
        return np.where(words["S"].astype(bool), b, a)
    if kind == "concat":
        return a | (b << _U(int(params["a_width"])))
    if kind == "slice":
        return (a >> _U(int(params.get("offset", 0)))) & m
    raise ValueError(f"no reference semantics for {kind!r}")


def evaluate_word_netlist(flat: WordNetlist, inputs: dict[str, np.ndarray],
                          state: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """One clock cycle of the flat netlist.

    ``inputs`` maps input bit names (``port[i]``) and ``state`` maps register
    bit names (``cell[i]``) to bool vectors. Returns bool vectors for every
    output bit name and every register's next state (keyed ``cell[i]``).
    """
    top = flat.top_module
    n = len(next(iter(inputs.values()))) if inputs else len(next(iter(state.values())))
    zeros, ones = np.zeros(n, bool), np.ones(n, bool)
    nets: dict = {}

    def bit(b):
        if isinstance(b, str):
            return ones if b == "1" else zeros
        return nets[b]

    for pname, p in top.ports.items():
        if p.dir == "input":
            for i, b in enumerate(p.bits):
                nets[b] = inputs[f"{pname}[{i}]"]
    cells = list(top.cells.values())
    regs = [c for c in cells if c.kind == "reg"]
    for c in regs:
        for i, b in enumerate(c.conns["Q"]):
            nets[b] = state[f"{c.name}[{i}]"]
    for c in _comb_cell_order(cells):
        ins, outs = cell_port_widths(c.kind, c.params)
        words = {p: _word([bit(b) for b in c.conns[p]]) for p in ins}
        y = eval_cell(c.kind, c.params, words)
        for b, v in zip(c.conns["Y"], _split(y, outs["Y"])):
            nets[b] = v
    result = {}
    for pname, p in top.ports.items():
        if p.dir == "output":
            for i, b in enumerate(p.bits):
                result[f"{pname}[{i}]"] = bit(b)
    for c in regs:
        for i, b in enumerate(c.conns["D"]):
            result[f"{c.name}[{i}]"] = bit(b)
    return result


def evaluate_sog_cycle(g: SogGraph, inputs: dict[str, np.ndarray], state: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Same contract as :func:`evaluate_word_netlist`, on the SOG."""
    n = len(next(iter(inputs.values()))) if inputs else len(next(iter(state.values())))
    values: list = [None] * len(g)
    seed_constants(g, values, np.zeros(n, bool), np.ones(n, bool))
    for nid in g.inputs:
        values[nid] = inputs[g.names[nid]]
    for nid in g.regs:
        values[nid] = state[g.names[nid]]
    evaluate(g, values)
    out = {g.names[o]: values[o] for o in g.outputs}
    for r in g.regs:
        out[g.names[r]] = values[g.fanins[r][0]]
    return out


@dataclass
class EquivalenceResult:
    equivalent: bool
    vectors: int
    counterexample: dict | None = None

    def __bool__(self) -> bool:
        return self.equivalent


def _free_bits(flat: WordNetlist) -> tuple[list[str], list[str]]:
    top = flat.top_module
    ins = [f"{pn}[{i}]" for pn, p in top.ports.items() if p.dir == "input" for i in range(p.width)]
    st = [f"{c.name}[{i}]" for c in top.cells.values() if c.kind == "reg" for i in range(c.width)]
    return ins, st


def check_equivalence(flat: WordNetlist, g: SogGraph, mode: str = "exhaustive", samples: int = 4096,
                      seed: int = 0, cap: int = 16) -> EquivalenceResult:
    """Compare word-level semantics against SOG simulation for one cycle.

    Free variables are all input bits and all register states; compared
    signals are every output bit and every register's next state.
    """
    in_names, st_names = _free_bits(flat)
    names = in_names + st_names
    nbits = len(names)
    if mode == "exhaustive":
        if nbits > cap:
            raise EquivalenceCapError(f"{nbits} free bits exceed the exhaustive cap of {cap}")
        nvec = 1 << nbits
        idx = np.arange(nvec, dtype=np.int64)
        cols = [((idx >> i) & 1).astype(bool) for i in range(nbits)]
    elif mode == "sampled":
        nvec = samples
        rng = np.random.default_rng(seed)
        cols = list(rng.integers(0, 2, size=(nbits, nvec), dtype=np.uint8).astype(bool)) if nbits else []
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if nbits == 0:
        cols, nvec = [], 1
    assign = dict(zip(names, cols))
    inputs = {k: assign[k] for k in in_names}
    state = {k: assign[k] for k in st_names}
    if not inputs and not state:
        inputs = {"__dummy__": np.zeros(nvec, bool)}
    ref = evaluate_word_netlist(flat, inputs, state)
    got = evaluate_sog_cycle(g, inputs, state)
    bad = np.zeros(nvec, bool)
    for k, v in ref.items():
        if k not in got:
            return EquivalenceResult(False, nvec, {"missing_signal": k})
        bad |= np.broadcast_to(v, (nvec,)) != np.broadcast_to(got[k], (nvec,))
    if not bad.any():
        return EquivalenceResult(True, nvec)
    i = int(np.argmax(bad))
    cex = {
        "vector": i,
        "inputs": {k: int(assign[k][i]) for k in in_names},
        "state": {k: int(assign[k][i]) for k in st_names},
        "mismatches": {k: {"expected": int(np.broadcast_to(v, (nvec,))[i]),
                           "got": int(np.broadcast_to(got[k], (nvec,))[i])}
                       for k, v in ref.items()
                       if np.broadcast_to(v, (nvec,))[i] != np.broadcast_to(got[k], (nvec,))[i]},
    }
    return EquivalenceResult(False, nvec, cex)
