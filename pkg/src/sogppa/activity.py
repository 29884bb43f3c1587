"""Switching activity: seeding, analytical propagation and a Monte-Carlo oracle.

Each node carries a static probability ``P`` (fraction of time at logic 1) and
a toggle rate ``D`` (expected transitions per clock cycle). Propagation treats
fan-ins as independent and applies the boolean-difference rule
``D(y) = sum_i P(dy/dx_i) * D(x_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sog import AND2, CONST0, CONST1, INPUT, MUX2, NOT, OR2, OUTPUT, REG, XOR2, SogGraph, evaluate
from .tech import TechConfig


class ActivityError(ValueError):
    """Missing or inconsistent activity data."""


@dataclass
class ActivityMap:
    P: np.ndarray
    D: np.ndarray
    source: str = "default"
    missing: list[str] = field(default_factory=list)

    def copy(self) -> "ActivityMap":
        return ActivityMap(self.P.copy(), self.D.copy(), self.source, list(self.missing))


def empty_seed(g: SogGraph) -> ActivityMap:
    """All-NaN seed with constants fixed."""
    n = len(g)
    P, D = np.full(n, np.nan), np.full(n, np.nan)
    k = g.kind_array
    P[k == CONST0], P[k == CONST1] = 0.0, 1.0
    D[(k == CONST0) | (k == CONST1)] = 0.0
    return ActivityMap(P, D)


def default_activity(g: SogGraph, t: TechConfig) -> ActivityMap:
    """Every INPUT and REG gets the configured default ``(P, D)``."""
    act = empty_seed(g)
    k = g.kind_array
    src = (k == INPUT) | (k == REG)
    act.P[src] = t.default_p
    act.D[src] = t.default_tr
    return act


def propagate_activity(g: SogGraph, seed: ActivityMap) -> ActivityMap:
    """One topological pass of the independence rules; sources keep their seeds."""
    n = len(g)
    P = np.asarray(seed.P, dtype=float).tolist()
    D = np.asarray(seed.D, dtype=float).tolist()
    if len(P) != n or len(D) != n:
        raise ActivityError(f"seed covers {len(P)} nodes, graph has {n}")
    kinds, fanins = g.kinds, g.fanins
    for v in g._topo:
        k = kinds[v]
        if k in (INPUT, REG, CONST0, CONST1):
            if P[v] != P[v] or D[v] != D[v]:
                raise ActivityError(f"source node {v} ({g.names.get(v, v)}) has no activity seed")
            if not (0.0 <= P[v] <= 1.0) or D[v] < 0:
                raise ActivityError(f"source node {v}: activity out of range (P={P[v]}, D={D[v]})")
            continue
        fi = fanins[v]
        if k == NOT:
            P[v], D[v] = 1.0 - P[fi[0]], D[fi[0]]
        elif k == OUTPUT:
            P[v], D[v] = P[fi[0]], D[fi[0]]
        elif k == MUX2:
            s, a, b = fi
            ps, pa, pb = P[s], P[a], P[b]
            P[v] = ps * pa + (1.0 - ps) * pb
            D[v] = (pa + pb - 2.0 * pa * pb) * D[s] + ps * D[a] + (1.0 - ps) * D[b]
        else:
            a, b = fi
            p1, p2, d1, d2 = P[a], P[b], D[a], D[b]
            if k == AND2:
                P[v], D[v] = p1 * p2, p2 * d1 + p1 * d2
            elif k == OR2:
                P[v], D[v] = p1 + p2 - p1 * p2, (1.0 - p2) * d1 + (1.0 - p1) * d2
            elif k == XOR2:
                P[v], D[v] = p1 + p2 - 2.0 * p1 * p2, d1 + d2
    return ActivityMap(np.clip(np.asarray(P), 0.0, 1.0), np.asarray(D), seed.source, list(seed.missing))


# Monte-Carlo oracle ---------------------------------------------------------

@dataclass
class MonteCarloActivity:
    P: np.ndarray
    D: np.ndarray
    P_se: np.ndarray
    D_se: np.ndarray
    samples: int


def _pack(bits: np.ndarray) -> np.ndarray:
    return np.packbits(bits, bitorder="little").view(np.uint64)


def _popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def measure_toggle_mc(g: SogGraph, seed: ActivityMap, samples: int = 1_000_000, rng_seed: int = 0,
                      chunk: int = 1 << 16) -> MonteCarloActivity:
    """Empirical ``(P, D)`` by zero-delay simulation of random source waveforms.

    Every source is a two-state Markov signal: its start-of-cycle value is
    drawn with probability ``P`` and it toggles at most once per cycle, with
    a toggle probability chosen so the stationary probability stays ``P`` and
    the mean toggle count is ``D`` (this needs ``D <= 2 * min(P, 1 - P)``).
    Source events are applied one at a time in a random order, and every node
    change after each event is counted. Samples are bit-packed 64 per word.
    """
    if samples < 10_000:
        raise ValueError("Monte-Carlo measurement needs at least 10^4 samples")
    if chunk % 64:
        raise ValueError("chunk must be a multiple of 64")
    n = len(g)
    k = g.kind_array
    sources = [v for v in range(n) if k[v] in (INPUT, REG)]
    sP, sD = np.asarray(seed.P, float), np.asarray(seed.D, float)
    for v in sources:
        p, d = sP[v], sD[v]
        if not np.isfinite(p) or not np.isfinite(d):
            raise ActivityError(f"source node {v} has no activity seed")
        if d > 2 * min(p, 1 - p) + 1e-12:
            raise ActivityError(f"source node {v}: D={d} not realizable with at most one toggle at P={p}")
    rng = np.random.default_rng(rng_seed)
    planes_needed = max(1, int(len(sources)).bit_length())
    sum_p = np.zeros(n)
    sum_c = np.zeros(n)
    sum_c2 = np.zeros(n)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        m64 = -(-m // 64) * 64
        words = m64 // 64
        valid = _pack(np.arange(m64) < m)
        zeros, ones = np.zeros(words, np.uint64), ~np.zeros(words, np.uint64)
        x0, tog = {}, {}
        for v in sources:
            p, d = sP[v], sD[v]
            b0 = rng.random(m64) < p
            q = np.where(b0, d / (2 * p) if p > 0 else 0.0, d / (2 * (1 - p)) if p < 1 else 0.0)
            x0[v], tog[v] = _pack(b0), _pack(rng.random(m64) < q) & valid
        values: list = [None] * n
        for v in range(n):
            if k[v] == CONST0:
                values[v] = zeros
            elif k[v] == CONST1:
                values[v] = ones
        for v in sources:
            values[v] = x0[v]
        evaluate(g, values)
        for v in range(n):
            sum_p[v] += _popcount(values[v] & valid)
        # bit-sliced per-lane transition counters
        counters = [[zeros.copy() for _ in range(planes_needed)] for _ in range(n)]
        for s in rng.permutation(sources):
            if not tog[s].any():
                continue
            old = values
            values = list(old)
            values[s] = old[s] ^ tog[s]
            evaluate(g, values)
            for v in range(n):
                carry = (old[v] ^ values[v]) & valid
                if not carry.any():
                    continue
                for plane in counters[v]:
                    nxt = plane & carry
                    plane ^= carry
                    carry = nxt
                    if not carry.any():
                        break
        for v in range(n):
            planes = counters[v]
            pc = [_popcount(pl) for pl in planes]
            sum_c[v] += sum(c << i for i, c in enumerate(pc))
            sq = 0
            for i in range(len(planes)):
                if not pc[i]:
                    continue
                sq += pc[i] << (2 * i)
                for j in range(i + 1, len(planes)):
                    if pc[j]:
                        sq += 2 * (_popcount(planes[i] & planes[j]) << (i + j))
            sum_c2[v] += sq
        done += m
    P = sum_p / samples
    D = sum_c / samples
    var_c = np.maximum(sum_c2 / samples - D ** 2, 0.0)
    return MonteCarloActivity(P, D, np.sqrt(P * (1 - P) / samples), np.sqrt(var_c / samples), samples)
