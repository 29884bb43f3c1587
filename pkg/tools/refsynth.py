"""Reference gate-level flow that produces the shipped ground-truth labels.

There is no commercial synthesizer in this repository, so labels come from a
separate, deliberately different model of a synthesized netlist:

* logic optimization: constant propagation, double-inversion removal,
  structural hashing and dead-logic removal (including dead registers);
* mapping: an AND/OR/XOR driving a single inverter becomes NAND/NOR/XNOR;
* a three-size cell library with load-dependent delay, superlinear wire load
  and buffer trees on high-fanout nets;
* timing-driven upsizing of violating cells;
* static timing with clock-to-Q and setup time;
* power from bit-parallel random simulation, including internal energy,
  clock-pin energy, a depth-dependent glitch factor and leakage;
* placement labels from a wirelength-flavoured perturbation of the above.

None of the coefficients here are shared with the package's technology file.
"""

from __future__ import annotations

import hashlib
import math
from collections import defaultdict

import numpy as np

from sogppa.sog import AND2, CONST0, CONST1, INPUT, MUX2, NOT, OR2, OUTPUT, REG, XOR2, SogGraph

# gate kinds of the mapped netlist
G_AND, G_OR, G_XOR, G_NOT, G_MUX, G_NAND, G_NOR, G_XNOR, G_DFF, G_PI, G_PO, G_T0, G_T1 = range(13)
_FROM_SOG = {AND2: G_AND, OR2: G_OR, XOR2: G_XOR, NOT: G_NOT, MUX2: G_MUX, REG: G_DFF, INPUT: G_PI,
             OUTPUT: G_PO, CONST0: G_T0, CONST1: G_T1}

# name: (intrinsic ns, drive kohm at X1, input cap fF, area um2 at X1, leakage nW, internal fJ)
LIB = {
    G_AND: (0.024, 0.0052, 0.92, 1.10, 28.0, 0.55),
    G_OR: (0.031, 0.0058, 0.95, 1.10, 26.0, 0.60),
    G_XOR: (0.041, 0.0071, 1.55, 1.70, 41.0, 1.05),
    G_NOT: (0.008, 0.0040, 0.85, 0.55, 15.0, 0.25),
    G_MUX: (0.047, 0.0064, 1.30, 1.95, 66.0, 1.20),
    G_NAND: (0.015, 0.0048, 0.95, 0.82, 19.0, 0.40),
    G_NOR: (0.022, 0.0061, 1.00, 0.82, 17.0, 0.45),
    G_XNOR: (0.040, 0.0070, 1.55, 1.70, 40.0, 1.00),
    G_DFF: (0.078, 0.0055, 1.05, 4.522, 82.0, 2.10),
}
SETUP = 0.035
CLK_PIN_FJ = 1.6
BUF = (0.020, 0.0030, 0.90, 0.80, 18.0, 0.35)
MAX_FANOUT = 8
SIZES = (1.0, 2.0, 4.0)
VDD = 1.1


def _wire_cap(fo: int) -> float:
    return 0.35 * fo ** 1.15 if fo else 0.0


class GateNetlist:
    def __init__(self):
        self.kind: list[int] = []
        self.fanin: list[list[int]] = []
        self.name: dict[int, str] = {}
        self.tag: list[str] = []
        self.size: list[float] = []

    def add(self, kind, fanin, tag, name=None) -> int:
        i = len(self.kind)
        self.kind.append(kind)
        self.fanin.append(list(fanin))
        self.tag.append(tag)
        self.size.append(1.0)
        if name is not None:
            self.name[i] = name
        return i

    def __len__(self):
        return len(self.kind)


def _topo(n: GateNetlist) -> list[int]:
    indeg = [0] * len(n)
    succ = defaultdict(list)
    for v in range(len(n)):
        if n.kind[v] == G_DFF:
            continue
        indeg[v] = len(n.fanin[v])
        for u in n.fanin[v]:
            succ[u].append(v)
    order = [v for v in range(len(n)) if indeg[v] == 0]
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                order.append(v)
    return order


def optimize(g: SogGraph) -> GateNetlist:
    """Constant propagation, inverter folding, hashing and dead-logic removal."""
    topo = g._topo
    rep: dict[int, int] = {}
    out = GateNetlist()
    t0 = out.add(G_T0, [], "top")
    t1 = out.add(G_T1, [], "top")
    const = {t0: 0, t1: 1}
    inv_of: dict[int, int] = {}
    hashed: dict[tuple, int] = {}

    def tag(v):
        return g.tag_names[g.tags[v]]

    def mk(kind, fi, v):
        key = (kind, tuple(sorted(fi)) if kind in (G_AND, G_OR, G_XOR) else tuple(fi))
        if kind != G_DFF and key in hashed:
            return hashed[key]
        i = out.add(kind, fi, tag(v))
        if kind != G_DFF:
            hashed[key] = i
        return i

    def mk_not(x, v):
        if x in const:
            return t1 if const[x] == 0 else t0
        if x in inv_of:
            return inv_of[x]
        i = mk(G_NOT, [x], v)
        inv_of[x] = i
        inv_of[i] = x
        return i

    regs = {}
    for v in topo:
        k = g.kinds[v]
        if k == INPUT:
            rep[v] = out.add(G_PI, [], "top", g.names.get(v))
        elif k == CONST0:
            rep[v] = t0
        elif k == CONST1:
            rep[v] = t1
        elif k == REG:
            rep[v] = out.add(G_DFF, [None], tag(v), g.names.get(v))
            regs[v] = rep[v]
        elif k == OUTPUT:
            rep[v] = out.add(G_PO, [rep[g.fanins[v][0]]], "top", g.names.get(v))
        elif k == NOT:
            rep[v] = mk_not(rep[g.fanins[v][0]], v)
        elif k == MUX2:
            s, a, b = (rep[x] for x in g.fanins[v])
            if s in const:
                rep[v] = a if const[s] else b
            elif a == b:
                rep[v] = a
            elif a in const and b in const:
                rep[v] = s if const[a] else mk_not(s, v)
            else:
                rep[v] = mk(G_MUX, [s, a, b], v)
        else:
            a, b = (rep[x] for x in g.fanins[v])
            ca, cb = const.get(a), const.get(b)
            if k == AND2:
                if ca == 0 or cb == 0 or inv_of.get(a) == b:
                    rep[v] = t0
                elif ca == 1 or a == b:
                    rep[v] = b if ca == 1 else a
                elif cb == 1:
                    rep[v] = a
                else:
                    rep[v] = mk(G_AND, [a, b], v)
            elif k == OR2:
                if ca == 1 or cb == 1 or inv_of.get(a) == b:
                    rep[v] = t1
                elif ca == 0 or a == b:
                    rep[v] = b if ca == 0 else a
                elif cb == 0:
                    rep[v] = a
                else:
                    rep[v] = mk(G_OR, [a, b], v)
            else:
                if a == b:
                    rep[v] = t0
                elif inv_of.get(a) == b:
                    rep[v] = t1
                elif ca is not None:
                    rep[v] = b if ca == 0 else mk_not(b, v)
                elif cb is not None:
                    rep[v] = a if cb == 0 else mk_not(a, v)
                else:
                    rep[v] = mk(G_XOR, [a, b], v)
    for v, d in regs.items():
        out.fanin[d] = [rep[g.fanins[v][0]]]
    return _sweep(out)


def _sweep(n: GateNetlist) -> GateNetlist:
    """Keep only logic that can reach a primary output (through registers)."""
    live = [False] * len(n)
    stack = [v for v in range(len(n)) if n.kind[v] == G_PO]
    for v in stack:
        live[v] = True
    while stack:
        v = stack.pop()
        for u in n.fanin[v]:
            if not live[u]:
                live[u] = True
                stack.append(u)
    # constant registers (D tied to a constant and reset-free) stay; they are rare
    keep = [v for v in range(len(n)) if live[v] or n.kind[v] == G_PI]
    idx = {v: i for i, v in enumerate(keep)}
    out = GateNetlist()
    for v in keep:
        out.add(n.kind[v], [], n.tag[v], n.name.get(v))
    for v in keep:
        out.fanin[idx[v]] = [idx[u] for u in n.fanin[v]]
    return out


def techmap(n: GateNetlist) -> GateNetlist:
    """Fold an inverter into its driver when the driver feeds nothing else."""
    fo = [0] * len(n)
    for fi in n.fanin:
        for u in fi:
            fo[u] += 1
    fold = {G_AND: G_NAND, G_OR: G_NOR, G_XOR: G_XNOR}
    alias = {}
    for v in range(len(n)):
        if n.kind[v] == G_NOT:
            u = n.fanin[v][0]
            if n.kind[u] in fold and fo[u] == 1:
                n.kind[v] = fold[n.kind[u]]
                n.fanin[v] = list(n.fanin[u])
                alias[u] = v
    if alias:
        for v in range(len(n)):
            n.fanin[v] = [alias.get(u, u) for u in n.fanin[v]]
        return _sweep(n)
    return n


def _params(kind, size):
    d0, r, cin, area, leak, e = BUF if kind is None else LIB[kind]
    return d0, r / size, cin * size ** 0.85, area * (0.55 + 0.45 * size), leak * size, e * size ** 0.7


class Timing:
    def __init__(self, n: GateNetlist):
        self.n = n
        self.topo = _topo(n)
        self.fanout = defaultdict(list)
        for v in range(len(n)):
            for u in n.fanin[v]:
                self.fanout[u].append(v)

    def delays(self) -> np.ndarray:
        n = self.n
        d = np.zeros(len(n))
        for v in range(len(n)):
            k = n.kind[v]
            if k in (G_PI, G_PO, G_T0, G_T1):
                continue
            d0, r, *_ = _params(k, n.size[v])
            sinks = self.fanout[v]
            fo = len(sinks)
            if fo > MAX_FANOUT:
                stages = math.ceil(math.log(fo, MAX_FANOUT))
                bd0, br, bcin, *_ = _params(None, 2.0)
                load = MAX_FANOUT * bcin + _wire_cap(MAX_FANOUT)
                d[v] = d0 + r * load + stages * (bd0 + br * (MAX_FANOUT * 1.2 + _wire_cap(MAX_FANOUT)))
            else:
                load = sum(_params(n.kind[s], n.size[s])[2] for s in sinks if n.kind[s] != G_PO) + _wire_cap(fo)
                d[v] = d0 + r * load
        return d

    def arrivals(self, d: np.ndarray):
        n = self.n
        arr = np.zeros(len(n))
        pred = np.full(len(n), -1)
        for v in self.topo:
            k = n.kind[v]
            if k in (G_PI, G_T0, G_T1, G_DFF):
                arr[v] = d[v]
                continue
            best = max(n.fanin[v], key=lambda u: (arr[u], -u))
            arr[v] = arr[best] + d[v]
            pred[v] = best
        return arr, pred

    def endpoints(self):
        return [v for v in range(len(self.n)) if self.n.kind[v] in (G_DFF, G_PO)]

    def endpoint_arrival(self, arr, e):
        if self.n.kind[e] == G_DFF:
            return arr[self.n.fanin[e][0]] + SETUP
        return arr[e]


def size_for_timing(n: GateNetlist, clock: float, passes: int = 3) -> None:
    tm = Timing(n)
    for _ in range(passes):
        d = tm.delays()
        arr, pred = tm.arrivals(d)
        bad = set()
        for e in tm.endpoints():
            if tm.endpoint_arrival(arr, e) > clock:
                v = n.fanin[e][0] if n.kind[e] == G_DFF else e
                while v >= 0 and n.kind[v] not in (G_PI, G_T0, G_T1):
                    bad.add(v)
                    if n.kind[v] == G_DFF:
                        break
                    v = pred[v]
        changed = False
        for v in sorted(bad):
            if n.kind[v] in (G_PO,):
                continue
            i = SIZES.index(n.size[v])
            if i + 1 < len(SIZES) and len(tm.fanout[v]) >= 2:
                n.size[v] = SIZES[i + 1]
                changed = True
        if not changed:
            break


def simulate_activity(n: GateNetlist, seed: int, cycles: int = 192, warmup: int = 16):
    """Per-net toggles per cycle and static probability from 64 parallel random runs."""
    rng = np.random.default_rng(seed)
    tm_topo = _topo(n)
    N = len(n)
    pis = [v for v in range(N) if n.kind[v] == G_PI]
    dffs = [v for v in range(N) if n.kind[v] == G_DFF]
    p1 = {v: rng.uniform(0.2, 0.8) for v in pis}
    rate = {v: rng.uniform(0.05, 0.6) * 2 * min(p1[v], 1 - p1[v]) for v in pis}
    val = [np.uint64(0)] * N
    ones = np.uint64(0xFFFFFFFFFFFFFFFF)
    val[1] = ones if N > 1 and n.kind[1] == G_T1 else val[1]
    for v in range(N):
        if n.kind[v] == G_T1:
            val[v] = ones
    for v in pis:
        val[v] = np.uint64(int.from_bytes(rng.bytes(8), "little")) if p1[v] else np.uint64(0)
    state = {v: np.uint64(0) for v in dffs}
    toggles = np.zeros(N)
    high = np.zeros(N)

    def bits(p):
        b = rng.random(64) < p
        return np.uint64(int(np.packbits(b, bitorder="little").view(np.uint64)[0]))

    prev = None
    for c in range(cycles + warmup):
        for v in pis:
            p = p1[v]
            q1 = rate[v] / (2 * p)
            q0 = rate[v] / (2 * (1 - p))
            cur = val[v]
            flip = (cur & bits(q1)) | (~cur & bits(q0))
            val[v] = cur ^ flip
        for v in dffs:
            val[v] = state[v]
        for v in tm_topo:
            k = n.kind[v]
            fi = n.fanin[v]
            if k == G_AND:
                val[v] = val[fi[0]] & val[fi[1]]
            elif k == G_OR:
                val[v] = val[fi[0]] | val[fi[1]]
            elif k == G_XOR:
                val[v] = val[fi[0]] ^ val[fi[1]]
            elif k == G_NAND:
                val[v] = ~(val[fi[0]] & val[fi[1]])
            elif k == G_NOR:
                val[v] = ~(val[fi[0]] | val[fi[1]])
            elif k == G_XNOR:
                val[v] = ~(val[fi[0]] ^ val[fi[1]])
            elif k == G_NOT:
                val[v] = ~val[fi[0]]
            elif k == G_MUX:
                s = val[fi[0]]
                val[v] = (s & val[fi[1]]) | (~s & val[fi[2]])
            elif k == G_PO:
                val[v] = val[fi[0]]
        for v in dffs:
            state[v] = val[n.fanin[v][0]]
        cur = np.array(val, dtype=np.uint64)
        if c >= warmup:
            toggles += np.bitwise_count(prev ^ cur)
            high += np.bitwise_count(cur)
        prev = cur
    return toggles / (64 * cycles), high / (64 * cycles), (p1, rate)


def _levels(n: GateNetlist, topo) -> np.ndarray:
    lv = np.zeros(len(n))
    for v in topo:
        if n.kind[v] in (G_PI, G_DFF, G_T0, G_T1):
            continue
        lv[v] = 1 + max(lv[u] for u in n.fanin[v])
    return lv


def _noise(name: str, key: str, scale: float) -> float:
    h = int(hashlib.sha256(f"{name}:{key}".encode()).hexdigest()[:8], 16) / 0xFFFFFFFF
    return 1.0 + scale * (2 * h - 1)


def reference_flow(name: str, g: SogGraph, module_of: dict[str, str], seed: int = 0,
                   clock_factor: float = 0.72) -> dict:
    """Label dictionary for one design (label-file schema) plus SAIF data."""
    n = techmap(optimize(g))
    tm = Timing(n)
    d = tm.delays()
    arr, _ = tm.arrivals(d)
    eps = tm.endpoints()
    crit = max(tm.endpoint_arrival(arr, e) for e in eps)
    clock = round(clock_factor * crit, 4)
    size_for_timing(n, clock)
    tm = Timing(n)
    d = tm.delays()
    arr, pred = tm.arrivals(d)
    slack = {e: clock - tm.endpoint_arrival(arr, e) for e in eps}
    s = np.array(list(slack.values()))
    tns = float(np.minimum(s, 0).sum())
    wns = float(s.min())
    # path labels for the worst endpoints
    k = max(math.ceil(0.01 * len(eps)), 10)
    paths = []
    for e in sorted(eps, key=lambda e: (slack[e], e)):
        if len(paths) >= k:
            break
        v = n.fanin[e][0] if n.kind[e] == G_DFF else e
        while n.kind[v] not in (G_PI, G_DFF, G_T0, G_T1):
            v = int(pred[v])
        if n.kind[v] in (G_T0, G_T1) or v not in n.name or e not in n.name:
            continue
        end_arr = tm.endpoint_arrival(arr, e) - (SETUP if n.kind[e] == G_DFF else 0.0)
        paths.append({"start": n.name[v], "end": n.name[e], "delay": round(float(end_arr), 6)})
    # power
    tog, prob, (p1, rate) = simulate_activity(n, seed)
    lv = _levels(n, tm.topo)
    f = 1.0 / clock
    dyn = np.zeros(len(n))
    stat = np.zeros(len(n))
    cell_area = np.zeros(len(n))
    for v in range(len(n)):
        kd = n.kind[v]
        if kd in (G_PI, G_PO, G_T0, G_T1):
            continue
        d0, r, cin, area, leak, e_int = _params(kd, n.size[v])
        sinks = tm.fanout[v]
        fo = len(sinks)
        load = sum(_params(n.kind[x], n.size[x])[2] for x in sinks if n.kind[x] != G_PO) + _wire_cap(fo)
        glitch = 1.0 + 0.04 * lv[v]
        alpha = tog[v] * glitch
        dyn[v] = (0.5 * load * VDD ** 2 * alpha + e_int * alpha) * f
        stat[v] = leak * 1e-3
        cell_area[v] = area
        if fo > MAX_FANOUT:
            nb = math.ceil(fo / MAX_FANOUT)
            _, _, _, barea, bleak, be = _params(None, 2.0)
            dyn[v] += nb * be * alpha * f
            stat[v] += nb * bleak * 1e-3
            cell_area[v] += nb * barea
        if kd == G_DFF:
            dyn[v] += CLK_PIN_FJ * n.size[v] * f
    total_power = float(dyn.sum() + stat.sum())
    seq_area = float(sum(cell_area[v] for v in range(len(n)) if n.kind[v] == G_DFF))
    comb_area = float(cell_area.sum() - seq_area)
    # module powers, per instance of each level-1 definition
    per_def = defaultdict(lambda: [0.0, 0.0, set()])
    for v in range(len(n)):
        inst = n.tag[v]
        mod = "top" if inst == "top" else module_of.get(inst, inst)
        per_def[mod][0] += dyn[v]
        per_def[mod][1] += stat[v]
        per_def[mod][2].add(inst)
    counts = defaultdict(int)
    for inst, mod in module_of.items():
        counts[mod] += 1
    counts["top"] = 1
    modules = {}
    for mod, (dd, ss, _) in sorted(per_def.items()):
        c = counts.get(mod, 1)
        modules[mod] = {"power": round((dd + ss) / c, 6), "dynamic": round(dd / c, 6),
                        "static": round(ss / c, 6), "count": c}
    nets = len(n)
    placement = {
        "tns": round(tns * (1.12 + 0.03 * math.log10(nets)) * _noise(name, "ptns", 0.04), 6),
        "wns": round(wns * (1.08 + 0.02 * math.log10(nets)) * _noise(name, "pwns", 0.03), 6),
        "power": round(total_power * (1.06 + 0.015 * math.log10(nets)) * _noise(name, "ppow", 0.02), 6),
        "area": round((seq_area + comb_area) * 1.03 * _noise(name, "parea", 0.01), 6),
    }
    labels = {
        "clock": clock,
        "tns": round(tns, 6),
        "wns": round(wns, 6),
        "power": round(total_power, 6),
        "area": {"total": round(seq_area + comb_area, 6), "seq": round(seq_area, 6), "comb": round(comb_area, 6)},
        "modules": modules,
        "paths": paths,
        "placement": placement,
    }
    saif = {"duration": 192 * clock, "nets": {}}
    for v in range(len(n)):
        if n.kind[v] in (G_PI, G_DFF) and v in n.name:
            saif["nets"][n.name[v]] = (float(prob[v]), float(tog[v]))
    return {"labels": labels, "saif": saif, "gates": len(n)}


def emit_saif(design: str, saif: dict, cycles: int = 192) -> str:
    dur = saif["duration"]
    lines = ["(SAIFILE", '  (SAIFVERSION "2.0")', "  (TIMESCALE 1 ns)", f"  (DURATION {dur:.6f})",
             f"  (INSTANCE {design}"]
    by_scope = defaultdict(list)
    for name, (p, tr) in sorted(saif["nets"].items()):
        scope, _, leaf = name.rpartition(".")
        by_scope[scope].append((leaf, p, tr))

    def esc(s):
        return s.replace("[", "\\[").replace("]", "\\]")

    for scope in sorted(by_scope):
        ind = "    "
        if scope:
            lines.append(f"{ind}(INSTANCE {esc(scope)}")
            ind += "  "
        lines.append(f"{ind}(NET")
        for leaf, p, tr in by_scope[scope]:
            t1 = p * dur
            tc = int(round(tr * cycles))
            lines.append(f"{ind}  ({esc(leaf)} (T0 {dur - t1:.6f}) (T1 {t1:.6f}) (TC {tc}))")
        lines.append(f"{ind})")
        if scope:
            lines.append("    )")
    lines += ["  )", ")"]
    return "\n".join(lines) + "\n"
