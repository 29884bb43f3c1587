"""Constrained random generation of pseudo designs for data augmentation.

Designs grow as a layered DAG of word-level operators. A legalization pass
then fixes arity, bit widths, reachability and the kind mix, and
:func:`validate_design` re-checks the result from the emitted netlist alone.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .builder import DesignBuilder
from .netlist import WordNetlist, cell_port_widths, flatten_with_provenance, netlist_to_dict
from .sog import lower_to_sog
from .tech import TechConfig
from .timing import PathDataset, design_path_features

GEN_KINDS = (
    "add", "sub", "mul", "and", "or", "xor", "not",
    "reduce_and", "reduce_or", "reduce_xor", "shl", "shr",
    "eq", "lt", "ge", "mux",
)
ADAPTER_KINDS = ("concat", "slice")
ARITY = {k: 2 for k in GEN_KINDS}
ARITY.update({"not": 1, "reduce_and": 1, "reduce_or": 1, "reduce_xor": 1, "mux": 3})
ONE_BIT_OUT = {"reduce_and", "reduce_or", "reduce_xor", "eq", "lt", "ge"}

# kind mix of the shipped benchmark designs (word-op histogram, registers and wiring excluded)
DEFAULT_PROPORTIONS = {
    "add": 0.125, "sub": 0.031, "mul": 0.030, "and": 0.105, "or": 0.023, "xor": 0.040, "not": 0.033,
    "reduce_and": 0.009, "reduce_or": 0.018, "reduce_xor": 0.004, "shl": 0.014, "shr": 0.021,
    "eq": 0.113, "lt": 0.015, "ge": 0.003, "mux": 0.416,
}
PROPORTION_TOL = 0.05


class GenError(ValueError):
    """Infeasible generator configuration."""


@dataclass
class GenConfig:
    n_nodes: int = 40
    proportions: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PROPORTIONS))
    fanout_mean: float = 2.0
    fanout_max: int = 6
    reg_fraction: float = 0.15
    depth: int = 6
    widths: tuple[int, ...] = (1, 2, 4, 8)
    n_inputs: int | None = None
    seed: int = 0

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if self.n_nodes < 1:
            raise GenError("n_nodes must be > 0")
        if self.depth < 1:
            raise GenError("depth must be > 0")
        if not 0.0 <= self.reg_fraction < 1.0:
            raise GenError("reg_fraction must be in [0, 1)")
        if self.fanout_mean < 1 or self.fanout_max < 1:
            raise GenError("fan-out parameters must be >= 1")
        if not self.widths or min(self.widths) < 1 or max(self.widths) > 32:
            raise GenError("widths must lie in [1, 32]")
        unknown = set(self.proportions) - set(GEN_KINDS)
        if unknown:
            raise GenError(f"unknown kinds in proportions: {sorted(unknown)}")
        vals = list(self.proportions.values())
        if any(v < 0 for v in vals) or abs(sum(vals) - 1.0) > 1e-9:
            raise GenError("proportions must be non-negative and sum to 1")

    @property
    def n_regs(self) -> int:
        return int(round(self.reg_fraction * self.n_nodes))

    @property
    def n_comb(self) -> int:
        return self.n_nodes - self.n_regs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["widths"] = list(self.widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        return cls(**d)


def kind_counts(cfg: GenConfig) -> dict[str, int]:
    """Largest-remainder allocation of ``n_comb`` nodes to kinds."""
    n = cfg.n_comb
    if n < 1:
        raise GenError("configuration leaves no combinational nodes")
    kinds = sorted(cfg.proportions)
    raw = np.array([cfg.proportions[k] * n for k in kinds])
    base = np.floor(raw).astype(int)
    rem = n - base.sum()
    order = np.lexsort((np.arange(len(kinds)), -(raw - base)))
    base[order[:rem]] += 1
    counts = dict(zip(kinds, base.tolist()))
    worst = max(abs(counts[k] / n - cfg.proportions[k]) for k in kinds)
    if worst > PROPORTION_TOL:
        raise GenError(f"{n} combinational nodes cannot match the kind proportions within "
                       f"{PROPORTION_TOL:.0%} (off by {worst:.3f})")
    return counts


def generate_design(cfg: GenConfig, name: str = "gen") -> WordNetlist:
    return _generate(cfg, name).build()


def _generate(cfg: GenConfig, name: str) -> DesignBuilder:
    rng = np.random.default_rng(cfg.seed)
    counts = kind_counts(cfg)
    kinds = [k for k in sorted(counts) for _ in range(counts[k])]
    rng.shuffle(kinds)
    n_comb = len(kinds)
    depth = min(cfg.depth, n_comb)
    # every layer gets at least one node
    layer_of = np.sort(np.concatenate([np.arange(depth), rng.integers(0, depth, n_comb - depth)]))
    b = DesignBuilder(name)
    m = b.module(name)
    widths = np.asarray(cfg.widths)
    n_in = cfg.n_inputs or max(2, int(round(0.15 * cfg.n_nodes)))
    # source pool: (word, layer, capacity, used)
    pool: list[dict] = []

    def capacity() -> int:
        # geometric on {1, 2, ...} with the configured mean
        return int(min(cfg.fanout_max, rng.geometric(1.0 / cfg.fanout_mean)))

    for i in range(n_in):
        pool.append({"w": m.input(f"in{i}", int(rng.choice(widths))), "layer": 0, "cap": capacity(), "used": 0,
                     "port": True})
    regs = []
    for i in range(cfg.n_regs):
        q, connect = m.reg_feedback(int(rng.choice(widths)), name=f"r{i}")
        regs.append((q, connect))
        pool.append({"w": q, "layer": 0, "cap": capacity(), "used": 0})

    def fit(word, width: int):
        if len(word) == width:
            return word
        if len(word) > width:
            return m.slice(word, 0, width)
        return m.concat(word, m.const(0, width - len(word)))

    def pick(max_layer: int, exact_layer: int | None = None):
        cands = [p for p in pool if p["layer"] <= max_layer and (exact_layer is None or p["layer"] == exact_layer)]
        free = [p for p in cands if p["used"] < p["cap"]]
        src = free or cands
        p = src[int(rng.integers(len(src)))]
        p["used"] += 1
        return p["w"]

    for kind, layer in zip(kinds, layer_of.tolist()):
        lay = layer + 1
        w = int(rng.choice(widths))
        ops = [pick(lay - 1, lay - 1)] + [pick(lay - 1) for _ in range(ARITY[kind] - 1)]
        rng.shuffle(ops)
        if kind in ("and", "or", "xor", "add", "sub", "eq", "lt", "ge"):
            a, c = fit(ops[0], w), fit(ops[1], w)
            if kind in ("eq", "lt", "ge"):
                y = m.compare(kind, a, c, signed=bool(rng.integers(2)) and kind != "eq")
            else:
                y = m._binary(kind, a, c)
        elif kind == "mul":
            y = m.mul(fit(ops[0], w), fit(ops[1], w), signed=bool(rng.integers(2)))
        elif kind == "not":
            y = m.not_(fit(ops[0], w))
        elif kind.startswith("reduce_"):
            y = m.reduce(kind[7:], ops[0])
        elif kind in ("shl", "shr"):
            bw = max(1, (w - 1).bit_length())
            a, s = fit(ops[0], w), fit(ops[1], bw)
            y = m.shl(a, s) if kind == "shl" else m.shr(a, s, signed=bool(rng.integers(2)))
        else:  # mux
            y = m.mux(fit(ops[0], 1), fit(ops[1], w), fit(ops[2], w))
        pool.append({"w": y, "layer": lay, "cap": capacity(), "used": 0})
    for q, connect in regs:
        connect(fit(pick(depth), len(q)))
    outs = 0
    for p in pool:
        if p["used"] == 0 and not p.get("port"):
            m.output(f"out{outs}", p["w"])
            outs += 1
    if outs == 0:
        m.output("out0", pool[-1]["w"])
    return b


def design_json(n: WordNetlist) -> str:
    return json.dumps(netlist_to_dict(n), sort_keys=True) + "\n"


# independent validation --------------------------------------------------------

def validate_design(n: WordNetlist, cfg: GenConfig) -> list[str]:
    """Constraint violations found by re-reading the netlist (empty when legal)."""
    errs = []
    top = n.top_module
    if top.instances:
        errs.append("generated designs must be flat")
    cells = list(top.cells.values())
    ops = [c for c in cells if c.kind in GEN_KINDS]
    regs = [c for c in cells if c.kind == "reg"]
    other = [c.kind for c in cells if c.kind not in GEN_KINDS and c.kind not in ADAPTER_KINDS and c.kind != "reg"]
    if other:
        errs.append(f"unexpected cell kinds {sorted(set(other))}")
    if len(regs) != cfg.n_regs:
        errs.append(f"{len(regs)} registers, expected {cfg.n_regs}")
    if len(ops) != cfg.n_comb:
        errs.append(f"{len(ops)} operators, expected {cfg.n_comb}")
    if ops:
        for k in GEN_KINDS:
            frac = sum(c.kind == k for c in ops) / len(ops)
            if abs(frac - cfg.proportions.get(k, 0.0)) > PROPORTION_TOL + 1e-12:
                errs.append(f"kind {k}: fraction {frac:.3f} vs target {cfg.proportions.get(k, 0.0):.3f}")
    # arity and widths
    for c in cells:
        ins, outs = cell_port_widths(c.kind, c.params)
        for p, w in {**ins, **outs}.items():
            if len(c.conns.get(p) or []) != w:
                errs.append(f"cell {c.name}: port {p} has {len(c.conns.get(p) or [])} bits, needs {w}")
        if c.kind in ARITY and len(ins) != ARITY[c.kind] and c.kind not in ("shl", "shr"):
            errs.append(f"cell {c.name}: {len(ins)} operands for {c.kind}")
    # driver map over bits
    driver = {}
    for pn, p in top.ports.items():
        if p.dir == "input":
            for b in p.bits:
                driver[b] = ("in", pn)
    for c in cells:
        for p in ("Y", "Q"):
            for b in c.conns.get(p) or []:
                driver[b] = ("cell", c.name)
    readers: dict[str, int] = {c.name: 0 for c in cells}
    for c in cells:
        ins, _ = cell_port_widths(c.kind, c.params)
        for p in ins:
            for b in c.conns[p]:
                d = driver.get(b)
                if d and d[0] == "cell":
                    readers[d[1]] += 1
    for p in top.ports.values():
        if p.dir == "output":
            for b in p.bits:
                d = driver.get(b)
                if d and d[0] == "cell":
                    readers[d[1]] += 1
    dangling = [c.name for c in cells if readers[c.name] == 0]
    if dangling:
        errs.append(f"dangling cells {dangling[:5]}")
    # combinational acyclicity and depth in operator levels
    by_name = {c.name: c for c in cells}
    level: dict[str, int] = {}
    state: dict[str, int] = {}

    def visit(name: str) -> int:
        if state.get(name) == 2:
            return level[name]
        if state.get(name) == 1:
            raise ValueError(name)
        state[name] = 1
        c = by_name[name]
        lv = 0
        if c.kind != "reg":
            ins, _ = cell_port_widths(c.kind, c.params)
            for p in ins:
                for b in c.conns[p]:
                    d = driver.get(b)
                    if d and d[0] == "cell" and by_name[d[1]].kind != "reg":
                        lv = max(lv, visit(d[1]))
        state[name] = 2
        level[name] = lv + (1 if c.kind in GEN_KINDS else 0)
        return level[name]

    try:
        depth = max((visit(c.name) for c in cells), default=0)
        if depth > cfg.depth:
            errs.append(f"operator depth {depth} exceeds target {cfg.depth}")
    except (ValueError, RecursionError) as e:
        errs.append(f"combinational cycle through {e}")
    widths = set(cfg.widths)
    for c in ops:
        if c.kind not in ONE_BIT_OUT and c.width not in widths:
            errs.append(f"cell {c.name}: width {c.width} outside palette")
    return errs


# augmentation ------------------------------------------------------------------

def design_seeds(master: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master).spawn(n)]


def augment_path_dataset(real: PathDataset, n_generated: int, cfg: GenConfig, t: TechConfig,
                         seed: int = 0) -> PathDataset:
    """Append endpoint-path rows of generated designs, labeled with their analytical delay."""
    if n_generated <= 0:
        return real
    rows, groups = [], []
    for i, s in enumerate(design_seeds(seed, n_generated)):
        c = GenConfig(**{**cfg.to_dict(), "seed": s})
        flat, prov = flatten_with_provenance(generate_design(c, f"gen{i}"))
        g = lower_to_sog(flat, prov)
        _, X = design_path_features(g, t)
        rows.append(X)
        groups += [f"gen{i}"] * len(X)
    X = np.vstack(rows)
    gen = PathDataset(X, X[:, 6].copy(), groups, np.ones(len(X), bool))
    return real.extend(gen)


__all__ = ["GenConfig", "GenError", "augment_path_dataset", "design_json", "design_seeds",
           "generate_design", "kind_counts", "validate_design"]
