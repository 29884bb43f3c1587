"""Hierarchical word-level netlists.

A netlist file is JSON::

    {"top": "name",
     "modules": {
        "name": {
           "ports": {"a": {"dir": "input", "width": 4, "bits": [2, 3, 4, 5]}, ...},
           "cells": {"u0": {"kind": "add", "params": {"width": 4},
                            "conns": {"A": [2, 3, 4, 5], "B": [...], "Y": [...]}}},
           "instances": {"i0": {"module": "sub", "conns": {"x": [...], ...}}}}}}

Net bits are integers local to their module; the literals ``"0"`` and ``"1"``
stand for constant bits.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

log = logging.getLogger(__name__)

Bit = Union[int, str]

#: Word-level operation vocabulary, in histogram order. ``concat`` and
#: ``slice`` are separate cell kinds but share the final wiring bucket.
HISTOGRAM_KINDS = (
    "add", "sub", "mul", "and", "or", "xor", "not",
    "reduce_and", "reduce_or", "reduce_xor", "shl", "shr",
    "eq", "lt", "ge", "mux", "reg", "concat_slice",
)
CELL_KINDS = frozenset(HISTOGRAM_KINDS[:-1]) | {"concat", "slice"}

_BINARY_SAME = {"add", "sub", "and", "or", "xor"}
_COMPARE = {"eq", "lt", "ge"}
_REDUCE = {"reduce_and", "reduce_or", "reduce_xor"}
_REG_IGNORED = {"RST", "ARST", "EN", "SRST"}


class NetlistError(ValueError):
    """Malformed, unlinked or unsupported netlist content."""


@dataclass
class Port:
    dir: str
    width: int
    bits: list[Bit]


@dataclass
class WordCell:
    name: str
    kind: str
    params: dict
    conns: dict[str, list[Bit]]

    @property
    def width(self) -> int:
        return int(self.params.get("width", 0))

    @property
    def signed(self) -> bool:
        return bool(self.params.get("signed", False))


@dataclass
class Instance:
    module: str
    conns: dict[str, list[Bit]]


@dataclass
class ModuleDef:
    name: str
    ports: dict[str, Port] = field(default_factory=dict)
    cells: dict[str, WordCell] = field(default_factory=dict)
    instances: dict[str, Instance] = field(default_factory=dict)

    def port_names(self, direction: str) -> list[str]:
        return [n for n, p in self.ports.items() if p.dir == direction]


@dataclass
class WordNetlist:
    top: str
    modules: dict[str, ModuleDef]

    @property
    def top_module(self) -> ModuleDef:
        return self.modules[self.top]

    def is_flat(self) -> bool:
        return not self.top_module.instances


@dataclass
class Provenance:
    """Level-1 origin of every flattened cell.

    ``tags`` maps cell name to the level-1 instance it came from (``"top"``
    for cells owned by the top module); ``instance_modules`` maps each
    level-1 instance to its module definition and ``multiplicity`` counts
    instances per definition.
    """

    tags: dict[str, str]
    instance_modules: dict[str, str]

    @property
    def multiplicity(self) -> dict[str, int]:
        k = Counter(self.instance_modules.values())
        k["top"] = 1
        return dict(k)


def cell_port_widths(kind: str, params: dict) -> tuple[dict[str, int], dict[str, int]]:
    """Return ``(input ports, output ports)`` with their bit widths."""
    if kind not in CELL_KINDS:
        raise NetlistError(f"unsupported cell kind {kind!r}")
    if kind == "concat":
        wa, wb = _positive(params, "a_width"), _positive(params, "b_width")
        return {"A": wa, "B": wb}, {"Y": wa + wb}
    w = _positive(params, "width")
    if kind in _BINARY_SAME:
        return {"A": w, "B": w}, {"Y": w}
    if kind == "mul":
        yw = int(params.get("y_width", w))
        if not 1 <= yw <= 2 * w:
            raise NetlistError(f"mul y_width {yw} outside [1, {2 * w}]")
        return {"A": w, "B": w}, {"Y": yw}
    if kind == "not":
        return {"A": w}, {"Y": w}
    if kind in _REDUCE:
        return {"A": w}, {"Y": 1}
    if kind in ("shl", "shr"):
        bw = int(params.get("b_width", max(1, (w - 1).bit_length())))
        if bw < 1:
            raise NetlistError("shift amount width must be >= 1")
        return {"A": w, "B": bw}, {"Y": w}
    if kind in _COMPARE:
        return {"A": w, "B": w}, {"Y": 1}
    if kind == "mux":
        return {"S": 1, "A": w, "B": w}, {"Y": w}
    if kind == "reg":
        return {"D": w}, {"Q": w}
    # slice
    yw = _positive(params, "y_width")
    off = int(params.get("offset", 0))
    if off < 0 or off + yw > w:
        raise NetlistError(f"slice [{off}+:{yw}] outside width {w}")
    return {"A": w}, {"Y": yw}


def _positive(params: dict, key: str) -> int:
    try:
        v = int(params[key])
    except (KeyError, TypeError, ValueError):
        raise NetlistError(f"missing or non-integer parameter {key!r}") from None
    if v < 1:
        raise NetlistError(f"parameter {key!r} must be >= 1, got {v}")
    return v


# --------------------------------------------------------------------------
# parsing

def parse_netlist(text: str) -> WordNetlist:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetlistError(f"syntax error at line {e.lineno} column {e.colno}: {e.msg}") from None
    return netlist_from_dict(data)


def load_netlist(path) -> WordNetlist:
    with open(path) as f:
        return parse_netlist(f.read())


def netlist_from_dict(data: dict) -> WordNetlist:
    if not isinstance(data, dict) or "top" not in data or "modules" not in data:
        raise NetlistError("netlist must be an object with 'top' and 'modules'")
    modules = {}
    for mname, mdata in data["modules"].items():
        modules[mname] = _parse_module(mname, mdata)
    n = WordNetlist(top=data["top"], modules=modules)
    if n.top not in modules:
        raise NetlistError(f"top module {n.top!r} not defined")
    _check_hierarchy(n)
    for m in modules.values():
        _link_module(m, modules)
    return n


def _bits(raw, where: str) -> list[Bit]:
    if not isinstance(raw, list):
        raise NetlistError(f"{where}: connection must be a list of bits")
    out: list[Bit] = []
    for b in raw:
        if isinstance(b, bool):
            raise NetlistError(f"{where}: boolean is not a net bit")
        if isinstance(b, int):
            out.append(b)
        elif b in ("0", "1"):
            out.append(b)
        else:
            raise NetlistError(f"{where}: unresolved net {b!r}")
    return out


def _parse_module(name: str, data: dict) -> ModuleDef:
    m = ModuleDef(name)
    for pname, p in data.get("ports", {}).items():
        d = p.get("dir")
        if d not in ("input", "output"):
            raise NetlistError(f"{name}.{pname}: port dir must be 'input' or 'output'")
        width = int(p.get("width", 0))
        bits = _bits(p.get("bits"), f"{name}.{pname}")
        if width < 1 or len(bits) != width:
            raise NetlistError(f"{name}.{pname}: width {width} does not match {len(bits)} bits")
        if d == "input" and any(isinstance(b, str) for b in bits):
            raise NetlistError(f"{name}.{pname}: input port bits cannot be constants")
        m.ports[pname] = Port(d, width, bits)
    for cname, c in data.get("cells", {}).items():
        kind = c.get("kind")
        params = dict(c.get("params", {}))
        conns = {pn: _bits(bits, f"{name}.{cname}.{pn}") for pn, bits in c.get("conns", {}).items()}
        m.cells[cname] = WordCell(cname, kind, params, conns)
    for iname, inst in data.get("instances", {}).items():
        if isinstance(inst, str):
            raise NetlistError(f"{name}.{iname}: instance needs 'module' and 'conns'")
        conns = {pn: _bits(bits, f"{name}.{iname}.{pn}") for pn, bits in inst.get("conns", {}).items()}
        m.instances[iname] = Instance(inst.get("module"), conns)
    return m


def _check_hierarchy(n: WordNetlist) -> None:
    state: dict[str, int] = {}

    def visit(mname: str, stack: list[str]) -> None:
        if state.get(mname) == 2:
            return
        if state.get(mname) == 1:
            raise NetlistError("recursive hierarchy: " + " -> ".join(stack + [mname]))
        if mname not in n.modules:
            raise NetlistError(f"instance of undefined module {mname!r}")
        state[mname] = 1
        for inst in n.modules[mname].instances.values():
            visit(inst.module, stack + [mname])
        state[mname] = 2

    visit(n.top, [])


def _link_module(m: ModuleDef, modules: dict[str, ModuleDef]) -> None:
    drivers: dict[int, str] = {}

    def drive(bits, who):
        for b in bits:
            if isinstance(b, str):
                raise NetlistError(f"{m.name}.{who}: output bit cannot be a constant")
            if b in drivers:
                raise NetlistError(f"{m.name}: net {b} driven by both {drivers[b]} and {who}")
            drivers[b] = who

    uses: list[tuple[str, list[Bit]]] = []
    for pname, p in m.ports.items():
        if p.dir == "input":
            drive(p.bits, pname)
        else:
            uses.append((pname, p.bits))
    for c in m.cells.values():
        ins, outs = cell_port_widths(c.kind, c.params)
        extra = set(c.conns) - set(ins) - set(outs)
        if c.kind == "reg":
            ignored = extra & _REG_IGNORED
            if ignored:
                log.warning("%s.%s: ignoring register ports %s", m.name, c.name, sorted(ignored))
            extra -= _REG_IGNORED | {"CLK"}
        if extra:
            raise NetlistError(f"{m.name}.{c.name}: unknown ports {sorted(extra)} for {c.kind}")
        for pn, w in {**ins, **outs}.items():
            bits = c.conns.get(pn)
            if bits is None:
                raise NetlistError(f"{m.name}.{c.name}: port {pn} not connected")
            if len(bits) != w:
                raise NetlistError(f"{m.name}.{c.name}.{pn}: width mismatch, expected {w} got {len(bits)}")
        for pn in outs:
            drive(c.conns[pn], c.name)
        uses.extend((f"{c.name}.{pn}", c.conns[pn]) for pn in ins)
    for iname, inst in m.instances.items():
        sub = modules[inst.module]
        for pn, port in sub.ports.items():
            bits = inst.conns.get(pn)
            if bits is None:
                raise NetlistError(f"{m.name}.{iname}: port {pn} not connected")
            if len(bits) != port.width:
                raise NetlistError(f"{m.name}.{iname}.{pn}: width mismatch, expected {port.width} got {len(bits)}")
            if port.dir == "output":
                drive(bits, iname)
            else:
                uses.append((f"{iname}.{pn}", bits))
        extra = set(inst.conns) - set(sub.ports)
        if extra:
            raise NetlistError(f"{m.name}.{iname}: unknown ports {sorted(extra)}")
    for who, bits in uses:
        for b in bits:
            if isinstance(b, int) and b not in drivers:
                raise NetlistError(f"{m.name}.{who}: undriven net {b}")


# --------------------------------------------------------------------------
# emission

def netlist_to_dict(n: WordNetlist) -> dict:
    mods = {}
    for mname, m in n.modules.items():
        mods[mname] = {
            "ports": {pn: {"dir": p.dir, "width": p.width, "bits": list(p.bits)} for pn, p in m.ports.items()},
            "cells": {cn: {"kind": c.kind, "params": dict(c.params), "conns": {k: list(v) for k, v in c.conns.items()}}
                      for cn, c in m.cells.items()},
            "instances": {iname: {"module": i.module, "conns": {k: list(v) for k, v in i.conns.items()}}
                          for iname, i in m.instances.items()},
        }
    return {"top": n.top, "modules": mods}


def emit_netlist(n: WordNetlist) -> str:
    return json.dumps(netlist_to_dict(n), indent=1, separators=(",", ":")) + "\n"


# --------------------------------------------------------------------------
# queries

def word_op_histogram(n: WordNetlist) -> list[int]:
    """Cell count per word-level kind over the flattened design."""
    counts = Counter()

    def walk(mname: str, mult: int) -> None:
        m = n.modules[mname]
        for c in m.cells.values():
            kind = "concat_slice" if c.kind in ("concat", "slice") else c.kind
            counts[kind] += mult
        for inst in m.instances.values():
            walk(inst.module, mult)

    walk(n.top, 1)
    return [counts[k] for k in HISTOGRAM_KINDS]


def flatten_with_provenance(n: WordNetlist) -> tuple[WordNetlist, Provenance]:
    """Inline every instance into one module.

    Cell and register names become hierarchical (``inst.sub.cell``). Nets of
    the top module keep their ids; nets inside instances get fresh ids.
    """
    _check_hierarchy(n)
    top = n.top_module
    next_id = 1 + max((b for m in n.modules.values() for b in _all_bits(m) if isinstance(b, int)), default=-1)
    counter = iter(range(next_id, 1 << 62))
    cells: dict[str, WordCell] = {}
    tags: dict[str, str] = {}
    inst_modules: dict[str, str] = {}
    alias: dict[int, Bit] = {}

    def walk(mod: ModuleDef, prefix: str, netmap: dict, tag: str) -> None:
        def m(b: Bit) -> Bit:
            if isinstance(b, str):
                return b
            if b not in netmap:
                netmap[b] = next(counter)
            return netmap[b]

        for cname, c in mod.cells.items():
            full = prefix + cname
            cells[full] = WordCell(full, c.kind, dict(c.params),
                                   {p: [m(b) for b in bits] for p, bits in c.conns.items()})
            tags[full] = tag
        for iname, inst in mod.instances.items():
            sub = n.modules[inst.module]
            child_tag = iname if tag == "top" else tag
            if tag == "top":
                inst_modules[iname] = inst.module
            submap: dict[int, Bit] = {}
            pending = []
            for pname, port in sub.ports.items():
                outer = [m(b) for b in inst.conns[pname]]
                if port.dir == "input":
                    for inner, o in zip(port.bits, outer):
                        submap[inner] = o
                else:
                    pending.extend(zip(port.bits, outer))
            for inner, o in pending:
                if isinstance(inner, str):
                    alias[o] = inner
                elif inner in submap:
                    # feed-through or doubly bound output: the outer net is a wire
                    alias[o] = submap[inner]
                else:
                    submap[inner] = o
            walk(sub, prefix + iname + ".", submap, child_tag)

    top_map: dict[int, Bit] = {}
    for p in top.ports.values():
        for b in p.bits:
            if isinstance(b, int):
                top_map[b] = b
    for m in [top]:
        for b in _all_bits(m):
            if isinstance(b, int):
                top_map.setdefault(b, b)
    walk(top, "", top_map, "top")

    def resolve(b: Bit) -> Bit:
        seen = 0
        while isinstance(b, int) and b in alias:
            b = alias[b]
            seen += 1
            if seen > len(alias):
                raise NetlistError("combinational wire loop through module ports")
        return b

    if alias:
        for c in cells.values():
            for p, bits in c.conns.items():
                c.conns[p] = [resolve(b) for b in bits]
    ports = {pn: Port(p.dir, p.width, [resolve(b) for b in p.bits]) for pn, p in top.ports.items()}
    flat = WordNetlist(top=n.top, modules={n.top: ModuleDef(n.top, ports, cells, {})})
    return flat, Provenance(tags=tags, instance_modules=inst_modules)


def _all_bits(m: ModuleDef):
    for p in m.ports.values():
        yield from p.bits
    for c in m.cells.values():
        for bits in c.conns.values():
            yield from bits
    for i in m.instances.values():
        for bits in i.conns.values():
            yield from bits
