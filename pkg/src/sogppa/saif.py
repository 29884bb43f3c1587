"""Reader for a subset of the SAIF switching-activity format.

Accepted shape (whitespace-insensitive s-expressions)::

    (SAIFILE
      (TIMESCALE 1 ns)
      (DURATION 1000)
      (INSTANCE top
        (NET (a\\[0\\] (T0 500) (T1 500) (TC 20)) ...)
        (INSTANCE alu0 (NET (acc\\[3\\] (T0 900) (T1 100) (TC 4))))))

Net names under nested instances get the instance path as a dotted prefix
(the outermost instance is the design itself and adds nothing). Backslash
escapes a single character. Unknown constructs are skipped with a warning.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .activity import ActivityError, ActivityMap, empty_seed
from .sog import SogGraph
from .tech import TechConfig

log = logging.getLogger(__name__)

_UNITS = {"s": 1e9, "ms": 1e6, "us": 1e3, "ns": 1.0, "ps": 1e-3, "fs": 1e-6}
_TOKEN = re.compile(r"\s*(?:(\()|(\))|((?:\\.|[^\s()\\])+))", re.S)


class SaifError(ValueError):
    """Malformed SAIF content."""


@dataclass
class NetActivity:
    t0: float
    t1: float
    tc: float


@dataclass
class SaifData:
    duration: float  # in ns
    nets: dict[str, NetActivity]
    warnings: list[str] = field(default_factory=list)


# informational header entries that carry nothing the estimator needs
_HEADER_KEYS = {"SAIFVERSION", "DIRECTION", "DESIGN", "DATE", "VENDOR", "PROGRAM_NAME", "VERSION", "DIVIDER"}


def _tokenize(text: str) -> list[str]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SaifError(f"unexpected character at offset {pos}")
        out.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    return out


def _parse_sexpr(tokens: list[str]):
    stack: list[list] = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SaifError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SaifError("unbalanced '(': missing ')'")
    return stack[0]


def _unescape(name: str) -> str:
    return re.sub(r"\\(.)", r"\1", name)


def _number(tok, what: str) -> float:
    try:
        return float(tok)
    except (TypeError, ValueError):
        raise SaifError(f"{what}: expected a number, got {tok!r}") from None


def parse_saif(text: str) -> SaifData:
    forms = _parse_sexpr(_tokenize(text))
    if len(forms) != 1 or not isinstance(forms[0], list) or not forms[0] or forms[0][0].upper() != "SAIFILE":
        raise SaifError("expected a single (SAIFILE ...) form")
    warns: list[str] = []
    scale = 1.0
    duration = None
    nets: dict[str, NetActivity] = {}

    def warn(msg: str) -> None:
        warns.append(msg)
        log.warning(msg)

    def net_entry(prefix: str, entry) -> None:
        if not isinstance(entry, list) or not entry or isinstance(entry[0], list):
            raise SaifError(f"malformed NET entry {entry!r}")
        name = prefix + _unescape(entry[0])
        vals = {}
        for item in entry[1:]:
            if not isinstance(item, list) or len(item) < 2 or isinstance(item[0], list):
                raise SaifError(f"net {name}: malformed attribute {item!r}")
            key = item[0].upper()
            if key in ("T0", "T1", "TC"):
                vals[key] = _number(item[1], f"net {name} {key}")
                if vals[key] < 0:
                    raise SaifError(f"net {name}: negative {key}")
            else:
                warn(f"net {name}: ignoring {key}")
        if "T1" not in vals or "TC" not in vals:
            raise SaifError(f"net {name}: needs T1 and TC")
        nets[name] = NetActivity(vals.get("T0", float("nan")), vals["T1"], vals["TC"])

    def instance(form, prefix: str, depth: int) -> None:
        if len(form) < 2 or isinstance(form[1], list):
            raise SaifError("INSTANCE needs a name")
        here = prefix if depth == 0 else prefix + _unescape(form[1]) + "."
        for item in form[2:]:
            if not isinstance(item, list) or not item or isinstance(item[0], list):
                warn(f"skipping unexpected item in instance {form[1]}")
                continue
            key = item[0].upper()
            if key == "NET":
                for entry in item[1:]:
                    net_entry(here, entry)
            elif key == "INSTANCE":
                instance(item, here, depth + 1)
            else:
                warn(f"skipping unsupported construct ({key} ...)")

    for item in forms[0][1:]:
        if not isinstance(item, list) or not item or isinstance(item[0], list):
            warn("skipping unexpected top-level item")
            continue
        key = item[0].upper()
        if key == "TIMESCALE":
            spec = "".join(x for x in item[1:] if isinstance(x, str))
            m = re.fullmatch(r"([0-9.eE+-]+)\s*([a-z]+)", spec)
            if not m or m.group(2) not in _UNITS:
                raise SaifError(f"bad TIMESCALE {spec!r}")
            scale = _number(m.group(1), "TIMESCALE") * _UNITS[m.group(2)]
        elif key == "DURATION":
            if len(item) != 2:
                raise SaifError("DURATION needs one value")
            duration = _number(item[1], "DURATION")
        elif key == "INSTANCE":
            instance(item, "", 0)
        elif key not in _HEADER_KEYS:
            warn(f"skipping unsupported construct ({key} ...)")
    if duration is None:
        raise SaifError("missing DURATION")
    if duration <= 0:
        raise SaifError(f"DURATION must be > 0, got {duration}")
    for name, a in nets.items():
        if a.t1 > duration * (1 + 1e-9):
            raise SaifError(f"net {name}: T1 exceeds DURATION")
    # convert everything to ns; P and D are unit-free ratios afterwards
    for a in nets.values():
        a.t0, a.t1 = a.t0 * scale, a.t1 * scale
    return SaifData(duration * scale, nets, warns)


def saif_seed(data: SaifData, g: SogGraph, t: TechConfig, clock: float | None = None) -> ActivityMap:
    """Seed INPUT and REG nodes from SAIF nets; absent ones fall back to defaults.

    ``P = T1 / duration`` and ``D = TC / (duration / clock)``.
    """
    clk = t.clock_period if clock is None else clock
    if not clk > 0:
        raise ActivityError("clock period must be > 0")
    cycles = data.duration / clk
    act = empty_seed(g)
    act.source = "saif"
    missing = []
    for v in [*g.inputs, *g.regs]:
        name = g.names.get(v)
        a = data.nets.get(name) if name is not None else None
        if a is None:
            missing.append(name if name is not None else str(v))
            act.P[v], act.D[v] = t.default_p, t.default_tr
            continue
        act.P[v] = min(1.0, a.t1 / data.duration)
        act.D[v] = a.tc / cycles
    for name in missing:
        log.warning("no SAIF activity for %s, using defaults", name)
    act.missing = missing
    return act


def load_saif(path) -> SaifData:
    with open(path) as f:
        return parse_saif(f.read())


__all__ = ["NetActivity", "SaifData", "SaifError", "load_saif", "parse_saif", "saif_seed"]
