"""Programmatic construction of word-level netlists.

    >>> b = DesignBuilder("top")
    >>> m = b.module("top")
    >>> a, c = m.input("a", 4), m.input("b", 4)
    >>> m.output("y", m.add(a, c))
    >>> netlist = b.build()
"""

from __future__ import annotations

from .netlist import WordNetlist, netlist_from_dict

Word = list  # list of Bit


class ModuleBuilder:
    def __init__(self, name: str):
        self.name = name
        self._next = 2
        self.ports: dict = {}
        self.cells: dict = {}
        self.instances: dict = {}
        self._cell_ids: dict[str, int] = {}

    def wire(self, width: int) -> Word:
        bits = list(range(self._next, self._next + width))
        self._next += width
        return bits

    def const(self, value: int, width: int) -> Word:
        return ["1" if (value >> i) & 1 else "0" for i in range(width)]

    def input(self, name: str, width: int) -> Word:
        bits = self.wire(width)
        self.ports[name] = {"dir": "input", "width": width, "bits": bits}
        return bits

    def output(self, name: str, bits: Word) -> None:
        self.ports[name] = {"dir": "output", "width": len(bits), "bits": list(bits)}

    def _name(self, kind: str, name: str | None) -> str:
        if name is not None:
            return name
        i = self._cell_ids.get(kind, 0)
        self._cell_ids[kind] = i + 1
        return f"{kind}{i}"

    def cell(self, kind: str, params: dict, ins: dict, out_width: int, out_port: str = "Y",
             name: str | None = None) -> Word:
        y = self.wire(out_width)
        conns = {k: list(v) for k, v in ins.items()}
        conns[out_port] = y
        self.cells[self._name(kind, name)] = {"kind": kind, "params": params, "conns": conns}
        return y

    # arithmetic and logic -------------------------------------------------
    def _binary(self, kind, a, b, name=None, **params):
        if len(a) != len(b):
            raise ValueError(f"{kind}: operand widths differ ({len(a)} vs {len(b)})")
        return self.cell(kind, {"width": len(a), **params}, {"A": a, "B": b}, len(a), name=name)

    def add(self, a, b, name=None):
        return self._binary("add", a, b, name)

    def sub(self, a, b, name=None):
        return self._binary("sub", a, b, name)

    def and_(self, a, b, name=None):
        return self._binary("and", a, b, name)

    def or_(self, a, b, name=None):
        return self._binary("or", a, b, name)

    def xor(self, a, b, name=None):
        return self._binary("xor", a, b, name)

    def mul(self, a, b, y_width=None, signed=False, name=None):
        yw = len(a) if y_width is None else y_width
        return self.cell("mul", {"width": len(a), "y_width": yw, "signed": signed}, {"A": a, "B": b}, yw, name=name)

    def not_(self, a, name=None):
        return self.cell("not", {"width": len(a)}, {"A": a}, len(a), name=name)

    def reduce(self, op: str, a, name=None):
        return self.cell(f"reduce_{op}", {"width": len(a)}, {"A": a}, 1, name=name)

    def shl(self, a, amount, name=None):
        return self.cell("shl", {"width": len(a), "b_width": len(amount)}, {"A": a, "B": amount}, len(a), name=name)

    def shr(self, a, amount, signed=False, name=None):
        return self.cell("shr", {"width": len(a), "b_width": len(amount), "signed": signed},
                         {"A": a, "B": amount}, len(a), name=name)

    def compare(self, kind: str, a, b, signed=False, name=None):
        if len(a) != len(b):
            raise ValueError("comparison operand widths differ")
        return self.cell(kind, {"width": len(a), "signed": signed}, {"A": a, "B": b}, 1, name=name)

    def eq(self, a, b, name=None):
        return self.compare("eq", a, b, name=name)

    def lt(self, a, b, signed=False, name=None):
        return self.compare("lt", a, b, signed, name)

    def ge(self, a, b, signed=False, name=None):
        return self.compare("ge", a, b, signed, name)

    def mux(self, s, a, b, name=None):
        """``s ? b : a``."""
        if len(s) != 1 or len(a) != len(b):
            raise ValueError("mux needs a 1-bit select and equal data widths")
        return self.cell("mux", {"width": len(a)}, {"S": s, "A": a, "B": b}, len(a), name=name)

    def reg(self, d, name=None):
        return self.cell("reg", {"width": len(d)}, {"D": d}, len(d), out_port="Q", name=name)

    def reg_feedback(self, width: int, name=None) -> tuple[Word, callable]:
        """Register whose D input is connected later; returns ``(q, connect)``."""
        cname = self._name("reg", name)
        q = self.wire(width)
        cell = {"kind": "reg", "params": {"width": width}, "conns": {"D": None, "Q": q}}
        self.cells[cname] = cell

        def connect(d):
            if len(d) != width:
                raise ValueError(f"register {cname}: D width {len(d)} != {width}")
            cell["conns"]["D"] = list(d)

        return q, connect

    def concat(self, a, b, name=None):
        """``{b, a}`` (``a`` in the low bits)."""
        return self.cell("concat", {"a_width": len(a), "b_width": len(b)}, {"A": a, "B": b}, len(a) + len(b), name=name)

    def slice(self, a, offset, width, name=None):
        return self.cell("slice", {"width": len(a), "offset": offset, "y_width": width}, {"A": a}, width, name=name)

    def instance(self, module: "ModuleBuilder", conns: dict, name: str | None = None) -> dict:
        """Instantiate ``module``; input conns are given, output words are returned."""
        iname = self._name(module.name, name)
        all_conns = {}
        outs = {}
        for pname, p in module.ports.items():
            if p["dir"] == "input":
                bits = conns[pname]
                if len(bits) != p["width"]:
                    raise ValueError(f"{iname}.{pname}: width {len(bits)} != {p['width']}")
                all_conns[pname] = list(bits)
            else:
                y = self.wire(p["width"])
                all_conns[pname] = y
                outs[pname] = y
        self.instances[iname] = {"module": module.name, "conns": all_conns}
        return outs

    def to_dict(self) -> dict:
        for cname, c in self.cells.items():
            if c["conns"].get("D", 0) is None:
                raise ValueError(f"register {self.name}.{cname} never connected")
        return {"ports": self.ports, "cells": self.cells, "instances": self.instances}


class DesignBuilder:
    def __init__(self, top: str):
        self.top = top
        self.modules: dict[str, ModuleBuilder] = {}

    def module(self, name: str) -> ModuleBuilder:
        if name in self.modules:
            raise ValueError(f"module {name!r} already defined")
        m = ModuleBuilder(name)
        self.modules[name] = m
        return m

    def to_dict(self) -> dict:
        return {"top": self.top, "modules": {n: m.to_dict() for n, m in self.modules.items()}}

    def build(self) -> WordNetlist:
        return netlist_from_dict(self.to_dict())
