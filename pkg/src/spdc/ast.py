"""Syntax tree for SPD programs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union


class PortClass(enum.Enum):
    NUMERIC = "NUMERIC"
    RAW = "RAW"
    VLD = "VLD"
    SOP = "SOP"
    EOP = "EOP"

    @property
    def is_control(self) -> bool:
        return self in (PortClass.VLD, PortClass.SOP, PortClass.EOP)


class NodeKind(enum.Enum):
    EQU = "equ"
    HDL = "HDL"


# -- expressions ------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Num:
    value: float  # always a binary32 value


@dataclass(frozen=True)
class Const:
    """A param reference after resolution; never produced by the parser."""
    name: str
    value: float


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


Expr = Union[Var, Num, Const, BinOp, Neg]


def expr_vars(expr: Expr) -> list[str]:
    """Variable names read by ``expr`` in first-appearance order."""
    seen: dict[str, None] = {}

    def walk(e: Expr) -> None:
        if isinstance(e, Var):
            seen.setdefault(e.name)
        elif isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, Neg):
            walk(e.operand)

    walk(expr)
    return list(seen)


# -- declarations -----------------------------------------------------------

@dataclass(frozen=True)
class PortDecl:
    name: str
    klass: PortClass
    width: int = 32
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class VarRef:
    name: str
    bit_range: tuple[int, int] | None = None  # (msb, lsb)
    line: int | None = field(default=None, compare=False)
    col: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class HdlCall:
    module_name: str
    outputs: tuple[VarRef, ...]
    inputs: tuple[VarRef, ...]
    hdl_params: tuple[tuple[str, str], ...] = ()

    def param(self, name: str) -> str | None:
        for key, value in self.hdl_params:
            if key == name:
                return value
        return None


@dataclass(frozen=True)
class NodeDecl:
    label: str
    declared_delay: int
    kind: NodeKind
    lhs: str | None = None           # EQU only
    equation: Expr | None = None     # EQU only
    call: HdlCall | None = None      # HDL only
    initiation_interval: int = 1
    line: int | None = field(default=None, compare=False)

    @property
    def output_vars(self) -> list[str]:
        if self.kind is NodeKind.EQU:
            return [self.lhs]
        return [v.name for v in self.call.outputs]

    @property
    def input_refs(self) -> list[VarRef]:
        if self.kind is NodeKind.EQU:
            return [VarRef(n) for n in expr_vars(self.equation)]
        return list(self.call.inputs)


@dataclass(frozen=True)
class SpdProgram:
    name: str
    inputs: tuple[PortDecl, ...]
    outputs: tuple[PortDecl, ...]
    params: dict[str, float]
    nodes: tuple[NodeDecl, ...]
    filename: str | None = field(default=None, compare=False)

    def node(self, label: str) -> NodeDecl:
        for n in self.nodes:
            if n.label == label:
                return n
        raise KeyError(label)
