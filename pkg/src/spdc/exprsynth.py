"""Lowering of equation trees into internally balanced operator pipelines."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from . import f32
from .ast import BinOp, Const, Expr, Neg, Num, Var, expr_vars
from .latency import LatencyModel, OpTable


class OpKind(enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    CONST_MUL = "const_mul"
    DIV = "div"
    NEG = "neg"


FLOP_KINDS = (OpKind.ADD, OpKind.SUB, OpKind.MUL, OpKind.CONST_MUL, OpKind.DIV)


@dataclass(frozen=True)
class Operand:
    kind: str                  # "var" | "op" | "const"
    ref: str | int | float
    arrival: int | None = None  # cycle the value is ready; None for constants
    delay: int = 0             # alignment delay inserted in front of the consumer


@dataclass(frozen=True)
class Operator:
    index: int
    kind: OpKind
    operands: tuple[Operand, ...]
    latency: int
    start: int
    const: float | None = None  # factor of a CONST_MUL

    @property
    def done(self) -> int:
        return self.start + self.latency


@dataclass
class OperatorDag:
    ops: list[Operator]
    result: Operand
    inputs: list[str]
    total_latency: int
    census: Counter = field(default_factory=Counter)

    @property
    def n_flops(self) -> int:
        return sum(self.census[k.value] for k in FLOP_KINDS)

    @property
    def internal_delay_cycles(self) -> int:
        return sum(o.delay for op in self.ops for o in op.operands)


def resolve_params(expr: Expr, params: Mapping[str, float]) -> Expr:
    """Replace ``Var`` leaves naming a param with ``Const`` leaves."""
    if isinstance(expr, Var):
        if expr.name in params:
            return Const(expr.name, params[expr.name])
        return expr
    if isinstance(expr, BinOp):
        return BinOp(expr.op, resolve_params(expr.left, params), resolve_params(expr.right, params))
    if isinstance(expr, Neg):
        return Neg(resolve_params(expr.operand, params))
    return expr


def _const_value(e: Expr) -> float | None:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg):
        inner = _const_value(e.operand)
        return None if inner is None else -inner
    return None


class _Lowerer:
    def __init__(self, table: OpTable):
        self.table = table
        self.ops: list[Operator] = []

    def emit(self, kind: OpKind, operands: list[Operand], const: float | None = None) -> Operand:
        timed = [o.arrival for o in operands if o.arrival is not None]
        ready = max(timed, default=0)
        aligned = tuple(
            Operand(o.kind, o.ref, o.arrival, 0 if o.arrival is None else ready - o.arrival)
            for o in operands)
        latency = 0 if kind is OpKind.NEG else getattr(self.table, kind.value)
        op = Operator(len(self.ops), kind, aligned, latency, ready, const)
        self.ops.append(op)
        return Operand("op", op.index, op.done)

    def lower(self, e: Expr) -> Operand:
        value = _const_value(e)
        if value is not None:
            return Operand("const", value)
        if isinstance(e, Var):
            return Operand("var", e.name, 0)
        if isinstance(e, Neg):
            return self.emit(OpKind.NEG, [self.lower(e.operand)])
        if isinstance(e, BinOp):
            return self.binop(e)
        raise TypeError(f"cannot lower {e!r}")

    def binop(self, e: BinOp) -> Operand:
        left, right = e.left, e.right
        if e.op in "+-":
            # a + (-b) == a - b and a - (-b) == a + b exactly in IEEE-754.
            if isinstance(right, Neg) and _const_value(right) is None:
                kind = OpKind.SUB if e.op == "+" else OpKind.ADD
                return self.emit(kind, [self.lower(left), self.lower(right.operand)])
            if e.op == "+" and isinstance(left, Neg) and _const_value(left) is None:
                return self.emit(OpKind.SUB, [self.lower(right), self.lower(left.operand)])
            kind = OpKind.ADD if e.op == "+" else OpKind.SUB
            return self.emit(kind, [self.lower(left), self.lower(right)])
        if e.op == "*":
            rc, lc = _const_value(right), _const_value(left)
            if rc is not None:
                return self.emit(OpKind.CONST_MUL, [self.lower(left)], rc)
            if lc is not None:
                return self.emit(OpKind.CONST_MUL, [self.lower(right)], lc)
            return self.emit(OpKind.MUL, [self.lower(left), self.lower(right)])
        if e.op == "/":
            rc = _const_value(right)
            if rc is not None and f32.is_exact_reciprocal(rc):
                return self.emit(OpKind.CONST_MUL, [self.lower(left)], f32.round_f32(1.0 / rc))
            return self.emit(OpKind.DIV, [self.lower(left), self.lower(right)])
        raise ValueError(f"unknown operator {e.op!r}")


def lower_with_table(expr: Expr, table: OpTable, params: Mapping[str, float] | None = None) -> OperatorDag:
    if params:
        expr = resolve_params(expr, params)
    low = _Lowerer(table)
    result = low.lower(expr)
    census = Counter({k.value: 0 for k in OpKind})
    census.update(op.kind.value for op in low.ops)
    total = result.arrival or 0
    return OperatorDag(low.ops, result, expr_vars(expr), total, census)


def lower_equation(expr: Expr, model: LatencyModel, freq: float,
                   params: Mapping[str, float] | None = None) -> OperatorDag:
    """Schedule ``expr`` as a pipeline using the tier of ``model`` covering ``freq``."""
    return lower_with_table(expr, model.table_for(freq), params)


def equation_latency(dag: OperatorDag) -> int:
    return dag.total_latency


# -- reference evaluation (binary32, round at every operator) ----------------

def _apply(kind: OpKind, args: list[float], const: float | None) -> float:
    if kind is OpKind.ADD:
        return f32.add(args[0], args[1])
    if kind is OpKind.SUB:
        return f32.sub(args[0], args[1])
    if kind is OpKind.MUL:
        return f32.mul(args[0], args[1])
    if kind is OpKind.CONST_MUL:
        return f32.mul(args[0], const)
    if kind is OpKind.DIV:
        return f32.div(args[0], args[1])
    return -args[0]


def evaluate_dag(dag: OperatorDag, env: Mapping[str, float]) -> float:
    """Evaluate the operator DAG combinationally."""
    values: list[float] = []

    def fetch(o: Operand) -> float:
        if o.kind == "const":
            return o.ref
        if o.kind == "var":
            return env[o.ref]
        return values[o.ref]

    for op in dag.ops:
        values.append(_apply(op.kind, [fetch(o) for o in op.operands], op.const))
    return fetch(dag.result)


def evaluate_expr(expr: Expr, env: Mapping[str, float],
                  params: Mapping[str, float] | None = None) -> float:
    """Direct recursive evaluation of the parse tree with per-operator rounding."""
    params = params or {}
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return params[expr.name] if expr.name in params else env[expr.name]
    if isinstance(expr, Neg):
        return -evaluate_expr(expr.operand, env, params)
    a = evaluate_expr(expr.left, env, params)
    b = evaluate_expr(expr.right, env, params)
    if expr.op == "+":
        return f32.add(a, b)
    if expr.op == "-":
        return f32.sub(a, b)
    if expr.op == "*":
        return f32.mul(a, b)
    return f32.div(a, b)


def census(dfg) -> dict[str, int]:
    """Operator counts over every lowered equation node, plus ``n_ops``."""
    total = Counter({k.value: 0 for k in OpKind})
    for node in dfg.nodes.values():
        if node.dag is not None:
            total.update(node.dag.census)
    counts = {k.value: total[k.value] for k in OpKind}
    counts["n_ops"] = sum(total[k.value] for k in FLOP_KINDS)
    return counts
