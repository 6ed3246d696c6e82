import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spdc import f32
from spdc.ast import BinOp, Neg, Num, Var
from spdc.errors import SpdError
from spdc.exprsynth import (OpKind, evaluate_dag, evaluate_expr, lower_equation, lower_with_table,
                            resolve_params)
from spdc.latency import LatencyModel, default_model
from spdc.parser import parse_equation

T125 = default_model().table_for(125)


def test_default_tiers():
    m = default_model()
    assert [mhz for mhz, _ in m.tiers] == [125, 250, 500]
    t = m.table_for(250)
    assert (t.add, t.sub, t.mul, t.const_mul, t.div, t.converter_in) == (5, 5, 4, 3, 18, 1)
    assert m.tier_for(100)[0] == 125
    assert m.tier_for(125)[0] == 125
    assert m.tier_for(126)[0] == 250
    with pytest.raises(SpdError) as ei:
        m.table_for(501)
    assert ei.value.code == "FREQ_OUT_OF_RANGE"


def test_model_validation(tmp_path):
    good = default_model().to_dict()
    bad = json.loads(json.dumps(good))
    bad["tiers"][1]["div"] = 1
    with pytest.raises(SpdError) as ei:
        LatencyModel.from_dict(bad)
    assert ei.value.code == "BAD_LATENCY_MODEL"
    bad = json.loads(json.dumps(good))
    bad["tiers"][0]["add"] = 0
    with pytest.raises(SpdError):
        LatencyModel.from_dict(bad)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(good))
    assert LatencyModel.load(path) == default_model()
    path.write_text("{not json")
    with pytest.raises(SpdError) as ei:
        LatencyModel.load(path)
    assert ei.value.code == "BAD_LATENCY_MODEL"


def test_eq1_lowering():
    dag = lower_with_table(parse_equation("(a - b) * p1"), T125, {"p1": 0.5})
    assert [op.kind for op in dag.ops] == [OpKind.SUB, OpKind.CONST_MUL]
    assert dag.total_latency == 5
    assert dag.census["sub"] == 1 and dag.census["const_mul"] == 1


def test_eq2_lowering_pads_d():
    dag = lower_with_table(parse_equation("tmp1 / c + d"), T125)
    div, add = dag.ops
    assert div.kind is OpKind.DIV and add.kind is OpKind.ADD
    assert dag.total_latency == 15
    assert add.operands[1].ref == "d" and add.operands[1].delay == 12
    assert add.operands[0].delay == 0


def test_copy_equation():
    dag = lower_with_table(parse_equation("x"), T125)
    assert dag.ops == [] and dag.total_latency == 0


def test_division_by_constant():
    exact = lower_with_table(parse_equation("x / 4.0"), T125)
    assert [op.kind for op in exact.ops] == [OpKind.CONST_MUL] and exact.ops[0].const == 0.25
    inexact = lower_with_table(parse_equation("x / 3.0"), T125)
    assert [op.kind for op in inexact.ops] == [OpKind.DIV]
    recip = lower_with_table(parse_equation("1.0 / rho"), T125)
    assert [op.kind for op in recip.ops] == [OpKind.DIV]
    assert recip.ops[0].operands[0].kind == "const"


def test_negation_folds():
    dag = lower_with_table(parse_equation("a + -b"), T125)
    assert [op.kind for op in dag.ops] == [OpKind.SUB]
    dag = lower_with_table(parse_equation("-a"), T125)
    assert [op.kind for op in dag.ops] == [OpKind.NEG] and dag.total_latency == 0
    dag = lower_with_table(parse_equation("-a * b"), T125)
    assert [op.kind for op in dag.ops] == [OpKind.NEG, OpKind.MUL]


def test_const_mul_both_sides():
    for text in ("2.0 * x", "x * 2.0"):
        dag = lower_with_table(parse_equation(text), T125)
        assert [op.kind for op in dag.ops] == [OpKind.CONST_MUL]


# -- properties -------------------------------------------------------------

VARS = ["a", "b", "c", "d"]


@st.composite
def exprs(draw, depth=4):
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        if draw(st.booleans()):
            return Var(draw(st.sampled_from(VARS)))
        return Num(f32.round_f32(draw(st.sampled_from([0.5, 2.0, 3.0, 0.1, 1.5, -0.75]))))
    if draw(st.integers(0, 6)) == 0:
        return Neg(draw(exprs(depth=depth - 1)))
    return BinOp(draw(st.sampled_from("+-*/")), draw(exprs(depth=depth - 1)), draw(exprs(depth=depth - 1)))


finite32 = st.floats(width=32, allow_nan=False, allow_infinity=False)


def _same(x: float, y: float) -> bool:
    return (math.isnan(x) and math.isnan(y)) or f32.f32_bits(x) == f32.f32_bits(y)


@settings(max_examples=300, deadline=None)
@given(exprs(), st.fixed_dictionaries({v: finite32 for v in VARS}))
def test_dag_matches_tree_evaluation(expr, env):
    dag = lower_with_table(expr, T125)
    assert _same(evaluate_dag(dag, env), evaluate_expr(expr, env))


@settings(max_examples=200, deadline=None)
@given(exprs())
def test_latency_monotone_in_frequency(expr):
    m = default_model()
    lats = [lower_equation(expr, m, f).total_latency for f in (125, 250, 500)]
    assert lats == sorted(lats)


@settings(max_examples=200, deadline=None)
@given(exprs())
def test_internal_balance(expr):
    dag = lower_with_table(expr, T125)
    for op in dag.ops:
        arrivals = {o.arrival + o.delay for o in op.operands if o.arrival is not None}
        assert len(arrivals) <= 1
        if arrivals:
            assert arrivals == {op.start}
    # total latency is the longest leaf-to-root path
    done = [op.start + op.latency for op in dag.ops]
    if dag.result.kind == "op":
        assert dag.total_latency == done[dag.result.ref] == max(done)


@settings(max_examples=300, deadline=None)
@given(finite32, st.sampled_from([0.5, 2.0, 3.0, 0.1, -1.25, 1e-3]))
def test_const_mul_equals_mul(x, k):
    k = f32.round_f32(k)
    cm = lower_with_table(BinOp("*", Var("x"), Num(k)), T125)
    mm = lower_with_table(BinOp("*", Var("x"), Var("k")), T125)
    assert cm.ops[0].kind is OpKind.CONST_MUL and mm.ops[0].kind is OpKind.MUL
    assert _same(evaluate_dag(cm, {"x": x}), evaluate_dag(mm, {"x": x, "k": k}))


def test_binary32_rounding_per_operator():
    # 1 + 2^-24 rounds back to 1 in binary32, so (1 + e) - 1 == 0, unlike float64
    e = float(np.float32(2.0 ** -24))
    expr = parse_equation("(a + b) - a")
    assert evaluate_expr(expr, {"a": 1.0, "b": e}) == 0.0
    assert evaluate_dag(lower_with_table(expr, T125), {"a": 1.0, "b": e}) == 0.0


def test_resolve_params_only_touches_params():
    e = resolve_params(parse_equation("x * p + y"), {"p": 2.0})
    assert e.left.right.value == 2.0 and e.right == Var("y")
