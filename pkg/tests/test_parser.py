import pytest
from hypothesis import given, settings, strategies as st

from spdc.ast import BinOp, Const, Neg, NodeKind, Num, PortClass, Var
from spdc.errors import SpdError
from spdc.parser import (classify_port, format_program, parse, parse_assignment, parse_equation, parse_file,
                         tokenize)
from spdc.lbm import lbm_source

from conftest import SAMPLE_SOURCE


def test_sample_core_structure(sample_program):
    p = sample_program
    assert p.name == "sample_core"
    assert [i.name for i in p.inputs] == ["a", "b", "c", "d"]
    assert [o.name for o in p.outputs] == ["lg", "sm"]
    assert p.params == {"p1": 0.5}
    assert [n.label for n in p.nodes] == ["eq1", "eq2", "lathan", "swap"]
    assert [n.kind for n in p.nodes] == [NodeKind.EQU, NodeKind.EQU, NodeKind.HDL, NodeKind.HDL]
    swap = p.nodes[3].call
    assert swap.inputs[0].name == "less" and swap.inputs[0].bit_range == (0, 0)
    assert p.nodes[2].declared_delay == 1


def test_minimal_program():
    p = parse("Name t\nInput a;\nOutput b;\nn1 0, equ, b = a;")
    assert p.name == "t" and len(p.nodes) == 1
    assert p.nodes[0].equation == Var("a")


def test_equation_shapes():
    assert parse_equation("(a - b) * p1") == BinOp("*", BinOp("-", Var("a"), Var("b")), Var("p1"))
    assert parse_equation("tmp1 / c + d") == BinOp("+", BinOp("/", Var("tmp1"), Var("c")), Var("d"))
    assert parse_equation("x") == Var("x")
    assert parse_equation("a - b - c") == BinOp("-", BinOp("-", Var("a"), Var("b")), Var("c"))
    assert parse_equation("-a * b") == BinOp("*", Neg(Var("a")), Var("b"))


def test_literals_round_to_binary32():
    e = parse_equation("0.1 * x")
    assert isinstance(e.left, Num)
    import struct
    assert e.left.value == struct.unpack("<f", struct.pack("<f", 0.1))[0]


def test_multiple_assignment_rejected():
    with pytest.raises(SpdError) as ei:
        parse_assignment("a = b = c")
    assert ei.value.code == "MULTIPLE_ASSIGNMENT"
    with pytest.raises(SpdError) as ei:
        parse("Name t\nInput a\nOutput b\nn1 0, equ, b = a = a\n")
    assert ei.value.code == "MULTIPLE_ASSIGNMENT"


@pytest.mark.parametrize("name,klass", [
    ("iAtr_RAW", PortClass.RAW), ("if0", PortClass.NUMERIC), ("i_VLD", PortClass.VLD),
    ("x_SOP_y", PortClass.SOP), ("o_EOP", PortClass.EOP), ("RAWdata", PortClass.NUMERIC),
])
def test_classify_port(name, klass):
    assert classify_port(name) is klass


def test_optional_semicolons_and_continuation():
    src = "Name t;\nInput a, \\\n  b\nOutput c;\nn1 0, equ, c = a + \\\n b\n"
    p = parse(src)
    assert [i.name for i in p.inputs] == ["a", "b"]
    with pytest.raises(SpdError) as ei:
        parse("Name t\nInput a Output b\nn1 0, equ, b = a\n")
    assert ei.value.code == "SYNTAX_ERROR"


def test_two_statements_on_one_line_need_semicolon():
    assert parse("Name t; Input a; Output b; n1 0, equ, b = a").name == "t"


@pytest.mark.parametrize("src,code", [
    ("Name t\nName u\nInput a\nOutput b\nn 0, equ, b = a\n", "DUPLICATE_NAME_DECL"),
    ("Name t\nInput a\nOutput b\nn 0, foo, b = a\n", "UNKNOWN_MODULE_KIND"),
    ("Name t\nInput a\nOutput b\nn 0, equ, b = a\nn 0, equ, c = a\n", "DUPLICATE_LABEL"),
    ("Name t\nInput a\nOutput b\nn 0, equ, b = (a\n", "SYNTAX_ERROR"),
    ("Name t\nInput a\nOutput b\nn 0, equ, b = a $\n", "ILLEGAL_CHARACTER"),
    ("Name t\nInput a\nOutput b\nn 0, HDL, (b) = m(a[40:0])\n", "BAD_BIT_RANGE"),
])
def test_errors_are_located(src, code):
    with pytest.raises(SpdError) as ei:
        parse(src, "x.spd")
    err = ei.value
    assert err.code == code
    assert err.line is not None
    assert str(err).startswith(f"x.spd:{err.line}")


def test_missing_file():
    with pytest.raises(SpdError) as ei:
        parse_file("/nonexistent/file.spd")
    assert ei.value.code == "FILE_NOT_FOUND"


def test_hdl_params_are_opaque_text():
    p = parse("Name t\nInput a\nOutput b\nm 66, HDL, (b) = mDelay(a), <.pWidth(32), .pSel(3'b011)>\n")
    assert p.nodes[0].call.hdl_params == (("pWidth", "32"), ("pSel", "3'b011"))


def _blank_token(src: str, tok) -> str:
    lines = src.split("\n")
    line = lines[tok.line - 1]
    lines[tok.line - 1] = line[:tok.col - 1] + " " * len(tok.text) + line[tok.col - 1 + len(tok.text):]
    return "\n".join(lines)


def test_single_token_deletion_fails_with_location():
    tokens = [t for t in tokenize(SAMPLE_SOURCE) if t.kind != "NEWLINE"]
    survivors = []
    for tok in tokens:
        try:
            parse(_blank_token(SAMPLE_SOURCE, tok))
        except SpdError as err:
            assert err.line is not None
        else:
            survivors.append(tok)
    # optional terminators, and "(a - b)" -> "( - b)" which is a valid negation
    assert all(t.text == ";" for t in survivors if (t.line, t.col) != (9, 31))
    assert [t.text for t in survivors if t.text != ";"] == ["a"]


def test_round_trip_bundled(sample_program):
    for src in (SAMPLE_SOURCE, lbm_source()):
        p = parse(src)
        again = parse(format_program(p))
        assert again == p


# -- properties -------------------------------------------------------------

_names = st.sampled_from(["a", "b", "c", "x1", "y_2"])
_nums = st.sampled_from(["0.5", "1.0", "2.0", "3.25", "0.1"])


@st.composite
def expressions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(st.one_of(_names, _nums))
    op = draw(st.sampled_from("+-*/"))
    left = draw(expressions(depth=depth - 1))
    right = draw(expressions(depth=depth - 1))
    text = f"({left} {op} {right})"
    return f"-{text}" if draw(st.booleans()) and depth == 3 else text


@settings(max_examples=200, deadline=None)
@given(expressions())
def test_equation_pretty_print_round_trip(text):
    from spdc.parser import format_expr
    e = parse_equation(text)
    assert parse_equation(format_expr(e)) == e


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_never_panics_on_bytes(data):
    text = data.decode("utf-8", errors="replace")
    try:
        parse(text)
    except SpdError as err:
        assert err.code
        assert str(err)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="Name Input Output Param equ HDL abc01=+-*/(),;[]:<>.\n#", max_size=120))
def test_never_panics_on_spd_like_text(text):
    try:
        parse(text)
    except SpdError as err:
        assert err.code


def test_params_resolve_to_constants_not_edges(sample_program):
    from spdc.dfg import build_dfg
    g = build_dfg(sample_program)
    eq1 = g.by_label("eq1")
    assert eq1.payload == BinOp("*", BinOp("-", Var("a"), Var("b")), Const("p1", 0.5))
    assert all(e.var != "p1" for e in g.edges)
