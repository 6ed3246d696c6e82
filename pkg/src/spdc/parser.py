"""Tokenizer and recursive-descent parser for SPD source text.

Grammar (one statement per logical line, ``;`` optional at end of line)::

    program   := { stmt (';' | NEWLINE) }
    stmt      := 'Name' IDENT
               | 'Input' IDENT {',' IDENT}
               | 'Output' IDENT {',' IDENT}
               | 'Param' IDENT '=' ['-'] NUMBER
               | IDENT INT ',' KIND ',' body
    body      := IDENT '=' expr                                 (KIND = equ)
               | outs '=' IDENT '(' refs [',' plist] ')' [',' plist]  (KIND = HDL)
    outs      := ref | '(' ref {',' ref} ')'
    ref       := IDENT ['[' INT [':' INT] ']']
    plist     := '<' '.' IDENT '(' literal ')' {',' '.' IDENT '(' literal ')'} '>'
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import f32
from .ast import (BinOp, Expr, HdlCall, Neg, NodeDecl, NodeKind, Num, PortClass,
                  PortDecl, SpdProgram, Var, VarRef, expr_vars)
from .errors import SpdError

RESERVED = ("Name", "Input", "Output", "Param")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER SIZED PUNCT NEWLINE EOF
    text: str
    line: int
    col: int

    def __repr__(self) -> str:
        return f"{self.kind}({self.text!r}@{self.line}:{self.col})"


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<comment>\#[^\n]*)
  | (?P<cont>\\[ \t\r]*(?:\#[^\n]*)?\n)
  | (?P<nl>\n)
  | (?P<sized>\d*'[sS]?[bBoOdDhH][0-9a-fA-F_xXzZ?]+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[,;=()\[\]:+\-*/<>.])
""", re.VERBOSE)


def tokenize(source: str, filename: str | None = None) -> list[Token]:
    """Split SPD text into tokens.

    Comments and blank lines vanish; a trailing backslash joins the next
    physical line. NEWLINE tokens mark logical line ends (never repeated).
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise SpdError("ILLEGAL_CHARACTER", f"illegal character {source[pos]!r}",
                           line, col, filename)
        kind = m.lastgroup
        text = m.group()
        if kind in ("cont", "nl"):
            if kind == "nl" and tokens and tokens[-1].kind != "NEWLINE":
                tokens.append(Token("NEWLINE", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "number":
            tokens.append(Token("NUMBER", text, line, col))
        elif kind == "sized":
            tokens.append(Token("SIZED", text, line, col))
        elif kind == "ident":
            tokens.append(Token("IDENT", text, line, col))
        elif kind == "punct":
            tokens.append(Token("PUNCT", text, line, col))
        pos = m.end()
    if tokens and tokens[-1].kind != "NEWLINE":
        tokens.append(Token("NEWLINE", "\n", line, pos - line_start + 1))
    return tokens


_MARKERS = {
    "_RAW": PortClass.RAW,
    "_VLD": PortClass.VLD,
    "_SOP": PortClass.SOP,
    "_EOP": PortClass.EOP,
}


def classify_port(name: str) -> PortClass:
    """Port class from the ``_RAW_``/``_VLD_``/``_SOP_``/``_EOP_`` markers.

    The marker may sit anywhere followed by ``_`` or end the name.
    """
    for marker, klass in _MARKERS.items():
        if marker + "_" in name or name.endswith(marker):
            return klass
    return PortClass.NUMERIC


class _Parser:
    def __init__(self, tokens: list[Token], filename: str | None):
        self.toks = tokens
        self.i = 0
        self.filename = filename
        last = tokens[-1] if tokens else None
        eof_line = last.line + 1 if last else 1
        self.eof = Token("EOF", "", eof_line, 1)

    # -- token helpers
    def peek(self, k: int = 0) -> Token:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else self.eof

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, code: str, msg: str, tok: Token | None = None) -> SpdError:
        tok = tok or self.peek()
        return SpdError(code, msg, tok.line, tok.col, self.filename)

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.text == text

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "PUNCT" or tok.text != text:
            raise self.error("SYNTAX_ERROR", f"expected {text!r}, found {_describe(tok)}")
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.error("SYNTAX_ERROR", f"expected {what}, found {_describe(tok)}")
        return self.next()

    def integer(self, what: str) -> int:
        tok = self.peek()
        if tok.kind != "NUMBER" or not tok.text.isdigit():
            raise self.error("SYNTAX_ERROR", f"expected {what}, found {_describe(tok)}")
        self.next()
        return int(tok.text)

    def end_statement(self) -> None:
        if self.at(";"):
            self.next()
            if self.peek().kind == "NEWLINE":
                self.next()
            return
        tok = self.peek()
        if tok.kind == "NEWLINE":
            self.next()
            return
        if tok.kind == "EOF":
            return
        raise self.error("SYNTAX_ERROR", f"expected ';' or end of line, found {_describe(tok)}")

    # -- program
    def program(self) -> SpdProgram:
        name: str | None = None
        inputs: list[PortDecl] = []
        outputs: list[PortDecl] = []
        params: dict[str, float] = {}
        param_tok: dict[str, Token] = {}
        nodes: list[NodeDecl] = []
        first: Token | None = None
        while self.peek().kind != "EOF":
            if self.peek().kind == "NEWLINE":
                self.next()
                continue
            head = self.ident("statement label")
            first = first or head
            label = head.text
            if label == "Name":
                if name is not None:
                    raise self.error("DUPLICATE_NAME_DECL", "second Name declaration", head)
                name = self.ident("module name").text
            elif label in ("Input", "Output"):
                target = inputs if label == "Input" else outputs
                while True:
                    tok = self.ident("port name")
                    target.append(PortDecl(tok.text, classify_port(tok.text), 32, tok.line))
                    if not self.at(","):
                        break
                    self.next()
            elif label == "Param":
                tok = self.ident("parameter name")
                self.expect("=")
                value = self.param_literal()
                if tok.text in params:
                    raise self.error("DUPLICATE_PARAM", f"parameter {tok.text!r} redefined", tok)
                params[tok.text] = value
                param_tok[tok.text] = tok
            else:
                nodes.append(self.node_decl(head))
            self.end_statement()
        if name is None:
            raise self.error("MISSING_NAME", "program has no Name declaration", first or self.eof)
        if not inputs:
            raise self.error("MISSING_PORTS", "program declares no Input ports", first)
        if not outputs:
            raise self.error("MISSING_PORTS", "program declares no Output ports", first)
        self.validate(inputs, outputs, params, param_tok, nodes)
        return SpdProgram(name, tuple(inputs), tuple(outputs), params, tuple(nodes),
                          self.filename)

    def validate(self, inputs, outputs, params, param_tok, nodes) -> None:
        for ports, what in ((inputs, "input"), (outputs, "output")):
            seen: set[str] = set()
            controls: dict[PortClass, str] = {}
            for p in ports:
                if p.name in seen:
                    raise SpdError("DUPLICATE_PORT", f"{what} port {p.name!r} declared twice",
                                   p.line, None, self.filename)
                seen.add(p.name)
                if p.klass.is_control:
                    if p.klass in controls:
                        raise SpdError("DUPLICATE_CONTROL_PORT",
                                       f"{what} ports {controls[p.klass]!r} and {p.name!r} "
                                       f"are both {p.klass.value}", p.line, None, self.filename)
                    controls[p.klass] = p.name
        labels: set[str] = set()
        node_vars: set[str] = set()
        for n in nodes:
            if n.label in labels:
                raise SpdError("DUPLICATE_LABEL", f"node label {n.label!r} used twice",
                               n.line, None, self.filename)
            labels.add(n.label)
            node_vars.update(n.output_vars)
        port_names = {p.name for p in inputs} | {p.name for p in outputs}
        for pname, tok in param_tok.items():
            if pname in port_names or pname in node_vars:
                raise self.error("PARAM_COLLISION",
                                 f"parameter {pname!r} collides with a port or node variable", tok)

    def param_literal(self) -> float:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        tok = self.peek()
        if tok.kind != "NUMBER":
            raise self.error("SYNTAX_ERROR", f"expected numeric literal, found {_describe(tok)}")
        self.next()
        value = f32.parse_decimal_f32(tok.text)
        return -value if neg else value

    def node_decl(self, head: Token) -> NodeDecl:
        delay = self.integer("delay cycles (integer)")
        self.expect(",")
        kind_tok = self.ident("module type")
        if kind_tok.text.lower() == "equ":
            kind = NodeKind.EQU
        elif kind_tok.text.lower() == "hdl":
            kind = NodeKind.HDL
        else:
            raise self.error("UNKNOWN_MODULE_KIND",
                             f"module type must be 'equ' or 'HDL', not {kind_tok.text!r}", kind_tok)
        self.expect(",")
        if kind is NodeKind.EQU:
            lhs = self.ident("assigned variable")
            self.expect("=")
            expr = self.expr()
            if self.at("="):
                raise self.error("MULTIPLE_ASSIGNMENT",
                                 "an equation assigns exactly one variable (SSA)")
            return NodeDecl(head.text, delay, kind, lhs=lhs.text, equation=expr, line=head.line)
        outputs = self.out_list()
        self.expect("=")
        module = self.ident("HDL module name")
        self.expect("(")
        inputs: list[VarRef] = []
        plist: list[tuple[str, str]] = []
        if not self.at(")"):
            while True:
                if self.at("<"):
                    plist = self.param_list()
                    break
                inputs.append(self.ref(allow_range=True))
                if not self.at(","):
                    break
                self.next()
        self.expect(")")
        if self.at(","):
            self.next()
            if plist:
                raise self.error("SYNTAX_ERROR", "HDL parameter list given twice")
            plist = self.param_list()
        call = HdlCall(module.text, tuple(outputs), tuple(inputs), tuple(plist))
        ii = 1
        raw_ii = call.param("pII")
        if raw_ii is not None:
            if not raw_ii.isdigit() or int(raw_ii) < 1:
                raise self.error("SYNTAX_ERROR", f"pII must be a positive integer, not {raw_ii!r}")
            ii = int(raw_ii)
        return NodeDecl(head.text, delay, kind, call=call, initiation_interval=ii, line=head.line)

    def out_list(self) -> list[VarRef]:
        if self.at("("):
            self.next()
            refs = [self.ref(allow_range=False)]
            while self.at(","):
                self.next()
                refs.append(self.ref(allow_range=False))
            self.expect(")")
            return refs
        return [self.ref(allow_range=False)]

    def ref(self, allow_range: bool) -> VarRef:
        tok = self.ident("variable")
        if not self.at("["):
            return VarRef(tok.text, None, tok.line, tok.col)
        if not allow_range:
            raise self.error("SYNTAX_ERROR", "bit ranges are only allowed on HDL inputs")
        self.next()
        msb = self.integer("bit index")
        lsb = msb
        if self.at(":"):
            self.next()
            lsb = self.integer("bit index")
        self.expect("]")
        if not 0 <= lsb <= msb <= 31:
            raise SpdError("BAD_BIT_RANGE", f"bit range [{msb}:{lsb}] outside 31..0 or reversed",
                           tok.line, tok.col, self.filename)
        return VarRef(tok.text, (msb, lsb), tok.line, tok.col)

    def param_list(self) -> list[tuple[str, str]]:
        self.expect("<")
        items: list[tuple[str, str]] = []
        while True:
            self.expect(".")
            key = self.ident("HDL parameter name").text
            self.expect("(")
            text = ""
            if self.at("-"):
                self.next()
                text = "-"
            tok = self.peek()
            if tok.kind not in ("NUMBER", "SIZED", "IDENT"):
                raise self.error("SYNTAX_ERROR", f"expected HDL parameter value, found {_describe(tok)}")
            self.next()
            items.append((key, text + tok.text))
            self.expect(")")
            if not self.at(","):
                break
            self.next()
        self.expect(">")
        return items

    # -- expressions: standard precedence, left-assoc
    def expr(self) -> Expr:
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.at("-"):
            self.next()
            if self.peek().kind == "NUMBER":
                return Num(-f32.parse_decimal_f32(self.next().text))
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return Num(f32.parse_decimal_f32(tok.text))
        if tok.kind == "IDENT":
            self.next()
            return Var(tok.text)
        if self.at("("):
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("SYNTAX_ERROR", f"expected operand, found {_describe(tok)}")


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    if tok.kind == "NEWLINE":
        return "end of line"
    return repr(tok.text)


def parse_program(tokens: list[Token], filename: str | None = None) -> SpdProgram:
    return _Parser(tokens, filename).program()


def parse(source: str, filename: str | None = None) -> SpdProgram:
    """Tokenize and parse SPD text in one call."""
    return parse_program(tokenize(source, filename), filename)


def parse_file(path) -> SpdProgram:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (FileNotFoundError, IsADirectoryError):
        raise SpdError("FILE_NOT_FOUND", f"cannot open {path}", filename=str(path)) from None
    return parse(text, str(path))


def parse_assignment(text: str) -> tuple[str, Expr]:
    """Parse ``lhs = expr`` and return both halves."""
    p = _Parser([t for t in tokenize(text) if t.kind != "NEWLINE"], None)
    lhs = p.ident("assigned variable").text
    p.expect("=")
    tree = p.expr()
    if p.at("="):
        raise p.error("MULTIPLE_ASSIGNMENT", "an equation assigns exactly one variable (SSA)")
    if p.peek().kind != "EOF":
        raise p.error("SYNTAX_ERROR", f"unexpected {_describe(p.peek())}")
    return lhs, tree


def parse_equation(text: str) -> Expr:
    """Parse the right-hand side of an equation (``lhs =`` prefix tolerated)."""
    toks = [t for t in tokenize(text) if t.kind != "NEWLINE"]
    eqs = [t for t in toks if t.kind == "PUNCT" and t.text == "="]
    if len(eqs) > 1:
        raise SpdError("MULTIPLE_ASSIGNMENT", "an equation assigns exactly one variable (SSA)",
                       eqs[1].line, eqs[1].col)
    if eqs:
        return parse_assignment(text)[1]
    p = _Parser(toks, None)
    tree = p.expr()
    if p.peek().kind != "EOF":
        raise p.error("SYNTAX_ERROR", f"unexpected {_describe(p.peek())}")
    return tree


# -- pretty printing --------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(e: Expr, parent: int = 0, right: bool = False) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Num):
        text = f32.format_f32(e.value)
        return f"({text})" if text.startswith("-") and parent else text
    if isinstance(e, Neg):
        if isinstance(e.operand, Num):
            return f"-({format_expr(e.operand)})"
        return f"-{format_expr(e.operand, 3)}"
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        body = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec, True)}"
        if prec < parent or (right and prec == parent):
            return f"({body})"
        return body
    raise TypeError(f"cannot format {e!r}")


def _format_ref(r: VarRef) -> str:
    if r.bit_range is None:
        return r.name
    msb, lsb = r.bit_range
    return f"{r.name}[{msb}]" if msb == lsb else f"{r.name}[{msb}:{lsb}]"


def format_program(prog: SpdProgram) -> str:
    """Canonical SPD text; ``parse(format_program(p)) == p``."""
    lines = [f"Name {prog.name};",
             "Input " + ", ".join(p.name for p in prog.inputs) + ";",
             "Output " + ", ".join(p.name for p in prog.outputs) + ";"]
    for name, value in prog.params.items():
        lines.append(f"Param {name} = {f32.format_f32(value)};")
    for n in prog.nodes:
        if n.kind is NodeKind.EQU:
            body = f"{n.lhs} = {format_expr(n.equation)}"
        else:
            outs = ", ".join(_format_ref(r) for r in n.call.outputs)
            ins = ", ".join(_format_ref(r) for r in n.call.inputs)
            body = f"({outs}) = {n.call.module_name}({ins})"
            if n.call.hdl_params:
                body += ", <" + ", ".join(f".{k}({v})" for k, v in n.call.hdl_params) + ">"
        lines.append(f"{n.label} {n.declared_delay}, {n.kind.value}, {body};")
    return "\n".join(lines) + "\n"


__all__ = ["Token", "tokenize", "parse_program", "parse", "parse_file", "parse_equation",
           "parse_assignment", "classify_port", "format_program", "format_expr", "expr_vars",
           "RESERVED"]
