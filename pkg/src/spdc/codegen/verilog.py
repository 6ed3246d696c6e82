"""Verilog-2001 emission for scheduled designs.

Every instance is connected positionally as ``(clk, reset_n, ce, inputs...,
outputs...)``; the whole pipeline shares one clock enable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .. import __version__
from ..ast import PortClass, SpdProgram
from ..balance import ScheduledDfg
from ..dfg import DfgNode, NodeType
from ..errors import SpdError
from ..exprsynth import OperatorDag, OpKind
from ..f32 import f32_bits
from ..parser import format_expr

INTERFACE = ("clk", "reset_n", "ce", "in_data", "in_valid", "in_sop", "in_eop", "in_ready", "out_data",
             "out_valid", "out_sop", "out_eop", "out_ready", "out_empty")

KEYWORDS = frozenset("""
always and assign automatic begin buf bufif0 bufif1 case casex casez cell cmos config deassign default
defparam design disable edge else end endcase endconfig endfunction endgenerate endmodule endprimitive
endspecify endtable endtask event for force forever fork function generate genvar highz0 highz1 if
ifnone incdir include initial inout input instance integer join large liblist library localparam
macromodule medium module nand negedge nmos nor noshowcancelled not notif0 notif1 or output parameter
pmos posedge primitive pull0 pull1 pulldown pullup pulsestyle_ondetect pulsestyle_onevent rcmos real
realtime reg release repeat rnmos rpmos rtran rtranif0 rtranif1 scalared showcancelled signed small
specify specparam strong0 strong1 supply0 supply1 table task time tran tranif0 tranif1 tri tri0 tri1
triand trior trireg unsigned use uwire vectored wait wand weak0 weak1 while wire wor xnor xor
""".split())

OP_MODULE = {OpKind.ADD: "spdc_fp_add", OpKind.SUB: "spdc_fp_sub", OpKind.MUL: "spdc_fp_mul",
             OpKind.DIV: "spdc_fp_div", OpKind.CONST_MUL: "spdc_fp_cmul", OpKind.NEG: "spdc_fp_neg"}


def sanitize(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9_]", "_", name)
    if not s or s[0].isdigit():
        s = "n_" + s
    return s


class Names:
    """Deterministic identifier allocator for one Verilog module scope."""

    def __init__(self, reserved=()):
        self.taken: set[str] = set(KEYWORDS) | set(reserved)

    def claim(self, name: str) -> str:
        s = sanitize(name)
        if s in self.taken:
            raise SpdError("NAME_COLLISION", f"identifier {s!r} (from {name!r}) is already in use")
        self.taken.add(s)
        return s

    def fresh(self, name: str, suffix: str = "") -> str:
        """``name`` sanitized, or with a numeric suffix when already taken."""
        s = sanitize(name)
        cand, k = s, 0
        while cand in self.taken:
            k += 1
            cand = f"{s}_{suffix}{k}" if suffix else f"{s}_{k}"
        self.taken.add(cand)
        return cand


def hex32(word: int) -> str:
    return f"32'h{word & 0xFFFFFFFF:08x}"


@dataclass
class WidthAudit:
    """Declared width of each wire versus every endpoint that touches it."""

    declared: dict[str, int] = field(default_factory=dict)
    uses: list[tuple[str, int, str]] = field(default_factory=list)
    extra: list[str] = field(default_factory=list)

    def declare(self, wire: str, width: int) -> None:
        self.declared[wire] = width

    def use(self, wire: str, width: int, where: str) -> None:
        self.uses.append((wire, width, where))

    def mismatch(self, message: str) -> None:
        self.extra.append(message)

    def problems(self) -> list[str]:
        out = list(self.extra)
        for wire, width, where in self.uses:
            if wire not in self.declared:
                out.append(f"{where}: undeclared wire {wire}")
            elif self.declared[wire] != width:
                out.append(f"{where}: {wire} is {self.declared[wire]} bits, endpoint expects {width}")
        return out


def _port_decl(direction: str, width: int, name: str, kind: str = "wire") -> str:
    rng = f"[{width - 1}:0]" if width > 1 else ""
    return f"    {direction:<6} {kind} {rng:<9} {name}".rstrip()


def _sel(wire: str, bit_range) -> str:
    if bit_range is None:
        return wire
    hi, lo = bit_range
    return f"{wire}[{hi}]" if hi == lo else f"{wire}[{hi}:{lo}]"


def equation_module_name(top: str, label: str) -> str:
    return sanitize(f"{top}_{label}")


def emit_equation_module(name: str, dag: OperatorDag, lhs: str = "q", comment: str = "") -> str:
    """One equation as a pipeline of library FP operators; latency = ``dag.total_latency``."""
    names = Names(("clk", "reset_n", "ce"))
    ports = {v: names.fresh(v, "i") for v in dag.inputs}
    out = names.fresh(lhs, "o")
    lines = [f"// {name}: {comment}" if comment else f"// {name}",
             f"// latency {dag.total_latency} cycles; generated by spdc {__version__}",
             f"module {name} ("]
    decls = [_port_decl("input", 1, "clk"), _port_decl("input", 1, "reset_n"), _port_decl("input", 1, "ce")]
    decls += [_port_decl("input", 32, ports[v]) for v in dag.inputs]
    decls.append(_port_decl("output", 32, out))
    lines.append(",\n".join(decls))
    lines.append(");")
    op_wire: list[str] = []

    def operand(o, op_name: str, tag: str) -> str:
        if o.kind == "const":
            return hex32(f32_bits(o.ref))
        src = ports[o.ref] if o.kind == "var" else op_wire[o.ref]
        if o.delay == 0:
            return src
        w = names.fresh(f"{op_name}_{tag}")
        lines.append(f"    wire [31:0] {w};")
        lines.append(f"    spdc_delay #(.W(32), .D({o.delay})) {names.fresh(w + '_dly')} "
                     f"(clk, reset_n, ce, {src}, {w});")
        return w

    for op in dag.ops:
        op_name = names.fresh(f"op{op.index}")
        args = [operand(o, op_name, "ab"[k] if k < 2 else str(k)) for k, o in enumerate(op.operands)]
        q = names.fresh(f"{op_name}_q")
        lines.append(f"    wire [31:0] {q};")
        mod = OP_MODULE[op.kind]
        if op.kind is OpKind.NEG:
            lines.append(f"    {mod} {op_name} ({args[0]}, {q});")
        elif op.kind is OpKind.CONST_MUL:
            lines.append(f"    {mod} #(.LAT({op.latency}), .K({hex32(f32_bits(op.const))})) {op_name} "
                         f"(clk, reset_n, ce, {args[0]}, {q});")
        else:
            lines.append(f"    {mod} #(.LAT({op.latency})) {op_name} (clk, reset_n, ce, {', '.join(args)}, {q});")
        op_wire.append(q)
    res = dag.result
    if res.kind == "op":
        value = op_wire[res.ref]
    elif res.kind == "var":
        value = ports[res.ref]
    else:
        value = hex32(f32_bits(res.ref))
    lines.append(f"    assign {out} = {value};")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


@dataclass
class TopResult:
    text: str
    instantiated: list[tuple[str, tuple[tuple[str, str], ...]]]
    equation_modules: dict[str, tuple[str, str]]   # label -> (module name, source)
    audit: WidthAudit
    data_width_in: int
    data_width_out: int
    empty_width: int
    in_fields: list[tuple[str, PortClass]]
    out_fields: list[tuple[str, PortClass]]
    synthesized_sideband: list[str]


def _empty_width(fields: int) -> int:
    nbytes = max(4 * fields, 1)
    return max((nbytes - 1).bit_length(), 1)


def emit_top(sdfg: ScheduledDfg, program: SpdProgram, memory_threshold: int | None = None) -> TopResult:
    g = sdfg.dfg
    threshold = memory_threshold if memory_threshold is not None else sdfg.memory_threshold
    top = sanitize(program.name)
    names = Names(INTERFACE)
    audit = WidthAudit()
    instantiated: list[tuple[str, tuple]] = []
    eq_modules: dict[str, tuple[str, str]] = {}

    in_ports = [g.nodes[i] for i in g.input_ports]
    out_ports = [g.nodes[i] for i in g.output_ports]
    port_names = {}
    for p in in_ports + out_ports:
        port_names[p.id] = names.claim(p.label)
    inst_names = {}
    label_of: dict[str, str] = {}
    for nid in g.topo_order:
        n = g.nodes[nid]
        if n.kind in (NodeType.INPUT, NodeType.OUTPUT):
            continue
        s = sanitize(n.label)
        if s in label_of:
            raise SpdError("NAME_COLLISION", f"labels {label_of[s]!r} and {n.label!r} both map to {s!r}")
        label_of[s] = n.label
        inst_names[nid] = names.fresh(n.label, "i")

    in_fields = [(p.label, p.port.klass) for p in in_ports if not p.port.klass.is_control]
    out_fields = [(p.label, p.port.klass) for p in out_ports if not p.port.klass.is_control]
    win, wout = 32 * len(in_fields), 32 * len(out_fields)
    ew = _empty_width(len(out_fields))

    body: list[str] = []
    w = body.append
    w("    wire ce = out_ready | ~out_valid;")
    w("    assign in_ready = ce;")
    w(f"    assign out_empty = {ew}'d0;")
    w("")
    w("    // sink fields, element 0 in the least-significant word")
    pin_wire: dict[tuple[int, str], str] = {}
    k = 0
    for p in in_ports:
        nm = port_names[p.id]
        audit.declare(nm, 32)
        if p.port.klass.is_control:
            sig = {PortClass.VLD: "in_valid", PortClass.SOP: "in_sop", PortClass.EOP: "in_eop"}[p.port.klass]
            w(f"    wire [31:0] {nm} = {{31'b0, {sig}}};")
        else:
            w(f"    wire [31:0] {nm} = in_data[{32 * k + 31}:{32 * k}];")
            k += 1
        pin_wire[(p.id, p.out_pins[0].name)] = nm

    def src(node: DfgNode, pin: str, width: int) -> str:
        e = g.edge_into(node.id, pin)
        wire = pin_wire[e.src]
        where = f"{node.label}.{pin}"
        if e.bit_range is None:
            audit.use(wire, width, where)
        else:
            hi, lo = e.bit_range
            producer = g.nodes[e.src[0]]
            audit.use(wire, producer.out_pins[producer.out_index(e.src[1])].width, where)
            if hi - lo + 1 != width:
                audit.mismatch(f"{where}: slice [{hi}:{lo}] feeds a {width}-bit pin")
        return _sel(wire, e.bit_range)

    def declare(node: DfgNode, pin, base: str) -> str:
        nm = names.fresh(base, "w")
        audit.declare(nm, pin.width)
        rng = f"[{pin.width - 1}:0] " if pin.width > 1 else ""
        w(f"    wire {rng}{nm};")
        pin_wire[(node.id, pin.name)] = nm
        return nm

    w("")
    w("    // pipeline, topological order")
    for nid in g.topo_order:
        n = g.nodes[nid]
        if n.kind in (NodeType.INPUT, NodeType.OUTPUT):
            continue
        inst = inst_names[nid]
        if n.kind is NodeType.CONVERTER:
            d = src(n, "i", 32)
            q = declare(n, n.out_pins[0], f"{n.label}_o")
            w(f"    spdc_conv #(.LAT({n.latency})) {inst} (clk, reset_n, ce, {d}, {q});")
            instantiated.append(("spdc_conv", (("LAT", str(n.latency)),)))
        elif n.kind is NodeType.DELAY:
            width = n.in_pins[0].width
            d = src(n, "i", width)
            prev, prev_depth = d, 0
            in_memory = max(n.payload) >= threshold
            for k2, (pin, depth) in enumerate(zip(n.out_pins, n.payload)):
                base = f"{n.label}_{pin.name}" if len(n.out_pins) > 1 else f"{n.label}_o"
                q = declare(n, pin, base)
                seg = depth - prev_depth
                mod = "spdc_delay_ram" if in_memory and seg >= 2 else "spdc_delay"
                seg_inst = inst if k2 == 0 else names.fresh(f"{n.label}_s{k2}")
                w(f"    {mod} #(.W({width}), .D({seg})) {seg_inst} (clk, reset_n, ce, {prev}, {q});")
                instantiated.append((mod, (("W", str(width)), ("D", str(seg)))))
                prev, prev_depth = q, depth
        elif n.kind is NodeType.EQUATION:
            mod = equation_module_name(top, n.label)
            text = emit_equation_module(mod, n.dag, n.decl.lhs,
                                        f"{n.decl.lhs} = {format_expr(n.decl.equation)}")
            eq_modules[n.label] = (mod, text)
            args = [src(n, v, 32) for v in n.dag.inputs]
            q = declare(n, n.out_pins[0], n.decl.lhs)
            w(f"    {mod} {inst} ({', '.join(['clk', 'reset_n', 'ce'] + args + [q])});")
            instantiated.append((mod, ()))
        elif n.kind is NodeType.HDL:
            call = n.payload
            args = [src(n, p.name, p.width) for p in n.in_pins]
            outs = [declare(n, p, var) for p, var in zip(n.out_pins, n.decl.output_vars)]
            params = ", ".join(f".{k3}({v})" for k3, v in call.hdl_params)
            ptext = f" #({params})" if params else ""
            w(f"    {call.module_name}{ptext} {inst} ({', '.join(['clk', 'reset_n', 'ce'] + args + outs)});")
            instantiated.append((call.module_name, tuple(call.hdl_params)))

    w("")
    w("    // source fields and framing")
    field_wires = []
    ctrl = {}
    for p in out_ports:
        wire = src(p, p.in_pins[0].name, 32)
        nm = port_names[p.id]
        audit.declare(nm, 32)
        w(f"    wire [31:0] {nm} = {wire};")
        if p.port.klass.is_control:
            ctrl[p.port.klass] = nm
        else:
            field_wires.append(nm)
    if field_wires:
        w(f"    assign out_data = {{{', '.join(reversed(field_wires))}}};")
    synthesized = []
    for klass, sig in ((PortClass.VLD, "valid"), (PortClass.SOP, "sop"), (PortClass.EOP, "eop")):
        if klass not in ctrl:
            synthesized.append(sig)
    if synthesized:
        sb = names.fresh("sideband")
        width = len(synthesized)
        rng = f"[{width - 1}:0] " if width > 1 else ""
        w(f"    wire {rng}{sb};")
        ins = ", ".join(f"in_{s}" for s in reversed(synthesized))
        w(f"    spdc_delay #(.W({width}), .D({sdfg.pipeline_depth})) {names.fresh('sideband_dly')} "
          f"(clk, reset_n, ce, {{{ins}}}, {sb});")
        instantiated.append(("spdc_delay", (("W", str(width)), ("D", str(sdfg.pipeline_depth)))))
        for k4, s in enumerate(synthesized):
            w(f"    assign out_{s} = {sb}[{k4}];" if width > 1 else f"    assign out_{s} = {sb};")
    for klass, sig in ((PortClass.VLD, "valid"), (PortClass.SOP, "sop"), (PortClass.EOP, "eop")):
        if klass in ctrl:
            w(f"    assign out_{sig} = {ctrl[klass]}[0];")

    header = [
        f"// {top}: stream processor top level, generated by spdc {__version__}",
        f"// pipeline depth {sdfg.pipeline_depth} cycles; clock enable = out_ready | ~out_valid",
        f"// in_data fields:  {' '.join(f for f, _ in in_fields) or '(none)'}",
        f"// out_data fields: {' '.join(f for f, _ in out_fields) or '(none)'}",
        f"module {top} (",
    ]
    ports = [_port_decl("input", 1, "clk"), _port_decl("input", 1, "reset_n")]
    if win:
        ports.append(_port_decl("input", win, "in_data"))
    ports += [_port_decl("input", 1, "in_valid"), _port_decl("input", 1, "in_sop"),
              _port_decl("input", 1, "in_eop"), _port_decl("output", 1, "in_ready")]
    if wout:
        ports.append(_port_decl("output", wout, "out_data"))
    ports += [_port_decl("output", 1, "out_valid"), _port_decl("output", 1, "out_sop"),
              _port_decl("output", 1, "out_eop"), _port_decl("output", ew, "out_empty"),
              _port_decl("input", 1, "out_ready")]
    text = "\n".join(header) + "\n" + ",\n".join(ports) + "\n);\n" + "\n".join(body) + "\nendmodule\n"
    return TopResult(text, instantiated, eq_modules, audit, win, wout, ew, in_fields, out_fields, synthesized)
