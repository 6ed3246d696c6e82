"""Flatten a scheduled DFG into a slot/op program for the cycle kernels.

Every value in the design is a *slot*: a ring buffer of 32-bit words indexed
by kernel time.  An op with latency ``L`` reads each input at its own lag and
writes its result ``L`` steps ahead, so ``out(t) = f(in(t - L - lag))``.
Delay modules become plain copies; equation pipelines are expanded to one op
per floating-point operator with the alignment delays as read lags.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import f32
from ..ast import PortClass
from ..balance import ScheduledDfg
from ..dfg import DfgNode, NodeType
from ..errors import SimError
from ..exprsynth import OpKind

# opcodes shared by both kernel backends
COPY, ADD, SUB, MUL, CMUL, DIV, NEG, BITS, MUX, LT, CALLBACK = range(11)
OPCODE_NAMES = ("copy", "add", "sub", "mul", "cmul", "div", "neg", "bits", "mux", "lt", "callback")

_ARITH = {OpKind.ADD: ADD, OpKind.SUB: SUB, OpKind.MUL: MUL, OpKind.CONST_MUL: CMUL,
          OpKind.DIV: DIV, OpKind.NEG: NEG}


@dataclass
class Op:
    code: int
    ins: list[tuple[int, int]]      # (slot, lag)
    outs: list[int]
    lat: int
    const: int = 0                  # CMUL factor bits, BITS (lo | width << 8), CALLBACK index
    owner: str = ""


@dataclass
class Netlist:
    slot_names: list[str]
    const_slots: dict[int, int]     # slot -> constant word
    ops: list[Op]
    callbacks: list                 # plugin instances with .step(words) -> words
    input_slots: list[int]          # data fields, declaration order
    output_slots: list[int]
    input_fields: list[str]
    output_fields: list[str]
    input_classes: list[PortClass]
    output_classes: list[PortClass]
    sideband_in: dict[str, int]     # "valid"/"sop"/"eop" -> slot fed by the harness
    sideband_out: dict[str, int]
    pipeline_depth: int
    ring: int = 0

    @property
    def n_slots(self) -> int:
        return len(self.slot_names)

    def arrays(self) -> dict[str, np.ndarray]:
        """Compressed op encoding consumed by the kernels."""
        in_ptr = [0]
        out_ptr = [0]
        in_slot: list[int] = []
        in_lag: list[int] = []
        out_slot: list[int] = []
        for op in self.ops:
            for s, lag in op.ins:
                in_slot.append(s)
                in_lag.append(lag)
            out_slot.extend(op.outs)
            in_ptr.append(len(in_slot))
            out_ptr.append(len(out_slot))
        i32 = np.int32
        return {
            "code": np.array([op.code for op in self.ops], dtype=i32),
            "lat": np.array([op.lat for op in self.ops], dtype=i32),
            "cval": np.array([op.const for op in self.ops], dtype=np.uint32),
            "in_ptr": np.array(in_ptr, dtype=i32),
            "in_slot": np.array(in_slot, dtype=i32),
            "in_lag": np.array(in_lag, dtype=i32),
            "out_ptr": np.array(out_ptr, dtype=i32),
            "out_slot": np.array(out_slot, dtype=i32),
        }

    def fresh_callbacks(self) -> list:
        return [cb.clone() for cb in self.callbacks]


class Builder:
    """Slot allocator handed to plugins while lowering HDL instances."""

    def __init__(self):
        self.slot_names: list[str] = []
        self.const_slots: dict[int, int] = {}
        self._const_by_word: dict[int, int] = {}
        self.ops: list[Op] = []
        self.callbacks: list = []

    def slot(self, name: str) -> int:
        self.slot_names.append(name)
        return len(self.slot_names) - 1

    def const(self, word: int) -> int:
        word &= 0xFFFFFFFF
        if word not in self._const_by_word:
            s = self.slot(f"const_{word:08x}")
            self.const_slots[s] = word
            self._const_by_word[word] = s
        return self._const_by_word[word]

    def op(self, code: int, ins: list[tuple[int, int]], name: str, lat: int, const: int = 0,
           owner: str = "") -> int:
        out = self.slot(name)
        self.ops.append(Op(code, ins, [out], lat, const, owner))
        return out

    def callback(self, instance, ins: list[int], names: list[str], lat: int, owner: str) -> list[int]:
        outs = [self.slot(n) for n in names]
        self.ops.append(Op(CALLBACK, [(s, 0) for s in ins], outs, lat, len(self.callbacks), owner))
        self.callbacks.append(instance)
        return outs


def _sideband_key(klass: PortClass) -> str:
    return {PortClass.VLD: "valid", PortClass.SOP: "sop", PortClass.EOP: "eop"}[klass]


def build_netlist(sdfg: ScheduledDfg, registry=None) -> Netlist:
    from .plugins import default_registry

    registry = registry if registry is not None else default_registry()
    g = sdfg.dfg
    b = Builder()
    pin_slot: dict[tuple[int, str], int] = {}

    def source(node: DfgNode, pin: str) -> int:
        e = g.edge_into(node.id, pin)
        s = pin_slot[e.src]
        if e.bit_range is not None:
            hi, lo = e.bit_range
            s = b.op(BITS, [(s, 0)], f"{e.var}[{hi}:{lo}]", 0, lo | ((hi - lo + 1) << 8), node.label)
        return s

    sideband_in: dict[str, int] = {}
    input_slots, input_fields, input_classes = [], [], []
    for nid in g.input_ports:
        node = g.nodes[nid]
        s = b.slot(node.label)
        pin_slot[(nid, node.out_pins[0].name)] = s
        if node.port.klass.is_control:
            sideband_in[_sideband_key(node.port.klass)] = s
        else:
            input_slots.append(s)
            input_fields.append(node.label)
            input_classes.append(node.port.klass)
    for key in ("valid", "sop", "eop"):
        if key not in sideband_in:
            sideband_in[key] = b.slot(f"__in_{key}")

    for nid in g.topo_order:
        node = g.nodes[nid]
        kind = node.kind
        if kind in (NodeType.INPUT, NodeType.OUTPUT):
            continue
        if kind is NodeType.CONVERTER:
            pin_slot[(nid, "o")] = b.op(COPY, [(source(node, "i"), 0)], node.label, node.latency, owner=node.label)
        elif kind is NodeType.DELAY:
            src = source(node, "i")
            for pin, d in zip(node.out_pins, node.payload):
                pin_slot[(nid, pin.name)] = b.op(COPY, [(src, 0)], f"{node.label}.{pin.name}", d,
                                                 owner=node.label)
        elif kind is NodeType.EQUATION:
            pin_slot[(nid, node.out_pins[0].name)] = _lower_equation(b, node, source)
        elif kind is NodeType.HDL:
            call = node.payload
            plugin = registry.get(call.module_name)
            if plugin is None:
                raise SimError("MISSING_PLUGIN", f"{node.label}: no simulation plugin for HDL module "
                               f"{call.module_name!r}")
            params = dict(call.hdl_params)
            want = plugin.latency(params)
            if want != node.latency:
                raise SimError("PLUGIN_LATENCY_MISMATCH",
                               f"{node.label}: {call.module_name} has latency {want} but the declaration "
                               f"says {node.latency}")
            ins = [source(node, p.name) for p in node.in_pins]
            names = [f"{node.label}.{v}" for v in node.decl.output_vars]
            outs = plugin.lower(b, node, ins, names, params)
            if len(outs) != len(node.out_pins):
                raise SimError("WIDTH_MISMATCH", f"{node.label}: plugin produced {len(outs)} outputs, "
                               f"declaration has {len(node.out_pins)}")
            for pin, s in zip(node.out_pins, outs):
                pin_slot[(nid, pin.name)] = s
        else:  # pragma: no cover
            raise AssertionError(kind)

    sideband_out: dict[str, int] = {}
    output_slots, output_fields, output_classes = [], [], []
    for nid in g.output_ports:
        node = g.nodes[nid]
        s = source(node, node.in_pins[0].name)
        if node.port.klass.is_control:
            sideband_out[_sideband_key(node.port.klass)] = s
        else:
            output_slots.append(s)
            output_fields.append(node.label)
            output_classes.append(node.port.klass)
    for key in ("valid", "sop", "eop"):
        if key not in sideband_out:
            sideband_out[key] = b.op(COPY, [(sideband_in[key], 0)], f"__out_{key}", sdfg.pipeline_depth,
                                     owner="sideband")

    span = max((op.lat + max((lag for _, lag in op.ins), default=0) for op in b.ops), default=0)
    ring = 1
    while ring < span + 2:
        ring *= 2
    return Netlist(b.slot_names, b.const_slots, b.ops, b.callbacks, input_slots, output_slots,
                   input_fields, output_fields, input_classes, output_classes, sideband_in, sideband_out,
                   sdfg.pipeline_depth, ring)


def _lower_equation(b: Builder, node: DfgNode, source) -> int:
    dag = node.dag
    op_slots: list[int] = []

    def operand(o) -> tuple[int, int]:
        if o.kind == "const":
            return b.const(f32.f32_bits(o.ref)), 0
        if o.kind == "var":
            return source(node, o.ref), o.delay
        return op_slots[o.ref], o.delay

    for op in dag.ops:
        ins = [operand(o) for o in op.operands]
        const = f32.f32_bits(op.const) if op.kind is OpKind.CONST_MUL else 0
        op_slots.append(b.op(_ARITH[op.kind], ins, f"{node.label}.op{op.index}", op.latency, const, node.label))
    res = dag.result
    if res.kind == "op":
        return op_slots[res.ref]
    s, _ = operand(res)
    return s
