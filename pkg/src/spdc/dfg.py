"""Dataflow graph construction and validation."""

from __future__ import annotations

import copy
import enum
import heapq
import sys
from dataclasses import dataclass, field
from typing import Any

from .ast import HdlCall, NodeDecl, NodeKind, PortClass, PortDecl, SpdProgram, expr_vars
from .errors import SpdError
from .exprsynth import lower_with_table, resolve_params
from .f32 import format_f32
from .latency import OpTable


class NodeType(enum.Enum):
    INPUT = "InputPort"
    OUTPUT = "OutputPort"
    EQUATION = "EquationModule"
    HDL = "HdlInstance"
    DELAY = "DelayModule"
    CONVERTER = "FormatConverter"


@dataclass
class Pin:
    name: str
    width: int = 32


@dataclass
class DfgNode:
    id: int
    label: str
    kind: NodeType
    latency: int | None = None
    in_pins: list[Pin] = field(default_factory=list)
    out_pins: list[Pin] = field(default_factory=list)
    payload: Any = None          # Expr, HdlCall, or tuple of delay tap depths
    port: PortDecl | None = None
    decl: NodeDecl | None = None
    dag: Any = None              # OperatorDag once lowered
    direction: str | None = None  # "in"/"out" for converters

    def pin_latency(self, pin: str) -> int:
        """Cycles from this node's ready time to ``pin`` (taps differ per pin)."""
        if self.kind is NodeType.DELAY:
            return self.payload[self.out_index(pin)]
        return self.latency or 0

    def out_index(self, pin: str) -> int:
        for i, p in enumerate(self.out_pins):
            if p.name == pin:
                return i
        raise KeyError(pin)

    def in_index(self, pin: str) -> int:
        for i, p in enumerate(self.in_pins):
            if p.name == pin:
                return i
        raise KeyError(pin)


@dataclass
class DfgEdge:
    src: tuple[int, str]
    dst: tuple[int, str]
    var: str
    width: int = 32
    bit_range: tuple[int, int] | None = None


@dataclass
class Dfg:
    name: str
    nodes: dict[int, DfgNode]
    edges: list[DfgEdge]
    input_ports: list[int]
    output_ports: list[int]
    params: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    _topo: list[int] | None = field(default=None, repr=False)

    # -- queries
    def in_edges(self, nid: int) -> list[DfgEdge]:
        return [e for e in self.edges if e.dst[0] == nid]

    def out_edges(self, nid: int) -> list[DfgEdge]:
        return [e for e in self.edges if e.src[0] == nid]

    def edge_into(self, nid: int, pin: str) -> DfgEdge | None:
        for e in self.edges:
            if e.dst == (nid, pin):
                return e
        return None

    def by_label(self, label: str) -> DfgNode:
        for n in self.nodes.values():
            if n.label == label:
                return n
        raise KeyError(label)

    def port_node(self, name: str, direction: str) -> DfgNode:
        ids = self.input_ports if direction == "in" else self.output_ports
        for nid in ids:
            if self.nodes[nid].port.name == name:
                return self.nodes[nid]
        raise KeyError(name)

    @property
    def topo_order(self) -> list[int]:
        if self._topo is None:
            self._topo = topo_sort(self)
        return self._topo

    def invalidate(self) -> None:
        self._topo = None

    def next_id(self) -> int:
        return max(self.nodes, default=-1) + 1

    def copy(self) -> "Dfg":
        return copy.deepcopy(self)

    def add_node(self, node: DfgNode) -> DfgNode:
        self.nodes[node.id] = node
        self._topo = None
        return node

    def control_ports(self, direction: str) -> dict[PortClass, DfgNode]:
        ids = self.input_ports if direction == "in" else self.output_ports
        return {self.nodes[i].port.klass: self.nodes[i] for i in ids
                if self.nodes[i].port.klass.is_control}


def _err(code: str, msg: str, program: SpdProgram, line: int | None = None) -> SpdError:
    return SpdError(code, msg, line, None, program.filename)


def build_dfg(program: SpdProgram) -> Dfg:
    """One node per port and per declaration, edges joined by variable name."""
    nodes: dict[int, DfgNode] = {}
    input_ids: list[int] = []
    output_ids: list[int] = []
    nid = 0
    for p in program.inputs:
        nodes[nid] = DfgNode(nid, p.name, NodeType.INPUT, 0, [], [Pin(p.name)], port=p)
        input_ids.append(nid)
        nid += 1
    for decl in program.nodes:
        if decl.kind is NodeKind.EQU:
            expr = resolve_params(decl.equation, program.params)
            ins = [Pin(v) for v in expr_vars(expr)]
            node = DfgNode(nid, decl.label, NodeType.EQUATION, None, ins, [Pin(decl.lhs)],
                           payload=expr, decl=decl)
        else:
            call = _resolve_hdl_params(decl.call, program.params)
            ins = []
            for k, ref in enumerate(call.inputs):
                width = 32 if ref.bit_range is None else ref.bit_range[0] - ref.bit_range[1] + 1
                ins.append(Pin(f"in{k}", width))
            outs = [Pin(f"out{k}") for k in range(len(call.outputs))]
            node = DfgNode(nid, decl.label, NodeType.HDL, decl.declared_delay, ins, outs,
                           payload=call, decl=decl)
        nodes[nid] = node
        nid += 1
    for p in program.outputs:
        nodes[nid] = DfgNode(nid, p.name, NodeType.OUTPUT, 0, [Pin(p.name)], [], port=p)
        output_ids.append(nid)
        nid += 1

    producers: dict[str, tuple[int, str]] = {}
    for i in input_ids:
        producers[nodes[i].port.name] = (i, nodes[i].port.name)
    for node in nodes.values():
        if node.decl is None:
            continue
        for k, var in enumerate(node.decl.output_vars):
            pin = node.out_pins[k].name
            if var in producers:
                raise _err("MULTIPLY_DEFINED_VARIABLE",
                           f"variable {var!r} is produced by more than one node", program, node.decl.line)
            if var in program.params:
                raise _err("MULTIPLY_DEFINED_VARIABLE",
                           f"variable {var!r} shadows a parameter", program, node.decl.line)
            producers[var] = (node.id, pin)

    edges: list[DfgEdge] = []
    for node in nodes.values():
        if node.kind is NodeType.EQUATION:
            for pin in node.in_pins:
                src = producers.get(pin.name)
                if src is None:
                    raise _err("UNDEFINED_VARIABLE", f"{node.label}: variable {pin.name!r} is never produced",
                               program, node.decl.line)
                edges.append(DfgEdge(src, (node.id, pin.name), pin.name))
        elif node.kind is NodeType.HDL:
            for pin, ref in zip(node.in_pins, node.payload.inputs):
                src = producers.get(ref.name)
                if src is None:
                    what = "a parameter (wrap it in an equation)" if ref.name in program.params else "never produced"
                    raise _err("UNDEFINED_VARIABLE", f"{node.label}: variable {ref.name!r} is {what}",
                               program, node.decl.line)
                edges.append(DfgEdge(src, (node.id, pin.name), ref.name, pin.width, ref.bit_range))
    for oid in output_ids:
        port = nodes[oid].port
        src = producers.get(port.name)
        if src is None:
            if port.klass.is_control:
                continue  # route_control_sideband decides
            raise _err("DANGLING_OUTPUT", f"output port {port.name!r} has no producer", program, port.line)
        edges.append(DfgEdge(src, (oid, port.name), port.name))

    dfg = Dfg(program.name, nodes, edges, input_ids, output_ids, dict(program.params))
    _check_cycles(dfg, program)
    used = {e.src for e in edges}
    for node in nodes.values():
        if node.kind in (NodeType.EQUATION, NodeType.HDL):
            for k, pin in enumerate(node.out_pins):
                if (node.id, pin.name) not in used:
                    var = node.decl.output_vars[k]
                    dfg.warnings.append(f"{node.label}: output {var!r} is never used")
    return dfg


def _resolve_hdl_params(call: HdlCall, params: dict[str, float]) -> HdlCall:
    if not any(v in params for _, v in call.hdl_params):
        return call
    resolved = tuple((k, format_f32(params[v]) if v in params else v) for k, v in call.hdl_params)
    return HdlCall(call.module_name, call.outputs, call.inputs, resolved)


def _check_cycles(dfg: Dfg, program: SpdProgram) -> None:
    succ: dict[int, list[int]] = {n: [] for n in dfg.nodes}
    for e in dfg.edges:
        succ[e.src[0]].append(e.dst[0])
    color = {n: 0 for n in dfg.nodes}
    stack_path: list[int] = []

    def visit(n: int) -> None:
        color[n] = 1
        stack_path.append(n)
        for m in succ[n]:
            if color[m] == 1:
                cyc = stack_path[stack_path.index(m):] + [m]
                labels = " -> ".join(dfg.nodes[c].label for c in cyc)
                line = dfg.nodes[m].decl.line if dfg.nodes[m].decl else None
                raise _err("CYCLE_DETECTED", f"feedback loop: {labels}", program, line)
            if color[m] == 0:
                visit(m)
        stack_path.pop()
        color[n] = 2

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * len(dfg.nodes) + 100))
    try:
        for n in dfg.nodes:
            if color[n] == 0:
                visit(n)
    finally:
        sys.setrecursionlimit(limit)


def topo_sort(dfg: Dfg) -> list[int]:
    """Kahn's algorithm; among ready nodes the lowest id goes first."""
    indeg = {n: 0 for n in dfg.nodes}
    succ: dict[int, list[int]] = {n: [] for n in dfg.nodes}
    for e in dfg.edges:
        indeg[e.dst[0]] += 1
        succ[e.src[0]].append(e.dst[0])
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(heap, m)
    if len(order) != len(dfg.nodes):
        stuck = sorted(dfg.nodes[n].label for n in dfg.nodes if indeg[n] > 0)
        raise SpdError("CYCLE_DETECTED", f"feedback loop among: {', '.join(stuck)}")
    return order


def route_control_sideband(dfg: Dfg, program: SpdProgram | None = None) -> Dfg:
    """Wire undriven VLD/SOP/EOP outputs straight from the matching input port."""
    out = dfg.copy()
    outs = out.control_ports("out")
    ins = out.control_ports("in")
    driven = {k: out.edge_into(n.id, n.in_pins[0].name) is not None for k, n in outs.items()}
    if any(driven.values()) and not all(driven.values()):
        mixed = ", ".join(f"{outs[k].label}({'user' if d else 'auto'})" for k, d in driven.items())
        raise SpdError("CONTROL_PORT_CONFLICT",
                       f"control outputs are partly user-driven and partly auto-routed: {mixed}",
                       filename=program.filename if program else None)
    for klass, onode in outs.items():
        if driven[klass]:
            continue
        inode = ins.get(klass)
        if inode is None:
            raise SpdError("DANGLING_OUTPUT",
                           f"control output {onode.label!r} has no driver and no {klass.value} input to route",
                           onode.port.line, None, program.filename if program else None)
        out.edges.append(DfgEdge((inode.id, inode.out_pins[0].name), (onode.id, onode.in_pins[0].name),
                                 onode.port.name))
    out.invalidate()
    return out


def insert_format_converters(dfg: Dfg, table: OpTable | None = None) -> Dfg:
    """Put a binary32<->internal converter next to every NUMERIC top-level port."""
    lat_in = table.converter_in if table else 1
    lat_out = table.converter_out if table else 1
    out = dfg.copy()
    for pid in out.input_ports:
        port = out.nodes[pid]
        if port.port.klass is not PortClass.NUMERIC:
            continue
        cid = out.next_id()
        pin = port.out_pins[0].name
        conv = out.add_node(DfgNode(cid, f"cvt_in_{port.label}", NodeType.CONVERTER, lat_in,
                                    [Pin("i")], [Pin("o")], direction="in"))
        for e in out.edges:
            if e.src == (pid, pin):
                e.src = (conv.id, "o")
        out.edges.append(DfgEdge((pid, pin), (conv.id, "i"), port.port.name))
    for pid in out.output_ports:
        port = out.nodes[pid]
        if port.port.klass is not PortClass.NUMERIC:
            continue
        cid = out.next_id()
        pin = port.in_pins[0].name
        conv = out.add_node(DfgNode(cid, f"cvt_out_{port.label}", NodeType.CONVERTER, lat_out,
                                    [Pin("i")], [Pin("o")], direction="out"))
        for e in out.edges:
            if e.dst == (pid, pin):
                e.dst = (conv.id, "i")
        out.edges.append(DfgEdge((conv.id, "o"), (pid, pin), port.port.name))
    out.invalidate()
    return out


def apply_table(dfg: Dfg, table: OpTable) -> Dfg:
    """Lower every equation node and (re)time converters with ``table``."""
    out = dfg.copy()
    for node in out.nodes.values():
        if node.kind is NodeType.EQUATION:
            node.dag = lower_with_table(node.payload, table)
            node.latency = node.dag.total_latency
        elif node.kind is NodeType.CONVERTER:
            node.latency = table.converter_in if node.direction == "in" else table.converter_out
    return out
