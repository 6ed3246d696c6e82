"""ASAP arrival computation and delay insertion so every node's inputs line up."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .dfg import Dfg, DfgEdge, DfgNode, NodeType, Pin

MEMORY_THRESHOLD = 32


@dataclass
class DelayCost:
    total_word_cycles: float
    chains: int
    memory_chains: int = 0


@dataclass
class ScheduledDfg:
    dfg: Dfg
    ready: dict[int, int]
    arrival: dict[tuple[int, str], int]
    inserted_delays: list[tuple[DfgEdge, int]]
    pipeline_depth: int
    shared: bool = False
    synthesized_sideband: bool = False
    memory_threshold: int = MEMORY_THRESHOLD
    warnings: list[str] = field(default_factory=list)

    @property
    def cost(self) -> DelayCost:
        return delay_cost(self.dfg, self.memory_threshold)

    def delay_nodes(self) -> list[DfgNode]:
        return [n for n in self.dfg.nodes.values() if n.kind is NodeType.DELAY]


def compute_arrivals(dfg: Dfg) -> tuple[dict[int, int], dict[tuple[int, str], int]]:
    """Earliest cycle each node can fire and each output pin becomes valid.

    Input ports are ready at 0; every other node waits for its latest input.
    """
    incoming: dict[int, list[DfgEdge]] = defaultdict(list)
    for e in dfg.edges:
        incoming[e.dst[0]].append(e)
    ready: dict[int, int] = {}
    arrival: dict[tuple[int, str], int] = {}
    for nid in dfg.topo_order:
        node = dfg.nodes[nid]
        if node.kind is NodeType.INPUT:
            t = 0
        else:
            t = max((arrival[e.src] for e in incoming[nid]), default=0)
        ready[nid] = t
        for pin in node.out_pins:
            lat = node.pin_latency(pin.name)
            if lat is None:
                raise ValueError(f"node {node.label!r} has no latency yet")
            arrival[(nid, pin.name)] = t + lat
    return ready, arrival


def _depth(dfg: Dfg, arrival) -> int:
    depth = 0
    for e in dfg.edges:
        if dfg.nodes[e.dst[0]].kind is NodeType.OUTPUT:
            depth = max(depth, arrival[e.src])
    return depth


def _unique_label(dfg: Dfg, base: str) -> str:
    taken = {n.label for n in dfg.nodes.values()}
    if base not in taken:
        return base
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"


def insert_delays(dfg: Dfg, arrivals=None) -> ScheduledDfg:
    """Pad every lagging edge with a delay module; align all outputs to one depth."""
    ready, arrival = arrivals if arrivals is not None else compute_arrivals(dfg)
    out = dfg.copy()
    depth = _depth(out, arrival)
    inserted: list[tuple[DfgEdge, int]] = []
    for e in list(out.edges):
        dst = out.nodes[e.dst[0]]
        target = depth if dst.kind is NodeType.OUTPUT else ready[dst.id]
        need = target - arrival[e.src]
        if need <= 0:
            continue
        src_node = out.nodes[e.src[0]]
        width = src_node.out_pins[src_node.out_index(e.src[1])].width
        node = out.add_node(DfgNode(out.next_id(), _unique_label(out, f"dly_{e.var}"), NodeType.DELAY,
                                    need, [Pin("i", width)], [Pin("o", width)], payload=(need,)))
        inserted.append((DfgEdge(e.src, e.dst, e.var, e.width, e.bit_range), need))
        out.edges.append(DfgEdge(e.src, (node.id, "i"), e.var, width))
        e.src = (node.id, "o")
    out.invalidate()
    ready2, arrival2 = compute_arrivals(out)
    return ScheduledDfg(out, ready2, arrival2, inserted, depth, warnings=list(dfg.warnings))


def share_delay_chains(sdfg: ScheduledDfg) -> ScheduledDfg:
    """Serve every delayed fan-out of one source pin from a single tapped chain."""
    g = sdfg.dfg.copy()
    groups: dict[tuple[int, str], list[DfgNode]] = defaultdict(list)
    feed: dict[int, DfgEdge] = {}
    for e in g.edges:
        node = g.nodes[e.dst[0]]
        if node.kind is NodeType.DELAY:
            groups[e.src].append(node)
            feed[node.id] = e
    for src, members in groups.items():
        if len(members) < 2 or any(len(m.payload) != 1 for m in members):
            continue
        depths = sorted({m.payload[0] for m in members})
        width = members[0].in_pins[0].width
        var = feed[members[0].id].var
        for m in members:
            del g.nodes[m.id]
        g.edges = [e for e in g.edges if e.dst[0] not in {m.id for m in members}]
        chain = g.add_node(DfgNode(g.next_id(), _unique_label(g, f"dly_{var}"), NodeType.DELAY,
                                   depths[-1], [Pin("i", width)],
                                   [Pin(f"t{d}", width) for d in depths], payload=tuple(depths)))
        g.edges.append(DfgEdge(src, (chain.id, "i"), var, width))
        member_depth = {m.id: m.payload[0] for m in members}
        for e in g.edges:
            if e.src[0] in member_depth:
                e.src = (chain.id, f"t{member_depth[e.src[0]]}")
    g.invalidate()
    ready, arrival = compute_arrivals(g)
    return ScheduledDfg(g, ready, arrival, sdfg.inserted_delays, sdfg.pipeline_depth, True,
                        sdfg.synthesized_sideband, sdfg.memory_threshold, list(sdfg.warnings))


def control_sideband_depth(sdfg: ScheduledDfg) -> ScheduledDfg:
    """Make framing exit with the data.

    Auto-routed VLD/SOP/EOP edges were padded like any output edge; without
    control ports the generated top carries valid/sop/eop through a
    synthesized delay line of ``pipeline_depth`` cycles.
    """
    g = sdfg.dfg
    outs = g.control_ports("out")
    sdfg.synthesized_sideband = not outs
    for node in outs.values():
        e = g.edge_into(node.id, node.in_pins[0].name)
        assert sdfg.arrival[e.src] == sdfg.pipeline_depth, node.label
    return sdfg


def delay_cost(dfg: Dfg, threshold: int = MEMORY_THRESHOLD) -> DelayCost:
    total = 0.0
    chains = 0
    memory = 0
    for n in dfg.nodes.values():
        if n.kind is NodeType.DELAY:
            length = max(n.payload)
            total += n.in_pins[0].width / 32 * length
            chains += 1
            if length >= threshold:
                memory += 1
    return DelayCost(total, chains, memory)


def schedule(dfg: Dfg, share: bool = True, memory_threshold: int = MEMORY_THRESHOLD) -> ScheduledDfg:
    sdfg = insert_delays(dfg)
    sdfg.memory_threshold = memory_threshold
    if share:
        sdfg = share_delay_chains(sdfg)
    return control_sideband_depth(sdfg)


def is_balanced(sdfg: ScheduledDfg) -> bool:
    g = sdfg.dfg
    ready, arrival = compute_arrivals(g)
    for nid, node in g.nodes.items():
        if node.kind is NodeType.INPUT:
            continue
        srcs = {arrival[e.src] for e in g.in_edges(nid)}
        target = sdfg.pipeline_depth if node.kind is NodeType.OUTPUT else ready[nid]
        if srcs and srcs != {target}:
            return False
    return True
