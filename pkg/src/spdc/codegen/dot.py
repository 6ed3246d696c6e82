"""Graphviz rendering of a (scheduled) data-flow graph."""

from __future__ import annotations

from ..dfg import Dfg, NodeType

_SHAPE = {
    NodeType.EQUATION: 'shape=circle',
    NodeType.HDL: 'shape=box',
    NodeType.DELAY: 'shape=box, style=filled, fillcolor="#c8c8c8"',
    NodeType.CONVERTER: 'shape=box, style=dashed',
    NodeType.INPUT: 'shape=plaintext',
    NodeType.OUTPUT: 'shape=plaintext',
}


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(target) -> str:
    """DOT text for a Dfg or ScheduledDfg; node and edge order is deterministic."""
    g: Dfg = getattr(target, "dfg", target)
    depth = getattr(target, "pipeline_depth", None)
    lines = [f"digraph {_q(g.name)} {{", "    rankdir=LR;", '    node [fontname="Helvetica"];',
             '    edge [fontname="Helvetica", fontsize=10];']
    if depth is not None:
        lines.append(f"    label={_q(f'{g.name}: pipeline depth {depth}')};")
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        label = n.label
        if n.kind is NodeType.DELAY:
            label = f"{n.label}\\n{', '.join(map(str, n.payload))}"
        elif n.kind in (NodeType.EQUATION, NodeType.HDL, NodeType.CONVERTER) and n.latency is not None:
            label = f"{n.label}\\n{n.latency}"
        lines.append(f'    n{nid} [label="{label}", {_SHAPE[n.kind]}];')
    for e in sorted(g.edges, key=lambda e: (e.src[0], e.dst[0], e.src[1], e.dst[1])):
        text = e.var
        src = g.nodes[e.src[0]]
        if src.kind is NodeType.DELAY and e.src[1].startswith("t"):
            text += f" (+{e.src[1][1:]})"
        elif src.kind is NodeType.DELAY:
            text += f" (+{src.payload[0]})"
        if e.bit_range is not None:
            text += f"[{e.bit_range[0]}:{e.bit_range[1]}]"
        lines.append(f"    n{e.src[0]} -> n{e.dst[0]} [label={_q(text)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
