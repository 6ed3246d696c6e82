"""Behavioral stand-ins for user HDL modules.

A plugin reports its latency from the instance parameters and lowers an
instance into kernel ops.  Simple modules lower to native opcodes; anything
else becomes a CALLBACK op driving a Python object with ``step(words)``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Callable

from ..errors import SimError
from .netlist import COPY, LT, MUX, Builder

# D2Q9 velocities (index: (cx, cy)); 0 rest, 1 E, 2 N, 3 W, 4 S, 5 NE, 6 NW, 7 SW, 8 SE
D2Q9_C = ((0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1))
D2Q9_OPP = (0, 3, 4, 1, 2, 7, 8, 5, 6)

_SIZED = re.compile(r"^(\d+)'([bodhBODH])([0-9a-fA-F_]+)$")


def int_param(params: dict[str, str], name: str, module: str) -> int:
    if name not in params:
        raise SimError("PARAM_MISSING", f"{module}: required parameter {name} is missing")
    text = params[name].strip()
    m = _SIZED.match(text)
    if m:
        base = {"b": 2, "o": 8, "d": 10, "h": 16}[m.group(2).lower()]
        return int(m.group(3).replace("_", ""), base)
    try:
        return int(float(text))
    except ValueError:
        raise SimError("PARAM_MISSING", f"{module}: parameter {name}={text!r} is not an integer") from None


@dataclass(frozen=True)
class HdlPlugin:
    module_name: str
    latency: Callable[[dict], int]
    lower: Callable  # (builder, node, in_slots, out_names, params) -> out_slots


class PluginRegistry(dict):
    def register(self, plugin: HdlPlugin) -> HdlPlugin:
        self[plugin.module_name] = plugin
        return plugin


class FunctionInstance:
    """Stateless callback: ``fn(words, params) -> words``."""

    def __init__(self, fn, params):
        self.fn = fn
        self.params = params

    def step(self, words):
        return self.fn(words, self.params)

    def clone(self):
        return self


def function_plugin(module_name: str, latency: int | Callable[[dict], int],
                    fn: Callable[[list[int], dict], list[int]]) -> HdlPlugin:
    """Wrap a pure word function as a plugin; its result appears ``latency`` steps later."""
    lat = latency if callable(latency) else (lambda params, _l=latency: _l)

    def lower(b: Builder, node, ins, names, params):
        return b.callback(FunctionInstance(fn, params), ins, names, lat(params), node.label)

    return HdlPlugin(module_name, lat, lower)


# -- builtins ----------------------------------------------------------------

def _mdelay_latency(params):
    return int_param(params, "pDelay", "mDelay")


def _lower_mdelay(b, node, ins, names, params):
    return [b.op(COPY, [(ins[0], 0)], names[0], _mdelay_latency(params), owner=node.label)]


def _lower_mmux(b, node, ins, names, params):
    # out = sel ? second : first
    return [b.op(MUX, [(ins[0], 0), (ins[1], 0), (ins[2], 0)], names[0], 1, owner=node.label)]


def _lower_less_than(b, node, ins, names, params):
    return [b.op(LT, [(ins[0], 0), (ins[1], 0)], names[0], 1, owner=node.label)]


def _lower_swap(b, node, ins, names, params):
    less, t1, t2 = ins
    hi = b.op(MUX, [(t1, 0), (t2, 0), (less, 0)], names[0], 0, owner=node.label)
    lo = b.op(MUX, [(t2, 0), (t1, 0), (less, 0)], names[1], 0, owner=node.label)
    return [hi, lo]


class MTrans:
    """Row-major streaming translation over a lattice ``width`` cells wide.

    Ports: f0..f8, attr, valid, sop, eop in; the same order out.  The output
    for cell ``n`` is registered once cell ``n + width + 1`` has arrived, so
    the module latency is ``width + 2``.  A population whose upstream
    neighbour lies outside the lattice (or outside the packet) is replaced by
    the same cell's opposite-direction population.
    """

    N_PORTS = 13

    def __init__(self, width: int):
        self.width = width
        self.lag = width + 1
        self.offsets = tuple(cx + width * cy for cx, cy in D2Q9_C)
        self.hist: deque = deque(maxlen=2 * width + 3)
        self.packet = 0
        self.index = -1

    def clone(self) -> "MTrans":
        return MTrans(self.width)

    def step(self, words):
        valid = words[10] & 1
        if valid:
            if words[11] & 1:
                self.packet += 1
                self.index = 0
            else:
                self.index += 1
        self.hist.appendleft((words, valid, self.packet, self.index))
        if len(self.hist) <= self.lag:
            return [0] * self.N_PORTS
        cell, ok, pkt, idx = self.hist[self.lag]
        if not ok:
            return [0] * self.N_PORTS
        x = idx % self.width
        out = list(cell[:9])
        for i in range(1, 9):
            cx = D2Q9_C[i][0]
            lag = self.lag + self.offsets[i]
            src = self.hist[lag] if lag < len(self.hist) else None
            if (src is not None and src[1] and src[2] == pkt and src[3] == idx - self.offsets[i]
                    and 0 <= x - cx < self.width):
                out[i] = src[0][i]
            else:
                out[i] = cell[D2Q9_OPP[i]]
        return out + list(cell[9:13])


def mtrans_latency(params) -> int:
    return int_param(params, "pUnitLength", "mTrans") + 2


def _lower_mtrans(b, node, ins, names, params):
    if len(ins) != MTrans.N_PORTS or len(names) != MTrans.N_PORTS:
        raise SimError("WIDTH_MISMATCH", f"{node.label}: mTrans takes and returns {MTrans.N_PORTS} ports")
    width = int_param(params, "pUnitLength", "mTrans")
    return b.callback(MTrans(width), ins, names, 1, node.label)


BUILTINS = (
    HdlPlugin("mDelay", _mdelay_latency, _lower_mdelay),
    HdlPlugin("mMux", lambda params: 1, _lower_mmux),
    HdlPlugin("less_than", lambda params: 1, _lower_less_than),
    HdlPlugin("swap", lambda params: 0, _lower_swap),
    HdlPlugin("mTrans", mtrans_latency, _lower_mtrans),
)


def register_builtin_plugins(registry: PluginRegistry) -> PluginRegistry:
    for p in BUILTINS:
        registry.register(p)
    return registry


def default_registry() -> PluginRegistry:
    return register_builtin_plugins(PluginRegistry())
