"""Pure-Python cycle kernel (fallback when the compiled extension is absent)."""

from __future__ import annotations

import math
from array import array

import numpy as np

from .netlist import ADD, BITS, CALLBACK, CMUL, COPY, DIV, LT, MUL, MUX, NEG, SUB, Netlist

CANONICAL_NAN = 0x7FC00000

_fbuf = array("f", [0.0])
_wbuf = memoryview(_fbuf).cast("B").cast("I")


def _tof(w: int) -> float:
    _wbuf[0] = w
    return _fbuf[0]


def _tow(x: float) -> int:
    if x != x:
        return CANONICAL_NAN
    _fbuf[0] = x
    return _wbuf[0]


def _div(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or a != a:
            return float("nan")
        return math.copysign(math.inf, math.copysign(1.0, a) * math.copysign(1.0, b))
    return a / b


class PyKernel:
    backend = "python"

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self.ring = netlist.ring
        self.mask = netlist.ring - 1
        self.callbacks = netlist.fresh_callbacks()
        R = self.ring
        self.mem = [0] * (netlist.n_slots * R)
        for s, w in netlist.const_slots.items():
            self.mem[s * R:(s + 1) * R] = [w] * R
        self.prog = [(op.code, [(s * R, lag) for s, lag in op.ins], [s * R for s in op.outs], op.lat, op.const)
                     for op in netlist.ops]
        self.t = 0

    def step(self, in_slots, words) -> None:
        mem, R, mask, t = self.mem, self.ring, self.mask, self.t
        pos = t & mask
        for s, w in zip(in_slots, words):
            mem[s * R + pos] = int(w) & 0xFFFFFFFF
        for code, ins, outs, lat, c in self.prog:
            wpos = (t + lat) & mask
            if code == CALLBACK:
                vals = [mem[b + ((t - lag) & mask)] for b, lag in ins]
                res = self.callbacks[c].step(vals)
                for b, w in zip(outs, res):
                    mem[b + wpos] = w & 0xFFFFFFFF
                continue
            b0, l0 = ins[0]
            a = mem[b0 + ((t - l0) & mask)]
            if code == COPY:
                r = a
            elif code == BITS:
                r = (a >> (c & 0xFF)) & ((1 << (c >> 8)) - 1)
            elif code == NEG:
                r = CANONICAL_NAN if (a & 0x7FFFFFFF) > 0x7F800000 else a ^ 0x80000000
            elif code == CMUL:
                r = _tow(_tof(a) * _tof(c))
            else:
                b1, l1 = ins[1]
                bw = mem[b1 + ((t - l1) & mask)]
                if code == ADD:
                    r = _tow(_tof(a) + _tof(bw))
                elif code == SUB:
                    r = _tow(_tof(a) - _tof(bw))
                elif code == MUL:
                    r = _tow(_tof(a) * _tof(bw))
                elif code == DIV:
                    r = _tow(_div(_tof(a), _tof(bw)))
                elif code == LT:
                    r = 1 if _tof(a) < _tof(bw) else 0
                elif code == MUX:
                    b2, l2 = ins[2]
                    r = bw if mem[b2 + ((t - l2) & mask)] & 1 else a
                else:  # pragma: no cover
                    raise AssertionError(code)
            mem[outs[0] + wpos] = r
        self.t = t + 1

    def read(self, slots, lag: int = 0) -> list[int]:
        """Words of ``slots`` at the most recent step (minus ``lag``)."""
        pos = (self.t - 1 - lag) & self.mask
        return [self.mem[s * self.ring + pos] for s in slots]

    def run(self, inputs: np.ndarray, in_slots, out_slots) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.uint32)
        out = np.zeros((inputs.shape[0], len(out_slots)), dtype=np.uint32)
        rows = inputs.tolist()
        for i, row in enumerate(rows):
            self.step(in_slots, row)
            out[i] = self.read(out_slots)
        return out
