"""Untimed reference interpreter: evaluate a program vector by vector.

Equations go through the parse tree with binary32 rounding after every
operator; HDL modules use plain Python models of their per-vector function.
Modules whose output depends on other vectors (mTrans) have no model here.
"""

from __future__ import annotations

import math

import numpy as np

from .. import f32
from ..ast import NodeKind, SpdProgram
from ..dfg import topo_sort, build_dfg
from ..errors import SimError
from ..exprsynth import evaluate_expr, resolve_params
from .streamio import StreamPacket

NAN = 0x7FC00000


def _w2f(w: int) -> float:
    return f32.bits_f32(w)


def _f2w(x: float) -> int:
    return NAN if math.isnan(x) else f32.f32_bits(x)


def _less_than(ins, params):
    return [1 if _w2f(ins[0]) < _w2f(ins[1]) else 0]


def _swap(ins, params):
    less, t1, t2 = ins
    return [t2, t1] if less & 1 else [t1, t2]


def _mmux(ins, params):
    a, b, sel = ins
    return [b if sel & 1 else a]


def _mdelay(ins, params):
    return [ins[0]]


MODELS = {"less_than": _less_than, "swap": _swap, "mMux": _mmux, "mDelay": _mdelay}


def _slice(word: int, bit_range) -> int:
    if bit_range is None:
        return word
    hi, lo = bit_range
    return (word >> lo) & ((1 << (hi - lo + 1)) - 1)


def evaluate_program(program: SpdProgram, packet: StreamPacket) -> np.ndarray:
    """Output words, shape (N, data outputs), in output declaration order."""
    g = build_dfg(program)
    order = [g.nodes[i].decl for i in topo_sort(g) if g.nodes[i].decl is not None]
    for decl in order:
        if decl.kind is NodeKind.HDL and decl.call.module_name not in MODELS:
            raise SimError("MISSING_PLUGIN", f"no per-vector model for HDL module {decl.call.module_name!r}")
    exprs = {d.label: resolve_params(d.equation, program.params) for d in order if d.kind is NodeKind.EQU}
    data_in = [p.name for p in program.inputs if not p.klass.is_control]
    data_out = [p.name for p in program.outputs if not p.klass.is_control]
    out = np.zeros((len(packet), len(data_out)), dtype=np.uint32)
    for k, row in enumerate(packet.words):
        env: dict[str, int] = {name: int(w) for name, w in zip(data_in, row)}
        for p in program.inputs:
            if p.klass.is_control:
                env[p.name] = 1 if p.klass.value == "VLD" else int(
                    bool(packet.sop[k] if p.klass.value == "SOP" else packet.eop[k]))
        for decl in order:
            if decl.kind is NodeKind.EQU:
                fenv = {v: _w2f(w) for v, w in env.items()}
                env[decl.lhs] = _f2w(evaluate_expr(exprs[decl.label], fenv))
            else:
                call = decl.call
                ins = [_slice(env[r.name], r.bit_range) for r in call.inputs]
                res = MODELS[call.module_name](ins, dict(call.hdl_params))
                for ref, w in zip(call.outputs, res):
                    env[ref.name] = w
        out[k] = [env[name] for name in data_out]
    return out
