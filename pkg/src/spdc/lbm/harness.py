"""Run the bundled LBM design through the simulator and compare with the reference."""

from __future__ import annotations

import dataclasses
from importlib import resources

import numpy as np

from ..ast import HdlCall, NodeKind, PortClass, PortDecl, SpdProgram
from ..compiler import CompiledDesign, compile_program
from ..errors import SpdError
from ..parser import parse
from ..sim import Simulator, StallPattern, StreamPacket
from ..sim.plugins import int_param
from .lattice import OUT_FIELDS, Lattice, from_packet, to_packet

CO_FIELDS = [f"f{i}_co" for i in range(9)]


def lbm_source() -> str:
    return resources.files("spdc.data").joinpath("lbm.spd").read_text("utf-8")


def lbm_program() -> SpdProgram:
    return parse(lbm_source(), "lbm.spd")


def _mtrans_decl(program: SpdProgram):
    for decl in program.nodes:
        if decl.kind is NodeKind.HDL and decl.call.module_name == "mTrans":
            return decl
    raise SpdError("MISSING_PLUGIN", "program has no mTrans instance")


def unit_length(program: SpdProgram) -> int:
    return int_param(dict(_mtrans_decl(program).call.hdl_params), "pUnitLength", "mTrans")


def with_unit_length(program: SpdProgram, width: int) -> SpdProgram:
    """Retarget the translation module to a lattice ``width`` cells wide."""
    old = _mtrans_decl(program)
    params = tuple((k, str(width) if k == "pUnitLength" else v) for k, v in old.call.hdl_params)
    call = HdlCall(old.call.module_name, old.call.outputs, old.call.inputs, params)
    new = dataclasses.replace(old, call=call, declared_delay=width + 2)
    nodes = tuple(new if d is old else d for d in program.nodes)
    return dataclasses.replace(program, nodes=nodes)


def extract_stage(program: SpdProgram, outputs: list[str], name: str | None = None) -> SpdProgram:
    """Backward slice of ``program`` that computes the variables ``outputs``."""
    producer = {}
    for decl in program.nodes:
        for v in decl.output_vars:
            producer[v] = decl
    needed: set[str] = set()
    keep: set[str] = set()
    stack = list(outputs)
    while stack:
        var = stack.pop()
        if var in needed:
            continue
        needed.add(var)
        decl = producer.get(var)
        if decl is not None and decl.label not in keep:
            keep.add(decl.label)
            stack.extend(r.name for r in decl.input_refs if r.name not in program.params)
    inputs = tuple(p for p in program.inputs if p.name in needed)
    outs = tuple(PortDecl(v, PortClass.NUMERIC) for v in outputs)
    nodes = tuple(d for d in program.nodes if d.label in keep)
    return SpdProgram(name or f"{program.name}_stage", inputs, outs, dict(program.params), nodes,
                      program.filename)


def cell_stage_design(freq: float = 125.0) -> CompiledDesign:
    """Macro, equilibrium and collision of lbm.spd as a stand-alone per-cell pipeline."""
    return compile_program(extract_stage(lbm_program(), CO_FIELDS, "mLBM_cell"), freq)


def lbm_design(width: int = 64, freq: float = 125.0) -> CompiledDesign:
    program = lbm_program()
    if unit_length(program) != width:
        program = with_unit_length(program, width)
    return compile_program(program, freq)


def simulate_cells(design: CompiledDesign, f: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Per-cell pipeline over ``f`` of shape (9, n); returns (9, n) float32."""
    f = np.asarray(f, dtype=np.float32)
    packet = StreamPacket(np.ascontiguousarray(f.T).view(np.uint32), [f"if{i}" for i in range(9)])
    out, _ = Simulator(design, backend=backend).run(packet)
    return np.ascontiguousarray(out.words.T).view(np.float32)


def pipeline_step(design: CompiledDesign, lat: Lattice, backend: str | None = None,
                  stalls: StallPattern | None = None) -> Lattice:
    """One time step of ``lat`` through the compiled LBM pipeline."""
    width = unit_length(design.program)
    if width != lat.nx:
        raise SpdError("SIZE_MISMATCH", f"design translates rows of {width} cells, lattice is {lat.nx} wide")
    sim = Simulator(design, backend=backend)
    packet = to_packet(lat, sim.input_fields)
    out, _ = sim.run(packet, stalls)
    if sim.output_fields != OUT_FIELDS:
        raise SpdError("SIZE_MISMATCH", f"unexpected design outputs {sim.output_fields}")
    return from_packet(out, lat.nx, lat.ny)


def max_rel_error(got: np.ndarray, want: np.ndarray, floor: float = 1e-30) -> float:
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    return float(np.max(np.abs(got - want) / np.maximum(np.abs(want), floor), initial=0.0))
