"""``spdc`` command line: compile, simulate, explore, dot."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .ast import PortClass, SpdProgram
from .codegen import emit_design, emit_dot, write_artifacts
from .compiler import CompiledDesign, compile_program, schedule_table
from .errors import SpdError
from .latency import LatencyModel
from .parser import parse, parse_file

BUNDLED = "bundled:"


def load_program(path: str) -> SpdProgram:
    """Parse ``path``; ``bundled:<file>`` names a source shipped with the package."""
    if path.startswith(BUNDLED):
        name = path[len(BUNDLED):]
        res = resources.files("spdc.data").joinpath(name)
        if not res.is_file():
            raise SpdError("FILE_NOT_FOUND", f"no bundled source {name!r}", filename=path)
        return parse(res.read_text("utf-8"), name)
    return parse_file(path)


def _model(args) -> LatencyModel | None:
    return LatencyModel.load(args.latency_model) if args.latency_model else None


def _compile(args, program: SpdProgram | None = None, freq: float | None = None) -> CompiledDesign:
    program = program or load_program(args.spd)
    return compile_program(program, args.freq if freq is None else freq, _model(args),
                           share=not getattr(args, "no_delay_sharing", False),
                           memory_threshold=getattr(args, "memory_threshold", 32))


def _write_text(dest: str, text: str) -> None:
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8", newline="\n")


def schedule_tsv(design: CompiledDesign) -> str:
    rows = ["node\tkind\tready\tlatency\tarrival"]
    rows += ["\t".join(map(str, r)) for r in schedule_table(design.sdfg)]
    return "\n".join(rows) + "\n"


# -- compile ------------------------------------------------------------------------

def cmd_compile(args) -> int:
    design = _compile(args)
    for warning in design.sdfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.dump_dfg:
        _write_text(args.dump_dfg, emit_dot(design.dfg))
    if args.dump_schedule:
        _write_text(args.dump_schedule, schedule_tsv(design))
    art = emit_design(design)
    root = write_artifacts(art, args.out)
    report = design.report
    (root / "report.txt").write_text(report.to_text(), encoding="utf-8", newline="\n")
    (root / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8",
                                      newline="\n")
    if args.dot:
        (root / "dfg_pre.dot").write_text(emit_dot(design.dfg), encoding="utf-8", newline="\n")
    sys.stdout.write(report.to_text() if args.verbose else _summary(report))
    print(f"artifacts written to {root}")
    return 0


def _summary(report) -> str:
    c = report.census
    return (f"{report.name}: depth {report.pipeline_depth}, N_ops {report.n_ops} "
            f"(add {c['add']}, sub {c['sub']}, mul {c['mul']}, const_mul {c['const_mul']}, div {c['div']}), "
            f"{report.est_gflops:.1f} GFlops at {report.target_freq:g} MHz, "
            f"delay {report.delay_word_cycles:g} word-cycles\n")


# -- simulate ------------------------------------------------------------------------

def _random_packet(fields, classes, n: int, seed: int):
    from .sim import StreamPacket
    rng = np.random.default_rng(seed)
    words = np.empty((n, len(fields)), dtype=np.uint32)
    for j, klass in enumerate(classes):
        if klass is PortClass.RAW:
            words[:, j] = rng.integers(0, 2 ** 32, n, dtype=np.uint64).astype(np.uint32)
        else:
            mant = rng.uniform(-1.0, 1.0, n)
            words[:, j] = (mant * np.exp2(rng.integers(-8, 9, n))).astype(np.float32).view(np.uint32)
    return StreamPacket(words, list(fields), list(classes))


def _write_trace(path: str, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cycle", "step", "accepted", "out_valid", "ready", "emitted"])
        for r in trace.cycles:
            w.writerow([r.cycle, "" if r.step is None else r.step, "" if r.accepted is None else r.accepted,
                        int(r.out_valid), int(r.ready), "" if r.emitted is None else r.emitted])


def cmd_simulate(args) -> int:
    from .sim import Simulator, StallPattern, load_stream, save_stream, throughput_check

    program = load_program(args.spd)
    stalls = StallPattern.parse(args.stall_pattern)
    if args.lattice:
        return _simulate_lattice(args, program, stalls)
    design = _compile(args, program)
    sim = Simulator(design, backend=args.backend)
    in_ports = [p for p in program.inputs if not p.klass.is_control]
    if args.input:
        packet = load_stream(args.input, [p.klass for p in in_ports])
    elif args.random is not None:
        packet = _random_packet(sim.input_fields, [p.klass for p in in_ports], args.random, args.seed)
    else:
        raise SpdError("USAGE", "simulate needs --input, --random or --lattice")
    out, trace = sim.run(packet, stalls, trace=bool(args.trace))
    print(f"backend {trace.backend}; {len(packet)} vectors in, {len(out)} out, {trace.total_cycles} cycles")
    print(f"pipeline depth {trace.pipeline_depth}; first output at cycle {trace.depth_observed}")
    ok = throughput_check(trace)
    print("throughput check: " + ("n/a (stalled run)" if ok is None else "pass" if ok else "FAIL"))
    status = 0 if ok in (None, True) else 1
    if args.output:
        save_stream(args.output, out)
    if args.trace:
        _write_trace(args.trace, trace)
    if args.check:
        from .sim.oracle import evaluate_program
        ref = evaluate_program(program, packet)
        exact = int(np.count_nonzero((out.words == ref).all(axis=1))) if len(ref) else 0
        print(f"oracle match: {exact}/{len(packet)} exact")
        if exact != len(packet):
            status = 1
    return status


def _simulate_lattice(args, program: SpdProgram, stalls) -> int:
    from .lbm import (lbm_step_reference, max_rel_error, pipeline_step, read_lattice, unit_length,
                      with_unit_length, write_lattice)

    lat = read_lattice(args.lattice)
    if unit_length(program) != lat.nx:
        print(f"note: translation width set to {lat.nx} to match the lattice")
        program = with_unit_length(program, lat.nx)
    design = _compile(args, program)
    cur = lat
    for _ in range(args.steps):
        cur = pipeline_step(design, cur, args.backend, stalls)
    ref = lat
    for _ in range(args.steps):
        ref = lbm_step_reference(ref, "double")
    err = max_rel_error(cur.f, ref.f)
    print(f"{args.steps} step(s) of a {lat.nx}x{lat.ny} lattice; pipeline depth {design.report.pipeline_depth}")
    print(f"max relative error vs double-precision reference: {err:.3e}")
    print(f"mass: initial {lat.mass():.9g}, final {cur.mass():.9g}")
    if args.output:
        write_lattice(args.output, cur)
    return 0 if err <= args.tolerance else 1


# -- explore ---------------------------------------------------------------------------

def explore_rows(program: SpdProgram, freqs: list[float], model=None, share: bool = True) -> list:
    return [compile_program(program, f, model, share=share).report for f in sorted(freqs)]


def monotone(reports) -> bool:
    pairs = list(zip(reports, reports[1:]))
    return all(b.pipeline_depth >= a.pipeline_depth and b.delay_word_cycles >= a.delay_word_cycles
               for a, b in pairs)


def cmd_explore(args) -> int:
    try:
        freqs = [float(f) for f in args.freqs.split(",") if f.strip()]
    except ValueError:
        raise SpdError("USAGE", f"cannot parse frequency list {args.freqs!r}") from None
    if not freqs:
        raise SpdError("USAGE", "empty frequency list")
    program = load_program(args.spd)
    reports = explore_rows(program, freqs, _model(args), not args.no_delay_sharing)
    head = f"{'freq_MHz':>9} {'tier':>6} {'depth':>6} {'delay_wc':>9} {'chains':>6} {'mem':>4} " \
           f"{'reg_bits':>9} {'N_ops':>6} {'GFlops':>7}"
    print(head)
    for r in reports:
        print(f"{r.target_freq:>9g} {r.tier_mhz:>6g} {r.pipeline_depth:>6} {r.delay_word_cycles:>9g} "
              f"{r.delay_chains:>6} {r.memory_chains:>4} {r.register_estimate_bits:>9g} {r.n_ops:>6} "
              f"{r.est_gflops:>7.1f}")
    ok = monotone(reports)
    print("trend: depth and delay cost non-decreasing with frequency" if ok
          else "trend: VIOLATED, cost decreases somewhere")
    if args.json:
        _write_text(args.json, json.dumps([r.to_dict() for r in reports], indent=2) + "\n")
    return 0 if ok else 1


# -- dot -------------------------------------------------------------------------------

def cmd_dot(args) -> int:
    design = _compile(args)
    _write_text(args.output, emit_dot(design.dfg if args.pre else design.sdfg))
    return 0


# -- entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spdc", description="SPD stream-processor compiler and simulator. "
                                 "SPD paths may be 'bundled:lbm.spd' or 'bundled:sample_core.spd'.")
    ap.add_argument("--version", action="version", version=f"spdc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sharing=True):
        p.add_argument("spd", help="SPD source file")
        p.add_argument("--freq", type=float, default=125.0, help="target frequency in MHz (default 125)")
        p.add_argument("--latency-model", metavar="PATH", help="JSON latency model (default: bundled)")
        if sharing:
            p.add_argument("--no-delay-sharing", action="store_true",
                           help="one delay module per lagging edge instead of shared tapped chains")

    p = sub.add_parser("compile", help="generate HDL, manifest, DOT and reports")
    common(p)
    p.add_argument("--out", default="out", help="output root; artifacts go to OUT/<name>/ (default out)")
    p.add_argument("--dot", action="store_true", help="also write the pre-balancing graph as dfg_pre.dot")
    p.add_argument("--dump-dfg", metavar="PATH", help="write the pre-balancing DOT graph ('-' = stdout)")
    p.add_argument("--dump-schedule", metavar="PATH", help="write node/ready/latency/arrival TSV ('-' = stdout)")
    p.add_argument("--memory-threshold", type=int, default=32,
                   help="delay chains at least this long become RAM buffers (default 32)")
    p.add_argument("-v", "--verbose", action="store_true", help="print the full report")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", help="cycle-accurate simulation of the compiled pipeline")
    common(p)
    p.add_argument("--input", metavar="PATH", help="input stream (.csv or binary spdc-stream)")
    p.add_argument("--output", metavar="PATH", help="output stream, or lattice with --lattice")
    p.add_argument("--random", type=int, metavar="N", help="drive N random finite vectors")
    p.add_argument("--seed", type=int, default=0, help="seed for --random (default 0)")
    p.add_argument("--check", action="store_true", help="compare with the untimed reference interpreter")
    p.add_argument("--stall-pattern", metavar="P", help="'3,4,10' or 'random:<duty>:<seed>'")
    p.add_argument("--trace", metavar="PATH", help="per-cycle handshake trace as CSV")
    p.add_argument("--lattice", metavar="PATH", help="run LBM time steps on a .lat file")
    p.add_argument("--steps", type=int, default=1, help="time steps with --lattice (default 1)")
    p.add_argument("--tolerance", type=float, default=1e-5,
                   help="max relative error accepted with --lattice (default 1e-5)")
    p.add_argument("--backend", choices=("cython", "python"), help="kernel backend (default: fastest)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("explore", help="compare builds across target frequencies")
    common(p)
    p.add_argument("--freqs", default="125,250,500", help="comma-separated MHz list (default 125,250,500)")
    p.add_argument("--json", metavar="PATH", help="write the reports as JSON ('-' = stdout)")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("dot", help="print the data-flow graph in DOT")
    common(p)
    p.add_argument("--pre", action="store_true", help="graph before delay insertion")
    p.add_argument("-o", "--output", default="-", help="destination (default stdout)")
    p.set_defaults(func=cmd_dot)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpdError as err:
        print(str(err), file=sys.stderr)
        return 2 if err.code in ("FILE_NOT_FOUND", "USAGE") else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
