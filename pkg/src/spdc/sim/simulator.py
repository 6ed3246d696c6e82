"""Stream harness around the cycle kernel: framing, back-pressure and traces.

Stall model: one global clock enable, ``ce = out_ready | ~out_valid``.  The
source always offers the next vector (bubbles once exhausted) and it is
consumed exactly on the cycles where the pipeline advances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SimError
from .kernel import make_kernel
from .netlist import Netlist, build_netlist
from .streamio import StallPattern, StreamPacket


@dataclass
class CycleRecord:
    cycle: int
    step: int | None        # kernel step executed this cycle; None while held
    accepted: int | None    # input vector consumed
    out_valid: bool
    ready: bool
    emitted: int | None     # output vector handed to the sink


@dataclass
class SimTrace:
    pipeline_depth: int
    n_inputs: int
    output_cycles: list[int]
    stalled: bool
    total_cycles: int
    backend: str
    cycles: list[CycleRecord] = field(default_factory=list)
    pins: dict[int, dict[str, int]] = field(default_factory=dict)

    @property
    def depth_observed(self) -> int | None:
        return self.output_cycles[0] if self.output_cycles else None


def throughput_check(trace: SimTrace) -> bool | None:
    """One output per cycle from ``depth`` to ``depth + N - 1``; None for stalled runs."""
    if trace.stalled:
        return None
    d = trace.pipeline_depth
    return trace.output_cycles == list(range(d, d + trace.n_inputs))


class Simulator:
    def __init__(self, target, registry=None, backend: str | None = None):
        sdfg = getattr(target, "sdfg", target)
        self.sdfg = sdfg
        self.netlist: Netlist = build_netlist(sdfg, registry)
        self.backend = backend
        nl = self.netlist
        self.in_slots = nl.input_slots + [nl.sideband_in[k] for k in ("valid", "sop", "eop")]
        self.out_slots = nl.output_slots + [nl.sideband_out[k] for k in ("valid", "sop", "eop")]

    @property
    def input_fields(self) -> list[str]:
        return self.netlist.input_fields

    @property
    def output_fields(self) -> list[str]:
        return self.netlist.output_fields

    def _feed(self, packet: StreamPacket, steps: int) -> np.ndarray:
        n, f = len(packet), len(self.netlist.input_slots)
        feed = np.zeros((max(steps, n), f + 3), dtype=np.uint32)
        feed[:n, :f] = packet.words
        feed[:n, f] = 1
        feed[:n, f + 1] = packet.sop
        feed[:n, f + 2] = packet.eop
        return feed

    def _check(self, packet: StreamPacket) -> None:
        want = self.netlist.input_fields
        if packet.words.shape[1] != len(want) and len(packet):
            raise SimError("WIDTH_MISMATCH", f"stream has {packet.words.shape[1]} fields, design expects "
                           f"{len(want)} ({', '.join(want)})")
        if packet.fields and list(packet.fields) != want:
            raise SimError("WIDTH_MISMATCH", f"stream fields {packet.fields} do not match design inputs {want}")

    def run(self, packet: StreamPacket, stalls: StallPattern | None = None, trace: bool = False,
            trace_window: int = 4096) -> tuple[StreamPacket, SimTrace]:
        self._check(packet)
        kernel = make_kernel(self.netlist, self.backend)
        stalls = stalls or StallPattern()
        if stalls or trace:
            rows, cycles, tr = self._run_cycles(kernel, packet, stalls, trace, trace_window)
        else:
            rows, cycles, tr = self._run_batch(kernel, packet)
        nf = len(self.netlist.output_slots)
        words = rows[:, :nf] if len(rows) else np.zeros((0, nf), dtype=np.uint32)
        out = StreamPacket(words, list(self.netlist.output_fields), list(self.netlist.output_classes),
                           rows[:, nf + 1].astype(bool) if len(rows) else None,
                           rows[:, nf + 2].astype(bool) if len(rows) else None)
        return out, tr

    def _limit(self, n: int) -> int:
        return n + 4 * (self.netlist.pipeline_depth + 1) + self.netlist.ring

    def _run_batch(self, kernel, packet):
        n = len(packet)
        depth = self.netlist.pipeline_depth
        steps = n + depth if n else 0
        feed = self._feed(packet, steps)
        outs = kernel.run(feed, self.in_slots, self.out_slots) if steps else np.zeros((0, len(self.out_slots)),
                                                                                     dtype=np.uint32)
        vcol = len(self.netlist.output_slots)
        chunks = [outs]
        total = steps
        while n and int(np.count_nonzero(np.concatenate(chunks)[:, vcol] & 1)) < n:
            if total >= self._limit(n):
                raise SimError("OUTPUT_TIMEOUT", f"only some of {n} outputs appeared within {total} cycles")
            extra = depth + 1
            chunks.append(kernel.run(np.zeros((extra, feed.shape[1]), dtype=np.uint32),
                                     self.in_slots, self.out_slots))
            total += extra
        allout = np.concatenate(chunks) if chunks else outs
        valid_idx = np.flatnonzero(allout[:, vcol] & 1) if n else np.zeros(0, dtype=np.int64)
        if len(valid_idx) != n:
            raise SimError("FRAMING_ERROR", f"{len(valid_idx)} valid outputs for {n} inputs")
        tr = SimTrace(depth, n, valid_idx.tolist(), False, total, kernel.backend)
        return allout[valid_idx], valid_idx, tr

    def _run_cycles(self, kernel, packet, stalls, trace, window):
        n = len(packet)
        feed = self._feed(packet, n + 1)
        bubble = feed[n]
        vcol = len(self.netlist.output_slots)
        all_slots = list(range(self.netlist.n_slots))
        names = self.netlist.slot_names
        tr = SimTrace(self.netlist.pipeline_depth, n, [], bool(stalls), 0, kernel.backend)
        rows: list[list[int]] = []
        presented: list[int] | None = None
        hold = False
        k = 0
        cycle = 0
        while len(rows) < n:
            step = accepted = None
            if not hold:
                kernel.step(self.in_slots, feed[k] if k < n else bubble)
                presented = kernel.read(self.out_slots)
                step = kernel.t - 1
                if k < n:
                    accepted = k
                    k += 1
                if trace and cycle < window:
                    tr.pins[step] = dict(zip(names, kernel.read(all_slots)))
                if step > self._limit(n):
                    raise SimError("OUTPUT_TIMEOUT", f"only {len(rows)} of {n} outputs after {step} steps")
            ready = cycle not in stalls
            out_valid = bool(presented is not None and presented[vcol] & 1)
            emitted = None
            if out_valid and ready:
                emitted = len(rows)
                rows.append(presented)
                tr.output_cycles.append(cycle)
            hold = out_valid and not ready
            if trace and cycle < window:
                tr.cycles.append(CycleRecord(cycle, step, accepted, out_valid, ready, emitted))
            cycle += 1
        tr.total_cycles = cycle
        arr = np.array(rows, dtype=np.uint32).reshape(len(rows), len(self.out_slots))
        return arr, tr.output_cycles, tr


def simulate(target, packet: StreamPacket, stalls: StallPattern | None = None, registry=None,
             backend: str | None = None, trace: bool = False,
             trace_window: int = 4096) -> tuple[StreamPacket, SimTrace]:
    """Run ``packet`` through a compiled design (or ScheduledDfg)."""
    return Simulator(target, registry, backend).run(packet, stalls, trace, trace_window)
