"""End-to-end compile driver: parse, build, lower, balance."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import balance, dfg as dfgmod
from .ast import SpdProgram
from .exprsynth import census
from .latency import LatencyModel, OpTable, default_model
from .parser import parse, parse_file


@dataclass
class BuildReport:
    name: str
    pipeline_depth: int
    census: dict[str, int]
    n_ops: int
    target_freq: float
    tier_mhz: float
    delay_word_cycles: float
    delay_chains: int
    memory_chains: int
    operator_register_bits: int
    schedule: list[tuple[str, str, int, int, int]] = field(default_factory=list)

    @property
    def est_gflops(self) -> float:
        return self.target_freq / 1000 * self.n_ops

    @property
    def register_estimate_bits(self) -> float:
        """Operator pipeline stages times 32 bits plus the delay-line bits."""
        return self.operator_register_bits + self.delay_word_cycles * 32

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pipeline_depth": self.pipeline_depth,
            "census": dict(self.census),
            "n_ops": self.n_ops,
            "target_freq_mhz": self.target_freq,
            "tier_mhz": self.tier_mhz,
            "est_gflops": self.est_gflops,
            "delay_word_cycles": self.delay_word_cycles,
            "delay_chains": self.delay_chains,
            "memory_chains": self.memory_chains,
            "register_estimate_bits": self.register_estimate_bits,
            "schedule": [dict(zip(("node", "kind", "ready", "latency", "arrival"), row))
                         for row in self.schedule],
        }

    def to_text(self) -> str:
        c = self.census
        lines = [
            f"design            {self.name}",
            f"target frequency  {self.target_freq:g} MHz (tier <= {self.tier_mhz:g} MHz)",
            f"pipeline depth    {self.pipeline_depth} cycles",
            f"operators         add={c['add']} sub={c['sub']} mul={c['mul']} "
            f"const_mul={c['const_mul']} div={c['div']} neg={c['neg']}",
            f"N_ops             {self.n_ops}",
            f"est. performance  {self.est_gflops:.1f} GFlops ({self.est_gflops:g})",
            f"delay cost        {self.delay_word_cycles:g} word-cycles in {self.delay_chains} chains "
            f"({self.memory_chains} memory-backed)",
            f"register estimate {self.register_estimate_bits:g} bits",
            "",
            "schedule (node, kind, ready, latency, arrival):",
        ]
        lines += [f"  {n}\t{k}\t{r}\t{l}\t{a}" for n, k, r, l, a in self.schedule]
        return "\n".join(lines) + "\n"


@dataclass
class CompiledDesign:
    program: SpdProgram
    dfg: dfgmod.Dfg                 # pre-balancing graph (converters inserted, lowered)
    sdfg: balance.ScheduledDfg
    table: OpTable
    freq: float
    tier_mhz: float
    report: BuildReport


def schedule_table(sdfg: balance.ScheduledDfg) -> list[tuple[str, str, int, int, int]]:
    rows = []
    g = sdfg.dfg
    for nid in g.topo_order:
        node = g.nodes[nid]
        lat = max((node.pin_latency(p.name) for p in node.out_pins), default=0)
        arrival = max((sdfg.arrival[(nid, p.name)] for p in node.out_pins), default=sdfg.ready[nid])
        rows.append((node.label, node.kind.value, sdfg.ready[nid], lat, arrival))
    return rows


def front_end(program: SpdProgram, table: OpTable) -> dfgmod.Dfg:
    g = dfgmod.build_dfg(program)
    g = dfgmod.route_control_sideband(g, program)
    g = dfgmod.insert_format_converters(g, table)
    return dfgmod.apply_table(g, table)


def compile_program(program: SpdProgram, freq: float = 125.0, model: LatencyModel | None = None,
                    share: bool = True, memory_threshold: int = balance.MEMORY_THRESHOLD) -> CompiledDesign:
    model = model or default_model()
    tier_mhz, table = model.tier_for(freq)
    g = front_end(program, table)
    sdfg = balance.schedule(g, share=share, memory_threshold=memory_threshold)
    counts = census(g)
    cost = sdfg.cost
    op_bits = 32 * sum(op.latency + sum(o.delay for o in op.operands)
                       for n in g.nodes.values() if n.dag is not None for op in n.dag.ops)
    report = BuildReport(program.name, sdfg.pipeline_depth, counts, counts["n_ops"], freq, tier_mhz,
                         cost.total_word_cycles, cost.chains, cost.memory_chains, op_bits,
                         schedule_table(sdfg))
    return CompiledDesign(program, g, sdfg, table, freq, tier_mhz, report)


def compile_source(source: str, freq: float = 125.0, **kw) -> CompiledDesign:
    return compile_program(parse(source), freq, **kw)


def compile_file(path, freq: float = 125.0, **kw) -> CompiledDesign:
    return compile_program(parse_file(path), freq, **kw)
