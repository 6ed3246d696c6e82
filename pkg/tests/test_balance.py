import numpy as np
import pytest

from spdc.balance import (compute_arrivals, delay_cost, insert_delays, is_balanced, schedule,
                          share_delay_chains)
from spdc.compiler import compile_program, front_end
from spdc.dfg import NodeType, apply_table, build_dfg
from spdc.latency import default_model
from spdc.parser import parse
from spdc.sim import StreamPacket, simulate

from dagutil import brute_force_ready, random_dag_program
from conftest import random_finite

T125 = default_model().table_for(125)


def _arr(g, label, arrival):
    n = g.by_label(label)
    return arrival[(n.id, n.out_pins[0].name)]


def test_sample_arrivals_without_converters(sample_program):
    g = apply_table(build_dfg(sample_program), T125)
    ready, arrival = compute_arrivals(g)
    assert [_arr(g, x, arrival) for x in ("eq1", "eq2", "lathan")] == [5, 20, 21]
    swap = g.by_label("swap")
    assert arrival[(swap.id, "out0")] == arrival[(swap.id, "out1")] == 21
    s = insert_delays(g)
    need = {(g.nodes[e.src[0]].label, s.dfg.nodes[e.dst[0]].label): d for e, d in s.inserted_delays}
    assert need[("eq1", "swap")] == 16
    assert need[("eq2", "swap")] == 1
    assert ("eq1", "eq2") not in need
    assert need[("c", "eq2")] == need[("d", "eq2")] == 5
    assert s.pipeline_depth == 21


def test_sample_depth_with_converters(sample_design):
    assert sample_design.sdfg.pipeline_depth == 23
    assert is_balanced(sample_design.sdfg)


def test_chain_and_max():
    g = apply_table(build_dfg(parse(
        "Name t\nInput a\nOutput z\nx 2, HDL, (p) = m(a)\ny 3, HDL, (q) = m(p)\nz 4, HDL, (z) = m(q)\n")), T125)
    _, arrival = compute_arrivals(g)
    assert _arr(g, "z", arrival) == 9
    g = build_dfg(parse("Name t\nInput a, b\nOutput z\nx 7, HDL, (p) = m(a)\nz 0, HDL, (z) = m(p, b)\n"))
    ready, _ = compute_arrivals(g)
    assert ready[g.by_label("z").id] == 7


def test_balanced_diamond_needs_nothing():
    g = build_dfg(parse("Name t\nInput a\nOutput z\nx 4, HDL, (p) = m(a)\ny 4, HDL, (q) = m(a)\n"
                        "z 1, HDL, (z) = m(p, q)\n"))
    assert insert_delays(g).inserted_delays == []


def test_sharing_taps():
    src = ("Name t\nInput a, b, c\nOutput y, z\nx 16, HDL, (p) = m(b)\nq 1, HDL, (r) = m(c)\n"
           "y 0, HDL, (y) = m(a, p)\nz 0, HDL, (z) = m(a, r)\n")
    g = build_dfg(parse(src))
    plain = insert_delays(g)
    assert plain.cost.total_word_cycles == 16 + 1 + 15
    shared = share_delay_chains(plain)
    chains = [n for n in shared.dfg.nodes.values() if n.kind is NodeType.DELAY]
    a_chain = [n for n in chains if n.label.startswith("dly_a")]
    assert len(a_chain) == 1 and a_chain[0].payload == (1, 16)
    assert shared.cost.total_word_cycles == 16 + 15
    assert is_balanced(shared)


def test_equal_taps_merge():
    src = ("Name t\nInput a, b\nOutput y, z\nx 5, HDL, (p) = m(b)\n"
           "y 0, HDL, (y) = m(a, p)\nz 0, HDL, (z) = m(a, p)\n")
    shared = schedule(build_dfg(parse(src)))
    a_chain = [n for n in shared.dfg.nodes.values() if n.kind is NodeType.DELAY]
    assert [n.payload for n in a_chain] == [(5,)]
    assert shared.cost.total_word_cycles == 5


def test_outputs_synchronized(lbm):
    s = lbm.sdfg
    g = s.dfg
    for nid in g.output_ports:
        e = g.in_edges(nid)[0]
        assert s.arrival[e.src] == s.pipeline_depth


def test_memory_threshold_counts(lbm):
    cost = delay_cost(lbm.sdfg.dfg, 32)
    assert cost.memory_chains == sum(1 for n in lbm.sdfg.delay_nodes() if max(n.payload) >= 32)
    assert delay_cost(lbm.sdfg.dfg, 10**6).memory_chains == 0


@pytest.mark.parametrize("seed", range(5))
def test_random_dags_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        src, lat, preds, inputs = random_dag_program(rng)
        g = build_dfg(parse(src))
        ready, _ = compute_arrivals(g)
        want = brute_force_ready(preds, lat, inputs)
        for var, r in want.items():
            assert ready[g.by_label(f"n_{var}").id] == r
        s = insert_delays(g)
        assert is_balanced(s)
        again = insert_delays(s.dfg)
        assert again.inserted_delays == []
        assert share_delay_chains(s).cost.total_word_cycles <= s.cost.total_word_cycles


@pytest.mark.parametrize("seed", range(4))
def test_sharing_preserves_simulation(seed):
    rng = np.random.default_rng(100 + seed)
    src, _, _, inputs = random_dag_program(rng, 30, kind="equ")
    program = parse(src)
    a = compile_program(program, 125.0, share=True)
    b = compile_program(program, 125.0, share=False)
    x = random_finite(rng, (64, len(inputs)))
    pk = StreamPacket(x.view(np.uint32), inputs)
    out_a, _ = simulate(a, pk)
    out_b, _ = simulate(b, pk)
    assert np.array_equal(out_a.words, out_b.words)
    assert a.report.delay_word_cycles <= b.report.delay_word_cycles


def test_monotone_cost_over_tiers(lbm):
    from spdc.lbm import lbm_program
    reports = [compile_program(lbm_program(), f).report for f in (125, 250, 500)]
    assert [r.delay_word_cycles for r in reports] == sorted(r.delay_word_cycles for r in reports)


def test_front_end_lowers_everything(sample_program):
    g = front_end(sample_program, T125)
    assert all(n.latency is not None for n in g.nodes.values())
