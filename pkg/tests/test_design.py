import random

import pytest

from netctrl import exactla as ex
from netctrl import ratfun, verify
from netctrl.design import (InfeasibleDesignError, brute_force_min_topology,
                            design_topology, eliminate_pdums, extract_cover_sets,
                            g_value, greedy_color, greedy_link_rows,
                            minimal_rows_exhaustive)
from netctrl.model import NdsModel, StructuredPattern, SubsystemModel

from randgen import random_fixed_subsystems


def _modes(nds, mode_filter="all"):
    spec = ratfun.spectrum(nds)
    lams = [l for l in spec.values
            if mode_filter == "all" or l.real >= -1e-9]
    return [ratfun.mode_data(nds, lam) for lam in lams]


def _controllable_alone():
    return SubsystemModel(
        A_xx0=ex.mat([[0]]), A_xv0=ex.mat([[1]]), B_xu0=ex.mat([[1]]),
        A_zx0=ex.mat([[1]]), A_zv0=ex.mat([[0]]), B_zu0=ex.mat([[1]]))


def test_g_value_sec7(sec7_empty):
    modes_all = _modes(sec7_empty)
    assert g_value([], modes_all) == 8          # sum of output-block ranks
    assert g_value(range(6), modes_all) == 13   # every target reached
    modes_unstable = _modes(sec7_empty, "unstable")
    assert g_value([], modes_unstable) == 5
    assert g_value([2, 4], modes_unstable) == 8  # rows 3 and 5, 1-based


def test_greedy_rows_sec7(sec7_empty):
    rows_u, trace_u = greedy_link_rows(_modes(sec7_empty, "unstable"), 6)
    assert sorted(rows_u) == [2, 4]              # {3, 5} 1-based
    assert trace_u == [5, 7, 8]
    rows_a, trace_a = greedy_link_rows(_modes(sec7_empty), 6)
    assert sorted(rows_a) == [0, 2, 4]           # {1, 3, 5} 1-based
    assert trace_a[-1] == 13


def test_greedy_rows_trivial_when_covered():
    sub = _controllable_alone()
    nds = NdsModel([sub], StructuredPattern(1, 1, {}))
    rows, trace = greedy_link_rows(_modes(nds), 1)
    assert rows == []


def test_cover_sets_sec7(sec7_empty):
    modes_u = _modes(sec7_empty, "unstable")
    rows_u, _ = greedy_link_rows(modes_u, 6)
    covers_u = extract_cover_sets(rows_u, modes_u, 6, 5)
    assert [[s + 1 for s in c] for c in covers_u] == [
        [3, 5, 7, 11], [3, 5, 7, 9, 11]]
    modes_a = _modes(sec7_empty)
    rows_a, _ = greedy_link_rows(modes_a, 6)
    covers_a = extract_cover_sets(rows_a, modes_a, 6, 5)
    assert [[s + 1 for s in c] for c in covers_a] == [
        [3, 5, 7, 11], [3, 5, 7, 9, 11], [1, 5, 7, 9, 11]]


def test_cover_set_inside_ports_only():
    sub = _controllable_alone()
    nds = NdsModel([sub], StructuredPattern(1, 1, {}))
    modes = _modes(nds)
    covers = extract_cover_sets([], modes, 1, 1)
    assert all(set(c) <= {1} for c in covers)  # only the port column (index M_v)


def test_greedy_color_sec7_unstable(sec7_empty):
    modes = _modes(sec7_empty, "unstable")
    rows, _ = greedy_link_rows(modes, 6)
    covers = extract_cover_sets(rows, modes, 6, 5)
    graph, positions = greedy_color(covers, 6, 5, [md.M_r for md in modes])
    # 1-based: vertex 5 -> color 2 first, vertex 3 -> color 4 second
    assert graph.order == (4, 2)
    assert graph.colors[4] == frozenset({1})
    assert graph.colors[2] == frozenset({3})
    assert positions == [(2, 3), (4, 1)]        # (3,4) and (5,2) 1-based


def test_greedy_color_sec7_all(sec7_empty):
    modes = _modes(sec7_empty)
    rows, _ = greedy_link_rows(modes, 6)
    covers = extract_cover_sets(rows, modes, 6, 5)
    graph, positions = greedy_color(covers, 6, 5, [md.M_r for md in modes])
    assert graph.order == (4, 2, 0)
    assert graph.colors[0] == frozenset({3})    # reuses color 4 (1-based)
    assert positions == [(0, 3), (2, 3), (4, 1)]


def test_greedy_color_ports_only_no_entries():
    graph, positions = greedy_color([[3, 4]], 3, 2, [2])
    assert positions == []
    assert graph.colors[3] == frozenset({0})
    assert graph.colors[4] == frozenset({1})


def test_greedy_color_saturated_vertex_gets_color_block():
    # vertex 0 faces both output colors, so it takes the largest target of
    # its covers as a block of colors and its colored edges are dropped
    graph, positions = greedy_color([[0, 1], [0, 2]], 1, 2, [2, 1])
    assert graph.colors[0] == frozenset({0, 1})
    assert positions == [(0, 0), (0, 1)]
    assert frozenset((0, 1)) in graph.removed_edges
    assert frozenset((0, 2)) in graph.removed_edges


def _cycle_sub(name):
    # one-state block whose single internal transfer entry depends on the
    # frequency and whose external input is disconnected
    return SubsystemModel(
        A_xx0=ex.mat([[0]]), A_xv0=ex.mat([[1]]), B_xu0=ex.mat([[0]]),
        A_zx0=ex.mat([[1]]), A_zv0=ex.mat([[0]]), B_zu0=ex.mat([[0]]), name=name)


def test_eliminate_pdums_sec7(sec7_designed3, sec7_designed2):
    assert eliminate_pdums(sec7_designed3) == []
    assert eliminate_pdums(sec7_designed2) == []


def test_eliminate_pdums_two_cycles():
    subs = [_cycle_sub("c1"), _cycle_sub("c2"), _controllable_alone()]
    # self-links close a dependent cycle inside each disconnected block
    scm = StructuredPattern(3, 3, {(0, 0): "phi_0_0", (1, 1): "phi_1_1"})
    nds = NdsModel(subs, scm)
    added = eliminate_pdums(nds)
    assert len(added) == 2
    assert all(d["provenance"].startswith("source") for d in added)
    # the first link anchors at the only reachable output; the second may use
    # the output freed by the first addition
    assert added[0]["from"] == "z31"
    assert {d["from"] for d in added} == {"z31", "z11"}
    positions = {d["position"] for d in added}
    phi = StructuredPattern(3, 3, {(0, 0): "phi_0_0", (1, 1): "phi_1_1",
                                   **{p: f"fix_{p[0]}_{p[1]}" for p in positions}})
    assert verify.check_pdum(NdsModel(subs, phi)) is None


def test_eliminate_pdums_ignores_constant_cycles():
    # constant-edge loop: no frequency dependence, nothing to do
    const_sub = SubsystemModel(
        A_xx0=ex.mat([[0]]), A_xv0=ex.mat([[0]]), B_xu0=ex.mat([[0]]),
        A_zx0=ex.mat([[0]]), A_zv0=ex.mat([[1]]), B_zu0=ex.mat([[0]]))
    nds = NdsModel([const_sub, _controllable_alone()],
                   StructuredPattern(2, 2, {(0, 0): "phi_0_0"}))
    assert eliminate_pdums(nds) == []


def test_eliminate_pdums_requires_reachable_output():
    subs = [_cycle_sub("c1")]
    nds = NdsModel(subs, StructuredPattern(1, 1, {(0, 0): "phi_0_0"}))
    with pytest.raises(InfeasibleDesignError):
        eliminate_pdums(nds)


def test_design_topology_sec7(sec7):
    res_u = design_topology(sec7.subsystems, "unstable")
    assert [(r + 1, c + 1) for r, c in res_u.positions] == [(3, 4), (5, 2)]
    assert res_u.verified
    assert res_u.stage2_links == []
    assert res_u.bound_report["bound_holds"]
    res_a = design_topology(sec7.subsystems, "all")
    assert [(r + 1, c + 1) for r, c in res_a.positions] == [(1, 4), (3, 4), (5, 2)]
    assert res_a.verified
    assert res_a.verdict.structurally_controllable
    d = res_a.to_dict()
    assert d["j_grd"] == [1, 3, 5]
    assert d["phi_positions"] == [[1, 4], [3, 4], [5, 2]]


def test_design_topology_zero_links_when_controllable():
    res = design_topology([_controllable_alone()], "all")
    assert res.positions == []
    assert res.verified


def test_design_rejects_free_blocks(sec7):
    import dataclasses
    sub = dataclasses.replace(
        sec7.subsystems[0],
        E1=ex.mat([[1], [0]]), E2=ex.mat([[0], [0]]),
        F1=ex.mat([[1, 0]]), F2=ex.mat([[0, 0]]), F3=ex.mat([[0]]),
        H=ex.mat([[0]]),
        param_block=StructuredPattern(1, 1, {(0, 0): "p1_0_0"}))
    with pytest.raises(InfeasibleDesignError):
        design_topology([sub] + sec7.subsystems[1:], "all")


def test_design_infeasible_reported():
    sub = SubsystemModel(
        A_xx0=ex.mat([[1]]), A_xv0=ex.mat([[0]]), B_xu0=ex.mat([[0]]),
        A_zx0=ex.mat([[1]]), A_zv0=ex.mat([[0]]), B_zu0=ex.mat([[0]]))
    with pytest.raises(InfeasibleDesignError) as err:
        design_topology([sub], "all")
    assert err.value.report is not None
    assert not err.value.report.feasible


def test_brute_force_sec7_minimum(sec7):
    best = brute_force_min_topology(sec7.subsystems, max_links=3)
    assert best is not None
    assert best.num_free == 3
    nds = NdsModel(sec7.subsystems, best)
    assert verify.check_structural_controllability(nds).structurally_controllable


def test_brute_force_zero_links():
    best = brute_force_min_topology([_controllable_alone()])
    assert best is not None and best.num_free == 0


def test_brute_force_infeasible_returns_none():
    sub = SubsystemModel(
        A_xx0=ex.mat([[1]]), A_xv0=ex.mat([[0]]), B_xu0=ex.mat([[0]]),
        A_zx0=ex.mat([[1]]), A_zv0=ex.mat([[0]]), B_zu0=ex.mat([[0]]))
    assert brute_force_min_topology([sub], max_links=1) is None


def test_brute_force_guard(sec7):
    subs = [sec7.subsystems[0]] + list(sec7.subsystems)  # 8 x 7 = 56 positions
    with pytest.raises(InfeasibleDesignError):
        brute_force_min_topology(subs)


def test_design_not_worse_than_brute_force():
    checked = 0
    for seed in range(40):
        subs = random_fixed_subsystems(seed, max_sub=2, max_state=2, max_port=2)
        try:
            res = design_topology(subs, "all")
        except InfeasibleDesignError:
            continue
        assert res.verified, f"seed {seed}"
        assert res.bound_report["bound_holds"], f"seed {seed}"
        n_pos = sum(s.m_v0 for s in subs) * sum(s.m_z0 for s in subs)
        if n_pos <= 16:
            best = brute_force_min_topology(subs, max_links=len(res.positions))
            assert best is not None
            assert best.num_free <= len(res.positions), f"seed {seed}"
            checked += 1
    assert checked >= 5


def test_greedy_bound_against_exhaustive_rows(sec7_empty):
    import math
    modes = _modes(sec7_empty)
    rows, _ = greedy_link_rows(modes, 6)
    best = minimal_rows_exhaustive(modes, 6)
    assert best is not None
    assert len(rows) <= (1 + math.log(6)) * max(1, len(best))
