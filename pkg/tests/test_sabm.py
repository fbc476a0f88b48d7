from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saba.instance import PhysicalParams
from saba.sabm import csos, csos_tokens, rwbs, sabm, sas, sas_tokens
from saba.schedule import ENERGY_VISIT, LOAD_VISIT, Solution, evaluate, route_cost

from helpers import demand, instance_and_solution, matrix_instance


def line_instance(dists, yields, robots=1, params=None):
    """Tasks laid out on a ray from the depot at the given distances."""
    pts = [0.0] + list(dists)
    d = [[abs(a - b) for b in pts] for a in pts]
    return matrix_instance(d, yields, robots=robots, params=params)


def test_csos_single_cycle_unchanged():
    inst = line_instance([5, 6], [10, 10])
    sol = Solution.from_tokens([[(2, 10), (3, 10)]])
    assert csos(inst, sol, 0).routes == sol.routes


def test_csos_reorders_to_avoid_swap():
    # far cycle first drains the battery below the threshold and forces a swap;
    # doing the two near cycles first lets the robot finish before it matters
    p = PhysicalParams(battery_kJ=60.0, swap_threshold_kJ=30.0, swap_time_s=150.0)
    inst = line_instance([900, 5, 6], [10, 10, 10], params=p)
    tokens = [(2, 10), ENERGY_VISIT, (3, 10), LOAD_VISIT, (4, 10)]
    sol = Solution.from_tokens([tokens])
    before = evaluate(inst, sol)
    assert before.feasible, before.violations
    out = csos(inst, sol, 0)
    after = evaluate(inst, out)
    assert after.feasible
    assert after.makespan_s < before.makespan_s
    assert ENERGY_VISIT not in out.routes[0]


def test_csos_fixed_point():
    p = PhysicalParams(battery_kJ=60.0, swap_threshold_kJ=30.0)
    inst = line_instance([900, 5, 6], [10, 10, 10], params=p)
    sol = Solution.from_tokens([[(2, 10), ENERGY_VISIT, (3, 10), LOAD_VISIT, (4, 10)]])
    once = csos(inst, sol, 0)
    assert csos(inst, once, 0).routes == once.routes


def test_sas_without_swaps_is_identity():
    inst = line_instance([5, 6, 7], [100, 100, 100])
    tokens = [(2, 100), (3, 100), LOAD_VISIT, (4, 100)]
    assert sas_tokens(inst, tokens, np.random.default_rng(0)) == tokens


def test_sas_anchors_first_segment():
    p = PhysicalParams(battery_kJ=50.0, swap_threshold_kJ=20.0)
    inst = line_instance([10, 11, 12, 13, 14], [50, 50, 50, 50, 50], params=p)
    tokens = [(2, 50), (3, 50), ENERGY_VISIT, (4, 50), (5, 50), ENERGY_VISIT, (6, 50)]
    sol = Solution.from_tokens([tokens])
    assert evaluate(inst, sol).feasible
    records = []
    out = sas_tokens(inst, tokens, np.random.default_rng(1), records.append)
    assert out[:3] == tokens[:3]
    anchors = [r for r in records if r["step"] == "sas-anchor"]
    assert anchors[0]["pool"] == {4: 50, 5: 50, 6: 50}
    assert len(anchors) <= tokens.count(ENERGY_VISIT) + 1
    assert evaluate(inst, Solution.from_tokens([out])).feasible


def test_rwbs_assigns_pool_to_least_loaded():
    inst = line_instance([50, 60, 1], [10, 10, 10], robots=2)
    p = inst.params
    # robot 0 is busier before its swap point; the pooled tail should go to robot 1
    sol = Solution.from_tokens([[(2, 10), (3, 10)], [(4, 10)]])
    out = rwbs(inst, sol, np.random.default_rng(0))
    assert demand(out) == demand(sol)
    assert evaluate(inst, out).feasible
    assert p is inst.params


def test_rwbs_greedy_rule_prefers_smaller_fixed_makespan():
    from saba.construct import deal_cycles

    inst = line_instance([10], [10], robots=2)
    assert deal_cycles(inst, [[(2, 10)]], base=[900.0, 400.0], longest_first=True) == [[], [[(2, 10)]]]
    assert deal_cycles(inst, [[(2, 10)]], base=[400.0, 400.0], longest_first=True) == [[[(2, 10)]], []]


def test_sabm_single_cycle_keeps_tasks():
    inst = line_instance([5, 9, 7], [10, 10, 10])
    sol = Solution.from_tokens([[(2, 10), (3, 10), (4, 10)]])
    out = sabm(inst, sol, np.random.default_rng(0))
    assert sorted(out.routes[0]) == [2, 3, 4]
    assert evaluate(inst, out).transport_energy_kJ <= evaluate(inst, sol).transport_energy_kJ + 1e-12


@settings(max_examples=150, deadline=None)
@given(instance_and_solution(max_tasks=8), st.integers(0, 2**16))
def test_sabm_contracts(case, seed):
    inst, sol = case
    rng = np.random.default_rng(seed)
    for k in range(inst.robot_count):
        t0 = route_cost(inst, sol.tokens(k)).time
        c = csos(inst, sol, k)
        assert route_cost(inst, c.tokens(k)).time <= t0 + 1e-9
        assert demand(c) == demand(sol) and evaluate(inst, c).feasible
        s = sas(inst, c, k, rng)
        assert demand(s) == demand(sol) and evaluate(inst, s).feasible
    out = sabm(inst, sol, rng)
    assert demand(out) == demand(sol)
    rep = evaluate(inst, out)
    assert rep.feasible, rep.violations
