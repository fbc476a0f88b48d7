from __future__ import annotations

import time

import pytest
from hypothesis import given, settings

from saba.instance import PhysicalParams
from saba.schedule import (
    ENERGY_VISIT,
    LOAD_VISIT,
    InstanceInfeasibleError,
    MalformedSolutionError,
    Solution,
    decompose_cycles,
    dominates,
    evaluate,
    gantt_csv,
    read_solution,
    repair_depot_markers,
    repair_route,
    route_cost,
    solution_from_dict,
    solution_to_dict,
    split_cycles,
    write_solution,
)

from helpers import instance_and_solution, matrix_instance, worked_example


def hand_energy(p: PhysicalParams, legs):
    """Transport energy of (distance, load) legs, straight from the physics."""
    return sum(d * (p.empty_weight_kg + load * p.fruit_weight_kg) * p.gravity * p.rolling_mu / p.efficiency * 1e-3 for d, load in legs)


def test_worked_example_values():
    inst = worked_example()
    p = inst.params
    rep = evaluate(inst, Solution.from_tokens([[(2, 20), (3, 30)]]))
    legs = [(10, 0), (5, 20), (12, 50)]
    energy = hand_energy(p, legs)
    time_s = (10 + 5 + 12) / p.speed_mps + p.pick_time_s * 50
    assert rep.makespan_s == pytest.approx(time_s, abs=1e-9)
    assert rep.makespan_s == pytest.approx(377.0, abs=1e-9)
    assert rep.transport_energy_kJ == pytest.approx(energy, abs=1e-12)
    assert rep.transport_energy_kJ == pytest.approx(0.62539, abs=1e-5)
    cyc = rep.per_robot[0].cycles[0]
    assert cyc.travel_s == 27 and cyc.pick_s == 350 and cyc.service_kJ == pytest.approx(15.0)
    assert cyc.battery_on_return_kJ == pytest.approx(p.battery_kJ - energy - 50 * p.pick_energy_kJ, abs=1e-12)
    assert cyc.battery_on_return_kJ == pytest.approx(416.37461, abs=1e-5)
    assert rep.feasible and cyc.terminator == "end-of-route"


def test_worked_example_trace():
    rep = evaluate(worked_example(), Solution.from_tokens([[(2, 20), (3, 30)]]))
    nodes = [t[0] for t in rep.battery_trace[0]]
    loads = [t[2] for t in rep.battery_trace[0]]
    assert nodes == [2, 3, 0] and loads == [20, 50, 0]


def test_evaluator_is_fast():
    inst = worked_example()
    sol = Solution.from_tokens([[(2, 20), (3, 30)]])
    t0 = time.perf_counter()
    for _ in range(100):
        evaluate(inst, sol)
    assert (time.perf_counter() - t0) / 100 < 1e-3


def test_empty_route():
    inst = matrix_instance([[0, 1], [1, 0]], [1], robots=2)
    rep = evaluate(inst, Solution([[2], []], {(0, 0, 2): 1}))
    assert rep.per_robot[1].completion_time_s == 0 and rep.per_robot[1].transport_kJ == 0
    empty = evaluate(matrix_instance([[0]], []), Solution([[]], {}))
    assert (empty.makespan_s, empty.transport_energy_kJ, empty.feasible) == (0.0, 0.0, True)


def test_swap_above_threshold_is_infeasible():
    inst = matrix_instance([[0, 10, 10], [10, 0, 1], [10, 1, 0]], [5, 5])
    rep = evaluate(inst, Solution.from_tokens([[(2, 5), ENERGY_VISIT, (3, 5)]]))
    assert not rep.feasible
    assert any("swap above threshold" in v for v in rep.violations)


def test_unknown_task_is_malformed():
    with pytest.raises(MalformedSolutionError):
        evaluate(worked_example(), Solution([[2, 9]], {(0, 0, 2): 20, (0, 0, 9): 30}))


def test_demand_mismatch_reported():
    rep = evaluate(worked_example(), Solution.from_tokens([[(2, 20), (3, 29)]]))
    assert not rep.feasible and any("task 3" in v for v in rep.violations)


def test_swap_time_charged_to_terminated_cycle():
    p = PhysicalParams(battery_kJ=20.0, swap_threshold_kJ=10.0)
    inst = matrix_instance([[0, 10, 10], [10, 0, 1], [10, 1, 0]], [40, 10], params=p)
    sol = Solution.from_tokens([[(2, 40), ENERGY_VISIT, (3, 10)]])
    rep = evaluate(inst, sol)
    assert rep.feasible, rep.violations
    c0, c1 = rep.per_robot[0].cycles
    assert c0.swap_s == p.swap_time_s and c0.swapped and c1.swap_s == 0
    assert c1.battery_start_kJ == p.battery_kJ


def test_decompose_examples():
    inst = matrix_instance([[0] * 5 for _ in range(5)], [1, 1, 1, 1])
    sol = Solution.from_tokens([[(2, 1), (3, 1), LOAD_VISIT, (4, 1), ENERGY_VISIT, (5, 1)]])
    views = decompose_cycles(sol, 0)
    assert [v.task_sequence for v in views] == [(2, 3), (4,), (5,)]
    assert [v.terminator for v in views] == ["load-visit", "energy-visit", "end-of-route"]
    assert decompose_cycles(Solution([[]], {}), 0) == []
    one = decompose_cycles(Solution([[7]], {(0, 0, 7): 3}), 0)
    assert len(one) == 1 and one[0].terminator == "end-of-route"


@settings(max_examples=100, deadline=None)
@given(instance_and_solution())
def test_decompose_concatenates_back(case):
    inst, sol = case
    for k in range(inst.robot_count):
        route = []
        for v in decompose_cycles(sol, k):
            route.extend(v.task_sequence)
            if v.terminator != "end-of-route":
                route.append(LOAD_VISIT if v.terminator == "load-visit" else ENERGY_VISIT)
        assert route == sol.routes[k]


def test_repair_inserts_load_visit_on_overflow():
    inst = matrix_instance([[0, 5, 5], [5, 0, 1], [5, 1, 0]], [200, 150])
    assert 200 + 150 > inst.params.load_capacity_fruits
    out = repair_route(inst, [(2, 200), (3, 150)])
    assert out == [(2, 200), LOAD_VISIT, (3, 150)]


def test_repair_leaves_light_routes_alone():
    inst = matrix_instance([[0, 5, 5], [5, 0, 1], [5, 1, 0]], [100, 150])
    assert repair_route(inst, [(2, 100), (3, 150)]) == [(2, 100), (3, 150)]


def test_repair_swaps_when_battery_is_low():
    # the load-forced return after the first cycle arrives with about 80 kJ left
    p = PhysicalParams(battery_kJ=141.0, swap_threshold_kJ=86.4)
    inst = matrix_instance([[0, 10, 10], [10, 0, 1], [10, 1, 0]], [200, 150], params=p)
    out = repair_route(inst, [(2, 200), (3, 150)])
    assert out == [(2, 200), ENERGY_VISIT, (3, 150)]
    rep = evaluate(inst, Solution.from_tokens([out]))
    assert rep.feasible
    first = rep.per_robot[0].cycles[0]
    assert first.battery_on_return_kJ == pytest.approx(80.0, abs=1.0)
    assert first.swapped and not first.forced_swap


def test_repair_refuses_impossible_visit():
    p = PhysicalParams(battery_kJ=10.0, swap_threshold_kJ=2.0)
    inst = matrix_instance([[0, 10], [10, 0]], [50], params=p)
    with pytest.raises(InstanceInfeasibleError):
        repair_route(inst, [(2, 50)])


@settings(max_examples=200, deadline=None)
@given(instance_and_solution())
def test_repaired_solutions_are_feasible_and_stable(case):
    inst, sol = case
    rep = evaluate(inst, sol)
    assert rep.feasible, rep.violations
    # with every boundary kept as a break, repair is a fixed point
    for k in range(inst.robot_count):
        tokens = sol.tokens(k)
        assert repair_route(inst, tokens) == tokens


@settings(max_examples=200, deadline=None)
@given(instance_and_solution())
def test_route_cost_agrees_with_evaluate(case):
    inst, sol = case
    rep = evaluate(inst, sol)
    for k in range(inst.robot_count):
        rc = route_cost(inst, sol.tokens(k))
        assert rc.time == pytest.approx(rep.per_robot[k].completion_time_s, rel=1e-12, abs=1e-9)
        assert rc.energy == pytest.approx(rep.per_robot[k].transport_kJ, rel=1e-12, abs=1e-12)
        assert rc.feasible


@settings(max_examples=200, deadline=None)
@given(instance_and_solution())
def test_report_invariants(case):
    inst, sol = case
    rep = evaluate(inst, sol)
    p = inst.params
    assert rep.makespan_s == max(r.completion_time_s for r in rep.per_robot)
    assert rep.transport_energy_kJ == pytest.approx(sum(c.transport_kJ for r in rep.per_robot for c in r.cycles))
    for k, r in enumerate(rep.per_robot):
        cycles, _ = split_cycles(sol.tokens(k))
        for c, items in zip(r.cycles, cycles):
            expect = c.battery_start_kJ - c.transport_kJ - c.service_kJ
            assert c.battery_on_return_kJ == pytest.approx(expect, rel=1e-9, abs=1e-9)
            assert sum(n for _, n in items) <= p.load_capacity_fruits
        for node, battery, load in rep.battery_trace[k]:
            assert -1e-9 <= battery <= p.battery_kJ + 1e-9
            assert load <= p.load_capacity_fruits
            if node in (0, LOAD_VISIT, ENERGY_VISIT):
                assert load == 0


@settings(max_examples=100, deadline=None)
@given(instance_and_solution(max_robots=2))
def test_more_fruit_never_costs_less_energy(case):
    inst, sol = case
    base = evaluate(inst, sol).transport_energy_kJ
    key = next(iter(sol.splits))
    heavier = Solution(sol.routes, {**sol.splits, key: sol.splits[key] + 1})
    assert evaluate(inst, heavier).transport_energy_kJ >= base


def test_dominates():
    assert dominates((100, 5), (120, 6))
    assert not dominates((100, 5), (100, 5))
    assert not dominates((100, 7), (120, 6))
    assert dominates((100, 5), (100, 6))


def test_repair_depot_markers_builds_solution():
    inst = matrix_instance([[0, 5, 5], [5, 0, 1], [5, 1, 0]], [200, 150], robots=2)
    sol = repair_depot_markers(inst, [[(2, 200), (3, 101)], [(3, 49)]])
    assert sol.routes == [[2, 1, 3], [3]]
    assert sol.splits == {(0, 0, 2): 200, (0, 1, 3): 101, (1, 0, 3): 49}


@settings(max_examples=50, deadline=None)
@given(instance_and_solution())
def test_solution_file_round_trip(tmp_path_factory, case):
    _, sol = case
    path = write_solution(sol, tmp_path_factory.mktemp("s") / "sol.json")
    back = read_solution(path)
    assert back.routes == sol.routes and back.splits == sol.splits
    assert solution_from_dict(solution_to_dict(sol)).splits == sol.splits


def test_gantt_csv_rows():
    text = gantt_csv(evaluate(worked_example(), Solution.from_tokens([[(2, 20), (3, 30)]])))
    lines = text.strip().splitlines()
    assert lines[0] == "robot,cycle,start_s,end_s,kind"
    assert lines[1:] == ["0,0,0.0,27.0,travel", "0,0,27.0,377.0,pick"]
