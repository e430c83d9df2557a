import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2kp.backend import OPTIMAL, TIME_LIMIT, Backend, BackendConfig, HighsBackend, SolveReport
from g2kp.enumeration import ENHANCED, FAITHFUL, enumerate_graph
from g2kp.instance import Bounds, Instance, Piece, generate_random_instance
from g2kp.milp import build_model, extract_solution, verify_solution
from g2kp.oracle import optimal_value_bruteforce
from g2kp.pricing import (
    PHASES,
    PricingError,
    final_pricing,
    greedy_heuristic,
    greedy_layout,
    iterative_pricing,
    phase_csv,
    reduced_costs,
    restricted_graph,
    restricted_support,
    run_priced_pipeline,
    solve_restricted,
)

small = Bounds(plate_length=(5, 12), plate_width=(5, 12))
ALL_WASTE = Instance(3, 3, (Piece(4, 4, 10, 1),), "waste")


class NoDuals(HighsBackend):
    def solve_lp(self, model, config=BackendConfig()):
        report = super().solve_lp(model, config)
        report.row_duals = None
        return report


class SlowMip(HighsBackend):
    """Pretends every MILP hits the time limit without an incumbent."""

    def solve_milp(self, model, config=BackendConfig()):
        return SolveReport(TIME_LIMIT, message="stub")


class Dualless(Backend):
    name = "dualless"


# --------------------------------------------------------------------------
# heuristic and restricted model


def test_heuristic_toy1(toy1):
    g = restricted_graph(toy1)
    sol = greedy_heuristic(toy1, g)
    assert sol.objective >= 12
    assert verify_solution(sol, g, toy1)


def test_heuristic_trivial_cases(single):
    assert greedy_heuristic(single).objective == 7
    assert greedy_heuristic(ALL_WASTE).objective == 0
    assert greedy_layout(ALL_WASTE) is None


def test_heuristic_is_deterministic():
    inst = generate_random_instance(17)
    assert greedy_layout(inst) == greedy_layout(inst)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_heuristic_always_verifies(seed, normalize):
    inst = generate_random_instance(seed)
    g = restricted_graph(inst, normalize)
    assert verify_solution(greedy_heuristic(inst, g), g, inst)


def test_restricted_toy1(toy1, backend, single):
    res = solve_restricted(toy1, backend)
    assert res.lb == 28
    assert verify_solution(res.solution, res.graph, toy1)
    assert solve_restricted(single, backend).lb == 7


def test_restricted_timeout_keeps_heuristic(toy1):
    res = solve_restricted(toy1, SlowMip())
    assert res.report.status == TIME_LIMIT
    assert res.lb == greedy_heuristic(toy1).objective


# --------------------------------------------------------------------------
# reduced costs and iterative pricing


def test_reduced_cost_formulas(toy1, backend):
    g = enumerate_graph(toy1, ENHANCED, normalize=True)
    m = build_model(g)
    duals = backend.solve_lp(m).row_duals
    rc = reduced_costs(m, duals)

    def pi(j):
        return duals["root" if j == 0 else f"plate_{j}"]

    for k, cut in enumerate(g.cuts):
        name = f"x_{cut.orientation}_{cut.position}_{cut.parent}"
        children = [c for c in (cut.first, cut.second) if c >= 0]
        assert rc[name] == pytest.approx(sum(pi(c) for c in children) - pi(cut.parent), abs=1e-9)
    for e in g.extractions:
        expected = toy1.pieces[e.piece].profit - pi(e.plate) - duals[f"dem_{e.piece}"]
        assert rc[f"e_{e.piece}_{e.plate}"] == pytest.approx(expected, abs=1e-9)


def test_iterative_pricing_toy1(toy1, backend):
    g = enumerate_graph(toy1, FAITHFUL)
    m = build_model(g)
    res = iterative_pricing(g, m, backend)
    assert res.ub >= 28
    assert res.ub == pytest.approx(backend.solve_lp(m).objective)
    sizes = [r.active for r in res.rounds]
    assert sizes == sorted(sizes)
    assert res.rounds[-1].added == 0


def test_iterative_pricing_full_start(toy1, backend):
    g = enumerate_graph(toy1, ENHANCED)
    m = build_model(g)
    res = iterative_pricing(g, m, backend, active=set(range(len(m.columns))))
    assert len(res.rounds) == 1 and res.rounds[0].added == 0


def test_iterative_pricing_all_waste(backend):
    g = enumerate_graph(ALL_WASTE, ENHANCED)
    m = build_model(g)
    assert iterative_pricing(g, m, backend).ub == 0


def test_iterative_pricing_needs_duals(toy1):
    g = enumerate_graph(toy1, ENHANCED)
    with pytest.raises(PricingError):
        iterative_pricing(g, build_model(g), NoDuals())
    with pytest.raises(PricingError):
        iterative_pricing(g, build_model(g), Dualless())


def test_restricted_support_contains_terminals(toy1):
    g = enumerate_graph(toy1, FAITHFUL)
    m = build_model(g)
    support = restricted_support(g, m)
    assert all(k in support for k, c in enumerate(m.columns) if c.ref[0] != "x")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([ENHANCED, FAITHFUL]))
def test_basic_active_columns_price_to_zero(seed, rules):
    be = HighsBackend()
    inst = generate_random_instance(seed, small)
    g = enumerate_graph(inst, rules, normalize=True)
    m = build_model(g)
    res = iterative_pricing(g, m, be)
    sub = m.subset(res.active)
    lp = be.solve_lp(sub)
    rc = reduced_costs(m, lp.row_duals)
    for col in sub.columns:
        v = lp.values[col.name]
        if 1e-6 < v < col.upper - 1e-6:
            assert abs(rc[col.name]) <= 1e-6
    assert res.ub == pytest.approx(be.solve_lp(m).objective, abs=1e-6)


# --------------------------------------------------------------------------
# final pricing


def test_final_pricing_toy1(toy1, backend):
    g = enumerate_graph(toy1, FAITHFUL)
    m = build_model(g)
    ip = iterative_pricing(g, m, backend)
    fixed = final_pricing(g, m, 28, ip.ub, ip.duals)
    assert backend.solve_milp(build_model(fixed.graph)).objective == 28
    with pytest.raises(PricingError):
        final_pricing(g, m, 40, ip.ub, ip.duals)


def test_final_pricing_keeps_zero_reduced_cost(toy1, backend):
    g = enumerate_graph(toy1, FAITHFUL)
    m = build_model(g)
    ip = iterative_pricing(g, m, backend)
    rc = reduced_costs(m, ip.duals)
    for keep_ties in (True, False):
        fixed = final_pricing(g, m, 28, ip.ub, ip.duals, keep_ties=keep_ties)
        for col in m.columns:
            if rc[col.name] >= 0:
                assert col.ref not in fixed.removed


def test_final_pricing_when_bounds_meet(single, backend):
    g = enumerate_graph(single, ENHANCED)
    m = build_model(g)
    ip = iterative_pricing(g, m, backend)
    assert ip.ub == 7
    fixed = final_pricing(g, m, 7, 7, ip.duals)
    assert backend.solve_milp(build_model(fixed.graph)).objective == 7


# --------------------------------------------------------------------------
# pipeline


def test_pipeline_toy1(toy1, backend):
    res = run_priced_pipeline(toy1, backend)
    assert res.status == OPTIMAL and res.lb == 28 and res.ub == 28
    assert verify_solution(res.solution, res.graph, toy1)
    assert set(res.state.times) == set(PHASES)
    assert [h[0] for h in res.state.history][:4] == ["E", "H", "RP", "IP"]
    text = phase_csv([("toy1", res.state)])
    assert text.splitlines()[0] == "instance,phase,seconds"
    assert [ln.split(",")[1] for ln in text.splitlines()[1:]] == list(PHASES)


def test_pipeline_early_return(single, backend):
    res = run_priced_pipeline(single, backend)
    assert res.status == OPTIMAL and res.lb == 7
    assert res.state.times["BB"] == 0 and res.state.times["LP"] == 0
    assert res.final_graph is None


def test_pipeline_timeout_in_restricted_solve(toy1):
    res = run_priced_pipeline(toy1, SlowMip())
    assert res.status == TIME_LIMIT
    assert res.lb == greedy_heuristic(toy1).objective
    assert math.isinf(res.ub)


def test_pipeline_rejects_dualless_backend(toy1):
    with pytest.raises(PricingError):
        run_priced_pipeline(toy1, Dualless())


def test_pipeline_all_waste(backend):
    res = run_priced_pipeline(ALL_WASTE, backend)
    assert res.status == OPTIMAL and res.lb == 0 and res.ub == 0


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 10**6),
    st.sampled_from([ENHANCED, FAITHFUL]),
    st.booleans(),
    st.booleans(),
    st.booleans(),
)
def test_pipeline_sandwich(seed, rules, normalize, warm, use_purge):
    from g2kp.oracle import OracleLimits

    inst = generate_random_instance(seed, small)
    best = optimal_value_bruteforce(inst, OracleLimits(max_demand=15)).value
    res = run_priced_pipeline(
        inst, HighsBackend(), rules=rules, normalize=normalize, warm_start=warm, use_purge=use_purge
    )
    assert res.status == OPTIMAL and res.lb == best
    for phase, lb, ub in res.state.history:
        assert lb <= best <= ub + 1e-6, phase
    assert verify_solution(res.solution, res.graph, inst)
