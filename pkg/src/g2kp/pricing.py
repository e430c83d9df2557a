"""Priced solve pipeline.

Phases, in order:

    E   enumerate the full cut graph
    H   greedy shelf heuristic (deterministic MIP start)
    RP  restricted model: cuts only at piece dimensions -> lower bound
    IP  iterative LP pricing from the restricted columns -> upper bound
    FP  reduced-cost fixing, then purge
    LP  relaxation of the reduced model (tightens the upper bound)
    BB  branch-and-bound over the reduced model

All phases share one global time limit. Reduced costs are taken against
clipped row duals pi >= 0, so for every feasible integer point
``c.x <= pi.b + sum(rc_k * x_k)`` holds and fixing is exact.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from g2kp.backend import (
    ERROR,
    INFEASIBLE,
    OPTIMAL,
    TIME_LIMIT,
    Backend,
    BackendConfig,
    BackendError,
    SolveReport,
)
from g2kp.discretization import V
from g2kp.enumeration import ENHANCED, RESTRICTED, CutGraph, enumerate_graph, purge
from g2kp.instance import Instance
from g2kp.layout import Node, PieceNode, from_solution, embed, join_all, layout_profit
from g2kp.milp import ModelIR, Solution, build_model, extract_solution, solution_values

PHASES = ("E", "H", "RP", "IP", "FP", "LP", "BB")
RC_TOL = 1e-9


class PricingError(RuntimeError):
    pass


class PhaseTimeout(PricingError):
    pass


# --------------------------------------------------------------------------
# heuristic


def _shelves(instance: Instance, order: list[int], transpose: bool) -> Node | None:
    """First-fit shelves. Shelves are stacked by horizontal cuts and filled
    by vertical cuts; ``transpose`` swaps the two roles."""
    L, W = (instance.W, instance.L) if transpose else (instance.L, instance.W)

    def dims(i):
        p = instance.pieces[i]
        return (p.width, p.length) if transpose else (p.length, p.width)

    left = [p.demand for p in instance.pieces]
    shelves: list[list] = []  # [height, used length, pieces]
    stacked = 0
    for i in order:
        l, w = dims(i)
        while left[i] > 0:
            shelf = next((s for s in shelves if w <= s[0] and s[1] + l <= L), None)
            if shelf is None:
                if stacked + w > W or l > L:
                    break
                shelf = [w, 0, []]
                shelves.append(shelf)
                stacked += w
            shelf[1] += l
            shelf[2].append(PieceNode(i))
            left[i] -= 1
    across, along = ("h", "v") if transpose else ("v", "h")
    return join_all(along, [join_all(across, s[2]) for s in shelves])


def greedy_layout(instance: Instance) -> Node | None:
    """Best of the two shelf orientations (ties keep length-wise shelves)."""
    order = sorted(
        range(len(instance.pieces)),
        key=lambda i: (-instance.pieces[i].profit / instance.pieces[i].area, -instance.pieces[i].area, i),
    )
    best = None
    for transpose in (False, True):
        cand = _shelves(instance, order, transpose)
        if best is None or layout_profit(cand, instance) > layout_profit(best, instance):
            best = cand
    return best


def restricted_graph(instance: Instance, normalize: bool = False) -> CutGraph:
    return enumerate_graph(instance, RESTRICTED, normalize=normalize)


def greedy_heuristic(instance: Instance, graph: CutGraph | None = None) -> Solution:
    """Heuristic solution expressed in ``graph`` (default: the restricted graph)."""
    graph = graph if graph is not None else restricted_graph(instance)
    return embed(greedy_layout(instance), graph)


# --------------------------------------------------------------------------
# restricted model


@dataclass
class RestrictedResult:
    solution: Solution
    lb: int
    graph: CutGraph
    report: SolveReport


def solve_restricted(
    instance: Instance,
    backend: Backend,
    config: BackendConfig = BackendConfig(),
    *,
    normalize: bool = False,
    warm_start: bool = True,
    start: Solution | None = None,
) -> RestrictedResult:
    graph = restricted_graph(instance, normalize)
    model = build_model(graph)
    if start is None:
        start = greedy_heuristic(instance, graph)
    if warm_start:
        model = model.with_warm_start(solution_values(start, model, graph))
    report = backend.solve_milp(model, config)
    if report.status == ERROR:
        raise BackendError(f"restricted solve failed: {report.message}")
    best = start
    if report.values:
        sol = extract_solution(model, report.values, graph)
        if sol.objective >= best.objective:
            best = sol
    return RestrictedResult(best, best.objective, graph, report)


# --------------------------------------------------------------------------
# reduced costs


class DualPricer:
    """Reduced costs of every column of ``model`` for a given dual vector."""

    def __init__(self, model: ModelIR):
        self.model = model
        rows, cols, vals = [], [], []
        for r, row in enumerate(model.rows):
            for k, a in row.coefs:
                rows.append(r)
                cols.append(k)
                vals.append(a)
        self._rows = np.asarray(rows, dtype=np.int64)
        self._cols = np.asarray(cols, dtype=np.int64)
        self._vals = np.asarray(vals, dtype=float)
        self.objective = np.asarray([c.objective for c in model.columns], dtype=float)
        self.upper = np.asarray([c.upper for c in model.columns], dtype=float)
        self.rhs = np.asarray([r.rhs for r in model.rows], dtype=float)

    def pi(self, duals: dict[str, float]) -> np.ndarray:
        return np.asarray([max(0.0, duals.get(r.name, 0.0)) for r in self.model.rows])

    def reduced_costs(self, duals: dict[str, float]) -> np.ndarray:
        pi = self.pi(duals)
        priced = np.bincount(self._cols, weights=pi[self._rows] * self._vals, minlength=len(self.objective))
        return self.objective - priced

    def lagrangian_bound(self, duals: dict[str, float]) -> float:
        """``pi.b + sum over rc > 0 of rc * upper``; inf if an unbounded column prices out."""
        rc = self.reduced_costs(duals)
        pos = rc > RC_TOL
        if np.any(pos & ~np.isfinite(self.upper)):
            return math.inf
        return float(self.pi(duals) @ self.rhs + np.sum(rc[pos] * self.upper[pos]))


def reduced_costs(model: ModelIR, duals: dict[str, float]) -> dict[str, float]:
    rc = DualPricer(model).reduced_costs(duals)
    return {c.name: float(v) for c, v in zip(model.columns, rc)}


# --------------------------------------------------------------------------
# iterative pricing


def restricted_support(graph: CutGraph, model: ModelIR) -> set[int]:
    """Columns of the restricted model: cuts at a fitting piece's dimension, and
    every extraction/sale."""
    pieces = graph.instance.pieces
    keep = set()
    for k, col in enumerate(model.columns):
        kind, idx = col.ref
        if kind != "x":
            keep.add(k)
            continue
        cut = graph.cuts[idx]
        plate = graph.plates[cut.parent]
        fit = [p for p in pieces if p.fits(plate.length, plate.width)]
        dims = {p.length for p in fit} if cut.orientation == V else {p.width for p in fit}
        if cut.position in dims:
            keep.add(k)
    return keep


@dataclass
class PricingRound:
    active: int
    added: int
    value: float


@dataclass
class IterativeResult:
    ub: float
    duals: dict[str, float]
    active: set[int]
    rounds: list[PricingRound]


def iterative_pricing(
    graph: CutGraph,
    model: ModelIR,
    backend: Backend,
    config: BackendConfig = BackendConfig(),
    *,
    active: set[int] | None = None,
    deadline: float | None = None,
) -> IterativeResult:
    """Column generation over the explicit column list of ``model``.

    Each round solves the LP over the active columns and adds every inactive
    column with positive reduced cost. The final LP value equals the LP
    optimum of the full model.
    """
    if not backend.supports_duals:
        raise PricingError(f"backend {backend.name!r} does not report duals")
    active = set(restricted_support(graph, model) if active is None else active)
    pricer = DualPricer(model)
    rounds: list[PricingRound] = []
    while True:
        cfg = config
        if deadline is not None:
            remaining = deadline - time.perf_counter()
            if remaining <= 0:
                raise PhaseTimeout("time limit reached during iterative pricing")
            cfg = config.with_time_limit(remaining)
        report = backend.solve_lp(model.subset(active), cfg)
        if report.status == TIME_LIMIT:
            raise PhaseTimeout("time limit reached during iterative pricing")
        if report.status != OPTIMAL:
            raise PricingError(f"pricing LP ended with status {report.status}: {report.message}")
        if report.row_duals is None:
            raise PricingError("pricing LP returned no duals")
        rc = pricer.reduced_costs(report.row_duals)
        entering = [k for k in np.flatnonzero(rc > RC_TOL).tolist() if k not in active]
        rounds.append(PricingRound(len(active), len(entering), float(report.objective)))
        if not entering:
            return IterativeResult(float(report.objective), dict(report.row_duals), active, rounds)
        active.update(entering)


# --------------------------------------------------------------------------
# final pricing


@dataclass
class FixingResult:
    graph: CutGraph
    removed: set[tuple[str, int]]
    bound: float


def final_pricing(
    graph: CutGraph,
    model: ModelIR,
    lb: int,
    ub: float,
    duals: dict[str, float],
    *,
    keep_ties: bool = True,
) -> FixingResult:
    """Drop columns that cannot appear in a solution worth at least the target.

    The target is ``lb`` when ``keep_ties`` (every optimal solution survives,
    even one worth exactly ``lb``) and ``lb + 1`` otherwise (only strict
    improvements over the incumbent survive). Columns with ``rc >= 0`` are
    never dropped.
    """
    if lb > ub + 1e-6:
        raise PricingError(f"lower bound {lb} exceeds upper bound {ub}")
    pricer = DualPricer(model)
    rc = pricer.reduced_costs(duals)
    bound = max(ub, pricer.lagrangian_bound(duals))
    target = lb if keep_ties else lb + 1
    removed = set()
    if math.isfinite(bound):
        for k in np.flatnonzero(rc < 0).tolist():
            if bound + rc[k] < target - 1e-6:
                removed.add(model.columns[k].ref)
    return FixingResult(purge(graph, removed), removed, bound)


# --------------------------------------------------------------------------
# pipeline


@dataclass
class PricingState:
    lb: int = 0
    ub: float = math.inf
    active: set[int] = field(default_factory=set)
    duals: dict[str, float] = field(default_factory=dict)
    times: dict[str, float] = field(default_factory=dict)
    history: list[tuple[str, int, float]] = field(default_factory=list)

    def mark(self, phase: str) -> None:
        if self.lb > self.ub + 1e-6:
            raise PricingError(f"after {phase}: lower bound {self.lb} exceeds upper bound {self.ub}")
        self.history.append((phase, self.lb, self.ub))


@dataclass
class PipelineResult:
    status: str
    lb: int
    ub: float
    solution: Solution
    graph: CutGraph  # graph in which ``solution`` is expressed
    full_graph: CutGraph
    final_graph: CutGraph | None
    state: PricingState
    message: str = ""


def _closed(lb: int, ub: float) -> bool:
    return lb >= math.floor(ub + 1e-6)


def run_priced_pipeline(
    instance: Instance,
    backend: Backend,
    config: BackendConfig = BackendConfig(),
    *,
    rules: str = ENHANCED,
    normalize: bool = True,
    warm_start: bool = True,
    use_purge: bool = True,
    graph: CutGraph | None = None,
) -> PipelineResult:
    """Run E, H, RP, IP, FP, LP, BB under one time limit.

    ``graph`` may be supplied pre-enumerated (with any reduction passes
    already applied); E then only records zero time.
    """
    if not backend.supports_duals:
        raise PricingError(f"backend {backend.name!r} does not report duals")
    start = time.perf_counter()
    deadline = start + config.time_limit
    state = PricingState(times={p: 0.0 for p in PHASES})

    def remaining_config() -> BackendConfig:
        left = deadline - time.perf_counter()
        if left <= 0:
            raise PhaseTimeout("time limit reached")
        return config.with_time_limit(left)

    def timed(phase, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            state.times[phase] += time.perf_counter() - t0

    full = timed("E", lambda: graph if graph is not None else enumerate_graph(instance, rules, normalize=normalize))
    state.mark("E")

    rgraph = timed("H", lambda: restricted_graph(instance, normalize))
    best = timed("H", lambda: greedy_heuristic(instance, rgraph))
    best_graph = rgraph
    state.lb = best.objective
    state.mark("H")

    def finish(status: str, final_graph=None, message="") -> PipelineResult:
        if status == OPTIMAL:
            state.ub = state.lb
        return PipelineResult(status, state.lb, state.ub, best, best_graph, full, final_graph, state, message)

    try:
        def rp():
            return solve_restricted(
                instance, backend, remaining_config(), normalize=normalize, warm_start=warm_start, start=best
            )

        res = timed("RP", rp)
        if res.solution.objective >= state.lb:
            best, best_graph, state.lb = res.solution, res.graph, res.solution.objective
        state.mark("RP")
        if res.report.status == TIME_LIMIT:
            return finish(TIME_LIMIT, message="time limit reached during restricted solve")

        model = build_model(full)
        ip = timed("IP", lambda: iterative_pricing(full, model, backend, config, deadline=deadline))
        state.ub, state.duals, state.active = ip.ub, ip.duals, ip.active
        state.mark("IP")
        if _closed(state.lb, state.ub):
            return finish(OPTIMAL, message="optimal before building the final model")

        fixed = timed("FP", lambda: final_pricing(full, model, state.lb, state.ub, state.duals))
        final = fixed.graph if use_purge else _drop_only(full, fixed.removed)
        state.mark("FP")

        final_model = build_model(final)
        if warm_start and final.cuts:
            layout = from_solution(best, best_graph)
            final_model = final_model.with_warm_start(solution_values(embed(layout, final), final_model, final))
        lp = timed("LP", lambda: backend.solve_lp(final_model, remaining_config()))
        if lp.status == TIME_LIMIT:
            return finish(TIME_LIMIT, final, "time limit reached during final relaxation")
        if lp.status == OPTIMAL and lp.objective is not None:
            # any solution better than the incumbent survives in the reduced model
            state.ub = min(state.ub, max(float(state.lb), lp.objective))
        state.mark("LP")
        if _closed(state.lb, state.ub):
            return finish(OPTIMAL, final, "optimal after final relaxation")

        bb = timed("BB", lambda: backend.solve_milp(final_model, remaining_config()))
        if bb.status == ERROR:
            return finish(ERROR, final, bb.message)
        if bb.values:
            sol = extract_solution(final_model, bb.values, final)
            if sol.objective > state.lb:
                best, best_graph, state.lb = sol, final, sol.objective
        if bb.status in (OPTIMAL, INFEASIBLE):
            # infeasible: nothing in the reduced model reaches the incumbent
            state.ub = state.lb
            state.mark("BB")
            return finish(OPTIMAL, final)
        if bb.bound is not None:
            state.ub = min(state.ub, max(float(state.lb), bb.bound))
        state.mark("BB")
        return finish(TIME_LIMIT, final, bb.message)
    except PhaseTimeout as exc:
        return finish(TIME_LIMIT, message=str(exc))


def _drop_only(graph: CutGraph, removed: set[tuple[str, int]]) -> CutGraph:
    return purge(graph, removed, cascade=False)


def phase_csv(rows: list[tuple[str, PricingState]]) -> str:
    out = ["instance,phase,seconds"]
    for name, state in rows:
        for phase in PHASES:
            out.append(f"{name},{phase},{state.times.get(phase, 0.0):.6f}")
    return "\n".join(out) + "\n"
