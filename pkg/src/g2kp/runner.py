"""One configured solve of one instance, plus the stats row describing it."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from g2kp.backend import (
    ERROR,
    INFEASIBLE,
    OPTIMAL,
    Backend,
    BackendConfig,
    HighsBackend,
)
from g2kp.enumeration import ENHANCED, FAITHFUL, CutGraph, enumerate_graph, purge
from g2kp.instance import Instance
from g2kp.layout import embed
from g2kp.milp import (
    ModelIR,
    Solution,
    Verdict,
    build_model,
    extract_solution,
    solution_values,
)
from g2kp.milp import verify_solution as _verify
from g2kp.pricing import PHASES, greedy_layout, run_priced_pipeline

FORMULATIONS = (FAITHFUL, ENHANCED)

STATS_FIELDS = (
    "instance",
    "formulation",
    "normalize",
    "cut_position",
    "redundant_cut",
    "warm",
    "pricing",
    "purge",
    "n_vars",
    "n_plates",
    "lb",
    "ub",
    "status",
    "t_total",
) + tuple(f"t_{p}" for p in PHASES)


class ConfigError(ValueError):
    """Inconsistent run flags (reported as a usage error)."""


@dataclass(frozen=True)
class RunConfig:
    formulation: str = ENHANCED
    normalize: bool = False
    cut_position: bool = False
    redundant_cut: bool = False
    warm_start: bool = False
    pricing: bool = False
    purge: bool = False
    verify: bool = True
    backend: BackendConfig = field(default_factory=BackendConfig)

    def check(self, backend: Backend | None = None) -> None:
        if self.formulation not in FORMULATIONS:
            raise ConfigError(f"formulation must be one of {FORMULATIONS}")
        if self.redundant_cut and self.formulation == ENHANCED:
            raise ConfigError("--redundant-cut is only valid with the faithful formulation")
        if self.pricing and backend is not None and not backend.supports_duals:
            raise ConfigError(f"--pricing needs a backend that reports duals ({backend.name} does not)")

    @property
    def label(self) -> str:
        parts = ["priced" if self.pricing else "plain", self.formulation]
        for flag, tag in (
            (self.normalize, "N"),
            (self.cut_position, "CP"),
            (self.redundant_cut, "RC"),
            (self.warm_start, "W"),
            (self.purge, "P"),
        ):
            if flag:
                parts.append(tag)
        return "+".join(parts)


@dataclass
class RunResult:
    instance: str
    config: RunConfig
    status: str
    lb: int | None
    ub: float | None
    solution: Solution | None
    graph: CutGraph | None  # graph the solution refers to
    model: ModelIR | None  # model matching ``graph``
    n_vars: int
    n_plates: int
    times: dict[str, float]
    verdict: Verdict | None = None
    message: str = ""

    def stats_row(self) -> dict:
        c = self.config
        row = {
            "instance": self.instance,
            "formulation": c.formulation,
            "normalize": int(c.normalize),
            "cut_position": int(c.cut_position),
            "redundant_cut": int(c.redundant_cut),
            "warm": int(c.warm_start),
            "pricing": int(c.pricing),
            "purge": int(c.purge),
            "n_vars": self.n_vars,
            "n_plates": self.n_plates,
            "lb": "" if self.lb is None else self.lb,
            "ub": _fmt_bound(self.ub),
            "status": self.status,
            "t_total": f"{self.times.get('total', 0.0):.3f}",
        }
        for p in PHASES:
            row[f"t_{p}"] = f"{self.times.get(p, 0.0):.3f}"
        return row


def _fmt_bound(v: float | None) -> str:
    if v is None or not math.isfinite(v):
        return ""
    return str(int(v)) if float(v).is_integer() else f"{v:.6f}"


def build_graph(instance: Instance, config: RunConfig) -> CutGraph:
    return enumerate_graph(
        instance,
        config.formulation,
        normalize=config.normalize,
        cut_position=config.cut_position,
        redundant_cut=config.redundant_cut,
    )


def solve_instance(instance: Instance, config: RunConfig, backend: Backend | None = None) -> RunResult:
    backend = backend or HighsBackend()
    config.check(backend)
    name = instance.name or "instance"
    t0 = time.perf_counter()
    times = {p: 0.0 for p in PHASES}

    te = time.perf_counter()
    graph = build_graph(instance, config)
    if config.purge and not config.pricing:
        graph = purge(graph)
    times["E"] = time.perf_counter() - te
    n_vars, n_plates = graph.stats.n_vars, graph.stats.n_plates

    if config.pricing:
        res = run_priced_pipeline(
            instance,
            backend,
            config.backend,
            rules=config.formulation,
            normalize=config.normalize,
            warm_start=config.warm_start,
            use_purge=config.purge,
            graph=graph,
        )
        times.update({p: t for p, t in res.state.times.items() if p != "E"})
        times["total"] = time.perf_counter() - t0
        sol_graph = res.graph
        result = RunResult(
            name, config, res.status, res.lb, res.ub, res.solution, sol_graph, build_model(sol_graph),
            n_vars, n_plates, times, message=res.message,
        )
    else:
        model = build_model(graph)
        if config.warm_start:
            th = time.perf_counter()
            start = embed(greedy_layout(instance), graph)
            model = model.with_warm_start(solution_values(start, model, graph))
            times["H"] = time.perf_counter() - th
        tb = time.perf_counter()
        left = config.backend.time_limit - (tb - t0)
        report = backend.solve_milp(model, config.backend.with_time_limit(left))
        times["BB"] = time.perf_counter() - tb
        times["total"] = time.perf_counter() - t0
        solution = None
        lb = None
        if report.values and report.status not in (INFEASIBLE, ERROR):
            solution = extract_solution(model, report.values, graph)
            lb = solution.objective
        elif report.status == OPTIMAL:
            solution, lb = Solution(), 0
        ub = report.bound if report.bound is not None else None
        if report.status == OPTIMAL and lb is not None:
            ub = lb
        result = RunResult(
            name, config, report.status, lb, ub, solution, graph, model, n_vars, n_plates, times,
            message=report.message,
        )
    if config.verify and result.solution is not None:
        result.verdict = _verify(result.solution, result.graph, instance)
    return result


def stats_csv_header() -> str:
    return ",".join(STATS_FIELDS)


def stats_csv_line(row: dict) -> str:
    return ",".join(str(row.get(f, "")) for f in STATS_FIELDS)
