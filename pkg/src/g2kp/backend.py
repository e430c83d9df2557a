"""LP/MILP backends over :class:`ModelIR`.

``HighsBackend`` runs HiGHS in-process through ``highspy``.
``CommandBackend`` exports the model to a file, runs a user supplied command
template and parses the solution file it leaves behind. Template
placeholders: ``{model}``, ``{solution}``, ``{timelimit}``, ``{threads}``,
``{seed}`` and optionally ``{start}`` (a ``name value`` warm start file).
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from g2kp.milp import INF, ModelIR, export_model, write_solution_values

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
TIME_LIMIT = "time_limit"
ERROR = "error"

LP_METHODS = ("automatic", "dual-simplex", "barrier")
SOLVER_CMD_ENV = "G2KP_SOLVER_CMD"
DEFAULT_TEMPLATE = (
    "{python} -m g2kp.highs_cli --model_file {model} --solution_file {solution} "
    "--time_limit {timelimit} --random_seed {seed} --threads {threads}"
)


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    time_limit: float = 10800.0
    threads: int = 1
    lp_method: str = "automatic"
    seed: int = 1
    mip_gap: float = 1e-6

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time limit must be positive")
        if self.lp_method not in LP_METHODS:
            raise ValueError(f"lp_method must be one of {LP_METHODS}")

    def with_time_limit(self, seconds: float) -> BackendConfig:
        from dataclasses import replace

        return replace(self, time_limit=max(seconds, 1e-3))


@dataclass
class SolveReport:
    status: str
    objective: float | None = None
    bound: float | None = None
    values: dict[str, float] = field(default_factory=dict)
    row_duals: dict[str, float] | None = None
    reduced_costs: dict[str, float] | None = None
    times: dict[str, float] = field(default_factory=dict)
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.objective is not None and bool(self.values or self.objective == 0)


class Backend:
    """One solve at a time per instance; use separate backends for parallel work."""

    name = "abstract"
    supports_duals = False

    def solve_lp(self, model: ModelIR, config: BackendConfig = BackendConfig()) -> SolveReport:
        raise NotImplementedError

    def solve_milp(self, model: ModelIR, config: BackendConfig = BackendConfig()) -> SolveReport:
        raise NotImplementedError


def _integral_objective(model: ModelIR) -> bool:
    return all(c.integer and float(c.objective).is_integer() for c in model.columns)


def _trivial_report(model: ModelIR, lp: bool) -> SolveReport:
    """Models without columns: feasible iff every right-hand side is >= 0."""
    if any(r.rhs < 0 for r in model.rows):
        return SolveReport(INFEASIBLE, message="empty model with negative right-hand side")
    duals = {r.name: 0.0 for r in model.rows} if lp else None
    return SolveReport(OPTIMAL, 0.0, 0.0, {}, duals, {} if lp else None)


class HighsBackend(Backend):
    name = "highs"
    supports_duals = True

    def _highs(self, model: ModelIR, config: BackendConfig, relax: bool):
        import highspy

        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("time_limit", float(config.time_limit))
        h.setOptionValue("threads", int(config.threads))
        h.setOptionValue("random_seed", int(config.seed))
        if config.lp_method == "dual-simplex":
            h.setOptionValue("solver", "simplex")
            h.setOptionValue("simplex_strategy", 1)
        elif config.lp_method == "barrier":
            h.setOptionValue("solver", "ipm")
        if not relax:
            h.setOptionValue("mip_rel_gap", float(config.mip_gap))
            if _integral_objective(model):
                # integer objective: a gap below one already proves optimality
                h.setOptionValue("mip_abs_gap", 1 - 1e-6)

        n, m = len(model.columns), len(model.rows)
        lp = highspy.HighsLp()
        lp.num_col_ = n
        lp.num_row_ = m
        lp.sense_ = highspy.ObjSense.kMaximize if model.sense == "max" else highspy.ObjSense.kMinimize
        lp.col_cost_ = np.array([c.objective for c in model.columns], dtype=float)
        lp.col_lower_ = np.array([c.lower for c in model.columns], dtype=float)
        lp.col_upper_ = np.array([c.upper if c.upper != INF else highspy.kHighsInf for c in model.columns], dtype=float)
        lo, up = [], []
        for r in model.rows:
            if r.sense == "<=":
                lo.append(-highspy.kHighsInf)
                up.append(r.rhs)
            elif r.sense == ">=":
                lo.append(r.rhs)
                up.append(highspy.kHighsInf)
            else:
                lo.append(r.rhs)
                up.append(r.rhs)
        lp.row_lower_ = np.array(lo, dtype=float)
        lp.row_upper_ = np.array(up, dtype=float)
        by_col: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for i, r in enumerate(model.rows):
            for k, a in r.coefs:
                by_col[k].append((i, a))
        start, index, value = [0], [], []
        for entries in by_col:
            for i, a in entries:
                index.append(i)
                value.append(a)
            start.append(len(index))
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = np.array(start, dtype=np.int32)
        lp.a_matrix_.index_ = np.array(index, dtype=np.int32)
        lp.a_matrix_.value_ = np.array(value, dtype=float)
        lp.col_names_ = [c.name for c in model.columns]
        lp.row_names_ = [r.name for r in model.rows]
        if not relax:
            lp.integrality_ = [
                highspy.HighsVarType.kInteger if c.integer else highspy.HighsVarType.kContinuous
                for c in model.columns
            ]
        status = h.passModel(lp)
        if status == highspy.HighsStatus.kError:
            raise BackendError("HiGHS rejected the model")
        return h

    def _run(self, model: ModelIR, config: BackendConfig, relax: bool) -> SolveReport:
        import highspy

        if not model.columns:
            return _trivial_report(model, relax)
        t0 = time.perf_counter()
        try:
            h = self._highs(model, config, relax)
            if not relax and model.warm_start:
                sol = highspy.HighsSolution()
                sol.col_value = [float(model.warm_start.get(c.name, 0.0)) for c in model.columns]
                sol.value_valid = True
                h.setSolution(sol)
            h.run()
        except BackendError as exc:
            return SolveReport(ERROR, message=str(exc))
        elapsed = time.perf_counter() - t0
        ms = h.getModelStatus()
        info = h.getInfo()
        MS = highspy.HighsModelStatus
        if ms == MS.kOptimal:
            status = OPTIMAL
        elif ms in (MS.kInfeasible,):
            status = INFEASIBLE
        elif ms == MS.kTimeLimit:
            status = TIME_LIMIT
        elif ms in (MS.kUnbounded, MS.kUnboundedOrInfeasible):
            status = ERROR
        elif ms == MS.kInterrupt or ms == MS.kSolutionLimit or ms == MS.kIterationLimit:
            status = TIME_LIMIT
        else:
            status = ERROR
        report = SolveReport(status, times={"solve": elapsed}, message=h.modelStatusToString(ms))
        sol = h.getSolution()
        names = [c.name for c in model.columns]
        if sol.value_valid and status != INFEASIBLE:
            report.values = dict(zip(names, map(float, sol.col_value)))
            report.objective = float(info.objective_function_value)
        if relax:
            if status == OPTIMAL:
                report.bound = report.objective
            if sol.dual_valid and status == OPTIMAL:
                report.row_duals = {r.name: float(v) for r, v in zip(model.rows, sol.row_dual)}
                report.reduced_costs = dict(zip(names, map(float, sol.col_dual)))
        else:
            bound = float(info.mip_dual_bound)
            if math.isfinite(bound):
                if _integral_objective(model):
                    bound = math.floor(bound + 1e-6)
                report.bound = bound
            if status == OPTIMAL and report.objective is not None:
                report.objective = float(round(report.objective)) if _integral_objective(model) else report.objective
                if report.bound is None or report.bound > report.objective + 1e-6:
                    report.bound = report.objective
            elif report.objective is not None and status == TIME_LIMIT:
                report.status = TIME_LIMIT
        return report

    def solve_lp(self, model: ModelIR, config: BackendConfig = BackendConfig()) -> SolveReport:
        return self._run(model, config, relax=True)

    def solve_milp(self, model: ModelIR, config: BackendConfig = BackendConfig()) -> SolveReport:
        return self._run(model, config, relax=False)


# --------------------------------------------------------------------------
# external process adapter


_HIGHS_STATUS = {
    "optimal": OPTIMAL,
    "infeasible": INFEASIBLE,
    "time limit reached": TIME_LIMIT,
    "time_limit": TIME_LIMIT,
    "feasible": FEASIBLE,
}


def parse_highs_solution(text: str) -> SolveReport:
    """Parse a HiGHS solution file (the default ``--solution_file`` style)."""
    lines = [ln.rstrip() for ln in text.splitlines()]
    status = ERROR
    report = SolveReport(ERROR)
    i = 0

    def section(start: int) -> tuple[dict[str, float], dict[str, float], float | None, int, bool]:
        valid = lines[start].strip().lower() == "feasible"
        k = start + 1
        obj = None
        if k < len(lines) and lines[k].startswith("Objective"):
            obj = float(lines[k].split()[1])
            k += 1
        cols: dict[str, float] = {}
        rows: dict[str, float] = {}
        target = None
        while k < len(lines) and lines[k].strip() and not lines[k].startswith("# Dual") and not lines[k].startswith("# Basis"):
            ln = lines[k]
            if ln.startswith("# Columns"):
                target = cols
            elif ln.startswith("# Rows"):
                target = rows
            elif target is not None:
                name, val = ln.rsplit(None, 1)
                target[name] = float(val)
            k += 1
        return cols, rows, obj, k, valid

    while i < len(lines):
        ln = lines[i]
        if ln == "Model status":
            word = lines[i + 1].strip().lower()
            status = _HIGHS_STATUS.get(word, ERROR)
            report.message = lines[i + 1].strip()
            i += 2
        elif ln == "# Primal solution values":
            cols, _, obj, i, valid = section(i + 1)
            if valid:
                report.values, report.objective = cols, obj
        elif ln == "# Dual solution values":
            cols, rows, _, i, valid = section(i + 1)
            if valid:
                report.reduced_costs, report.row_duals = cols, rows
        else:
            i += 1
    if status == ERROR and report.values:
        status = FEASIBLE
    report.status = status
    if status == OPTIMAL:
        report.bound = report.objective
    return report


def parse_plain_solution(text: str) -> SolveReport:
    """``name value`` lines with optional ``# status``/``# objective``/``# bound`` headers."""
    values: dict[str, float] = {}
    status, objective, bound = None, None, None
    for line in text.splitlines():
        parts = line.strip().lstrip("#").split()
        if not parts:
            continue
        if line.lstrip().startswith("#"):
            if len(parts) == 2 and parts[0] == "status":
                status = parts[1]
            elif len(parts) == 2 and parts[0] == "objective":
                objective = float(parts[1])
            elif len(parts) == 2 and parts[0] == "bound":
                bound = float(parts[1])
            continue
        name, val = parts
        values[name] = float(val)
    if status is None:
        status = FEASIBLE if values else ERROR
    return SolveReport(status, objective, bound, values)


class CommandBackend(Backend):
    """Run an external solver command per solve.

    ``solution_format`` is ``"highs"`` (HiGHS solution file, carries duals)
    or ``"plain"`` (``name value`` lines, no duals).
    """

    name = "command"

    def __init__(self, template: str | None = None, model_format: str = "lp", solution_format: str = "highs", workdir=None):
        if template is None:
            template = os.environ.get(SOLVER_CMD_ENV) or DEFAULT_TEMPLATE
        self.template = template
        self.model_format = model_format
        if solution_format not in ("highs", "plain"):
            raise ValueError("solution_format must be 'highs' or 'plain'")
        self.solution_format = solution_format
        self.workdir = workdir

    @property
    def supports_duals(self) -> bool:  # type: ignore[override]
        return self.solution_format == "highs"

    def _command(self, model_path: Path, sol_path: Path, start_path: Path | None, config: BackendConfig) -> list[str]:
        text = self.template.format(
            python=shlex.quote(sys.executable),
            model=shlex.quote(str(model_path)),
            solution=shlex.quote(str(sol_path)),
            timelimit=f"{config.time_limit:g}",
            threads=config.threads,
            seed=config.seed,
            start=shlex.quote(str(start_path)) if start_path else "",
        )
        return shlex.split(text)

    def _run(self, model: ModelIR, config: BackendConfig, relax: bool) -> SolveReport:
        target = model.relaxed() if relax else model
        t0 = time.perf_counter()
        with tempfile.TemporaryDirectory(dir=self.workdir) as tmp:
            tmp = Path(tmp)
            model_path = tmp / f"model.{self.model_format}"
            sol_path = tmp / "model.sol"
            model_path.write_bytes(export_model(target, self.model_format))
            start_path = None
            if not relax and model.warm_start and "{start}" in self.template:
                start_path = tmp / "start.txt"
                start_path.write_text(write_solution_values(model.warm_start))
            cmd = self._command(model_path, sol_path, start_path, config)
            try:
                proc = subprocess.run(cmd, capture_output=True, text=True, timeout=config.time_limit + 60)
            except FileNotFoundError as exc:
                return SolveReport(ERROR, message=f"cannot launch solver: {exc}")
            except subprocess.TimeoutExpired:
                return SolveReport(TIME_LIMIT, message="solver process exceeded the time limit")
            if proc.returncode != 0:
                return SolveReport(ERROR, message=f"solver exited with {proc.returncode}: {proc.stderr.strip()[-500:]}")
            if not sol_path.exists():
                return SolveReport(ERROR, message="solver did not write a solution file")
            text = sol_path.read_text()
        try:
            report = parse_highs_solution(text) if self.solution_format == "highs" else parse_plain_solution(text)
        except (ValueError, IndexError) as exc:
            return SolveReport(ERROR, message=f"cannot parse solution file: {exc}")
        if not relax:
            report.row_duals = report.reduced_costs = None
            if report.objective is not None and _integral_objective(model):
                report.objective = float(round(report.objective))
            if report.status == OPTIMAL and report.bound is None:
                report.bound = report.objective
        elif report.status == OPTIMAL and self.supports_duals and report.row_duals is None:
            report.message = "solver wrote no dual values"
        if report.objective is None and report.values:
            report.objective = model.objective_value(report.values)
        report.times["solve"] = time.perf_counter() - t0
        return report

    def solve_lp(self, model: ModelIR, config: BackendConfig = BackendConfig()) -> SolveReport:
        if not model.columns:
            return _trivial_report(model, True)
        return self._run(model, config, relax=True)

    def solve_milp(self, model: ModelIR, config: BackendConfig = BackendConfig()) -> SolveReport:
        if not model.columns:
            return _trivial_report(model, False)
        return self._run(model, config, relax=False)


def make_backend(name: str = "highs", **kwargs) -> Backend:
    if name == "highs":
        return HighsBackend()
    if name == "command":
        return CommandBackend(**kwargs)
    raise ValueError(f"unknown backend {name!r}")
