"""Solver-agnostic MILP models built from a :class:`CutGraph`.

Column names are ``x_<o>_<q>_<plate>`` for cuts, ``e_<piece>_<plate>`` for
extractions and ``y_<plate>`` for sales of piece-sized plates (``y_<plate>_<piece>``
when several piece types share the plate's size). Rows are ``root``,
``plate_<id>`` and ``dem_<piece>``; every row is a ``<=`` row.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

from g2kp.enumeration import ENHANCED, CutGraph
from g2kp.instance import Instance

INF = math.inf
INT_TOL = 1e-6


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    objective: int
    lower: float = 0
    upper: float = INF
    integer: bool = True
    ref: tuple[str, int] | None = None  # graph variable id


@dataclass(frozen=True)
class Row:
    name: str
    coefs: tuple[tuple[int, int], ...]  # (column index, coefficient)
    rhs: int
    sense: str = "<="


@dataclass(frozen=True)
class ModelIR:
    name: str
    columns: tuple[Column, ...]
    rows: tuple[Row, ...]
    sense: str = "max"
    warm_start: dict[str, float] | None = field(default=None, compare=False)

    def column_index(self) -> dict[str, int]:
        return {c.name: k for k, c in enumerate(self.columns)}

    def relaxed(self) -> ModelIR:
        cols = tuple(replace(c, integer=False) for c in self.columns)
        return replace(self, columns=cols, warm_start=None)

    def with_warm_start(self, values: dict[str, float] | None) -> ModelIR:
        return replace(self, warm_start=dict(values) if values else None)

    def subset(self, keep: set[int]) -> ModelIR:
        """Model over a subset of columns; every row is kept."""
        order = sorted(keep)
        remap = {old: new for new, old in enumerate(order)}
        cols = tuple(self.columns[k] for k in order)
        rows = tuple(
            replace(r, coefs=tuple((remap[k], a) for k, a in r.coefs if k in remap)) for r in self.rows
        )
        return replace(self, columns=cols, rows=rows, warm_start=None)

    def row_activity(self, values: dict[str, float]) -> list[float]:
        x = [values.get(c.name, 0.0) for c in self.columns]
        return [sum(a * x[k] for k, a in r.coefs) for r in self.rows]

    def objective_value(self, values: dict[str, float]) -> float:
        return sum(c.objective * values.get(c.name, 0.0) for c in self.columns)


def _check_graph(graph: CutGraph, instance: Instance) -> None:
    if graph.instance != instance:
        raise ModelError("graph was enumerated for a different instance")


def _cut_name(graph: CutGraph, k: int) -> str:
    c = graph.cuts[k]
    return f"x_{c.orientation}_{c.position}_{c.parent}"


def _build(graph: CutGraph, instance: Instance, terminals: list[tuple[str, int, int, int, Column]]) -> ModelIR:
    """Assemble columns/rows. ``terminals`` are (kind, idx, piece, plate, column)."""
    columns: list[Column] = []
    plate_terms: list[Counter] = [Counter() for _ in graph.plates]
    for k, cut in enumerate(graph.cuts):
        col = len(columns)
        columns.append(Column(_cut_name(graph, k), 0, ref=("x", k)))
        plate_terms[cut.parent][col] += 1
        for child in cut.children:
            plate_terms[child][col] -= 1
    demand_terms: dict[int, list[int]] = {}
    for kind, idx, piece, plate, column in terminals:
        col = len(columns)
        columns.append(column)
        plate_terms[plate][col] += 1
        demand_terms.setdefault(piece, []).append(col)

    rows = [Row("root", tuple(sorted((k, a) for k, a in plate_terms[0].items() if a)), 1)]
    for j in range(1, len(graph.plates)):
        terms = tuple(sorted((k, a) for k, a in plate_terms[j].items() if a))
        rows.append(Row(f"plate_{j}", terms, 0))
    for i in sorted(demand_terms):
        rows.append(Row(f"dem_{i}", tuple((k, 1) for k in sorted(demand_terms[i])), instance.pieces[i].demand))
    label = instance.name or "g2kp"
    return ModelIR(f"{label}_{graph.rules}", tuple(columns), tuple(rows))


def build_enhanced_model(graph: CutGraph, instance: Instance) -> ModelIR:
    """Cuts plus extraction variables; objective sums extracted piece profits."""
    _check_graph(graph, instance)
    if graph.rules != ENHANCED:
        raise ModelError(f"enhanced model needs an enhanced graph, got {graph.rules!r}")
    terminals = []
    for k, ext in enumerate(graph.extractions):
        p = instance.pieces[ext.piece]
        col = Column(f"e_{ext.piece}_{ext.plate}", p.profit, ref=("e", k))
        terminals.append(("e", k, ext.piece, ext.plate, col))
    return _build(graph, instance, terminals)


def _sale_names(graph: CutGraph) -> list[str]:
    per_plate = Counter(s.plate for s in graph.sales)
    return [
        f"y_{s.plate}" if per_plate[s.plate] == 1 else f"y_{s.plate}_{s.piece}"
        for s in graph.sales
    ]


def build_faithful_model(graph: CutGraph, instance: Instance) -> ModelIR:
    """Cuts plus sale variables ``0 <= y <= u`` on piece-sized plates."""
    _check_graph(graph, instance)
    if graph.rules == ENHANCED:
        raise ModelError("faithful model cannot be built from an enhanced graph")
    terminals = []
    for k, (sale, name) in enumerate(zip(graph.sales, _sale_names(graph))):
        p = instance.pieces[sale.piece]
        col = Column(name, p.profit, upper=p.demand, ref=("y", k))
        terminals.append(("y", k, sale.piece, sale.plate, col))
    return _build(graph, instance, terminals)


def build_model(graph: CutGraph, instance: Instance | None = None) -> ModelIR:
    instance = graph.instance if instance is None else instance
    if graph.rules == ENHANCED:
        return build_enhanced_model(graph, instance)
    return build_faithful_model(graph, instance)


# --------------------------------------------------------------------------
# export


def _fmt(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return repr(float(v))


def _lp_terms(terms: list[tuple[int, str]], per_line: int = 8) -> list[str]:
    if not terms:
        return []
    chunks = []
    for n, (coef, name) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1 else f"{_fmt(mag)} {name}"
        if n == 0:
            chunks.append(f"- {body}" if coef < 0 else body)
        else:
            chunks.append(f"{sign} {body}")
    return [" ".join(chunks[i : i + per_line]) for i in range(0, len(chunks), per_line)]


def export_lp(model: ModelIR) -> str:
    names = [c.name for c in model.columns]
    out = [f"\\ {model.name}", "Maximize" if model.sense == "max" else "Minimize"]
    obj = [(c.objective, c.name) for c in model.columns if c.objective]
    if not obj and names:
        obj = [(0, names[0])]
    lines = _lp_terms(obj)
    out.append(" obj: " + (lines[0] if lines else "0"))
    out += ["   " + ln for ln in lines[1:]]
    out.append("Subject To")
    for row in model.rows:
        terms = [(a, names[k]) for k, a in row.coefs]
        if not terms:
            if not names:
                continue
            terms = [(0, names[0])]
        lines = _lp_terms(terms)
        lines[-1] += f" {row.sense} {_fmt(row.rhs)}"
        out.append(f" {row.name}: {lines[0]}")
        out += ["   " + ln for ln in lines[1:]]
    bounded = [c for c in model.columns if c.upper != INF or c.lower != 0]
    if bounded:
        out.append("Bounds")
        for c in bounded:
            up = "+inf" if c.upper == INF else _fmt(c.upper)
            out.append(f" {_fmt(c.lower)} <= {c.name} <= {up}")
    ints = [c.name for c in model.columns if c.integer]
    if ints:
        out.append("General")
        out += [" " + " ".join(ints[i : i + 8]) for i in range(0, len(ints), 8)]
    out.append("End")
    return "\n".join(out) + "\n"


def export_mps(model: ModelIR) -> str:
    out = [f"NAME {model.name}"]
    out += ["OBJSENSE", "    MAX" if model.sense == "max" else "    MIN"]
    out.append("ROWS")
    out.append(" N  obj")
    sense_code = {"<=": "L", ">=": "G", "=": "E"}
    for row in model.rows:
        out.append(f" {sense_code[row.sense]}  {row.name}")
    by_col: list[list[tuple[str, int]]] = [[] for _ in model.columns]
    for row in model.rows:
        for k, a in row.coefs:
            by_col[k].append((row.name, a))
    out.append("COLUMNS")
    in_int = False
    for k, col in enumerate(model.columns):
        if col.integer != in_int:
            marker = "INTORG" if col.integer else "INTEND"
            out.append(f"    MARKER  'MARKER'  '{marker}'")
            in_int = col.integer
        entries = ([("obj", col.objective)] if col.objective else []) + by_col[k]
        if not entries:
            entries = [("obj", 0)]
        for rname, a in entries:
            out.append(f"    {col.name}  {rname}  {_fmt(a)}")
    if in_int:
        out.append("    MARKER  'MARKER'  'INTEND'")
    out.append("RHS")
    for row in model.rows:
        if row.rhs:
            out.append(f"    RHS  {row.name}  {_fmt(row.rhs)}")
    out.append("BOUNDS")
    for col in model.columns:
        if col.lower != 0:
            out.append(f" LO BND  {col.name}  {_fmt(col.lower)}")
        if col.upper != INF:
            out.append(f" UP BND  {col.name}  {_fmt(col.upper)}")
        elif col.integer:
            # some readers default integer columns to binary
            out.append(f" PL BND  {col.name}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_model(model: ModelIR, fmt: str = "lp") -> bytes:
    fmt = fmt.lower()
    if fmt == "lp":
        return export_lp(model).encode("ascii")
    if fmt == "mps":
        return export_mps(model).encode("ascii")
    raise ValueError(f"unknown export format {fmt!r}")


# --------------------------------------------------------------------------
# solutions


@dataclass
class Solution:
    """Integral variable values in graph terms.

    ``extractions`` and ``sales`` are keyed by ``(piece, plate)``; ``cuts``
    by cut index in the graph.
    """

    objective: int = 0
    cuts: dict[int, int] = field(default_factory=dict)
    extractions: dict[tuple[int, int], int] = field(default_factory=dict)
    sales: dict[tuple[int, int], int] = field(default_factory=dict)

    def pieces_sold(self) -> Counter:
        sold: Counter = Counter()
        for (i, _), n in self.extractions.items():
            sold[i] += n
        for (i, _), n in self.sales.items():
            sold[i] += n
        return sold


def solution_profit(solution: Solution, instance: Instance) -> int:
    return sum(instance.pieces[i].profit * n for i, n in solution.pieces_sold().items())


def read_solution_values(text: str | bytes) -> dict[str, float]:
    """Parse ``name value`` lines; ``#`` lines are comments."""
    if isinstance(text, bytes):
        text = text.decode()
    values = {}
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ModelError(f"line {no}: expected 'name value', got {line!r}")
        values[parts[0]] = float(parts[1])
    return values


def write_solution_values(values: dict[str, float]) -> str:
    return "".join(f"{name} {_fmt(v)}\n" for name, v in values.items())


def extract_solution(model: ModelIR, values: dict[str, float], graph: CutGraph) -> Solution:
    """Round values to integers and map columns back to graph variables."""
    sol = Solution()
    for col in model.columns:
        v = values.get(col.name, 0.0)
        n = round(v)
        if abs(v - n) > INT_TOL:
            raise ModelError(f"column {col.name} has non-integral value {v}")
        if n == 0:
            continue
        if n < 0:
            raise ModelError(f"column {col.name} is negative ({v})")
        kind, idx = col.ref
        if kind == "x":
            sol.cuts[idx] = n
        elif kind == "e":
            e = graph.extractions[idx]
            sol.extractions[(e.piece, e.plate)] = n
        else:
            s = graph.sales[idx]
            sol.sales[(s.piece, s.plate)] = n
    sol.objective = solution_profit(sol, graph.instance)
    return sol


def solution_values(solution: Solution, model: ModelIR, graph: CutGraph) -> dict[str, float]:
    """Inverse of :func:`extract_solution` (used for warm starts)."""
    ext_idx = {(e.piece, e.plate): k for k, e in enumerate(graph.extractions)}
    sale_idx = {(s.piece, s.plate): k for k, s in enumerate(graph.sales)}
    wanted: dict[tuple[str, int], int] = {}
    for k, n in solution.cuts.items():
        wanted[("x", k)] = n
    for key, n in solution.extractions.items():
        wanted[("e", ext_idx[key])] = n
    for key, n in solution.sales.items():
        wanted[("y", sale_idx[key])] = n
    return {c.name: float(wanted.get(c.ref, 0)) for c in model.columns}


@dataclass(frozen=True)
class Verdict:
    ok: bool
    message: str = "ok"
    row: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_solution(solution: Solution, graph: CutGraph, instance: Instance) -> Verdict:
    """Replay plate flows and demands straight from the graph."""
    n_plates = len(graph.plates)
    available = [0] * n_plates
    consumed = [0] * n_plates
    available[0] = 1
    for k, n in solution.cuts.items():
        if not 0 <= k < len(graph.cuts):
            return Verdict(False, f"unknown cut {k}")
        if n < 0:
            return Verdict(False, f"negative multiplicity on cut {k}")
        cut = graph.cuts[k]
        consumed[cut.parent] += n
        for child in cut.children:
            available[child] += n
    ext_keys = {(e.piece, e.plate) for e in graph.extractions}
    sale_keys = {(s.piece, s.plate) for s in graph.sales}
    for kind, table, keys in (("extraction", solution.extractions, ext_keys), ("sale", solution.sales, sale_keys)):
        for key, n in table.items():
            if key not in keys:
                return Verdict(False, f"unknown {kind} {key}")
            if n < 0:
                return Verdict(False, f"negative multiplicity on {kind} {key}")
            consumed[key[1]] += n
    for j in range(n_plates):
        if consumed[j] > available[j]:
            row = "root" if j == 0 else f"plate_{j}"
            return Verdict(False, f"plate {j} consumed {consumed[j]} times but only {available[j]} available", row)
    sold = solution.pieces_sold()
    for i, n in sorted(sold.items()):
        if n > instance.pieces[i].demand:
            return Verdict(False, f"piece {i} sold {n} times, demand is {instance.pieces[i].demand}", f"dem_{i}")
    profit = solution_profit(solution, instance)
    if profit != solution.objective:
        return Verdict(False, f"objective {solution.objective} but pieces are worth {profit}", "objective")
    return Verdict(True)
