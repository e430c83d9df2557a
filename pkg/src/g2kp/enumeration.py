"""Plate, cut and extraction enumeration.

The result is a :class:`CutGraph`: a directed hypergraph whose nodes are
distinctly-sized plates and whose edges are cuts (plate -> children) plus the
terminal variables that sell pieces (extractions for the enhanced model,
sales of piece-sized plates for the faithful one).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from g2kp.discretization import H, ORIENTATIONS, V, PositionTables
from g2kp.instance import Instance

FAITHFUL = "faithful"
ENHANCED = "enhanced"
RESTRICTED = "restricted"
RULES = (FAITHFUL, ENHANCED, RESTRICTED)

WASTE = -1

# Plate provenance bits, merged by union when two cuts yield the same size.
FROM_VERTICAL = 1
FROM_HORIZONTAL = 2
PIECE_SIZED = 4

STATS_COLUMNS = ("rules", "normalize", "cut_position", "redundant_cut", "n_plates", "n_cuts", "n_extractions")


@dataclass(frozen=True)
class Plate:
    id: int
    length: int
    width: int
    flags: int = 0

    @property
    def dims(self) -> tuple[int, int]:
        return self.length, self.width

    @property
    def area(self) -> int:
        return self.length * self.width


@dataclass(frozen=True)
class Cut:
    parent: int
    orientation: str
    position: int
    first: int
    second: int

    @property
    def children(self) -> tuple[int, ...]:
        return tuple(c for c in (self.first, self.second) if c != WASTE)


@dataclass(frozen=True)
class Extraction:
    piece: int
    plate: int


@dataclass(frozen=True)
class Sale:
    """A piece-sized plate sold as that piece (faithful ``y`` variable)."""

    piece: int
    plate: int


@dataclass(frozen=True)
class GraphStats:
    n_plates: int
    n_cuts: int
    n_extractions: int
    n_sales: int

    @property
    def n_vars(self) -> int:
        return self.n_cuts + self.n_extractions + self.n_sales


@dataclass(frozen=True)
class CutGraph:
    instance: Instance
    rules: str
    plates: tuple[Plate, ...]
    cuts: tuple[Cut, ...]
    extractions: tuple[Extraction, ...] = ()
    sales: tuple[Sale, ...] = ()
    normalize: bool = False
    cut_position: bool = False
    redundant_cut: bool = False

    @cached_property
    def outgoing(self) -> tuple[tuple[int, ...], ...]:
        """Cut indices leaving each plate."""
        out: list[list[int]] = [[] for _ in self.plates]
        for k, cut in enumerate(self.cuts):
            out[cut.parent].append(k)
        return tuple(map(tuple, out))

    @cached_property
    def incoming(self) -> tuple[tuple[int, ...], ...]:
        """Cut indices producing each plate (a cut appears twice if both children match)."""
        inc: list[list[int]] = [[] for _ in self.plates]
        for k, cut in enumerate(self.cuts):
            for child in cut.children:
                inc[child].append(k)
        return tuple(map(tuple, inc))

    @cached_property
    def extractions_at(self) -> tuple[tuple[int, ...], ...]:
        at: list[list[int]] = [[] for _ in self.plates]
        for k, ext in enumerate(self.extractions):
            at[ext.plate].append(k)
        return tuple(map(tuple, at))

    @cached_property
    def sales_at(self) -> tuple[tuple[int, ...], ...]:
        at: list[list[int]] = [[] for _ in self.plates]
        for k, sale in enumerate(self.sales):
            at[sale.plate].append(k)
        return tuple(map(tuple, at))

    @cached_property
    def plate_index(self) -> dict[tuple[int, int], int]:
        return {p.dims: p.id for p in self.plates}

    @property
    def stats(self) -> GraphStats:
        return GraphStats(len(self.plates), len(self.cuts), len(self.extractions), len(self.sales))

    def var_ids(self) -> list[tuple[str, int]]:
        return (
            [("x", k) for k in range(len(self.cuts))]
            + [("e", k) for k in range(len(self.extractions))]
            + [("y", k) for k in range(len(self.sales))]
        )

    def stats_row(self) -> dict:
        s = self.stats
        return {
            "rules": self.rules,
            "normalize": int(self.normalize),
            "cut_position": int(self.cut_position),
            "redundant_cut": int(self.redundant_cut),
            "n_plates": s.n_plates,
            "n_cuts": s.n_cuts,
            "n_extractions": s.n_extractions + s.n_sales,
        }


def _candidate_positions(rules: str, tables: PositionTables, instance: Instance, o: str, l: int, w: int) -> list[int]:
    d = l if o == V else w
    if rules == RESTRICTED:
        fit = [p for p in instance.pieces if p.fits(l, w)]
        pool = sorted({p.length if o == V else p.width for p in fit} - {d})
        pool = [q for q in pool if q < d]
    else:
        pool = tables.plate_positions(o, l, w)
    members = set(pool)
    half = (d + 1) // 2
    out = []
    for q in pool:
        # perfect symmetry: the cut at d - q yields the same two children
        if 2 * q > d and (d - q) in members:
            continue
        if rules == ENHANCED and q > half:
            continue
        out.append(q)
    return out


def _extractable(pieces, l: int, w: int) -> list[int]:
    fit = [i for i, p in enumerate(pieces) if p.fits(l, w)]
    if not fit:
        return []
    min_l = min(pieces[i].length for i in fit)
    min_w = min(pieces[i].width for i in fit)
    return [i for i in fit if pieces[i].length + min_l > l and pieces[i].width + min_w > w]


def _trim_is_dominated(pieces, parent: tuple[int, int], child: tuple[int, int]) -> bool:
    fit = [i for i, p in enumerate(pieces) if p.fits(*child)]
    if _extractable(pieces, *child) != fit:
        return False  # the child can hold two pieces
    return set(fit) <= set(_extractable(pieces, *parent))


def enumerate_extractions(instance: Instance, plates: Iterable[Plate]) -> list[Extraction]:
    """Pairs (piece, plate) where the piece fits and no second piece fits alongside.

    The check is demand-agnostic: a second copy of the same piece counts.
    """
    plates = list(plates)
    pieces = instance.pieces
    found = []
    for plate in plates:
        found += [Extraction(i, plate.id) for i in _extractable(pieces, *plate.dims)]
    found.sort(key=lambda e: (e.piece, e.plate))
    return found


def _sales(instance: Instance, plates: list[Plate]) -> list[Sale]:
    by_dims: dict[tuple[int, int], list[int]] = {}
    for i, p in enumerate(instance.pieces):
        by_dims.setdefault((p.length, p.width), []).append(i)
    return [Sale(i, plate.id) for plate in plates for i in by_dims.get(plate.dims, ())]


def enumerate_graph(
    instance: Instance,
    rules: str = ENHANCED,
    *,
    normalize: bool = False,
    cut_position: bool = False,
    redundant_cut: bool = False,
    drop_dominated_trims: bool = True,
) -> CutGraph:
    """Breadth-first closure of plates and cuts from the original plate.

    Plates are expanded in id order, orientation ``v`` before ``h`` and
    positions ascending, so ids and cut order are deterministic.

    With enhanced rules and ``drop_dominated_trims``, a cut whose second
    child is waste is skipped when its first child can hold at most one
    piece and every such piece can be extracted from the parent directly:
    any use of the cut is replaced by that extraction.
    """
    if rules not in RULES:
        raise ValueError(f"unknown rule set {rules!r}")
    if redundant_cut and rules == ENHANCED:
        raise ValueError("redundant-cut reduction cannot be combined with enhanced rules")
    tables = PositionTables(instance)
    pieces = instance.pieces

    def resolve(l: int, w: int) -> tuple[int, int] | None:
        if normalize:
            return tables.normalize_plate(l, w)
        return (l, w) if any(p.fits(l, w) for p in pieces) else None

    dims: list[tuple[int, int]] = [(instance.L, instance.W)]
    flags = [0]
    index = {dims[0]: 0}
    cuts: list[Cut] = []
    j = 0
    while j < len(dims):
        l, w = dims[j]
        if any(p.fits(l, w) for p in pieces):
            # after normalization distinct positions may yield the same children
            seen: set[tuple[int, int]] = set()
            for o in ORIENTATIONS:
                for q in _candidate_positions(rules, tables, instance, o, l, w):
                    if o == V:
                        raw = ((q, w), (l - q, w))
                    else:
                        raw = ((l, q), (l, w - q))
                    resolved = [resolve(*child) for child in raw]
                    if resolved == [None, None]:
                        continue
                    if (
                        drop_dominated_trims
                        and rules == ENHANCED
                        and resolved[1] is None
                        and _trim_is_dominated(pieces, (l, w), resolved[0])
                    ):
                        continue
                    ids = []
                    for r in resolved:
                        if r is None:
                            ids.append(WASTE)
                            continue
                        k = index.get(r)
                        if k is None:
                            k = index[r] = len(dims)
                            dims.append(r)
                            flags.append(0)
                        flags[k] |= FROM_VERTICAL if o == V else FROM_HORIZONTAL
                        ids.append(k)
                    key = tuple(sorted(ids))
                    if key in seen:
                        continue
                    seen.add(key)
                    cuts.append(Cut(j, o, q, ids[0], ids[1]))
        j += 1

    piece_dims = {(p.length, p.width) for p in pieces}
    plates = [
        Plate(k, l, w, f | (PIECE_SIZED if (l, w) in piece_dims else 0))
        for k, ((l, w), f) in enumerate(zip(dims, flags))
    ]
    if rules == ENHANCED:
        extractions, sales = enumerate_extractions(instance, plates), []
    else:
        extractions, sales = [], _sales(instance, plates)
    graph = CutGraph(
        instance,
        rules,
        tuple(plates),
        tuple(cuts),
        tuple(extractions),
        tuple(sales),
        normalize=normalize,
    )
    if cut_position:
        graph = apply_cut_position(graph)
    if redundant_cut:
        graph = apply_redundant_cut(graph)
    return graph


def _replace(graph: CutGraph, **changes) -> CutGraph:
    fields = dict(
        instance=graph.instance,
        rules=graph.rules,
        plates=graph.plates,
        cuts=graph.cuts,
        extractions=graph.extractions,
        sales=graph.sales,
        normalize=graph.normalize,
        cut_position=graph.cut_position,
        redundant_cut=graph.redundant_cut,
    )
    fields.update(changes)
    return CutGraph(**fields)


def apply_cut_position(graph: CutGraph) -> CutGraph:
    """Cut-Position reduction hook.

    Any replacement must return a subset of the cuts with the same MILP
    optimum. The shipped pass keeps every cut and only records the flag.
    """
    return _replace(graph, cut_position=True)


def apply_redundant_cut(graph: CutGraph) -> CutGraph:
    """Redundant-Cut reduction hook (faithful and restricted graphs only).

    Same contract as :func:`apply_cut_position`; the shipped pass is the
    identity.
    """
    if graph.rules == ENHANCED:
        raise ValueError("redundant-cut reduction is not applicable to enhanced graphs")
    return _replace(graph, redundant_cut=True)


def purge(graph: CutGraph, removed_vars: Iterable[tuple[str, int]] = (), *, cascade: bool = True) -> CutGraph:
    """Drop ``removed_vars`` and, with ``cascade``, everything that becomes useless.

    A plate survives when it is plate 0, or it is produced by a kept cut
    with a surviving parent and has at least one kept variable of its own.
    Children that do not survive are turned into ``WASTE``. Plates are
    renumbered densely, preserving order.
    """
    removed = set(removed_vars)
    cuts = {k: c for k, c in enumerate(graph.cuts) if ("x", k) not in removed}
    exts = {k: e for k, e in enumerate(graph.extractions) if ("e", k) not in removed}
    sales = {k: s for k, s in enumerate(graph.sales) if ("y", k) not in removed}
    alive = set(range(len(graph.plates)))

    while cascade:
        owners = {c.parent for c in cuts.values()} | {e.plate for e in exts.values()} | {s.plate for s in sales.values()}
        by_parent: dict[int, list[Cut]] = {}
        for c in cuts.values():
            by_parent.setdefault(c.parent, []).append(c)
        reach = {0}
        stack = [0]
        while stack:
            j = stack.pop()
            for c in by_parent.get(j, ()):
                for child in c.children:
                    if child in alive and child not in reach:
                        reach.add(child)
                        stack.append(child)
        new_alive = {j for j in reach if j == 0 or j in owners}
        new_cuts = {
            k: c
            for k, c in cuts.items()
            if c.parent in new_alive and any(ch in new_alive for ch in c.children)
        }
        new_exts = {k: e for k, e in exts.items() if e.plate in new_alive}
        new_sales = {k: s for k, s in sales.items() if s.plate in new_alive}
        if new_alive == alive and len(new_cuts) == len(cuts) and len(new_exts) == len(exts) and len(new_sales) == len(sales):
            break
        alive, cuts, exts, sales = new_alive, new_cuts, new_exts, new_sales

    order = sorted(alive)
    remap = {old: new for new, old in enumerate(order)}

    def child(c: int) -> int:
        return remap.get(c, WASTE) if c != WASTE else WASTE

    plates = tuple(Plate(remap[p.id], p.length, p.width, p.flags) for p in graph.plates if p.id in remap)
    new_cuts = tuple(
        Cut(remap[c.parent], c.orientation, c.position, child(c.first), child(c.second))
        for _, c in sorted(cuts.items())
        if c.parent in remap
    )
    new_exts = tuple(Extraction(e.piece, remap[e.plate]) for _, e in sorted(exts.items()) if e.plate in remap)
    new_sales = tuple(Sale(s.piece, remap[s.plate]) for _, s in sorted(sales.items()) if s.plate in remap)
    return _replace(graph, plates=plates, cuts=new_cuts, extractions=new_exts, sales=new_sales)


def reachable_plates(graph: CutGraph) -> set[int]:
    reach = {0}
    stack = [0]
    while stack:
        j = stack.pop()
        for k in graph.outgoing[j]:
            for c in graph.cuts[k].children:
                if c not in reach:
                    reach.add(c)
                    stack.append(c)
    return reach


def stats_csv(graphs: Iterable[CutGraph]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=STATS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for g in graphs:
        writer.writerow(g.stats_row())
    return buf.getvalue()


__all__ = [
    "CutGraph",
    "Cut",
    "Extraction",
    "ENHANCED",
    "FAITHFUL",
    "GraphStats",
    "H",
    "Plate",
    "RESTRICTED",
    "RULES",
    "Sale",
    "V",
    "WASTE",
    "apply_cut_position",
    "apply_redundant_cut",
    "enumerate_extractions",
    "enumerate_graph",
    "purge",
    "reachable_plates",
    "stats_csv",
]
