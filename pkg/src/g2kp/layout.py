"""Physical cutting patterns as compact build trees.

A layout is either a single piece or a guillotine cut joining two
sub-layouts. Its extent is the bounding box of the packed pieces: a vertical
cut puts its parts side by side along the length, a horizontal cut stacks
them along the width. Layouts translate solutions between cut graphs: a
solution of one graph is decomposed into a layout, which is then embedded
into another graph.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from g2kp.enumeration import WASTE, CutGraph
from g2kp.instance import Instance
from g2kp.milp import Solution, solution_profit


@dataclass(frozen=True)
class PieceNode:
    piece: int


@dataclass(frozen=True)
class CutNode:
    orientation: str
    first: "Node"
    second: "Node"


Node = Union[PieceNode, CutNode]


def join(orientation: str, first: Node | None, second: Node | None) -> Node | None:
    if first is None:
        return second
    if second is None:
        return first
    return CutNode(orientation, first, second)


def join_all(orientation: str, nodes: list[Node]) -> Node | None:
    out = None
    for node in reversed(nodes):
        out = join(orientation, node, out)
    return out


def extent(node: Node, instance: Instance) -> tuple[int, int]:
    return _extent(node, instance.pieces)


@lru_cache(maxsize=65536)
def _extent(node: Node, pieces) -> tuple[int, int]:
    if isinstance(node, PieceNode):
        p = pieces[node.piece]
        return p.length, p.width
    a = _extent(node.first, pieces)
    b = _extent(node.second, pieces)
    if node.orientation == "v":
        return a[0] + b[0], max(a[1], b[1])
    return max(a[0], b[0]), a[1] + b[1]


def piece_counts(node: Node | None) -> Counter:
    counts: Counter = Counter()
    stack = [node] if node is not None else []
    while stack:
        n = stack.pop()
        if isinstance(n, PieceNode):
            counts[n.piece] += 1
        else:
            stack += [n.first, n.second]
    return counts


def layout_profit(node: Node | None, instance: Instance) -> int:
    return sum(instance.pieces[i].profit * n for i, n in piece_counts(node).items())


def layout_is_feasible(node: Node | None, instance: Instance) -> bool:
    """Fits the original plate and respects every demand."""
    if node is None:
        return True
    l, w = extent(node, instance)
    if l > instance.L or w > instance.W:
        return False
    return all(n <= instance.pieces[i].demand for i, n in piece_counts(node).items())


def cap_demand(node: Node | None, instance: Instance) -> Node | None:
    """Drop surplus copies (depth-first order) so demands are respected."""
    left = [p.demand for p in instance.pieces]

    def walk(n: Node) -> Node | None:
        if isinstance(n, PieceNode):
            if left[n.piece] > 0:
                left[n.piece] -= 1
                return n
            return None
        return join(n.orientation, walk(n.first), walk(n.second))

    return walk(node) if node is not None else None


# --------------------------------------------------------------------------
# graph <-> layout


def from_solution(solution: Solution, graph: CutGraph) -> Node | None:
    """Decompose plate flows into the layout cut from the original plate."""
    consumers: list[list[tuple[str, int]]] = [[] for _ in graph.plates]
    for k in sorted(solution.cuts, reverse=True):
        consumers[graph.cuts[k].parent] += [("x", k)] * solution.cuts[k]
    for table in (solution.sales, solution.extractions):
        for (i, j) in sorted(table, reverse=True):
            consumers[j] += [("p", i)] * table[(i, j)]

    def expand(j: int) -> Node | None:
        if j == WASTE or not consumers[j]:
            return None
        kind, v = consumers[j].pop()
        if kind == "p":
            return PieceNode(v)
        cut = graph.cuts[v]
        return join(cut.orientation, expand(cut.first), expand(cut.second))

    return expand(0)


class _Embedder:
    def __init__(self, graph: CutGraph):
        self.graph = graph
        self.pieces = graph.instance.pieces
        self.ext = {(e.piece, e.plate) for e in graph.extractions}
        self.sale = {(s.piece, s.plate) for s in graph.sales}
        self.memo: dict[tuple[Node, int], Counter | None] = {}
        # trimming candidates: cuts of each plate ordered by smallest usable child
        self.trims = []
        for j in range(len(graph.plates)):
            options = []
            for k in graph.outgoing[j]:
                for child in graph.cuts[k].children:
                    options.append((graph.plates[child].area, k, child))
            options.sort()
            self.trims.append(options)

    def fits(self, ext: tuple[int, int], j: int) -> bool:
        p = self.graph.plates[j]
        return ext[0] <= p.length and ext[1] <= p.width

    def place(self, node: Node, j: int) -> Counter | None:
        key = (node, j)
        if key in self.memo:
            found = self.memo[key]
            return Counter(found) if found is not None else None
        self.memo[key] = None  # guards against revisiting while in progress
        result = self._place(node, j)
        self.memo[key] = result
        return Counter(result) if result is not None else None

    def _place(self, node: Node, j: int) -> Counter | None:
        ext = _extent(node, self.pieces)
        if not self.fits(ext, j):
            return None
        if isinstance(node, PieceNode):
            key = (node.piece, j)
            if key in self.ext:
                return Counter({("e", key): 1})
            if key in self.sale:
                return Counter({("y", key): 1})
        else:
            a, b = node.first, node.second
            ea, eb = _extent(a, self.pieces), _extent(b, self.pieces)
            for k in self.graph.outgoing[j]:
                cut = self.graph.cuts[k]
                if cut.orientation != node.orientation or WASTE in (cut.first, cut.second):
                    continue
                for x, ex, y, ey in ((a, ea, b, eb), (b, eb, a, ea)):
                    if self.fits(ex, cut.first) and self.fits(ey, cut.second):
                        rx = self.place(x, cut.first)
                        if rx is None:
                            continue
                        ry = self.place(y, cut.second)
                        if ry is None:
                            continue
                        rx.update(ry)
                        rx[("x", k)] += 1
                        return rx
        for _, k, child in self.trims[j]:
            if self.fits(ext, child):
                r = self.place(node, child)
                if r is not None:
                    r[("x", k)] += 1
                    return r
        return None

    def place_partial(self, node: Node, j: int) -> Counter:
        r = self.place(node, j)
        if r is not None:
            return r
        if isinstance(node, PieceNode):
            return Counter()
        options = [self.place_partial(node.first, j), self.place_partial(node.second, j)]
        return max(options, key=self._value)

    def _value(self, uses: Counter) -> int:
        total = 0
        for (kind, key), n in uses.items():
            if kind in ("e", "y"):
                total += self.pieces[key[0]].profit * n
        return total


def embed(node: Node | None, graph: CutGraph) -> Solution:
    """Express a layout with the variables of ``graph`` (best effort).

    When some part of the layout has no counterpart in the graph it is
    dropped, so the result is always feasible but may be worth less than
    the layout.
    """
    sol = Solution()
    if node is None:
        return sol
    emb = _Embedder(graph)
    uses = emb.place_partial(node, 0)
    for (kind, key), n in sorted(uses.items(), key=repr):
        if kind == "x":
            sol.cuts[key] = n
        elif kind == "e":
            sol.extractions[key] = n
        else:
            sol.sales[key] = n
    sol.objective = solution_profit(sol, graph.instance)
    return sol
