"""Reference optimum by exhaustive search, independent of the MILP code.

Every integer cut position is tried (not only normal ones), so agreement
with the formulations is meaningful evidence that discretization and
pruning lose nothing. Two searches are provided:

* ``optimal_value_bruteforce``: memoized over plate sizes, each size keeps
  the Pareto-maximal vectors of piece counts (capped at demand) that fit.
* ``exhaustive_value``: plain recursion over demand splits, no memo; only
  for tiny instances, used to cross-check the first one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from g2kp.instance import Instance
from g2kp.layout import Node, PieceNode, cap_demand, join


class OracleLimitError(ValueError):
    """The instance is too large for exhaustive search."""


@dataclass(frozen=True)
class OracleLimits:
    max_area: int = 1024
    max_demand: int = 12

    def check(self, instance: Instance) -> None:
        area = instance.L * instance.W
        if area > self.max_area:
            raise OracleLimitError(f"plate area {area} exceeds oracle limit {self.max_area}")
        if instance.total_demand > self.max_demand:
            raise OracleLimitError(
                f"total demand {instance.total_demand} exceeds oracle limit {self.max_demand}"
            )


@dataclass
class OracleResult:
    value: int
    layout: Node | None


def _maximal(vectors):
    """Pareto-maximal subset of a dict vec -> witness."""
    ordered = sorted(vectors, key=sum, reverse=True)
    kept: list[tuple[int, ...]] = []
    for v in ordered:
        if not any(all(k >= x for k, x in zip(kv, v)) for kv in kept):
            kept.append(v)
    return {v: vectors[v] for v in kept}


def optimal_value_bruteforce(instance: Instance, limits: OracleLimits | None = None) -> OracleResult:
    (limits or OracleLimits()).check(instance)
    pieces = instance.pieces
    n = len(pieces)
    cap = tuple(p.demand for p in pieces)
    zero = (0,) * n

    @lru_cache(maxsize=None)
    def frontier(l: int, w: int):
        fit = [i for i, p in enumerate(pieces) if p.fits(l, w)]
        if not fit:
            return {zero: None}
        found: dict[tuple[int, ...], tuple] = {zero: None}
        for i in fit:
            if pieces[i].length == l and pieces[i].width == w:
                vec = tuple(1 if k == i else 0 for k in range(n))
                found.setdefault(vec, ("piece", i))
        for o, d in (("v", l), ("h", w)):
            for q in range(1, d // 2 + 1):
                if o == "v":
                    a, b = frontier(q, w), frontier(l - q, w)
                else:
                    a, b = frontier(l, q), frontier(l, w - q)
                for va in a:
                    for vb in b:
                        vec = tuple(min(x + y, c) for x, y, c in zip(va, vb, cap))
                        if vec not in found:
                            found[vec] = ("cut", o, q, va, vb)
        return _maximal(found)

    def rebuild(l: int, w: int, vec) -> Node | None:
        how = frontier(l, w)[vec]
        if how is None:
            return None
        if how[0] == "piece":
            return PieceNode(how[1])
        _, o, q, va, vb = how
        if o == "v":
            return join(o, rebuild(q, w, va), rebuild(l - q, w, vb))
        return join(o, rebuild(l, q, va), rebuild(l, w - q, vb))

    top = frontier(instance.L, instance.W)
    best = max(top, key=lambda v: (sum(p.profit * k for p, k in zip(pieces, v)), v))
    value = sum(p.profit * k for p, k in zip(pieces, best))
    layout = cap_demand(rebuild(instance.L, instance.W, best), instance)
    return OracleResult(value, layout)


def exhaustive_value(instance: Instance, max_demand: int = 4, max_area: int = 64) -> int:
    """Unmemoized search over every cut and every split of remaining demand."""
    OracleLimits(max_area=max_area, max_demand=max_demand).check(instance)
    pieces = instance.pieces

    def best(l: int, w: int, demand: tuple[int, ...]) -> int:
        if not any(d > 0 and p.fits(l, w) for p, d in zip(pieces, demand)):
            return 0
        value = max(
            (p.profit for p, d in zip(pieces, demand) if d > 0 and p.length == l and p.width == w),
            default=0,
        )
        splits = list(itertools.product(*(range(d + 1) for d in demand)))
        for o, dim in (("v", l), ("h", w)):
            for q in range(1, dim // 2 + 1):
                for part in splits:
                    rest = tuple(d - x for d, x in zip(demand, part))
                    if o == "v":
                        v = best(q, w, part) + best(l - q, w, rest)
                    else:
                        v = best(l, q, part) + best(l, w - q, rest)
                    value = max(value, v)
        return value

    return best(instance.L, instance.W, tuple(p.demand for p in pieces))
