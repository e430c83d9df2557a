"""Normal cut positions and plate-size normalization.

A normal position of orientation ``v`` is a demand-bounded sum of piece
lengths (``h``: widths) strictly between 0 and the plate dimension. Only
pieces whose perpendicular dimension fits the plate take part, so one table
per perpendicular "class" serves every plate of that class.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from g2kp.instance import Instance

V = "v"
H = "h"
ORIENTATIONS = (V, H)


@dataclass(frozen=True)
class FitSet:
    length: int
    width: int
    pieces: frozenset[int]

    def __contains__(self, idx: int) -> bool:
        return idx in self.pieces

    def __len__(self) -> int:
        return len(self.pieces)


@dataclass(frozen=True)
class NormalPositions:
    orientation: str
    class_bound: int
    dim_limit: int
    positions: tuple[int, ...]

    def __contains__(self, q: int) -> bool:
        i = bisect.bisect_left(self.positions, q)
        return i < len(self.positions) and self.positions[i] == q

    def __iter__(self):
        return iter(self.positions)

    def __len__(self) -> int:
        return len(self.positions)

    def below(self, d: int) -> tuple[int, ...]:
        """Positions strictly below ``d``."""
        return self.positions[: bisect.bisect_left(self.positions, d)]


def fitting_pieces(instance: Instance, length: int, width: int) -> FitSet:
    idx = frozenset(i for i, p in enumerate(instance.pieces) if p.fits(length, width))
    return FitSet(length, width, idx)


def subset_sums(sizes, counts, limit: int) -> int:
    """Bitset (as int) of every bounded sum ``sum n_i*s_i`` below ``limit``.

    Bounded knapsack by binary splitting of each multiplicity.
    """
    mask = (1 << limit) - 1
    reach = 1
    for size, count in zip(sizes, counts):
        count = min(count, (limit - 1) // size) if size < limit else 0
        chunk = 1
        while count > 0:
            take = min(chunk, count)
            reach |= (reach << (take * size)) & mask
            count -= take
            chunk <<= 1
    return reach


def _bits(reach: int):
    q = 0
    while reach:
        if reach & 1:
            yield q
        reach >>= 1
        q += 1


def normal_positions(instance: Instance, orientation: str, class_bound: int, dim_limit: int) -> NormalPositions:
    """Normal cut positions in ``(0, dim_limit)``.

    For ``v`` the pieces with ``width <= class_bound`` take part and their
    lengths are summed; ``h`` swaps the roles.
    """
    if orientation == V:
        parts = [(p.length, p.demand) for p in instance.pieces if p.width <= class_bound]
    elif orientation == H:
        parts = [(p.width, p.demand) for p in instance.pieces if p.length <= class_bound]
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    reach = subset_sums([s for s, _ in parts], [c for _, c in parts], dim_limit)
    positions = tuple(q for q in _bits(reach) if 0 < q < dim_limit)
    return NormalPositions(orientation, class_bound, dim_limit, positions)


def normalize_dim(positions: NormalPositions, d: int) -> int:
    """Largest normal position not exceeding ``d``, or 0 when none exists."""
    i = bisect.bisect_right(positions.positions, d)
    return positions.positions[i - 1] if i else 0


class PositionTables:
    """Memoized per-class position tables for one instance.

    Tables run up to and including the original plate dimension, so a plate
    whose length is ``L`` itself still normalizes to ``L`` when ``L`` is a
    reachable sum. Build in a single thread, then share read-only.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self._tables: dict[tuple[str, int], NormalPositions] = {}
        # Only the set of participating pieces matters, so key by that too.
        self._by_members: dict[tuple[str, tuple[int, ...]], NormalPositions] = {}

    def table(self, orientation: str, class_bound: int) -> NormalPositions:
        key = (orientation, class_bound)
        found = self._tables.get(key)
        if found is not None:
            return found
        inst = self.instance
        if orientation == V:
            members = tuple(i for i, p in enumerate(inst.pieces) if p.width <= class_bound)
            limit = inst.L + 1
        else:
            members = tuple(i for i, p in enumerate(inst.pieces) if p.length <= class_bound)
            limit = inst.W + 1
        shared = self._by_members.get((orientation, members))
        if shared is None:
            table = normal_positions(inst, orientation, class_bound, limit)
            self._by_members[(orientation, members)] = table
        else:
            table = NormalPositions(orientation, class_bound, limit, shared.positions)
        self._tables[key] = table
        return table

    def vertical(self, width: int) -> NormalPositions:
        return self.table(V, width)

    def horizontal(self, length: int) -> NormalPositions:
        return self.table(H, length)

    def plate_positions(self, orientation: str, length: int, width: int) -> tuple[int, ...]:
        """Normal positions of one plate, excluding both extremities."""
        if orientation == V:
            return self.vertical(width).below(length)
        return self.horizontal(length).below(width)

    def normalize_plate(self, length: int, width: int) -> tuple[int, int] | None:
        """Normalize both dimensions to a fixpoint; ``None`` if nothing fits."""
        while True:
            nl = normalize_dim(self.vertical(width), length)
            if nl == 0:
                return None
            nw = normalize_dim(self.horizontal(nl), width)
            if nw == 0:
                return None
            if (nl, nw) == (length, width):
                return length, width
            length, width = nl, nw
