"""G2KP instances: parsing, rendering, validation and random generation.

Canonical text format (whitespace separated integers, ``#`` comments)::

    L W
    n
    l w p u      # one line per piece, n lines
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field


class InstanceError(ValueError):
    """Raised for malformed or invalid instances."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Piece:
    length: int
    width: int
    profit: int
    demand: int

    def fits(self, length: int, width: int) -> bool:
        return self.length <= length and self.width <= width

    @property
    def area(self) -> int:
        return self.length * self.width


@dataclass(frozen=True)
class Instance:
    L: int
    W: int
    pieces: tuple[Piece, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def total_demand(self) -> int:
        return sum(p.demand for p in self.pieces)


def validate_instance(instance: Instance) -> Instance:
    """Check the instance invariants and return it unchanged."""
    for label, value in (("L", instance.L), ("W", instance.W)):
        if not isinstance(value, int) or value < 1:
            raise InstanceError(f"plate dimension {label} must be a positive integer, got {value!r}")
    if not instance.pieces:
        raise InstanceError("instance needs at least one piece")
    for idx, piece in enumerate(instance.pieces):
        for fname in ("length", "width", "profit", "demand"):
            value = getattr(piece, fname)
            if not isinstance(value, int) or value < 1:
                raise InstanceError(f"piece {idx}: {fname} must be a positive integer, got {value!r}")
        if piece.length > instance.L:
            raise InstanceError(f"piece {idx}: length {piece.length} exceeds plate length {instance.L}")
        if piece.width > instance.W:
            raise InstanceError(f"piece {idx}: width {piece.width} exceeds plate width {instance.W}")
    return instance


def _int_fields(tokens: list[str], count: int, lineno: int, what: str) -> list[int]:
    if len(tokens) != count:
        raise InstanceError(f"expected {count} integers for {what}, got {len(tokens)}", lineno)
    values = []
    for tok in tokens:
        try:
            value = int(tok)
        except ValueError:
            raise InstanceError(f"not an integer: {tok!r}", lineno) from None
        if value < 1:
            raise InstanceError(f"{what} values must be positive, got {value}", lineno)
        values.append(value)
    return values


def parse_instance(text: str | bytes, name: str = "") -> Instance:
    """Parse the canonical instance format. Errors name the offending line."""
    if isinstance(text, bytes):
        text = text.decode("ascii")
    lines = [
        (no, raw.split())
        for no, raw in enumerate(text.splitlines(), start=1)
        if raw.strip() and not raw.lstrip().startswith("#")
    ]
    if not lines:
        raise InstanceError("empty instance")
    no, tokens = lines[0]
    L, W = _int_fields(tokens, 2, no, "plate")
    if len(lines) < 2:
        raise InstanceError("missing piece count", no + 1)
    no, tokens = lines[1]
    (n,) = _int_fields(tokens, 1, no, "piece count")
    if len(lines) - 2 != n:
        last = lines[-1][0]
        raise InstanceError(f"declared {n} pieces but found {len(lines) - 2}", last)
    pieces = []
    for no, tokens in lines[2:]:
        l, w, p, u = _int_fields(tokens, 4, no, "piece")
        if l > L:
            raise InstanceError(f"piece length {l} exceeds plate length {L}", no)
        if w > W:
            raise InstanceError(f"piece width {w} exceeds plate width {W}", no)
        pieces.append(Piece(l, w, p, u))
    return Instance(L, W, tuple(pieces), name=name)


def render_instance(instance: Instance) -> str:
    out = [f"{instance.L} {instance.W}", str(len(instance.pieces))]
    out += [f"{p.length} {p.width} {p.profit} {p.demand}" for p in instance.pieces]
    return "\n".join(out) + "\n"


def read_instance(path) -> Instance:
    from pathlib import Path

    path = Path(path)
    return parse_instance(path.read_bytes(), name=path.stem)


@dataclass(frozen=True)
class Bounds:
    """Inclusive ranges for :func:`generate_random_instance`.

    A ``None`` upper bound on a piece dimension means "up to the plate
    dimension". ``unweighted`` sets every profit to the piece area.
    """

    plate_length: tuple[int, int] = (5, 16)
    plate_width: tuple[int, int] = (5, 16)
    n_pieces: tuple[int, int] = (2, 5)
    piece_length: tuple[int, int | None] = (1, None)
    piece_width: tuple[int, int | None] = (1, None)
    profit: tuple[int, int] = (1, 100)
    demand: tuple[int, int] = (1, 3)
    unweighted: bool = False


def _check_range(name: str, lo: int, hi: int) -> None:
    if lo < 1 or hi < lo:
        raise InstanceError(f"bad range for {name}: [{lo}, {hi}]")


def generate_random_instance(seed: int, bounds: Bounds = Bounds()) -> Instance:
    """Draw a valid instance; a pure function of ``(seed, bounds)``."""
    rng = random.Random(seed)
    for name in ("plate_length", "plate_width", "n_pieces", "profit", "demand"):
        _check_range(name, *getattr(bounds, name))
    L = rng.randint(*bounds.plate_length)
    W = rng.randint(*bounds.plate_width)
    l_lo, l_hi = bounds.piece_length
    w_lo, w_hi = bounds.piece_width
    l_hi = L if l_hi is None else min(l_hi, L)
    w_hi = W if w_hi is None else min(w_hi, W)
    if l_lo > l_hi or w_lo > w_hi or l_lo < 1 or w_lo < 1:
        raise InstanceError(f"no piece fits a {L}x{W} plate within the given dimension bounds")
    n = rng.randint(*bounds.n_pieces)
    pieces = []
    for _ in range(n):
        l = rng.randint(l_lo, l_hi)
        w = rng.randint(w_lo, w_hi)
        p = l * w if bounds.unweighted else rng.randint(*bounds.profit)
        u = rng.randint(*bounds.demand)
        pieces.append(Piece(l, w, p, u))
    return validate_instance(Instance(L, W, tuple(pieces), name=f"rand{seed}"))
