"""Multi-indices, half-open index boxes and finite truncation lattices."""

from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np


class MultiIndex(tuple):
    """An integer point of Z^n.

    Arithmetic is componentwise (``a + b`` adds entries, it does not
    concatenate).  Python's ``<``/``<=`` keep tuple (lexicographic) semantics so
    that sorting is deterministic; the componentwise partial order is exposed
    through :meth:`le` and :meth:`lt`.
    """

    __slots__ = ()

    def __new__(cls, entries: Iterable[int]) -> "MultiIndex":
        vals = []
        for e in entries:
            if isinstance(e, (bool, np.bool_)):
                raise TypeError("multi-index entries must be integers")
            iv = int(e)
            if iv != e:
                raise ValueError(f"non-integer multi-index entry {e!r}")
            vals.append(iv)
        if not vals:
            raise ValueError("multi-index needs at least one entry")
        return super().__new__(cls, vals)

    @classmethod
    def zeros(cls, n: int) -> "MultiIndex":
        return cls([0] * n)

    @classmethod
    def unit(cls, n: int, axis: int) -> "MultiIndex":
        """The index whose entry at ``axis`` is 1 and all others 0."""
        if not 0 <= axis < n:
            raise IndexError(f"axis {axis} out of range for n={n}")
        return cls([1 if j == axis else 0 for j in range(n)])

    @property
    def n(self) -> int:
        return len(self)

    def _check(self, other: Sequence[int]) -> None:
        if len(other) != len(self):
            raise ValueError(f"dimension mismatch: {len(self)} vs {len(other)}")

    def _zip(self, other, op) -> "MultiIndex":
        self._check(other)
        return MultiIndex(op(a, b) for a, b in zip(self, other))

    def __add__(self, other):
        return self._zip(other, operator.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._zip(other, operator.sub)

    def __rsub__(self, other):
        return MultiIndex(other)._zip(self, operator.sub)

    def __neg__(self):
        return MultiIndex(-a for a in self)

    def __mul__(self, scalar: int):
        return MultiIndex(a * scalar for a in self)

    __rmul__ = __mul__

    def le(self, other: Sequence[int]) -> bool:
        """Componentwise ``self <= other``."""
        self._check(other)
        return all(a <= b for a, b in zip(self, other))

    def lt(self, other: Sequence[int]) -> bool:
        """Componentwise strict ``self < other`` (every entry strictly smaller)."""
        self._check(other)
        return all(a < b for a, b in zip(self, other))

    def is_natural(self) -> bool:
        """True when every entry is >= 0."""
        return all(a >= 0 for a in self)

    def maximum(self, other: Sequence[int]) -> "MultiIndex":
        return self._zip(other, max)

    def minimum(self, other: Sequence[int]) -> "MultiIndex":
        return self._zip(other, min)

    def __repr__(self) -> str:
        return "MultiIndex(" + ", ".join(map(str, self)) + ")"


def as_index(value: Iterable[int] | int, n: int | None = None) -> MultiIndex:
    """Coerce a tuple/list (or a scalar, when ``n`` is given) to a MultiIndex."""
    if isinstance(value, MultiIndex):
        idx = value
    elif isinstance(value, (int, np.integer)):
        if n is None:
            n = 1
        idx = MultiIndex([value] * n)
    else:
        idx = MultiIndex(value)
    if n is not None and idx.n != n:
        raise ValueError(f"expected a {n}-index, got {tuple(idx)}")
    return idx


@dataclass(frozen=True)
class IndexBox:
    """The half-open box ``{k : lower_j <= k_j < upper_j}`` in Z^n.

    Empty boxes (some ``lower_j >= upper_j``) are allowed.
    """

    lower: MultiIndex
    upper: MultiIndex

    def __post_init__(self):
        object.__setattr__(self, "lower", as_index(self.lower))
        object.__setattr__(self, "upper", as_index(self.upper, len(self.lower)))

    @classmethod
    def around(cls, index: Sequence[int]) -> "IndexBox":
        """The 1 x ... x 1 box holding a single index."""
        idx = as_index(index)
        return cls(idx, idx + [1] * idx.n)

    @property
    def n(self) -> int:
        return self.lower.n

    @property
    def dims(self) -> MultiIndex:
        return self.upper - self.lower

    @property
    def cardinality(self) -> int:
        out = 1
        for d in self.dims:
            out *= max(0, d)
        return out

    def __len__(self) -> int:
        return self.cardinality

    def is_empty(self) -> bool:
        return self.cardinality == 0

    def __contains__(self, k) -> bool:
        k = as_index(k)
        return len(k) == self.n and self.lower.le(k) and k.lt(self.upper)

    def __iter__(self) -> Iterator[MultiIndex]:
        ranges = [range(a, b) for a, b in zip(self.lower, self.upper)]
        for pt in itertools.product(*ranges):
            yield MultiIndex(pt)

    def top_slice(self, axis: int, level_from_top: int = 0) -> "IndexBox":
        return box_top_slice(self, axis, level_from_top)

    def without_top(self, axis: int) -> "IndexBox":
        """The box minus its top slice along ``axis`` (upper bound lowered by one)."""
        if not 0 <= axis < self.n:
            raise IndexError(f"axis {axis} out of range for n={self.n}")
        upper = list(self.upper)
        upper[axis] -= 1
        return IndexBox(self.lower, MultiIndex(upper))

    def __str__(self) -> str:
        return " x ".join(f"[{a},{b})" for a, b in zip(self.lower, self.upper))


def box_top_slice(box: IndexBox, axis: int, level_from_top: int = 0) -> IndexBox:
    """Sub-box with coordinate ``axis`` pinned to ``upper - 1 - level_from_top``.

    ``axis`` is 0-based.  ``level_from_top = 0`` is the top slice, ``1`` the
    one beneath it, and so on down to ``dims[axis] - 1`` (the bottom slice).
    """
    if not 0 <= axis < box.n:
        raise IndexError(f"axis {axis} out of range for n={box.n}")
    s = int(level_from_top)
    if s < 0 or s >= box.dims[axis]:
        raise ValueError("slice outside box")
    level = box.upper[axis] - 1 - s
    lower = list(box.lower)
    upper = list(box.upper)
    lower[axis] = level
    upper[axis] = level + 1
    return IndexBox(MultiIndex(lower), MultiIndex(upper))


@dataclass(frozen=True)
class TruncationLattice:
    """The finite set ``{k in N^n : k <= max_index}``, enumerated lexicographically."""

    max_index: MultiIndex

    def __post_init__(self):
        object.__setattr__(self, "max_index", as_index(self.max_index))
        if not self.max_index.is_natural():
            raise ValueError(f"lattice corner {tuple(self.max_index)} must lie in N^n")

    @property
    def n(self) -> int:
        return self.max_index.n

    def __len__(self) -> int:
        out = 1
        for m in self.max_index:
            out *= max(0, m + 1)
        return out

    def __contains__(self, k) -> bool:
        k = as_index(k)
        return len(k) == self.n and k.is_natural() and k.le(self.max_index)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(IndexBox(MultiIndex.zeros(self.n), self.max_index + [1] * self.n))

    def points(self, start: Sequence[int] | None = None) -> list[MultiIndex]:
        """Lattice points, optionally only those componentwise >= ``start``."""
        if start is None:
            return list(self)
        start = as_index(start, self.n)
        return [k for k in self if start.le(k)]

    def index_of(self) -> dict[MultiIndex, int]:
        return {k: i for i, k in enumerate(self)}


def shifted_lattice(lattice: TruncationLattice, shifts: Sequence[Sequence[int]]) -> TruncationLattice:
    """Smallest lattice holding ``lattice`` and its translates by every prefix sum of ``shifts``.

    Translates are clipped to N^n; only the upper corner matters since every
    lattice starts at the origin.
    """
    top = lattice.max_index
    best = top
    running = MultiIndex.zeros(lattice.n)
    for s in shifts:
        running = running + as_index(s, lattice.n)
        best = best.maximum(top + running)
    return TruncationLattice(MultiIndex(max(0, b) for b in best))
