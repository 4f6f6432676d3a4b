"""Thick and thin fibers, condition (I) and the layer-by-layer deletion process.

Everything here is exact: index sets are finite unions of products of
generators (see :mod:`rtoeplitz.indexsets`), and the only analytic input is
each generator class's verdict on ``sum 1/k``.

Deletion at level ``j`` (1-based, ``j = n-1 .. 1``) keeps the points whose
``j``-prefix fiber is thick.  For a union of components the thick prefixes
are exactly the ``j``-prefix products of the components whose coordinate
``j+1`` generator is divergent (call them ``D``), so

    E_j = union over c of  c            if c in D
                           c & pre(d)   for each d in D otherwise,

where ``pre(d)`` is ``d`` on the first ``j`` coordinates and FULL after.  The
result stays in the class, and the deleted part ``F_{j+1} = E_{j+1} \\ E_j``
is carried exactly as a set with an exclusion list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .indexsets import FullN, SymbolicIndexSet, intersect_generators

DEFAULT_BUDGET = 4096

__all__ = [
    "FiberQuery",
    "Decomposition",
    "ConditionIResult",
    "LocateResult",
    "DecompositionBudgetError",
    "ConditionIPreconditionError",
    "is_thick",
    "deletion_process",
    "satisfies_condition_I",
    "locate_condition_I",
]


class DecompositionBudgetError(RuntimeError):
    pass


class ConditionIPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class FiberQuery:
    """The fiber of ``set`` over the first ``len(prefix)`` coordinates."""

    set: SymbolicIndexSet
    prefix: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(a) for a in self.prefix))
        if len(self.prefix) >= self.set.n:
            raise ValueError("prefix must be shorter than the dimension")

    @property
    def fiber(self) -> SymbolicIndexSet:
        return self.set.fiber(self.prefix)


def is_thick(query: FiberQuery) -> bool:
    """Whether the next-coordinate projection of the fiber, intersected with N, has ``sum 1/k = inf``."""
    j = len(query.prefix)
    return query.fiber.positive_part().projection_divergent(j)


@dataclass
class Decomposition:
    """Layers ``E_n ... E_0`` and deleted parts ``F_j = E_j \\ E_{j-1}`` (all keyed by ``j``)."""

    n: int
    layers: dict = field(default_factory=dict)
    deleted: dict = field(default_factory=dict)

    @property
    def final(self) -> SymbolicIndexSet:
        return self.layers[0]

    @property
    def verdict(self) -> bool:
        return not self.layers[0].is_empty()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "layers": {str(j): self.layers[j].expr() for j in sorted(self.layers, reverse=True)},
            "deleted": {str(j): self.deleted[j].expr() for j in sorted(self.deleted, reverse=True)},
            "condition_I": self.verdict,
        }


def _prefix_product(d: tuple, j: int) -> tuple:
    return tuple(d[:j]) + (FullN(),) * (len(d) - j)


def _keep_thick(layer: SymbolicIndexSet, j: int, budget: int) -> SymbolicIndexSet:
    """Drop every point whose ``j``-prefix fiber (0 < j < n) is thin."""
    divergent = [c for c in layer.components if c[j].divergent]
    out = []
    for c in layer.components:
        if c[j].divergent:
            out.append(c)
            continue
        for d in divergent:
            out.append(tuple(intersect_generators(g, h) for g, h in zip(c, _prefix_product(d, j))))
            if len(out) > budget:
                raise DecompositionBudgetError("decomposition exceeds symbolic budget")
    result = SymbolicIndexSet(layer.n, out)
    if len(result.components) > budget:
        raise DecompositionBudgetError("decomposition exceeds symbolic budget")
    return result


def deletion_process(E: SymbolicIndexSet, budget: int = DEFAULT_BUDGET) -> Decomposition:
    """Run the deletion process on ``E`` intersected with N^n."""
    if E.excluded:
        raise NotImplementedError("deletion process needs a set without exclusions")
    n = E.n
    current = E.positive_part()
    if len(current.components) > budget:
        raise DecompositionBudgetError("decomposition exceeds symbolic budget")
    dec = Decomposition(n)
    dec.layers[n] = current
    for j in range(n - 1, 0, -1):
        current = _keep_thick(current, j, budget)
        dec.layers[j] = current
    e1 = dec.layers[1]
    dec.layers[0] = e1 if e1.projection_divergent(0) else SymbolicIndexSet.empty(n)
    for j in range(n, 0, -1):
        upper, lower = dec.layers[j], dec.layers[j - 1]
        if set(upper.components) <= set(lower.components):
            dec.deleted[j] = SymbolicIndexSet.empty(n)
        else:
            dec.deleted[j] = upper.minus(lower)
    return dec


class ConditionIResult(NamedTuple):
    holds: bool
    witness: SymbolicIndexSet
    decomposition: Decomposition


def satisfies_condition_I(E: SymbolicIndexSet, budget: int = DEFAULT_BUDGET) -> ConditionIResult:
    """Decide condition (I); the witness is ``E_0`` (empty when the condition fails).

    Every nonempty prefix fiber of ``E_0`` is thick and its first projection
    has a divergent harmonic sum, which is what condition (I) asks of the
    witness set.
    """
    dec = deletion_process(E, budget)
    return ConditionIResult(dec.verdict, dec.final, dec)


class LocateResult(NamedTuple):
    index: int  # 1-based position in the input list
    witness: SymbolicIndexSet


def locate_condition_I(sets: Sequence[SymbolicIndexSet], budget: int = DEFAULT_BUDGET) -> LocateResult:
    """Least ``j`` (1-based) whose set satisfies condition (I), given that the union does."""
    if not sets:
        raise ConditionIPreconditionError("need at least one set")
    union = sets[0]
    for s in sets[1:]:
        union = union | s
    if not satisfies_condition_I(union, budget).holds:
        raise ConditionIPreconditionError("the union does not satisfy condition (I)")
    for j, s in enumerate(sets, start=1):
        res = satisfies_condition_I(s, budget)
        if res.holds:
            return LocateResult(j, res.witness)
    raise AssertionError("no member satisfies condition (I) although the union does")
