"""Toeplitz operators with quasi-homogeneous symbols on the monomial lattice.

For ``phi = f(r) e^{i kappa.theta}`` the operator sends ``z^k`` to

    w(k) z^(k + kappa),   w(k) = pi^n c_{k+kappa} int_{sq(D)} f(sqrt t) t^(k + kappa/2) dt,

and zero when ``k + kappa`` leaves N^n or has a divergent norm.  A product
``T_{phi_m} ... T_{phi_1}`` is evaluated in factored form, one step weight at
a time: only scalar moments are multiplied, no truncated matrices, so there
is no leakage at the lattice edge.  Matrix products are kept as a cross-check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .lattice import MultiIndex, TruncationLattice, as_index, shifted_lattice
from .moments import MomentTable
from .symbols import QhSymbol, SlicedSymbol, SymbolSum, as_sum

log = logging.getLogger(__name__)

DEFAULT_ZERO_TOL = 1e-6

__all__ = [
    "LatticeOperator",
    "ProductReport",
    "toeplitz_apply",
    "product_apply",
    "product_apply_sliced",
    "zero_product_verdict",
    "threshold_index",
    "operator_matrix",
    "matrix_cross_check",
    "LatticeTooSmall",
]


class LatticeTooSmall(ValueError):
    pass


@dataclass
class LatticeOperator:
    """Sparse action ``z^k -> sum w z^k'`` on the sources of ``input_lattice``."""

    input_lattice: TruncationLattice
    output_lattice: TruncationLattice
    action: dict
    k0: MultiIndex
    sup_product: float = 1.0
    skipped_tuples: int = 0
    slice_residual: float = 0.0
    parts: dict = field(default_factory=dict)

    def targets(self, k: Sequence[int]) -> list[tuple[MultiIndex, complex]]:
        return sorted(self.action.get(as_index(k), {}).items())

    def weight(self, k: Sequence[int], target: Sequence[int]) -> complex:
        return self.action.get(as_index(k), {}).get(as_index(target), 0j)

    def max_abs_weight(self) -> float:
        return max((abs(w) for row in self.action.values() for w in row.values()), default=0.0)

    def combine(self, other: "LatticeOperator", a: complex = 1.0, b: complex = 1.0) -> "LatticeOperator":
        """``a * self + b * other`` on the common sources."""
        action = {}
        for k in self.action:
            row = {t: a * w for t, w in self.action[k].items()}
            for t, w in other.action.get(k, {}).items():
                row[t] = row.get(t, 0j) + b * w
            action[k] = row
        return LatticeOperator(
            self.input_lattice,
            self.output_lattice.__class__(self.output_lattice.max_index.maximum(other.output_lattice.max_index)),
            action,
            self.k0.maximum(other.k0),
            abs(a) * self.sup_product + abs(b) * other.sup_product,
            self.skipped_tuples + other.skipped_tuples,
        )


@dataclass
class ProductReport:
    operator_norm_estimate: float
    max_abs_weight: float
    zero_flag: bool
    witness: tuple | None
    k0_used: MultiIndex
    zero_tolerance: float
    threshold: float
    skipped_tuples: int = 0
    slice_residual: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k0_used"] = list(self.k0_used)
        if self.witness is not None:
            k, t, w = self.witness
            d["witness"] = {"source": list(k), "target": list(t), "weight": [w.real, w.imag]}
        return d


def _step_weights(table: MomentTable, sym: QhSymbol, sources: list[MultiIndex]) -> dict:
    """``source -> (target, weight)`` for one quasi-homogeneous symbol; None marks a killed source."""
    out: dict = {}
    if not sources:
        return out
    kappa = sym.twist
    live = []
    for k in sources:
        t = k + kappa
        if not (k.is_natural() and t.is_natural()):
            out[k] = None
        else:
            live.append((k, t))
    if not live:
        return out
    coeffs = table.coefficients([t for _, t in live])
    keep = [(k, t, c) for (k, t), c in zip(live, coeffs) if c > 0]
    for (k, t), c in zip(live, coeffs):
        if c <= 0:
            out[k] = None
    if not keep:
        return out
    if sym.is_zero():
        moments = np.zeros(len(keep), dtype=complex)
    else:
        powers = np.array([[2 * a + b + 1 for a, b in zip(k, kappa)] for k, _, _ in keep])
        moments, _ = table.radial_moments(sym.radial, powers, sup=sym.sup_bound)
    pin = math.pi**table.n
    for (k, t, c), m in zip(keep, moments):
        out[k] = (t, complex(pin * c * m))
    return out


def toeplitz_apply(table: MomentTable, sym: QhSymbol, k: Sequence[int]) -> tuple[MultiIndex, complex]:
    """Image of ``z^k``: ``(k + twist, weight)``; weight 0 when the target is killed."""
    k = as_index(k, table.n)
    if not k.is_natural():
        raise ValueError("source index must lie in N^n")
    res = _step_weights(table, sym, [k])[k]
    if res is None:
        return k + sym.twist, 0j
    return res


def threshold_index(symbols: Sequence) -> MultiIndex:
    """Least ``k0`` for which every intermediate index of every twist tuple stays in N^n."""
    sums = [as_sum(s) for s in symbols]
    n = sums[0].n
    running = MultiIndex.zeros(n)
    low = MultiIndex.zeros(n)
    for s in sums:
        running = running + s.min_twist()
        low = low.minimum(running)
    return MultiIndex(max(0, -v) for v in low)


def _propagate(table: MomentTable, paths: dict, sym_sum: SymbolSum, skipped: list) -> dict:
    """Apply one symbol sum to ``{source: {current index: weight}}``."""
    inter = sorted({idx for cur in paths.values() for idx in cur})
    steps = {kappa: _step_weights(table, term, inter) for kappa, term in sym_sum.terms.items()}
    new = {}
    for src in sorted(paths):
        acc: dict = {}
        for idx, w in sorted(paths[src].items()):
            for kappa in sorted(steps):
                res = steps[kappa][idx]
                if res is None:
                    skipped[0] += 1
                    continue
                tgt, sw = res
                acc[tgt] = acc.get(tgt, 0j) + w * sw
        new[src] = acc
    return new


def product_apply(table: MomentTable, symbols: Sequence, lattice: TruncationLattice) -> LatticeOperator:
    """``T_{phi_m} ... T_{phi_1}`` on every source of ``lattice`` (``symbols[0]`` acts first)."""
    sums = [as_sum(s) for s in symbols]
    if not sums:
        raise ValueError("need at least one symbol")
    for s in sums:
        if s.n != table.n:
            raise ValueError("symbol dimension does not match the domain")
    skipped = [0]
    paths = {k: {k: 1.0 + 0j} for k in lattice}
    for s in sums:
        paths = _propagate(table, paths, s, skipped)
    if skipped[0]:
        log.debug("product_apply: %d partial tuples killed (negative index or zero coefficient)", skipped[0])
    out_lattice = shifted_lattice(lattice, [s.max_twist() for s in sums])
    return LatticeOperator(
        lattice,
        out_lattice,
        paths,
        threshold_index(sums),
        float(np.prod([s.sup_bound for s in sums])),
        skipped[0],
    )


def product_apply_sliced(
    table: MomentTable, head: SlicedSymbol, tail: Sequence, lattice: TruncationLattice
) -> LatticeOperator:
    """``T_head T_{phi_{m-1}} ... T_{phi_1}`` with ``head`` expanded into its Fourier slices.

    The returned operator is the sum over slices; ``parts`` maps each slice
    index ``p`` to its own operator.
    """
    if head.sup_bound is None:
        head.with_sup_from(table.domain)
    sums = [as_sum(s) for s in tail]
    skipped = [0]
    paths = {k: {k: 1.0 + 0j} for k in lattice}
    for s in sums:
        paths = _propagate(table, paths, s, skipped)
    head_sum = head.as_sum()
    k0 = threshold_index(sums + [head_sum])
    tail_sup = float(np.prod([s.sup_bound for s in sums])) if sums else 1.0
    parts = {}
    for p, term in head_sum.terms.items():
        part = _propagate(table, paths, SymbolSum.single(term), skipped)
        parts[p] = LatticeOperator(
            lattice, shifted_lattice(lattice, [s.max_twist() for s in sums] + [p]), part, k0, tail_sup * term.sup_bound
        )
    action = {}
    for k in lattice:
        row: dict = {}
        for p in sorted(parts):
            for t, w in parts[p].action[k].items():
                row[t] = row.get(t, 0j) + w
        action[k] = row
    return LatticeOperator(
        lattice,
        shifted_lattice(lattice, [s.max_twist() for s in sums] + [head_sum.max_twist()]),
        action,
        k0,
        tail_sup * head.sup_bound,
        skipped[0],
        head.truncation_residual(table.domain),
        parts,
    )


def zero_product_verdict(
    op: LatticeOperator, table: MomentTable, zero_tolerance: float = DEFAULT_ZERO_TOL
) -> ProductReport:
    """Numerical verdict on whether the product vanishes, restricted to sources ``k >= k0``.

    The norm estimate is ``max_k ||op z^k|| / ||z^k||``; the product is
    flagged zero when that is below ``zero_tolerance`` times the product of
    the symbols' sup bounds (or times 1 when that product is 0).
    """
    sources = [k for k in op.input_lattice if op.k0.le(k) and k in op.action]
    if not sources:
        raise LatticeTooSmall("lattice too small for twists")
    scale = op.sup_product if op.sup_product > 0 else 1.0
    threshold = zero_tolerance * scale
    best = 0.0
    witness = None
    max_w = -1.0
    for k in sources:
        row = op.action[k]
        src_norm = table.norm(k)
        if row:
            targets = sorted(row)
            w = np.array([row[t] for t in targets])
            tn = table.norm_many(targets)
            fin = np.isfinite(tn)
            out_sq = float(np.sum(np.abs(w[fin]) ** 2 * tn[fin]))
            best = max(best, math.sqrt(out_sq / src_norm))
            i = int(np.argmax(np.abs(w)))
            if abs(w[i]) > max_w:
                max_w = float(abs(w[i]))
                witness = (k, targets[i], complex(w[i]))
    if witness is None:
        k = sources[0]
        witness = (k, k, 0j)
        max_w = 0.0
    return ProductReport(
        operator_norm_estimate=best,
        max_abs_weight=max_w,
        zero_flag=bool(best < threshold),
        witness=witness,
        k0_used=op.k0,
        zero_tolerance=zero_tolerance,
        threshold=threshold,
        skipped_tuples=op.skipped_tuples,
        slice_residual=op.slice_residual,
    )


def operator_matrix(table: MomentTable, sym, lattice: TruncationLattice) -> np.ndarray:
    """Dense matrix of one symbol (sum) on the monomials of ``lattice`` (column = source)."""
    index = lattice.index_of()
    op = product_apply(table, [sym], lattice)
    m = np.zeros((len(index), len(index)), dtype=complex)
    for k, row in op.action.items():
        for t, w in row.items():
            if t in index:
                m[index[t], index[k]] += w
    return m


def matrix_cross_check(table: MomentTable, symbols: Sequence, lattice: TruncationLattice) -> float:
    """Max difference between truncated matrix products and the factored product,
    over sources whose every intermediate index stays inside ``lattice``.
    """
    sums = [as_sum(s) for s in symbols]
    index = lattice.index_of()
    mat = np.eye(len(index), dtype=complex)
    for s in sums:
        mat = operator_matrix(table, s, lattice) @ mat
    op = product_apply(table, sums, lattice)
    top = lattice.max_index
    worst = 0.0
    for k in lattice:
        running = k
        inside = True
        for s in sums:
            running = running + s.max_twist()
            if not running.le(top):
                inside = False
                break
        if not inside:
            continue
        col = mat[:, index[k]]
        row = op.action[k]
        for t, j in index.items():
            worst = max(worst, abs(col[j] - row.get(t, 0j)))
    return worst

