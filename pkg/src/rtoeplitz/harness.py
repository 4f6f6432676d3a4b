"""Experiment runners and randomized suites.

Each runner takes an :class:`~rtoeplitz.config.ExperimentSpec` and returns a
JSON-ready report carrying ``schema_version``.  Runs are deterministic given
the experiment settings (including the seed).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentSpec, parse_symbol
from .domains import DomainProfile
from .expressions import compile_expression
from .fibers import satisfies_condition_I
from .indexsets import IndexSetParseError, parse_index_set
from .lattice import IndexBox, MultiIndex, TruncationLattice
from .moments import MomentTable, RadialIntegrand, moment_transform
from .symbols import QhSymbol, SlicedSymbol, SymbolSum, as_sum, sample_region
from .toeplitz import (
    LatticeTooSmall,
    product_apply,
    product_apply_sliced,
    threshold_index,
    zero_product_verdict,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

__all__ = [
    "SCHEMA_VERSION",
    "run_proposition1",
    "run_corollary1",
    "run_theorem1_box_reduction",
    "run_moment_vanishing",
    "run_experiment",
    "write_report",
    "random_positive_radial",
    "random_qh_symbol",
    "random_box_sum",
    "falsification_suite",
    "box_reduction_check",
]


def _envelope(kind: str, spec: ExperimentSpec | None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "engine_version": __version__,
        "kind": kind,
        "config": spec.to_dict() if spec is not None else None,
    }


def _table(spec: ExperimentSpec, domain: DomainProfile) -> MomentTable:
    return MomentTable(domain, spec.quad_tol)


def _symbols(spec: ExperimentSpec, domain: DomainProfile) -> list:
    if not spec.symbols:
        raise ConfigError("no symbols given")
    return [parse_symbol(s, domain.n, domain) for s in spec.symbols]


def _idx(k) -> list[int]:
    return [int(v) for v in k]


def _cplx(w: complex) -> list[float]:
    return [float(w.real), float(w.imag)]


# -- proposition 1 ----------------------------------------------------------


def run_proposition1(spec: ExperimentSpec) -> dict:
    """Per-factor moments on the lattice and their zero sets ``Z_j``."""
    domain = spec.domain()
    table = _table(spec, domain)
    syms = _symbols(spec, domain)
    qh = []
    for s in syms:
        if isinstance(s, QhSymbol):
            qh.append(s)
        elif isinstance(s, SymbolSum) and len(s.terms) <= 1:
            qh.append(next(iter(s.terms.values())) if s.terms else QhSymbol.zero(domain.n))
        else:
            raise ConfigError("proposition1 needs quasi-homogeneous symbols")
    lattice = TruncationLattice(spec.kmax)
    k0 = threshold_index(qh)
    sources = [k for k in lattice if k0.le(k)]
    if not sources:
        raise LatticeTooSmall("lattice too small for twists")
    prefix = MultiIndex.zeros(domain.n)
    factors = []
    zero_sets = []
    for j, sym in enumerate(qh, start=1):
        inter = np.array([list(k + prefix) for k in sources])
        powers = 2 * inter + np.asarray(sym.twist) + 1
        if sym.is_zero():
            vals = np.zeros(len(sources), dtype=complex)
            mags = np.zeros(len(sources))
        else:
            vals, mags = table.radial_moments(sym.radial, powers, sup=sym.sup_bound)
        vanish = [bool(abs(v) <= spec.zero_tol * m) or m == 0 for v, m in zip(vals, mags)]
        z = [k for k, flag in zip(sources, vanish) if flag]
        zero_sets.append(z)
        factors.append(
            {
                "index": j,
                "twist": _idx(sym.twist),
                "moments": [{"k": _idx(k), "value": _cplx(v), "magnitude": float(m)} for k, v, m in zip(sources, vals, mags)],
                "zero_set": [_idx(k) for k in z],
                "identically_zero": len(z) == len(sources),
            }
        )
        prefix = prefix + sym.twist
    product_zero = sorted({k for z in zero_sets for k in z})
    zero_factors = [f["index"] for f in factors if f["identically_zero"]]
    verdict = f"factor {zero_factors[0]} is identically zero" if zero_factors else "no zero factor"
    hulls = {}
    for key, text in spec.sets.items():
        m = key.removeprefix("hull")
        if not (key.startswith("hull") and m.isdigit()):
            continue
        j = int(m)
        if not 1 <= j <= len(qh):
            raise ConfigError(f"{key}: no factor {j}")
        try:
            hull = parse_index_set(text)
        except IndexSetParseError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        window = {k for k in sources if hull.contains(k)}
        res = satisfies_condition_I(hull)
        hulls[key] = {
            "expr": hull.expr(),
            "matches_zero_set": window == set(zero_sets[j - 1]),
            "condition_I": res.holds,
            "witness": res.witness.expr(),
        }
    return _envelope("proposition1", spec) | {
        "k0_used": _idx(k0),
        "lattice_max": _idx(spec.kmax),
        "factors": factors,
        "product_zero_points": [_idx(k) for k in product_zero],
        "zero_factors": zero_factors,
        "verdict": verdict,
        "hulls": hulls,
    }


# -- corollary 1 -------------------------------------------------------------


def run_corollary1(spec: ExperimentSpec) -> dict:
    """Sliced product with the bounded symbol outermost, plus the desk-scale dichotomy check."""
    domain = spec.domain()
    table = _table(spec, domain)
    syms = _symbols(spec, domain)
    sliced = [i for i, s in enumerate(syms) if isinstance(s, SlicedSymbol)]
    if sliced != [len(syms) - 1]:
        raise ConfigError("corollary1 needs exactly one linf symbol, in the outermost (last) position")
    head, tail = syms[-1], syms[:-1]
    lattice = TruncationLattice(spec.kmax)
    op = product_apply_sliced(table, head, tail, lattice)
    overall = zero_product_verdict(op, table, spec.zero_tol)
    per_slice = {}
    for p, part in sorted(op.parts.items()):
        per_slice[",".join(map(str, p))] = zero_product_verdict(part, table, spec.zero_tol).zero_flag
    tail_zero = []
    for s in tail:
        s = as_sum(s)
        if s.is_zero():
            tail_zero.append(True)
            continue
        one = product_apply(table, [s], lattice)
        try:
            tail_zero.append(zero_product_verdict(one, table, spec.zero_tol).zero_flag)
        except LatticeTooSmall:
            tail_zero.append(False)
    if overall.zero_flag:
        dichotomy = any(tail_zero) or all(per_slice.values())
    else:
        dichotomy = True
    return _envelope("corollary1", spec) | {
        "product": overall.to_dict(),
        "slice_zero_flags": per_slice,
        "tail_zero_flags": tail_zero,
        "dichotomy_holds": dichotomy,
        "slice_residual": op.slice_residual,
    }


# -- theorem 1 box reduction -------------------------------------------------


@dataclass
class BoxCheck:
    max_abs_diff: float
    max_rel_diff: float
    compared: int
    steps: list


def box_reduction_check(
    table: MomentTable, sums: Sequence[SymbolSum], lattice: TruncationLattice, axis: int = 0
) -> BoxCheck:
    """Shrink zero top slices, then compare the full product with the top-slice product
    at the targets of maximal power along ``axis``.
    """
    sums = [as_sum(s) for s in sums]
    steps = []
    while True:
        zero = [j for j, s in enumerate(sums, start=1) if s.is_zero() or s.box.dims[axis] <= 0]
        if zero:
            steps.append({"action": "symbol_zero", "symbols": zero})
            return BoxCheck(0.0, 0.0, 0, steps)
        tops = [s.top_slice(axis) for s in sums]
        empty_tops = [j for j, t in enumerate(tops) if t.is_zero()]
        if not empty_tops:
            break
        for j in empty_tops:
            sums[j] = sums[j].without_top(axis)
            steps.append({"action": "shrink", "symbol": j + 1, "box": str(sums[j].box)})
    if all(s.box.cardinality == 1 for s in sums):
        steps.append({"action": "base_case"})
    full = product_apply(table, sums, lattice)
    top = product_apply(table, tops, lattice)
    lift = sum(s.box.upper[axis] - 1 for s in sums)
    k0 = threshold_index(sums)
    worst_abs = worst_rel = 0.0
    compared = 0
    for k in lattice:
        if not k0.le(k):
            continue
        level = k[axis] + lift
        targets = {t for t in full.action[k] if t[axis] == level} | set(top.action[k])
        for t in sorted(targets):
            a = full.action[k].get(t, 0j)
            b = top.action[k].get(t, 0j)
            d = abs(a - b)
            worst_abs = max(worst_abs, d)
            worst_rel = max(worst_rel, d / max(1.0, abs(a)))
            compared += 1
    steps.append({"action": "compare", "targets": compared, "max_abs_diff": worst_abs})
    return BoxCheck(worst_abs, worst_rel, compared, steps)


def run_theorem1_box_reduction(spec: ExperimentSpec) -> dict:
    domain = spec.domain()
    table = _table(spec, domain)
    syms = _symbols(spec, domain)
    if any(isinstance(s, SlicedSymbol) for s in syms):
        raise ConfigError("box reduction needs box symbols (qh or sum), not linf")
    if not 0 <= spec.axis < domain.n:
        raise ConfigError(f"axis {spec.axis} out of range")
    res = box_reduction_check(table, [as_sum(s) for s in syms], TruncationLattice(spec.kmax), spec.axis)
    return _envelope("theorem1_box_reduction", spec) | {
        "axis": spec.axis,
        "steps": res.steps,
        "compared_targets": res.compared,
        "max_abs_diff": res.max_abs_diff,
        "max_rel_diff": res.max_rel_diff,
        "coefficients_match": res.max_rel_diff <= 1e-8,
    }


# -- moment vanishing --------------------------------------------------------


def run_moment_vanishing(spec: ExperimentSpec) -> dict:
    """``h(z)`` on the points of ``E`` inside the lattice and on seeded probes in the half-planes."""
    domain = spec.domain()
    n = domain.n
    if spec.integrand is None:
        raise ConfigError("missing [integrand] g = ...")
    f = compile_expression(spec.integrand, n, allowed="rt")
    if spec.integrand_sup is not None:
        sup = spec.integrand_sup
    else:
        pts = sample_region(domain, 2048, seed=spec.seed)
        sup = 1.05 * float(np.max(np.abs(f(pts)))) if len(pts) else 0.0
    g = RadialIntegrand(f, (0,) * n, sup, spec.integrand)
    try:
        E = parse_index_set(spec.sets.get("e", "FULL" + " x FULL" * (n - 1)))
    except IndexSetParseError as exc:
        raise ConfigError(f"E: {exc}") from None
    if E.n != n:
        raise ConfigError("E has the wrong dimension")
    tol = spec.quad_tol
    on_e = []
    for k in TruncationLattice(spec.kmax):
        if k.is_natural() and all(v >= 1 for v in k) and E.contains(k):
            h = moment_transform(domain, g, np.asarray(k, dtype=complex), tol)
            on_e.append({"z": [[float(v), 0.0] for v in k], "h": _cplx(h)})
    rng = np.random.default_rng(spec.seed)
    probes = []
    for _ in range(spec.probes):
        z = rng.uniform(0.05, 4.0, n) + 1j * rng.uniform(-6.0, 6.0, n)
        h = moment_transform(domain, g, z, tol)
        probes.append({"z": [_cplx(v) for v in z], "h": _cplx(h)})
    max_e = max((math.hypot(*p["h"]) for p in on_e), default=0.0)
    max_p = max((math.hypot(*p["h"]) for p in probes), default=0.0)
    return _envelope("moment_vanishing", spec) | {
        "sup_bound": sup,
        "set": E.expr(),
        "condition_I": satisfies_condition_I(E).holds,
        "points_on_E": on_e,
        "probes": probes,
        "max_abs_on_E": max_e,
        "max_abs_on_probes": max_p,
        "vanishes_on_E": max_e <= spec.zero_tol * max(sup, 1e-300),
        "small_everywhere_probed": max_p <= spec.zero_tol * max(sup, 1e-300),
    }


RUNNERS = {
    "proposition1": run_proposition1,
    "corollary1": run_corollary1,
    "theorem1_box_reduction": run_theorem1_box_reduction,
    "moment_vanishing": run_moment_vanishing,
}


def run_experiment(spec: ExperimentSpec) -> dict:
    return RUNNERS[spec.kind](spec)


def write_report(report: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


# -- randomized suites -------------------------------------------------------


def random_positive_radial(rng: np.random.Generator, domain: DomainProfile):
    """``c_0 + sum_j c_j r_j^{e_j}`` with ``c`` in [1/4, 1] and ``e_j`` in {1, 2}.

    Returns ``(radial, sup_bound)``; the bound is the value at the outer
    corner of the bounding box, valid because the polynomial increases in
    every radius.
    """
    n = domain.n
    c = rng.uniform(0.25, 1.0, n + 1)
    e = rng.integers(1, 3, n)

    def radial(r, c=c, e=e):
        return c[0] + np.sum(c[1:] * r**e, axis=1)

    sup = float(c[0] + np.sum(c[1:] * np.asarray(domain.bounding_radius) ** e))
    return radial, sup


def random_qh_symbol(rng: np.random.Generator, domain: DomainProfile, max_twist: int = 2) -> QhSymbol:
    radial, sup = random_positive_radial(rng, domain)
    twist = MultiIndex(rng.integers(-max_twist, max_twist + 1, domain.n))
    return QhSymbol(radial, twist, sup, "random")


def random_box_sum(rng: np.random.Generator, domain: DomainProfile, max_side: int = 3, max_twist: int = 2) -> SymbolSum:
    n = domain.n
    lo = rng.integers(-max_twist, max_twist + 1, n)
    side = rng.integers(1, max_side + 1, n)
    box = IndexBox(MultiIndex(lo), MultiIndex(lo + side))
    terms = {}
    for k in box:
        radial, sup = random_positive_radial(rng, domain)
        terms[k] = QhSymbol(radial, k, sup, "random")
    return SymbolSum(box, terms)


def falsification_suite(
    table: MomentTable,
    instances: int = 50,
    seed: int = 0,
    kmax: Sequence[int] = (10, 10),
    zero_tol: float = 1e-6,
    max_factors: int = 3,
) -> list[dict]:
    """Random nonzero products; each entry records the verdict and the verdicts
    obtained by replacing each slot in turn with the zero symbol."""
    rng = np.random.default_rng(seed)
    lattice = TruncationLattice(kmax)
    out = []
    for i in range(instances):
        m = int(rng.integers(1, max_factors + 1))
        syms = [random_qh_symbol(rng, table.domain) for _ in range(m)]
        op = product_apply(table, syms, lattice)
        rep = zero_product_verdict(op, table, zero_tol)
        zero_flags, zero_weights = [], []
        for slot in range(m):
            with_zero = list(syms)
            with_zero[slot] = QhSymbol.zero(table.n, syms[slot].twist)
            zrep = zero_product_verdict(product_apply(table, with_zero, lattice), table, zero_tol)
            zero_flags.append(zrep.zero_flag)
            zero_weights.append(zrep.max_abs_weight)
        out.append(
            {
                "instance": i,
                "factors": m,
                "twists": [_idx(s.twist) for s in syms],
                "zero_flag": rep.zero_flag,
                "norm_estimate": rep.operator_norm_estimate,
                "zero_inserted_flags": zero_flags,
                "zero_inserted_flag": all(zero_flags),
                "zero_inserted_max_weight": max(zero_weights),
            }
        )
    return out
