"""Adaptive cubature of monomial-weighted integrands over regions in the unit box.

Three node strategies, picked from the region kind:

* iterated Gauss-Legendre for downward-closed regions, with the inner limits
  given by exact section bounds (closed form for built-in kinds, bisection of
  the indicator otherwise).  Each 1-d rule splits [0, b] at b/2 and maps the
  upper half through ``x = b (1 - v**2 / 2)``, which removes square-root
  behaviour of the next section bound where it closes up;
* tensor Gauss-Legendre on every flagged cell of a tabulated indicator;
* recursive dyadic subdivision for general predicates: cells classified by
  the indicator at their 2**n corners and centre, inside cells integrated
  with a tensor rule, straddling cells split down to a minimum side and then
  counted by midpoint * volume * indicator.

All node sets are built in a fixed order, so results are bit-reproducible.
"""

from __future__ import annotations

import itertools
import logging
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .domains import DomainProfile

log = logging.getLogger(__name__)

# (panels, Gauss order) per refinement level of the iterated rule
LEVELS = ((1, 8), (1, 16), (1, 32), (2, 32), (4, 32), (8, 32), (16, 32), (32, 32))
TABLE_ORDERS = (2, 4, 8, 16, 32)
DYADIC_MIN_SIDE_EXP = 14
MAX_NODES = 6_000_000
MAX_STRADDLING = 1 << 21


class QuadratureError(ArithmeticError):
    """Refinement failed to reach the requested tolerance."""


@lru_cache(maxsize=None)
def gauss01(q: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def composite01(panels: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss01(q)
    edges = np.arange(panels) / panels
    xs = (edges[:, None] + x[None, :] / panels).ravel()
    ws = np.tile(w / panels, panels)
    return xs, ws


@lru_cache(maxsize=None)
def unit_rule(level: int, grade: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """1-d rule on [0, 1].

    ``grade > 0`` replaces the lower half by geometric panels
    ``[2**-(j+1), 2**-j]`` for ``j = 1..grade`` (plus the remainder down to 0);
    this resolves power and log-oscillation behaviour at the origin.
    """
    panels, q = LEVELS[level]
    v, wv = composite01(panels, q)
    top_x = 1.0 - 0.5 * v * v
    top_w = wv * v
    if grade == 0:
        return np.concatenate([0.5 * v, top_x]), np.concatenate([0.5 * wv, top_w])
    xs, ws = [top_x], [top_w]
    for j in range(1, grade + 1):
        a, b = 2.0 ** -(j + 1), 2.0**-j
        xs.append(a + (b - a) * v)
        ws.append((b - a) * wv)
    a = 2.0 ** -(grade + 1)
    g, gw = gauss01(q)
    xs.append(a * g)
    ws.append(a * gw)
    return np.concatenate(xs), np.concatenate(ws)


def strategy_for(region: DomainProfile) -> str:
    if region.kind == "table":
        return "cells"
    if region.downward_closed:
        return "iterated"
    return "dyadic"


def iterated_nodes(region: DomainProfile, level: int, grade: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Nested 1-d rules; the result is a regular tree with ``len(rule)**n`` leaves.

    Row ``i`` of the output has the same first ``d`` coordinates as every row in
    its block of ``len(rule)**(n - d)``.  Sections of zero length keep their
    nodes (with weight 0) so that the block structure survives.
    """
    x, w = unit_rule(level, grade)
    if len(x) ** region.n > MAX_NODES:
        raise QuadratureError(f"node budget exceeded at level {level}")
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for _ in range(region.n):
        b = region.section_bound(pts)
        col = (b[:, None] * x[None, :]).reshape(-1, 1)
        pts = np.concatenate([np.repeat(pts, len(x), axis=0), col], axis=1)
        wts = (wts[:, None] * b[:, None] * w[None, :]).ravel()
    return pts, wts


def _tensor(q: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss01(q)
    grid = np.array(list(itertools.product(x, repeat=n)))
    wt = np.prod(np.array(list(itertools.product(w, repeat=n))), axis=1)
    return grid, wt


def cell_nodes(lo: np.ndarray, hi: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    grid, wt = _tensor(q, lo.shape[1])
    size = hi - lo
    pts = (lo[:, None, :] + size[:, None, :] * grid[None, :, :]).reshape(-1, lo.shape[1])
    wts = (np.prod(size, axis=1)[:, None] * wt[None, :]).ravel()
    return pts, wts


def dyadic_nodes(region: DomainProfile, max_depth: int, q: int = 16) -> tuple[np.ndarray, np.ndarray]:
    n = region.n
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    probes = np.vstack([corners, np.full((1, n), 0.5)])
    grid, gw = _tensor(q, n)
    lows = np.zeros((1, n))
    size = 1.0
    pts_out, wts_out = [], []
    for depth in range(max_depth + 1):
        m = len(lows)
        samples = (lows[:, None, :] + size * probes[None, :, :]).reshape(-1, n)
        flags = region.indicator(np.minimum(samples, 1.0)).reshape(m, -1)
        inside = flags.all(axis=1)
        mixed = flags.any(axis=1) & ~inside
        if inside.any():
            lo = lows[inside]
            pts_out.append((lo[:, None, :] + size * grid[None, :, :]).reshape(-1, n))
            wts_out.append(np.tile(gw * size**n, len(lo)))
        lows = lows[mixed]
        if not len(lows):
            break
        last = depth == max_depth or len(lows) * 2**n > MAX_STRADDLING
        if last:
            mids = lows + 0.5 * size
            keep = region.indicator(mids)
            pts_out.append(mids[keep])
            wts_out.append(np.full(int(keep.sum()), size**n))
            break
        size *= 0.5
        lows = (lows[:, None, :] + size * corners[None, :, :]).reshape(-1, n)
    if not pts_out:
        return np.zeros((0, n)), np.zeros(0)
    return np.concatenate(pts_out), np.concatenate(wts_out)


def power_moments(
    pts: np.ndarray, wts: np.ndarray, values: np.ndarray, powers: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """``sum_i w_i f_i u_i**P`` and ``sum_i w_i |f_i| |u_i**P|`` for each row P of ``powers``."""
    powers = np.asarray(powers)
    k = len(powers)
    a = wts * values
    b = wts * np.abs(values)
    out = np.zeros(k, dtype=complex)
    mag = np.zeros(k)
    if len(pts) == 0 or k == 0:
        return out, mag
    chunk = max(1, (1 << 23) // len(pts))
    if np.iscomplexobj(powers):
        logs = np.log(pts)
        for s in range(0, k, chunk):
            e = np.exp(logs @ powers[s : s + chunk].T)
            out[s : s + chunk] = a @ e
            mag[s : s + chunk] = b @ np.abs(e)
        return out, mag
    tables, inverse = [], []
    for j in range(pts.shape[1]):
        uniq, inv = np.unique(powers[:, j], return_inverse=True)
        tables.append(pts[:, j : j + 1] ** uniq[None, :].astype(float))
        inverse.append(inv)
    for s in range(0, k, chunk):
        m = tables[0][:, inverse[0][s : s + chunk]]
        for j in range(1, len(tables)):
            m = m * tables[j][:, inverse[j][s : s + chunk]]
        out[s : s + chunk] = a @ m
        mag[s : s + chunk] = b @ m
    return out, mag


def _power_table(x: np.ndarray, exps: np.ndarray) -> np.ndarray:
    safe = np.where(x > 0, x, 1.0)
    if np.iscomplexobj(exps):
        return np.exp(np.log(safe)[..., None] * exps)
    return safe[..., None] ** exps.astype(float)


def tree_moments(
    pts: np.ndarray, wts: np.ndarray, values: np.ndarray, powers: np.ndarray, branching: int
) -> tuple[np.ndarray, np.ndarray]:
    """:func:`power_moments` for the regular node trees of :func:`iterated_nodes`.

    Powers are contracted one axis at a time, innermost first, so the cost is
    linear in the node count times the number of distinct powers per axis.
    """
    powers = np.asarray(powers)
    n = pts.shape[1]
    q = branching
    uniq, inv = [], []
    for j in range(n):
        u, i = np.unique(powers[:, j], return_inverse=True)
        uniq.append(u)
        inv.append(i.ravel())
    acc = (wts * values).reshape(-1, q, 1)
    mag = (wts * np.abs(values)).reshape(-1, q, 1)
    for d in range(n - 1, -1, -1):
        coord = pts[:, d].reshape(-1, q, q ** (n - 1 - d))[:, :, 0]
        table = _power_table(coord, uniq[d])
        acc = np.matmul(table.transpose(0, 2, 1), acc)
        mag = np.matmul(np.abs(table).transpose(0, 2, 1), mag)
        if d:
            m, u, k = acc.shape
            acc = acc.reshape(m // q, q, u * k)
            mag = mag.reshape(m // q, q, u * k)
    flat = np.ravel_multi_index(tuple(inv), tuple(len(u) for u in uniq))
    return acc.reshape(-1)[flat].astype(complex), mag.reshape(-1)[flat].real.astype(float)


class RegionIntegrator:
    """Caches node sets for one region inside the unit box and integrates against them."""

    def __init__(self, region: DomainProfile, tol: float):
        if np.any(np.asarray(region.bounding_radius) > 1.0 + 1e-12):
            raise ValueError("integration region must lie in the unit box")
        self.region = region
        self.tol = float(tol)
        self.strategy = strategy_for(region)
        self._nodes: dict = {}

    def _levels(self, grade: int):
        if self.strategy == "iterated":
            return [("it", lvl, grade) for lvl in range(len(LEVELS))]
        if self.strategy == "cells":
            return [("cell", q, 0) for q in TABLE_ORDERS]
        base = DYADIC_MIN_SIDE_EXP if self.region.n <= 2 else 6
        return [("dy", d, 0) for d in (base - 4, base - 2, base)]

    def nodes(self, key) -> tuple[np.ndarray, np.ndarray]:
        if key not in self._nodes:
            kind, lvl, grade = key
            if kind == "it":
                self._nodes[key] = iterated_nodes(self.region, lvl, grade)
            elif kind == "cell":
                lo, hi = self.region.table.cells()
                self._nodes[key] = cell_nodes(lo, hi, lvl)
            else:
                self._nodes[key] = dyadic_nodes(self.region, lvl)
        return self._nodes[key]

    def integrate(
        self, func, powers, grade: int = 0, tol: float | None = None, sup: float | None = None, describe=None
    ):
        """Integrate ``func(u) * u**P`` over the region for every row P of ``powers``.

        ``func`` maps an ``(N, n)`` array to N (complex) values.  Returns
        ``(values, magnitudes)`` where ``magnitudes`` integrates ``|func| |u**P|``;
        convergence is declared when successive levels differ by at most
        ``tol * magnitudes``.  With ``sup`` (a bound on ``|func|``) the test is
        relaxed to ``tol * max(magnitudes, sup * int u**P)``, an absolute
        floor that lets integrands far below their bound converge.
        ``describe`` formats a node for error messages (default: ``u=...``).
        """
        tol = self.tol if tol is None else tol
        powers = np.atleast_2d(np.asarray(powers))
        k = len(powers)
        result = np.zeros(k, dtype=complex)
        magnitude = np.zeros(k)
        active = np.arange(k)
        prev = None
        last_err = np.inf
        for key in self._levels(grade):
            try:
                pts, wts = self.nodes(key)
            except QuadratureError:
                break
            vals = np.asarray(func(pts), dtype=complex).reshape(len(pts))
            bad = ~np.isfinite(vals) & (wts != 0)
            if bad.any():
                i = int(np.argmax(bad))
                where = describe(pts[i]) if describe else f"u={pts[i].tolist()}"
                raise ValueError(f"non-finite integrand value at {where}")
            vals = np.where(wts == 0, 0.0, vals)
            if key[0] == "it":
                q = len(unit_rule(key[1], key[2])[0])
                cur, mag = tree_moments(pts, wts, vals, powers[active], q)
            else:
                cur, mag = power_moments(pts, wts, vals, powers[active])
            result[active] = cur
            magnitude[active] = mag
            if prev is not None:
                err = np.abs(cur - prev)
                scale = mag
                if sup:
                    ones = np.ones(len(pts))
                    if key[0] == "it":
                        base = tree_moments(pts, wts, ones, powers[active], q)[1]
                    else:
                        base = power_moments(pts, wts, ones, powers[active])[1]
                    scale = np.maximum(mag, sup * base)
                ok = err <= tol * scale + 1e-300
                last_err = float(np.max(err / np.maximum(scale, 1e-300)))
                active, cur = active[~ok], cur[~ok]
                if not len(active):
                    return result, magnitude
            prev = cur
        if self.strategy == "dyadic" and prev is not None:
            log.warning("dyadic quadrature stopped at minimum cell size; relative change %.2e", last_err)
            return result, magnitude
        raise QuadratureError(f"quadrature did not reach tolerance {tol:g} (last relative change {last_err:.3e})")
