"""Independent reference computations used by the test suite.

Nothing here imports the quadrature, moment or fiber code under test.  The
projection oracle integrates directly in polar coordinates (Gauss-Legendre in
``r``, trapezoid in ``theta``); the condition (I) oracle decides thickness by
counting points on a large finite window.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


# ---------------------------------------------------------------------------
# Projection quadrature on polydisks


class PolydiskProjection:
    """Matrix entries ``<phi z^k, z^j> / ||z^j||^2`` on a polydisk.

    ``phi`` is a callable on complex arrays of shape ``(N, n)``.
    """

    def __init__(self, radii, r_nodes: int = 48, theta_nodes: int = 32):
        self.radii = np.asarray(radii, dtype=float)
        self.n = len(self.radii)
        x, w = np.polynomial.legendre.leggauss(r_nodes)
        self.r1 = 0.5 * (x + 1.0)
        self.w1 = 0.5 * w
        self.theta1 = 2 * np.pi * np.arange(theta_nodes) / theta_nodes
        self.theta_w = 2 * np.pi / theta_nodes

    def _grid(self):
        axes_r = [self.r1 * R for R in self.radii]
        axes_w = [self.w1 * R for R in self.radii]
        r = np.array(list(itertools.product(*axes_r)))
        wr = np.prod(np.array(list(itertools.product(*axes_w))), axis=1)
        th = np.array(list(itertools.product(self.theta1, repeat=self.n)))
        return r, wr, th

    def norm_sq(self, k) -> float:
        """``||z^k||^2`` by the same quadrature (phi = 1)."""
        r, wr, _ = self._grid()
        k = np.asarray(k)
        radial = np.prod(r ** (2 * k + 1), axis=1)
        return float((2 * np.pi) ** self.n * np.sum(wr * radial))

    def coefficient_table(self, phi):
        """Fourier data ``F[p](r)``: mean over the torus of ``phi * e^{-i p theta}``."""
        r, wr, th = self._grid()
        z = r[:, None, :] * np.exp(1j * th[None, :, :])
        vals = phi(z.reshape(-1, self.n)).reshape(len(r), len(th))
        return r, wr, th, vals

    def matrix(self, phi, sources, targets):
        """Dense ``{(target, source): weight}`` for the listed indices."""
        r, wr, th, vals = self.coefficient_table(phi)
        out = {}
        cache = {}
        for k in sources:
            k = tuple(k)
            for j in targets:
                j = tuple(j)
                if any(a < 0 for a in j):
                    continue
                d = tuple(a - b for a, b in zip(j, k))
                if d not in cache:
                    phase = np.exp(-1j * th @ np.asarray(d, dtype=float))
                    cache[d] = vals @ phase * self.theta_w**self.n
                radial = np.prod(r ** (np.asarray(k) + np.asarray(j) + 1), axis=1)
                inner = np.sum(wr * radial * cache[d])
                out[(j, k)] = complex(inner / self.norm_sq(j))
        return out

    def product(self, phis, sources, pad: int):
        """``T_{phis[-1]} ... T_{phis[0]}`` applied to each source; returns ``{source: {target: w}}``.

        Intermediates range over all indices within ``pad`` of the sources per
        factor, which is exact for band-limited symbols of degree <= ``pad``.
        """
        sources = [tuple(k) for k in sources]
        hi = max(max(k) for k in sources) + pad * len(phis)
        universe = list(itertools.product(range(hi + 1), repeat=self.n))
        state = {k: {k: 1.0 + 0j} for k in sources}
        for phi in phis:
            cur = sorted({t for row in state.values() for t in row})
            mat = self.matrix(phi, cur, universe)
            new = {}
            for src, row in state.items():
                acc = {}
                for mid, w in row.items():
                    for t in universe:
                        m = mat.get((t, mid), 0j)
                        if abs(m) > 1e-14:
                            acc[t] = acc.get(t, 0j) + w * m
                new[src] = acc
            state = new
        return state


# ---------------------------------------------------------------------------
# Brute-force condition (I) for n = 2


@dataclass(frozen=True)
class Gen:
    """Generator description: kind in {full, ap, fin, geo, pow}."""

    kind: str
    args: tuple = ()

    def expr(self) -> str:
        if self.kind == "full":
            return "FULL"
        name = {"ap": "AP", "fin": "FIN", "geo": "GEO", "pow": "POW"}[self.kind]
        return f"{name}({','.join(str(a) for a in self.args)})"

    def mask(self, upto: int) -> np.ndarray:
        m = np.zeros(upto + 1, dtype=bool)
        if self.kind == "full":
            m[:] = True
        elif self.kind == "ap":
            a, d = self.args
            m[a::d] = True
        elif self.kind == "fin":
            for v in self.args:
                if 0 <= v <= upto:
                    m[v] = True
        elif self.kind == "geo":
            (b,) = self.args
            v = 1
            while v <= upto:
                m[v] = True
                v *= b
        elif self.kind == "pow":
            (e,) = self.args
            i = 1
            while i**e <= upto:
                m[i**e] = True
                i += 1
        return m


def set_expr(components) -> str:
    return " | ".join(" x ".join(g.expr() for g in c) for c in components)


def random_generator(rng: np.random.Generator) -> Gen:
    kind = rng.choice(["full", "ap", "ap", "fin", "geo", "pow"])
    if kind == "ap":
        return Gen("ap", (int(rng.integers(1, 6)), int(rng.integers(1, 5))))
    if kind == "fin":
        size = int(rng.integers(1, 4))
        return Gen("fin", tuple(sorted({int(v) for v in rng.integers(0, 30, size=size)})))
    if kind == "geo":
        return Gen("geo", (int(rng.integers(2, 5)),))
    if kind == "pow":
        return Gen("pow", (int(rng.integers(2, 4)),))
    return Gen("full")


def brute_condition_I(components, N: int = 20000) -> bool:
    """Decide condition (I) for a 2D union of products by counting on ``[1, N]^2``.

    A fiber (or the first projection) counts as thick when it has at least
    ``N / 40`` points in the window.  Every divergent generator drawn by
    :func:`random_generator` has density at least 1/4 and every convergent one
    has at most ``sqrt(N)`` points, so the threshold separates them.
    """
    thresh = N / 40
    first = [c[0].mask(N) for c in components]
    second = [c[1].mask(N) for c in components]
    for s in second:
        s[0] = False
    rows = np.zeros(N + 1, dtype=bool)
    active = np.array(first).T  # (N+1, m): component c covers row a
    active[0] = False
    for pattern in {tuple(row) for row in active}:
        if not any(pattern):
            continue
        fib = np.zeros(N + 1, dtype=bool)
        for c, on in enumerate(pattern):
            if on:
                fib |= second[c]
        if fib.sum() >= thresh:
            match = np.all(active == np.array(pattern), axis=1)
            rows |= match
    return bool(rows.sum() >= thresh)


def union_mask(components, upto: int) -> np.ndarray:
    """Membership of the union on ``[0, upto]^2``."""
    out = np.zeros((upto + 1, upto + 1), dtype=bool)
    for a, b in components:
        out |= np.outer(a.mask(upto), b.mask(upto))
    return out
