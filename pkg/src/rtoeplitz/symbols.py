"""Quasi-homogeneous symbols, finite sums of them, and Fourier slicing of bounded symbols.

A quasi-homogeneous symbol is ``f(r) e^{i k.theta}``: a radial part ``f``
(a function of the radii, given as a vectorised callable) and an integer
twist ``k``.  On monomials its Toeplitz operator is a weighted shift by ``k``.

A general bounded symbol is reduced to such pieces by Fourier expansion in
the angles: ``phi(r e^{i theta}) = sum_p f_p(r) e^{i p.theta}``.
"""

from __future__ import annotations

import itertools
from collections import OrderedDict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from .domains import DomainError, DomainProfile
from .expressions import compile_expression
from .lattice import IndexBox, MultiIndex, as_index
from .moments import RadialIntegrand

Radial = Callable[[np.ndarray], np.ndarray]

__all__ = [
    "QhSymbol",
    "SymbolSum",
    "SlicedSymbol",
    "fourier_slice",
    "g_profile",
    "sample_region",
    "as_sum",
]


def sample_region(domain: DomainProfile, count: int, seed: int = 0) -> np.ndarray:
    """Up to ``count`` points of the radial region, by rejection from its bounding box."""
    rng = np.random.default_rng(seed)
    b = np.asarray(domain.bounding_radius)
    out = []
    have = 0
    for _ in range(50):
        x = rng.random((4 * count, domain.n)) * b
        x = x[domain.indicator(x)]
        out.append(x)
        have += len(x)
        if have >= count:
            break
    pts = np.concatenate(out)[:count] if out else np.zeros((0, domain.n))
    return pts


@dataclass(frozen=True)
class QhSymbol:
    """``f(r) e^{i twist.theta}`` with ``|f| <= sup_bound`` on the radial region."""

    radial: Radial
    twist: MultiIndex
    sup_bound: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "twist", as_index(self.twist))
        if not self.sup_bound >= 0:
            raise ValueError("sup_bound must be nonnegative")
        object.__setattr__(self, "sup_bound", float(self.sup_bound))

    @property
    def n(self) -> int:
        return self.twist.n

    @classmethod
    def from_expression(
        cls,
        text: str,
        twist: Sequence[int],
        sup_bound: float | None = None,
        domain: DomainProfile | None = None,
    ) -> "QhSymbol":
        """Radial part from an expression in ``r1..rn`` / ``t1..tn``.

        Without a declared bound, the bound is estimated from samples of
        ``domain`` (and padded by 5 %).  A declared bound is spot-checked
        against samples of ``domain`` when one is given.
        """
        twist = as_index(twist)
        f = compile_expression(text, twist.n, allowed="rt")
        if sup_bound is None:
            if domain is None:
                raise ValueError("need sup_bound or a domain to estimate it")
            return cls(f, twist, 1.05 * _sampled_sup(f, domain), text)
        sym = cls(f, twist, sup_bound, text)
        if domain is not None:
            sym.spot_check(domain)
        return sym

    @classmethod
    def zero(cls, n: int, twist: Sequence[int] | None = None) -> "QhSymbol":
        t = MultiIndex.zeros(n) if twist is None else as_index(twist, n)
        return cls(lambda r: np.zeros(len(r), dtype=complex), t, 0.0, "0")

    @classmethod
    def constant(cls, value: complex, n: int) -> "QhSymbol":
        return cls(lambda r: np.full(len(r), value, dtype=complex), MultiIndex.zeros(n), abs(value), f"{value}")

    def is_zero(self) -> bool:
        return self.sup_bound == 0.0

    def values(self, r) -> np.ndarray:
        r = np.atleast_2d(np.asarray(r, dtype=float))
        return np.asarray(self.radial(r), dtype=complex).reshape(len(r))

    def evaluate(self, z) -> np.ndarray:
        """The symbol at complex points ``z`` of shape ``(N, n)``."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        phase = np.exp(1j * (np.angle(z) @ np.asarray(self.twist, dtype=float)))
        return self.values(np.abs(z)) * phase

    def spot_check(self, domain: DomainProfile, samples: int = 256, seed: int = 0) -> None:
        """Raise if sampled values exceed the declared bound."""
        pts = sample_region(domain, samples, seed)
        if not len(pts):
            return
        worst = float(np.max(np.abs(self.values(pts))))
        if worst > self.sup_bound * (1 + 1e-9) + 1e-300:
            raise ValueError(f"radial part reaches {worst:.6g} above its declared bound {self.sup_bound:.6g}")

    def scaled(self, a: complex) -> "QhSymbol":
        f = self.radial
        return QhSymbol(lambda r: a * np.asarray(f(r), dtype=complex), self.twist, abs(a) * self.sup_bound)

    def __add__(self, other: "QhSymbol") -> "QhSymbol":
        if other.twist != self.twist:
            raise ValueError("only symbols with the same twist add to a quasi-homogeneous symbol")
        f, g = self.radial, other.radial
        return QhSymbol(
            lambda r: np.asarray(f(r), dtype=complex) + np.asarray(g(r), dtype=complex),
            self.twist,
            self.sup_bound + other.sup_bound,
        )


def _sampled_sup(f: Radial, domain: DomainProfile, samples: int = 4096) -> float:
    pts = sample_region(domain, samples, seed=12345)
    corners = np.array(list(itertools.product(*[(0.0, b * (1 - 1e-12)) for b in domain.bounding_radius])))
    corners = corners[domain.indicator(corners)]
    pts = np.vstack([pts, corners]) if len(corners) else pts
    if not len(pts):
        raise DomainError("could not sample the domain")
    return float(np.max(np.abs(np.asarray(f(pts)))))


@dataclass(frozen=True)
class SymbolSum:
    """``sum_{k in box} phi_k`` with ``phi_k`` quasi-homogeneous of twist ``k``; missing keys are zero."""

    box: IndexBox
    terms: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, sym in sorted((as_index(k, self.box.n), s) for k, s in self.terms.items()):
            if sym.twist != key:
                raise ValueError(f"term stored under {tuple(key)} has twist {tuple(sym.twist)}")
            if key not in self.box:
                raise ValueError(f"twist {tuple(key)} outside the box {self.box}")
            clean[key] = sym
        object.__setattr__(self, "terms", MappingProxyType(clean))

    @property
    def n(self) -> int:
        return self.box.n

    @classmethod
    def single(cls, sym: QhSymbol) -> "SymbolSum":
        return cls(IndexBox.around(sym.twist), {sym.twist: sym})

    @classmethod
    def of(cls, *syms: QhSymbol) -> "SymbolSum":
        """Smallest box holding the given twists (one symbol per twist)."""
        lo = syms[0].twist
        hi = syms[0].twist
        for s in syms[1:]:
            lo, hi = lo.minimum(s.twist), hi.maximum(s.twist)
        return cls(IndexBox(lo, hi + [1] * lo.n), {s.twist: s for s in syms})

    @classmethod
    def zero(cls, n: int) -> "SymbolSum":
        return cls(IndexBox.around(MultiIndex.zeros(n)), {})

    def is_zero(self) -> bool:
        return all(s.is_zero() for s in self.terms.values())

    @property
    def sup_bound(self) -> float:
        return float(sum(s.sup_bound for s in self.terms.values()))

    def live_terms(self) -> list[QhSymbol]:
        return [s for s in self.terms.values()]

    def min_twist(self) -> MultiIndex:
        """Componentwise minimum twist over stored terms (zero for an empty sum)."""
        if not self.terms:
            return MultiIndex.zeros(self.n)
        out = None
        for k in self.terms:
            out = k if out is None else out.minimum(k)
        return out

    def max_twist(self) -> MultiIndex:
        if not self.terms:
            return MultiIndex.zeros(self.n)
        out = None
        for k in self.terms:
            out = k if out is None else out.maximum(k)
        return out

    def top_slice(self, axis: int, level_from_top: int = 0) -> "SymbolSum":
        sub = self.box.top_slice(axis, level_from_top)
        return SymbolSum(sub, {k: s for k, s in self.terms.items() if k in sub})

    def without_top(self, axis: int) -> "SymbolSum":
        sub = self.box.without_top(axis)
        return SymbolSum(sub, {k: s for k, s in self.terms.items() if k in sub})

    def evaluate(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        out = np.zeros(len(z), dtype=complex)
        for s in self.terms.values():
            out += s.evaluate(z)
        return out


def as_sum(sym) -> SymbolSum:
    if isinstance(sym, SymbolSum):
        return sym
    if isinstance(sym, QhSymbol):
        return SymbolSum.single(sym)
    raise TypeError(f"expected QhSymbol or SymbolSum, got {type(sym).__name__}")


def _theta_grid(m: int, n: int) -> np.ndarray:
    th = 2 * np.pi * np.arange(m) / m
    return np.array(list(itertools.product(th, repeat=n)))


def fourier_slice(phi: Callable, p: Sequence[int], r: Sequence[float], theta_samples: int | None = None) -> complex:
    """``(2 pi)^-n int phi(r e^{i theta}) e^{-i p.theta} d theta`` by the trapezoid rule.

    ``phi`` takes complex points of shape ``(N, n)``.  The default sample count
    per axis is ``4 (max|p_j| + 4)``.
    """
    p = as_index(p)
    r = np.asarray(r, dtype=float).reshape(-1)
    m = theta_samples or 4 * (max(abs(v) for v in p) + 4)
    th = _theta_grid(m, p.n)
    z = r[None, :] * np.exp(1j * th)
    vals = np.asarray(phi(z), dtype=complex)
    return complex(np.mean(vals * np.exp(-1j * (th @ np.asarray(p, dtype=float)))))


class SlicedSymbol:
    """A bounded symbol together with its angular Fourier slices ``f_p``, ``|p_j| <= p_max``.

    Slices are computed by an FFT over a ``theta_samples**n`` torus grid at
    whatever radii the caller asks for; the last few radius batches are cached.
    """

    def __init__(
        self,
        source: Callable,
        n: int,
        p_max: int = 2,
        theta_samples: int | None = None,
        sup_bound: float | None = None,
        label: str = "",
    ):
        if p_max < 0:
            raise ValueError("p_max must be >= 0")
        self.source = source
        self.n = int(n)
        self.p_max = int(p_max)
        self.theta_samples = int(theta_samples or 4 * (self.p_max + 4))
        if self.theta_samples <= 2 * self.p_max:
            raise ValueError("theta_samples must exceed 2 * p_max")
        self.sup_bound = None if sup_bound is None else float(sup_bound)
        self.label = label
        self._cache: OrderedDict = OrderedDict()
        self._theta = _theta_grid(self.theta_samples, self.n)

    @classmethod
    def from_expression(cls, text: str, n: int, p_max: int = 2, **kw) -> "SlicedSymbol":
        return cls(compile_expression(text, n, allowed="rtz"), n, p_max, label=text, **kw)

    def with_sup_from(self, domain: DomainProfile, samples: int = 512) -> "SlicedSymbol":
        """Set the bound to the sampled sup of ``|phi|`` over the domain (padded by 5 %)."""
        if self.sup_bound is None:
            pts = sample_region(domain, samples, seed=7)
            z = (pts[:, None, :] * np.exp(1j * self._theta[None, :, :])).reshape(-1, self.n)
            self.sup_bound = 1.05 * float(np.max(np.abs(self.source(z)))) if len(z) else 0.0
        return self

    def indices(self) -> list[MultiIndex]:
        rng = range(-self.p_max, self.p_max + 1)
        return [MultiIndex(p) for p in itertools.product(rng, repeat=self.n)]

    def _coefficients(self, r: np.ndarray) -> np.ndarray:
        """Array ``(N,) + (theta_samples,)*n`` of all Fourier coefficients at radii ``r``."""
        r = np.atleast_2d(np.asarray(r, dtype=float))
        key = (r.shape, hash(r.tobytes()))
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        m = self.theta_samples
        shape = (m,) * self.n
        rot = np.exp(1j * self._theta)
        chunk = max(1, (1 << 21) // len(rot))
        out = np.empty((len(r),) + shape, dtype=complex)
        for s in range(0, len(r), chunk):
            rr = r[s : s + chunk]
            z = (rr[:, None, :] * rot[None, :, :]).reshape(-1, self.n)
            vals = np.asarray(self.source(z), dtype=complex).reshape((len(rr),) + shape)
            out[s : s + chunk] = np.fft.fftn(vals, axes=tuple(range(1, self.n + 1))) / m**self.n
        self._cache[key] = out
        if len(self._cache) > 6:
            self._cache.popitem(last=False)
        return out

    def slice_values(self, p: Sequence[int], r) -> np.ndarray:
        p = as_index(p, self.n)
        if max(abs(v) for v in p) > self.p_max:
            raise ValueError(f"slice {tuple(p)} beyond p_max={self.p_max}")
        c = self._coefficients(r)
        idx = (slice(None),) + tuple(v % self.theta_samples for v in p)
        return c[idx]

    def slice(self, p: Sequence[int]) -> QhSymbol:
        p = as_index(p, self.n)
        if self.sup_bound is None:
            raise ValueError("slice bounds need sup_bound (see with_sup_from)")
        return QhSymbol(lambda r: self.slice_values(p, r), p, self.sup_bound, f"slice{tuple(p)}[{self.label}]")

    def slices(self) -> dict[MultiIndex, QhSymbol]:
        return {p: self.slice(p) for p in self.indices()}

    def as_sum(self) -> SymbolSum:
        lo = MultiIndex([-self.p_max] * self.n)
        hi = MultiIndex([self.p_max + 1] * self.n)
        return SymbolSum(IndexBox(lo, hi), self.slices())

    def reconstruct(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        c = self._coefficients(np.abs(z))
        ang = np.angle(z)
        out = np.zeros(len(z), dtype=complex)
        for p in self.indices():
            idx = (slice(None),) + tuple(v % self.theta_samples for v in p)
            out += c[idx] * np.exp(1j * (ang @ np.asarray(p, dtype=float)))
        return out

    def truncation_residual(self, domain: DomainProfile, samples: int = 64, seed: int = 0) -> float:
        """Sup over sampled radii and the torus grid of ``|phi - sum_{|p|<=p_max} f_p e^{ip.theta}|``."""
        pts = sample_region(domain, samples, seed)
        if not len(pts):
            return 0.0
        z = (pts[:, None, :] * np.exp(1j * self._theta[None, :, :])).reshape(-1, self.n)
        return float(np.max(np.abs(self.source(z) - self.reconstruct(z))))


def g_profile(
    prior_twists: Sequence[Sequence[int]],
    twist: Sequence[int],
    f,
    domain: DomainProfile | None = None,
    sup_bound: float | None = None,
    start: Sequence[int] | None = None,
) -> RadialIntegrand:
    """``t -> f(sqrt t) t^(k_1 + ... + k_{j-1} + k_j / 2)`` as a radial integrand.

    ``f`` is a :class:`QhSymbol` (its radial part and bound are used) or a
    radial callable with ``sup_bound``.  When ``domain`` touches the
    coordinate hyperplanes, a negative exponent makes the profile unbounded
    and is rejected; passing ``start`` checks ``start + exponent`` instead,
    which is the exponent actually integrated against ``t^start``.
    """
    twist = as_index(twist)
    n = twist.n
    total = MultiIndex.zeros(n)
    for k in prior_twists:
        total = total + as_index(k, n)
    half = total * 2 + twist
    if isinstance(f, QhSymbol):
        radial, bound = f.radial, f.sup_bound
    else:
        if sup_bound is None:
            raise ValueError("a radial callable needs sup_bound")
        radial, bound = f, float(sup_bound)
    if domain is not None and domain.contains_origin:
        check = half if start is None else half + as_index(start, n) * 2
        if any(e < 0 for e in check):
            raise DomainError("unbounded profile: raise the starting index k0 so all exponents are >= 0")
    return RadialIntegrand(radial, tuple(half), bound)
