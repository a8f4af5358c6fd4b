"""Polynomial plumbing: Chebyshev-basis arithmetic, Gauss-Legendre
quadrature, integral-form (kernel) polynomials, and the monotonicity check.

High-degree constructions are never expanded into coefficients; they are
represented as `base + scale * cumulative integral of a pointwise-evaluable
kernel` with composite quadrature plans aligned to the mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import numpy.polynomial.chebyshev as npcheb

__all__ = [
    "ChebSeries",
    "KernelPoly",
    "SumPoly",
    "MonotoneReport",
    "cheb_eval",
    "cheb_arith",
    "cheb_calculus",
    "gauss_integrate",
    "check_monotone",
    "cheb_grid",
]

DEGREE_CAP = 200_000
_GL_NODE_CAP = 520


class CapacityError(RuntimeError):
    """Degree bookkeeping exceeded the configured cap."""


@dataclass
class ChebSeries:
    """Dense polynomial in the Chebyshev-T basis on [-1,1]."""

    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if self.coeffs.size - 1 > DEGREE_CAP:
            raise CapacityError(f"degree {self.coeffs.size - 1} exceeds cap {DEGREE_CAP}")

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) if nz.size else 0

    def eval(self, x):
        return cheb_eval(self, x)

    __call__ = eval

    def deriv(self, x):
        return cheb_eval(cheb_calculus(self, "differentiate"), x)


def cheb_eval(p: ChebSeries, x):
    """Evaluate by the backward (Clenshaw) three-term recurrence."""
    return npcheb.chebval(np.asarray(x, dtype=float), p.coeffs)


def cheb_arith(p: ChebSeries, q: ChebSeries, op: str) -> ChebSeries:
    """add / mul with exact degree bookkeeping."""
    if op == "add":
        return ChebSeries(npcheb.chebadd(p.coeffs, q.coeffs))
    if op == "mul":
        if p.degree + q.degree > DEGREE_CAP:
            raise CapacityError(f"product degree {p.degree + q.degree} exceeds cap")
        return ChebSeries(npcheb.chebmul(p.coeffs, q.coeffs))
    raise ValueError(f"unknown op {op!r}")


def cheb_calculus(p: ChebSeries, op: str) -> ChebSeries:
    """differentiate / antidifferentiate (antiderivative vanishes at -1)."""
    if op == "differentiate":
        return ChebSeries(npcheb.chebder(p.coeffs))
    if op == "antidifferentiate":
        return ChebSeries(npcheb.chebint(p.coeffs, lbnd=-1.0))
    raise ValueError(f"unknown op {op!r}")


@lru_cache(maxsize=64)
def _leggauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    g, w = np.polynomial.legendre.leggauss(m)
    return g, w


def gauss_integrate(kernel: Callable, a: float, b: float, poly_degree: int) -> float:
    """Integrate a polynomial-valued kernel over [a, b].

    Exact (to roundoff) for polynomials up to poly_degree via a single
    Gauss-Legendre rule with ceil((d+1)/2) nodes; falls back to equal-width
    composite panels when the node count exceeds the table cap.
    """
    if a > b:
        raise ValueError("need a <= b")
    if a == b:
        return 0.0
    m = max(1, (int(poly_degree) + 2) // 2)
    if m <= _GL_NODE_CAP:
        g, w = _leggauss(m)
        half = 0.5 * (b - a)
        y = 0.5 * (a + b) + half * g
        return float(half * np.dot(w, np.asarray(kernel(y), dtype=float)))
    panels = int(np.ceil(m / _GL_NODE_CAP))
    g, w = _leggauss(_GL_NODE_CAP)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        y = 0.5 * (lo + hi) + half * g
        total += half * np.dot(w, np.asarray(kernel(y), dtype=float))
    return float(total)


@dataclass
class CumulativePlan:
    """Composite quadrature plan for x -> integral from -1 to x of a kernel.

    Panels follow ascending breakpoints (normally the Chebyshev knots); each
    panel uses the same m-point Gauss-Legendre rule.  Full-panel integrals
    are prefix-summed once; evaluation adds a single partial panel.
    """

    breaks: np.ndarray          # ascending, breaks[0] = -1, breaks[-1] = 1
    m: int
    kernel: Callable            # vectorized y -> kernel(y)
    prefix: np.ndarray = field(default=None)  # prefix[i] = integral over breaks[0..i]

    def __post_init__(self):
        g, w = _leggauss(self.m)
        lo = self.breaks[:-1]
        hi = self.breaks[1:]
        half = 0.5 * (hi - lo)[:, None]
        ymat = 0.5 * (lo + hi)[:, None] + half * g[None, :]
        vals = np.asarray(self.kernel(ymat), dtype=float)
        panel = np.sum(vals * w[None, :], axis=1) * half[:, 0]
        self.prefix = np.concatenate([[0.0], np.cumsum(panel)])

    @property
    def total(self) -> float:
        return float(self.prefix[-1])

    def cumulative(self, x) -> np.ndarray:
        """Integral from breaks[0] to x, vectorized."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1,
                      0, self.breaks.size - 2)
        a = self.breaks[idx]
        g, w = _leggauss(self.m)
        half = 0.5 * (x - a)
        ymat = 0.5 * (x + a)[:, None] + half[:, None] * g[None, :]
        vals = np.asarray(self.kernel(ymat), dtype=float)
        partial = np.sum(vals * w[None, :], axis=1) * half
        return self.prefix[idx] + partial


@dataclass
class KernelPoly:
    """Polynomial in integral form: base + scale * int_{-1}^x kernel(y) dy.

    The kernel is a nonnegative (or sign-known) polynomial of recorded
    degree; the derivative is scale * kernel, so sign properties are exact.
    """

    base: float
    scale: float
    plan: CumulativePlan
    kernel_degree: int

    @property
    def degree(self) -> int:
        return self.kernel_degree + 1

    def eval(self, x):
        out = self.base + self.scale * self.plan.cumulative(x)
        return out if out.size > 1 else float(out[0])

    __call__ = eval

    def deriv(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.scale * np.asarray(self.plan.kernel(x), dtype=float)
        return out if out.size > 1 else float(out[0])


@dataclass
class SumPoly:
    """Linear combination of evaluable polynomials."""

    weights: list
    parts: list

    @property
    def degree(self) -> int:
        return max((p.degree for p in self.parts), default=0)

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        acc = np.zeros_like(x)
        for w, p in zip(self.weights, self.parts):
            if w != 0.0:
                acc += w * np.asarray(p.eval(x), dtype=float)
        return acc if acc.size > 1 else float(acc[0])

    __call__ = eval

    def deriv(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        acc = np.zeros_like(x)
        for w, p in zip(self.weights, self.parts):
            if w != 0.0:
                acc += w * np.asarray(p.deriv(x), dtype=float)
        return acc if acc.size > 1 else float(acc[0])


@dataclass
class MonotoneReport:
    min_deriv: float
    argmin_x: float
    max_abs_deriv: float
    tol: float
    passed: bool
    npoints: int


def cheb_grid(m: int) -> np.ndarray:
    """m+1 Chebyshev-clustered points cos(k pi / m) on [-1,1], ascending."""
    return np.cos(np.arange(m, -1, -1) * np.pi / m)


def check_monotone(p, degree: int, tol: float = 1e-9,
                   npoints: int | None = None) -> MonotoneReport:
    """Sample p' on a Chebyshev-clustered grid and test for sign violations.

    p must expose deriv(x); passes when min p' >= -tol * max(1, max|p'|).
    """
    if npoints is None:
        npoints = max(4 * int(degree), 2000)
    xs = cheb_grid(npoints)
    dv = np.asarray(p.deriv(xs), dtype=float)
    mn = float(np.min(dv))
    mx = float(np.max(np.abs(dv)))
    k = int(np.argmin(dv))
    passed = mn >= -tol * max(1.0, mx)
    return MonotoneReport(min_deriv=mn, argmin_x=float(xs[k]), max_abs_deriv=mx,
                          tol=tol, passed=bool(passed), npoints=npoints)
