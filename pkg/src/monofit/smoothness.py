"""Finite differences, moduli of smoothness, and majorant classes.

A k-majorant is a continuous nondecreasing psi on [0, inf) with psi(0) = 0
and t^{-k} psi(t) nonincreasing.  Moduli omega_k computed here are grid
lower estimates that converge from below as the search density grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Majorant",
    "SmoothFunction",
    "finite_difference",
    "modulus",
    "modulus_table",
    "star_majorant",
    "compose_phi",
]

_MAJORANT_GRID = np.exp(np.linspace(np.log(1e-8), np.log(4.0), 400))


def binomial(k: int, i: int) -> float:
    return float(math.comb(k, i))


def finite_difference(f: Callable, x: float, u: float, k: int,
                      domain: tuple[float, float] = (-1.0, 1.0)) -> float:
    """Symmetric k-th difference of f at x with step u.

    Returns 0 exactly when x +- (k/2)u leaves the domain.
    """
    if u <= 0:
        raise ValueError("step u must be positive")
    a, b = domain
    if x - k * u / 2.0 < a or x + k * u / 2.0 > b:
        return 0.0
    return float(sum((-1) ** i * binomial(k, i) * f(x + (k / 2.0 - i) * u)
                     for i in range(k + 1)))


def _diff_grid(f: Callable, us: np.ndarray, xs: np.ndarray, k: int,
               domain: tuple[float, float]) -> float:
    """max over the (u, x) grid of |Delta^k_u f(x)|, vectorized."""
    a, b = domain
    coef = np.array([(-1) ** i * binomial(k, i) for i in range(k + 1)])
    best = 0.0
    for u in us:
        x_ok = xs[(xs - k * u / 2.0 >= a) & (xs + k * u / 2.0 <= b)]
        if x_ok.size == 0:
            continue
        acc = np.zeros_like(x_ok)
        for i in range(k + 1):
            acc += coef[i] * np.asarray(f(x_ok + (k / 2.0 - i) * u), dtype=float)
        m = float(np.max(np.abs(acc)))
        if m > best:
            best = m
    return best


def modulus(f: Callable, k: int, t: float,
            domain: tuple[float, float] = (-1.0, 1.0),
            density: int = 512) -> float:
    """Lower estimate of omega_k(f, t; domain) by grid search.

    Searches a density x density grid of (u, x) pairs; converges to the
    modulus from below as density grows.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if density < 64:
        raise ValueError("density must be >= 64")
    a, b = domain
    t_eff = min(t, (b - a) / k)
    us = np.linspace(t_eff / density, t_eff, density)
    xs = np.linspace(a, b, density + 1)
    return _diff_grid(f, us, xs, k, domain)


def modulus_table(f: Callable, k: int, ts: Sequence[float],
                  domain: tuple[float, float] = (-1.0, 1.0),
                  density: int = 512) -> np.ndarray:
    """omega_k(f, t) estimates for an increasing sequence of t values.

    Reuses the cumulative structure: omega at larger t is the running max.
    """
    ts = np.asarray(ts, dtype=float)
    a, b = domain
    xs = np.linspace(a, b, density + 1)
    t_max = min(float(ts[-1]), (b - a) / k)
    us = np.linspace(t_max / density, t_max, density)
    per_u = np.empty(us.size)
    coef = np.array([(-1) ** i * binomial(k, i) for i in range(k + 1)])
    for m, u in enumerate(us):
        x_ok = xs[(xs - k * u / 2.0 >= a) & (xs + k * u / 2.0 <= b)]
        if x_ok.size == 0:
            per_u[m] = 0.0
            continue
        acc = np.zeros_like(x_ok)
        for i in range(k + 1):
            acc += coef[i] * np.asarray(f(x_ok + (k / 2.0 - i) * u), dtype=float)
        per_u[m] = float(np.max(np.abs(acc)))
    running = np.maximum.accumulate(per_u)
    out = np.empty(ts.size)
    for idx, t in enumerate(ts):
        j = int(np.searchsorted(us, min(t, t_max), side="right")) - 1
        out[idx] = running[j] if j >= 0 else 0.0
    return out


@dataclass
class Majorant:
    """A k-majorant: nondecreasing, zero at zero, t^{-k} eval(t) nonincreasing."""

    k: int
    eval: Callable
    kind: str = "closed-form"

    def __call__(self, t):
        return self.eval(t)

    def check(self, grid: np.ndarray | None = None, rtol: float = 1e-12) -> bool:
        """Grid check of the majorant invariants."""
        g = _MAJORANT_GRID if grid is None else grid
        v = np.asarray(self.eval(g), dtype=float)
        if np.any(v < -rtol):
            return False
        scale = max(float(np.max(np.abs(v))), 1e-300)
        if abs(float(self.eval(0.0))) > rtol * scale:
            return False
        if np.any(np.diff(v) < -rtol * scale):
            return False
        w = v / g**self.k
        wscale = np.max(np.abs(w))
        if wscale > 0 and np.any(np.diff(w) > rtol * wscale):
            return False
        return True

    @staticmethod
    def power(k: int, exponent: float, coeff: float = 1.0) -> "Majorant":
        """c * t^s with 0 < s <= k; trivially a k-majorant."""
        if not 0 < exponent <= k:
            raise ValueError("power majorant needs 0 < exponent <= k")

        def ev(t, s=exponent, c=coeff):
            t = np.asarray(t, dtype=float)
            return c * np.where(t > 0, t, 0.0) ** s

        return Majorant(k=k, eval=ev, kind="closed-form")

    @staticmethod
    def zero(k: int) -> "Majorant":
        return Majorant(k=k, eval=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                        kind="closed-form")

    @staticmethod
    def from_table(ts: np.ndarray, vals: np.ndarray, k: int) -> "Majorant":
        """Majorant interpolating (ts, vals) by piecewise power laws.

        Log-log linear interpolation with per-segment exponents clamped into
        [0, k] keeps both monotonicity invariants exact between nodes.  Below
        the first node the extension is ~t^k; above the last it is constant.
        """
        ts = np.asarray(ts, dtype=float)
        vals = np.asarray(vals, dtype=float)
        keep = vals > 0
        if not np.any(keep):
            return Majorant.zero(k)
        ts = ts[keep]
        vals = np.maximum.accumulate(vals[keep])  # enforce nondecreasing
        if ts.size == 1:
            t0, v0 = float(ts[0]), float(vals[0])

            def ev_single(t, t0=t0, v0=v0, k=k):
                t = np.asarray(t, dtype=float)
                return np.where(t >= t0, v0, v0 * (np.maximum(t, 0.0) / t0) ** k)

            return Majorant(k=k, eval=ev_single, kind="tabulated")

        logt = np.log(ts)
        logv = np.log(vals)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.diff(logv) / np.diff(logt)
        s = np.clip(np.nan_to_num(s, nan=0.0), 0.0, float(k))

        def ev(t, ts=ts, vals=vals, s=s, k=k):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            out = np.empty_like(t)
            below = t < ts[0]
            above = t >= ts[-1]
            mid = ~(below | above)
            out[below] = vals[0] * (np.maximum(t[below], 0.0) / ts[0]) ** k
            out[above] = vals[-1]
            if np.any(mid):
                idx = np.clip(np.searchsorted(ts, t[mid], side="right") - 1, 0, s.size - 1)
                out[mid] = vals[idx] * (t[mid] / ts[idx]) ** s[idx]
            return out if out.size > 1 else float(out[0])

        return Majorant(k=k, eval=ev, kind="tabulated")


def star_majorant(phi: Callable, k_plus_r: int,
                  grid: np.ndarray | None = None) -> Majorant:
    """Regularize phi into the majorant class of order k_plus_r.

    Computes phi*(t) = sup_{u > t} t^K u^{-K} phi(u) on a log grid and wraps
    the result as a table majorant; phi <= phi* <= 2^k phi on the grid for
    phi of the form t^r omega_k.
    """
    g = _MAJORANT_GRID if grid is None else np.asarray(grid, dtype=float)
    v = np.asarray(phi(g), dtype=float)
    if np.any(np.diff(v) < -1e-12 * max(float(np.max(np.abs(v))), 1e-300)):
        raise ValueError("phi must be nondecreasing on the grid")
    K = k_plus_r
    # running sup from the right of u^{-K} phi(u); sup over u > t realized on grid
    w = v / g**K
    sup_right = np.maximum.accumulate(w[::-1])[::-1]
    star_vals = g**K * sup_right
    maj = Majorant.from_table(g, star_vals, K)
    maj.kind = "star-regularized"
    return maj


def compose_phi(r: int, psi: Majorant) -> Majorant:
    """phi(t) = t^r psi(t); a majorant of order r + psi.k."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return psi

    def ev(t, r=r, base=psi.eval):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, t, 0.0) ** r * np.asarray(base(t), dtype=float)

    return Majorant(k=r + psi.k, eval=ev, kind="power-composed")


@dataclass
class SmoothFunction:
    """A function on [-1,1] with r explicit derivatives.

    d[i] is the i-th derivative (d[0] = f); monotone_flag asserts f is
    nondecreasing.
    """

    r: int
    d: list
    monotone_flag: bool = False
    name: str = ""
    omega2_r: Callable | None = None  # optional closed form of omega_2(f^{(r)}, .)
    _omega_cache: dict = field(default_factory=dict, repr=False)

    @property
    def f(self) -> Callable:
        return self.d[0]

    def __call__(self, x):
        return self.d[0](x)

    def validate(self, npoints: int = 1000, fd_rtol: float = 1e-6) -> list[str]:
        """Grid checks of the declared structure; returns a list of violations."""
        problems = []
        if len(self.d) != self.r + 1:
            problems.append(f"expected {self.r + 1} derivative callables, got {len(self.d)}")
            return problems
        xs = np.linspace(-1.0, 1.0, npoints)
        vals = np.asarray(self.d[0](xs), dtype=float)
        rng = float(np.max(vals) - np.min(vals))
        if self.monotone_flag and np.any(np.diff(vals) < -1e-12 * max(rng, 1.0)):
            problems.append("monotone_flag set but values decrease on the grid")
        # central differences of d[i] against d[i+1] away from possible kinks
        hs = 1e-5
        xi = np.linspace(-1.0 + 2 * hs, 1.0 - 2 * hs, 201)
        for i in range(self.r):
            approx = (np.asarray(self.d[i](xi + hs), dtype=float)
                      - np.asarray(self.d[i](xi - hs), dtype=float)) / (2 * hs)
            exact = np.asarray(self.d[i + 1](xi), dtype=float)
            scale = max(float(np.max(np.abs(exact))), 1.0)
            err = np.abs(approx - exact)
            # a kink of d[i+1] inflates a few central differences; require the
            # bulk of the grid to agree
            if np.mean(err > fd_rtol * scale * 10) > 0.02:
                problems.append(f"derivative d[{i + 1}] inconsistent with d[{i}]")
        return problems

    def omega2_of_rth(self, ts, density: int = 512):
        """omega_2(f^{(r)}, t): closed form if declared, else cached brute force."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.omega2_r is not None:
            out = np.asarray(self.omega2_r(ts), dtype=float)
            return out if out.size > 1 else float(out[0])
        key = ("table", density)
        if key not in self._omega_cache:
            tgrid = np.exp(np.linspace(np.log(1e-4), np.log(2.0), 60))
            vals = modulus_table(self.d[self.r], 2, tgrid, density=density)
            self._omega_cache[key] = Majorant.from_table(tgrid, vals, 2)
        out = np.asarray(self._omega_cache[key].eval(ts), dtype=float)
        return out if out.size > 1 else float(out[0])
