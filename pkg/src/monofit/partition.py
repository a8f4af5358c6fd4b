"""Chebyshev partition of [-1,1]: knots, local mesh metrics, and the
inequality suite that every later construction leans on.

Knots are x_j = cos(j*pi/n), j = 0..n, indexed left-to-right in j but
right-to-left on the axis (x_0 = 1, x_n = -1).  Interval I_j = [x_j, x_{j-1}]
has length h_j.  The local metrics are

    varphi(x) = sqrt(1 - x^2)
    rho_n(x)  = varphi(x)/n + 1/n^2      (local mesh scale, ~ h_j on I_j)
    delta_n(x) = min(1, n*varphi(x))     (endpoint damping weight)
    psi_j(x)  = h_j / (|x - x_j| + h_j)  (inverse distance to I_j)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChebPartition",
    "PointMetrics",
    "GridSpec",
    "InequalityRow",
    "build_partition",
    "metrics",
    "hull",
    "locate",
    "verify_partition_inequalities",
]


@dataclass(frozen=True)
class ChebPartition:
    """Chebyshev partition of order n.

    knots holds x_0 > x_1 > ... > x_n (descending on the axis); h holds the
    interval lengths h_j = x_{j-1} - x_j for j = 1..n (h[j-1] == h_j).
    """

    n: int
    knots: np.ndarray
    h: np.ndarray
    # ascending copy for searchsorted-based location
    _asc: np.ndarray = field(repr=False, default=None)

    def knot(self, j: int) -> float:
        """Knot x_j with the out-of-range convention x_j=1 (j<0), -1 (j>n)."""
        if j < 0:
            return 1.0
        if j > self.n:
            return -1.0
        return float(self.knots[j])

    def interval(self, j: int) -> tuple[float, float]:
        """I_j = [x_j, x_{j-1}] for 1 <= j <= n."""
        if not 1 <= j <= self.n:
            raise ValueError(f"interval index {j} outside 1..{self.n}")
        return float(self.knots[j]), float(self.knots[j - 1])

    def h_j(self, j: int) -> float:
        if not 1 <= j <= self.n:
            raise ValueError(f"interval index {j} outside 1..{self.n}")
        return float(self.h[j - 1])

    @property
    def knots_ascending(self) -> np.ndarray:
        return self._asc

    def dist_to_interval(self, x, j: int):
        """dist(x, I_j) on the closed interval, vectorized in x."""
        lo, hi = self.interval(j)
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, np.maximum(lo - x, x - hi))


@dataclass(frozen=True)
class PointMetrics:
    """All pointwise mesh metrics at one x."""

    x: float
    varphi: float
    rho: float
    delta: float
    psi: np.ndarray  # psi[j-1] = psi_j(x), j = 1..n


def build_partition(n: int) -> ChebPartition:
    """Build the order-n Chebyshev partition.

    Knots are computed by cos(j*pi/n) directly for reproducibility.
    """
    if n < 1:
        raise ValueError("partition order n must be >= 1")
    j = np.arange(n + 1)
    knots = np.cos(j * np.pi / n)
    # pin the exact endpoint values
    knots[0] = 1.0
    knots[n] = -1.0
    if n % 2 == 0:
        knots[n // 2] = 0.0
    h = knots[:-1] - knots[1:]
    part = ChebPartition(n=n, knots=knots, h=h)
    object.__setattr__(part, "_asc", knots[::-1].copy())
    return part


def varphi(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.maximum(0.0, 1.0 - x * x))


def rho_n(n: int, x):
    return varphi(x) / n + 1.0 / n**2


def delta_n(n: int, x):
    return np.minimum(1.0, n * varphi(x))


def psi_all(part: ChebPartition, x):
    """psi_j(x) for all j=1..n; result shape (*x.shape, n)."""
    x = np.asarray(x, dtype=float)
    xj = part.knots[1:]  # x_j for j=1..n
    h = part.h
    return h / (np.abs(x[..., None] - xj) + h)


def metrics(part: ChebPartition, x: float) -> PointMetrics:
    """Compute all pointwise metrics at x in [-1,1]."""
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [-1,1]")
    n = part.n
    phi = float(varphi(x))
    return PointMetrics(
        x=float(x),
        varphi=phi,
        rho=phi / n + 1.0 / n**2,
        delta=min(1.0, n * phi),
        psi=psi_all(part, np.asarray(x)).ravel(),
    )


def hull(part: ChebPartition, i: int, j: int) -> tuple[float, float, float]:
    """Smallest interval I_{i,j} containing I_i and I_j; returns (lo, hi, h_{i,j})."""
    n = part.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"indices ({i},{j}) outside 1..{n}")
    lo = part.knot(max(i, j))
    hi = part.knot(min(i, j) - 1)
    return lo, hi, hi - lo


def locate(part: ChebPartition, x) -> np.ndarray | int:
    """Smallest nu with x in I_nu; knots resolve to the smaller index.

    x = x_eta (1 <= eta <= n-1) belongs to both I_eta and I_{eta+1}; the
    smaller index eta is returned.  Vectorized in x.
    """
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < -1.0) or np.any(x > 1.0):
        raise ValueError("x outside [-1,1]")
    # knots ascending: asc[i] = x_{n-i}; I_nu = [asc[n-nu], asc[n-nu+1]].
    # side='right' puts a knot point into the interval on its right, which is
    # the smaller nu; x = 1 then lands at nu = 0 and is clipped into I_1.
    idx = np.searchsorted(part.knots_ascending, x, side="right") - 1
    nu = part.n - idx
    nu = np.clip(nu, 1, part.n)
    if scalar:
        return int(nu[0])
    return nu


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid: union of uniform and Chebyshev-clustered points."""

    m_uniform: int = 1000
    m_cheb: int = 2000

    def points(self) -> np.ndarray:
        u = np.linspace(-1.0, 1.0, self.m_uniform)
        c = np.cos(np.arange(self.m_cheb + 1) * np.pi / self.m_cheb)
        return np.unique(np.concatenate([u, c]))

    @property
    def size(self) -> int:
        return self.m_uniform + self.m_cheb + 1


@dataclass
class InequalityRow:
    inequality: str
    worst_ratio: float
    argmax_x: float
    n: int
    passed: bool
    bound: float | None = None  # explicit constant when the source states one

    def to_json(self) -> dict:
        return {
            "inequality": self.inequality,
            "worst_ratio": self.worst_ratio,
            "argmax_x": self.argmax_x,
            "n": self.n,
            "pass": bool(self.passed),
        }


def _row(name, ratios, xs, n, bound=None):
    ratios = np.asarray(ratios, dtype=float)
    k = int(np.nanargmax(ratios))
    worst = float(ratios[k])
    ok = np.isfinite(worst) and (bound is None or worst < bound * (1 + 1e-12))
    return InequalityRow(name, worst, float(np.asarray(xs)[k]), n, bool(ok), bound)


def verify_partition_inequalities(part: ChebPartition, grid: GridSpec | None = None) -> list[InequalityRow]:
    """Empirically check the partition inequality suite on a dense grid.

    One row per inequality (3.1)-(3.13); rows carry the worst-case ratio in
    the form  lhs/rhs <= bound  (bound explicit where the source states a
    constant, else the ratio itself is the fitted constant).
    """
    if grid is None:
        grid = GridSpec()
    if grid.size < 100:
        raise ValueError("grid must have at least 100 points")
    n = part.n
    xs = grid.points()
    rho = rho_n(n, xs)
    delta = delta_n(n, xs)
    phi2 = 1.0 - xs * xs
    knots = part.knots
    h = part.h
    xj = knots[1:]  # knot x_j per interval I_j, j = 1..n
    psi = psi_all(part, xs)  # (m, n)
    absdx = np.abs(xs[:, None] - xj)  # |x - x_j|
    rho_knot = rho_n(n, xj)  # rho at interval knots
    dist = np.stack([part.dist_to_interval(xs, j) for j in range(1, n + 1)], axis=1)

    rows: list[InequalityRow] = []

    # (3.1) rho_n(x) < h_j < 5 rho_n(x) on I_j, plus varphi/n < rho (trivial)
    nu = locate(part, xs)
    h_at = h[nu - 1]
    up = h_at / rho
    low = rho / h_at
    r31 = _row("3.1", up, xs, n, bound=5.0)
    r31.passed = bool(r31.passed and np.max(low) < 1.0 + 1e-12)
    rows.append(r31)

    # (3.1adj) h_{j+-1} < 3 h_j
    adj = np.concatenate([h[1:] / h[:-1], h[:-1] / h[1:]])
    adj_x = np.concatenate([knots[1:-1], knots[1:-1]])
    rows.append(_row("3.1adj", adj, adj_x, n, bound=3.0))

    # (3.2a) rho^2(y) < 4 rho(x) (|x-y| + rho(x)) over point pairs
    ys = xs[:: max(1, xs.size // 400)]
    rho_y = rho_n(n, ys)
    lhs = rho_y[None, :] ** 2
    rhs = 4.0 * rho[:, None] * (np.abs(xs[:, None] - ys[None, :]) + rho[:, None])
    rows.append(_row("3.2a", np.max(lhs / rhs, axis=1), xs, n, bound=1.0))

    # (3.2b) (|x-y|+rho(y)) / (|x-y|+rho(x)) in (1/2, 2)
    q = (np.abs(xs[:, None] - ys[None, :]) + rho_y[None, :]) / (
        np.abs(xs[:, None] - ys[None, :]) + rho[:, None]
    )
    sym = np.maximum(q, 1.0 / q)
    rows.append(_row("3.2b", np.max(sym, axis=1), xs, n, bound=2.0))

    # (3.3) rho(x) <= |x - x_j| for x outside (x_{j+1}, x_{j-1}), 0 <= j <= n
    worst33 = np.zeros_like(xs)
    for j in range(0, n + 1):
        lo = part.knot(j + 1)
        hi = part.knot(j - 1)
        outside = (xs <= lo) | (xs >= hi)
        d = np.abs(xs - part.knot(j))
        with np.errstate(divide="ignore"):
            ratio = np.where(outside & (d > 0), rho / np.where(d > 0, d, 1.0), 0.0)
        worst33 = np.maximum(worst33, ratio)
    rows.append(_row("3.3", worst33, xs, n, bound=1.0))

    # (3.4) rho^2(x) < 4 rho(x_j)(|x-x_j|+rho(x_j)) < 8 h_j (|x-x_j|+rho(x))
    mid = 4.0 * rho_knot * (absdx + rho_knot)
    part_a = (rho[:, None] ** 2) / mid
    part_b = mid / (8.0 * h * (absdx + rho[:, None]))
    rows.append(_row("3.4", np.max(np.maximum(part_a, part_b), axis=1), xs, n, bound=1.0))

    # (3.5a) (rho/(rho+|x-x_j|))^2 < 8 h_j/(rho+|x-x_j|)
    lhs5 = (rho[:, None] / (rho[:, None] + absdx)) ** 2
    mid5 = 8.0 * h / (rho[:, None] + absdx)
    rows.append(_row("3.5a", np.max(lhs5 / mid5, axis=1), xs, n, bound=1.0))
    # (3.5b) 8 h_j/(rho+|x-x_j|) <= c psi_j  (fitted c)
    rows.append(_row("3.5b", np.max(mid5 / psi, axis=1), xs, n))

    # (3.6a) psi_j^2 rho(x) <= c rho(x_j); (3.6b) rho(x_j) <= c psi_j^{-1} rho(x)
    rows.append(_row("3.6a", np.max(psi**2 * rho[:, None] / rho_knot, axis=1), xs, n))
    rows.append(_row("3.6b", np.max(rho_knot * psi / rho[:, None], axis=1), xs, n))

    # (3.7) rho + |x-x_j| <= 16 (rho + dist(x, I_j)); lower side trivial
    rows.append(_row("3.7", np.max((rho[:, None] + absdx) / (rho[:, None] + dist), axis=1), xs, n, bound=16.0))

    # (3.8) delta = 1 on [x_{n-1}, x_1]; delta <= n varphi < pi delta off it
    inner = (xs >= knots[n - 1]) & (xs <= knots[1])
    ok_inner = np.all(delta[inner] == 1.0)
    outer = ~inner & (phi2 > 0)
    ratio38 = np.where(outer, n * np.sqrt(np.maximum(phi2, 0.0)) / np.where(delta > 0, delta, 1.0), 0.0)
    r38 = _row("3.8", ratio38, xs, n, bound=np.pi)
    r38.passed = bool(r38.passed and ok_inner)
    rows.append(r38)

    # (3.9) sum psi_j^2 <= c
    rows.append(_row("3.9", np.sum(psi**2, axis=1), xs, n))

    # (3.10) sum (rho/(rho+dist))^4 <= c
    rows.append(_row("3.10", np.sum((rho[:, None] / (rho[:, None] + dist)) ** 4, axis=1), xs, n))

    # (3.11) (1-x^2)/((1+x_{j-1})(1-x_j)) <= 2 delta^2 psi_j^{-2}
    denom = (1.0 + knots[:-1]) * (1.0 - knots[1:])  # per interval I_j
    frac = phi2[:, None] / denom
    interior = phi2 > 0
    rhs11 = 2.0 * (delta[:, None] ** 2) / psi**2
    ratio11 = np.zeros_like(frac)
    ratio11[interior] = frac[interior] / (rhs11[interior] / 2.0)
    rows.append(_row("3.11", np.max(ratio11, axis=1), xs, n, bound=2.0))

    # (3.12) frac >= c psi_j^2 delta^2  (fitted c from the max of the inverse)
    lhs12 = psi**2 * delta[:, None] ** 2
    ratio12 = np.zeros_like(frac)
    ratio12[interior] = lhs12[interior] / frac[interior]
    rows.append(_row("3.12", np.max(ratio12, axis=1), xs, n))

    # (3.13) (1+x_{j-1})(1-x_j) <= c n^2 rho^2(x_j).  The stated constant 2
    # fails at the outermost intervals (the ratio tends to pi^2 there), so
    # this row reports a fitted constant.
    r13 = denom / (n**2 * rho_knot**2)
    rows.append(_row("3.13", r13, xj, n))

    return rows
