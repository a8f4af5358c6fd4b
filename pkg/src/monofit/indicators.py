"""Polynomial approximants of the step functions chi_j = 1_[x_j, 1].

The building block is the positive kernel

    t_j(x) = (cos(2n arccos x)/(x - x_j^0))^2 + (sin(2n arccos x)/(x - xbar_j))^2,

a polynomial of degree 4n-2 whose removable singularities sit at a root
x_j^0 of T_{2n} and a root xbar_j of U_{2n-1}.  Both quotients are evaluated
through the exact trigonometric deflation

    T_{2n}(x)/(x - x0) = sin(2n t0) sin(2n d) / (2 sin((t+t0)/2) sin(d/2)),

d = t - t0, which is stable uniformly in x (no cancellation survives), so
no coefficient expansion is ever needed.  The smoothed steps are

    tau_j(x)      = d_j^{-1}    int_{-1}^x (1-y^2)^xi t_j^mu(y) dy
    tau~_j(x)     = d~_j^{-1}   int_{-1}^x (y-x_j)(x_{j-1}-y)(1-y^2)^xi t_j^mu(y) dy

normalized to equal 1 at x = 1; tau_j is nondecreasing, tau~_j is
nonincreasing outside (x_j, x_{j-1}).  Integrals use composite Gauss panels
aligned with the partition, so the per-panel oscillation count is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .partition import ChebPartition, delta_n, psi_all, rho_n
from .polynomials import _leggauss
from .reports import FittedConstantRow

__all__ = [
    "IndicatorKernel",
    "IndicatorPoly",
    "TauFamily",
    "kernel_t",
    "build_tau",
    "build_tau_tilde",
    "verify_indicator_bounds",
    "profile_params",
]

INDICATOR_DEGREE_CAP = 2_000_000


class CapacityError(RuntimeError):
    pass


def profile_params(profile: str, alpha: float, beta: float, form: str) -> tuple[int, int]:
    """(xi, mu) for the requested profile.

    'theoretical' uses the exponent recipes behind the decay claims;
    'practical' pins (2, 6) for desk-scale runs where only qualitative decay
    is asserted.
    """
    if profile == "practical":
        return 2, 6
    if profile != "theoretical":
        raise ValueError(f"unknown profile {profile!r}")
    if form == "tau":
        if min(alpha, beta) < 1:
            raise ValueError("theoretical tau profile needs alpha, beta >= 1")
        return math.ceil(3 * alpha), math.ceil(10 * alpha + 10 * beta)
    if form == "tau_tilde":
        return math.ceil(alpha / 2), math.ceil(beta + 5 * alpha) + 25
    raise ValueError(f"unknown form {form!r}")


def _sinc_ratio(two_n: int, d: np.ndarray) -> np.ndarray:
    """sin(two_n * d) / sin(d/2), finite at d = 0 (limit 2*two_n)."""
    half = 0.5 * d
    s = np.sin(half)
    num = np.sin(two_n * d)
    out = np.where(s != 0.0, num / np.where(s != 0.0, s, 1.0), float(2 * two_n))
    return out


@dataclass
class IndicatorKernel:
    """The positive kernel t_j for one interval index j."""

    part: ChebPartition
    j: int
    xbar: float
    x0: float
    theta_bar: float
    theta_0: float
    s0: float    # sin(2n theta_0), = +-1
    cbar: float  # cos(2n theta_bar), = +-1

    @property
    def n(self) -> int:
        return self.part.n

    @property
    def degree(self) -> int:
        return 4 * self.part.n - 2

    def quotients(self, y, theta=None):
        """(T_{2n}(y)/(y-x0), sin(2n arccos y)/(y-xbar)), vectorized."""
        y = np.asarray(y, dtype=float)
        if theta is None:
            theta = np.arccos(np.clip(y, -1.0, 1.0))
        two_n = 2 * self.n
        d0 = theta - self.theta_0
        q1 = self.s0 * _sinc_ratio(two_n, d0) / (2.0 * np.sin(0.5 * (theta + self.theta_0)))
        db = theta - self.theta_bar
        q2 = -self.cbar * _sinc_ratio(two_n, db) / (2.0 * np.sin(0.5 * (theta + self.theta_bar)))
        return q1, q2

    def eval(self, y, theta=None):
        q1, q2 = self.quotients(y, theta)
        return q1 * q1 + q2 * q2

    __call__ = eval


def kernel_t(part: ChebPartition, j: int) -> IndicatorKernel:
    """Kernel t_j for 1 <= j <= n-1."""
    n = part.n
    if not 1 <= j <= n - 1:
        raise ValueError(f"kernel index {j} outside 1..{n - 1}")
    theta_bar = (j - 0.5) * np.pi / n
    if j < n / 2:
        theta_0 = (j - 0.25) * np.pi / n
    else:
        theta_0 = (j - 0.75) * np.pi / n
    return IndicatorKernel(
        part=part,
        j=j,
        xbar=float(np.cos(theta_bar)),
        x0=float(np.cos(theta_0)),
        theta_bar=float(theta_bar),
        theta_0=float(theta_0),
        s0=float(np.sign(np.sin(2 * n * theta_0))),
        cbar=float(np.sign(np.cos(2 * n * theta_bar))),
    )


def _panel_nodes(mu: int, xi: int) -> int:
    # each partition interval sees ~2 mu oscillation periods of t_j^mu;
    # this node count keeps composite Gauss at roundoff (validated in tests
    # against a doubled-node rule)
    return max(64, int(3.5 * mu) + 2 * xi + 16)


class TauFamily:
    """All tau_j (or tau~_j) of one partition at one (xi, mu) profile.

    Shares the quadrature geometry and the trigonometric work across j; the
    per-j cost is a pair of guarded divisions plus a power.
    """

    def __init__(self, part: ChebPartition, xi: int, mu: int, form: str = "tau",
                 m_panel: int | None = None):
        if form not in ("tau", "tau_tilde"):
            raise ValueError(f"unknown form {form!r}")
        n = part.n
        self.part = part
        self.xi = int(xi)
        self.mu = int(mu)
        self.form = form
        self.kernel_degree = 2 * self.xi + self.mu * (4 * n - 2) + (2 if form == "tau_tilde" else 0)
        if self.kernel_degree + 1 > INDICATOR_DEGREE_CAP:
            raise CapacityError(
                f"indicator degree {self.kernel_degree + 1} exceeds cap; "
                "use the practical profile")
        self.m = _panel_nodes(self.mu, self.xi) if m_panel is None else int(m_panel)
        self.breaks = part.knots_ascending  # ascending knots, -1..1
        g, w = _leggauss(self.m)
        self._g, self._w = g, w
        lo = self.breaks[:-1]
        hi = self.breaks[1:]
        self._half = 0.5 * (hi - lo)
        ynodes = 0.5 * (lo + hi)[:, None] + self._half[:, None] * g[None, :]
        self._full_parts = self._parts(ynodes)
        self._kernels: dict[int, IndicatorKernel] = {}
        self._prefix: dict[int, np.ndarray] = {}
        self._norm: dict[int, float] = {}

    def _parts(self, y: np.ndarray) -> dict:
        theta = np.arccos(np.clip(y, -1.0, 1.0))
        return {"y": y, "theta": theta, "w2": (1.0 - y * y) ** self.xi}

    def _kernel_values(self, parts: dict, j: int) -> np.ndarray:
        ker = self.kernel(j)
        t = ker.eval(parts["y"], theta=parts["theta"])
        vals = parts["w2"] * t**self.mu
        if self.form == "tau_tilde":
            xj, xjm1 = self.part.interval(j)
            y = parts["y"]
            vals = vals * (y - xj) * (xjm1 - y)
        return vals

    def kernel(self, j: int) -> IndicatorKernel:
        if j not in self._kernels:
            self._kernels[j] = kernel_t(self.part, j)
        return self._kernels[j]

    def _ensure(self, j: int):
        if j in self._prefix:
            return
        vals = self._kernel_values(self._full_parts, j)
        panel = np.sum(vals * self._w[None, :], axis=1) * self._half
        prefix = np.concatenate([[0.0], np.cumsum(panel)])
        d = float(prefix[-1])
        if not d > 0.0:
            raise ArithmeticError(
                f"nonpositive normalization for j={j} (form={self.form}, mu={self.mu}); "
                "increase mu")
        self._prefix[j] = prefix
        self._norm[j] = d

    def norm_const(self, j: int) -> float:
        self._ensure(j)
        return self._norm[j]

    def eval_many(self, js, xs) -> np.ndarray:
        """tau_j(x) for each j in js; shape (len(js), len(xs))."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        idx = np.clip(np.searchsorted(self.breaks, xs, side="right") - 1,
                      0, self.breaks.size - 2)
        a = self.breaks[idx]
        half = 0.5 * (xs - a)
        y = 0.5 * (xs + a)[:, None] + half[:, None] * self._g[None, :]
        parts = self._parts(y)
        out = np.empty((len(js), xs.size))
        for row, j in enumerate(js):
            self._ensure(j)
            vals = self._kernel_values(parts, j)
            partial = np.sum(vals * self._w[None, :], axis=1) * half
            out[row] = (self._prefix[j][idx] + partial) / self._norm[j]
        return out

    def deriv_many(self, js, xs) -> np.ndarray:
        """tau_j'(x) = kernel_j(x)/d_j for each j in js."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        parts = self._parts(xs)
        out = np.empty((len(js), xs.size))
        for row, j in enumerate(js):
            self._ensure(j)
            out[row] = self._kernel_values(parts, j) / self._norm[j]
        return out

    def build(self, j: int, alpha: float = 1.0, beta: float = 1.0) -> "IndicatorPoly":
        self._ensure(j)
        return IndicatorPoly(family=self, j=j, alpha=alpha, beta=beta)


@dataclass
class IndicatorPoly:
    """One smoothed step tau_j or tau~_j, evaluable with exact-sign derivative."""

    family: TauFamily
    j: int
    alpha: float
    beta: float

    @property
    def form(self) -> str:
        return self.family.form

    @property
    def xi(self) -> int:
        return self.family.xi

    @property
    def mu(self) -> int:
        return self.family.mu

    @property
    def d_norm(self) -> float:
        return self.family.norm_const(self.j)

    @property
    def degree(self) -> int:
        return self.family.kernel_degree + 1

    @property
    def part(self) -> ChebPartition:
        return self.family.part

    def eval(self, x):
        out = self.family.eval_many([self.j], x)[0]
        return out if out.size > 1 else float(out[0])

    __call__ = eval

    def deriv(self, x):
        out = self.family.deriv_many([self.j], x)[0]
        return out if out.size > 1 else float(out[0])

    def chi(self, x):
        """The target step chi_j = 1_[x_j, 1]."""
        xj = self.part.knots[self.j]
        return (np.asarray(x, dtype=float) >= xj).astype(float)


@dataclass
class TauSum:
    """base + sum_j weights[j] * tau_j over one family; evaluated in bulk."""

    family: TauFamily
    js: list
    weights: np.ndarray
    base: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)

    @property
    def degree(self) -> int:
        return self.family.kernel_degree + 1

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not self.js:
            out = np.full(x.size, self.base)
        else:
            out = self.base + self.weights @ self.family.eval_many(self.js, x)
        return out if out.size > 1 else float(out[0])

    __call__ = eval

    def deriv(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not self.js:
            out = np.zeros(x.size)
        else:
            out = self.weights @ self.family.deriv_many(self.js, x)
        return out if out.size > 1 else float(out[0])


def _resolved_family(part: ChebPartition, alpha: float, beta: float,
                     profile: str, form: str) -> TauFamily:
    xi, mu = profile_params(profile, alpha, beta, form)
    return TauFamily(part, xi, mu, form=form)


def build_tau(part: ChebPartition, j: int, alpha: float, beta: float,
              profile: str = "practical") -> IndicatorPoly:
    """Nondecreasing smoothed step tau_j with tau_j(-1)=0, tau_j(1)=1."""
    fam = _resolved_family(part, alpha, beta, profile, "tau")
    return fam.build(j, alpha, beta)


def build_tau_tilde(part: ChebPartition, j: int, alpha: float, beta: float,
                    profile: str = "practical") -> IndicatorPoly:
    """Smoothed step tau~_j, nonincreasing outside (x_j, x_{j-1})."""
    fam = _resolved_family(part, alpha, beta, profile, "tau_tilde")
    return fam.build(j, alpha, beta)


def verify_indicator_bounds(ip: IndicatorPoly, alpha: float, beta: float,
                            m_grid: int = 800) -> list[FittedConstantRow]:
    """Empirical extremal constants for the indicator decay/derivative bounds.

    Rows: the derivative floor (lower bound, reported as the grid minimum of
    the ratio), the first-derivative ceiling, an approximate second-derivative
    ceiling by finite differences, and the step-approximation decay.
    """
    part = ip.part
    n = part.n
    j = ip.j
    xs = np.cos(np.arange(m_grid, -1, -1) * np.pi / m_grid)
    rho = rho_n(n, xs)
    delta = delta_n(n, xs)
    psi = psi_all(part, xs)[:, j - 1]
    hj = part.h_j(j)
    dv = np.asarray(ip.deriv(xs), dtype=float)
    vv = np.asarray(ip.eval(xs), dtype=float)
    chi = ip.chi(xs)
    interior = delta > 0

    rows = []
    # derivative floor: tau' >= C h^{-1} delta^{8a} psi^{30(a+b)}
    floor = delta**(8 * alpha) * psi**(30 * (alpha + beta)) / hj
    ratio = dv[interior] / floor[interior]
    rows.append(FittedConstantRow("L4.1", "(4.5)", n, f"j={j}",
                                  float(np.min(ratio)), kind="lower"))
    # first-derivative ceiling: |tau'| <= C h^{-1} delta^a psi^b
    ceil1 = delta**alpha * psi**beta / hj
    r1 = np.abs(dv[interior]) / ceil1[interior]
    rows.append(FittedConstantRow("L4.1" if ip.form == "tau" else "L4.2",
                                  "(4.6)q=1" if ip.form == "tau" else "(4.13)",
                                  n, f"j={j}", float(np.max(r1)), kind="upper"))
    # second derivative by central differences of the kernel (approximate)
    h_fd = 1e-6
    inner = xs[(xs > -1 + 2 * h_fd) & (xs < 1 - 2 * h_fd)]
    d2 = (np.asarray(ip.deriv(inner + h_fd)) - np.asarray(ip.deriv(inner - h_fd))) / (2 * h_fd)
    rho_i = rho_n(n, inner)
    delta_i = delta_n(n, inner)
    psi_i = psi_all(part, inner)[:, j - 1]
    ok = delta_i > 0
    ceil2 = delta_i**alpha * psi_i**beta / hj**2
    rows.append(FittedConstantRow("L4.1", "(4.6)q=2~fd", n, f"j={j}",
                                  float(np.max(np.abs(d2[ok]) / ceil2[ok])), kind="upper"))
    # step approximation: |chi_j - tau_j| <= C delta^a psi^b
    decay = delta**alpha * psi**beta
    r3 = np.abs(chi[interior] - vv[interior]) / decay[interior]
    rows.append(FittedConstantRow("L4.1" if ip.form == "tau" else "L4.2",
                                  "(4.7)" if ip.form == "tau" else "(4.14)",
                                  n, f"j={j}", float(np.max(r3)), kind="upper"))
    return rows
