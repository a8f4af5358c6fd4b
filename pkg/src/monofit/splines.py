"""Piecewise polynomials on the Chebyshev partition.

A spline S of class k keeps one local polynomial per interval I_j,
stored as monomial coefficients in (x - x_j); S is right continuous:
S = p_j on [x_j, x_{j-1}) and S = p_1 on [x_1, 1].

The coherence functional

    b_{i,j}(S, phi) = ||p_i - p_j||_{I_i} / phi(h_j) * (h_j / h_{i,j})^k

measures how far apart the pieces are relative to a majorant; small b_k
(its max) is what makes a spline approximable by one polynomial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolation, NeedsLargerN
from .partition import ChebPartition, build_partition, hull, locate, rho_n
from .reports import FittedConstantRow
from .smoothness import Majorant, SmoothFunction, modulus

__all__ = [
    "Spline",
    "b_ij",
    "b_k_max",
    "verify_lemma_5_1",
    "verify_lemma_5_2",
    "monotone_spline_fit",
    "endpoint_floors",
    "random_monotone_spline",
    "random_small_derivative_spline",
]


def _recenter(coeffs: np.ndarray, from_center: float, to_center: float) -> np.ndarray:
    """Monomial coefficients about from_center rewritten about to_center."""
    # (x - from)^m = sum_i C(m,i) (x - to)^i shift^(m-i), shift = to - from
    shift = to_center - from_center
    out = np.zeros_like(coeffs)
    for m, c in enumerate(coeffs):
        if c == 0.0:
            continue
        for i in range(m + 1):
            out[i] += c * math.comb(m, i) * shift ** (m - i)
    return out


@dataclass
class Spline:
    """Right-continuous piecewise polynomial of degree <= k-1."""

    part: ChebPartition
    k: int
    coeffs: np.ndarray  # (n, k); coeffs[j-1][m] multiplies (x - x_j)^m on I_j

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.part.n, self.k):
            raise ValueError(f"coefficient array must be ({self.part.n}, {self.k})")

    @property
    def n(self) -> int:
        return self.part.n

    # ---- evaluation -----------------------------------------------------

    def piece_eval(self, j: int, x):
        """p_j extended to all x (monomial Horner around x_j)."""
        x = np.asarray(x, dtype=float)
        t = x - self.part.knots[j]
        c = self.coeffs[j - 1]
        acc = np.full_like(t, c[-1])
        for m in range(self.k - 2, -1, -1):
            acc = acc * t + c[m]
        return acc

    def piece_deriv(self, j: int, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        t = x - self.part.knots[j]
        c = self.coeffs[j - 1]
        dc = [c[m] * math.perm(m, order) for m in range(order, self.k)]
        if not dc:
            return np.zeros_like(t)
        acc = np.full_like(t, dc[-1])
        for m in range(len(dc) - 2, -1, -1):
            acc = acc * t + dc[m]
        return acc

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nu = np.atleast_1d(locate(self.part, x))
        out = np.empty_like(x)
        for j in np.unique(nu):
            m = nu == j
            out[m] = self.piece_eval(int(j), x[m])
        return out if out.size > 1 else float(out[0])

    __call__ = eval

    def deriv(self, x, order: int = 1):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nu = np.atleast_1d(locate(self.part, x))
        out = np.empty_like(x)
        for j in np.unique(nu):
            m = nu == j
            out[m] = self.piece_deriv(int(j), x[m], order)
        return out if out.size > 1 else float(out[0])

    @property
    def degree(self) -> int:
        return self.k - 1

    # ---- structure ------------------------------------------------------

    def knot_value(self, j: int) -> float:
        """S(x_j): right-continuous value (p_n at j = n)."""
        jj = min(max(j, 0), self.n)
        piece = self.n if jj == self.n else jj if jj >= 1 else 1
        return float(self.piece_eval(piece, self.part.knots[jj]))

    def jump(self, j: int) -> float:
        """S(x_j+) - S(x_j-) at an interior knot, 1 <= j <= n-1."""
        xj = self.part.knots[j]
        return float(self.piece_eval(j, xj) - self.piece_eval(j + 1, xj))

    def is_continuous(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs[:, 0]))))
        return all(abs(self.jump(j)) <= tol * scale for j in range(1, self.n))

    def monotone_violation(self, grid_per_interval: int = 64) -> float:
        """Most negative of piece derivatives on their intervals and knot jumps."""
        worst = 0.0
        for j in range(1, self.n + 1):
            lo, hi = self.part.interval(j)
            xs = np.linspace(lo, hi, grid_per_interval)
            worst = min(worst, float(np.min(self.piece_deriv(j, xs))))
        for j in range(1, self.n):
            worst = min(worst, self.jump(j))
        return worst

    # ---- algebra ---------------------------------------------------------

    def scaled(self, c: float) -> "Spline":
        return Spline(self.part, self.k, self.coeffs * c)

    def sub(self, other: "Spline") -> "Spline":
        if other.part is not self.part and other.part.n != self.part.n:
            raise ValueError("partition mismatch")
        k = max(self.k, other.k)
        a = np.zeros((self.n, k))
        a[:, : self.k] = self.coeffs
        a[:, : other.k] -= other.coeffs
        return Spline(self.part, k, a)

    @staticmethod
    def constant(part: ChebPartition, k: int, value: float) -> "Spline":
        c = np.zeros((part.n, k))
        c[:, 0] = value
        return Spline(part, k, c)

    @staticmethod
    def from_global(part: ChebPartition, k: int, mono_coeffs) -> "Spline":
        """All pieces equal to one global polynomial given in monomial basis."""
        mono = np.zeros(k)
        mono[: len(mono_coeffs)] = mono_coeffs
        rows = [_recenter(mono, 0.0, part.knots[j]) for j in range(1, part.n + 1)]
        return Spline(part, k, np.vstack(rows))

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "k": self.k,
            "pieces": [list(map(float, row)) for row in self.coeffs],
            "convention": "right-continuous",
        })

    @staticmethod
    def from_json(s: str) -> "Spline":
        d = json.loads(s)
        return Spline(build_partition(d["n"]), d["k"], np.asarray(d["pieces"]))


# ---- the coherence functional b ------------------------------------------


def _sup_norm_diff(S: Spline, i: int, j: int, grid_per_interval: int | None) -> float:
    """sup over I_i of |p_i - p_j|; exact via derivative roots for k <= 4."""
    lo, hi = S.part.interval(i)
    d = S.coeffs[i - 1] - _recenter(S.coeffs[j - 1], S.part.knots[j], S.part.knots[i])
    if grid_per_interval is not None:
        xs = np.linspace(lo, hi, grid_per_interval)
        t = xs - S.part.knots[i]
        vals = np.zeros_like(t)
        for m in range(S.k - 1, -1, -1):
            vals = vals * t + d[m]
        return float(np.max(np.abs(vals)))
    cands = [lo, hi]
    if S.k <= 4:
        # derivative of the difference has degree <= 2
        dd = np.array([d[m] * m for m in range(1, S.k)])
        if dd.size == 3 and dd[2] != 0.0:
            disc = dd[1] ** 2 - 4 * dd[2] * dd[0]
            if disc >= 0:
                rt = math.sqrt(disc)
                for sgn in (-1.0, 1.0):
                    cands.append(S.part.knots[i] + (-dd[1] + sgn * rt) / (2 * dd[2]))
        elif dd.size >= 2 and dd.size <= 3 and (dd.size == 2 and dd[1] != 0.0 or
                                                dd.size == 3 and dd[2] == 0.0 and dd[1] != 0.0):
            cands.append(S.part.knots[i] - dd[0] / dd[1])
        xs = np.array([c for c in cands if lo - 1e-15 <= c <= hi + 1e-15])
    else:
        xs = np.union1d(np.linspace(lo, hi, 256), np.array(cands))
    t = xs - S.part.knots[i]
    vals = np.zeros_like(t)
    for m in range(S.k - 1, -1, -1):
        vals = vals * t + d[m]
    return float(np.max(np.abs(vals)))


def b_ij(S: Spline, phi: Majorant, i: int, j: int,
         grid_per_interval: int | None = None) -> float:
    """Pairwise coherence b_{i,j}(S, phi)."""
    n = S.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"indices ({i},{j}) outside 1..{n}")
    hj = S.part.h_j(j)
    phj = float(phi(hj))
    norm = _sup_norm_diff(S, i, j, grid_per_interval)
    if phj <= 0.0:
        if norm == 0.0:
            return 0.0
        raise ZeroDivisionError("degenerate majorant: phi(h_j) = 0 with p_i != p_j")
    _, _, hij = hull(S.part, i, j)
    return norm / phj * (hj / hij) ** S.k


def b_k_max(S: Spline, phi: Majorant, A: tuple[float, float] = (-1.0, 1.0),
            grid_per_interval: int | None = None) -> float:
    """max of b_{i,j} over pairs with I_i, I_j inside A."""
    lo, hi = A
    tol = 1e-12
    js = [j for j in range(1, S.n + 1)
          if S.part.knots[j] >= lo - tol and S.part.knots[j - 1] <= hi + tol]
    if not js:
        raise ValueError("window A contains no full partition interval")
    best = 0.0
    for i in js:
        for j in js:
            v = b_ij(S, phi, i, j, grid_per_interval)
            if v > best:
                best = v
    return best


# ---- lemma-level verification ops ------------------------------------------


def verify_lemma_5_1(f, S: Spline, phi: Majorant,
                     k_modulus: int | None = None,
                     m_grid: int = 1200) -> FittedConstantRow:
    """Report b_k(S, phi) once the two hypotheses pass a grid check.

    Hypotheses: omega_k(f, t) <= phi(t) and |f - S| <= phi(rho_n) pointwise.
    """
    n = S.n
    k = S.k if k_modulus is None else k_modulus
    ts = np.exp(np.linspace(np.log(1e-3), np.log(2.0), 12))
    for t in ts:
        w = modulus(f, k, float(t), density=128)
        if w > float(phi(t)) * (1 + 1e-9) + 1e-13:
            return FittedConstantRow("L5.1", "hypotheses-fail", n, "omega_k>phi",
                                     float("nan"))
    xs = np.cos(np.arange(m_grid, -1, -1) * np.pi / m_grid)
    err = np.abs(np.asarray(f(xs), dtype=float) - np.asarray(S.eval(xs), dtype=float))
    cap = np.asarray(phi(rho_n(n, xs)), dtype=float)
    if np.any(err > cap * (1 + 1e-9) + 1e-13):
        return FittedConstantRow("L5.1", "hypotheses-fail", n, "|f-S|>phi(rho)",
                                 float("nan"))
    return FittedConstantRow("L5.1", "b_k", n, "all", b_k_max(S, phi))


def verify_lemma_5_2(S: Spline, phi: Majorant, m_grid: int = 2000) -> FittedConstantRow:
    """Ratio b_k(S, phi) / ||rho_n S' / phi(rho_n)||_inf for continuous S."""
    n = S.n
    if S.k == 1:
        return FittedConstantRow("L5.2", "(5.1)", n, "all", 0.0)
    if not S.is_continuous(1e-9):
        raise ValueError("lemma applies to continuous splines")
    xs = np.linspace(-1.0, 1.0, m_grid)
    keep = ~np.isin(np.round(xs, 14), np.round(S.part.knots, 14))
    xs = xs[keep]
    rho = rho_n(n, xs)
    dv = np.abs(np.asarray(S.deriv(xs), dtype=float))
    denom = np.asarray(phi(rho), dtype=float)
    rhs = float(np.max(rho * dv / denom))
    lhs = b_k_max(S, phi)
    if rhs == 0.0:
        return FittedConstantRow("L5.2", "(5.1)", n, "all", 0.0 if lhs == 0.0 else float("inf"))
    return FittedConstantRow("L5.2", "(5.1)", n, "all", lhs / rhs)


# ---- interpolatory monotone spline fit --------------------------------------


def endpoint_floors(f: SmoothFunction, r: int) -> tuple[float, float]:
    """Derivative floor constants at the endpoints.

    D_+ = |f^{(i_+)}(1)| / (2 r!) with i_+ the smallest 1 <= i <= r where the
    derivative is nonzero (0 when none is); mirrored for D_-.
    """
    scale = max(1.0, max(abs(float(f.d[i](1.0))) for i in range(r + 1)),
                max(abs(float(f.d[i](-1.0))) for i in range(r + 1)))
    d_plus = 0.0
    for i in range(1, r + 1):
        v = float(f.d[i](1.0))
        if abs(v) > 1e-12 * scale:
            d_plus = abs(v) / (2.0 * math.factorial(r))
            break
    d_minus = 0.0
    for i in range(1, r + 1):
        v = float(f.d[i](-1.0))
        if abs(v) > 1e-12 * scale:
            d_minus = abs(v) / (2.0 * math.factorial(r))
            break
    return d_plus, d_minus


COLLAR_FRACTION = 0.5  # pieces stay nondecreasing this far past their interval


def _hermite_quadratic(fa, fb, ma, a, b, limit: bool,
                       collar: float | None = None) -> np.ndarray:
    """Quadratic about a matching values at a, b and slope ma at a.

    The limiter clips the slope so the piece is nondecreasing on the collar
    extension [a - eps, b + eps]: ma in [2 delta eps/(h+2eps),
    2 delta (h+eps)/(h+2eps)].
    """
    h = b - a
    delta = (fb - fa) / h
    if limit and delta >= 0.0:
        eps = COLLAR_FRACTION * h if collar is None else collar
        lo = 2.0 * delta * eps / (h + 2.0 * eps)
        hi = 2.0 * delta * (h + eps) / (h + 2.0 * eps)
        ma = min(max(ma, lo), hi)
    return np.array([fa, ma, (delta - ma) / h])


def _hermite_quadratic_right(fa, fb, mb, a, b, limit: bool,
                             collar: float | None = None) -> np.ndarray:
    """Quadratic about a matching values at a, b and slope mb at b."""
    h = b - a
    delta = (fb - fa) / h
    if limit and delta >= 0.0:
        eps = COLLAR_FRACTION * h if collar is None else collar
        lo = 2.0 * delta * eps / (h + 2.0 * eps)
        hi = 2.0 * delta * (h + eps) / (h + 2.0 * eps)
        mb = min(max(mb, lo), hi)
    c = (mb - delta) / h
    return np.array([fa, mb - 2.0 * c * h, c])


def _hermite_cubic(fa, fb, ma, mb, a, b, limit: bool,
                   collar: float | None = None) -> np.ndarray:
    """Cubic about a matching values and slopes at both ends.

    Slopes clipped into [0, 3*secant]; when the collar-extended derivative
    still dips negative, both slopes are pulled toward the secant (the
    all-secant cubic is linear, hence safe) by bisection.
    """
    h = b - a
    delta = (fb - fa) / h

    def coeffs(sa, sb):
        c2 = (3.0 * delta - 2.0 * sa - sb) / h
        c3 = (sa + sb - 2.0 * delta) / h**2
        return np.array([fa, sa, c2, c3])

    if not (limit and delta >= 0.0):
        return coeffs(ma, mb)
    ma = min(max(ma, 0.0), 3.0 * delta)
    mb = min(max(mb, 0.0), 3.0 * delta)
    eps = COLLAR_FRACTION * h if collar is None else collar
    ts = np.linspace(a - eps, b + eps, 25)

    def min_deriv(sa, sb):
        c = coeffs(sa, sb)
        t = ts - a
        return float(np.min(c[1] + 2 * c[2] * t + 3 * c[3] * t * t))

    if min_deriv(ma, mb) >= 0.0:
        return coeffs(ma, mb)
    lo_t, hi_t = 0.0, 1.0  # blend toward the secant: t=1 is the linear piece
    for _ in range(40):
        mid = 0.5 * (lo_t + hi_t)
        sa = (1 - mid) * ma + mid * delta
        sb = (1 - mid) * mb + mid * delta
        if min_deriv(sa, sb) >= 0.0:
            hi_t = mid
        else:
            lo_t = mid
    sa = (1 - hi_t) * ma + hi_t * delta
    sb = (1 - hi_t) * mb + hi_t * delta
    return coeffs(sa, sb)


def monotone_spline_fit(f: SmoothFunction, part: ChebPartition,
                        monotone_tol: float = 1e-11) -> Spline:
    """Continuous nondecreasing spline of class r+2 interpolating f.

    The two pieces at each end are the Taylor polynomial of f at +-1 plus a
    degree-(r+1) correction pinned by S(x_2) = f(x_2) (resp. x_{n-2});
    interior pieces are slope-limited Hermite interpolants at the knots.
    Raises NeedsLargerN when an endpoint piece is not yet monotone or a
    derivative floor has not yet kicked in at this n.
    """
    r = f.r
    if r < 1:
        raise ValueError("need r >= 1")
    n = part.n
    if n < 6:
        raise ValueError("need n >= 6 so the endpoint spans do not overlap")
    k = r + 2
    knots = part.knots
    coeffs = np.zeros((n, k))
    fvals = np.asarray(f(knots), dtype=float)
    scale = max(1.0, float(np.max(np.abs(fvals))))

    # right endpoint pieces on [x_2, 1]
    t_plus = np.zeros(k)
    for i in range(r + 1):
        t_plus[i] = float(f.d[i](1.0)) / math.factorial(i)
    denom = (knots[2] - 1.0) ** (r + 1)
    taylor_at_x2 = sum(t_plus[i] * (knots[2] - 1.0) ** i for i in range(r + 1))
    a_plus = (fvals[2] - taylor_at_x2) / denom
    t_plus[r + 1] = a_plus
    for j in (1, 2):
        coeffs[j - 1] = _recenter(t_plus, 1.0, knots[j])

    # left endpoint pieces on [-1, x_{n-2}]
    t_minus = np.zeros(k)
    for i in range(r + 1):
        t_minus[i] = float(f.d[i](-1.0)) / math.factorial(i)
    denom = (knots[n - 2] + 1.0) ** (r + 1)
    taylor_at_xl = sum(t_minus[i] * (knots[n - 2] + 1.0) ** i for i in range(r + 1))
    a_minus = (fvals[n - 2] - taylor_at_xl) / denom
    t_minus[r + 1] = a_minus
    for j in (n - 1, n):
        coeffs[j - 1] = _recenter(t_minus, -1.0, knots[j])

    # interior pieces, local Hermite with the slope limiter.  Quadratic
    # pieces can match the slope at only one knot; anchoring at the knot
    # where f' is smaller puts the O(h^2) slope mismatch at knots where the
    # derivative is large, and makes pieces meet C^1 at local minima of f'.
    limit = f.monotone_flag
    for j in range(3, n - 1):
        a, b = knots[j], knots[j - 1]
        fa, fb = fvals[j], fvals[j - 1]
        if r == 1:
            da, db = float(f.d[1](a)), float(f.d[1](b))
            if da <= db:
                coeffs[j - 1, :3] = _hermite_quadratic(fa, fb, da, a, b, limit)
            else:
                coeffs[j - 1, :3] = _hermite_quadratic_right(fa, fb, db, a, b, limit)
        else:
            cub = _hermite_cubic(fa, fb, float(f.d[1](a)), float(f.d[1](b)), a, b, limit)
            coeffs[j - 1, :4] = cub

    S = Spline(part, k, coeffs)

    if f.monotone_flag:
        # endpoint monotonicity is the n-threshold phenomenon
        xs = np.linspace(knots[2], 1.0, 256)
        if float(np.min(S.piece_deriv(1, xs))) < -monotone_tol * scale:
            raise NeedsLargerN("endpoint-piece-not-monotone", "side=+")
        xs = np.linspace(-1.0, knots[n - 2], 256)
        if float(np.min(S.piece_deriv(n, xs))) < -monotone_tol * scale:
            raise NeedsLargerN("endpoint-piece-not-monotone", "side=-")
        # derivative floors
        d_plus, d_minus = endpoint_floors(f, r)
        if d_plus > 0.0:
            xs = np.linspace(knots[2] + 1e-12, 1.0, 256)
            floor = d_plus * (1.0 - xs) ** (r - 1)
            if np.any(S.piece_deriv(1, xs) < floor - 1e-10 * scale):
                raise NeedsLargerN("derivative-floor", "side=+")
        if d_minus > 0.0:
            xs = np.linspace(-1.0, knots[n - 2] - 1e-12, 256)
            floor = d_minus * (xs + 1.0) ** (r - 1)
            if np.any(S.piece_deriv(n, xs) < floor - 1e-10 * scale):
                raise NeedsLargerN("derivative-floor", "side=-")
        if S.monotone_violation() < -monotone_tol * scale:
            raise NeedsLargerN("interior-not-monotone")
    return S


# ---- random spline families (tests and calibration) -------------------------


def random_monotone_spline(part: ChebPartition, k: int, rng: np.random.Generator,
                           value_scale: float = 1.0) -> Spline:
    """Random continuous nondecreasing spline built from limited Hermite pieces."""
    n = part.n
    knots = part.knots
    increments = rng.uniform(0.0, value_scale, size=n)
    vals = np.concatenate([[0.0], np.cumsum(increments)])[::-1]  # vals[j] at x_j
    # candidate slopes around the local secant scale; the limiter does the rest
    slopes = rng.uniform(0.0, 2.0, size=n + 1) * (vals[0] - vals[-1]) / 2.0
    coeffs = np.zeros((n, k))
    for j in range(1, n + 1):
        a, b = knots[j], knots[j - 1]
        fa, fb = vals[j], vals[j - 1]
        if k == 3:
            coeffs[j - 1, :3] = _hermite_quadratic(fa, fb, slopes[j], a, b, True)
        elif k >= 4:
            coeffs[j - 1, :4] = _hermite_cubic(fa, fb, slopes[j], slopes[j - 1], a, b, True)
        else:
            # k = 2: linear interpolation
            coeffs[j - 1, 0] = fa
            coeffs[j - 1, 1] = (fb - fa) / (b - a)
    return Spline(part, k, coeffs)


def random_small_derivative_spline(part: ChebPartition, k: int, phi: Majorant,
                                   rng: np.random.Generator) -> Spline:
    """Random spline satisfying the small-derivative hypotheses:

    |S'| <= phi(rho_n)/rho_n off the knots, jumps in [0, phi(rho_n(x_j))],
    and S' = 0 on the two outermost intervals.
    """
    n = part.n
    knots = part.knots
    coeffs = np.zeros((n, k))
    value = 0.0
    # sweep left to right: j = n down to 1
    for j in range(n, 0, -1):
        a, b = knots[j], knots[j - 1]
        if j in (1, n):
            slope = 0.0
        else:
            xs = np.linspace(a, b, 17)
            cap = float(np.min(np.asarray(phi(rho_n(n, xs))) / rho_n(n, xs)))
            slope = rng.uniform(0.0, cap)
        coeffs[j - 1, 0] = value
        coeffs[j - 1, 1] = slope
        value += slope * (b - a)
        if j > 1:
            jump_cap = float(phi(rho_n(n, knots[j - 1])))
            value += rng.uniform(0.0, jump_cap)
    return Spline(part, k, coeffs)
