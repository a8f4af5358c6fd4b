"""Partition of unity on the coarse mesh built from fine-mesh smoothed steps.

With d = n1/n, the members telescope:

    T~_{j,n1} = tau_{dj,n1} - tau_{d(j-1),n1},   tau_0 = 0, tau_{n1,n1} = 1,

so sum_j T~_j = 1 identically (and exactly in floating point).  Blending the
pieces of a coarse spline with these members gives the simultaneous
approximant D_{n1}(x, S) = sum_j p_j(x) T~_{j,n1}(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .indicators import TauFamily, profile_params
from .partition import ChebPartition, build_partition
from .splines import Spline

__all__ = ["UnityBasis", "BlendPoly", "build_unity", "simultaneous_approximant"]


@dataclass
class UnityBasis:
    """n polynomials summing to one, each localized near a coarse interval."""

    coarse: ChebPartition
    fine: ChebPartition
    family: TauFamily           # tau_{i,n1} at the fine level
    cut_indices: list           # i = d*j for j = 1..n-1 (the telescoping cuts)

    @property
    def n(self) -> int:
        return self.coarse.n

    @property
    def n1(self) -> int:
        return self.fine.n

    @property
    def d(self) -> int:
        return self.n1 // self.n

    @property
    def member_degree(self) -> int:
        return self.family.kernel_degree + 1

    def _cut_values(self, x, deriv: bool = False) -> np.ndarray:
        """tau_{dj}(x) for j = 1..n-1; shape (n-1, len(x))."""
        if deriv:
            return self.family.deriv_many(self.cut_indices, x)
        return self.family.eval_many(self.cut_indices, x)

    def members(self, x) -> np.ndarray:
        """All T~_{j,n1}(x); shape (n, len(x)). Sums to 1 exactly."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cuts = self._cut_values(x)
        out = np.empty((self.n, x.size))
        out[0] = cuts[0]
        for j in range(1, self.n - 1):
            out[j] = cuts[j] - cuts[j - 1]
        out[self.n - 1] = 1.0 - cuts[self.n - 2]
        return out

    def members_deriv(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cuts = self._cut_values(x, deriv=True)
        out = np.empty((self.n, x.size))
        out[0] = cuts[0]
        for j in range(1, self.n - 1):
            out[j] = cuts[j] - cuts[j - 1]
        out[self.n - 1] = -cuts[self.n - 2]
        return out


def build_unity(n: int, n1: int, alpha2: float = 1.0, beta2: float = 1.0,
                profile: str = "practical") -> UnityBasis:
    """Partition of unity over the order-n mesh using order-n1 steps.

    n1 must be a proper multiple of n.  The decay parameters feed the
    underlying step construction: the usable estimate replaces the fine-mesh
    damping by the coarse one at the price alpha1 = alpha2,
    beta1 = alpha2 + beta2, and the step level adds
    alpha = ceil(alpha1), beta = 2*beta1 + alpha1 + 1.
    """
    if n1 <= n:
        raise ValueError("need n1 > n")
    if n1 % n != 0:
        raise ValueError(f"n1={n1} not divisible by n={n}")
    alpha1 = alpha2
    beta1 = alpha2 + beta2
    alpha_tau = math.ceil(alpha1)
    beta_tau = 2 * beta1 + alpha1 + 1
    xi, mu = profile_params(profile, alpha_tau, beta_tau, "tau")
    coarse = build_partition(n)
    fine = build_partition(n1)
    fam = TauFamily(fine, xi, mu, form="tau")
    d = n1 // n
    return UnityBasis(coarse=coarse, fine=fine, family=fam,
                      cut_indices=[d * j for j in range(1, n)])


@dataclass
class BlendPoly:
    """D_{n1}(x, S) = sum_j p_j(x) T~_{j,n1}(x), evaluated lazily."""

    S: Spline
    basis: UnityBasis

    @property
    def degree(self) -> int:
        return self.S.degree + self.basis.member_degree

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        T = self.basis.members(x)
        acc = np.zeros(x.size)
        for j in range(1, self.S.n + 1):
            acc += self.S.piece_eval(j, x) * T[j - 1]
        return acc if acc.size > 1 else float(acc[0])

    __call__ = eval

    def deriv(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        T = self.basis.members(x)
        dT = self.basis.members_deriv(x)
        acc = np.zeros(x.size)
        for j in range(1, self.S.n + 1):
            acc += self.S.piece_deriv(j, x) * T[j - 1] + self.S.piece_eval(j, x) * dT[j - 1]
        return acc if acc.size > 1 else float(acc[0])


def simultaneous_approximant(S: Spline, basis: UnityBasis) -> BlendPoly:
    """Blend the pieces of S through the partition of unity."""
    if S.n != basis.n:
        raise ValueError(f"spline order {S.n} does not match basis coarse order {basis.n}")
    return BlendPoly(S=S, basis=basis)
