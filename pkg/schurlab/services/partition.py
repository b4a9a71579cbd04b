"""
Smooth partitions of unity on spheres and on ℝ^{n+1} minus a diagonal.

Chart l of the sphere cover contains the directions where |ξ_b| < 2|ξ_l|
for every b. The partition normalizes explicit bumps
w_l(ξ) = η(smax(|u|) / (2|u_l|)) over u = ξ/‖ξ‖₂, where η is the
e^{-1/t} spline cutoff (1 on [0, 3/4], 0 on [1, ∞)) and smax is a
log-sum-exp smoothed maximum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from schurlab.core.config import settings
from schurlab.core.error_handling import IndexOutOfRangeError, OnDiagonalError
from schurlab.services.combinatorics import is_in_Delta_I

logger = logging.getLogger(__name__)

EPS = 1.0
INNER = 0.75


def _spline(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def cutoff(x: np.ndarray) -> np.ndarray:
    """η(x): 1 for x ≤ 3/4, 0 for x ≥ 1, smooth in between."""
    x = np.asarray(x, dtype=float)
    a = _spline(1.0 - x)
    b = _spline(x - INNER)
    with np.errstate(invalid="ignore"):
        out = a / (a + b)
    return np.where(x <= INNER, 1.0, np.where(x >= 1.0, 0.0, out))


@dataclass(frozen=True)
class SpherePartition:
    """Partition of unity θ̃_{k,1..k} on S^{k-1}, extended homogeneously."""

    k: int
    eps: float = EPS
    sharpness: float = 64.0
    inner_radius: float = INNER
    outer_radius: float = 1.0

    def weights(self, xi: np.ndarray) -> np.ndarray:
        """Unnormalized bumps w_1..w_k along the last axis."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.k:
            raise IndexOutOfRangeError(f"expected vectors of length {self.k}, got {xi.shape[-1]}")
        norm = np.linalg.norm(xi, axis=-1, keepdims=True)
        u = np.abs(xi) / np.where(norm == 0.0, 1.0, norm)
        smax = logsumexp(self.sharpness * u, axis=-1, keepdims=True) / self.sharpness
        with np.errstate(divide="ignore"):
            ratio = np.where(u > 0.0, smax / (2.0 * np.where(u > 0.0, u, 1.0)), np.inf)
        return cutoff(ratio)

    def eval_all(self, xi: np.ndarray) -> np.ndarray:
        """θ̃_{k,l}(ξ) for every chart; rows of zeros for ξ = 0."""
        w = self.weights(xi)
        total = w.sum(axis=-1, keepdims=True)
        return np.where(total > 0.0, w / np.where(total > 0.0, total, 1.0), 0.0)

    def eval(self, l: int, xi: Sequence[float]) -> float:
        """θ̃_{k,l}(ξ) for a chart index 1 ≤ l ≤ k."""
        if not 1 <= l <= self.k:
            raise IndexOutOfRangeError(f"chart l={l} outside 1..{self.k}", index=l, bounds=(1, self.k))
        return float(self.eval_all(np.asarray(xi, dtype=float))[..., l - 1])

    def in_chart(self, l: int, xi: Sequence[float]) -> bool:
        """ξ ∈ ℝ_{>0}·Ũ_{k,l,ε}"""
        a = np.abs(np.asarray(xi, dtype=float))
        if not a.any():
            return False
        return bool(np.all(a < (1.0 + self.eps) * a[l - 1]))


@lru_cache(maxsize=32)
def sphere_partition(k: int) -> SpherePartition:
    if k < 1:
        raise IndexOutOfRangeError(f"sphere partition needs k >= 1, got {k}", index=k)
    return SpherePartition(k=k, sharpness=settings.partition_sharpness)


@dataclass(frozen=True)
class CoverChart:
    """Chart U_{I,i_l} of ℝ^{n+1} minus Δ_{I,n}."""

    I: Tuple[int, ...]
    l: int

    def __post_init__(self):
        object.__setattr__(self, "I", tuple(sorted(self.I)))
        if not 1 <= self.l <= len(self.I) - 1:
            raise IndexOutOfRangeError(
                f"chart position l={self.l} outside 1..{len(self.I) - 1}", index=self.l
            )

    @property
    def k(self) -> int:
        return len(self.I) - 1

    def q_map(self, lam: Sequence[float]) -> np.ndarray:
        """Q_I(λ): consecutive differences over I."""
        vals = np.asarray([lam[i] for i in self.I], dtype=float)
        return np.diff(vals)

    def membership(self, lam: Sequence[float]) -> bool:
        if is_in_Delta_I(lam, self.I):
            return False
        return sphere_partition(self.k).in_chart(self.l, self.q_map(lam))


def theta_eval(I: Sequence[int], i_l: int, lam: Sequence[float]) -> float:
    """θ_{I,i_l}(λ) = θ̃_{k,l}(Q_I(λ))"""
    I = tuple(sorted(I))
    if i_l not in I or i_l == I[0]:
        raise IndexOutOfRangeError(f"i_l={i_l} must be a non-minimal element of {I}", index=i_l)
    if is_in_Delta_I(lam, I):
        raise OnDiagonalError(f"λ has equal coordinates on {I}", details={"I": list(I)})
    chart = CoverChart(I, I.index(i_l))
    return sphere_partition(chart.k).eval(chart.l, chart.q_map(lam))
