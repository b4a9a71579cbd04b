"""
Homogeneous symbols, their log-polar compression and Fourier weights.

An even homogeneous symbol φ on ℝ^n is compressed to ψ on ℝ^{n-1} through
ratios of consecutive coordinates. Splitting φ by sign parity and sampling
ψ_ε(e^t) on a truncated grid gives, after an FFT, weights g_ε with

    φ(ξ) = Σ_ε Π sign(ξ_i)^{ε_i} ∫ g_ε(s) Π |ξ_{j+1}/ξ_j|^{i s_j} ds.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from schurlab.core.config import settings
from schurlab.core.error_handling import (
    GridTooCoarseError,
    IndexOutOfRangeError,
    SupportViolationError,
    ZeroCoordinateError,
)
from schurlab.models.numerics import MultiIndex, NodeVector, SmoothFunction
from schurlab.models.schemas import FourierComponent, FourierWeightsDocument
from schurlab.services.divdiff import divdiff_eval
from schurlab.services.partition import sphere_partition

logger = logging.getLogger(__name__)

SignPattern = Tuple[int, ...]


@dataclass(frozen=True)
class HomogeneousSymbol:
    """
    Degree-0 homogeneous φ: ℝ^n → ℂ.

    `func` is vectorized over the last axis. `margins[k]` is the declared
    ε_k: φ(ξ) = 0 whenever |ξ_k| < ε_k·max_b |ξ_b| for k ≤ n−1.
    """

    n: int
    func: Callable[[np.ndarray], np.ndarray]
    margins: Tuple[float, ...]
    label: str = "phi"

    def __post_init__(self):
        if self.n < 2:
            raise IndexOutOfRangeError(f"homogeneous symbols need n >= 2, got {self.n}", index=self.n)
        if len(self.margins) != self.n - 1:
            raise IndexOutOfRangeError(
                f"expected {self.n - 1} margins, got {len(self.margins)}", index=len(self.margins)
            )

    def eval(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.n:
            raise IndexOutOfRangeError(f"expected vectors of length {self.n}, got {xi.shape[-1]}")
        return np.asarray(self.func(xi))

    @property
    def upper_log(self) -> float:
        """K with ĝ_ε supported in (−∞, K]^{n−1}."""
        return math.log(1.0 / min(self.margins)) + 2.0


def sign_patterns(n: int) -> Tuple[SignPattern, ...]:
    return tuple(itertools.product((0, 1), repeat=n))


def parity_split(phi: HomogeneousSymbol, xi: np.ndarray) -> Dict[SignPattern, np.ndarray]:
    """All parity components φ_ε(ξ) = 2^{−n} Σ_δ Π δ_i^{ε_i} φ(δ∘ξ); they sum to φ."""
    xi = np.asarray(xi, dtype=float)
    flips = {
        delta: phi.eval(xi * np.asarray(delta))
        for delta in itertools.product((1.0, -1.0), repeat=phi.n)
    }
    out = {}
    for eps in sign_patterns(phi.n):
        total = np.zeros(xi.shape[:-1], dtype=complex)
        for delta, values in flips.items():
            total = total + np.prod([d ** e for d, e in zip(delta, eps)]) * values
        out[eps] = total / 2 ** phi.n
    return out


def parity_component(phi: HomogeneousSymbol, eps: SignPattern, xi: np.ndarray) -> np.ndarray:
    return parity_split(phi, xi)[tuple(eps)]


def _ratio_point(s: np.ndarray) -> np.ndarray:
    # (1, s_1, s_1 s_2, …, s_1⋯s_{n−1})
    s = np.asarray(s, dtype=float)
    ones = np.ones(s.shape[:-1] + (1,))
    return np.concatenate([ones, np.cumprod(s, axis=-1)], axis=-1)


def check_support(phi: HomogeneousSymbol, samples: int = 1000, seed: int = 0) -> None:
    """Sample the declared margins and the vanishing on ξ_n = 0."""
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((samples, phi.n))
    values = np.abs(phi.eval(xi))
    peak = np.max(np.abs(xi), axis=-1)
    for k, margin in enumerate(phi.margins):
        outside = np.abs(xi[:, k]) < margin * peak
        if np.any(values[outside] > 0.0):
            raise SupportViolationError(
                f"{phi.label} is nonzero where |ξ_{k + 1}| < {margin}·max|ξ|",
                details={"axis": k + 1, "margin": margin},
            )
    flat = xi.copy()
    flat[:, -1] = 0.0
    if np.any(np.abs(phi.eval(flat)) > 0.0):
        raise SupportViolationError(f"{phi.label} does not vanish on ξ_n = 0")


def compress_to_psi(phi: HomogeneousSymbol, samples: int = 1000,
                    seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """
    ψ(s) = φ(1, s_1, s_1 s_2, …, s_1⋯s_{n−1})

    ψ vanishes once any |s_k| exceeds 1/ε_k, and φ is recovered as
    ψ(ξ_2/ξ_1, …, ξ_n/ξ_{n−1}) off the coordinate hyperplanes.
    """
    check_support(phi, samples, seed)

    def psi(s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape[-1] != phi.n - 1:
            raise IndexOutOfRangeError(f"ψ takes {phi.n - 1} arguments, got {s.shape[-1]}")
        return phi.eval(_ratio_point(s))

    return psi


@dataclass
class FourierWeights:
    """FFT coefficients of ĝ_ε on the grid t = t0 + h·m, m ∈ [0, M)^{n−1}."""

    n: int
    h: float
    half_width: float
    upper: float
    points: int
    components: Dict[SignPattern, np.ndarray] = field(default_factory=dict)
    boundary_ratio: float = 0.0

    @property
    def origin(self) -> float:
        return -self.half_width

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.h)

    def g_samples(self, eps: SignPattern) -> np.ndarray:
        """g_ε at the FFT frequencies, as a density in s."""
        dw = 2.0 * np.pi / (self.points * self.h)
        coeffs = self.components[eps]
        phase = np.exp(-1j * self.frequencies * self.origin)
        for axis in range(coeffs.ndim):
            shape = [1] * coeffs.ndim
            shape[axis] = -1
            coeffs = coeffs * phase.reshape(shape)
        return coeffs / dw ** coeffs.ndim

    def first_moment(self, eps: SignPattern) -> float:
        """Quadrature of ∫ |g_ε(s)|·|s_1⋯s_{n−1}| ds."""
        coeffs = np.abs(self.components[eps])
        w = np.abs(self.frequencies)
        weight = np.ones_like(coeffs)
        for axis in range(coeffs.ndim):
            shape = [1] * coeffs.ndim
            shape[axis] = -1
            weight = weight * w.reshape(shape)
        return float(np.sum(coeffs * weight))


def _log_grid(phi: HomogeneousSymbol, h: Optional[float], half_width: Optional[float]
              ) -> Tuple[float, float, float, int]:
    L = settings.fourier_half_width if half_width is None else float(half_width)
    K = phi.upper_log
    if h is None:
        M = settings.fourier_points if phi.n == 2 else settings.fourier_points_3d
        h = (K + L) / M
    else:
        M = int(math.ceil((K + L) / h))
    return float(h), L, K, M


def fourier_weights(phi: HomogeneousSymbol, h: Optional[float] = None,
                    half_width: Optional[float] = None) -> FourierWeights:
    """
    Sample ĝ_ε(t) = ψ_ε(e^{t}) on [−L, −L + M·h)^{n−1} and take the FFT.

    Raises GridTooCoarseError when ĝ on a boundary face exceeds
    settings.fourier_decay_tol times its maximum.
    """
    h, L, K, M = _log_grid(phi, h, half_width)
    d = phi.n - 1
    axis = -L + h * np.arange(M)
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1)
    xi = _ratio_point(np.exp(mesh))

    samples = parity_split(phi, xi)
    peak = max(float(np.max(np.abs(v))) for v in samples.values())
    boundary = 0.0
    for values in samples.values():
        for ax in range(d):
            faces = np.take(values, [0, M - 1], axis=ax)
            boundary = max(boundary, float(np.max(np.abs(faces))))
    ratio = boundary / peak if peak > 0.0 else 0.0
    if ratio > settings.fourier_decay_tol:
        raise GridTooCoarseError(
            f"ĝ has not decayed at the window edge (ratio {ratio:.3e})", boundary_ratio=ratio,
        )

    components = {eps: np.fft.fftn(v) / M ** d for eps, v in samples.items()}
    logger.debug(f"fourier weights for {phi.label}: M={M}, h={h:.4g}, boundary ratio {ratio:.2e}")
    return FourierWeights(n=phi.n, h=h, half_width=L, upper=K, points=M,
                          components=components, boundary_ratio=ratio)


def _axis_kernel(w: FourierWeights, t: float) -> np.ndarray:
    freqs = w.frequencies
    kernel = np.exp(1j * freqs * (t - w.origin))
    if w.points % 2 == 0:
        # split Nyquist term
        kernel[w.points // 2] = np.cos(freqs[w.points // 2] * (t - w.origin))
    return kernel


def evaluate_component(w: FourierWeights, eps: SignPattern, t: Sequence[float]) -> complex:
    """Trigonometric interpolation of ĝ_ε at t."""
    coeffs = w.components[eps]
    for tj in t:
        coeffs = np.tensordot(_axis_kernel(w, tj), coeffs, axes=([0], [0]))
    return complex(coeffs)


def reconstruct(phi: HomogeneousSymbol, w: FourierWeights, xi: Sequence[float]) -> complex:
    """Σ_ε Π sign(ξ_i)^{ε_i} ∫ g_ε(s) Π |ξ_{j+1}/ξ_j|^{i s_j} ds"""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (phi.n,):
        raise IndexOutOfRangeError(f"expected {phi.n} coordinates, got {xi.shape}")
    if np.any(xi == 0.0):
        raise ZeroCoordinateError("reconstruction needs every ξ_i nonzero",
                                  details={"xi": xi.tolist()})
    t = np.diff(np.log(np.abs(xi)))
    if np.any(t < w.origin) or np.any(t >= w.origin + w.points * w.h):
        return 0j
    signs = np.sign(xi)
    total = 0j
    for eps, coeffs in w.components.items():
        factor = float(np.prod([s ** e for s, e in zip(signs, eps)]))
        total += factor * evaluate_component(w, eps, t)
    return total


def chart_power_symbol(power: int) -> HomogeneousSymbol:
    """θ̃_{2,1}(ξ)·(ξ_2/ξ_1)^power, supported where |ξ_2| < 2|ξ_1|."""
    partition = sphere_partition(2)

    def func(xi):
        a = xi[..., 0]
        safe = np.where(a == 0.0, 1.0, a)
        theta = partition.eval_all(xi)[..., 0]
        return np.where(theta > 0.0, theta * (xi[..., 1] / safe) ** power, 0.0)

    return HomogeneousSymbol(n=2, func=func, margins=(0.5,), label=f"chart_power_{power}")


def chart_chain_symbol() -> HomogeneousSymbol:
    """
    θ̃_{2,1}θ̃_{2,2}(ξ_1, ξ_2)·θ̃_{2,1}(ξ_2, ξ_3)·(ξ_3/ξ_2)^2 on ℝ^3.

    |ξ_2| stays within a factor 2 of |ξ_1| and |ξ_3| < 2|ξ_2|.
    """
    partition = sphere_partition(2)

    def func(xi):
        left = partition.eval_all(xi[..., :2])
        right = partition.eval_all(xi[..., 1:])
        weight = left[..., 0] * left[..., 1] * right[..., 0]
        b = xi[..., 1]
        safe = np.where(b == 0.0, 1.0, b)
        return np.where(weight > 0.0, weight * (xi[..., 2] / safe) ** 2, 0.0)

    return HomogeneousSymbol(n=3, func=func, margins=(0.25, 0.5), label="chart_chain")


class HMSEstimate(NamedTuple):
    value: float
    sup_abs: float
    sup_derivative: float
    pairs: int
    step_ratio: float


def hms_grid(points: int = 24, low: float = 1e-2, high: float = 1e2) -> np.ndarray:
    """Symmetric logarithmic sample points, zero excluded."""
    half = np.logspace(np.log10(low), np.log10(high), points)
    return np.concatenate([-half[::-1], half])


def hms_seminorm(phi2: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 grid: Optional[np.ndarray] = None, step_ratio: float = 1e-3) -> HMSEstimate:
    """
    max(sup|φ|, sup |λ−μ|·(|∂_λφ| + |∂_μφ|)) over off-diagonal grid pairs.

    Derivatives are central differences with step step_ratio·|λ−μ|.
    """
    grid = hms_grid() if grid is None else np.asarray(grid, dtype=float)
    lam, mu = np.meshgrid(grid, grid, indexing="ij")
    off = lam != mu
    lam, mu = lam[off], mu[off]
    gap = np.abs(lam - mu)
    step = step_ratio * gap

    values = np.asarray(phi2(lam, mu))
    d_lam = (np.asarray(phi2(lam + step, mu)) - np.asarray(phi2(lam - step, mu))) / (2 * step)
    d_mu = (np.asarray(phi2(lam, mu + step)) - np.asarray(phi2(lam, mu - step))) / (2 * step)

    sup_abs = float(np.max(np.abs(values)))
    sup_derivative = float(np.max(gap * (np.abs(d_lam) + np.abs(d_mu))))
    return HMSEstimate(max(sup_abs, sup_derivative), sup_abs, sup_derivative, int(lam.size), step_ratio)


def two_point_symbol(f: SmoothFunction, alpha: Tuple[int, int]) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """(λ, μ) ↦ f[λ^{(α_0)}, μ^{(α_1)}], vectorized."""
    multiplicities = MultiIndex(tuple(alpha))

    def scalar(lam: float, mu: float) -> float:
        return divdiff_eval(f, NodeVector((float(lam), float(mu)), multiplicities))

    return np.vectorize(scalar, otypes=[float])


def weights_to_document(w: FourierWeights) -> FourierWeightsDocument:
    components = [
        FourierComponent(eps=list(eps), real=c.real.ravel().tolist(), imag=c.imag.ravel().tolist())
        for eps, c in w.components.items()
    ]
    return FourierWeightsDocument(n=w.n, h=w.h, half_width=w.half_width, upper=w.upper,
                                  points=w.points, boundary_ratio=w.boundary_ratio,
                                  components=components)


def weights_from_document(doc: FourierWeightsDocument) -> FourierWeights:
    shape = (doc.points,) * (doc.n - 1)
    components = {
        tuple(c.eps): (np.asarray(c.real) + 1j * np.asarray(c.imag)).reshape(shape)
        for c in doc.components
    }
    return FourierWeights(n=doc.n, h=doc.h, half_width=doc.half_width, upper=doc.upper,
                          points=doc.points, components=components,
                          boundary_ratio=doc.boundary_ratio)
