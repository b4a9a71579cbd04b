"""
Lower-bound estimation of multilinear Schur multiplier norms.

estimate_norm maximizes ‖T_φ(x_1, …, x_n)‖_p over unit x_i ∈ S_{p_i} by
block-coordinate ascent: with every slot but one fixed the map is linear,
and one step moves the free slot to the norming matrix of the adjoint
applied to the output's norming matrix. Every reported value is attained
by its witnesses, so it is a certified lower bound and never an upper one.
"""

from __future__ import annotations

import logging
import math
import string
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import svd
from scipy.stats import linregress

from schurlab.core.config import settings
from schurlab.core.error_handling import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NonpositiveInputError,
)
from schurlab.core.logging import LoggerManager
from schurlab.models.numerics import SchattenParams, dual_exponent
from schurlab.models.schemas import MatrixPayload, NormEstimateRecord
from schurlab.services.combinatorics import theoretical_bound
from schurlab.services.divdiff import make_abs_power
from schurlab.services.schatten import (
    DiscreteSymbol,
    TruncationKind,
    lattice_position_nodes,
    lattice_symbol,
    sampled_symbol,
    schatten_norm,
    schur_multiply,
    truncate,
    truncation_symbol,
)
from schurlab.services.task_manager import TaskManager, task_rng

logger = logging.getLogger(__name__)

Witnesses = List[np.ndarray]

# relative tolerance for the per-sweep improvement that ends an ascent
ASCENT_TOL = 1e-10
BACKTRACK_STEPS = (0.5, 0.25, 0.125)


class WitnessKind(str, Enum):
    PATTERN = "pattern"
    HILBERT = "hilbert"


class ConstructionKind(str, Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass
class NormEstimate:
    """Best value over restarts together with the witnesses attaining it."""

    value: float
    witnesses: Witnesses
    restarts: int
    trace: List[float]
    params: SchattenParams
    seed: int
    restart_values: List[float] = field(default_factory=list)
    envelope: float = math.inf
    dim: int = 0
    label: str = "phi"

    @property
    def dispersion(self) -> float:
        if len(self.restart_values) < 2:
            return 0.0
        return float(np.std(self.restart_values))

    @property
    def endpoint(self) -> bool:
        return self.params.is_endpoint

    def recompute(self, phi: DiscreteSymbol) -> float:
        return schatten_norm(schur_multiply(phi, self.witnesses), self.params.p)


def norming_matrix(z: np.ndarray, p: float) -> np.ndarray:
    """
    W with ‖W‖_{p*} = 1 and ⟨z, W⟩ = Tr(z W*) = ‖z‖_p.

    Zero input gives the zero matrix.
    """
    u, sigma, vh = svd(np.asarray(z, dtype=complex), full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return np.zeros_like(z, dtype=complex)
    if math.isinf(p):
        return np.outer(u[:, 0], vh[0])
    if p == 1.0:
        d = (sigma > sigma[0] * 1e-14).astype(float)
    else:
        d = (sigma / sigma[0]) ** (p - 1.0)
        d = d / np.linalg.norm(d, ord=dual_exponent(p))
    return (u * d) @ vh


def random_unit(rng: np.random.Generator, N: int, p: float) -> np.ndarray:
    """Complex Gaussian matrix scaled to unit S_p norm."""
    x = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return x / schatten_norm(x, p)


def _slot_adjoint(phi: DiscreteSymbol, xs: Witnesses, slot: int, W: np.ndarray) -> np.ndarray:
    # G with ⟨T(…, y, …), W⟩ = ⟨y, G⟩ for y in the given slot
    if phi.factors is not None:
        N = phi.dim
        left = np.eye(N, dtype=complex)
        for m, x in zip(phi.factors[:slot], xs[:slot]):
            left = left @ (m * x)
        right = np.eye(N, dtype=complex)
        for m, x in zip(phi.factors[slot + 1:], xs[slot + 1:]):
            right = right @ (m * x)
        return np.conj(phi.factors[slot]) * (left.conj().T @ W @ right.conj().T)
    letters = string.ascii_lowercase[: phi.n + 1]
    operands = [phi.table]
    subs = [letters]
    for j, x in enumerate(xs):
        if j != slot:
            operands.append(x)
            subs.append(letters[j:j + 2])
    operands.append(np.conj(W))
    subs.append(letters[0] + letters[-1])
    spec = ",".join(subs) + "->" + letters[slot:slot + 2]
    return np.conj(np.einsum(spec, *operands, optimize=True))


def _ascend(phi: DiscreteSymbol, params: SchattenParams, xs: Witnesses,
            iters: int) -> Tuple[float, Witnesses, List[float]]:
    p = params.p
    xs = [np.asarray(x, dtype=complex) for x in xs]
    value = schatten_norm(schur_multiply(phi, xs), p)
    trace = [value]
    for _ in range(iters):
        for slot, p_slot in enumerate(params.p_list):
            W = norming_matrix(schur_multiply(phi, xs), p)
            G = _slot_adjoint(phi, xs, slot, W)
            if not np.any(G):
                continue
            step = norming_matrix(G, dual_exponent(p_slot))
            candidates = [step]
            for t in BACKTRACK_STEPS:
                mixed = (1.0 - t) * xs[slot] + t * step
                size = schatten_norm(mixed, p_slot)
                if size > 0.0:
                    candidates.append(mixed / size)
            for y in candidates:
                trial = xs[:slot] + [y] + xs[slot + 1:]
                new = schatten_norm(schur_multiply(phi, trial), p)
                if new >= value:
                    xs, value = trial, new
                    break
        trace.append(value)
        if trace[-1] - trace[-2] <= ASCENT_TOL * max(trace[-1], 1e-300):
            break
    return value, xs, trace


def argmax_start(phi: DiscreteSymbol) -> Witnesses:
    """Matrix units e_{s_{i−1}} e_{s_i}^* along the chain maximizing |φ|."""
    pos = np.unravel_index(int(np.argmax(np.abs(phi.table))), phi.table.shape)
    xs = []
    for i in range(phi.n):
        e = np.zeros((phi.dim, phi.dim), dtype=complex)
        e[pos[i], pos[i + 1]] = 1.0
        xs.append(e)
    return xs


def norm_envelope(phi: DiscreteSymbol, params: SchattenParams) -> float:
    """‖φ‖_∞·N^{max(0, 1/p − 1/2)}·Π N^{max(0, 1/2 − 1/p_i)} via S_2."""
    N = phi.dim

    def recip(q):
        return 0.0 if math.isinf(q) else 1.0 / q

    factor = N ** max(0.0, recip(params.p) - 0.5)
    for q in params.p_list:
        factor *= N ** max(0.0, 0.5 - recip(q))
    return phi.sup_norm * factor


def estimate_norm(
    phi: DiscreteSymbol,
    params: SchattenParams,
    N: Optional[int] = None,
    restarts: Optional[int] = None,
    iters: Optional[int] = None,
    seed: Optional[int] = None,
    extra_starts: Optional[Sequence[Witnesses]] = None,
    task_manager: Optional[TaskManager] = None,
) -> NormEstimate:
    """
    Best ascent value over restarts.

    Restart 0 starts from argmax_start, then every extra start, then
    restarts − 1 random complex Gaussian starts drawn from task streams.
    """
    if N is not None and N != phi.dim:
        raise DimensionMismatchError(f"symbol lives on {phi.dim} indices, N={N} requested")
    if phi.dim < 2:
        raise DimensionMismatchError(f"estimates need N >= 2, got {phi.dim}")
    if params.n != phi.n:
        raise DimensionMismatchError(f"{params.n} exponents for a symbol of arity {phi.n}")
    restarts = settings.restarts if restarts is None else max(1, restarts)
    iters = settings.iters if iters is None else iters
    seed = settings.default_seed if seed is None else seed

    payloads: List[Optional[Witnesses]] = [argmax_start(phi)]
    payloads.extend(list(extra) for extra in (extra_starts or []))
    payloads.extend([None] * (restarts - 1))

    def run(start, rng):
        if start is None:
            start = [random_unit(rng, phi.dim, q) for q in params.p_list]
        return _ascend(phi, params, start, iters)

    started = time.perf_counter()
    manager = task_manager or TaskManager()
    results = manager.run_tasks("estimate_norm", run, payloads, seed=seed)
    best = max(range(len(results)), key=lambda i: results[i][0])
    value, witnesses, trace = results[best]
    value = schatten_norm(schur_multiply(phi, witnesses), params.p)

    estimate = NormEstimate(
        value=value,
        witnesses=witnesses,
        restarts=len(payloads),
        trace=trace,
        params=params,
        seed=seed,
        restart_values=[r[0] for r in results],
        envelope=norm_envelope(phi, params),
        dim=phi.dim,
        label=phi.label,
    )
    LoggerManager.log_experiment_event(
        "estimate_norm", "finished", value=value, seed=seed, dim=phi.dim, p=params.p,
        duration=time.perf_counter() - started,
    )
    if estimate.value > estimate.envelope * (1.0 + 1e-9):
        logger.warning(f"estimate {value:.6g} exceeds the S_2 envelope {estimate.envelope:.6g}")
    return estimate


def volterra_witness(N: int, kind: WitnessKind = WitnessKind.PATTERN,
                     p: Optional[float] = None) -> np.ndarray:
    """
    Lower-triangular all-ones pattern, or the half-shifted discrete Hilbert
    kernel 1/(π(s − t + 1/2)); scaled to unit S_p norm when p is given.
    """
    if N < 2:
        raise IndexOutOfRangeError(f"witness needs N >= 2, got {N}", index=N)
    kind = WitnessKind(kind)
    if kind == WitnessKind.PATTERN:
        x = np.tril(np.ones((N, N)))
    else:
        s, t = np.indices((N, N))
        x = 1.0 / (np.pi * (s - t + 0.5))
    if p is not None:
        x = x / schatten_norm(x, p)
    return x


def truncation_ratio(x: np.ndarray, p: float, kind: TruncationKind = TruncationKind.UPPER) -> float:
    """‖T(x)‖_p / ‖x‖_p for a triangular truncation T."""
    return schatten_norm(truncate(x, kind), p) / schatten_norm(x, p)


def truncation_norm_identity(x: np.ndarray, r: float) -> Tuple[float, float]:
    """(‖T^−(x*)T^+(x)‖_{r/2}, ‖T^+(x)‖_r^2); the two agree."""
    upper = truncate(x, TruncationKind.UPPER)
    lower = truncate(np.conj(np.asarray(x)).T, TruncationKind.LOWER)
    return schatten_norm(lower @ upper, r / 2.0), schatten_norm(upper, r) ** 2


def _product(xs: Sequence[np.ndarray]) -> np.ndarray:
    out = xs[0]
    for x in xs[1:]:
        out = out @ x
    return out


def convergence_check(construction: ConstructionKind, n: int, q: float, k: int, l: int,
                      index_set: Sequence[int], seed: int, p: float = 2.0) -> float:
    """
    S_p distance between a lattice construction and its limit.

    first:  T_{a∘φ¹}(x) against n!(T^+ − T^−)(x_1⋯x_n).
    second: (n!/2)·x̃_1x̃_2x_3⋯ − ½T_{a∘φ²}(x̃_1, x̃_2, x_3, …) with
            x̃ = (1−P)x, against n!·T^−(x_1)T^+(x_2)x_3⋯x_n.

    Inputs are unit matrices in S_{np} drawn from task_rng(seed, 0), so
    matched seeds give matched inputs across (k, l).
    """
    construction = ConstructionKind(construction)
    F = tuple(sorted(index_set))
    params = SchattenParams.uniform(n, p, allow_endpoints=True)
    rng = task_rng(seed, 0)
    xs = [random_unit(rng, len(F), q_i) for q_i in params.p_list]
    nfact = math.factorial(n)

    if construction == ConstructionKind.FIRST:
        phi = lattice_symbol(1, q, k, l, n, F)
        lhs = schur_multiply(phi, xs)
        prod = _product(xs)
        rhs = nfact * (truncate(prod, TruncationKind.UPPER) - truncate(prod, TruncationKind.LOWER))
    else:
        if n < 2:
            raise IndexOutOfRangeError("the second construction needs n >= 2", index=n)
        phi = lattice_symbol(2, q, k, l, n, F)
        filtered = [x - truncate(x, TruncationKind.DIAGONAL) for x in xs[:2]] + xs[2:]
        lhs = 0.5 * nfact * _product(filtered) - 0.5 * schur_multiply(phi, filtered)
        rhs = nfact * _product([truncate(xs[0], TruncationKind.LOWER),
                                truncate(xs[1], TruncationKind.UPPER)] + xs[2:])
    residual = schatten_norm(lhs - rhs, p)
    logger.debug(f"convergence {construction.value} n={n} k={k} l={l}: {residual:.3e}")
    return residual


class RemarkTerms(NamedTuple):
    terms: Tuple[float, float, float, float]
    lhs: float
    residual: float


def remark_identity(t: Sequence[float]) -> RemarkTerms:
    """
    a_3^{[3]}(t_0, −t_1, t_2, −t_3) = 3!(I + II + III + IV) for t > 0.

    I   = t_1/(t_0+t_1) · t_2/(t_1+t_2) · (t_2−t_3)/(t_2+t_3)
    II  = t_0/(t_0+t_1) · (t_0−t_3)/(t_0+t_3) · t_3/(t_2+t_3)
    III = t_0/(t_0+t_1) · t_2/(t_2+t_3)
    IV  = −t_1/(t_0+t_1) · t_1/(t_1+t_2)
    """
    t0, t1, t2, t3 = (float(v) for v in t)
    if min(t0, t1, t2, t3) <= 0.0:
        raise NonpositiveInputError(f"all four arguments must be positive, got {tuple(t)}")
    i = t1 / (t0 + t1) * t2 / (t1 + t2) * (t2 - t3) / (t2 + t3)
    ii = t0 / (t0 + t1) * (t0 - t3) / (t0 + t3) * t3 / (t2 + t3)
    iii = t0 / (t0 + t1) * t2 / (t2 + t3)
    iv = -t1 / (t0 + t1) * t1 / (t1 + t2)
    a3 = make_abs_power(3)
    lhs = a3.closed_form((t0, -t1, t2, -t3)) * a3.divdiff_scale
    residual = abs(lhs - 6.0 * (i + ii + iii + iv))
    return RemarkTerms((i, ii, iii, iv), lhs, residual)


class ExponentFit(NamedTuple):
    exponent: float
    intercept: float
    residual: float
    points: int
    claimed: bool


# fits with a larger RMS log-residual are reported but not claimed
FIT_RESIDUAL_MAX = 0.05


def fit_exponent(x: Sequence[float], values: Sequence[float]) -> Optional[ExponentFit]:
    """Least-squares slope of log(values) against log(x)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = np.isfinite(x) & np.isfinite(v) & (x > 0) & (v > 0)
    if keep.sum() < 2:
        return None
    lx, lv = np.log(x[keep]), np.log(v[keep])
    fit = linregress(lx, lv)
    residual = float(np.sqrt(np.mean((lv - (fit.intercept + fit.slope * lx)) ** 2)))
    return ExponentFit(float(fit.slope), float(fit.intercept), residual, int(keep.sum()),
                       residual < FIT_RESIDUAL_MAX)


@dataclass
class SweepExperiment:
    """
    A symbol and a p grid. `params_for(p)` chooses the slot exponents
    (uniform n·p by default); `starts_for(p)` may add extra ascent starts.
    """

    symbol: DiscreteSymbol
    p_grid: Sequence[float]
    restarts: int = 4
    iters: int = 40
    seed: int = 0
    params_for: Optional[Callable[[float], SchattenParams]] = None
    starts_for: Optional[Callable[[float], Sequence[Witnesses]]] = None


@dataclass
class SweepResult:
    p_grid: List[float]
    estimates: List[float]
    large_p: Optional[ExponentFit]
    small_p: Optional[ExponentFit]
    records: List[NormEstimate] = field(default_factory=list, repr=False)


def fit_both_regimes(p_grid: Sequence[float], values: Sequence[float]
                     ) -> Tuple[Optional[ExponentFit], Optional[ExponentFit]]:
    """Fit against log p for p ≥ 2 and against log p* for p ≤ 2."""
    p = np.asarray(p_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    large = fit_exponent(p[p >= 2.0], v[p >= 2.0])
    small_mask = p <= 2.0
    small = fit_exponent([dual_exponent(x) for x in p[small_mask]], v[small_mask])
    return large, small


def sweep_and_fit(experiment: SweepExperiment) -> SweepResult:
    phi = experiment.symbol
    records = []
    for j, p in enumerate(experiment.p_grid):
        params = (experiment.params_for(p) if experiment.params_for
                  else SchattenParams.uniform(phi.n, p, allow_endpoints=True))
        starts = experiment.starts_for(p) if experiment.starts_for else None
        p_seed = int(np.random.SeedSequence([experiment.seed, j]).generate_state(1)[0])
        records.append(estimate_norm(phi, params, restarts=experiment.restarts,
                                     iters=experiment.iters, seed=p_seed, extra_starts=starts))
    values = [r.value for r in records]
    large, small = fit_both_regimes(experiment.p_grid, values)
    LoggerManager.log_experiment_event("sweep", "finished", seed=experiment.seed,
                                       dim=phi.dim, n=phi.n)
    return SweepResult(list(map(float, experiment.p_grid)), values, large, small, records)


def bound_curve(n: int, p_grid: Sequence[float]) -> SweepResult:
    """theoretical_bound(p_i = n·p) along the grid with exponent fits."""
    values = [theoretical_bound(SchattenParams.uniform(n, p)) for p in p_grid]
    large, small = fit_both_regimes(p_grid, values)
    return SweepResult(list(map(float, p_grid)), values, large, small)


def volterra_sweep(N: int, p_grid: Sequence[float], restarts: int = 2, iters: int = 20,
                   seed: int = 0) -> SweepResult:
    """‖T^+‖ on S_p estimated from the Hilbert witness plus ascent."""
    phi = truncation_symbol(TruncationKind.UPPER, N)

    def starts_for(p):
        return [[volterra_witness(N, WitnessKind.HILBERT, p).astype(complex)]]

    experiment = SweepExperiment(phi, p_grid, restarts=restarts, iters=iters, seed=seed,
                                 params_for=lambda p: SchattenParams((p,), allow_endpoints=True),
                                 starts_for=starts_for)
    return sweep_and_fit(experiment)


class UniformityRecord(NamedTuple):
    k: int
    l: int
    lattice: float
    embedded: float
    reference: float


def lattice_uniformity(variant: int, n: int, q: float, index_set: Sequence[int],
                       kl_pairs: Sequence[Tuple[int, int]], params: SchattenParams,
                       restarts: int = 4, iters: int = 30, seed: int = 0) -> List[UniformityRecord]:
    """
    Compare each lattice estimate with a_n^{[n]} sampled on the lattice nodes.

    The lattice witnesses, embedded block-wise into the node grid, attain
    the same value for the sampled symbol; the reference estimate starts
    from them and so dominates the lattice estimate.
    """
    F = tuple(sorted(index_set))
    a = make_abs_power(n)
    records = []
    for k, l in kl_pairs:
        phi = lattice_symbol(variant, q, k, l, n, F)
        est = estimate_norm(phi, params, restarts=restarts, iters=iters, seed=seed)
        positions = lattice_position_nodes(variant, q, k, l, n, F)
        grid = np.unique(np.concatenate(positions))
        where = [[int(np.searchsorted(grid, v)) for v in pos] for pos in positions]
        embedded = []
        for i, x in enumerate(est.witnesses):
            big = np.zeros((grid.size, grid.size), dtype=complex)
            big[np.ix_(where[i], where[i + 1])] = x
            embedded.append(big)
        sampled = sampled_symbol(a, grid, n, tol=0.0)
        embedded_value = schatten_norm(schur_multiply(sampled, embedded), params.p)
        reference = estimate_norm(sampled, params, restarts=1, iters=iters, seed=seed,
                                  extra_starts=[embedded])
        records.append(UniformityRecord(k, l, est.value, embedded_value, reference.value))
    return records


def estimate_to_record(estimate: NormEstimate, witnesses: bool = True) -> NormEstimateRecord:
    return NormEstimateRecord(
        label=estimate.label,
        value=estimate.value,
        p=estimate.params.p,
        p_list=list(estimate.params.p_list),
        dim=estimate.dim,
        restarts=estimate.restarts,
        seed=estimate.seed,
        envelope=estimate.envelope,
        dispersion=estimate.dispersion,
        endpoint=estimate.endpoint,
        trace=list(estimate.trace),
        witnesses=[MatrixPayload.from_array(x) for x in estimate.witnesses] if witnesses else [],
    )
