"""
Randomized verification suites.

Each suite draws its trials from task streams of a single seed, measures
the worst residual of one family of identities and returns a
VerificationReport; breaching the tolerance is left to the caller.
"""

import logging
import math
import time
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from schurlab.core.config import settings
from schurlab.core.logging import LoggerManager
from schurlab.models.numerics import MultiIndex, NodeVector
from schurlab.models.schemas import VerificationReport, VerifySuite
from schurlab.services import homfourier
from schurlab.services.divdiff import (
    divdiff_eval,
    divdiff_simplex_oracle,
    make_abs_power,
    make_exp,
    make_power,
    make_sin,
    random_nodes,
)
from schurlab.services.normsearch import remark_identity
from schurlab.services.partition import sphere_partition, theta_eval
from schurlab.services.reduction import (
    reduce_algebraic,
    reduce_general,
    reduce_insert_xi,
    reduce_zero_insert,
)
from schurlab.services.symdecomp import (
    build_Q_table,
    evaluate_core_expansion,
    final_decomposition_terms,
    sample_domain_point,
)
from schurlab.services.task_manager import TaskManager, task_rng

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    VerifySuite.REDUCTIONS: 1e-8,
    VerifySuite.DIVDIFF: 1e-9,
    VerifySuite.DECOMPOSITION: 1e-7,
    VerifySuite.PARTITION: 1e-12,
    VerifySuite.FOURIER: 1e-3,
    VerifySuite.REMARK: 1e-9,
}


def _function_pool(rng: np.random.Generator, n: int):
    choice = int(rng.integers(0, 3))
    if choice == 0:
        return make_power(int(rng.integers(n, 9)))
    return make_exp() if choice == 1 else make_sin()


def complete_homogeneous(points, degree: int) -> float:
    """h_degree(points); equals the order-n divided difference of x^{n+degree}."""
    h = [1.0] + [0.0] * degree
    for x in points:
        for d in range(1, degree + 1):
            h[d] += x * h[d - 1]
    return h[degree] if degree >= 0 else 0.0


def _spaced_points(rng: np.random.Generator, size: int, spread: float = 2.0,
                   gap: float = 0.25, avoid: Tuple[float, ...] = ()) -> np.ndarray:
    """Uniform points on [−spread, spread] pairwise (and from `avoid`) at least `gap` apart."""
    while True:
        pts = rng.uniform(-spread, spread, size=size)
        merged = np.sort(np.concatenate([pts, avoid]))
        if merged.size < 2 or np.diff(merged).min() > gap:
            return pts


def _spaced_nodes(rng: np.random.Generator, order: int, xi_count: int = 0):
    """Random block structure of the given order on spaced nodes, plus spaced extra points."""
    blocks = int(rng.integers(1, order + 2))
    cuts = np.sort(rng.choice(np.arange(1, order + 1), size=blocks - 1, replace=False))
    alpha = np.diff(np.concatenate(([0], cuts, [order + 1])))
    pts = _spaced_points(rng, blocks + xi_count)
    nodes = NodeVector(tuple(pts[:blocks]), MultiIndex(tuple(int(a) for a in alpha)))
    return nodes, [float(x) for x in pts[blocks:]]


def _relative(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def _collect(suite: VerifySuite, trials: int, seed: int, tol: Optional[float],
             trial: Callable[[int, np.random.Generator], Dict[str, float]],
             extra: Optional[Dict] = None) -> VerificationReport:
    tol = DEFAULT_TOLERANCES[suite] if tol is None else tol
    started = time.perf_counter()
    results = TaskManager().run_tasks(f"verify_{suite.value}", trial, list(range(trials)), seed=seed)
    worst: Dict[str, float] = {}
    for r in results:
        for key, value in r.items():
            worst[key] = max(worst.get(key, 0.0), value)
    max_residual = max(worst.values(), default=0.0)
    duration = time.perf_counter() - started
    details = {"max_by_check": worst}
    details.update(extra or {})
    report = VerificationReport(suite=suite.value, trials=trials, max_residual=max_residual,
                                tol=tol, passed=max_residual <= tol, seed=seed, details=details)
    LoggerManager.log_experiment_event(f"verify_{suite.value}", "finished", seed=seed,
                                       residual=max_residual, duration=duration)
    return report


def verify_reductions(n: int = 4, trials: int = 200, seed: int = 0,
                      tol: Optional[float] = None) -> VerificationReport:
    """Insertion, general, algebraic and zero-insertion reductions for orders 2..n."""

    def trial(_, rng):
        order = int(rng.integers(2, max(n, 2) + 1))
        f = _function_pool(rng, order)
        out = {}

        sample = _spaced_points(rng, order + 2, avoid=(0.0,))
        points, xi = list(sample[:-1]), float(sample[-1])
        i, j = (int(v) for v in rng.choice(order + 1, size=2, replace=False))
        lhs = divdiff_eval(f, NodeVector.from_points(points))
        out["insert_xi"] = reduce_insert_xi(f, points, i, j, xi).residual(f, lhs)
        out["zero_insert"] = reduce_zero_insert(f, points, i, j).residual(f, lhs)

        nodes, (xi,) = _spaced_nodes(rng, order, xi_count=1)
        blocks = len(nodes.distinct_nodes)
        if blocks >= 2:
            lhs = divdiff_eval(f, nodes)
            i, j = (int(v) for v in rng.choice(blocks, size=2, replace=False))
            out["general"] = reduce_general(f, nodes, i, j, xi).residual(f, lhs)
            if blocks >= 3:
                k = next(m for m in range(blocks) if m not in (i, j))
                out["algebraic"] = reduce_algebraic(f, nodes, i, j, k).residual(f, lhs)
        return out

    return _collect(VerifySuite.REDUCTIONS, trials, seed, tol, trial, {"n": n})


def _oracle_sigma(f, nodes: NodeVector, samples: int, seed: int) -> float:
    """|oracle − tableau| in units of the oracle's standard error."""
    oracle = divdiff_simplex_oracle(f, nodes, samples, seed)
    error = abs(oracle.estimate - divdiff_eval(f, nodes))
    if oracle.stderr > 0.0:
        return error / oracle.stderr
    return 0.0 if error < 1e-12 else math.inf


def verify_divdiff(n: int = 4, trials: int = 200, seed: int = 0, tol: Optional[float] = None,
                   oracle_samples: Optional[int] = None) -> VerificationReport:
    """
    Permutation invariance, the x^d confluent oracle and exact a_n values;
    the simplex oracle is compared in units of its standard error for x^k,
    exp and sin at every order up to n, and for a_2 at (1, 1, −1).
    """
    samples = settings.oracle_samples if oracle_samples is None else oracle_samples

    def trial(_, rng):
        order = int(rng.integers(1, max(n, 1) + 1))
        nodes, _ = _spaced_nodes(rng, order)
        out = {}

        f = _function_pool(rng, order)
        base = divdiff_eval(f, nodes)
        perm = rng.permutation(len(nodes.distinct_nodes))
        out["permutation"] = _relative(base, divdiff_eval(f, nodes.permuted(perm)))

        d = int(rng.integers(order, order + 5))
        exact = complete_homogeneous(nodes.expanded(), d - order)
        out["confluent_power"] = _relative(exact, divdiff_eval(make_power(d), nodes))

        sign = 1.0 if rng.random() < 0.5 else -1.0
        pts = sign * rng.uniform(0.1, 3.0, size=order + 1)
        a = make_abs_power(order)
        out["abs_power"] = abs(divdiff_eval(a, NodeVector.from_points(pts)) - sign * math.factorial(order))
        return out

    report = _collect(VerifySuite.DIVDIFF, trials, seed, tol, trial, {"n": n})

    sigmas: Dict[str, float] = {}
    for order in range(1, max(n, 1) + 1):
        nodes = random_nodes(task_rng(seed, trials + order), order, max_blocks=order + 1)
        for f in (make_power(order + 2), make_exp(), make_sin()):
            sigmas[f"{f.label}_n{order}"] = _oracle_sigma(f, nodes, samples, seed + order)
    sigmas["a_2_n2"] = _oracle_sigma(make_abs_power(2), NodeVector.from_points([1.0, 1.0, -1.0]),
                                     samples, seed)
    worst = max(sigmas.values())
    report.details["oracle_sigma"] = worst
    report.details["oracle_sigma_by_case"] = sigmas
    report.passed = report.passed and worst <= 3.0
    return report


def verify_decomposition(n: int = 3, trials: int = 200, seed: int = 0,
                         tol: Optional[float] = None) -> VerificationReport:
    """Core expansion and final decomposition at random λ ∈ D_n."""
    table_core = build_Q_table(n, n - 1)
    positivity = all(q.vanishes_on_coordinate_hyperplanes() for _, q in table_core.items())
    funcs = [make_exp(), make_sin(), make_power(n + 2)]

    def trial(_, rng):
        lam = sample_domain_point(rng, n)
        out = {}
        terms = final_decomposition_terms(lam, n, table_core)
        out["structure"] = max(
            abs(t.last_xi - (lam[t.terminal[1]] - lam[t.terminal[0]])) for t in terms
        )
        for f in funcs:
            exact = divdiff_eval(f, NodeVector.simple(*lam))
            core = evaluate_core_expansion(f, lam, n, n - 1, table_core)
            final = sum(t.weight * divdiff_eval(f, t.nodes) for t in terms if t.weight != 0.0)
            out[f"core_{f.label}"] = _relative(exact, core)
            out[f"final_{f.label}"] = _relative(exact, final)
        return out

    report = _collect(VerifySuite.DECOMPOSITION, trials, seed, tol, trial,
                      {"n": n, "entries": len(table_core), "monomials_positive": positivity})
    report.passed = report.passed and positivity
    return report


def verify_partition(trials: int = 200, seed: int = 0, tol: Optional[float] = None,
                     dims: Tuple[int, ...] = (2, 3, 4)) -> VerificationReport:
    """Sum to one, chart support and homogeneity of θ̃; sum to one of θ_{I,·}."""

    def trial(_, rng):
        out = {"sum": 0.0, "support": 0.0, "homogeneity": 0.0, "theta_sum": 0.0}
        for k in dims:
            part = sphere_partition(k)
            xi = rng.standard_normal(k)
            values = part.eval_all(xi)
            out["sum"] = max(out["sum"], abs(values.sum() - 1.0))
            for l in range(1, k + 1):
                if values[l - 1] > 0.0 and not part.in_chart(l, xi):
                    out["support"] = 1.0
            scaled = part.eval_all(float(rng.uniform(0.1, 10.0)) * xi)
            out["homogeneity"] = max(out["homogeneity"], float(np.max(np.abs(scaled - values))))

            lam = rng.standard_normal(k + 1)
            I = tuple(range(k + 1))
            total = sum(theta_eval(I, i, lam) for i in I[1:])
            out["theta_sum"] = max(out["theta_sum"], abs(total - 1.0))
        return out

    return _collect(VerifySuite.PARTITION, trials, seed, tol, trial)


def fourier_test_points(rng: np.random.Generator, n: int, count: int, span: float = 3.0) -> np.ndarray:
    """Points with log-ratios uniform in [−span, span] and random signs and scale."""
    t = rng.uniform(-span, span, size=(count, n - 1))
    signs = rng.choice([-1.0, 1.0], size=(count, n))
    scale = rng.uniform(0.5, 2.0, size=(count, 1))
    magnitudes = np.exp(np.concatenate([np.zeros((count, 1)), np.cumsum(t, axis=1)], axis=1))
    return signs * scale * magnitudes


def verify_fourier(trials: int = 100, seed: int = 0, tol: Optional[float] = None) -> VerificationReport:
    """Reconstruction of two H_2 symbols and one H_3 symbol from their weights."""
    symbols = [homfourier.chart_power_symbol(2), homfourier.chart_power_symbol(3),
               homfourier.chart_chain_symbol()]
    weights = {phi.label: homfourier.fourier_weights(phi) for phi in symbols}
    for phi in symbols:
        homfourier.compress_to_psi(phi, seed=seed)

    def trial(_, rng):
        out = {}
        for phi in symbols:
            xi = fourier_test_points(rng, phi.n, 1)[0]
            direct = complex(phi.eval(xi))
            approx = homfourier.reconstruct(phi, weights[phi.label], xi)
            out[phi.label] = abs(direct - approx)
        return out

    extra = {"points": {label: w.points for label, w in weights.items()},
             "boundary_ratio": {label: w.boundary_ratio for label, w in weights.items()}}
    return _collect(VerifySuite.FOURIER, trials, seed, tol, trial, extra)


def verify_remark(trials: int = 100, seed: int = 0, tol: Optional[float] = None) -> VerificationReport:
    """The four-term identity for a_3^{[3]} at alternating-sign points."""

    def trial(_, rng):
        t = rng.uniform(0.1, 10.0, size=4)
        return {"identity": remark_identity(t).residual}

    return _collect(VerifySuite.REMARK, trials, seed, tol, trial)


def run_suite(suite: VerifySuite, n: Optional[int] = None, trials: Optional[int] = None,
              seed: int = 0, tol: Optional[float] = None) -> VerificationReport:
    suite = VerifySuite(suite)
    logger.info(f"running {suite.value} suite seed={seed}")
    kwargs = {"seed": seed, "tol": tol}
    if trials is not None:
        kwargs["trials"] = trials
    if suite == VerifySuite.REDUCTIONS:
        return verify_reductions(n=n or 4, **kwargs)
    if suite == VerifySuite.DIVDIFF:
        return verify_divdiff(n=n or 4, **kwargs)
    if suite == VerifySuite.DECOMPOSITION:
        return verify_decomposition(n=n or 3, **kwargs)
    if suite == VerifySuite.PARTITION:
        return verify_partition(**kwargs)
    if suite == VerifySuite.FOURIER:
        return verify_fourier(**kwargs)
    return verify_remark(**kwargs)
