"""
Divided differences f^{[n]} with repeated nodes.

Confluent evaluation runs the extended Newton tableau with derivative
fill-in at repeated nodes. The generalized absolute value a_n(s) = |s|s^{n-1}
carries an exact evaluator for its top-order divided difference, and a
Monte-Carlo simplex average serves as an independent oracle.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from schurlab.core.config import settings
from schurlab.core.error_handling import OrderTooLowError
from schurlab.models.numerics import MultiIndex, NodeVector, SmoothFunction

logger = logging.getLogger(__name__)

# Smooth functions expose this many derivatives.
SMOOTH_ORDER = 64


class OracleEstimate(NamedTuple):
    estimate: float
    stderr: float


def make_polynomial(coefficients: Sequence[float], label: Optional[str] = None) -> SmoothFunction:
    """Polynomial with ascending coefficients c_0 + c_1 x + …"""
    poly = Polynomial(np.asarray(coefficients, dtype=float))
    derivs = [poly]
    for _ in range(min(poly.degree(), SMOOTH_ORDER)):
        derivs.append(derivs[-1].deriv())

    def derivative(x, d):
        if d < len(derivs):
            return derivs[d](x)
        return np.zeros_like(np.asarray(x, dtype=float))

    return SmoothFunction(
        label=label or f"poly{tuple(float(c) for c in coefficients)}",
        order_max=SMOOTH_ORDER,
        derivative=derivative,
    )


def make_power(k: int) -> SmoothFunction:
    """x^k"""
    coeffs = [0.0] * k + [1.0]
    return make_polynomial(coeffs, label=f"x^{k}")


def make_exp() -> SmoothFunction:
    return SmoothFunction(label="exp", order_max=SMOOTH_ORDER, derivative=lambda x, d: np.exp(x))


def make_sin() -> SmoothFunction:
    def derivative(x, d):
        return np.sin(np.asarray(x, dtype=float) + d * np.pi / 2)

    return SmoothFunction(label="sin", order_max=SMOOTH_ORDER, derivative=derivative)


def make_cos() -> SmoothFunction:
    def derivative(x, d):
        return np.cos(np.asarray(x, dtype=float) + d * np.pi / 2)

    return SmoothFunction(label="cos", order_max=SMOOTH_ORDER, derivative=derivative)


@lru_cache(maxsize=65536)
def _sign_orthant_value(points: Tuple[float, ...]) -> float:
    # Zero insertion between the first positive and first negative entry
    # until every tuple is one-signed.
    pos = next((i for i, t in enumerate(points) if t > 0), None)
    neg = next((i for i, t in enumerate(points) if t < 0), None)
    if pos is None and neg is None:
        return 0.0
    if neg is None:
        return 1.0
    if pos is None:
        return -1.0
    ti, tj = points[pos], points[neg]
    span = ti - tj
    drop_j = list(points)
    drop_j[neg] = 0.0
    drop_i = list(points)
    drop_i[pos] = 0.0
    return (ti / span) * _sign_orthant_value(tuple(sorted(drop_j))) \
        - (tj / span) * _sign_orthant_value(tuple(sorted(drop_i)))


def abs_power_divdiff(points: Sequence[float]) -> float:
    """
    Raw top-order divided difference of a_n at n+1 points.

    Equals σ on tuples with σt_i ≥ 0 (not all zero) and 0 at all-equal
    points; every other point reduces to those by zero insertion.
    """
    pts = tuple(sorted(float(t) for t in points))
    if pts[0] == pts[-1]:
        return 0.0
    return _sign_orthant_value(pts)


def make_abs_power(n: int) -> SmoothFunction:
    """
    Generalized absolute value a_n(s) = |s| s^{n-1}.

    Derivatives are (n!/(n-d)!)|s|s^{n-1-d} for d < n and sign(s)·n! for
    d = n (0 at s = 0). Top-order divided differences are scaled by n! so
    that one-signed tuples give σ·n!.
    """
    if n < 1:
        raise ValueError(f"a_n needs n >= 1, got {n}")
    nfact = math.factorial(n)

    def derivative(x, d):
        s = np.asarray(x, dtype=float)
        if d == n:
            return np.sign(s) * nfact
        c = nfact / math.factorial(n - d)
        return c * np.abs(s) * s ** (n - 1 - d)

    def closed_form(points):
        if len(points) != n + 1:
            return None
        return abs_power_divdiff(points)

    return SmoothFunction(
        label=f"a_{n}",
        order_max=n,
        derivative=derivative,
        singular_at_zero=True,
        divdiff_scale=float(nfact),
        closed_form=closed_form,
    )


def newton_tableau(f: SmoothFunction, nodes: NodeVector) -> np.ndarray:
    """
    Extended divided-difference table.

    Entry [i, j] is the divided difference over expanded points i..i+j;
    runs inside a single block are filled with f^{(j)}/j!.
    """
    x = np.asarray(nodes.expanded(), dtype=float)
    blocks = np.asarray(nodes.block_ids())
    m = x.size
    top = max(nodes.multiplicities) - 1
    if f.singular_at_zero and top >= f.order_max:
        for node, a in zip(nodes.distinct_nodes, nodes.multiplicities):
            if node == 0.0 and a - 1 >= f.order_max:
                raise OrderTooLowError(
                    f"{f.label}: derivative of order {f.order_max} is undefined at 0",
                    required=a - 1, available=f.order_max - 1,
                )

    table = np.zeros((m, m))
    table[:, 0] = f.eval(x, 0)
    for j in range(1, m):
        same = blocks[:m - j] == blocks[j:]
        denom = np.where(same, 1.0, x[j:] - x[:m - j])
        col = (table[1:m - j + 1, j - 1] - table[:m - j, j - 1]) / denom
        if same.any():
            col[same] = np.asarray(f.eval(x[:m - j][same], j), dtype=float) / math.factorial(j)
        table[:m - j, j] = col
    return table


def divdiff_eval(f: SmoothFunction, nodes: NodeVector, raw: bool = False) -> float:
    """
    f^{[n]}(λ^{(α)}) for n = |α| − 1.

    `raw` skips the function's top-order normalization. For a_n at the top
    order a single block of multiplicity n+1 returns 0, including the
    block at 0 where a_n^{(n)} jumps; it does not raise.
    """
    order = nodes.order
    if order > f.order_max:
        raise OrderTooLowError(
            f"{f.label} has derivatives up to {f.order_max}, order {order} requested",
            required=order, available=f.order_max,
        )
    value = None
    if f.closed_form is not None and order == f.order_max:
        value = f.closed_form(nodes.expanded())
    if value is None:
        value = float(newton_tableau(f, nodes)[0, -1])
    return value if raw else value * f.scale_for(order)


def divdiff_points(f: SmoothFunction, points: Sequence[float],
                   tol: Optional[float] = None, raw: bool = False) -> float:
    """divdiff_eval on a flat point list; coincident points form blocks."""
    return divdiff_eval(f, NodeVector.from_points(points, tol=tol), raw=raw)


def divdiff_simplex_oracle(f: SmoothFunction, nodes: NodeVector, samples: int,
                           seed: int, raw: bool = False) -> OracleEstimate:
    """
    Monte-Carlo Hermite–Genocchi estimate.

    f^{[n]} is the mean of f^{(n)} at Dirichlet(α)-distributed convex
    combinations of the distinct nodes, divided by n!.
    """
    order = nodes.order
    if order > f.order_max:
        raise OrderTooLowError(
            f"{f.label} has derivatives up to {f.order_max}, order {order} requested",
            required=order, available=f.order_max,
        )
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")

    scale = (1.0 if raw else f.scale_for(order)) / math.factorial(order)
    lam = np.asarray(nodes.distinct_nodes, dtype=float)
    alpha = np.asarray(nodes.multiplicities.entries, dtype=float)

    if lam.size == 1:
        value = float(f.eval(lam[0], order)) * scale
        return OracleEstimate(value, 0.0)

    rng = np.random.Generator(np.random.Philox(seed))
    count, mean, m2 = 0, 0.0, 0.0
    remaining = samples
    while remaining > 0:
        size = min(remaining, settings.oracle_chunk)
        w = rng.dirichlet(alpha, size=size)
        vals = np.asarray(f.eval(w @ lam, order), dtype=float)
        c_mean = float(vals.mean())
        c_m2 = float(((vals - c_mean) ** 2).sum())
        delta = c_mean - mean
        total = count + size
        mean += delta * size / total
        m2 += c_m2 + delta * delta * count * size / total
        count = total
        remaining -= size

    stderr = math.sqrt(m2 / (count - 1) / count) if count > 1 else math.nan
    logger.debug(f"simplex oracle {f.label} order={order} samples={samples} mean={mean:.6g}")
    return OracleEstimate(mean * scale, stderr * abs(scale))


def random_nodes(rng: np.random.Generator, n: int, spread: float = 2.0,
                 max_blocks: Optional[int] = None) -> NodeVector:
    """Random node vector of order n with random block multiplicities."""
    blocks = int(rng.integers(1, (max_blocks or n + 1) + 1))
    blocks = min(blocks, n + 1)
    cuts = np.sort(rng.choice(np.arange(1, n + 1), size=blocks - 1, replace=False))
    alpha = np.diff(np.concatenate(([0], cuts, [n + 1])))
    while True:
        lam = rng.uniform(-spread, spread, size=blocks)
        gaps = np.diff(np.sort(lam))
        if gaps.size == 0 or gaps.min() > 1e-2 * spread:
            break
    return NodeVector(tuple(lam), MultiIndex(tuple(int(a) for a in alpha)))
