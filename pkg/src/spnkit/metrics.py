"""Total variation distances and closeness certificates.

Exact TV is available for categorical models by enumerating the joint grid.
Continuous models use an importance estimator that draws from the equal
mixture of the two densities, whose integrand |a-b|/(a+b) is bounded in
[0, 1] and needs only log-density differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NumericalError,
    SizeError,
    StructureError,
    SupportError,
)
from .model import (
    Categorical,
    Gaussian,
    SpnModel,
    log_density_batch,
    sample_batch,
)
from .signature import Leaf, SignatureNode, Sum, same_structure

GRID_CAP = 10_000_000
_CHUNK = 1_000_000
_SIMILARITY_MC_SAMPLES = 100_000
_SIMILARITY_MC_SEED = 0x5155


def categorical_grid(model: SpnModel) -> tuple[int, ...]:
    """Per-dimension support sizes of the joint grid (max over leaves)."""
    if model.kind != "categorical":
        raise SupportError("joint grids exist only for categorical models")
    sizes = [1] * model.n
    for leaf in model.leaf_nodes:
        dist = model.bindings[leaf.symbol]
        for axis, dim in enumerate(leaf.scope.dims):
            sizes[dim - 1] = max(sizes[dim - 1], dist.support[axis])
    return tuple(sizes)


def _grid_points(sizes: tuple[int, ...], start: int, stop: int) -> np.ndarray:
    flat = np.arange(start, stop)
    coords = np.array(np.unravel_index(flat, sizes)).T
    return coords.astype(float)


def tv_exact(a: SpnModel, b: SpnModel) -> float:
    """Exactly 0.5 * sum over the joint grid of |a(x) - b(x)|."""
    ga, gb = categorical_grid(a), categorical_grid(b)
    if a.n != b.n or ga != gb:
        raise SupportError(f"joint support grids differ: {ga} vs {gb}")
    total = int(np.prod(ga))
    if total > GRID_CAP:
        raise SizeError(f"joint grid has {total} points, cap is {GRID_CAP}")
    acc = 0.0
    for start in range(0, total, _CHUNK):
        pts = _grid_points(ga, start, min(start + _CHUNK, total))
        pa = np.exp(log_density_batch(a, pts))
        pb = np.exp(log_density_batch(b, pts))
        acc += float(np.abs(pa - pb).sum())
    return 0.5 * acc


def _tv_integrand(log_a: np.ndarray, log_b: np.ndarray) -> np.ndarray:
    """|a-b|/(a+b) from log densities; raises if both underflowed."""
    both_gone = np.isneginf(log_a) & np.isneginf(log_b)
    if np.any(both_gone):
        raise NumericalError("both densities underflowed to zero at a drawn point")
    ratio = np.exp(-np.abs(log_a - log_b))
    return (1.0 - ratio) / (1.0 + ratio)


def tv_monte_carlo(a: SpnModel, b: SpnModel, samples: int, seed: int) -> tuple[float, float]:
    """Unbiased TV estimate and its standard error.

    Draws from the mixture (a+b)/2 by a fair coin per draw.
    """
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    sub = np.random.SeedSequence(seed).generate_state(3)
    coin = np.random.Generator(np.random.Philox(int(sub[0]))).random(samples) < 0.5
    n_a = int(coin.sum())
    pts = np.empty((samples, a.n), dtype=float)
    if n_a:
        pts[coin] = sample_batch(a, int(sub[1]), n_a).points
    if samples - n_a:
        pts[~coin] = sample_batch(b, int(sub[2]), samples - n_a).points
    vals = _tv_integrand(log_density_batch(a, pts), log_density_batch(b, pts))
    estimate = float(vals.mean())
    std_error = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return estimate, std_error


# ---------------------------------------------------------------------------
# Gaussian closed form (one-dimensional)


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def tv_gaussian_1d(mean_a: float, var_a: float, mean_b: float, var_b: float) -> float:
    """Exact TV between two univariate Gaussians via their crossing points."""
    if var_a <= 0 or var_b <= 0:
        raise ValueError("variances must be positive")
    sa, sb = math.sqrt(var_a), math.sqrt(var_b)
    if mean_a == mean_b and var_a == var_b:
        return 0.0
    if abs(var_a - var_b) < 1e-15 * max(var_a, var_b):
        return 2.0 * _phi(abs(mean_a - mean_b) / (2.0 * sa)) - 1.0
    # density crossings solve a quadratic in x
    qa = 1.0 / var_b - 1.0 / var_a
    qb = -2.0 * (mean_b / var_b - mean_a / var_a)
    qc = mean_b ** 2 / var_b - mean_a ** 2 / var_a - math.log(var_a / var_b)
    disc = qb * qb - 4.0 * qa * qc
    disc = max(disc, 0.0)
    r1 = (-qb - math.sqrt(disc)) / (2.0 * qa)
    r2 = (-qb + math.sqrt(disc)) / (2.0 * qa)
    cuts = sorted((r1, r2))

    def gap(x: float) -> float:
        return _phi((x - mean_a) / sa) - _phi((x - mean_b) / sb)

    knots = [gap(cuts[0]), gap(cuts[1])]
    l1 = abs(knots[0]) + abs(knots[1] - knots[0]) + abs(knots[1])
    return 0.5 * l1


# ---------------------------------------------------------------------------
# Similarity certificates


@dataclass(frozen=True)
class SimilarityReport:
    """Minimal closeness certificate between two same-structure models."""

    is_same_structure: bool
    leaf_eps: tuple[float, ...] = ()
    weight_alpha: tuple[float, ...] = ()
    eps: float | None = None
    alpha: float | None = None


def _leaf_tv(da, db) -> float:
    if isinstance(da, Categorical):
        shape = tuple(max(x, y) for x, y in zip(da.support, db.support))
        pa = np.zeros(shape)
        pa[tuple(slice(0, s) for s in da.support)] = da.probs.reshape(da.support)
        pb = np.zeros(shape)
        pb[tuple(slice(0, s) for s in db.support)] = db.probs.reshape(db.support)
        return 0.5 * float(np.abs(pa - pb).sum())
    assert isinstance(da, Gaussian) and isinstance(db, Gaussian)
    if da.dim == 1:
        return tv_gaussian_1d(
            float(da.mean[0]), float(da.cov[0, 0]),
            float(db.mean[0]), float(db.cov[0, 0]),
        )
    return _gaussian_tv_mc(da, db)


def _gaussian_tv_mc(da: Gaussian, db: Gaussian) -> float:
    from .signature import Scope  # local import to avoid cycle noise

    d = da.dim
    leaf = Leaf("g", Scope(tuple(range(1, d + 1)), d))
    ma = SpnModel(leaf, {"g": da})
    mb = SpnModel(leaf, {"g": db})
    est, _ = tv_monte_carlo(ma, mb, _SIMILARITY_MC_SAMPLES, _SIMILARITY_MC_SEED)
    return est


def similarity(a: SpnModel, b: SpnModel) -> SimilarityReport:
    """Per-leaf TV and per-weight gaps under index-wise matching, plus their
    maxima; structure mismatch yields an empty report."""
    if not same_structure(a.structure, b.structure):
        return SimilarityReport(is_same_structure=False)
    leaf_eps = tuple(
        _leaf_tv(a.bindings[sa.symbol], b.bindings[sb.symbol])
        for sa, sb in zip(a.leaf_nodes, b.leaf_nodes)
    )
    weight_alpha: list[float] = []
    for na, nb in zip(_sum_nodes(a.structure), _sum_nodes(b.structure)):
        weight_alpha.extend(abs(wa - wb) for wa, wb in zip(na.weights, nb.weights))
    return SimilarityReport(
        is_same_structure=True,
        leaf_eps=leaf_eps,
        weight_alpha=tuple(weight_alpha),
        eps=max(leaf_eps),
        alpha=max(weight_alpha, default=0.0),
    )


def _sum_nodes(node: SignatureNode) -> list[Sum]:
    from .signature import iter_sum_nodes

    return list(iter_sum_nodes(node))


def tv_bound_similar(report: SimilarityReport, n: int, k: int) -> float:
    """The closeness bound n * eps + k * alpha / 2 for same-structure pairs."""
    if not report.is_same_structure:
        raise StructureError("bound requires two models with the same structure")
    return n * report.eps + k * report.alpha / 2.0


def product_l1_check(ps: list[np.ndarray], qs: list[np.ndarray]) -> tuple[float, float]:
    """L1 distance between two product pmfs versus the sum of factor L1s.

    Returns (lhs, rhs); the product inequality guarantees lhs <= rhs.
    """
    if len(ps) != len(qs) or not ps:
        raise ValueError("need matched non-empty factor lists")
    ps = [np.asarray(p, dtype=float).ravel() for p in ps]
    qs = [np.asarray(q, dtype=float).ravel() for q in qs]
    for p, q in zip(ps, qs):
        if len(p) != len(q):
            raise SupportError("matched factors must share a support size")
    total = 1
    for p in ps:
        total *= len(p)
    if total > GRID_CAP:
        raise SizeError(f"joint grid has {total} points, cap is {GRID_CAP}")
    joint_p = ps[0]
    joint_q = qs[0]
    for p, q in zip(ps[1:], qs[1:]):
        joint_p = np.multiply.outer(joint_p, p).ravel()
        joint_q = np.multiply.outer(joint_q, q).ravel()
    lhs = float(np.abs(joint_p - joint_q).sum())
    rhs = float(sum(np.abs(p - q).sum() for p, q in zip(ps, qs)))
    return lhs, rhs
