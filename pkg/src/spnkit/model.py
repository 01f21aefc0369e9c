"""Concrete distributions on top of signatures.

A model binds every leaf symbol of a signature to a categorical pmf or a
Gaussian. Evaluation walks the tree in log space; sampling is ancestral with
a counter-based generator so runs are reproducible. Models are immutable
after construction and safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import DimensionError, ModelError, ScopeError
from .signature import (
    Leaf,
    SignatureNode,
    Sum,
    iter_leaves,
    parse_signature,
    render_signature,
)

PMF_SUM_TOL = 1e-9
SYMMETRY_TOL = 1e-9
_INT_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Categorical:
    """A pmf over the integer grid prod_i {0..support[i]-1}, stored flat.

    The flat index is row-major over the scope dimensions in ascending order.
    Most models use single-dimension leaves, i.e. support = (d,).
    """

    probs: np.ndarray
    support: tuple[int, ...]

    def __init__(self, probs, support: Sequence[int] | None = None):
        probs = _frozen(np.asarray(probs, dtype=float).ravel())
        if support is None:
            support = (len(probs),)
        support = tuple(int(s) for s in support)
        if any(s < 1 for s in support):
            raise ModelError(f"support sizes must be positive, got {support}")
        if int(np.prod(support)) != len(probs):
            raise ModelError(
                f"pmf length {len(probs)} does not match support grid {support}"
            )
        if np.any(probs < 0):
            raise ModelError("pmf entries must be non-negative")
        if abs(float(probs.sum()) - 1.0) > PMF_SUM_TOL:
            raise ModelError(f"pmf sums to {float(probs.sum())!r}, expected 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "support", support)

    @property
    def dim(self) -> int:
        return len(self.support)

    def log_density(self, x: np.ndarray) -> np.ndarray:
        """Log pmf at the rows of x (shape (m, dim)); non-integer or
        out-of-range coordinates get probability zero."""
        x = np.asarray(x, dtype=float)
        idx = np.rint(x)
        valid = np.all(np.abs(x - idx) <= _INT_TOL, axis=1)
        idx = idx.astype(int)
        for axis, size in enumerate(self.support):
            valid &= (idx[:, axis] >= 0) & (idx[:, axis] < size)
        flat = np.zeros(len(x), dtype=int)
        for axis, size in enumerate(self.support):
            flat = flat * size + np.clip(idx[:, axis], 0, size - 1)
        with np.errstate(divide="ignore"):
            out = np.where(valid, np.log(self.probs[flat]), -np.inf)
        return out

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        cum = np.cumsum(self.probs)
        cum = cum / cum[-1]
        flat = np.searchsorted(cum, rng.random(count), side="right")
        flat = np.minimum(flat, len(self.probs) - 1)
        coords = np.empty((count, self.dim), dtype=float)
        for axis in range(self.dim - 1, -1, -1):
            size = self.support[axis]
            coords[:, axis] = flat % size
            flat = flat // size
        return coords


@dataclass(frozen=True, eq=False)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __init__(self, mean, cov):
        mean = _frozen(np.asarray(mean, dtype=float).ravel())
        cov = np.asarray(cov, dtype=float)
        d = len(mean)
        if cov.ndim == 1:
            cov = cov.reshape(d, d) if cov.size == d * d else np.diag(cov)
        if cov.shape != (d, d):
            raise ModelError(f"covariance shape {cov.shape} does not match mean length {d}")
        if np.max(np.abs(cov - cov.T), initial=0.0) > SYMMETRY_TOL:
            raise ModelError("covariance is not symmetric")
        cov = _frozen((cov + cov.T) / 2.0)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        # fail at binding time, not at first evaluation
        self.chol

    @property
    def dim(self) -> int:
        return len(self.mean)

    @cached_property
    def chol(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError:
            raise ModelError("covariance is not positive definite") from None

    def log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        diff = x - self.mean
        y = np.linalg.solve(self.chol, diff.T)
        maha = np.sum(y * y, axis=0)
        logdet = 2.0 * float(np.sum(np.log(np.diag(self.chol))))
        return -0.5 * (self.dim * np.log(2 * np.pi) + logdet + maha)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        z = rng.standard_normal((count, self.dim))
        return z @ self.chol.T + self.mean


LeafDistribution = Union[Categorical, Gaussian]


@dataclass(frozen=True)
class LabeledSample:
    """One draw plus the leaf indices that produced its coordinate blocks."""

    point: np.ndarray
    leaf_path: tuple[int, ...]


@dataclass(frozen=True)
class SampleBatch:
    """Vectorized draw: points is (m, n); labels[r, d] is the index of the
    leaf that generated coordinate d+1 of row r."""

    points: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def to_labeled(self) -> list[LabeledSample]:
        out = []
        for row, lab in zip(self.points, self.labels):
            path = tuple(dict.fromkeys(int(v) for v in lab))
            out.append(LabeledSample(row.copy(), path))
        return out


@dataclass(frozen=True, eq=False)
class SpnModel:
    """A signature plus one distribution per leaf symbol.

    Leaf symbols must be unique, bindings must cover them exactly, every
    bound distribution must match its scope size, leaves must all be
    categorical or all Gaussian, and the root scope must cover {1..n}.
    """

    structure: SignatureNode
    bindings: Mapping[str, LeafDistribution]

    def __post_init__(self):
        object.__setattr__(self, "bindings", dict(self.bindings))
        leaves = tuple(iter_leaves(self.structure))
        symbols = [leaf.symbol for leaf in leaves]
        if len(set(symbols)) != len(symbols):
            raise ModelError("leaf symbols must be unique within a model")
        missing = set(symbols) - set(self.bindings)
        extra = set(self.bindings) - set(symbols)
        if missing or extra:
            raise ModelError(f"bindings mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
        root = self.structure.scope
        if root.dims != tuple(range(1, root.n + 1)):
            raise ScopeError(
                f"model root scope {root.render()} must cover all of 1..{root.n}"
            )
        kinds = set()
        for leaf in leaves:
            dist = self.bindings[leaf.symbol]
            kinds.add("categorical" if isinstance(dist, Categorical) else "gaussian")
            if dist.dim != leaf.scope.size:
                raise ModelError(
                    f"leaf {leaf.symbol} has scope size {leaf.scope.size} but a "
                    f"{dist.dim}-dimensional distribution"
                )
        if len(kinds) > 1:
            raise ModelError("categorical and Gaussian leaves cannot be mixed")

    @cached_property
    def leaf_nodes(self) -> tuple[Leaf, ...]:
        return tuple(iter_leaves(self.structure))

    @cached_property
    def leaf_order(self) -> tuple[str, ...]:
        return tuple(leaf.symbol for leaf in self.leaf_nodes)

    @property
    def n(self) -> int:
        return self.structure.scope.n

    @property
    def e(self) -> int:
        return len(self.leaf_nodes)

    @cached_property
    def kind(self) -> str:
        first = self.bindings[self.leaf_order[0]]
        return "categorical" if isinstance(first, Categorical) else "gaussian"

    def leaf_distribution(self, index: int) -> LeafDistribution:
        return self.bindings[self.leaf_order[index]]

    @cached_property
    def path_weights(self) -> np.ndarray:
        weights: list[float] = []

        def walk(node: SignatureNode, prefix: float):
            if isinstance(node, Leaf):
                weights.append(prefix)
            elif isinstance(node, Sum):
                for w, child in zip(node.weights, node.children):
                    walk(child, prefix * w)
            else:
                for child in node.children:
                    walk(child, prefix)

        walk(self.structure, 1.0)
        return _frozen(np.array(weights))


# ---------------------------------------------------------------------------
# Evaluation


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m_safe), axis=axis))
    return out + np.squeeze(m_safe, axis=axis)


def log_density_batch(model: SpnModel, points: np.ndarray) -> np.ndarray:
    """Log density of the model at each row of points (shape (m, n))."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != model.n:
        raise DimensionError(
            f"points must have shape (m, {model.n}), got {points.shape}"
        )

    def walk(node: SignatureNode) -> np.ndarray:
        if isinstance(node, Leaf):
            cols = [d - 1 for d in node.scope.dims]
            return model.bindings[node.symbol].log_density(points[:, cols])
        parts = np.stack([walk(c) for c in node.children])
        if isinstance(node, Sum):
            with np.errstate(divide="ignore"):
                logw = np.log(np.array(node.weights))
            return _logsumexp(parts + logw[:, None], axis=0)
        return parts.sum(axis=0)

    return walk(model.structure)


def density(model: SpnModel, x: Sequence[float]) -> float:
    """Density (or pmf) at a single point of length n."""
    x = np.asarray(x, dtype=float).ravel()
    if len(x) != model.n:
        raise DimensionError(f"point has length {len(x)}, model dimension is {model.n}")
    return float(np.exp(log_density_batch(model, x[None, :])[0]))


# ---------------------------------------------------------------------------
# Sampling


def sample_batch(model: SpnModel, rng_seed: int, count: int) -> SampleBatch:
    """Ancestral sampling, vectorized over rows. Deterministic given the seed."""
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    points = np.zeros((count, model.n), dtype=float)
    labels = np.zeros((count, model.n), dtype=np.int32)
    leaf_index = {id(leaf): i for i, leaf in enumerate(model.leaf_nodes)}

    def walk(node: SignatureNode, rows: np.ndarray):
        if isinstance(node, Leaf):
            cols = [d - 1 for d in node.scope.dims]
            draws = model.bindings[node.symbol].sample(rng, len(rows))
            points[np.ix_(rows, cols)] = draws
            labels[np.ix_(rows, cols)] = leaf_index[id(node)]
            return
        if isinstance(node, Sum):
            cum = np.cumsum(np.array(node.weights))
            cum = cum / cum[-1]
            choice = np.searchsorted(cum, rng.random(len(rows)), side="right")
            choice = np.minimum(choice, len(node.children) - 1)
            for c, child in enumerate(node.children):
                sub = rows[choice == c]
                if len(sub):
                    walk(child, sub)
            return
        for child in node.children:
            walk(child, rows)

    if count:
        walk(model.structure, np.arange(count))
    return SampleBatch(points, labels)


def sample(model: SpnModel, rng_seed: int, count: int) -> list[LabeledSample]:
    """i.i.d. draws with per-block leaf provenance."""
    return sample_batch(model, rng_seed, count).to_labeled()


def path_weight(model: SpnModel, leaf_index: int) -> float:
    """Product of sum-edge weights from the root to the given leaf."""
    weights = model.path_weights
    if not 0 <= leaf_index < len(weights):
        raise IndexError(f"leaf index {leaf_index} outside [0, {len(weights)})")
    return float(weights[leaf_index])


def negligible_leaves(model: SpnModel, epsilon: float) -> set[int]:
    """Indices of leaves whose path weight falls below epsilon / (3 e)."""
    if not 0 < epsilon:
        raise ValueError("epsilon must be positive")
    threshold = epsilon / (3.0 * model.e)
    return {i for i, w in enumerate(model.path_weights) if w < threshold}


# ---------------------------------------------------------------------------
# Model files


def model_to_dict(model: SpnModel) -> dict:
    leaves = {}
    for symbol in model.leaf_order:
        dist = model.bindings[symbol]
        if isinstance(dist, Categorical):
            params = {"probs": [float(p) for p in dist.probs]}
            if dist.dim > 1:
                params["support"] = list(dist.support)
            leaves[symbol] = {"type": "categorical", "params": params}
        else:
            leaves[symbol] = {
                "type": "gaussian",
                "params": {
                    "mean": [float(v) for v in dist.mean],
                    "cov": [float(v) for v in dist.cov.ravel()],
                },
            }
    return {
        "signature": render_signature(model.structure),
        "n": model.n,
        "leaves": leaves,
    }


def model_from_dict(data: Mapping) -> SpnModel:
    try:
        text = data["signature"]
        n = int(data["n"])
        leaves = data["leaves"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model document missing field: {exc}") from None
    structure = parse_signature(text, n)
    bindings: dict[str, LeafDistribution] = {}
    for symbol, entry in leaves.items():
        kind = entry.get("type")
        params = entry.get("params", {})
        if kind == "categorical":
            support = params.get("support")
            bindings[symbol] = Categorical(params["probs"], support)
        elif kind == "gaussian":
            bindings[symbol] = Gaussian(params["mean"], params["cov"])
        else:
            raise ModelError(f"leaf {symbol} has unknown type {kind!r}")
    return SpnModel(structure, bindings)


def save_model(model: SpnModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SpnModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def models_equal(a: SpnModel, b: SpnModel) -> bool:
    """Exact structural and numeric equality, for determinism checks."""
    if a.structure != b.structure:
        return False
    for symbol in a.leaf_order:
        da, db = a.bindings[symbol], b.bindings.get(symbol)
        if type(da) is not type(db):
            return False
        if isinstance(da, Categorical):
            if da.support != db.support or not np.array_equal(da.probs, db.probs):
                return False
        else:
            if not np.array_equal(da.mean, db.mean) or not np.array_equal(da.cov, db.cov):
                return False
    return True
