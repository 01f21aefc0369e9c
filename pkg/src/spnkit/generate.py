"""Random structures and models for tests and experiments.

Weights are drawn on a fine integer grid (counts over a denominator of 1000)
so that canonical signature text round-trips to bit-identical floats.
"""

from __future__ import annotations

import numpy as np

from .model import Categorical, Gaussian, SpnModel
from .signature import Leaf, Product, Scope, SignatureNode, Sum, iter_leaves

_WEIGHT_GRID = 1000


def grid_simplex(rng: np.random.Generator, k: int, grid: int = _WEIGHT_GRID,
                 strict_positive: bool = True) -> tuple[float, ...]:
    """Random simplex vector whose entries are exact multiples of 1/grid."""
    if strict_positive:
        if grid < k:
            raise ValueError("grid too coarse for strictly positive weights")
        extra = rng.multinomial(grid - k, np.full(k, 1.0 / k))
        counts = extra + 1
    else:
        counts = rng.multinomial(grid, np.full(k, 1.0 / k))
    return tuple(float(c) / grid for c in counts)


def random_signature(rng: np.random.Generator, n: int, max_depth: int = 4,
                     max_fanin: int = 4, singleton_leaves: bool = False,
                     symbol_prefix: str = "f") -> SignatureNode:
    """Random valid signature covering dims {1..n}.

    singleton_leaves forces every leaf scope to a single dimension, which is
    what categorical model construction expects by default.
    """
    counter = [0]

    def fresh_symbol() -> str:
        counter[0] += 1
        return f"{symbol_prefix}{counter[0]}"

    def build(dims: tuple[int, ...], depth_left: int) -> SignatureNode:
        can_leaf = len(dims) == 1 or not singleton_leaves
        if depth_left <= 0:
            if can_leaf:
                return Leaf(fresh_symbol(), Scope(dims, n))
            # out of depth but multi-dim: single split into singleton leaves
            return Product(tuple(Leaf(fresh_symbol(), Scope((d,), n)) for d in dims))
        options = []
        if can_leaf:
            options.append("leaf")
        if len(dims) >= 2:
            options.append("product")
        options.append("sum")
        choice = options[int(rng.integers(len(options)))]
        if choice == "leaf":
            return Leaf(fresh_symbol(), Scope(dims, n))
        if choice == "product":
            parts = _split_dims(rng, dims, max_fanin)
            return Product(tuple(build(p, depth_left - 1) for p in parts))
        fanin = int(rng.integers(2, max_fanin + 1))
        children = tuple(build(dims, depth_left - 1) for _ in range(fanin))
        return Sum(grid_simplex(rng, fanin), children)

    dims = tuple(range(1, n + 1))
    depth = max(max_depth, 1) if (singleton_leaves and n >= 2) else max_depth
    return build(dims, depth)


def _split_dims(rng: np.random.Generator, dims: tuple[int, ...],
                max_fanin: int) -> list[tuple[int, ...]]:
    k = int(rng.integers(2, min(max_fanin, len(dims)) + 1))
    order = list(dims)
    rng.shuffle(order)
    cuts = sorted(rng.choice(np.arange(1, len(dims)), size=k - 1, replace=False))
    parts, start = [], 0
    for cut in list(cuts) + [len(dims)]:
        parts.append(tuple(sorted(order[start:cut])))
        start = cut
    return parts


def random_categorical_model(rng: np.random.Generator, structure: SignatureNode,
                             support: int = 3) -> SpnModel:
    """Bind uniform-shape categorical leaves with random pmfs to a structure."""
    bindings = {}
    for leaf in iter_leaves(structure):
        shape = (support,) * leaf.scope.size
        probs = rng.dirichlet(np.ones(int(np.prod(shape))))
        bindings[leaf.symbol] = Categorical(probs, shape)
    return SpnModel(structure, bindings)


def random_gaussian_model(rng: np.random.Generator, structure: SignatureNode,
                          mean_spread: float = 3.0) -> SpnModel:
    bindings = {}
    for leaf in iter_leaves(structure):
        d = leaf.scope.size
        mean = rng.normal(0.0, mean_spread, size=d)
        a = rng.normal(0.0, 1.0, size=(d, d))
        cov = a @ a.T + np.eye(d) * 0.5
        bindings[leaf.symbol] = Gaussian(mean, cov)
    return SpnModel(structure, bindings)


def reweight_structure(rng: np.random.Generator, node: SignatureNode,
                       alpha: float | None = None) -> SignatureNode:
    """Copy of the tree with fresh weights; alpha bounds the per-weight move."""
    if isinstance(node, Leaf):
        return node
    children = tuple(reweight_structure(rng, c, alpha) for c in node.children)
    if isinstance(node, Product):
        return Product(children)
    k = len(node.children)
    if alpha is None:
        weights = grid_simplex(rng, k)
    else:
        w = np.array(node.weights)
        u = rng.dirichlet(np.ones(k))
        lam = rng.uniform(0.0, alpha)
        weights = tuple(float(v) for v in (1 - lam) * w + lam * u)
    return Sum(weights, children)


def perturb_categorical_model(rng: np.random.Generator, model: SpnModel,
                              leaf_tv: float, weight_alpha: float) -> SpnModel:
    """Same-structure copy with leaves moved at most leaf_tv in TV distance
    and each weight moved at most weight_alpha."""
    structure = reweight_structure(rng, model.structure, weight_alpha)
    bindings = {}
    for symbol, dist in model.bindings.items():
        probs = dist.probs
        u = rng.dirichlet(np.ones(len(probs)))
        lam = rng.uniform(0.0, leaf_tv)
        bindings[symbol] = Categorical((1 - lam) * probs + lam * u, dist.support)
    return SpnModel(structure, bindings)
