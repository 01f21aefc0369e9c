"""Independent oracles used to cross-check library results.

Nothing here reuses the library's evaluators: the joint table is built by
direct tensor algebra, Gaussian TV comes from quadrature, and signature
validity is re-derived by a standalone walker.
"""

from __future__ import annotations

import numpy as np

from spnkit import Categorical, Leaf, Product, SpnModel, Sum
from spnkit.metrics import categorical_grid


def joint_table(model: SpnModel) -> np.ndarray:
    """Full joint pmf of a categorical model over its grid, assembled by
    outer products and weighted sums of leaf tables."""
    sizes = categorical_grid(model)

    def build(node):
        if isinstance(node, Leaf):
            dist = model.bindings[node.symbol]
            dims = node.scope.dims
            shape = tuple(sizes[d - 1] for d in dims)
            arr = np.zeros(shape)
            arr[tuple(slice(0, s) for s in dist.support)] = dist.probs.reshape(dist.support)
            return dims, arr
        if isinstance(node, Product):
            dims, arr = build(node.children[0])
            for child in node.children[1:]:
                cdims, carr = build(child)
                stacked = np.multiply.outer(arr, carr)
                order = dims + cdims
                perm = np.argsort(order)
                dims = tuple(sorted(order))
                arr = np.transpose(stacked, perm)
            return dims, arr
        assert isinstance(node, Sum)
        dims, acc = build(node.children[0])
        acc = node.weights[0] * acc
        for w, child in zip(node.weights[1:], node.children[1:]):
            _, carr = build(child)
            acc = acc + w * carr
        return dims, acc

    dims, arr = build(model.structure)
    assert dims == tuple(range(1, model.n + 1))
    return arr


def tv_from_tables(a: SpnModel, b: SpnModel) -> float:
    return 0.5 * float(np.abs(joint_table(a) - joint_table(b)).sum())


def assert_valid_signature(node, n: int) -> None:
    """Standalone re-check of the construction rules."""
    if isinstance(node, Leaf):
        dims = node.scope.dims
        assert len(dims) >= 1
        assert len(set(dims)) == len(dims)
        assert all(1 <= d <= n for d in dims)
        return
    if isinstance(node, Product):
        assert len(node.children) >= 2
        union = []
        for child in node.children:
            assert_valid_signature(child, n)
            union.extend(child.scope.dims)
        assert len(set(union)) == len(union), "product children overlap"
        assert tuple(sorted(union)) == node.scope.dims
        return
    assert isinstance(node, Sum)
    assert len(node.children) >= 2
    assert len(node.weights) == len(node.children)
    assert all(0.0 <= w <= 1.0 for w in node.weights)
    assert abs(sum(node.weights) - 1.0) <= 1e-9
    for child in node.children:
        assert_valid_signature(child, n)
        assert child.scope.dims == node.scope.dims


def fig1_bindings(kind: str = "printed"):
    """Categorical leaves for the worked two-dimensional example tree."""
    if kind == "printed":
        probs = {"f1": [0.1, 0.9], "f2": [0.2, 0.8], "f3": [0.3, 0.7],
                 "f4": [0.4, 0.6], "f5": [0.5, 0.5]}
    else:
        probs = {"f1": [1.0], "f2": [1.0], "f3": [1.0], "f4": [1.0], "f5": [1.0]}
    return {sym: Categorical(p) for sym, p in probs.items()}
