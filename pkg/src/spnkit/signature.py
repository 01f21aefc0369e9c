"""Recursive signature strings for tree-shaped sum-product networks.

A signature is a parenthesized expression annotated with scopes. Three node
kinds exist: a leaf binds an opaque symbol to an explicit scope, a product
combines children over pairwise-disjoint scopes, and a weighted sum mixes
children that share one scope. The text grammar accepted here:

    node    := "(" inner ")"
    inner   := IDENT "," scope              leaf
             | WEIGHT node ("+" WEIGHT node)+   sum
             | node ("x" node)+             product
             | node ["," scope]             grouping / scope re-annotation
    scope   := "{" INT ("," INT)* "}"
    WEIGHT  := non-negative decimal literal

Whitespace is insignificant. A re-annotating scope must equal the node's
computed scope. Grouping parentheses collapse; one-child sums and products
cannot be constructed. The canonical renderer emits an explicit scope for
every node and weights with at most 12 significant digits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Union

from .errors import ScopeError, SignatureSyntaxError, WeightError

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Scope:
    """An ordered set of dimension indices inside an ambient space of size n."""

    dims: tuple[int, ...]
    n: int

    def __post_init__(self):
        dims = tuple(self.dims)
        if not isinstance(self.n, int) or self.n < 1:
            raise ScopeError(f"ambient dimension must be a positive integer, got {self.n!r}")
        if not dims:
            raise ScopeError("scope must be non-empty")
        if len(set(dims)) != len(dims):
            raise ScopeError(f"scope has duplicate dimensions: {dims}")
        for d in dims:
            if not isinstance(d, int) or not 1 <= d <= self.n:
                raise ScopeError(f"scope dimension {d!r} outside [1, {self.n}]")
        object.__setattr__(self, "dims", tuple(sorted(dims)))

    @property
    def size(self) -> int:
        return len(self.dims)

    def disjoint(self, other: "Scope") -> bool:
        return not set(self.dims) & set(other.dims)

    def render(self) -> str:
        return "{" + ",".join(str(d) for d in self.dims) + "}"


@dataclass(frozen=True)
class Leaf:
    symbol: str
    scope: Scope


@dataclass(frozen=True)
class Product:
    children: tuple["SignatureNode", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ScopeError("product nodes need at least 2 children")
        seen: set[int] = set()
        n = self.children[0].scope.n
        for child in self.children:
            if child.scope.n != n:
                raise ScopeError("product children declared over different ambient dimensions")
            overlap = seen & set(child.scope.dims)
            if overlap:
                raise ScopeError(f"product children scopes overlap on {sorted(overlap)}")
            seen |= set(child.scope.dims)

    @cached_property
    def scope(self) -> Scope:
        dims: list[int] = []
        for child in self.children:
            dims.extend(child.scope.dims)
        return Scope(tuple(dims), self.children[0].scope.n)


@dataclass(frozen=True)
class Sum:
    weights: tuple[float, ...]
    children: tuple["SignatureNode", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ScopeError("sum nodes need at least 2 children")
        if len(self.weights) != len(self.children):
            raise WeightError("one weight per sum child is required")
        first = self.children[0].scope
        for child in self.children[1:]:
            if child.scope != first:
                raise ScopeError(
                    f"sum children scopes differ: {first.render()} vs {child.scope.render()}"
                )
        for w in self.weights:
            if not (0.0 <= w <= 1.0):
                raise WeightError(f"weight {w!r} outside [0, 1]")
        total = sum(self.weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise WeightError(f"weights sum to {total!r}, expected 1 within {WEIGHT_SUM_TOL}")

    @cached_property
    def scope(self) -> Scope:
        return self.children[0].scope


SignatureNode = Union[Leaf, Product, Sum]


# ---------------------------------------------------------------------------
# Parsing


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<lparen>\()|(?P<rparen>\))|(?P<lbrace>\{)|(?P<rbrace>\})"
    r"|(?P<comma>,)|(?P<plus>\+)"
    r"|(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_]\w*))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stray = text[pos:].lstrip()
            if not stray:
                break
            raise SignatureSyntaxError(f"unexpected character {stray[0]!r} at position {pos}")
        kind = m.lastgroup
        assert kind is not None
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, n: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.n = n

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise SignatureSyntaxError("unexpected end of signature text")
        self.pos += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.next()
        if tok[0] != kind:
            raise SignatureSyntaxError(
                f"expected {kind} at position {tok[2]}, found {tok[1]!r}"
            )
        return tok

    def parse_scope(self) -> Scope:
        self.expect("lbrace")
        dims = [self._scope_int()]
        while self.peek() and self.peek()[0] == "comma":
            self.next()
            dims.append(self._scope_int())
        self.expect("rbrace")
        return Scope(tuple(dims), self.n)

    def _scope_int(self) -> int:
        tok = self.expect("number")
        if not re.fullmatch(r"\d+", tok[1]):
            raise SignatureSyntaxError(f"scope entry {tok[1]!r} is not an integer")
        return int(tok[1])

    def parse_node(self) -> SignatureNode:
        self.expect("lparen")
        tok = self.peek()
        if tok is None:
            raise SignatureSyntaxError("unexpected end of signature text")
        if tok[0] == "ident":
            return self._finish_leaf()
        if tok[0] == "number":
            return self._finish_sum()
        if tok[0] == "lparen":
            return self._finish_group()
        raise SignatureSyntaxError(f"unexpected token {tok[1]!r} at position {tok[2]}")

    def _finish_leaf(self) -> Leaf:
        symbol = self.next()[1]
        self.expect("comma")
        scope = self.parse_scope()
        self.expect("rparen")
        return Leaf(symbol, scope)

    def _finish_sum(self) -> Sum:
        weights = [self._parse_weight()]
        children = [self.parse_node()]
        saw_plus = False
        while self.peek() and self.peek()[0] == "plus":
            saw_plus = True
            self.next()
            weights.append(self._parse_weight())
            children.append(self.parse_node())
        if not saw_plus:
            raise SignatureSyntaxError("sum requires at least two weighted children")
        self.expect("rparen")
        return Sum(tuple(weights), tuple(children))

    def _parse_weight(self) -> float:
        tok = self.expect("number")
        value = float(tok[1])
        if value > 1.0:
            raise WeightError(f"weight {tok[1]} outside [0, 1]")
        return value

    def _finish_group(self) -> SignatureNode:
        first = self.parse_node()
        tok = self.peek()
        if tok is None:
            raise SignatureSyntaxError("unexpected end of signature text")
        if tok[0] == "ident" and tok[1] == "x":
            children = [first]
            while self.peek() and self.peek()[0] == "ident" and self.peek()[1] == "x":
                self.next()
                children.append(self.parse_node())
            self.expect("rparen")
            return Product(tuple(children))
        if tok[0] == "comma":
            self.next()
            declared = self.parse_scope()
            self.expect("rparen")
            if declared != first.scope:
                raise ScopeError(
                    f"declared scope {declared.render()} does not match computed "
                    f"scope {first.scope.render()}"
                )
            return first
        if tok[0] == "rparen":
            self.next()
            return first
        raise SignatureSyntaxError(f"unexpected token {tok[1]!r} at position {tok[2]}")


def parse_signature(text: str, n: int) -> SignatureNode:
    """Parse signature text over an ambient space of dimension n.

    Raises SignatureSyntaxError for malformed text, ScopeError for scope rule
    violations (including a declared scope that is not the computed one) and
    WeightError for weights outside the simplex.
    """
    if not isinstance(n, int) or n < 1:
        raise ScopeError(f"ambient dimension must be a positive integer, got {n!r}")
    parser = _Parser(text, n)
    node = parser.parse_node()
    if parser.peek() is not None:
        tok = parser.peek()
        raise SignatureSyntaxError(f"trailing input at position {tok[2]}: {tok[1]!r}")
    return node


# ---------------------------------------------------------------------------
# Rendering


def _format_weight(w: float) -> str:
    return format(w, ".12g")


def render_signature(node: SignatureNode) -> str:
    """Canonical text form: every node carries an explicit scope annotation."""
    if isinstance(node, Leaf):
        return f"({node.symbol},{node.scope.render()})"
    if isinstance(node, Product):
        body = "x".join(render_signature(c) for c in node.children)
        return f"(({body}),{node.scope.render()})"
    if isinstance(node, Sum):
        body = "+".join(
            _format_weight(w) + render_signature(c)
            for w, c in zip(node.weights, node.children)
        )
        return f"(({body}),{node.scope.render()})"
    raise TypeError(f"not a signature node: {node!r}")


# ---------------------------------------------------------------------------
# Structure comparison and statistics


def same_structure(a: SignatureNode, b: SignatureNode) -> bool:
    """True when the trees match node for node with identical scopes.

    Weights and leaf symbols are ignored; children are matched by index.
    """
    if isinstance(a, Leaf) and isinstance(b, Leaf):
        return a.scope == b.scope
    if isinstance(a, Product) and isinstance(b, Product):
        return len(a.children) == len(b.children) and all(
            same_structure(x, y) for x, y in zip(a.children, b.children)
        )
    if isinstance(a, Sum) and isinstance(b, Sum):
        return len(a.children) == len(b.children) and all(
            same_structure(x, y) for x, y in zip(a.children, b.children)
        )
    return False


@dataclass(frozen=True)
class StructureStats:
    e: int
    k: int
    n: int
    depth: int


def structure_stats(node: SignatureNode) -> StructureStats:
    """Leaf count e, total sum fan-in k, ambient dimension n, root height."""
    e = sum(1 for _ in iter_leaves(node))
    k = sum(len(s.children) for s in iter_sum_nodes(node))
    return StructureStats(e=e, k=k, n=node.scope.n, depth=_height(node))


def _height(node: SignatureNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_height(c) for c in node.children)


def iter_leaves(node: SignatureNode) -> Iterator[Leaf]:
    """Leaves in depth-first order; this order defines leaf indices."""
    if isinstance(node, Leaf):
        yield node
    else:
        for child in node.children:
            yield from iter_leaves(child)


def iter_sum_nodes(node: SignatureNode) -> Iterator[Sum]:
    """Sum nodes in depth-first preorder; this order defines weight indices."""
    if isinstance(node, Sum):
        yield node
    if not isinstance(node, Leaf):
        for child in node.children:
            yield from iter_sum_nodes(child)


def replace_weights(node: SignatureNode, weights_per_sum) -> SignatureNode:
    """Copy of the tree whose sum nodes take weights from the given sequence,
    consumed in the iter_sum_nodes preorder."""
    pending = list(weights_per_sum)
    pending.reverse()

    def rebuild(current: SignatureNode) -> SignatureNode:
        if isinstance(current, Leaf):
            return current
        if isinstance(current, Sum):
            if not pending:
                raise WeightError("fewer weight groups than sum nodes")
            weights = tuple(float(v) for v in pending.pop())
            if len(weights) != len(current.children):
                raise WeightError(
                    f"{len(weights)} weights for a sum with {len(current.children)} children"
                )
            return Sum(weights, tuple(rebuild(c) for c in current.children))
        return Product(tuple(rebuild(c) for c in current.children))

    result = rebuild(node)
    if pending:
        raise WeightError(f"{len(pending)} unused weight groups")
    return result
