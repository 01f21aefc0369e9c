"""Compression codec for tree models: leaf codecs, weight nets, messages.

A compressed message is a short sequence of sample points plus a bit string.
Categorical leaves need no points: their pmf is snapped to a simplex grid and
the grid indices are transmitted. Gaussian leaves ship d+1 spanning sample
points that anchor an affine frame, plus quantized corrections for the mean
and the Cholesky factor relative to that frame. Sum-node weights are snapped
to a simplex grid of their own. A grid of step s on [0, 1] has
ceil(1/s) + 1 levels and each transmitted index costs ceil(log2(levels))
bits; ceilings are taken per leaf and per sum node.

Accuracy split for a whole tree at target eps ("strong" variant): leaves are
encoded at eps/(3n), weights on a 2*eps/(3k) grid, and leaves whose root
path weight falls below eps/(3e) are negligible and filled with a
deterministic placeholder (first d+1 input rows, all-zero bits). The "weak"
variant uses eps/(2n) and eps/k instead and refuses negligible leaves. The
encoder requires ceil(48 * m(eps_leaf) * e * log(6e) / eps) input samples,
where m is the per-leaf sample requirement (zero for categorical leaves).

Wire format (little endian, bit payload MSB first, zero padded):

    magic b"SPNC" | version u8=1 | point_count u32 | n u32
    | points float64 row-major | bit_length u32 | bit payload bytes
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .bits import BitReader, BitString, BitWriter
from .errors import (
    BitstreamError,
    DegenerateSample,
    InsufficientSamples,
    LayoutError,
    LeafEncodeFailure,
    SimplexError,
)
from .model import (
    Categorical,
    Gaussian,
    LabeledSample,
    SampleBatch,
    SpnModel,
    negligible_leaves,
)
from .signature import (
    SignatureNode,
    iter_leaves,
    iter_sum_nodes,
    replace_weights,
    structure_stats,
)

PMF_TOL = 1e-9
_CEIL_TOL = 1e-9

VARIANTS = ("strong", "weak")


def _ceil(x: float) -> int:
    """Ceiling that forgives float noise just below an integer."""
    return max(0, math.ceil(x - _CEIL_TOL))


@dataclass(frozen=True)
class GaussianCodecConfig:
    """Constants of the Gaussian leaf codec.

    c_m scales the per-leaf sample requirement m = ceil(c_m * d * log(2d));
    c_tau scales the point budget the same way. Ranges are in anchor-scale
    units; quantization steps are eps / (step_divisor * d).
    """

    c_tau: float = 3.0
    c_m: float = 50.0
    mean_range: float = 16.0
    log_diag_range: float = 16.0
    offdiag_range: float = 16.0
    step_divisor: float = 8.0


DEFAULT_GAUSSIAN_CONFIG = GaussianCodecConfig()


# ---------------------------------------------------------------------------
# Simplex nets


def simplex_grid(step: float) -> int:
    """Grid intervals on [0, 1] for a net of the given step: ceil(1/step)."""
    if not 0 < step <= 1:
        raise SimplexError(f"net step must be in (0, 1], got {step}")
    return max(1, _ceil(1.0 / step))


def bits_per_index(grid: int) -> int:
    """Bits for one coordinate index of a grid with grid+1 levels."""
    return max(1, math.ceil(math.log2(grid + 1)))


def quantize_simplex_counts(weights: Sequence[float], grid: int) -> np.ndarray:
    """Integer counts summing to grid, nearest to weights * grid in max norm.

    Floors every coordinate, then hands the remaining units to the largest
    fractional parts (ties to the lowest index), so each coordinate moves by
    less than one grid step.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if len(w) == 0 or np.any(w < -PMF_TOL) or abs(float(w.sum()) - 1.0) > PMF_TOL:
        raise SimplexError(f"not a probability vector: {w!r}")
    v = np.clip(w, 0.0, 1.0) * grid
    counts = np.floor(v + _CEIL_TOL).astype(int)
    deficit = grid - int(counts.sum())
    if deficit < 0:
        order = np.lexsort((np.arange(len(w)), -(v - counts)))
        for idx in order[::-1]:
            if deficit == 0:
                break
            take = min(counts[idx], -deficit)
            counts[idx] -= take
            deficit += take
    elif deficit > 0:
        remainder = v - counts
        order = np.lexsort((np.arange(len(w)), -remainder))
        counts[order[:deficit]] += 1
    return counts


def quantize_simplex(weights: Sequence[float], step: float) -> tuple[np.ndarray, BitString]:
    """Snap a simplex vector to the step grid and encode it.

    Returns the snapped vector (entries are exact multiples of 1/grid and the
    integer counts sum to the grid size) and the bit string holding the grid
    indices of all but the last coordinate.
    """
    grid = simplex_grid(step)
    counts = quantize_simplex_counts(weights, grid)
    width = bits_per_index(grid)
    writer = BitWriter()
    for c in counts[:-1]:
        writer.write(int(c), width)
    return counts.astype(float) / grid, writer.getvalue()


def decode_simplex(reader: BitReader, parts: int, grid: int) -> np.ndarray:
    """Read parts-1 indices and return a valid grid pmf; arbitrary input bits
    are repaired deterministically so decoding is total."""
    width = bits_per_index(grid)
    counts = np.array(
        [min(reader.read(width), grid) for _ in range(parts - 1)], dtype=int
    )
    overflow = int(counts.sum()) - grid
    for idx in range(parts - 2, -1, -1):
        if overflow <= 0:
            break
        take = min(int(counts[idx]), overflow)
        counts[idx] -= take
        overflow -= take
    counts = np.append(counts, grid - int(counts.sum()))
    return counts.astype(float) / grid


# ---------------------------------------------------------------------------
# Categorical leaf codec


def categorical_grid_for(flat_support: int, eps: float) -> int:
    """Net intervals for a pmf of the given flat support size at accuracy eps."""
    if eps <= 0:
        raise SimplexError("accuracy must be positive")
    return max(1, _ceil(flat_support / eps))


def leaf_encode_categorical(pmf: Sequence[float], eps: float) -> BitString:
    """Encode a pmf on the eps/d simplex net; zero points, zero samples."""
    pmf = np.asarray(pmf, dtype=float).ravel()
    grid = categorical_grid_for(len(pmf), eps)
    _, bits = quantize_simplex(pmf, 1.0 / grid)
    return bits


def leaf_decode_categorical(bits: BitString, flat_support: int, eps: float) -> np.ndarray:
    grid = categorical_grid_for(flat_support, eps)
    return decode_simplex(BitReader(bits), flat_support, grid)


def categorical_bit_budget(flat_support: int, eps: float) -> int:
    """d * ceil(log2(grid + 1)): the per-leaf bit bound, counting all d
    coordinates even though only d-1 indices are stored."""
    grid = categorical_grid_for(flat_support, eps)
    return flat_support * bits_per_index(grid)


# ---------------------------------------------------------------------------
# Gaussian leaf codec


def gaussian_sample_requirement(d: int, config: GaussianCodecConfig = DEFAULT_GAUSSIAN_CONFIG) -> int:
    return max(d + 1, _ceil(config.c_m * d * math.log(2 * d)))


def gaussian_point_budget(d: int, config: GaussianCodecConfig = DEFAULT_GAUSSIAN_CONFIG) -> int:
    budget = max(d + 1, _ceil(config.c_tau * d * math.log(2 * d)))
    return budget


def _gaussian_widths(d: int, eps: float, config: GaussianCodecConfig) -> tuple[int, int, int, float]:
    if eps <= 0:
        raise SimplexError("accuracy must be positive")
    q = eps / (config.step_divisor * d)
    k_mean = math.ceil(config.mean_range / q)
    k_diag = math.ceil(config.log_diag_range / q)
    k_off = math.ceil(config.offdiag_range / q)
    return k_mean, k_diag, k_off, q


def gaussian_bit_budget(d: int, eps: float, config: GaussianCodecConfig = DEFAULT_GAUSSIAN_CONFIG) -> int:
    k_mean, k_diag, k_off, _ = _gaussian_widths(d, eps, config)
    b_mean = bits_per_index(2 * k_mean)
    b_diag = bits_per_index(2 * k_diag)
    b_off = bits_per_index(2 * k_off)
    return d * b_mean + d * b_diag + (d * (d - 1) // 2) * b_off


def _anchor(points: np.ndarray) -> tuple[np.ndarray, float]:
    center = points.mean(axis=0)
    d = points.shape[1]
    spread = float(np.sum((points - center) ** 2) / (points.shape[0] * d))
    return center, max(math.sqrt(spread), 1e-12)


def select_spanning_points(samples: np.ndarray) -> list[int]:
    """Deterministically pick d+1 affinely independent rows: the row nearest
    the sample mean, then greedy farthest-residual rows."""
    samples = np.asarray(samples, dtype=float)
    m, d = samples.shape
    if m < d + 1:
        raise InsufficientSamples(f"need at least {d + 1} points, got {m}")
    center = samples.mean(axis=0)
    first = int(np.argmin(np.linalg.norm(samples - center, axis=1)))
    chosen = [first]
    basis: list[np.ndarray] = []
    scale = float(np.max(np.abs(samples))) + 1.0
    rel = samples - samples[first]
    for _ in range(d):
        res = rel.copy()
        for b in basis:
            res -= np.outer(res @ b, b)
        norms = np.linalg.norm(res, axis=1)
        pick = int(np.argmax(norms))
        if norms[pick] <= 1e-12 * scale:
            raise DegenerateSample("sample points do not span the leaf dimension")
        basis.append(res[pick] / norms[pick])
        chosen.append(pick)
    return chosen


def _quant_index(value: float, q: float, half_levels: int) -> int:
    idx = int(round(value / q)) + half_levels
    return min(max(idx, 0), 2 * half_levels)


def _encode_gaussian_core(
    samples: np.ndarray, leaf: Gaussian, eps: float, config: GaussianCodecConfig
) -> tuple[list[int], BitString]:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != leaf.dim:
        raise LeafEncodeFailure(
            f"samples have shape {samples.shape}, leaf dimension is {leaf.dim}"
        )
    d = leaf.dim
    if len(samples) < gaussian_sample_requirement(d, config):
        raise InsufficientSamples(
            f"need {gaussian_sample_requirement(d, config)} samples, got {len(samples)}"
        )
    indices = select_spanning_points(samples)
    center, scale = _anchor(samples[indices])
    k_mean, k_diag, k_off, q = _gaussian_widths(d, eps, config)
    b_mean = bits_per_index(2 * k_mean)
    b_diag = bits_per_index(2 * k_diag)
    b_off = bits_per_index(2 * k_off)
    chol = leaf.chol
    writer = BitWriter()
    for v in (leaf.mean - center) / scale:
        writer.write(_quant_index(float(v), q, k_mean), b_mean)
    for i in range(d):
        writer.write(_quant_index(math.log2(chol[i, i] / scale), q, k_diag), b_diag)
    for i in range(1, d):
        for j in range(i):
            writer.write(_quant_index(float(chol[i, j]) / scale, q, k_off), b_off)
    return indices, writer.getvalue()


def leaf_encode_gaussian(
    samples,
    true_leaf: Gaussian,
    eps: float,
    config: GaussianCodecConfig = DEFAULT_GAUSSIAN_CONFIG,
) -> tuple[list[np.ndarray], BitString]:
    """Encode a Gaussian the encoder knows exactly, using sample points only
    to anchor location and scale. Returns the selected points and the
    correction bits."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    indices, bits = _encode_gaussian_core(samples, true_leaf, eps, config)
    return [samples[i].copy() for i in indices], bits


def leaf_decode_gaussian(
    points,
    bits: BitString,
    eps: float,
    config: GaussianCodecConfig = DEFAULT_GAUSSIAN_CONFIG,
) -> Gaussian:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    d = points.shape[1]
    if points.shape[0] != d + 1:
        raise LayoutError(f"gaussian leaf expects {d + 1} points, got {points.shape[0]}")
    center, scale = _anchor(points)
    k_mean, k_diag, k_off, q = _gaussian_widths(d, eps, config)
    b_mean = bits_per_index(2 * k_mean)
    b_diag = bits_per_index(2 * k_diag)
    b_off = bits_per_index(2 * k_off)
    reader = BitReader(bits)
    mean = np.array(
        [center[i] + scale * (reader.read(b_mean) - k_mean) * q for i in range(d)]
    )
    chol = np.zeros((d, d))
    for i in range(d):
        chol[i, i] = scale * 2.0 ** ((reader.read(b_diag) - k_diag) * q)
    for i in range(1, d):
        for j in range(i):
            chol[i, j] = scale * (reader.read(b_off) - k_off) * q
    return Gaussian(mean, chol @ chol.T)


# ---------------------------------------------------------------------------
# Message layout


@dataclass(frozen=True)
class LeafClassSpec:
    """What the decoder knows about one leaf a priori: its kind, its scope
    size, and (for categorical leaves) the support grid."""

    kind: str
    dim: int
    support: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("categorical", "gaussian"):
            raise LayoutError(f"unknown leaf kind {self.kind!r}")
        if self.kind == "categorical":
            if self.support is None or len(self.support) != self.dim:
                raise LayoutError("categorical leaf spec needs one support size per dimension")
            object.__setattr__(self, "support", tuple(int(s) for s in self.support))

    @property
    def flat_support(self) -> int:
        return int(np.prod(self.support)) if self.support else 0


@dataclass(frozen=True)
class LeafLayout:
    spec: LeafClassSpec
    sample_count: int
    bit_count: int


@dataclass(frozen=True)
class SumLayout:
    k_j: int
    grid: int
    bits_per_weight: int

    @property
    def bit_count(self) -> int:
        return (self.k_j - 1) * self.bits_per_weight


@dataclass(frozen=True)
class MessageLayout:
    """Everything needed to cut the two payloads into per-node blocks.

    Derivable from the structure, the leaf class, the accuracy and the codec
    constants; carried with in-memory messages for integrity checking. The
    wire format transports payloads only.
    """

    eps: float
    variant: str
    n: int
    leaves: tuple[LeafLayout, ...]
    sums: tuple[SumLayout, ...]
    gaussian_config: GaussianCodecConfig | None = None

    @property
    def eps_leaf(self) -> float:
        return leaf_accuracy(self.eps, self.n, self.variant)

    @property
    def total_points(self) -> int:
        return sum(entry.sample_count for entry in self.leaves)

    @property
    def total_bits(self) -> int:
        return sum(entry.bit_count for entry in self.leaves) + sum(
            s.bit_count for s in self.sums
        )

    @property
    def point_budget(self) -> int:
        """Sum of per-leaf point budgets (e * tau for a uniform leaf class)."""
        budget = 0
        for entry in self.leaves:
            if entry.spec.kind == "gaussian":
                budget += gaussian_point_budget(entry.spec.dim, self.gaussian_config)
        return budget

    @property
    def bit_budget(self) -> int:
        """Per-leaf bit budgets plus k * ceil(log2(grid + 1)) weight bits."""
        total = 0
        for entry in self.leaves:
            if entry.spec.kind == "categorical":
                total += categorical_bit_budget(entry.spec.flat_support, self.eps_leaf)
            else:
                total += gaussian_bit_budget(entry.spec.dim, self.eps_leaf, self.gaussian_config)
        total += sum(s.k_j * s.bits_per_weight for s in self.sums)
        return total


def leaf_accuracy(eps: float, n: int, variant: str = "strong") -> float:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    return eps / (3.0 * n) if variant == "strong" else eps / (2.0 * n)


def weight_step(eps: float, k: int, variant: str = "strong") -> float | None:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if k == 0:
        return None
    step = 2.0 * eps / (3.0 * k) if variant == "strong" else eps / k
    return min(step, 1.0)


def weight_grid(eps: float, k: int, variant: str = "strong") -> int | None:
    step = weight_step(eps, k, variant)
    return None if step is None else simplex_grid(step)


def leaf_class_specs(model: SpnModel) -> tuple[LeafClassSpec, ...]:
    specs = []
    for leaf in model.leaf_nodes:
        dist = model.bindings[leaf.symbol]
        if isinstance(dist, Categorical):
            specs.append(LeafClassSpec("categorical", dist.dim, dist.support))
        else:
            specs.append(LeafClassSpec("gaussian", dist.dim))
    return tuple(specs)


def uniform_categorical_specs(structure: SignatureNode, support: int) -> tuple[LeafClassSpec, ...]:
    return tuple(
        LeafClassSpec("categorical", leaf.scope.size, (support,) * leaf.scope.size)
        for leaf in iter_leaves(structure)
    )


def gaussian_specs(structure: SignatureNode) -> tuple[LeafClassSpec, ...]:
    return tuple(LeafClassSpec("gaussian", leaf.scope.size) for leaf in iter_leaves(structure))


def build_layout(
    structure: SignatureNode,
    specs: Sequence[LeafClassSpec],
    eps: float,
    variant: str = "strong",
    config: GaussianCodecConfig | None = None,
) -> MessageLayout:
    leaves = tuple(iter_leaves(structure))
    if len(specs) != len(leaves):
        raise LayoutError(f"{len(specs)} leaf specs for {len(leaves)} leaves")
    stats = structure_stats(structure)
    eps_leaf = leaf_accuracy(eps, stats.n, variant)
    kinds = {spec.kind for spec in specs}
    if kinds == {"gaussian"}:
        config = config or DEFAULT_GAUSSIAN_CONFIG
    elif kinds == {"categorical"}:
        config = None
    else:
        raise LayoutError("leaf kinds must be uniform across the tree")
    entries = []
    for leaf, spec in zip(leaves, specs):
        if spec.dim != leaf.scope.size:
            raise LayoutError(
                f"leaf {leaf.symbol} has scope size {leaf.scope.size}, spec says {spec.dim}"
            )
        if spec.kind == "categorical":
            grid = categorical_grid_for(spec.flat_support, eps_leaf)
            bit_count = (spec.flat_support - 1) * bits_per_index(grid)
            entries.append(LeafLayout(spec, 0, bit_count))
        else:
            bit_count = gaussian_bit_budget(spec.dim, eps_leaf, config)
            entries.append(LeafLayout(spec, spec.dim + 1, bit_count))
    grid_w = weight_grid(eps, stats.k, variant)
    sums = tuple(
        SumLayout(len(s.children), grid_w, bits_per_index(grid_w))
        for s in iter_sum_nodes(structure)
    )
    return MessageLayout(
        eps=eps,
        variant=variant,
        n=stats.n,
        leaves=tuple(entries),
        sums=sums,
        gaussian_config=config,
    )


# ---------------------------------------------------------------------------
# Compression budgets


@dataclass(frozen=True)
class CompressionBudget:
    """Per-leaf and whole-tree costs of the scheme at a given accuracy.

    tau, t and m are the worst per-leaf budgets; m0 is the total sample
    requirement of the encoder; the totals bound the assembled message.
    """

    eps: float
    variant: str
    e: int
    k: int
    n: int
    eps_leaf: float
    eps_weight_step: float | None
    tau: int
    t: int
    m: int
    m0: float
    required_samples: int
    total_point_budget: int
    total_bit_budget: int

    @classmethod
    def from_layout(cls, layout: MessageLayout) -> "CompressionBudget":
        eps_leaf = layout.eps_leaf
        taus, ts, ms = [0], [0], [0]
        for entry in layout.leaves:
            if entry.spec.kind == "categorical":
                ts.append(categorical_bit_budget(entry.spec.flat_support, eps_leaf))
            else:
                taus.append(gaussian_point_budget(entry.spec.dim, layout.gaussian_config))
                ts.append(gaussian_bit_budget(entry.spec.dim, eps_leaf, layout.gaussian_config))
                ms.append(gaussian_sample_requirement(entry.spec.dim, layout.gaussian_config))
        e = len(layout.leaves)
        k = sum(s.k_j for s in layout.sums)
        m = max(ms)
        m0 = 48.0 * m * e * math.log(6.0 * e) / layout.eps
        return cls(
            eps=layout.eps,
            variant=layout.variant,
            e=e,
            k=k,
            n=layout.n,
            eps_leaf=eps_leaf,
            eps_weight_step=weight_step(layout.eps, k, layout.variant),
            tau=max(taus),
            t=max(ts),
            m=m,
            m0=m0,
            required_samples=_ceil(m0),
            total_point_budget=layout.point_budget,
            total_bit_budget=layout.bit_budget,
        )


def compression_budget(
    model: SpnModel,
    eps: float,
    variant: str = "strong",
    config: GaussianCodecConfig | None = None,
) -> CompressionBudget:
    layout = build_layout(model.structure, leaf_class_specs(model), eps, variant, config)
    return CompressionBudget.from_layout(layout)


# ---------------------------------------------------------------------------
# Messages and the wire format


@dataclass(frozen=True)
class CompressedMessage:
    sample_payload: np.ndarray  # (total_points, n)
    bit_payload: BitString
    layout_manifest: MessageLayout

    def __post_init__(self):
        pts = np.asarray(self.sample_payload, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, self.layout_manifest.n)
        object.__setattr__(self, "sample_payload", pts)
        if pts.shape != (self.layout_manifest.total_points, self.layout_manifest.n):
            raise LayoutError(
                f"sample payload shape {pts.shape} does not match manifest "
                f"({self.layout_manifest.total_points}, {self.layout_manifest.n})"
            )
        if self.bit_payload.length != self.layout_manifest.total_bits:
            raise LayoutError(
                f"bit payload holds {self.bit_payload.length} bits, manifest "
                f"says {self.layout_manifest.total_bits}"
            )


_MAGIC = b"SPNC"
_VERSION = 1


def message_to_bytes(message: CompressedMessage) -> bytes:
    pts = np.ascontiguousarray(message.sample_payload, dtype="<f8")
    head = struct.pack(
        "<4sBII", _MAGIC, _VERSION, pts.shape[0], message.layout_manifest.n
    )
    bits = message.bit_payload
    return head + pts.tobytes() + struct.pack("<I", bits.length) + bits.data


def payload_from_bytes(data: bytes) -> tuple[np.ndarray, BitString, int]:
    """Split raw wire bytes into (points, bits, n)."""
    head_size = struct.calcsize("<4sBII")
    if len(data) < head_size:
        raise BitstreamError("message shorter than its header")
    magic, version, count, n = struct.unpack_from("<4sBII", data)
    if magic != _MAGIC:
        raise BitstreamError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise BitstreamError(f"unsupported format version {version}")
    offset = head_size
    body = count * n * 8
    if len(data) < offset + body + 4:
        raise BitstreamError("point block truncated")
    points = np.frombuffer(data, dtype="<f8", count=count * n, offset=offset)
    points = points.reshape(count, n).astype(float)
    offset += body
    (bit_length,) = struct.unpack_from("<I", data, offset)
    offset += 4
    nbytes = (bit_length + 7) // 8
    if len(data) != offset + nbytes:
        raise BitstreamError(
            f"bit block holds {len(data) - offset} bytes, expected {nbytes}"
        )
    return points, BitString(data[offset:], bit_length), n


def message_from_bytes(data: bytes, layout: MessageLayout) -> CompressedMessage:
    points, bits, n = payload_from_bytes(data)
    if n != layout.n:
        raise LayoutError(f"wire dimension {n} does not match manifest {layout.n}")
    return CompressedMessage(points, bits, layout)


# ---------------------------------------------------------------------------
# Whole-tree encoder / decoder


def _rows_by_leaf(model: SpnModel, samples) -> tuple[np.ndarray, list[np.ndarray]]:
    if isinstance(samples, SampleBatch):
        points = np.asarray(samples.points, dtype=float)
        labels = samples.labels
        per_leaf = []
        for i, leaf in enumerate(model.leaf_nodes):
            col = leaf.scope.dims[0] - 1
            per_leaf.append(np.flatnonzero(labels[:, col] == i))
        return points, per_leaf
    rows = list(samples)
    points = (
        np.array([np.asarray(s.point, dtype=float) for s in rows])
        if rows
        else np.zeros((0, model.n))
    )
    per_leaf = [[] for _ in model.leaf_nodes]
    for r, s in enumerate(rows):
        for i in s.leaf_path:
            per_leaf[int(i)].append(r)
    return points, [np.asarray(ix, dtype=int) for ix in per_leaf]


def spn_encode(
    model: SpnModel,
    samples: Union[SampleBatch, Sequence[LabeledSample]],
    eps: float,
    seed: int = 0,
    variant: str = "strong",
    config: GaussianCodecConfig | None = None,
) -> CompressedMessage:
    """Encode a model the encoder fully knows, using labeled samples.

    The seed is accepted for interface stability; the built-in leaf codecs
    are deterministic and never consume it.
    """
    del seed
    if not 0 < eps < 1:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    layout = build_layout(model.structure, leaf_class_specs(model), eps, variant, config)
    budget = CompressionBudget.from_layout(layout)
    points, per_leaf = _rows_by_leaf(model, samples)
    if len(points) < budget.required_samples:
        raise InsufficientSamples(
            f"encoder needs {budget.required_samples} samples, got {len(points)}"
        )
    skip = negligible_leaves(model, eps)
    if variant == "weak" and skip:
        raise LeafEncodeFailure(
            f"weak-variant codec forbids negligible leaves, found {sorted(skip)}",
            leaf_index=min(skip),
        )
    eps_leaf = layout.eps_leaf
    payload_rows: list[np.ndarray] = []
    bit_parts: list[BitString] = []
    for i, (leaf, entry) in enumerate(zip(model.leaf_nodes, layout.leaves)):
        dist = model.bindings[leaf.symbol]
        if i in skip:
            if entry.sample_count:
                if len(points) < entry.sample_count:
                    raise InsufficientSamples(
                        f"negligible-leaf filler needs {entry.sample_count} rows"
                    )
                payload_rows.extend(points[: entry.sample_count])
            bit_parts.append(BitString(bytes((entry.bit_count + 7) // 8), entry.bit_count))
            continue
        if entry.spec.kind == "categorical":
            bit_parts.append(leaf_encode_categorical(dist.probs, eps_leaf))
            continue
        rows = per_leaf[i]
        need = gaussian_sample_requirement(entry.spec.dim, layout.gaussian_config)
        if len(rows) < need:
            raise LeafEncodeFailure(
                f"leaf {i} received {len(rows)} samples, codec needs {need}",
                leaf_index=i,
            )
        cols = [d - 1 for d in leaf.scope.dims]
        local = points[np.ix_(rows, cols)]
        idx, bits = _encode_gaussian_core(local, dist, eps_leaf, layout.gaussian_config)
        payload_rows.extend(points[rows[j]] for j in idx)
        bit_parts.append(bits)
    for node, sum_entry in zip(iter_sum_nodes(model.structure), layout.sums):
        _, bits = quantize_simplex(node.weights, 1.0 / sum_entry.grid)
        bit_parts.append(bits)
    payload = (
        np.array(payload_rows) if payload_rows else np.zeros((0, model.n))
    )
    return CompressedMessage(payload, BitString.concat(bit_parts), layout)


def spn_decode(structure: SignatureNode, message: CompressedMessage) -> SpnModel:
    """Deterministically rebuild a model from a message and its structure."""
    layout = message.layout_manifest
    specs = tuple(entry.spec for entry in layout.leaves)
    expected = build_layout(structure, specs, layout.eps, layout.variant, layout.gaussian_config)
    if expected != layout:
        raise LayoutError("manifest does not match the structure")
    points = message.sample_payload
    reader = BitReader(message.bit_payload)
    eps_leaf = layout.eps_leaf
    bindings = {}
    cursor = 0
    for leaf, entry in zip(iter_leaves(structure), layout.leaves):
        block = points[cursor : cursor + entry.sample_count]
        cursor += entry.sample_count
        raw = BitWriter()
        for _ in range(entry.bit_count):
            raw.write(reader.read(1), 1)
        bits = raw.getvalue()
        if entry.spec.kind == "categorical":
            pmf = leaf_decode_categorical(bits, entry.spec.flat_support, eps_leaf)
            bindings[leaf.symbol] = Categorical(pmf, entry.spec.support)
        else:
            cols = [d - 1 for d in leaf.scope.dims]
            bindings[leaf.symbol] = leaf_decode_gaussian(
                block[:, cols], bits, eps_leaf, layout.gaussian_config
            )
    weights = []
    for sum_entry in layout.sums:
        weights.append(tuple(decode_simplex(reader, sum_entry.k_j, sum_entry.grid)))
    return SpnModel(replace_weights(structure, weights), bindings)
