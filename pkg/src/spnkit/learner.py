"""Learning by decoding every possible message and holding mass contests.

For categorical leaves the message space of the codec is a finite set of bit
strings, so a learner can enumerate all decodable models: the Cartesian
product of per-leaf simplex nets with per-sum-node weight nets. Selection
runs a pairwise tournament: for candidates i and j the comparison set is
A = {x : f_i(x) > f_j(x)} and the contest goes to the candidate whose mass
on A is closer to the empirical mass. The candidate with the most wins is
returned (ties go to the lowest index).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .codec import (
    CompressionBudget,
    build_layout,
    categorical_grid_for,
    leaf_accuracy,
    quantize_simplex_counts,
    uniform_categorical_specs,
    weight_grid,
)
from .errors import CapExceeded, EmptyCandidateSet, ModelError
from .metrics import categorical_grid, tv_exact
from .model import Categorical, SpnModel, sample_batch
from .signature import (
    SignatureNode,
    iter_leaves,
    iter_sum_nodes,
    parse_signature,
    replace_weights,
    structure_stats,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSet:
    structure: SignatureNode
    candidates: tuple[SpnModel, ...]
    provenance: tuple[tuple, ...]


@dataclass(frozen=True)
class LearnResult:
    chosen: SpnModel
    empirical_scores: np.ndarray
    sample_count: int
    chosen_index: int
    eps_target: float | None = None
    delta_target: float | None = None
    theoretical_sample_size: int | None = None


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of non-negative ints of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _composition_count(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


def enumerate_candidates(
    structure: SignatureNode, eps: float, cap: int, support: int
) -> CandidateSet:
    """Decode-reachable models for a categorical tree at accuracy eps.

    Leaf pmfs live on the eps/(3n) net of the codec, weights on its
    2*eps/(3k) net. Raises CapExceeded (carrying the exact count) before
    materializing anything too large.
    """
    stats = structure_stats(structure)
    eps_leaf = leaf_accuracy(eps, stats.n, "strong")
    leaves = tuple(iter_leaves(structure))
    leaf_grids, leaf_supports = [], []
    count = 1
    for leaf in leaves:
        shape = (support,) * leaf.scope.size
        flat = int(np.prod(shape))
        grid = categorical_grid_for(flat, eps_leaf)
        leaf_grids.append(grid)
        leaf_supports.append(shape)
        count *= _composition_count(grid, flat)
    sums = tuple(iter_sum_nodes(structure))
    grid_w = weight_grid(eps, stats.k, "strong") if stats.k else None
    for node in sums:
        count *= _composition_count(grid_w, len(node.children))
    if count > cap:
        raise CapExceeded(f"{count} candidates exceed the cap {cap}", count=count)

    leaf_nets = [
        list(_compositions(grid, int(np.prod(shape))))
        for grid, shape in zip(leaf_grids, leaf_supports)
    ]
    sum_nets = [list(_compositions(grid_w, len(node.children))) for node in sums]
    candidates, provenance = [], []
    for combo in itertools.product(*leaf_nets, *sum_nets):
        leaf_part = combo[: len(leaves)]
        sum_part = combo[len(leaves):]
        bindings = {
            leaf.symbol: Categorical(np.array(c, dtype=float) / g, shape)
            for leaf, c, g, shape in zip(leaves, leaf_part, leaf_grids, leaf_supports)
        }
        weights = [tuple(np.array(c, dtype=float) / grid_w) for c in sum_part]
        candidates.append(SpnModel(replace_weights(structure, weights), bindings))
        provenance.append(combo)
    return CandidateSet(structure, tuple(candidates), tuple(provenance))


# ---------------------------------------------------------------------------
# Pairwise mass contests


class ContestTables:
    """Precomputed candidate masses on every pairwise comparison set.

    Reused across trials: only the empirical cell frequencies change.
    """

    def __init__(self, candidates: Sequence[SpnModel]):
        if not candidates:
            raise EmptyCandidateSet("no candidates to select from")
        self.candidates = tuple(candidates)
        self.grid = categorical_grid(self.candidates[0])
        total = int(np.prod(self.grid))
        flat = np.arange(total)
        points = np.array(np.unravel_index(flat, self.grid)).T.astype(float)
        from .model import log_density_batch

        self.pmf = np.exp(
            np.stack([log_density_batch(c, points) for c in self.candidates])
        )
        c = len(self.candidates)
        masks = self.pmf[:, None, :] > self.pmf[None, :, :]
        # float32 keeps the per-trial work cheap; contest margins are
        # statistical, so single precision cannot flip a non-tied outcome
        self.mass_i = np.einsum("ijg,ig->ij", masks, self.pmf).astype(np.float32)
        self.mass_j = np.einsum("ijg,jg->ij", masks, self.pmf).astype(np.float32)
        self._planes = np.ascontiguousarray(
            masks.reshape(c * c, total).astype(np.float32)
        )
        self._upper = np.triu(np.ones((c, c), dtype=bool), k=1)

    def empirical(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        """Cell frequencies of the sample; off-grid rows keep their share of
        the denominator but land in no cell."""
        points = np.asarray(points, dtype=float)
        m = len(points)
        idx = np.rint(points).astype(int)
        valid = np.all(np.abs(points - idx) <= 1e-9, axis=1)
        flat = np.zeros(m, dtype=int)
        for axis, size in enumerate(self.grid):
            valid &= (idx[:, axis] >= 0) & (idx[:, axis] < size)
            flat = flat * size + np.clip(idx[:, axis], 0, size - 1)
        counts = np.bincount(flat[valid], minlength=int(np.prod(self.grid)))
        return counts / max(m, 1), m

    def run(self, emp: np.ndarray) -> tuple[int, np.ndarray]:
        c = len(self.candidates)
        emp_mass = (self._planes @ emp.astype(np.float32)).reshape(c, c)
        d_i = np.abs(self.mass_i - emp_mass)
        d_j = np.abs(self.mass_j - emp_mass)
        # one contest per unordered pair (i, j), i < j; ties go to i
        i_takes = (d_i <= d_j) & self._upper
        j_takes = (d_j < d_i) & self._upper
        wins = i_takes.sum(axis=1) + j_takes.sum(axis=0)
        return int(np.argmax(wins)), wins


def select_min_distance(
    candidates: CandidateSet, sample: Sequence, seed: int = 0
) -> LearnResult:
    """Tournament winner for the sample. The seed is accepted for interface
    stability; selection is deterministic (ties go to the lowest index)."""
    del seed
    tables = ContestTables(candidates.candidates)
    n = candidates.candidates[0].n
    if len(sample):
        points = np.array([np.asarray(p, dtype=float).ravel() for p in sample])
    else:
        points = np.zeros((0, n))
    emp, m = tables.empirical(points)
    index, wins = tables.run(emp)
    return LearnResult(
        chosen=candidates.candidates[index],
        empirical_scores=wins,
        sample_count=m,
        chosen_index=index,
    )


def theoretical_sample_size(
    structure: SignatureNode, eps: float, support: int
) -> int:
    """m(eps/6) + ceil((t(eps/6) + tau(eps/6)) / eps^2) for the plugged-in
    codec budgets of this structure."""
    layout = build_layout(
        structure, uniform_categorical_specs(structure, support), eps / 6.0, "strong"
    )
    budget = CompressionBudget.from_layout(layout)
    rate = (layout.bit_budget + layout.point_budget) / (eps * eps)
    return budget.required_samples + math.ceil(rate - 1e-12)


def pac_learn(
    structure: SignatureNode,
    sample: Sequence,
    eps: float,
    delta: float,
    cap: int,
    support: int,
) -> LearnResult:
    """Enumerate the eps/6 message space, then run the tournament."""
    candidates = enumerate_candidates(structure, eps / 6.0, cap, support)
    result = select_min_distance(candidates, sample)
    theoretical = theoretical_sample_size(structure, eps, support)
    log.info(
        "pac_learn: %d candidates, %d samples provided, %d suggested by the budget",
        len(candidates.candidates),
        result.sample_count,
        theoretical,
    )
    return LearnResult(
        chosen=result.chosen,
        empirical_scores=result.empirical_scores,
        sample_count=result.sample_count,
        chosen_index=result.chosen_index,
        eps_target=eps,
        delta_target=delta,
        theoretical_sample_size=theoretical,
    )


# ---------------------------------------------------------------------------
# Scaling experiments


@dataclass(frozen=True)
class StructureSpec:
    structure_id: str
    signature: str
    n: int
    support: int
    truth_alpha: float = 1.0  # Dirichlet concentration of the random truths


@dataclass(frozen=True)
class ScalingConfig:
    structures: tuple[StructureSpec, ...]
    eps_grid: tuple[float, ...]
    m_grid: tuple[int, ...]
    trials: int
    seed_base: int
    cap: int

    @staticmethod
    def from_dict(data: dict) -> "ScalingConfig":
        try:
            structures = tuple(
                StructureSpec(
                    structure_id=str(s["structure_id"]),
                    signature=str(s["signature"]),
                    n=int(s["n"]),
                    support=int(s["support"]),
                    truth_alpha=float(s.get("truth_alpha", 1.0)),
                )
                for s in data["structures"]
            )
            config = ScalingConfig(
                structures=structures,
                eps_grid=tuple(float(v) for v in data["eps_grid"]),
                m_grid=tuple(int(v) for v in data["m_grid"]),
                trials=int(data["trials"]),
                seed_base=int(data["seed_base"]),
                cap=int(data["cap"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"bad experiment config: {exc}") from None
        if not config.structures or not config.eps_grid or not config.m_grid:
            raise ModelError("experiment config needs structures, eps_grid and m_grid")
        if config.trials < 1:
            raise ModelError("trials must be positive")
        return config


CSV_COLUMNS = (
    "structure_id", "e", "k", "n", "depth", "eps", "m", "trial", "tv_error", "success",
)


def _grid_truth(
    rng: np.random.Generator,
    structure: SignatureNode,
    support: int,
    eps: float,
    alpha: float = 1.0,
) -> SpnModel:
    """Random model whose parameters sit exactly on the candidate nets."""
    stats = structure_stats(structure)
    eps_leaf = leaf_accuracy(eps, stats.n, "strong")
    bindings = {}
    for leaf in iter_leaves(structure):
        shape = (support,) * leaf.scope.size
        flat = int(np.prod(shape))
        grid = categorical_grid_for(flat, eps_leaf)
        counts = quantize_simplex_counts(rng.dirichlet(np.full(flat, alpha)), grid)
        bindings[leaf.symbol] = Categorical(counts.astype(float) / grid, shape)
    weights = []
    grid_w = weight_grid(eps, stats.k, "strong") if stats.k else None
    for node in iter_sum_nodes(structure):
        counts = quantize_simplex_counts(
            rng.dirichlet(np.full(len(node.children), alpha)), grid_w
        )
        weights.append(tuple(counts.astype(float) / grid_w))
    return SpnModel(replace_weights(structure, weights), bindings)


def scaling_experiment(config: ScalingConfig) -> list[dict]:
    """One row per (structure, eps, m, trial). Within a trial the samples for
    the different m values are nested prefixes of one draw, so rows with
    larger m are coupled to their smaller-m counterparts."""
    rows: list[dict] = []
    m_max = max(config.m_grid)
    for s_idx, spec in enumerate(config.structures):
        structure = parse_signature(spec.signature, spec.n)
        stats = structure_stats(structure)
        for e_idx, eps in enumerate(config.eps_grid):
            candidates = enumerate_candidates(structure, eps, config.cap, spec.support)
            tables = ContestTables(candidates.candidates)
            for trial in range(config.trials):
                entropy = [config.seed_base, s_idx, e_idx, trial]
                state = np.random.SeedSequence(entropy).generate_state(2)
                truth_rng = np.random.Generator(np.random.Philox(int(state[0])))
                truth = _grid_truth(
                    truth_rng, structure, spec.support, eps, spec.truth_alpha
                )
                draw = sample_batch(truth, int(state[1]), m_max).points
                for m in config.m_grid:
                    emp, _ = tables.empirical(draw[:m])
                    index, _ = tables.run(emp)
                    tv = tv_exact(truth, candidates.candidates[index])
                    rows.append({
                        "structure_id": spec.structure_id,
                        "e": stats.e,
                        "k": stats.k,
                        "n": stats.n,
                        "depth": stats.depth,
                        "eps": eps,
                        "m": m,
                        "trial": trial,
                        "tv_error": tv,
                        "success": int(tv <= eps),
                    })
    return rows


def write_rows_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c])
                              for c in CSV_COLUMNS) + "\n")
