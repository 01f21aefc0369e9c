import math

import numpy as np
import pytest

from spnkit import (
    CapExceeded,
    Categorical,
    EmptyCandidateSet,
    ScalingConfig,
    SpnModel,
    enumerate_candidates,
    models_equal,
    pac_learn,
    parse_signature,
    sample_batch,
    scaling_experiment,
    select_min_distance,
    structure_stats,
    theoretical_sample_size,
    tv_exact,
    write_rows_csv,
)
from spnkit.codec import (
    bits_per_index,
    categorical_grid_for,
    leaf_accuracy,
    weight_grid,
)
from spnkit.learner import CandidateSet, ContestTables, _composition_count

from helpers import assert_valid_signature


class TestEnumerate:
    def test_single_leaf_three_levels(self):
        node = parse_signature("(f1,{1})", 1)
        # eps = 3 puts the leaf net at ceil(2 / (3/3)) = 2 intervals: 3 points
        out = enumerate_candidates(node, eps=3.0, cap=100, support=2)
        assert len(out.candidates) == 3
        pmfs = sorted(tuple(c.bindings["f1"].probs) for c in out.candidates)
        assert pmfs == [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]

    def test_pure_product_count(self):
        node = parse_signature("(((f1,{1})x(f2,{2})),{1,2})", 2)
        eps = 2.0
        out = enumerate_candidates(node, eps=eps, cap=10_000, support=2)
        grid = categorical_grid_for(2, leaf_accuracy(eps, 2))
        per_leaf = _composition_count(grid, 2)
        assert len(out.candidates) == per_leaf ** 2

    def test_worked_tree_count(self, fig1_node):
        eps = 6.0
        out = enumerate_candidates(fig1_node, eps=eps, cap=10_000, support=2)
        g_leaf = categorical_grid_for(2, leaf_accuracy(eps, 2))
        g_w = weight_grid(eps, 4)
        expect = _composition_count(g_leaf, 2) ** 5 * _composition_count(g_w, 2) ** 2
        assert len(out.candidates) == expect == 972
        assert len(set(out.provenance)) == len(out.provenance)

    def test_cap_exceeded_carries_count(self, fig1_node):
        with pytest.raises(CapExceeded) as err:
            enumerate_candidates(fig1_node, eps=6.0, cap=971, support=2)
        assert err.value.count == 972

    def test_candidates_are_valid_models(self):
        node = parse_signature("((0.5(f1,{1})+0.5(f2,{1})),{1})", 1)
        out = enumerate_candidates(node, eps=3.0, cap=1000, support=2)
        for cand in out.candidates:
            assert_valid_signature(cand.structure, 1)
            for sym in cand.leaf_order:
                probs = cand.bindings[sym].probs
                assert abs(float(probs.sum()) - 1.0) < 1e-12


class TestSelect:
    def test_truth_in_candidates_large_sample(self):
        node = parse_signature("(f1,{1})", 1)
        out = enumerate_candidates(node, eps=1.5, cap=1000, support=2)
        truth_idx = 1
        truth = out.candidates[truth_idx]
        draw = sample_batch(truth, 5, 20_000).points
        result = select_min_distance(out, draw)
        assert models_equal(result.chosen, truth)
        assert result.sample_count == 20_000

    def test_perfect_fit_candidate(self):
        node = parse_signature("(f1,{1})", 1)
        cands = CandidateSet(
            node,
            (
                SpnModel(node, {"f1": Categorical([1.0, 0.0])}),
                SpnModel(node, {"f1": Categorical([0.0, 1.0])}),
            ),
            ((0,), (1,)),
        )
        result = select_min_distance(cands, np.zeros((50, 1)))
        assert models_equal(result.chosen, cands.candidates[0])

    def test_empty_candidates(self):
        node = parse_signature("(f1,{1})", 1)
        with pytest.raises(EmptyCandidateSet):
            select_min_distance(CandidateSet(node, (), ()), np.zeros((5, 1)))

    def test_two_candidate_contest_matches_empirical_l1(self):
        node = parse_signature("(f1,{1})", 1)
        rng = np.random.Generator(np.random.Philox(91))
        agree = 0
        trials = 200
        for trial in range(trials):
            c1 = SpnModel(node, {"f1": Categorical(rng.dirichlet(np.ones(3)))})
            c2 = SpnModel(node, {"f1": Categorical(rng.dirichlet(np.ones(3)))})
            truth = SpnModel(node, {"f1": Categorical(rng.dirichlet(np.ones(3)))})
            cands = CandidateSet(node, (c1, c2), ((0,), (1,)))
            draw = sample_batch(truth, 10_000 + trial, 400).points
            result = select_min_distance(cands, draw)
            emp = np.bincount(draw[:, 0].astype(int), minlength=3) / len(draw)
            l1 = [float(np.abs(c.bindings["f1"].probs - emp).sum()) for c in (c1, c2)]
            oracle = int(np.argmin(l1))
            if oracle == result.chosen_index:
                agree += 1
        assert agree / trials >= 0.95

    def test_scheffe_guarantee(self):
        node = parse_signature("((0.5(f1,{1})+0.5(f2,{1})),{1})", 1)
        rng = np.random.Generator(np.random.Philox(92))
        out = enumerate_candidates(node, eps=2.0, cap=5000, support=3)
        tables = ContestTables(out.candidates)
        for trial in range(20):
            truth = SpnModel(node, {
                "f1": Categorical(rng.dirichlet(np.ones(3))),
                "f2": Categorical(rng.dirichlet(np.ones(3))),
            })
            m = 2000
            draw = sample_batch(truth, 40_000 + trial, m).points
            emp, _ = tables.empirical(draw)
            idx, _ = tables.run(emp)
            chosen_tv = tv_exact(truth, out.candidates[idx])
            best_tv = min(tv_exact(truth, c) for c in out.candidates)
            slack = 4.0 * math.sqrt(math.log(len(out.candidates)) / m)
            assert chosen_tv <= 3 * best_tv + slack

    def test_deterministic_ties(self):
        node = parse_signature("(f1,{1})", 1)
        same = SpnModel(node, {"f1": Categorical([0.5, 0.5])})
        cands = CandidateSet(node, (same, same), ((0,), (1,)))
        result = select_min_distance(cands, np.zeros((10, 1)))
        assert result.chosen_index == 0


class TestPacLearn:
    def test_realizable_success_rate(self):
        node = parse_signature("(f1,{1})", 1)
        eps, delta = 1.2, 0.1
        out = enumerate_candidates(node, eps / 6.0, cap=10_000, support=2)
        wins = 0
        trials = 100
        for trial in range(trials):
            rng = np.random.Generator(np.random.Philox(70_000 + trial))
            truth = out.candidates[int(rng.integers(len(out.candidates)))]
            m = max(200, int(10 * math.log(len(out.candidates)) / eps ** 2))
            draw = sample_batch(truth, 80_000 + trial, m).points
            result = pac_learn(node, draw, eps, delta, cap=10_000, support=2)
            if tv_exact(truth, result.chosen) <= eps:
                wins += 1
        assert wins / trials >= 1 - delta

    def test_eps_one_still_deterministic(self):
        node = parse_signature("(f1,{1})", 1)
        draw = np.zeros((10, 1))
        a = pac_learn(node, draw, 1.0, 0.1, cap=100_000, support=2)
        b = pac_learn(node, draw, 1.0, 0.1, cap=100_000, support=2)
        assert models_equal(a.chosen, b.chosen)
        assert a.chosen_index == b.chosen_index

    def test_doubling_m_never_hurts_median(self):
        node = parse_signature("((0.5(f1,{1})+0.5(f2,{1})),{1})", 1)
        out = enumerate_candidates(node, eps=1.0, cap=100_000, support=2)
        tables = ContestTables(out.candidates)
        errs_small, errs_big = [], []
        for trial in range(50):
            rng = np.random.Generator(np.random.Philox(90_000 + trial))
            truth = out.candidates[int(rng.integers(len(out.candidates)))]
            draw = sample_batch(truth, 95_000 + trial, 800).points
            for m, store in ((400, errs_small), (800, errs_big)):
                emp, _ = tables.empirical(draw[:m])
                idx, _ = tables.run(emp)
                store.append(tv_exact(truth, out.candidates[idx]))
        assert np.median(errs_big) <= np.median(errs_small) + 1e-12

    def test_theoretical_sample_size_arithmetic(self, fig1_node):
        eps = 0.6
        support = 2
        stats = structure_stats(fig1_node)
        eps6 = eps / 6.0
        g_leaf = categorical_grid_for(support, leaf_accuracy(eps6, stats.n))
        g_w = weight_grid(eps6, stats.k)
        t_total = stats.e * support * bits_per_index(g_leaf) + stats.k * bits_per_index(g_w)
        expect = 0 + math.ceil((t_total + 0) / eps ** 2)
        assert theoretical_sample_size(fig1_node, eps, support) == expect

    def test_result_fields(self, fig1_node):
        node = parse_signature("(f1,{1})", 1)
        draw = np.zeros((25, 1))
        result = pac_learn(node, draw, 1.0, 0.2, cap=10_000, support=2)
        assert result.eps_target == 1.0
        assert result.delta_target == 0.2
        assert result.sample_count == 25
        assert result.theoretical_sample_size == theoretical_sample_size(node, 1.0, 2)
        assert result.empirical_scores.sum() > 0


SCALING_CONFIG = {
    "structures": [
        {"structure_id": "pair", "signature": "(((f1,{1})x(f2,{2})),{1,2})", "n": 2, "support": 2},
    ],
    "eps_grid": [2.0],
    "m_grid": [50, 100],
    "trials": 3,
    "seed_base": 7,
    "cap": 10_000,
}


class TestScalingExperiment:
    def test_rows_schema_and_determinism(self, tmp_path):
        config = ScalingConfig.from_dict(SCALING_CONFIG)
        rows = scaling_experiment(config)
        assert len(rows) == 1 * 1 * 2 * 3
        for row in rows:
            assert row["structure_id"] == "pair"
            assert (row["e"], row["k"], row["n"], row["depth"]) == (2, 0, 2, 1)
            assert 0.0 <= row["tv_error"] <= 1.0
            assert row["success"] in (0, 1)
        again = scaling_experiment(config)
        assert rows == again
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_rows_csv(rows, out1)
        write_rows_csv(again, out2)
        assert out1.read_bytes() == out2.read_bytes()
        header = out1.read_text().splitlines()[0]
        assert header == "structure_id,e,k,n,depth,eps,m,trial,tv_error,success"

    def test_error_decreases_with_m(self):
        config = ScalingConfig.from_dict({
            **SCALING_CONFIG,
            "structures": [{
                "structure_id": "leaf", "signature": "(f1,{1})", "n": 1, "support": 3,
            }],
            "eps_grid": [0.5],
            "m_grid": [40, 640],
            "trials": 30,
        })
        rows = scaling_experiment(config)
        small = np.median([r["tv_error"] for r in rows if r["m"] == 40])
        big = np.median([r["tv_error"] for r in rows if r["m"] == 640])
        assert big <= small

    def test_bad_config(self):
        from spnkit import ModelError

        with pytest.raises(ModelError):
            ScalingConfig.from_dict({"structures": []})
        with pytest.raises(ModelError):
            ScalingConfig.from_dict({**SCALING_CONFIG, "trials": 0})

    def test_doubling_leaves_grows_required_m_linearly(self):
        # e: 2 -> 4 with k and the per-leaf accuracy fixed (eps scales with n
        # so that eps/(3n) = 1 for both); required m should grow by < 2.5x
        from spnkit.learner import ContestTables, _grid_truth, enumerate_candidates

        m_grid = [2, 4, 8, 16, 32, 64]

        def mean_curve(text, n, eps, s_idx):
            node = parse_signature(text, n)
            cands = enumerate_candidates(node, eps, 5000, support=2)
            tables = ContestTables(cands.candidates)
            acc = {m: [] for m in m_grid}
            for trial in range(300):
                state = np.random.SeedSequence([11, s_idx, trial]).generate_state(2)
                rng = np.random.Generator(np.random.Philox(int(state[0])))
                truth = _grid_truth(rng, node, 2, eps, 6.0)
                draw = sample_batch(truth, int(state[1]), max(m_grid)).points
                for m in m_grid:
                    emp, _ = tables.empirical(draw[:m])
                    idx, _ = tables.run(emp)
                    acc[m].append(tv_exact(truth, cands.candidates[idx]))
            return [float(np.mean(acc[m])) for m in m_grid]

        def required_m(curve, target):
            for i in range(len(curve) - 1):
                if curve[i] >= target >= curve[i + 1]:
                    la = math.log(max(curve[i], 1e-9))
                    lb = math.log(max(curve[i + 1], 1e-9))
                    f = (math.log(target) - la) / (lb - la)
                    return math.exp(
                        math.log(m_grid[i])
                        + f * (math.log(m_grid[i + 1]) - math.log(m_grid[i]))
                    )
            return math.nan

        small = mean_curve("((0.5(f1,{1})+0.5(f2,{1})),{1})", 1, 3.0, 0)
        big = mean_curve(
            "((0.5((f1,{1})x(f2,{2}))+0.5((f3,{1})x(f4,{2}))),{1,2})", 2, 6.0, 1
        )
        ratio = required_m(big, 0.1) / required_m(small, 0.1)
        assert math.isfinite(ratio)
        assert 1.0 <= ratio <= 2.5
