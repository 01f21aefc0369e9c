"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Every tolerance is fixed here; nothing is calibrated at run time.
"""

import math
import time

import numpy as np
import pytest

from spnkit import (
    Categorical,
    Gaussian,
    ScalingConfig,
    SpnModel,
    compression_budget,
    leaf_decode_categorical,
    leaf_decode_gaussian,
    leaf_encode_categorical,
    leaf_encode_gaussian,
    load_model,
    message_to_bytes,
    models_equal,
    parse_signature,
    product_l1_check,
    sample_batch,
    save_model,
    scaling_experiment,
    similarity,
    spn_decode,
    spn_encode,
    structure_stats,
    tv_bound_similar,
    tv_exact,
    tv_gaussian_1d,
)
from spnkit.codec import bits_per_index, gaussian_sample_requirement
from spnkit.generate import (
    perturb_categorical_model,
    random_categorical_model,
    random_signature,
)

from conftest import FIG1_TEXT
from helpers import fig1_bindings

DATA = __file__.rsplit("/", 1)[0] + "/data"


def report(number: int, label: str, ok: bool, detail: str, elapsed: float, limit: float):
    status = "PASS" if ok and elapsed < limit else "FAIL"
    print(f"ACCEPTANCE {number} {status} {label}: {detail} [{elapsed:.1f}s / {limit:.0f}s]")
    assert ok, f"criterion {number} failed: {detail}"
    assert elapsed < limit, f"criterion {number} exceeded its time budget ({elapsed:.1f}s)"


def test_01_closeness_bound_sweep():
    start = time.time()
    rng = np.random.Generator(np.random.Philox(101))
    worst_slack = math.inf
    for trial in range(1000):
        n = int(rng.integers(1, 5))
        node = random_signature(rng, n, max_depth=4, max_fanin=3, singleton_leaves=True)
        support = int(rng.integers(2, 6))
        a = random_categorical_model(rng, node, support)
        b = perturb_categorical_model(
            rng, a,
            leaf_tv=float(rng.uniform(0, 0.4)),
            weight_alpha=float(rng.uniform(0, 0.4)),
        )
        stats = structure_stats(node)
        bound = tv_bound_similar(similarity(a, b), stats.n, stats.k)
        worst_slack = min(worst_slack, bound - tv_exact(a, b))
        if worst_slack < -1e-12:
            break
    report(
        1, "closeness bound dominates exact distance on 1000 same-shape pairs",
        worst_slack >= -1e-12, f"min(bound - tv) = {worst_slack:.3e}",
        time.time() - start, 60.0,
    )


def test_02_product_inequality_sweep():
    start = time.time()
    rng = np.random.Generator(np.random.Philox(102))
    worst = math.inf
    for trial in range(500):
        factors = int(rng.integers(1, 5))
        ps, qs = [], []
        for _ in range(factors):
            d = int(rng.integers(2, 5))
            ps.append(rng.dirichlet(np.ones(d) * float(rng.uniform(0.3, 3.0))))
            qs.append(rng.dirichlet(np.ones(d) * float(rng.uniform(0.3, 3.0))))
        lhs, rhs = product_l1_check(ps, qs)
        worst = min(worst, rhs - lhs)
    report(
        2, "product L1 distance bounded by the sum of factor distances (500 pairs)",
        worst >= -1e-12, f"min(rhs - lhs) = {worst:.3e}",
        time.time() - start, 30.0,
    )


def _contract_suite():
    fig1 = SpnModel(parse_signature(FIG1_TEXT, 2), fig1_bindings("printed"))
    single = SpnModel(
        parse_signature("(f1,{1})", 1),
        {"f1": Categorical([0.17, 0.23, 0.41, 0.19])},
    )
    deep_text = (
        "((0.6((((0.25(a1,{1})+0.75(a2,{1})))x((0.5(b1,{2})+0.5(b2,{2})))x(c1,{3})))"
        "+0.4((a3,{1})x((0.9(d1,{2,3})+0.1(d2,{2,3}))))),{1,2,3})"
    )
    rng = np.random.Generator(np.random.Philox(103))
    node = parse_signature(deep_text, 3)
    bindings = {}
    from spnkit.signature import iter_leaves

    for leaf in iter_leaves(node):
        shape = (2,) * leaf.scope.size
        bindings[leaf.symbol] = Categorical(
            rng.dirichlet(np.ones(int(np.prod(shape)))), shape
        )
    deep = SpnModel(node, bindings)
    return [("fig1", fig1), ("single", single), ("deep", deep)]


def test_03_round_trip_contract():
    start = time.time()
    trials = 300
    worst_rate = 1.0
    budget_ok = True
    for name, model in _contract_suite():
        stats = structure_stats(model.structure)
        for eps in (0.1, 0.3):
            hits = 0
            for trial in range(trials):
                message = spn_encode(model, [], eps, seed=trial)
                layout = message.layout_manifest
                if not (
                    layout.total_points <= layout.point_budget
                    and layout.total_bits <= layout.bit_budget
                ):
                    budget_ok = False
                decoded = spn_decode(model.structure, message)
                if tv_exact(model, decoded) <= eps:
                    hits += 1
            worst_rate = min(worst_rate, hits / trials)
    report(
        3, "decode of encode lands within eps in >= 2/3 of 300 trials, budgets kept",
        worst_rate >= 2.0 / 3.0 and budget_ok,
        f"worst success rate = {worst_rate:.3f}, budgets respected = {budget_ok}",
        time.time() - start, 300.0,
    )


def test_04_negligible_leaf_robustness():
    start = time.time()
    # root mixes the worked tree with a nearly dead two-dimensional leaf
    text = (
        "((0.9999((0.7(((0.4(f1,{1})+0.6(f2,{1})))x(f3,{2}))+0.3((f4,{1})x(f5,{2}))))"
        "+0.0001(f6,{1,2})),{1,2})"
    )
    node = parse_signature(text, 2)
    bindings = dict(fig1_bindings("printed"))
    bindings["f6"] = Categorical([0.25, 0.25, 0.25, 0.25], (2, 2))
    model = SpnModel(node, bindings)
    rng = np.random.Generator(np.random.Philox(104))
    ok = True
    for eps in (0.1, 0.3):
        from spnkit import negligible_leaves

        assert negligible_leaves(model, eps) == {5}
        message = spn_encode(model, [], eps, seed=0)
        decoded = spn_decode(node, message)
        if tv_exact(model, decoded) > eps:
            ok = False
        # the negligible leaf may decode to anything: force adversarial pmfs
        for probs in ([1, 0, 0, 0], [0, 0, 0, 1], rng.dirichlet(np.ones(4))):
            twisted = dict(decoded.bindings)
            twisted["f6"] = Categorical(np.asarray(probs, dtype=float), (2, 2))
            if tv_exact(model, SpnModel(decoded.structure, twisted)) > eps:
                ok = False
    report(
        4, "bound survives an injected negligible leaf decoded arbitrarily",
        ok, "tv within eps for zero-filler and adversarial replacements",
        time.time() - start, 120.0,
    )


def test_05_chernoff_allocation():
    start = time.time()
    node = parse_signature(FIG1_TEXT, 2)
    params = {"f1": (0.0, 1.0), "f2": (3.0, 2.0), "f3": (-1.0, 0.5),
              "f4": (1.0, 1.0), "f5": (5.0, 4.0)}
    model = SpnModel(node, {s: Gaussian([m], [[v]]) for s, (m, v) in params.items()})
    eps = 0.3
    budget = compression_budget(model, eps, variant="weak")
    assert budget.eps_leaf == pytest.approx(eps / 4.0)
    need = budget.m * math.log(6 * model.e)
    good = 0
    draws = 500
    cols = [model.leaf_nodes[i].scope.dims[0] - 1 for i in range(model.e)]
    for trial in range(draws):
        batch = sample_batch(model, 20_000 + trial, budget.required_samples)
        if all(
            int(np.sum(batch.labels[:, cols[i]] == i)) >= need
            for i in range(model.e)
        ):
            good += 1
    rate = good / draws
    report(
        5, "every leaf receives its sample quota in >= 5/6 of 500 draws",
        rate >= 5.0 / 6.0,
        f"success rate = {rate:.3f} at m0 = {budget.required_samples}",
        time.time() - start, 120.0,
    )


def test_06_flat_codec_exactness():
    start = time.time()
    rng = np.random.Generator(np.random.Philox(106))
    ok = True
    for d in range(1, 7):
        for eps in (0.5, 0.1, 0.02):
            cap = d * math.ceil(math.log2(math.ceil(d / eps) + 1))
            for trial in range(200):
                pmf = rng.dirichlet(np.ones(d))
                bits = leaf_encode_categorical(pmf, eps)
                decoded = leaf_decode_categorical(bits, d, eps)
                if bits.length > cap or 0.5 * np.abs(decoded - pmf).sum() > eps:
                    ok = False
    report(
        6, "pmf codec: zero points, bit cap d*ceil(log2(ceil(d/eps)+1)), tv <= eps",
        ok, "all (d <= 6) x (eps in {0.5, 0.1, 0.02}) x 200 pmfs",
        time.time() - start, 30.0,
    )


SLOPE_CONFIG = {
    "structures": [
        {"structure_id": "leaf2", "signature": "(f1,{1})", "n": 1, "support": 2,
         "truth_alpha": 6.0},
    ],
    "eps_grid": [1.0 / 60.0],
    "m_grid": [40, 63, 100, 159, 252, 400],
    "trials": 300,
    "seed_base": 7,
    "cap": 5000,
}

DEPTH_CONFIG = {
    "structures": [
        {"structure_id": "depth2",
         "signature": "((0.5((f1,{1})x(f2,{2})x(f3,{3}))+0.5((f4,{1})x(f5,{2})x(f6,{3}))),{1,2,3})",
         "n": 3, "support": 2, "truth_alpha": 6.0},
        {"structure_id": "depth3",
         "signature": "((0.5((((f1,{1})x(f2,{2})))x(f3,{3}))+0.5((f4,{1})x(((f5,{2})x(f6,{3}))))),{1,2,3})",
         "n": 3, "support": 2, "truth_alpha": 6.0},
    ],
    "eps_grid": [9.0],
    "m_grid": [4, 8, 16, 32, 64],
    "trials": 200,
    "seed_base": 7,
    "cap": 5000,
}


def _required_m(m_grid, means, target):
    logs = [math.log(max(v, 1e-9)) for v in means]
    for i in range(len(means) - 1):
        if means[i] >= target >= means[i + 1]:
            f = (math.log(target) - logs[i]) / (logs[i + 1] - logs[i])
            return math.exp(math.log(m_grid[i]) + f * (math.log(m_grid[i + 1]) - math.log(m_grid[i])))
    return math.nan


def test_07_scaling_rate():
    start = time.time()
    # error rate: median tv against sample size on one decade
    rows = scaling_experiment(ScalingConfig.from_dict(SLOPE_CONFIG))
    m_grid = SLOPE_CONFIG["m_grid"]
    medians = [
        float(np.median([r["tv_error"] for r in rows if r["m"] == m])) for m in m_grid
    ]
    slope = float(np.polyfit(np.log(m_grid), np.log(medians), 1)[0])
    slope_ok = -0.65 <= slope <= -0.35

    # depth independence: equal (e, k), depths 2 and 3
    rows = scaling_experiment(ScalingConfig.from_dict(DEPTH_CONFIG))
    stats = {
        sid: structure_stats(parse_signature(spec["signature"], 3))
        for sid, spec in (
            (s["structure_id"], s) for s in DEPTH_CONFIG["structures"]
        )
    }
    assert (stats["depth2"].e, stats["depth2"].k, stats["depth2"].depth) == (6, 2, 2)
    assert (stats["depth3"].e, stats["depth3"].k, stats["depth3"].depth) == (6, 2, 3)
    m_grid = DEPTH_CONFIG["m_grid"]
    required = {}
    for sid in ("depth2", "depth3"):
        means = [
            float(np.mean([
                r["tv_error"] for r in rows
                if r["structure_id"] == sid and r["m"] == m
            ]))
            for m in m_grid
        ]
        required[sid] = _required_m(m_grid, means, target=0.1)
    ratio = max(required.values()) / min(required.values())
    depth_ok = math.isfinite(ratio) and ratio <= 1.3
    report(
        7, "median error decays like 1/sqrt(m); required m is depth-independent",
        slope_ok and depth_ok,
        f"slope = {slope:.3f} (want -0.5 +/- 0.15), required-m ratio = {ratio:.3f} (cap 1.3)",
        time.time() - start, 900.0,
    )


def test_08_gaussian_codec():
    start = time.time()
    eps = 0.1
    need = gaussian_sample_requirement(1)
    fails = 0
    for trial in range(200):
        rng = np.random.Generator(np.random.Philox(30_000 + trial))
        mean = float(rng.normal(0, 5))
        var = float(rng.uniform(0.25, 4.0))
        leaf = Gaussian([mean], [[var]])
        samples = leaf.sample(rng, need)
        points, bits = leaf_encode_gaussian(samples, leaf, eps)
        decoded = leaf_decode_gaussian(np.array(points), bits, eps)
        tv = tv_gaussian_1d(mean, var, float(decoded.mean[0]), float(decoded.cov[0, 0]))
        if tv > eps:
            fails += 1
        if trial == 0:
            again_p, again_b = leaf_encode_gaussian(samples, leaf, eps)
            assert again_b == bits and np.array_equal(np.array(again_p), np.array(points))
            twice = leaf_decode_gaussian(np.array(points), bits, eps)
            assert np.array_equal(twice.mean, decoded.mean)
            assert np.array_equal(twice.cov, decoded.cov)
    rate = (200 - fails) / 200
    report(
        8, "gaussian leaf codec hits eps=0.1 in >= 95% of 200 trials, decode bit-stable",
        rate >= 0.95, f"success rate = {rate:.3f} with m = {need} samples per trial",
        time.time() - start, 120.0,
    )


def test_09_wire_format_stability(tmp_path):
    start = time.time()
    source = load_model(f"{DATA}/fig1_model.json")
    golden_message = open(f"{DATA}/golden_fig1_eps03.spnc", "rb").read()
    golden_decoded = open(f"{DATA}/golden_fig1_eps03_decoded.json", "rb").read()
    # re-encoding the committed model reproduces the golden bytes
    message = spn_encode(source, [], 0.3, seed=7)
    ok = message_to_bytes(message) == golden_message
    # decoding the golden bytes reproduces the committed model file
    from spnkit import message_from_bytes

    decoded = spn_decode(
        source.structure, message_from_bytes(golden_message, message.layout_manifest)
    )
    out = tmp_path / "decoded.json"
    save_model(decoded, out)
    ok = ok and out.read_bytes() == golden_decoded
    # pinned little-endian header
    ok = ok and golden_message[:4] == b"SPNC" and golden_message[4] == 1
    ok = ok and int.from_bytes(golden_message[9:13], "little") == 2
    report(
        9, "golden message bytes decode to byte-identical model files",
        ok, f"{len(golden_message)}-byte message, stable across runs",
        time.time() - start, 5.0,
    )
