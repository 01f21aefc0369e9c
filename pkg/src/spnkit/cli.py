"""Command line front end.

Single-object results are printed as JSON with sorted keys, tables go to CSV
files, and compressed messages use the binary wire format. All diagnostics go
to stderr. Exit codes: 0 success, 1 domain error, 2 usage error. The
environment variable SPN_SEED overrides the default --seed of the commands
that draw randomness.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import codec, learner, metrics, model as model_mod
from .errors import SpnError
from .signature import parse_signature, structure_stats


def _default_seed() -> int:
    return int(os.environ.get("SPN_SEED", "0"))


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(payload) -> str:
    return json.dumps(payload, sort_keys=True) + "\n"


def _read_signature(path: str, n: int):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_signature(fh.read().strip(), n)


def cmd_validate(args) -> int:
    node = _read_signature(args.sig, args.n)
    stats = structure_stats(node)
    _emit(args, _json({"e": stats.e, "k": stats.k, "n": stats.n, "depth": stats.depth}))
    return 0


def cmd_stats(args) -> int:
    m = model_mod.load_model(args.model)
    stats = structure_stats(m.structure)
    payload = {
        "e": stats.e,
        "k": stats.k,
        "n": stats.n,
        "depth": stats.depth,
        "kind": m.kind,
        "path_weights": [float(w) for w in m.path_weights],
    }
    _emit(args, _json(payload))
    return 0


def cmd_sample(args) -> int:
    m = model_mod.load_model(args.model)
    batch = model_mod.sample_batch(m, args.seed, args.count)
    lines = [",".join([f"x{i}" for i in range(1, m.n + 1)] + ["leaf_path"])]
    for point, labels in zip(batch.points, batch.labels):
        path = ";".join(str(v) for v in dict.fromkeys(int(v) for v in labels))
        lines.append(",".join(repr(float(v)) for v in point) + "," + path)
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_density(args) -> int:
    m = model_mod.load_model(args.model)
    x = [float(v) for v in args.point.split(",")]
    value = model_mod.density(m, x)
    _emit(args, _json({"density": value}))
    return 0


def cmd_tv(args) -> int:
    a = model_mod.load_model(args.a)
    b = model_mod.load_model(args.b)
    if args.exact:
        payload = {"estimate": metrics.tv_exact(a, b), "method": "exact"}
    else:
        estimate, std_error = metrics.tv_monte_carlo(a, b, args.samples, args.seed)
        payload = {"estimate": estimate, "std_error": std_error, "method": "mc"}
    _emit(args, _json(payload))
    return 0


def cmd_similarity(args) -> int:
    a = model_mod.load_model(args.a)
    b = model_mod.load_model(args.b)
    report = metrics.similarity(a, b)
    payload = {"is_same_structure": report.is_same_structure}
    if report.is_same_structure:
        stats = structure_stats(a.structure)
        payload.update({
            "eps": report.eps,
            "alpha": report.alpha,
            "leaf_eps": list(report.leaf_eps),
            "weight_alpha": list(report.weight_alpha),
            "tv_bound": metrics.tv_bound_similar(report, stats.n, stats.k),
        })
    _emit(args, _json(payload))
    return 0


def cmd_compress(args) -> int:
    m = model_mod.load_model(args.model)
    variant = "weak" if args.weak else "strong"
    budget = codec.compression_budget(m, args.eps, variant)
    samples = model_mod.sample_batch(m, args.seed, budget.required_samples)
    message = codec.spn_encode(m, samples, args.eps, seed=args.seed, variant=variant)
    data = codec.message_to_bytes(message)
    with open(args.out, "wb") as fh:
        fh.write(data)
    print(
        f"wrote {len(data)} bytes: {message.layout_manifest.total_points} points, "
        f"{message.layout_manifest.total_bits} bits",
        file=sys.stderr,
    )
    return 0


def cmd_decompress(args) -> int:
    with open(args.infile, "rb") as fh:
        data = fh.read()
    points, bits, n = codec.payload_from_bytes(data)
    structure = _read_signature(args.structure, n)
    if args.leaf_kind == "categorical":
        if args.support is None:
            raise SpnError("--support is required for categorical leaves")
        specs = codec.uniform_categorical_specs(structure, args.support)
    else:
        specs = codec.gaussian_specs(structure)
    variant = "weak" if args.weak else "strong"
    layout = codec.build_layout(structure, specs, args.eps, variant)
    message = codec.message_from_bytes(data, layout)
    decoded = codec.spn_decode(structure, message)
    model_mod.save_model(decoded, args.out)
    return 0


def cmd_learn(args) -> int:
    structure = _read_signature(args.structure, args.n)
    sample = _read_points_csv(args.data)
    result = learner.pac_learn(
        structure, sample, args.eps, args.delta, args.cap, args.support
    )
    model_mod.save_model(result.chosen, args.out)
    summary = {
        "candidates": int(len(result.empirical_scores)),
        "chosen_index": result.chosen_index,
        "sample_count": result.sample_count,
        "theoretical_sample_size": result.theoretical_sample_size,
    }
    sys.stdout.write(_json(summary))
    return 0


def _read_points_csv(path: str) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        take = [i for i, name in enumerate(header) if name != "leaf_path"]
        for line in fh:
            parts = line.strip().split(",")
            if parts == [""]:
                continue
            rows.append([float(parts[i]) for i in take])
    return np.array(rows) if rows else np.zeros((0, 0))


def cmd_experiment(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = learner.ScalingConfig.from_dict(json.load(fh))
    rows = learner.scaling_experiment(config)
    learner.write_rows_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a signature and print its statistics")
    p.add_argument("--sig", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="statistics and path weights of a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sample", help="draw labeled samples as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("density", help="density of a model at one point")
    p.add_argument("--model", required=True)
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--out")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("tv", help="total variation distance between two models")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--mc", action="store_true")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out")
    p.set_defaults(func=cmd_tv)

    p = sub.add_parser("similarity", help="per-leaf and per-weight closeness report")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("compress", help="encode a model into a binary message")
    p.add_argument("--model", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.add_argument("--weak", action="store_true", help="use the no-negligible-leaf variant")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="decode a binary message into a model file")
    p.add_argument("--structure", required=True, help="signature file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--leaf-kind", choices=("categorical", "gaussian"), default="categorical")
    p.add_argument("--support", type=int)
    p.add_argument("--weak", action="store_true")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("learn", help="enumerate candidates and pick one from data")
    p.add_argument("--structure", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--support", type=int, required=True)
    p.add_argument("--data", required=True, help="CSV of sample points")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--cap", type=int, default=200_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("experiment", help="run a batch experiment")
    exp = p.add_subparsers(dest="experiment", required=True)
    scaling = exp.add_parser("scaling", help="error versus sample size sweeps")
    scaling.add_argument("--config", required=True)
    scaling.add_argument("--out", required=True)
    scaling.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SpnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
