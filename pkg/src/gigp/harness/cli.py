"""Command-line entry point: ``gigp <subcommand> ...`` (or ``python -m gigp``)."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .data import (DataFormatError, Sample, gen_synth_invariant, load_digit_samples, load_idx_labels,
                   load_xyz_samples, read_synth_jsonl, write_synth_jsonl)


def _load_data(path: str, config: ExperimentConfig, labels: str | None) -> list[Sample]:
    """Samples from a synthetic JSON-lines file, an XYZ directory, or an IDX image file."""
    p = Path(path)
    if p.is_dir():
        return load_xyz_samples(p)
    if p.suffix in (".jsonl", ".json"):
        return read_synth_jsonl(p)
    if labels is None:
        guess = p.with_name(p.name.replace("images", "labels"))
        if guess == p or not guess.exists():
            raise DataFormatError(f"no labels file for {p}; pass --labels")
        labels = str(guess)
    n = len(load_idx_labels(labels))
    return load_digit_samples(p, labels, range(n), config.threshold, config.max_points,
                              config.effective_data_seed)


def cmd_train(args) -> int:
    from .train import format_table, train

    config = load_config(args.config, seed=args.seed)
    out = Path(args.out) if args.out else Path("runs") / f"{config.task}-{config.pooling}-s{config.seed}"
    result = train(config, out_dir=out, verbose=args.verbose)
    print(format_table(result.records))
    print(f"best epoch {result.best_epoch}, val {result.best_val:.6g}; test {json.dumps(result.test)}")
    print(f"wrote {out}")
    return 0


def cmd_eval(args) -> int:
    from .model import prepare_all
    from .train import evaluate, load_trained

    config, model, scaler = load_trained(args.checkpoint, args.config)
    samples = _load_data(args.data, config, args.labels)
    metrics = evaluate(model, prepare_all(samples, config), scaler)
    print(json.dumps({"n": len(samples), **metrics}, sort_keys=True))
    return 0


def cmd_check_invariance(args) -> int:
    from .train import check_invariance, load_splits, load_trained

    config, model, _ = load_trained(args.checkpoint, args.config)
    if args.data:
        samples = _load_data(args.data, config, args.labels)
    else:
        samples = load_splits(config).test
    report = check_invariance(model, samples[:args.n_samples], args.n_transforms, args.seed, args.tol)
    print(report.to_text())
    return 0 if report.passed else 1


def cmd_grad_check(args) -> int:
    from .gradsuite import run_grad_suite

    report = run_grad_suite(tol=args.tol, step=args.step)
    for line in report.lines():
        print(line)
    print(f"grad check: {'PASS' if report.passed else 'FAIL'} ({len(report.errors)} checks, "
          f"max rel err {report.max_error:.3e}, tol {args.tol:g})")
    return 0 if report.passed else 1


def cmd_check_expressivity(args) -> int:
    from ..oracle import run_suite

    res = run_suite(args.max_elems, args.max_values, args.max_orbits, args.n_random, args.seed)
    if args.format == "kv":
        print("\n".join(f"{k}={str(v).lower() if isinstance(v, bool) else v}" for k, v in res.items()))
    else:
        print(f"expressivity suite: {'PASS' if res['passed'] else 'FAIL'}")
        for k, v in res.items():
            if k != "passed":
                print(f"  {k:16s}: {v}")
    return 0 if res["passed"] else 1


def cmd_gen_synth(args) -> int:
    samples = gen_synth_invariant(args.n_samples, args.n_points, args.seed, args.dim)
    write_synth_jsonl(args.out, samples)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gigp", description="Equivariant point-cloud models with GIGP pooling.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides the config's seed")
    p.add_argument("--out", default=None, help="output directory (default runs/<task>-<pooling>-s<seed>)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help=".jsonl synthetic file, XYZ directory or IDX images file")
    p.add_argument("--labels", default=None, help="IDX labels file (default: guessed from --data)")
    p.add_argument("--config", default=None, help="default: config.txt next to the checkpoint")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check-invariance", help="max |f(g x) - f(x)| over random rotations")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n-transforms", type=int, required=True)
    p.add_argument("--data", default=None, help="default: the config's test split")
    p.add_argument("--labels", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--n-samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_check_invariance)

    p = sub.add_parser("grad-check", help="finite-difference check of every primitive and the full loss")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--step", type=float, default=1e-6)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("check-expressivity", help="exhaustive prime-encoding check on small finite domains")
    p.add_argument("--max-elems", type=int, default=6)
    p.add_argument("--max-values", type=int, default=3)
    p.add_argument("--max-orbits", type=int, default=3)
    p.add_argument("--n-random", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("text", "kv"), default="text")
    p.set_defaults(func=cmd_check_expressivity)

    p = sub.add_parser("gen-synth", help="write the synthetic shell dataset as JSON lines")
    p.add_argument("--out", required=True)
    p.add_argument("--n-samples", type=int, default=2500)
    p.add_argument("--n-points", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.set_defaults(func=cmd_gen_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
