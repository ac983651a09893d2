"""Paired GIGP vs mean-pool runs, used by the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .train import load_splits, train


@dataclass
class PairedRun:
    seed: int
    gigp: dict[str, float]
    mean: dict[str, float]


def paired_runs(config: ExperimentConfig, seeds, verbose: bool = False) -> list[PairedRun]:
    """Train both poolings on identical data for each seed; returns test metrics."""
    out = []
    for s in seeds:
        cfg = config.replace(seed=s)
        splits = load_splits(cfg)
        res = {}
        for pooling in ("gigp", "mean"):
            res[pooling] = train(cfg.replace(pooling=pooling), splits=splits).test
        out.append(PairedRun(s, res["gigp"], res["mean"]))
        if verbose:
            print(f"seed {s}: gigp {res['gigp']['metric']:.6g}  mean {res['mean']['metric']:.6g}", flush=True)
    return out


def median_ratio(runs: list[PairedRun], key: str = "mse") -> float:
    """median_seeds(gigp) / median_seeds(mean) of the given test metric."""
    g = np.median([r.gigp[key] for r in runs])
    m = np.median([r.mean[key] for r in runs])
    return float(g / m)


def median_accuracy_gap(runs: list[PairedRun]) -> float:
    """median(gigp accuracy) - median(mean accuracy), in percentage points."""
    g = np.median([100.0 - r.gigp["error_pct"] for r in runs])
    m = np.median([100.0 - r.mean["error_pct"] for r in runs])
    return float(g - m)
