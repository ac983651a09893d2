"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--n 256] [--repeats 5]

Each kernel is warmed up once per backend (numba compiles on first call),
then timed as the best of ``--repeats`` runs.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from gigp import _kernels
from gigp.harness.config import ExperimentConfig
from gigp.harness.data import gen_synth_invariant
from gigp.harness.model import build_model, collate, prepare_all
from gigp.lifting import RawPointCloud, lift


def _best(fn, repeats: int) -> float:
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n: int):
    rng = np.random.default_rng(0)
    out = {}
    for group, dim in (("SO2", 2), ("SO3", 3)):
        lc = lift(RawPointCloud(rng.normal(size=(n, dim)), np.ones((n, 1))), group)
        D = _kernels.pairwise_sq_dist(group, lc.elems, lc.orbits)
        nbr = _kernels.knn(D, 16)
        out[f"pairwise_sq_dist[{group}]"] = lambda g=group, lc=lc: _kernels.pairwise_sq_dist(g, lc.elems, lc.orbits)
        out[f"knn[{group}]"] = lambda D=D: _kernels.knn(D, 16)
        out[f"relative_logs[{group}]"] = lambda g=group, lc=lc, nbr=nbr: _kernels.relative_logs(g, lc.elems, nbr)
    x3 = rng.normal(size=(n, 3))
    out["reference_vectors"] = lambda: _kernels.reference_vectors(x3)
    idx, vals = rng.integers(0, n, size=n * 16), rng.normal(size=(n * 16, 16))
    out["scatter_add"] = lambda: _kernels.scatter_add(n, idx, vals)

    cfg = ExperimentConfig(channels=16, nbhd=8, kernel_hidden=(16,), anchors=8)
    samples = gen_synth_invariant(32, 24, 0)
    out["prepare 32 clouds"] = lambda: prepare_all(samples, cfg)
    model = build_model(cfg)
    batch = collate(prepare_all(samples, cfg))
    out["model forward+backward"] = lambda: model(batch).sum().backward()
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="numba vs numpy kernel timings")
    ap.add_argument("--n", type=int, default=256, help="points per cloud")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    before = _kernels.backend()
    results: dict[str, dict[str, float]] = {}
    try:
        for backend in ("numpy", "numba"):
            _kernels.set_backend(backend)
            for name, fn in cases(args.n).items():
                results.setdefault(name, {})[backend] = _best(fn, args.repeats)
    finally:
        _kernels.set_backend(before)
    print(f"{'kernel':28s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, t in results.items():
        print(f"{name:28s} {1e3 * t['numpy']:10.3f} {1e3 * t['numba']:10.3f} {t['numpy'] / t['numba']:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
