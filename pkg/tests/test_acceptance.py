"""Acceptance criteria, one test each, at the stated tolerances and time budgets.

Every test prints a single ``[criterion N] PASS|FAIL ...`` line. Criteria 6
and 7 train real models (several minutes each) and carry the ``slow`` marker;
they run by default, ``-m "not slow"`` skips them.
"""
import time
from pathlib import Path

import numpy as np
import pytest

from gigp.groups import random_element
from gigp.harness.config import load_config
from gigp.harness.data import Sample
from gigp.harness.experiments import median_accuracy_gap, median_ratio, paired_runs
from gigp.harness.gradsuite import run_grad_suite
from gigp.harness.model import build_model, collate, prepare
from gigp.harness.train import check_invariance, train
from gigp.lifting import RawPointCloud
from gigp.oracle import run_suite

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def report(capsys, n, ok, detail, elapsed, budget):
    within = budget is None or elapsed < budget
    timing = f"{elapsed:.1f}s" + ("" if budget is None else f", budget {budget:.0f}s")
    line = f"[criterion {n}] {'PASS' if ok and within else 'FAIL'}  {detail}  ({timing})"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line
    assert within, line


def random_clouds(n, dim, n_feat, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        N = int(rng.integers(3, 40))
        scale = rng.uniform(0.5, 3.0)
        out.append(Sample(RawPointCloud(rng.normal(size=(N, dim)) * scale, rng.uniform(size=(N, n_feat))), 0.0))
    return out


def perturbed_model(config, orbit_sample, seed):
    """A model whose GIGP branch and residual branches are all active."""
    model = build_model(config, orbit_sample)
    rng = np.random.default_rng(seed)
    for blk in model.blocks:
        blk.conv2.kernel_weight.data = rng.normal(size=blk.conv2.kernel_weight.shape) * 0.3
        blk.conv2.kernel_bias.data = rng.normal(size=blk.conv2.kernel_bias.shape) * 0.3
    if config.pooling == "gigp":
        model.pool.alpha.data = np.array(0.5)
        model.pool.w.data = rng.normal(size=model.pool.w.shape)
    return model


def test_criterion_1_pipeline_invariance(capsys):
    t0 = time.perf_counter()
    worst = {}
    for cfg_name in ("synth_gigp.cfg", "synth3d_gigp.cfg"):
        cfg = load_config(CONFIGS / cfg_name)
        samples = random_clouds(100, cfg.dim, 1, seed=cfg.dim)
        radii = np.concatenate([np.linalg.norm(s.cloud.coords, axis=1) for s in samples])
        model = perturbed_model(cfg, radii, seed=1)
        rep = check_invariance(model, samples, n_transforms=10, seed=7, tol=1e-6)
        assert len(rep.deviations) == 100
        worst[cfg.group] = rep.max_deviation
    ok = all(v < 1e-6 for v in worst.values())
    detail = ", ".join(f"{g} max dev {v:.2e}" for g, v in worst.items()) + " (tol 1e-6)"
    report(capsys, 1, ok, detail, time.perf_counter() - t0, 120)


def test_criterion_2_mean_pool_init(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for cfg_name in ("synth_gigp.cfg", "synth3d_gigp.cfg"):
        cfg = load_config(CONFIGS / cfg_name)
        samples = random_clouds(500, cfg.dim, 1, seed=10 + cfg.dim)
        items = [prepare(s.cloud, 0.0, cfg) for s in samples]
        radii = np.concatenate([p.lifted.orbits for p in items])
        gigp, mean = build_model(cfg, radii), build_model(cfg.replace(pooling="mean"))
        for i in range(0, len(items), 50):
            batch = collate(items[i:i + 50])
            worst = max(worst, float(np.max(np.abs(gigp(batch).data - mean(batch).data))))
    report(capsys, 2, worst < 1e-12, f"1000 inputs, max |gigp - mean| {worst:.2e} (tol 1e-12)",
           time.perf_counter() - t0, 60)


def test_criterion_3_conv_stack_equivariance(capsys):
    t0 = time.perf_counter()
    worst = {}
    for cfg_name in ("synth_gigp.cfg", "synth3d_gigp.cfg"):
        cfg = load_config(CONFIGS / cfg_name)
        model = perturbed_model(cfg, None, seed=2)
        rng = np.random.default_rng(20 + cfg.dim)
        dev = 0.0
        for s in random_clouds(50, cfg.dim, 1, seed=30 + cfg.dim):
            g = random_element(cfg.group, rng, cfg.dim)
            batch = collate([prepare(s.cloud, 0, cfg), prepare(s.cloud.transformed(g), 0, cfg)])
            f = model.features(batch).data
            n = s.cloud.n_points
            dev = max(dev, float(np.max(np.abs(f[:n] - f[n:]))))
        worst[cfg.group] = dev
    ok = all(v < 1e-9 for v in worst.values())
    detail = "100 trials, " + ", ".join(f"{g} max per-point dev {v:.2e}" for g, v in worst.items()) + " (tol 1e-9)"
    report(capsys, 3, ok, detail, time.perf_counter() - t0, 120)


def test_criterion_4_gradients(capsys):
    t0 = time.perf_counter()
    rep = run_grad_suite(tol=1e-4, step=1e-6)
    names = " ".join(rep.errors)
    covered = all(f"gigp.{p}" in names for p in ("w", "alpha", "C", "anchors", "phi"))
    detail = (f"{len(rep.errors)} checks, max rel err {rep.max_error:.2e} (tol 1e-4)"
              + ("" if not rep.failures else f", failing: {sorted(rep.failures)}"))
    report(capsys, 4, rep.passed and covered, detail, time.perf_counter() - t0, 300)


def test_criterion_5_expressivity(capsys):
    t0 = time.perf_counter()
    res = run_suite(max_elems=6, max_values=3, max_orbits=3, n_random=50, seed=0)
    ok = res["passed"] and res["collisions"] == 0 and res["random_functions"] >= 50
    detail = (f"{res['domains']} domains, {res['checks']} checks, {res['random_functions']} random functions, "
              f"{res['collisions']} collisions")
    report(capsys, 5, ok, detail, time.perf_counter() - t0, 60)


@pytest.mark.slow
def test_criterion_6_synthetic_advantage(capsys):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "synth_gigp.cfg")
    assert (cfg.n_train, cfg.n_test, cfg.epochs) == (2000, 500, 30)
    runs = paired_runs(cfg, seeds=range(5))
    ratio = median_ratio(runs, "mse")
    per_seed = ", ".join(f"{r.gigp['mse']:.4g}/{r.mean['mse']:.4g}" for r in runs)
    report(capsys, 6, ratio <= 0.75, f"median MSE ratio gigp/mean {ratio:.4f} (need <= 0.75); per seed {per_seed}",
           time.perf_counter() - t0, 1200)


@pytest.mark.slow
def test_criterion_7_rotated_digits(capsys, digits_idx):
    t0 = time.perf_counter()
    images, labels = digits_idx
    cfg = load_config(CONFIGS / "digits_gigp.cfg", idx_images=str(images), idx_labels=str(labels))
    assert (cfg.n_train, cfg.n_test, cfg.epochs) == (2000, 1000, 30)
    runs = paired_runs(cfg, seeds=range(3))
    gap = median_accuracy_gap(runs)
    per_seed = ", ".join(f"{100 - r.gigp['error_pct']:.1f}/{100 - r.mean['error_pct']:.1f}" for r in runs)
    report(capsys, 7, gap >= -1.0, f"median accuracy gigp - mean {gap:+.2f} pp (need >= -1); per seed {per_seed}",
           time.perf_counter() - t0, 1800)


def test_criterion_8_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "synth_gigp.cfg")
    train(cfg, out_dir=tmp_path / "a")
    train(cfg, out_dir=tmp_path / "b")
    same = {name: (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
            for name in ("metrics.jsonl", "checkpoint.gigp")}
    detail = ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items())
    report(capsys, 8, all(same.values()), detail, time.perf_counter() - t0, None)
