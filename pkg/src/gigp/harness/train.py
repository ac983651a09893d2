"""Training, evaluation and the end-to-end invariance check."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..groups import random_element
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..nn.modules import cross_entropy, mse_loss
from ..nn.optim import Adam
from ..nn.tensor import Tensor
from .config import ExperimentConfig, load_config
from .data import Sample, gen_synth_invariant, load_digit_samples, load_idx_labels, load_xyz_samples
from .model import PointCloudModel, Prepared, build_model, collate, orbit_radii, predict, prepare, prepare_all


class TrainingAborted(RuntimeError):
    pass


@dataclass
class Splits:
    train: list[Sample]
    val: list[Sample]
    test: list[Sample]


def load_splits(config: ExperimentConfig) -> Splits:
    """Deterministic train / val / test splits for the configured task."""
    n_tr, n_va, n_te = config.n_train, config.n_val, config.n_test
    seed = config.effective_data_seed
    if config.task == "synth_invariant":
        data = gen_synth_invariant(n_tr + n_va + n_te, config.n_points, seed, config.dim)
    elif config.task == "rot_digits":
        if not config.idx_images or not config.idx_labels:
            raise ValueError("rot_digits needs idx_images and idx_labels in the config")
        n_total = len(load_idx_labels(config.idx_labels))
        if n_total < n_tr + n_va + n_te:
            raise ValueError(f"{config.idx_labels} holds {n_total} digits, need {n_tr + n_va + n_te}")
        # shuffled so that label-sorted files still give mixed splits
        order = np.random.default_rng(seed).permutation(n_total)[:n_tr + n_va + n_te]
        data = load_digit_samples(config.idx_images, config.idx_labels, order, config.threshold,
                                  config.max_points, seed)
    else:
        if not config.xyz_dir:
            raise ValueError("xyz_regression needs xyz_dir in the config")
        data = load_xyz_samples(config.xyz_dir)
        data = [data[i] for i in np.random.default_rng(seed).permutation(len(data))]
        if len(data) < n_tr + n_va + 1:
            raise ValueError(f"{config.xyz_dir} holds {len(data)} molecules, need more than {n_tr + n_va}")
    return Splits(data[:n_tr], data[n_tr:n_tr + n_va], data[n_tr + n_va:n_tr + n_va + n_te])


def is_classification(config: ExperimentConfig) -> bool:
    return config.task == "rot_digits"


@dataclass
class TargetScaler:
    """Standardizes regression targets with training-split statistics."""

    mean: float = 0.0
    std: float = 1.0

    @classmethod
    def fit(cls, targets) -> "TargetScaler":
        t = np.asarray(targets, dtype=np.float64)
        std = float(t.std())
        return cls(float(t.mean()), std if std > 0 else 1.0)

    def forward(self, y):
        return (np.asarray(y, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z):
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


def _scaled(items: list[Prepared], scaler: TargetScaler | None) -> list[Prepared]:
    if scaler is None:
        return items
    return [Prepared(p.lifted, p.nb, p.coords, float(scaler.forward(p.target))) for p in items]


def batch_loss(config: ExperimentConfig, out: Tensor, targets: np.ndarray) -> Tensor:
    if is_classification(config):
        return cross_entropy(out, targets)
    return mse_loss(out.reshape(-1), targets.astype(np.float64))


def evaluate(model: PointCloudModel, items: list[Prepared], scaler: TargetScaler | None) -> dict[str, float]:
    """Loss and task metric (error % for digits, MSE and MAE in target units otherwise)."""
    cfg = model.config
    out = predict(model, items)
    targets = np.asarray([p.target for p in items])
    if is_classification(cfg):
        loss = float(cross_entropy(Tensor(out), targets).data)
        err = 100.0 * float(np.mean(out.argmax(axis=1) != targets))
        return {"loss": loss, "error_pct": err, "metric": err}
    pred = scaler.inverse(out.reshape(-1))
    raw = np.asarray(targets, dtype=np.float64)
    mse = float(np.mean((pred - raw) ** 2))
    mae = float(np.mean(np.abs(pred - raw)))
    loss = float(np.mean((out.reshape(-1) - scaler.forward(raw)) ** 2))
    return {"loss": loss, "mse": mse, "mae": mae, "metric": mae if cfg.task == "xyz_regression" else mse}


def _param_norm(model: PointCloudModel) -> float:
    return float(np.sqrt(sum(float(np.sum(p.data ** 2)) for p in model.parameters())))


@dataclass
class TrainResult:
    model: PointCloudModel
    records: list[dict]
    best_epoch: int
    best_val: float
    test: dict[str, float]
    scaler: TargetScaler | None
    timings: list[float] = field(default_factory=list)


def model_state(model: PointCloudModel, scaler: TargetScaler | None) -> dict[str, np.ndarray]:
    state = model.state_dict()
    if scaler is not None:
        state["meta.target_mean"] = np.array(scaler.mean)
        state["meta.target_std"] = np.array(scaler.std)
    return state


def restore_model(config: ExperimentConfig, state: dict[str, np.ndarray]) -> tuple[PointCloudModel, TargetScaler | None]:
    model = build_model(config)
    model.load_state_dict({k: v for k, v in state.items() if not k.startswith("meta.")})
    scaler = None
    if "meta.target_mean" in state:
        scaler = TargetScaler(float(state["meta.target_mean"]), float(state["meta.target_std"]))
    return model, scaler


def train(config: ExperimentConfig, out_dir=None, splits: Splits | None = None, verbose: bool = False) -> TrainResult:
    """Seeded Adam training; keeps the parameters with the best validation metric.

    With ``out_dir`` set, writes metrics.jsonl, checkpoint.gigp, config.txt,
    summary.json and timing.jsonl there. Only timing.jsonl holds wall-clock
    values, so repeated runs produce identical files otherwise.
    """
    splits = splits or load_splits(config)
    if not splits.train or not splits.val:
        raise ValueError("train and validation splits must be nonempty")
    train_items = prepare_all(splits.train, config)
    val_items = prepare_all(splits.val, config)
    test_items = prepare_all(splits.test, config) if splits.test else []
    scaler = None if is_classification(config) else TargetScaler.fit([s.target for s in splits.train])

    model = build_model(config, orbit_radii(train_items))
    opt = Adam(model.parameters(), lr=config.lr)
    rng = np.random.default_rng([config.seed, 2])
    fit_items = _scaled(train_items, scaler)
    records: list[dict] = []
    timings: list[float] = []

    def record(epoch: int, train_loss: float, t0: float):
        val = evaluate(model, val_items, scaler)
        rec = {"epoch": epoch, "train_loss": train_loss, "eval_metric": val["metric"], "seed": config.seed}
        timings.append(time.perf_counter() - t0)
        if config.log_wall_time:
            rec["wall_time_s"] = timings[-1]
        records.append(rec)
        if verbose:
            print(f"epoch {epoch:3d}  train_loss {train_loss:.6f}  val {val['metric']:.6f}", flush=True)
        return val["metric"]

    t0 = time.perf_counter()
    best_val = record(0, evaluate(model, train_items, scaler)["loss"], t0)
    best_state, best_epoch = model_state(model, scaler), 0
    n = len(fit_items)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        perm = rng.permutation(n)
        total, seen = 0.0, 0
        for b, start in enumerate(range(0, n, config.batch_size)):
            batch = collate([fit_items[i] for i in perm[start:start + config.batch_size]])
            loss = batch_loss(config, model(batch, rng), batch.targets)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingAborted(f"non-finite loss {value} at epoch {epoch}, batch {b}; "
                                      f"parameter norm {_param_norm(model):.6g}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += value * batch.size
            seen += batch.size
        val = record(epoch, total / seen, t0)
        if val < best_val:
            best_val, best_epoch, best_state = val, epoch, model_state(model, scaler)

    model.load_state_dict({k: v for k, v in best_state.items() if not k.startswith("meta.")})
    test = evaluate(model, test_items, scaler) if test_items else {}
    result = TrainResult(model, records, best_epoch, best_val, test, scaler, timings)
    if out_dir is not None:
        write_outputs(Path(out_dir), config, result, best_state)
    return result


def write_outputs(out: Path, config: ExperimentConfig, result: TrainResult, state: dict[str, np.ndarray]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.jsonl", "w") as fh:
        for rec in result.records:
            fh.write(json.dumps(rec) + "\n")
    with open(out / "timing.jsonl", "w") as fh:
        for rec, t in zip(result.records, result.timings):
            fh.write(json.dumps({"epoch": rec["epoch"], "wall_time_s": t}) + "\n")
    save_checkpoint(out / "checkpoint.gigp", state)
    (out / "config.txt").write_text(config.to_text())
    summary = {"best_epoch": result.best_epoch, "best_val_metric": result.best_val,
               "n_parameters": result.model.n_parameters(), "test": result.test}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def format_table(records: list[dict]) -> str:
    lines = [f"{'epoch':>5}  {'train_loss':>12}  {'eval_metric':>12}"]
    lines += [f"{r['epoch']:>5}  {r['train_loss']:>12.6f}  {r['eval_metric']:>12.6f}" for r in records]
    return "\n".join(lines)


def load_trained(checkpoint, config_path=None) -> tuple[ExperimentConfig, PointCloudModel, TargetScaler | None]:
    """Rebuild a model from a checkpoint and its config (default: config.txt beside it)."""
    checkpoint = Path(checkpoint)
    config = load_config(config_path or checkpoint.parent / "config.txt")
    model, scaler = restore_model(config, load_checkpoint(checkpoint))
    return config, model, scaler


# ---------------------------------------------------------------------------
# invariance check
# ---------------------------------------------------------------------------

@dataclass
class InvarianceReport:
    tol: float
    deviations: list[float]  # max over transforms, per sample

    @property
    def max_deviation(self) -> float:
        return max(self.deviations, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol

    @property
    def failures(self) -> list[int]:
        return [i for i, d in enumerate(self.deviations) if not d < self.tol]

    def to_text(self) -> str:
        return (f"invariance check: {'PASS' if self.passed else 'FAIL'}\n"
                f"  samples            : {len(self.deviations)}\n"
                f"  max |f(gx) - f(x)| : {self.max_deviation:.3e} (tol {self.tol:g})\n"
                f"  failing samples    : {len(self.failures)}")


def check_invariance(model: PointCloudModel, samples: list[Sample], n_transforms: int, seed: int = 0,
                     tol: float = 1e-6, elements=None) -> InvarianceReport:
    """Max |model(g x) - model(x)| per sample over random rotations (or the given ``elements``).

    Runs with full neighborhoods, i.e. the exact (mc_fraction = 1) estimator.
    """
    cfg = model.config
    rng = np.random.default_rng(seed)
    devs = []
    for s in samples:
        gs = elements if elements is not None else [random_element(cfg.group, rng, cfg.dim)
                                                    for _ in range(n_transforms)]
        items = [prepare(s.cloud, 0, cfg)] + [prepare(s.cloud.transformed(g), 0, cfg) for g in gs]
        out = model(collate(items)).data
        devs.append(float(np.max(np.abs(out[1:] - out[0]))) if len(gs) else 0.0)
    return InvarianceReport(tol, devs)
