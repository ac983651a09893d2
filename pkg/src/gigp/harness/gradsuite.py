"""Finite-difference checks for every primitive and for the end-to-end loss."""
from __future__ import annotations

import numpy as np

from ..lieconv import ConvLayerConfig, LieConv, build_neighborhoods, mc_weights
from ..lifting import RawPointCloud, lift
from ..nn import tensor as T
from ..nn.gradcheck import GradCheckReport, grad_check
from ..nn.modules import MLP, cross_entropy, mse_loss
from ..nn.tensor import Tensor
from ..pooling import GigpLayer
from .config import ExperimentConfig
from .model import build_model, collate, prepare


def _proj(out: Tensor, seed: int = 7) -> Tensor:
    """Fixed random linear functional, so non-scalar outputs get a generic scalar loss."""
    return T.tsum(out * np.random.default_rng(seed).normal(size=out.shape))


def _t(rng, *shape, positive=False) -> Tensor:
    x = rng.normal(size=shape)
    return Tensor(np.abs(x) + 0.5 if positive else x, requires_grad=True)


def primitive_cases(seed: int = 0) -> dict:
    """name -> (scalar function, {param name: tensor})."""
    rng = np.random.default_rng(seed)
    a, b = _t(rng, 3, 4), _t(rng, 3, 4)
    bpos = _t(rng, 3, 4, positive=True)
    row = _t(rng, 4)
    m1, m2 = _t(rng, 2, 3, 4), _t(rng, 4, 5)
    idx = np.array([2, 0, 2, 1])
    seg = np.array([0, 1, 0])
    labels = np.array([1, 3, 0])
    target = rng.normal(size=(3, 4))
    return {
        "add": (lambda: _proj(T.add(a, row)), {"a": a, "row": row}),
        "sub": (lambda: _proj(T.sub(a, b)), {"a": a, "b": b}),
        "mul": (lambda: _proj(T.mul(a, b)), {"a": a, "b": b}),
        "div": (lambda: _proj(T.div(a, bpos)), {"a": a, "b": bpos}),
        "square": (lambda: _proj(T.square(a)), {"a": a}),
        "exp": (lambda: _proj(T.exp(a)), {"a": a}),
        "sigmoid": (lambda: _proj(T.sigmoid(a)), {"a": a}),
        "swish": (lambda: _proj(T.swish(a)), {"a": a}),
        "matmul": (lambda: _proj(T.matmul(m1, m2)), {"a": m1, "b": m2}),
        "sum": (lambda: _proj(T.tsum(a, axis=0)), {"a": a}),
        "mean": (lambda: _proj(T.mean(a, axis=1, keepdims=True)), {"a": a}),
        "reshape": (lambda: _proj(T.reshape(a, (4, 3))), {"a": a}),
        "transpose": (lambda: _proj(T.transpose(m1, (2, 0, 1))), {"a": m1}),
        "index": (lambda: _proj(T.index(a, (slice(None), slice(1, 3)))), {"a": a}),
        "concat": (lambda: _proj(T.concat([a, b], axis=0)), {"a": a, "b": b}),
        "gather": (lambda: _proj(T.gather(a, idx)), {"a": a}),
        "segment_sum": (lambda: _proj(T.segment_sum(a, seg, 2)), {"a": a}),
        "softmax": (lambda: _proj(T.softmax(a, axis=1)), {"a": a}),
        "log_softmax": (lambda: _proj(T.log_softmax(a, axis=1)), {"a": a}),
        "mse_loss": (lambda: mse_loss(a, target), {"a": a}),
        "cross_entropy": (lambda: cross_entropy(a, labels), {"a": a}),
    }


def check_primitives(tol: float = 1e-4, step: float = 1e-6, seed: int = 0) -> GradCheckReport:
    report = GradCheckReport(tol=tol)
    for name, (f, params) in primitive_cases(seed).items():
        sub = grad_check(f, params, step=step, tol=tol)
        report.errors.update({f"{name}/{k}": e for k, e in sub.errors.items()})
    # shared subexpression: y = x * x + x reaches x along three paths
    x = Tensor(np.array([0.7, -1.3]), requires_grad=True)
    sub = grad_check(lambda: T.tsum(T.add(T.mul(x, x), x)), {"x": x}, step=step, tol=tol)
    report.errors["two_path/x"] = sub.errors["x"]
    mlp_rng = np.random.default_rng(seed + 2)
    mlp = MLP((3, 5, 4, 2), mlp_rng)
    xin = mlp_rng.normal(size=(6, 3))
    sub = grad_check(lambda: _proj(mlp(xin)), dict(mlp.named_parameters()),
                     step=step, tol=tol)
    report.errors.update({f"mlp/{k}": e for k, e in sub.errors.items()})
    return report


def _tiny_batch(config: ExperimentConfig, seed: int):
    rng = np.random.default_rng(seed)
    items = []
    for i in range(3):
        n = 5 + i
        coords = rng.normal(size=(n, config.dim)) * (1.0 + i)
        items.append(prepare(RawPointCloud(coords, rng.normal(size=(n, 1))), float(rng.normal()), config))
    return collate(items)


def check_end_to_end(tol: float = 1e-4, step: float = 1e-6, seed: int = 0, group: str = "SO2") -> GradCheckReport:
    """Gradient of the regression loss w.r.t. every GIGP quantity and the conv weights.

    alpha and w are moved off their initial values first, otherwise the
    learned branch contributes exactly zero and the check would be vacuous.
    C and the anchors are treated as inputs for the duration of the check.
    """
    config = ExperimentConfig(group=group, channels=4, blocks=1, nbhd=4, kernel_hidden=(6,), anchors=3,
                              phi_hidden=(5,), seed=seed)
    batch = _tiny_batch(config, seed)
    model = build_model(config, batch.orbits)
    pool = model.pool
    rng = np.random.default_rng(seed + 3)
    pool.alpha.data = np.array(0.8)
    pool.w.data = rng.uniform(0.5, 1.5, size=pool.w.shape)
    pool.C.data = np.array(1.3)
    for blk in model.blocks:  # give the zero-initialized branch something to differentiate
        blk.conv2.kernel_weight.data = rng.normal(size=blk.conv2.kernel_weight.shape) * 0.3
        blk.conv2.kernel_bias.data = rng.normal(size=blk.conv2.kernel_bias.shape) * 0.3
    pool.C.requires_grad = True
    pool.anchors.requires_grad = True
    try:
        def loss():
            return mse_loss(model(batch).reshape(-1), batch.targets.astype(np.float64))

        params = {"gigp.w": pool.w, "gigp.alpha": pool.alpha, "gigp.C": pool.C, "gigp.anchors": pool.anchors}
        params.update({f"gigp.phi.{k}": p for k, p in pool.phi.named_parameters()})
        params.update({k: p for k, p in model.named_parameters() if not k.startswith("pool.")})
        return grad_check(loss, params, step=step, tol=tol)
    finally:
        pool.C.requires_grad = False
        pool.anchors.requires_grad = config.learn_anchors


def check_layer_inputs(tol: float = 1e-4, step: float = 1e-6, seed: int = 0) -> GradCheckReport:
    """Gradients w.r.t. the features fed into one conv layer and into GIGP."""
    rng = np.random.default_rng(seed + 4)
    orbits = np.abs(rng.normal(size=9)) * 2.0
    segments = np.array([0, 0, 0, 0, 1, 1, 1, 1, 1])
    counts = np.array([4, 5])
    layer = GigpLayer(3, [0.5, 1.5, 2.5], 0.7, rng, (4,))
    layer.alpha.data = np.array(0.6)
    feats = Tensor(rng.normal(size=(9, 3)), requires_grad=True)
    report = GradCheckReport(tol=tol)
    sub = grad_check(lambda: _proj(layer(feats, orbits, segments, counts)), {"f": feats}, step=step, tol=tol)
    report.errors["gigp/features"] = sub.errors["f"]

    cloud = lift(RawPointCloud(rng.normal(size=(7, 2)), np.zeros((7, 3))), "SO2")
    conv = LieConv(ConvLayerConfig(3, 2, 4, 1.0, (5,)), "SO2", rng)
    nb = build_neighborhoods(cloud, 4)
    w = mc_weights(nb.valid, 1.0)
    fin = Tensor(rng.normal(size=(7, 3)), requires_grad=True)
    sub = grad_check(lambda: _proj(conv(nb, fin, w)), {"f": fin}, step=step, tol=tol)
    report.errors["lieconv/features"] = sub.errors["f"]
    return report


def run_grad_suite(tol: float = 1e-4, step: float = 1e-6, seed: int = 0) -> GradCheckReport:
    report = check_primitives(tol, step, seed)
    report.errors.update(check_layer_inputs(tol, step, seed).errors)
    for group in ("SO2", "SO3"):
        sub = check_end_to_end(tol, step, seed, group)
        report.errors.update({f"end_to_end[{group}]/{k}": e for k, e in sub.errors.items()})
    return report
