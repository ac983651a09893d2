"""Model assembly: lift -> residual LieConv blocks -> pooling -> head."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..groups import GroupId
from ..lieconv import ConvLayerConfig, Neighborhoods, ResidualBlock, build_neighborhoods, mc_weights
from ..lifting import LiftedCloud, RawPointCloud, lift
from ..nn.modules import MLP, Linear, Module
from ..nn.tensor import Tensor, concat
from ..pooling import GigpLayer, init_anchors, mean_pool
from .config import ExperimentConfig
from .data import Sample


@dataclass
class Prepared:
    """A sample with its geometry precomputed (lifting and neighborhoods are parameter-free)."""

    lifted: LiftedCloud
    nb: Neighborhoods
    coords: np.ndarray
    target: float | int


@dataclass
class Batch:
    feats: np.ndarray
    orbits: np.ndarray
    segments: np.ndarray
    counts: np.ndarray
    nb: Neighborhoods
    coords: np.ndarray
    targets: np.ndarray

    @property
    def size(self) -> int:
        return len(self.counts)


def prepare(cloud: RawPointCloud, target, config: ExperimentConfig) -> Prepared:
    lifted = lift(cloud, config.group)
    return Prepared(lifted, build_neighborhoods(lifted, config.nbhd, config.orbit_weight), cloud.coords, target)


def prepare_all(samples: list[Sample], config: ExperimentConfig) -> list[Prepared]:
    return [prepare(s.cloud, s.target, config) for s in samples]


def collate(items: list[Prepared]) -> Batch:
    sizes = [len(p.lifted) for p in items]
    return Batch(
        feats=np.concatenate([p.lifted.features for p in items]),
        orbits=np.concatenate([p.lifted.orbits for p in items]),
        segments=np.repeat(np.arange(len(items)), sizes),
        counts=np.asarray(sizes),
        nb=Neighborhoods.concat([p.nb for p in items], sizes),
        coords=np.concatenate([p.coords for p in items]),
        targets=np.asarray([p.target for p in items]),
    )


class PointCloudModel(Module):
    """Residual LieConv stack with mean, GIGP or (negative control) coordinate pooling.

    Embedding, blocks and head draw from one generator seeded by ``seed``;
    GIGP's extra parameters come from a separate stream, so a GIGP model and a
    mean-pool model built with the same seed share every common weight.
    """

    def __init__(self, config: ExperimentConfig, n_in: int, n_out: int, orbit_sample=None):
        self.config = config
        rng = np.random.default_rng(config.seed)
        c = config.channels
        conv_cfg = ConvLayerConfig(c, c, config.nbhd, config.mc_fraction, config.kernel_hidden, config.orbit_weight)
        self.embed = Linear(n_in, c, rng)
        self.blocks = [ResidualBlock(c, conv_cfg, config.group, rng, config.dim) for _ in range(config.blocks)]
        pooled = c + config.dim if config.pooling == "coords" else c
        self.head = MLP((pooled, *config.head_hidden, n_out), rng)
        if config.pooling == "gigp":
            if orbit_sample is None:
                anchors, sigma = np.linspace(0.0, 1.0, config.anchors), 1.0
            else:
                anchors, sigma = init_anchors(orbit_sample, config.anchors)
            if config.sigma is not None:
                sigma = config.sigma
            pool_rng = np.random.default_rng([config.seed, 1])
            self.pool = GigpLayer(c, anchors, sigma, pool_rng, config.phi_hidden, config.learn_anchors)

    @property
    def n_layers(self) -> int:
        return 2 * len(self.blocks)

    def layer_weights(self, nb: Neighborhoods, rng: np.random.Generator | None) -> list[np.ndarray]:
        """Per-layer estimator weights; full neighborhoods unless ``rng`` is given and mc_fraction < 1."""
        if rng is None or self.config.mc_fraction >= 1.0:
            return [mc_weights(nb.valid, 1.0)] * self.n_layers
        return [mc_weights(nb.valid, self.config.mc_fraction, rng) for _ in range(self.n_layers)]

    def features(self, batch: Batch, rng: np.random.Generator | None = None) -> Tensor:
        """Per-point features after the equivariant stack."""
        ws = self.layer_weights(batch.nb, rng)
        x = self.embed(batch.feats)
        for i, block in enumerate(self.blocks):
            x = block(batch.nb, x, ws[2 * i], ws[2 * i + 1])
        return x

    def pool_features(self, x: Tensor, batch: Batch) -> Tensor:
        if self.config.pooling == "gigp":
            return self.pool(x, batch.orbits, batch.segments, batch.counts)
        pooled = mean_pool(x, batch.segments, batch.counts)
        if self.config.pooling == "coords":
            raw = mean_pool(batch.coords, batch.segments, batch.counts)
            pooled = concat([pooled, raw], axis=-1)
        return pooled

    def __call__(self, batch: Batch, rng: np.random.Generator | None = None) -> Tensor:
        return self.head(self.pool_features(self.features(batch, rng), batch))


def task_io(config: ExperimentConfig) -> tuple[int, int]:
    """(input feature width, output width) per task."""
    if config.task == "rot_digits":
        return 1, 10
    if config.task == "xyz_regression":
        return 5, 1
    return 1, 1


def build_model(config: ExperimentConfig, orbit_sample=None) -> PointCloudModel:
    n_in, n_out = task_io(config)
    if config.group == "SO3" and config.task == "rot_digits":
        raise ValueError("rot_digits is a 2-d task; use group = SO2")
    if config.group == "SO2" and config.task == "xyz_regression":
        raise ValueError("xyz_regression is a 3-d task; use group = SO3")
    return PointCloudModel(config, n_in, n_out, orbit_sample)


def predict(model: PointCloudModel, items: list[Prepared], batch_size: int = 64) -> np.ndarray:
    """Forward passes over full neighborhoods, in chunks."""
    return np.concatenate([model(collate(items[i:i + batch_size])).data for i in range(0, len(items), batch_size)])


def orbit_radii(items: list[Prepared]) -> np.ndarray:
    return np.concatenate([p.lifted.orbits for p in items])


__all__ = ["Batch", "PointCloudModel", "Prepared", "build_model", "collate", "predict", "prepare",
           "prepare_all", "task_io", "orbit_radii", "GroupId"]
