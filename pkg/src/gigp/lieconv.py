"""Lie group convolution on lifted point clouds.

For every point u the layer averages ``K(log(v^-1 u), q_u, q_v) f(v)`` over a
neighborhood S of u, where ``K`` is an MLP whose final linear layer is read as
an (out x in) matrix. The neighborhood is the k nearest points under

    d((u, q), (v, q')) = sqrt(||log(u^-1 v)||^2 + lam (q - q')^2),

and the average is the uniform Monte-Carlo estimate over S (optionally over a
seeded random subset of S).

Batches are handled as a disjoint union of clouds: every array is indexed by
global point rows and neighbor indices never cross cloud boundaries.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .groups import GroupId, algebra_dim
from .lifting import LiftedCloud
from .nn.modules import Linear, Module, param
from .nn.tensor import Tensor, as_tensor, gather, matmul, reshape, swish, transpose

_ORBIT_EPS = 1e-12


@dataclass(frozen=True)
class ConvLayerConfig:
    in_channels: int
    out_channels: int
    nbhd_size: int = 16
    mc_fraction: float = 1.0
    kernel_hidden: tuple[int, ...] = (16, 16)
    orbit_weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kernel_hidden", tuple(int(h) for h in self.kernel_hidden))
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")
        if self.nbhd_size < 1:
            raise ValueError("nbhd_size must be >= 1")
        if not 0.0 < self.mc_fraction <= 1.0:
            raise ValueError("mc_fraction must lie in (0, 1]")
        if self.mc_fraction * self.nbhd_size < 1.0:
            raise ValueError("mc_fraction * nbhd_size must be >= 1")
        if not self.kernel_hidden:
            raise ValueError("the kernel MLP needs at least one hidden layer")


@dataclass
class Neighborhoods:
    """Neighbor slots for a (batch of) lifted clouds.

    ``idx[p, s]`` is the global row of the s-th nearest neighbor of point p,
    ``valid`` marks real slots (clouds smaller than k are padded with the point
    itself) and ``embed[p, s]`` is the kernel input (log(v^-1 u), q_u, q_v).
    """

    idx: np.ndarray
    valid: np.ndarray
    embed: np.ndarray

    @property
    def k(self) -> int:
        return self.idx.shape[1]

    @staticmethod
    def concat(parts: Sequence["Neighborhoods"], sizes: Sequence[int]) -> "Neighborhoods":
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        return Neighborhoods(
            np.concatenate([p.idx + o for p, o in zip(parts, offsets)]),
            np.concatenate([p.valid for p in parts]),
            np.concatenate([p.embed for p in parts]),
        )


def pairwise_sq_distances(cloud: LiftedCloud, orbit_weight: float = 1.0) -> np.ndarray:
    return _kernels.pairwise_sq_dist(cloud.group, cloud.elems, cloud.orbits, orbit_weight)


def neighborhood(target_index: int, cloud: LiftedCloud, k: int, orbit_weight: float = 1.0) -> list[int]:
    """Indices of the k nearest points to ``target_index``, nearest first."""
    N = len(cloud)
    if k > N:
        raise ValueError(f"neighborhood size {k} exceeds cloud size {N}")
    if not 0 <= target_index < N:
        raise IndexError(target_index)
    return [int(i) for i in _kernels.knn(pairwise_sq_distances(cloud, orbit_weight), k)[target_index]]


def kernel_inputs(cloud: LiftedCloud, nbr: np.ndarray) -> np.ndarray:
    """(log(v^-1 u), q_u, q_v) for every neighbor slot.

    Under SO(n), a point at the origin has the whole group as stabilizer, so
    its relative element is arbitrary; those pairs get zero algebra coordinates.
    """
    logs = _kernels.relative_logs(cloud.group, cloud.elems, nbr)
    q = cloud.orbits
    qu = np.broadcast_to(q[:, None], nbr.shape)
    qv = q[nbr]
    if cloud.group is not GroupId.TN:
        degenerate = (qu <= _ORBIT_EPS) | (qv <= _ORBIT_EPS)
        logs = np.where(degenerate[..., None], 0.0, logs)
    return np.concatenate([logs, qu[..., None], qv[..., None]], axis=-1)


def build_neighborhoods(cloud: LiftedCloud, k: int, orbit_weight: float = 1.0) -> Neighborhoods:
    """k-nearest neighborhoods of every point; clouds with fewer than k points are padded."""
    N = len(cloud)
    kk = min(k, N)
    nbr = _kernels.knn(pairwise_sq_distances(cloud, orbit_weight), kk)
    embed = kernel_inputs(cloud, nbr)
    if kk < k:
        pad = k - kk
        self_idx = np.repeat(np.arange(N)[:, None], pad, axis=1)
        nbr = np.concatenate([nbr, self_idx], axis=1)
        embed = np.concatenate([embed, np.zeros((N, pad, embed.shape[-1]))], axis=1)
    valid = np.zeros((N, k), dtype=bool)
    valid[:, :kk] = True
    return Neighborhoods(nbr, valid, embed)


def mc_weights(valid: np.ndarray, mc_fraction: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Uniform estimator weights over each row's (sub)sampled valid slots."""
    counts = valid.sum(axis=1)
    if mc_fraction >= 1.0:
        return valid / counts[:, None]
    if rng is None:
        raise ValueError("mc_fraction < 1 needs a random generator")
    m = np.maximum(1, np.rint(mc_fraction * counts)).astype(np.int64)
    keys = rng.random(valid.shape)
    keys[~valid] = np.inf
    ranks = np.argsort(np.argsort(keys, axis=1, kind="stable"), axis=1, kind="stable")
    chosen = ranks < m[:, None]
    return chosen / m[:, None]


class LieConv(Module):
    """Trainable state of one convolution layer."""

    def __init__(self, config: ConvLayerConfig, group: GroupId | str, rng: np.random.Generator,
                 n: int = 2, zero_init: bool = False):
        self.config = config
        self.group = GroupId.parse(group)
        n_embed = algebra_dim(self.group, n) + 2
        widths = (n_embed,) + config.kernel_hidden
        self.hidden = [Linear(widths[i], widths[i + 1], rng) for i in range(len(widths) - 1)]
        h, cin, cout = config.kernel_hidden[-1], config.in_channels, config.out_channels
        # Final kernel layer h -> (out x in); stored as (h*in, out) weight and (in, out) bias.
        if zero_init:
            w, b = np.zeros((h * cin, cout)), np.zeros((cin, cout))
        else:
            w = rng.uniform(-1.0, 1.0, size=(h * cin, cout)) / np.sqrt(h * cin)
            b = rng.uniform(-1.0, 1.0, size=(cin, cout)) / np.sqrt(cin)
        self.kernel_weight = param(w)
        self.kernel_bias = param(b)

    def hidden_features(self, embed: np.ndarray | Tensor) -> Tensor:
        x = as_tensor(embed)
        for layer in self.hidden:
            x = swish(layer(x))
        return x

    def kernel_matrix(self, embed: np.ndarray) -> np.ndarray:
        """Explicit K(embed) as (..., out, in) matrices; for inspection and tests."""
        embed = np.asarray(embed, dtype=np.float64)
        H = self.hidden_features(embed.reshape(-1, embed.shape[-1])).data
        H = H.reshape(embed.shape[:-1] + H.shape[-1:])
        h, cin, cout = H.shape[-1], self.config.in_channels, self.config.out_channels
        W = self.kernel_weight.data.reshape(h, cin, cout)
        K = np.einsum("...j,jio->...io", H, W) + self.kernel_bias.data
        return np.swapaxes(K, -1, -2)

    def __call__(self, nb: Neighborhoods, feats, weights: np.ndarray) -> Tensor:
        feats = as_tensor(feats)
        if feats.shape[-1] != self.config.in_channels:
            raise ValueError(f"expected {self.config.in_channels} input channels, got {feats.shape[-1]}")
        P, k = nb.idx.shape
        H = self.hidden_features(nb.embed.reshape(P * k, -1))
        h = H.shape[-1]
        HW = reshape(H, (P, k, h)) * weights[:, :, None]
        F = gather(feats, nb.idx)  # (P, k, in)
        Z = matmul(transpose(HW, (0, 2, 1)), F)  # (P, h, in)
        out = matmul(reshape(Z, (P, h * self.config.in_channels)), self.kernel_weight)
        mean_f = reshape(matmul(Tensor(weights[:, None, :]), F), (P, self.config.in_channels))
        return out + matmul(mean_f, self.kernel_bias)


class ResidualBlock(Module):
    """f + conv2(swish(conv1(f))), conv2's final kernel layer zero-initialised."""

    def __init__(self, channels: int, config: ConvLayerConfig, group, rng: np.random.Generator, n: int = 2):
        cfg = ConvLayerConfig(channels, channels, config.nbhd_size, config.mc_fraction,
                              config.kernel_hidden, config.orbit_weight)
        self.conv1 = LieConv(cfg, group, rng, n)
        self.conv2 = LieConv(cfg, group, rng, n, zero_init=True)

    def __call__(self, nb: Neighborhoods, feats, w1: np.ndarray, w2: np.ndarray) -> Tensor:
        feats = as_tensor(feats)
        return feats + self.conv2(nb, swish(self.conv1(nb, feats, w1)), w2)


def _rng(seed) -> np.random.Generator | None:
    return None if seed is None else np.random.default_rng(seed)


def conv_forward(layer: LieConv, cloud: LiftedCloud, mc_seed: int | None = 0) -> LiftedCloud:
    """Apply one layer to a single cloud; geometry passes through unchanged."""
    cfg = layer.config
    nb = build_neighborhoods(cloud, cfg.nbhd_size, cfg.orbit_weight)
    w = mc_weights(nb.valid, cfg.mc_fraction, _rng(mc_seed))
    return cloud.with_features(layer(nb, cloud.features, w).data)


def residual_block(cloud: LiftedCloud, layer1: LieConv, layer2: LieConv, mc_seed: int | None = 0) -> LiftedCloud:
    if layer1.config.out_channels != layer2.config.in_channels or layer2.config.out_channels != layer1.config.in_channels:
        raise ValueError("residual block channels do not chain back to the input width")
    cfg = layer1.config
    nb = build_neighborhoods(cloud, cfg.nbhd_size, cfg.orbit_weight)
    rng = _rng(mc_seed)
    w1 = mc_weights(nb.valid, cfg.mc_fraction, rng)
    w2 = mc_weights(nb.valid, layer2.config.mc_fraction, rng)
    f = Tensor(cloud.features)
    out = f + layer2(nb, swish(layer1(nb, f, w1)), w2)
    return cloud.with_features(out.data)


def subsample(cloud: LiftedCloud, m: int, seed: int) -> LiftedCloud:
    """Uniform random subset of m points without replacement, kept in original order."""
    N = len(cloud)
    if m > N:
        raise ValueError(f"cannot keep {m} of {N} points")
    if m < 1:
        raise ValueError("m must be >= 1")
    keep = np.sort(np.random.default_rng(seed).choice(N, size=m, replace=False))
    return cloud.take(keep)
