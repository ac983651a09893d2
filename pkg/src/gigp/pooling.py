"""Group invariant global pooling (GIGP) and plain mean pooling.

Points are softly assigned to M anchor orbits; each anchor collects an
assignment-weighted sum of features, which a shared network maps (together
with the anchor's orbit coordinate) to an orbit representation. The output is
the weighted sum of orbit representations:

    s_m   = sum_i A[i, m] f_i
    out   = C * sum_m w_m * (s_m / N + alpha * MLP(s_m, anchor_m))

With alpha = 0, w = 1 and C = 1 the rows of A summing to one make this exactly
the global feature mean. Only orbit coordinates and features enter, never the
group elements, so the output is invariant whenever the features are.
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .lifting import LiftedCloud
from .nn.modules import MLP, Module, param
from .nn.tensor import Tensor, as_tensor, concat, gather, reshape, segment_sum, softmax, square, tsum


def assign_orbits(orbits, anchors, sigma: float) -> np.ndarray:
    """Soft assignment A[i, m] = softmax_m(-(q_i - a_m)^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    q = np.asarray(orbits, dtype=np.float64)[:, None]
    a = np.asarray(anchors, dtype=np.float64)[None, :]
    logits = -((q - a) ** 2) / (2.0 * sigma * sigma)
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def _assign_tensor(orbits: np.ndarray, anchors: Tensor, sigma: float) -> Tensor:
    diff = Tensor(orbits[:, None]) - reshape(anchors, (1, -1))
    return softmax(square(diff) * (-1.0 / (2.0 * sigma * sigma)), axis=1)


def init_anchors(orbits_sample, M: int) -> tuple[np.ndarray, float]:
    """Anchors at the centers of M equal-mass bins of the sample, and a bandwidth.

    The bandwidth is the median distance from each anchor to its nearest
    neighbor anchor, floored at 1e-3 (1.0 when M = 1, where it has no effect).
    """
    r = np.asarray(orbits_sample, dtype=np.float64).reshape(-1)
    if r.size == 0:
        raise ValueError("need at least one orbit radius")
    if M < 1:
        raise ValueError("M must be >= 1")
    levels = (2 * np.arange(M) + 1) / (2.0 * M)
    anchors = np.quantile(r, levels)
    for m in range(1, M):  # keep anchors distinct
        anchors[m] = max(anchors[m], anchors[m - 1] + 1e-3)
    if M == 1:
        return anchors, 1.0
    gaps = np.diff(anchors)
    nearest = np.minimum(np.concatenate([[np.inf], gaps]), np.concatenate([gaps, [np.inf]]))
    return anchors, float(max(np.median(nearest), 1e-3))


def canonical_order(segments: np.ndarray, orbits: np.ndarray, feats: np.ndarray) -> np.ndarray:
    """Permutation sorting points by (segment, orbit, feature values).

    Sums taken in this order do not depend on the input point order.
    """
    keys = [feats[:, j] for j in range(feats.shape[1] - 1, -1, -1)]
    return np.lexsort(keys + [orbits, segments])


def mean_pool(feats, segments: np.ndarray, counts: np.ndarray) -> Tensor:
    feats = as_tensor(feats)
    order = canonical_order(segments, np.zeros(len(segments)), feats.data)
    s = segment_sum(gather(feats, order), segments[order], len(counts))
    return s * (1.0 / np.asarray(counts, dtype=np.float64))[:, None]


class GigpLayer(Module):
    def __init__(self, n_features: int, anchors: Sequence[float], sigma: float, rng: np.random.Generator,
                 phi_hidden: Sequence[int] = (32,), learn_anchors: bool = False):
        anchors = np.asarray(anchors, dtype=np.float64)
        if anchors.ndim != 1 or anchors.size < 1:
            raise ValueError("need at least one anchor")
        if np.any(np.diff(anchors) <= 0):
            raise ValueError("anchors must be sorted ascending and distinct")
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.n_features = int(n_features)
        self.anchors = Tensor(anchors, requires_grad=learn_anchors)
        self.sigma = Tensor(float(sigma))
        self.w = param(np.ones(anchors.size))
        self.alpha = param(0.0)
        self.C = Tensor(1.0)
        self.phi = MLP((self.n_features + 1, *phi_hidden, self.n_features), rng)

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    def assignment(self, orbits: np.ndarray) -> np.ndarray:
        return assign_orbits(orbits, self.anchors.data, float(self.sigma.data))

    def __call__(self, feats, orbits: np.ndarray, segments: np.ndarray, counts: np.ndarray) -> Tensor:
        """Pool rows of ``feats`` grouped by ``segments`` into one vector per segment."""
        feats = as_tensor(feats)
        P, d = feats.shape
        if d != self.n_features:
            raise ValueError(f"GIGP expects {self.n_features} features, got {d}")
        B, M = len(counts), self.n_anchors
        order = canonical_order(segments, orbits, feats.data)
        f = gather(feats, order)
        A = _assign_tensor(orbits[order], self.anchors, float(self.sigma.data))  # (P, M)
        X = reshape(A, (P, M, 1)) * reshape(f, (P, 1, d))
        S = reshape(segment_sum(reshape(X, (P, M * d)), segments[order], B), (B, M, d))
        q = reshape(self.anchors, (1, M, 1)) * np.ones((B, 1, 1))
        learned = self.phi(concat([S, q], axis=-1))
        inv_n = (1.0 / np.asarray(counts, dtype=np.float64))[:, None, None]
        orbit_repr = S * inv_n + self.alpha * learned
        return tsum(orbit_repr * reshape(self.w, (1, M, 1)), axis=1) * self.C


def init_as_mean_pool(layer: GigpLayer) -> GigpLayer:
    """Reset alpha, w and C so the layer computes the global feature mean."""
    layer.alpha.data = np.zeros_like(layer.alpha.data)
    layer.w.data = np.ones_like(layer.w.data)
    layer.C.data = np.ones_like(layer.C.data)
    return layer


def gigp_forward(layer: GigpLayer, cloud: LiftedCloud) -> np.ndarray:
    """Pool a single lifted cloud to a feature vector."""
    N = len(cloud)
    out = layer(cloud.features, cloud.orbits, np.zeros(N, dtype=np.int64), np.array([N]))
    return out.data[0]
