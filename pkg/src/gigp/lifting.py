"""Lifting raw point clouds to (group element, orbit, feature) triples.

For SO(n) acting on R^n the orbit of ``x`` is the sphere of radius ``|x|`` and
its canonical origin is ``(|x|, 0, ..., 0)``. For T(n) there is a single orbit
with origin 0.

SO(3) needs a choice inside the stabilizer of the origin (rotations about the
first axis). ``lift`` picks it from a rotation-equivariant reference direction
computed from the whole cloud, so lifting a rotated cloud gives exactly the
left-multiplied elements. The plain geodesic rotation (``geodesic_rotation``)
is the fallback for degenerate configurations and the first element returned
by ``stabilizer_sample``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .groups import GroupElement, GroupId, act

_ORIGIN_EPS = 1e-12
_FRAME_EPS = 1e-9


@dataclass(frozen=True)
class RawPointCloud:
    coords: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=np.float64))
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats[:, None]
        if coords.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")
        if feats.shape[0] != coords.shape[0] or feats.shape[1] < 1:
            raise ValueError(f"features {feats.shape} do not match coords {coords.shape}")
        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(feats))):
            raise ValueError("point cloud contains non-finite values")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "features", feats)

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def transformed(self, g: GroupElement) -> "RawPointCloud":
        return RawPointCloud(act(g, self.coords), self.features)


@dataclass(frozen=True)
class LiftedPoint:
    elem: GroupElement
    orbit: float
    feature: np.ndarray


@dataclass
class LiftedCloud:
    """Array-backed lifted cloud.

    ``elems`` stacks the element data: ``(N,)`` angles for SO2, ``(N, 3, 3)``
    matrices for SO3 and ``(N, n)`` translations for Tn.
    """

    group: GroupId
    elems: np.ndarray
    orbits: np.ndarray
    features: np.ndarray
    dim: int

    def __post_init__(self):
        if len(self.orbits) == 0:
            raise ValueError("lifted cloud is empty")

    def __len__(self) -> int:
        return len(self.orbits)

    @property
    def points(self) -> list[LiftedPoint]:
        return [LiftedPoint(self.element(i), float(self.orbits[i]), self.features[i]) for i in range(len(self))]

    def element(self, i: int) -> GroupElement:
        return GroupElement(self.group, self.elems[i])

    def with_features(self, features: np.ndarray) -> "LiftedCloud":
        return LiftedCloud(self.group, self.elems, self.orbits, np.asarray(features), self.dim)

    def take(self, idx) -> "LiftedCloud":
        idx = np.asarray(idx, dtype=np.int64)
        return LiftedCloud(self.group, self.elems[idx], self.orbits[idx], self.features[idx], self.dim)

    def coords(self) -> np.ndarray:
        """Reconstruct Euclidean coordinates as act(u, origin_of(q))."""
        if self.group is GroupId.TN:
            return np.array(self.elems)
        if self.group is GroupId.SO2:
            return self.orbits[:, None] * np.stack([np.cos(self.elems), np.sin(self.elems)], -1)
        return self.orbits[:, None] * self.elems[:, :, 0]


def _space_dim(group: GroupId, n: int | None) -> int:
    if group is GroupId.SO2:
        return 2
    if group is GroupId.SO3:
        return 3
    if n is None:
        raise ValueError("Tn needs an explicit dimension")
    return n


def orbit_of(x, group: GroupId | str) -> float:
    group = GroupId.parse(group)
    if group is GroupId.TN:
        return 0.0
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64)))


def origin_of(orbit: float, group: GroupId | str, n: int | None = None) -> np.ndarray:
    group = GroupId.parse(group)
    if orbit < 0:
        raise ValueError("orbit coordinate must be nonnegative")
    o = np.zeros(_space_dim(group, n))
    if group is not GroupId.TN:
        o[0] = orbit
    return o


def geodesic_rotation(direction: np.ndarray) -> np.ndarray:
    """Minimal rotation taking e1 to the unit vector ``direction``.

    At ``direction = -e1`` the axis is undefined; the rotation by pi about e3 is
    used.
    """
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    c = d[0]
    axis = np.array([0.0, -d[2], d[1]])  # e1 x d
    s = np.linalg.norm(axis)
    if s < 1e-15:
        return np.eye(3) if c > 0 else np.diag([-1.0, -1.0, 1.0])
    k = axis / s
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def _about_e1(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _so3_frames(coords: np.ndarray, radii: np.ndarray) -> np.ndarray:
    N = coords.shape[0]
    frames = np.empty((N, 3, 3))
    ref = _kernels.reference_vectors(coords) if N > 1 else np.zeros_like(coords)
    for i in range(N):
        if radii[i] <= _ORIGIN_EPS:
            frames[i] = np.eye(3)
            continue
        e1 = coords[i] / radii[i]
        p = ref[i] - np.dot(ref[i], e1) * e1
        pn = np.linalg.norm(p)
        if pn <= _FRAME_EPS * max(np.linalg.norm(ref[i]), 1.0):
            frames[i] = geodesic_rotation(e1)
            continue
        e2 = p / pn
        frames[i] = np.stack([e1, e2, np.cross(e1, e2)], axis=1)
    return frames


def lift(cloud: RawPointCloud, group: GroupId | str) -> LiftedCloud:
    """Lift every point to one group element plus its orbit coordinate (K = 1).

    Points at the exact origin under SO(n) get the identity and orbit 0.
    """
    group = GroupId.parse(group)
    X = cloud.coords
    if group is GroupId.TN:
        return LiftedCloud(group, X.copy(), np.zeros(len(X)), cloud.features, X.shape[1])
    n = _space_dim(group, None)
    if X.shape[1] != n:
        raise ValueError(f"{group.value} lifting needs {n}-d coordinates, got {X.shape[1]}")
    radii = np.linalg.norm(X, axis=1)
    if group is GroupId.SO2:
        angles = np.arctan2(X[:, 1], X[:, 0])
        angles = np.where(radii <= _ORIGIN_EPS, 0.0, angles)
        angles = np.where(angles == -np.pi, np.pi, angles)
        return LiftedCloud(group, angles, radii, cloud.features, 2)
    return LiftedCloud(group, _so3_frames(X, radii), radii, cloud.features, 3)


def stabilizer_sample(x, group: GroupId | str, m: int, rng_seed: int) -> list[GroupElement]:
    """``m`` elements u with u . origin_of(|x|) = x for SO(3).

    The first is the geodesic rotation; the rest compose it with rotations
    about e1 drawn uniformly from [0, 2 pi).
    """
    group = GroupId.parse(group)
    if group is not GroupId.SO3:
        raise ValueError(f"{group.value} has no nontrivial stabilizer to sample")
    if m < 1:
        raise ValueError("m must be at least 1")
    x = np.asarray(x, dtype=np.float64)
    r = np.linalg.norm(x)
    base = geodesic_rotation(x / r) if r > _ORIGIN_EPS else np.eye(3)
    rng = np.random.default_rng(rng_seed)
    out = [GroupElement(group, base)]
    for phi in rng.uniform(0.0, 2 * np.pi, size=m - 1):
        out.append(GroupElement(group, base @ _about_e1(phi)))
    return out
