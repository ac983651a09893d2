"""Lie groups SO(2), SO(3) and T(n): elements, algebra coordinates, exp/log and actions.

Elements are small immutable values. The batched ``*_batch`` helpers at the
bottom operate on stacked arrays and are what the layers use internally.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

PI = np.pi
_ORTHO_DRIFT = 1e-8


class GroupId(str, enum.Enum):
    SO2 = "SO2"
    SO3 = "SO3"
    TN = "Tn"

    @classmethod
    def parse(cls, value: "str | GroupId") -> "GroupId":
        if isinstance(value, GroupId):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown group {value!r}")


class GroupMismatchError(ValueError):
    """Raised when two elements from different groups are combined."""


def wrap_angle(a):
    """Map angles into (-pi, pi]."""
    x = np.mod(a, 2 * PI)
    if np.ndim(x):
        return np.where(x > PI, x - 2 * PI, x)
    return float(x - 2 * PI) if x > PI else float(x)


def hat(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def project_to_so3(R: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (polar factor)."""
    u, _, vt = np.linalg.svd(R)
    Q = u @ vt
    if np.linalg.det(Q) < 0:
        u[:, -1] *= -1
        Q = u @ vt
    return Q


def so2_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def so3_exp(w: np.ndarray) -> np.ndarray:
    """Rodrigues' formula for a rotation vector."""
    w = np.asarray(w, dtype=np.float64)
    theta = float(np.linalg.norm(w))
    K = hat(w)
    if theta < 1e-6:
        # Taylor terms keep full precision near the identity.
        a = 1.0 - theta**2 / 6.0 + theta**4 / 120.0
        b = 0.5 - theta**2 / 24.0 + theta**4 / 720.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(R: np.ndarray) -> np.ndarray:
    """Principal rotation vector of ``R`` (angle in [0, pi]).

    At angle pi the axis sign is fixed so that its first nonzero component is
    positive.
    """
    R = np.asarray(R, dtype=np.float64)
    axis_x2 = vee(R - R.T)  # = 2 sin(theta) * axis
    s2 = float(np.linalg.norm(axis_x2))
    c = (np.trace(R) - 1.0) / 2.0
    theta = float(np.arctan2(s2 / 2.0, c))
    if theta < 1e-6:
        return axis_x2 / 2.0 * (1.0 + theta**2 / 6.0 + 7.0 * theta**4 / 360.0)
    if theta < PI - 1e-4:
        return axis_x2 * (theta / s2)
    # Near pi: recover the axis from the symmetric part, B = (1 - cos) n n^T.
    B = (R + R.T) / 2.0 - np.cos(theta) * np.eye(3)
    j = int(np.argmax(np.diag(B)))
    n = B[:, j] / np.sqrt(max(B[j, j], 1e-300))
    n /= np.linalg.norm(n)
    if s2 > 1e-12:
        if np.dot(n, axis_x2) < 0:
            n = -n
    else:
        nz = np.flatnonzero(np.abs(n) > 1e-12)
        if nz.size and n[nz[0]] < 0:
            n = -n
    return theta * n


@dataclass(frozen=True, eq=False)
class GroupElement:
    """One group element.

    ``data`` is the angle for SO2, a 3x3 rotation matrix for SO3 and a
    translation vector for Tn.
    """

    group: GroupId
    data: np.ndarray | float

    def __post_init__(self):
        g = GroupId.parse(self.group)
        object.__setattr__(self, "group", g)
        if g is GroupId.SO2:
            object.__setattr__(self, "data", float(wrap_angle(float(self.data))))
        else:
            arr = np.array(self.data, dtype=np.float64)
            if g is GroupId.SO3:
                if arr.shape != (3, 3):
                    raise ValueError(f"SO3 element needs a 3x3 matrix, got {arr.shape}")
                if np.max(np.abs(arr.T @ arr - np.eye(3))) > _ORTHO_DRIFT:
                    arr = project_to_so3(arr)
            else:
                arr = arr.reshape(-1)
            arr.flags.writeable = False
            object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        """Dimension of the space the group acts on."""
        if self.group is GroupId.SO2:
            return 2
        if self.group is GroupId.SO3:
            return 3
        return int(self.data.shape[0])

    def matrix(self) -> np.ndarray:
        if self.group is GroupId.SO2:
            return so2_matrix(self.data)
        if self.group is GroupId.SO3:
            return np.array(self.data)
        raise TypeError("translations have no linear representation")

    def allclose(self, other: "GroupElement", atol: float = 1e-10) -> bool:
        if self.group is not other.group:
            return False
        if self.group is GroupId.SO2:
            return abs(wrap_angle(self.data - other.data)) <= atol
        return bool(np.allclose(self.data, other.data, rtol=0.0, atol=atol))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def __repr__(self) -> str:
        return f"GroupElement({self.group.value}, {np.round(self.data, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class AlgebraVector:
    group: GroupId
    coords: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "group", GroupId.parse(self.group))
        c = np.atleast_1d(np.array(self.coords, dtype=np.float64)).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError("algebra coordinates must be finite")
        if self.group is GroupId.SO2 and c.shape != (1,):
            raise ValueError("so(2) coordinates are 1-dimensional")
        if self.group is GroupId.SO3 and c.shape != (3,):
            raise ValueError("so(3) coordinates are 3-dimensional")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


def _check_same(g: GroupElement, h: GroupElement) -> None:
    if g.group is not h.group:
        raise GroupMismatchError(f"cannot combine {g.group.value} with {h.group.value}")
    if g.group is GroupId.TN and g.data.shape != h.data.shape:
        raise GroupMismatchError("translation dimensions differ")


def identity(group: GroupId | str, n: int = 2) -> GroupElement:
    group = GroupId.parse(group)
    if group is GroupId.SO2:
        return GroupElement(group, 0.0)
    if group is GroupId.SO3:
        return GroupElement(group, np.eye(3))
    return GroupElement(group, np.zeros(n))


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    _check_same(g, h)
    if g.group is GroupId.SO2:
        return GroupElement(g.group, g.data + h.data)
    if g.group is GroupId.SO3:
        return GroupElement(g.group, g.data @ h.data)
    return GroupElement(g.group, g.data + h.data)


def inverse(g: GroupElement) -> GroupElement:
    if g.group is GroupId.SO2:
        return GroupElement(g.group, -g.data)
    if g.group is GroupId.SO3:
        return GroupElement(g.group, g.data.T)
    return GroupElement(g.group, -g.data)


def exp(a: AlgebraVector) -> GroupElement:
    if a.group is GroupId.SO2:
        return GroupElement(a.group, a.coords[0])
    if a.group is GroupId.SO3:
        return GroupElement(a.group, so3_exp(a.coords))
    return GroupElement(a.group, a.coords)


def log(g: GroupElement) -> AlgebraVector:
    if g.group is GroupId.SO2:
        return AlgebraVector(g.group, [g.data])
    if g.group is GroupId.SO3:
        return AlgebraVector(g.group, so3_log(g.data))
    return AlgebraVector(g.group, g.data)


def act(g: GroupElement, x) -> np.ndarray:
    """Apply ``g`` to one point (shape ``(n,)``) or to rows of a ``(N, n)`` array."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != g.dim:
        raise ValueError(f"{g.group.value} acts on R^{g.dim}, got points of dimension {x.shape[-1]}")
    if g.group is GroupId.TN:
        return x + g.data
    return x @ g.matrix().T


def left_invariant_distance(u: GroupElement, v: GroupElement) -> float:
    """||log(u^-1 v)||_2."""
    return log(compose(inverse(u), v)).norm()


def random_element(group: GroupId | str, rng: np.random.Generator, n: int = 2, scale: float = 1.0) -> GroupElement:
    """Haar-random rotation, or a Gaussian translation with the given scale."""
    group = GroupId.parse(group)
    if group is GroupId.SO2:
        return GroupElement(group, rng.uniform(-PI, PI))
    if group is GroupId.SO3:
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        R = np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ])
        return GroupElement(group, R)
    return GroupElement(group, rng.normal(scale=scale, size=n))


# ---------------------------------------------------------------------------
# batched helpers on stacked element arrays
# ---------------------------------------------------------------------------

def algebra_dim(group: GroupId, n: int) -> int:
    return {GroupId.SO2: 1, GroupId.SO3: 3}.get(group, n)


def relative_log_batch(group: GroupId, eu: np.ndarray, ev: np.ndarray) -> np.ndarray:
    """Row-wise log(v^-1 u) for stacked elements; returns ``(..., algebra_dim)``."""
    if group is GroupId.SO2:
        return wrap_angle(eu - ev)[..., None]
    if group is GroupId.TN:
        return eu - ev
    M = np.einsum("...ba,...bc->...ac", ev, eu)
    flat = M.reshape(-1, 3, 3)
    out = np.empty((flat.shape[0], 3))
    for i in range(flat.shape[0]):
        out[i] = so3_log(flat[i])
    return out.reshape(M.shape[:-2] + (3,))
