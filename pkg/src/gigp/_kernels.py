"""Hot geometric kernels with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``GIGP_DISABLE_NUMBA`` is not
set to a truthy value. Both paths return the same results to float roundoff;
``benchmarks/bench_kernels.py`` times one against the other.
"""
from __future__ import annotations

import os

import numpy as np

# Distances are snapped to this grid before ranking so that exact geometric
# ties (pixel grids) stay ties after a rotation perturbs them by roundoff.
TIE_QUANTUM = 1e-10

_SO2, _SO3, _TN = 0, 1, 2


def _env_wants_numba() -> bool:
    return os.environ.get("GIGP_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _env_wants_numba()


def set_backend(name: str) -> None:
    """Switch between ``"numba"`` and ``"numpy"`` at runtime (benchmarks, tests)."""
    global USE_NUMBA
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        USE_NUMBA = True
    elif name == "numpy":
        USE_NUMBA = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def _group_code(group) -> int:
    v = getattr(group, "value", group)
    return {"SO2": _SO2, "SO3": _SO3, "Tn": _TN}[v]


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------

def _wrap_np(a):
    x = np.mod(a, 2 * np.pi)
    return np.where(x > np.pi, x - 2 * np.pi, x)


def _so3_angle_np(M):
    s = np.stack([M[..., 2, 1] - M[..., 1, 2], M[..., 0, 2] - M[..., 2, 0], M[..., 1, 0] - M[..., 0, 1]], -1)
    s2 = np.linalg.norm(s, axis=-1)
    c = (M[..., 0, 0] + M[..., 1, 1] + M[..., 2, 2] - 1.0) / 2.0
    return np.arctan2(s2 / 2.0, c)


def _pairwise_sq_np(code, elems, orbits, lam):
    dq = orbits[:, None] - orbits[None, :]
    if code == _SO2:
        a = _wrap_np(elems[None, :] - elems[:, None])
        D = a * a
    elif code == _SO3:
        M = np.einsum("iba,jbc->ijac", elems, elems)
        th = _so3_angle_np(M)
        D = th * th
    else:
        diff = elems[None, :, :] - elems[:, None, :]
        D = np.einsum("ijk,ijk->ij", diff, diff)
    return D + lam * dq * dq


def _knn_np(D, k):
    keys = np.floor(D / TIE_QUANTUM + 0.5)
    np.fill_diagonal(keys, -1.0)
    return np.argsort(keys, axis=1, kind="stable")[:, :k].astype(np.int64)


def _so3_log_rows_np(M):
    from .groups import so3_log

    flat = M.reshape(-1, 3, 3)
    out = np.empty((flat.shape[0], 3))
    for i in range(flat.shape[0]):
        out[i] = so3_log(flat[i])
    return out.reshape(M.shape[:-2] + (3,))


def _relative_logs_np(code, elems, nbr):
    # log(v^-1 u) with u = elems[i], v = elems[nbr[i, s]]
    if code == _SO2:
        return _wrap_np(elems[:, None] - elems[nbr])[..., None]
    if code == _TN:
        return elems[:, None, :] - elems[nbr]
    M = np.einsum("isba,ibc->isac", elems[nbr], elems)
    return _so3_log_rows_np(M)


def _scatter_add_np(n_rows, idx, vals):
    out = np.zeros((n_rows,) + vals.shape[1:])
    np.add.at(out, idx, vals)
    return out


def _reference_vectors_np(coords):
    diff = coords[None, :, :] - coords[:, None, :]
    w = 1.0 / (1.0 + np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(w, 0.0)
    return w @ coords


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    njit = numba.njit(cache=True, nogil=True)

    @njit
    def _wrap_nb(a):
        x = a % (2 * np.pi)
        if x > np.pi:
            x -= 2 * np.pi
        return x

    @njit
    def _so3_rel_nb(Rv, Ru, out):
        # out = Rv^T Ru
        for a in range(3):
            for c in range(3):
                acc = 0.0
                for b in range(3):
                    acc += Rv[b, a] * Ru[b, c]
                out[a, c] = acc

    @njit
    def _so3_angle_nb(M):
        sx = M[2, 1] - M[1, 2]
        sy = M[0, 2] - M[2, 0]
        sz = M[1, 0] - M[0, 1]
        s2 = np.sqrt(sx * sx + sy * sy + sz * sz)
        c = (M[0, 0] + M[1, 1] + M[2, 2] - 1.0) / 2.0
        return np.arctan2(s2 / 2.0, c)

    @njit
    def _so3_log_nb(M, out):
        sx = M[2, 1] - M[1, 2]
        sy = M[0, 2] - M[2, 0]
        sz = M[1, 0] - M[0, 1]
        s2 = np.sqrt(sx * sx + sy * sy + sz * sz)
        c = (M[0, 0] + M[1, 1] + M[2, 2] - 1.0) / 2.0
        th = np.arctan2(s2 / 2.0, c)
        if th < 1e-6:
            f = 0.5 * (1.0 + th * th / 6.0 + 7.0 * th ** 4 / 360.0)
            out[0] = sx * f
            out[1] = sy * f
            out[2] = sz * f
            return
        if th < np.pi - 1e-4:
            f = th / s2
            out[0] = sx * f
            out[1] = sy * f
            out[2] = sz * f
            return
        ct = np.cos(th)
        B = np.empty((3, 3))
        for a in range(3):
            for b in range(3):
                B[a, b] = 0.5 * (M[a, b] + M[b, a])
            B[a, a] -= ct
        j = 0
        for a in range(1, 3):
            if B[a, a] > B[j, j]:
                j = a
        d = np.sqrt(max(B[j, j], 1e-300))
        n = np.empty(3)
        for a in range(3):
            n[a] = B[a, j] / d
        nn = np.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
        for a in range(3):
            n[a] /= nn
        if s2 > 1e-12:
            if n[0] * sx + n[1] * sy + n[2] * sz < 0:
                for a in range(3):
                    n[a] = -n[a]
        else:
            for a in range(3):
                if abs(n[a]) > 1e-12:
                    if n[a] < 0:
                        for b in range(3):
                            n[b] = -n[b]
                    break
        for a in range(3):
            out[a] = th * n[a]

    @njit
    def _pairwise_sq_so2_nb(elems, orbits, lam):
        N = elems.shape[0]
        D = np.empty((N, N))
        for i in range(N):
            for j in range(N):
                a = _wrap_nb(elems[j] - elems[i])
                dq = orbits[i] - orbits[j]
                D[i, j] = a * a + lam * dq * dq
        return D

    @njit
    def _pairwise_sq_so3_nb(elems, orbits, lam):
        N = elems.shape[0]
        D = np.empty((N, N))
        M = np.empty((3, 3))
        for i in range(N):
            for j in range(N):
                # angle of R_i^T R_j
                _so3_rel_nb(elems[i], elems[j], M)
                th = _so3_angle_nb(M)
                dq = orbits[i] - orbits[j]
                D[i, j] = th * th + lam * dq * dq
        return D

    @njit
    def _pairwise_sq_tn_nb(elems, orbits, lam):
        N, n = elems.shape
        D = np.empty((N, N))
        for i in range(N):
            for j in range(N):
                acc = 0.0
                for a in range(n):
                    t = elems[j, a] - elems[i, a]
                    acc += t * t
                dq = orbits[i] - orbits[j]
                D[i, j] = acc + lam * dq * dq
        return D

    @njit
    def _knn_nb(D, k, quantum):
        N = D.shape[0]
        out = np.empty((N, k), dtype=np.int64)
        best = np.empty(k)
        for i in range(N):
            # running k smallest (key, index) pairs; scanning j upward keeps ties in index order
            m = 0
            for j in range(N):
                key = -1.0 if j == i else np.floor(D[i, j] / quantum + 0.5)
                if m == k and key >= best[k - 1]:
                    continue
                pos = m if m < k else k - 1
                while pos > 0 and best[pos - 1] > key:
                    if pos < k:
                        best[pos] = best[pos - 1]
                        out[i, pos] = out[i, pos - 1]
                    pos -= 1
                best[pos] = key
                out[i, pos] = j
                if m < k:
                    m += 1
        return out

    @njit
    def _relative_logs_so3_nb(elems, nbr):
        N, k = nbr.shape
        out = np.empty((N, k, 3))
        M = np.empty((3, 3))
        v = np.empty(3)
        for i in range(N):
            for s in range(k):
                _so3_rel_nb(elems[nbr[i, s]], elems[i], M)
                _so3_log_nb(M, v)
                out[i, s, 0] = v[0]
                out[i, s, 1] = v[1]
                out[i, s, 2] = v[2]
        return out

    @njit
    def _relative_logs_so2_nb(elems, nbr):
        N, k = nbr.shape
        out = np.empty((N, k, 1))
        for i in range(N):
            for s in range(k):
                out[i, s, 0] = _wrap_nb(elems[i] - elems[nbr[i, s]])
        return out

    @njit
    def _scatter_add_nb(n_rows, idx, vals):
        m = vals.shape[1]
        out = np.zeros((n_rows, m))
        for r in range(idx.shape[0]):
            t = idx[r]
            for c in range(m):
                out[t, c] += vals[r, c]
        return out

    @njit
    def _reference_vectors_nb(coords):
        N, n = coords.shape
        out = np.zeros((N, n))
        for i in range(N):
            for j in range(N):
                if j == i:
                    continue
                d2 = 0.0
                for a in range(n):
                    t = coords[j, a] - coords[i, a]
                    d2 += t * t
                w = 1.0 / (1.0 + d2)
                for a in range(n):
                    out[i, a] += w * coords[j, a]
        return out


# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------

def pairwise_sq_dist(group, elems, orbits, lam: float = 1.0) -> np.ndarray:
    """Squared lifted distance ||log(u_i^-1 u_j)||^2 + lam (q_i - q_j)^2 for all pairs."""
    code = _group_code(group)
    elems = np.ascontiguousarray(elems, dtype=np.float64)
    orbits = np.ascontiguousarray(orbits, dtype=np.float64)
    if not USE_NUMBA:
        return _pairwise_sq_np(code, elems, orbits, lam)
    if code == _SO2:
        return _pairwise_sq_so2_nb(elems, orbits, float(lam))
    if code == _SO3:
        return _pairwise_sq_so3_nb(elems, orbits, float(lam))
    return _pairwise_sq_tn_nb(elems, orbits, float(lam))


def knn(D: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest entries per row; self first, ties by index."""
    D = np.ascontiguousarray(D, dtype=np.float64)
    if USE_NUMBA:
        return _knn_nb(D, int(k), TIE_QUANTUM)
    return _knn_np(D, k)


def relative_logs(group, elems, nbr) -> np.ndarray:
    """``out[i, s] = log(v^-1 u)`` for ``u = elems[i]``, ``v = elems[nbr[i, s]]``."""
    code = _group_code(group)
    elems = np.ascontiguousarray(elems, dtype=np.float64)
    nbr = np.ascontiguousarray(nbr, dtype=np.int64)
    if USE_NUMBA and code == _SO3:
        return _relative_logs_so3_nb(elems, nbr)
    if USE_NUMBA and code == _SO2:
        return _relative_logs_so2_nb(elems, nbr)
    return _relative_logs_np(code, elems, nbr)


def scatter_add(n_rows: int, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Sum ``vals[..., :]`` into ``out[idx[...]]``; sequential, hence deterministic.

    ``vals`` has shape ``idx.shape + tail`` and the result ``(n_rows,) + tail``.
    """
    idx = np.asarray(idx, dtype=np.int64)
    tail = vals.shape[idx.ndim:]
    idx = np.ascontiguousarray(idx.reshape(-1))
    flat = np.ascontiguousarray(vals, dtype=np.float64).reshape(idx.shape[0], -1)
    if USE_NUMBA:
        out = _scatter_add_nb(int(n_rows), idx, flat)
    else:
        out = _scatter_add_np(int(n_rows), idx, flat)
    return out.reshape((n_rows,) + tuple(tail))


def reference_vectors(coords: np.ndarray) -> np.ndarray:
    """Rotation-equivariant per-point reference: sum_j x_j / (1 + |x_i - x_j|^2), j != i."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if USE_NUMBA:
        return _reference_vectors_nb(coords)
    return _reference_vectors_np(coords)

