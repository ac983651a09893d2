"""Dataset ingestion: IDX images, XYZ molecules, the synthetic shell task."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..groups import so2_matrix
from ..lifting import RawPointCloud

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
XYZ_ELEMENTS = ("H", "C", "N", "O", "F")


class DataFormatError(ValueError):
    pass


@dataclass
class Sample:
    cloud: RawPointCloud
    target: float | int


# ---------------------------------------------------------------------------
# IDX
# ---------------------------------------------------------------------------

def _read_idx(path, magic: int, n_dims: int) -> tuple[tuple[int, ...], np.ndarray]:
    buf = Path(path).read_bytes()
    header = 4 + 4 * n_dims
    if len(buf) < header:
        raise DataFormatError(f"{path}: truncated header, expected {header} bytes, got {len(buf)}")
    (got,) = struct.unpack(">I", buf[:4])
    if got != magic:
        raise DataFormatError(f"{path}: bad magic 0x{got:08x} at byte 0, expected 0x{magic:08x}")
    dims = struct.unpack(f">{n_dims}I", buf[4:header])
    expected = header + int(np.prod(dims))
    if len(buf) != expected:
        raise DataFormatError(f"{path}: expected {expected} bytes from header, file has {len(buf)} "
                              f"(data ends at byte offset {len(buf)})")
    return dims, np.frombuffer(buf, dtype=np.uint8, offset=header)


def load_idx_images(path) -> np.ndarray:
    """Images as an (n, rows, cols) float array scaled to [0, 1]."""
    dims, raw = _read_idx(path, IDX_IMAGES_MAGIC, 3)
    return raw.reshape(dims).astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    _, raw = _read_idx(path, IDX_LABELS_MAGIC, 1)
    return raw.astype(np.int64)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape) + images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes())


def image_to_cloud(image: np.ndarray, threshold: float = 0.5, max_points: int = 64,
                   rotation_angle: float = 0.0, seed: int = 0) -> RawPointCloud:
    """Lit pixels as a point cloud centred on the image, rotated by ``rotation_angle``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    image = np.asarray(image, dtype=np.float64)
    rows, cols = np.nonzero(image > threshold)
    if rows.size == 0:
        return RawPointCloud(np.zeros((1, 2)), np.zeros((1, 1)))
    cr, cc = (image.shape[0] - 1) / 2.0, (image.shape[1] - 1) / 2.0
    half = image.shape[1] / 2.0
    xy = np.stack([(cols - cc) / half, (cr - rows) / half], axis=1)
    feats = image[rows, cols][:, None]
    if rows.size > max_points:
        keep = np.sort(np.random.default_rng(seed).choice(rows.size, size=max_points, replace=False))
        xy, feats = xy[keep], feats[keep]
    if rotation_angle != 0.0:
        xy = xy @ so2_matrix(rotation_angle).T
    return RawPointCloud(xy, feats)


def load_digit_samples(images_path, labels_path, indices, threshold: float, max_points: int,
                       seed: int) -> list[Sample]:
    """Rotated-digit clouds for the given image indices, one uniform angle each.

    The angle and subsampling for image i depend only on (seed, i).
    """
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if len(images) != len(labels):
        raise DataFormatError("image and label files disagree on the item count")
    indices = [int(i) for i in indices]
    if indices and max(indices) >= len(images):
        raise DataFormatError(f"requested image {max(indices)}, file holds {len(images)}")
    out = []
    for i in indices:
        rng = np.random.default_rng([seed, i])
        angle = rng.uniform(0.0, 2 * np.pi)
        cloud = image_to_cloud(images[i], threshold, max_points, angle, seed=int(rng.integers(2**31)))
        out.append(Sample(cloud, int(labels[i])))
    return out


# ---------------------------------------------------------------------------
# XYZ
# ---------------------------------------------------------------------------

def parse_xyz(text: str, name: str = "<xyz>") -> tuple[RawPointCloud, str]:
    """Parse one XYZ block; returns the cloud (one-hot H, C, N, O, F features) and the comment line."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DataFormatError(f"{name}: line 1: missing atom count")
    try:
        n = int(lines[0].split()[0])
    except ValueError:
        raise DataFormatError(f"{name}: line 1: atom count is not an integer: {lines[0]!r}") from None
    if n < 1:
        raise DataFormatError(f"{name}: line 1: atom count must be positive")
    comment = lines[1] if len(lines) > 1 else ""
    body = [(i + 3, ln) for i, ln in enumerate(lines[2:]) if ln.strip()]
    if len(body) != n:
        raise DataFormatError(f"{name}: header declares {n} atoms, body has {len(body)}")
    coords = np.zeros((n, 3))
    feats = np.zeros((n, len(XYZ_ELEMENTS)))
    for i, (lineno, ln) in enumerate(body):
        parts = ln.split()
        if len(parts) < 4:
            raise DataFormatError(f"{name}: line {lineno}: expected 'symbol x y z', got {ln!r}")
        sym = parts[0]
        if sym not in XYZ_ELEMENTS:
            raise DataFormatError(f"{name}: line {lineno}: unknown element symbol {sym!r}")
        try:
            coords[i] = [float(v) for v in parts[1:4]]
        except ValueError:
            raise DataFormatError(f"{name}: line {lineno}: bad coordinate in {ln!r}") from None
        feats[i, XYZ_ELEMENTS.index(sym)] = 1.0
    return RawPointCloud(coords, feats), comment


def load_xyz(path) -> RawPointCloud:
    return parse_xyz(Path(path).read_text(), str(path))[0]


def load_xyz_samples(directory) -> list[Sample]:
    """Every ``*.xyz`` in ``directory`` (sorted by name); the target is the comment line's last float."""
    out = []
    for p in sorted(Path(directory).glob("*.xyz")):
        cloud, comment = parse_xyz(p.read_text(), str(p))
        try:
            target = float(comment.split()[-1].split("=")[-1])
        except (IndexError, ValueError):
            raise DataFormatError(f"{p}: line 2: comment must end with a numeric target") from None
        out.append(Sample(recenter(cloud), target))
    if not out:
        raise DataFormatError(f"no .xyz files under {directory}")
    return out


def recenter(cloud: RawPointCloud) -> RawPointCloud:
    """Shift coordinates so their unweighted mean is the origin."""
    c = cloud.coords - cloud.coords.mean(axis=0)
    c = c - c.mean(axis=0)  # second pass trims the residual roundoff
    return RawPointCloud(c, cloud.features)


# ---------------------------------------------------------------------------
# synthetic shells
# ---------------------------------------------------------------------------

SHELL_RADII = (1.0, 2.0, 3.0)
SHELL_NOISE = 0.05


def shell_value(r):
    return np.sin(r) + np.asarray(r) ** 2 / 10.0


def gen_synth_invariant(n_samples: int, n_points: int, seed: int, dim: int = 2) -> list[Sample]:
    """Points on noisy shells of radius 1, 2, 3 with constant features.

    Each sample draws its size uniformly from [ceil(n_points / 4), n_points] and
    its shell proportions from a flat Dirichlet, so the target
    sum_shells (sin r + r^2 / 10) * count(r) depends on the counts, not only on
    the proportions. Targets are raw; standardization happens per split.
    """
    if n_samples < 1 or n_points < 1:
        raise ValueError("counts must be >= 1")
    rng = np.random.default_rng(seed)
    radii = np.asarray(SHELL_RADII)
    out = []
    lo = max(1, -(-n_points // 4))
    for _ in range(n_samples):
        N = int(rng.integers(lo, n_points + 1))
        shells = rng.choice(len(radii), size=N, p=rng.dirichlet(np.ones(len(radii))))
        r = radii[shells] + rng.normal(0.0, SHELL_NOISE, size=N)
        d = rng.normal(size=(N, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        target = float(shell_value(radii[shells]).sum())
        out.append(Sample(RawPointCloud(d * r[:, None], np.ones((N, 1))), target))
    return out


def write_synth_jsonl(path, samples: list[Sample]) -> None:
    with open(path, "w") as fh:
        for s in samples:
            fh.write(json.dumps({"coords": s.cloud.coords.tolist(), "features": s.cloud.features.tolist(),
                                 "target": s.target}) + "\n")


def read_synth_jsonl(path) -> list[Sample]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(Sample(RawPointCloud(rec["coords"], rec["features"]), rec["target"]))
            except (KeyError, ValueError) as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
    return out
