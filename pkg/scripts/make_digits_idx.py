"""Write MNIST-style IDX files from the 5000-digit sample bundled with mlxtend.

    python scripts/make_digits_idx.py --out data/

produces ``digits-images.idx`` and ``digits-labels.idx`` (standard big-endian
IDX layout). Any real MNIST IDX pair can be used instead.
"""
from __future__ import annotations

import argparse
import gzip
import sys
from pathlib import Path

import numpy as np

from gigp.harness.data import write_idx_images, write_idx_labels


def find_csv() -> Path:
    import mlxtend

    path = Path(mlxtend.__file__).parent / "data" / "data" / "mnist_5k.csv.gz"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; is mlxtend installed?")
    return path


def convert(out_dir, csv_path=None) -> tuple[Path, Path]:
    csv_path = Path(csv_path) if csv_path else find_csv()
    with gzip.open(csv_path, "rt") as fh:
        table = np.loadtxt(fh, delimiter=",", dtype=np.int64)
    images = table[:, :784].reshape(-1, 28, 28)
    labels = table[:, 784]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    img_path, lab_path = out_dir / "digits-images.idx", out_dir / "digits-labels.idx"
    write_idx_images(img_path, images)
    write_idx_labels(lab_path, labels)
    return img_path, lab_path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data")
    ap.add_argument("--csv", default=None, help="csv of 784 pixels + label per row (gzip)")
    args = ap.parse_args(argv)
    for p in convert(args.out, args.csv):
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
