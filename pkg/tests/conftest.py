import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


@pytest.fixture(scope="session")
def digits_idx(tmp_path_factory):
    """(images, labels) IDX pair built from mlxtend's bundled 5000-digit sample."""
    pytest.importorskip("mlxtend")
    from scripts.make_digits_idx import convert

    return convert(tmp_path_factory.mktemp("digits"))
