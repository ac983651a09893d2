import struct

import numpy as np
import pytest

from gigp.groups import GroupElement, act, random_element
from gigp.harness.data import (DataFormatError, gen_synth_invariant, image_to_cloud, load_digit_samples,
                               load_idx_images, load_idx_labels, load_xyz, load_xyz_samples, parse_xyz,
                               read_synth_jsonl, recenter, shell_value, write_idx_images, write_idx_labels,
                               write_synth_jsonl)
from gigp.lifting import RawPointCloud


@pytest.fixture
def idx_fixture(tmp_path):
    imgs = np.zeros((3, 28, 28), dtype=np.uint8)
    imgs[0, 13, 20] = 255
    imgs[1, 5:20, 10:12] = 200
    ip, lp = tmp_path / "images.idx", tmp_path / "labels.idx"
    write_idx_images(ip, imgs)
    write_idx_labels(lp, [7, 1, 0])
    return ip, lp


# -- IDX -----------------------------------------------------------------------------

def test_idx_round_trip(idx_fixture):
    ip, lp = idx_fixture
    images = load_idx_images(ip)
    assert images.shape == (3, 28, 28)
    assert images.min() >= 0.0 and images.max() == 1.0
    assert load_idx_labels(lp).tolist() == [7, 1, 0]


def test_idx_header_is_big_endian(idx_fixture):
    raw = idx_fixture[0].read_bytes()
    assert struct.unpack(">IIII", raw[:16]) == (0x803, 3, 28, 28)


def test_idx_truncated(idx_fixture):
    ip, _ = idx_fixture
    ip.write_bytes(ip.read_bytes()[:-10])
    with pytest.raises(DataFormatError, match=r"expected \d+ bytes.*has \d+"):
        load_idx_images(ip)


def test_idx_bad_magic(idx_fixture):
    ip, lp = idx_fixture
    with pytest.raises(DataFormatError, match="magic"):
        load_idx_images(lp)
    with pytest.raises(DataFormatError, match="magic"):
        load_idx_labels(ip)


# -- image_to_cloud ------------------------------------------------------------------

def test_single_pixel_coordinates():
    img = np.zeros((28, 28))
    img[13, 20] = 0.8
    c = image_to_cloud(img, 0.5, 64, 0.0)
    assert c.n_points == 1
    assert np.allclose(c.coords[0], [(20 - 13.5) / 14, (13.5 - 13) / 14], atol=1e-15)
    assert c.coords[0, 1] == pytest.approx(0.0357, abs=1e-4)
    assert c.features[0, 0] == 0.8


def test_rotation_applies_exactly():
    rng = np.random.default_rng(0)
    img = rng.uniform(size=(28, 28))
    a = image_to_cloud(img, 0.7, 500, 0.0)
    b = image_to_cloud(img, 0.7, 500, np.pi / 2)
    assert np.allclose(b.coords, act(GroupElement("SO2", np.pi / 2), a.coords), atol=1e-15)
    assert np.array_equal(a.features, b.features)


def test_blank_image_gives_origin_sentinel():
    c = image_to_cloud(np.zeros((28, 28)))
    assert np.array_equal(c.coords, [[0.0, 0.0]]) and np.array_equal(c.features, [[0.0]])


def test_subsampling_is_seeded():
    img = np.ones((28, 28))
    a, b = image_to_cloud(img, 0.5, 30, 0.0, seed=1), image_to_cloud(img, 0.5, 30, 0.0, seed=1)
    assert a.n_points == 30 and np.array_equal(a.coords, b.coords)
    assert not np.array_equal(a.coords, image_to_cloud(img, 0.5, 30, 0.0, seed=2).coords)


def test_threshold_range():
    with pytest.raises(ValueError):
        image_to_cloud(np.zeros((28, 28)), 1.0)


def test_digit_samples_depend_on_index_not_position(idx_fixture):
    ip, lp = idx_fixture
    a = load_digit_samples(ip, lp, [0, 1, 2], 0.5, 64, seed=3)
    b = load_digit_samples(ip, lp, [2, 1], 0.5, 64, seed=3)
    assert [s.target for s in a] == [7, 1, 0]
    assert np.array_equal(a[1].cloud.coords, b[1].cloud.coords)
    assert np.array_equal(a[2].cloud.coords, b[0].cloud.coords)
    # rotation preserves radii
    r = np.linalg.norm(a[0].cloud.coords, axis=1)
    assert r[0] == pytest.approx(np.hypot(6.5, 0.5) / 14)
    with pytest.raises(DataFormatError):
        load_digit_samples(ip, lp, [3], 0.5, 64, 0)


# -- XYZ --------------------------------------------------------------------------------

def test_xyz_two_atoms(tmp_path):
    p = tmp_path / "h2.xyz"
    p.write_text("2\n\nH 0 0 0\nH 0 0 0.74\n")
    c = load_xyz(p)
    assert c.n_points == 2
    assert np.array_equal(c.coords[1], [0, 0, 0.74])
    assert np.array_equal(c.features, [[1, 0, 0, 0, 0]] * 2)


@pytest.mark.parametrize("text,msg", [
    ("", "line 1"),
    ("3\n\nH 0 0 0\nO 1 0 0\n", "declares 3"),
    ("1\n\nXe 0 0 0\n", "line 3.*unknown"),
    ("2\ncomment\nC 0 0 0\nN 0 zero 0\n", "line 4"),
    ("1\n\nC 0 0\n", "line 3"),
    ("two\n\n", "line 1"),
])
def test_xyz_errors(text, msg):
    with pytest.raises(DataFormatError, match=msg):
        parse_xyz(text)


def test_xyz_directory(tmp_path):
    (tmp_path / "a.xyz").write_text("2\nenergy -0.25\nC 1 0 0\nO 3 0 0\n")
    (tmp_path / "b.xyz").write_text("1\nhomo=0.5\nF 0 2 0\n")
    samples = load_xyz_samples(tmp_path)
    assert [s.target for s in samples] == [-0.25, 0.5]
    assert np.allclose(samples[0].cloud.coords, [[-1, 0, 0], [1, 0, 0]])
    (tmp_path / "c.xyz").write_text("1\nno target\nH 0 0 0\n")
    with pytest.raises(DataFormatError, match="c.xyz"):
        load_xyz_samples(tmp_path)


# -- recenter -----------------------------------------------------------------------------

def test_recenter_examples():
    c = recenter(RawPointCloud([[1, 0], [3, 0]], [[1], [1]]))
    assert np.allclose(c.coords, [[-1, 0], [1, 0]])
    rng = np.random.default_rng(1)
    x = rng.normal(size=(30, 3)) * 100 + 50
    once = recenter(RawPointCloud(x, np.ones((30, 1))))
    assert np.max(np.abs(once.coords.mean(axis=0))) < 1e-12
    twice = recenter(once)
    assert np.max(np.abs(twice.coords - once.coords)) < 1e-12


# -- synthetic shells ---------------------------------------------------------------------

def test_shell_value_at_one():
    assert shell_value(1.0) == pytest.approx(np.sin(1) + 0.1)
    assert shell_value(1.0) == pytest.approx(0.9415, abs=1e-4)


def test_synth_targets_are_shell_sums():
    for s in gen_synth_invariant(20, 12, seed=0):
        r = np.linalg.norm(s.cloud.coords, axis=1)
        shells = np.rint(r)
        assert np.all(np.abs(r - shells) < 0.3)
        assert s.target == pytest.approx(shell_value(shells).sum())
        assert np.array_equal(s.cloud.features, np.ones((s.cloud.n_points, 1)))


def test_synth_targets_rotation_invariant():
    rng = np.random.default_rng(2)
    for dim, group in ((2, "SO2"), (3, "SO3")):
        for s in gen_synth_invariant(5, 10, seed=1, dim=dim):
            moved = s.cloud.transformed(random_element(group, rng))
            r = np.rint(np.linalg.norm(moved.coords, axis=1))
            assert shell_value(r).sum() == pytest.approx(s.target)


def test_synth_seeds():
    # 5000 samples keep the std estimate's sampling noise near 1%
    a, b = gen_synth_invariant(5000, 24, 0), gen_synth_invariant(5000, 24, 1)
    assert np.array_equal(gen_synth_invariant(3, 24, 0)[0].cloud.coords, a[0].cloud.coords)
    assert not any(np.array_equal(x.cloud.coords, y.cloud.coords) for x, y in zip(a[:50], b[:50]))
    ta, tb = np.array([s.target for s in a]), np.array([s.target for s in b])
    assert abs(ta.mean() / tb.mean() - 1) < 0.05
    assert abs(ta.std() / tb.std() - 1) < 0.05
    assert abs(np.median(ta) / np.median(tb) - 1) < 0.05


def test_synth_jsonl_round_trip(tmp_path):
    samples = gen_synth_invariant(4, 6, 3)
    p = tmp_path / "s.jsonl"
    write_synth_jsonl(p, samples)
    back = read_synth_jsonl(p)
    assert len(back) == 4
    for x, y in zip(samples, back):
        assert np.array_equal(x.cloud.coords, y.cloud.coords) and x.target == y.target
    p.write_text('{"coords": [[0, 0]], "features": [[1]]}\n')
    with pytest.raises(DataFormatError, match="line 1"):
        read_synth_jsonl(p)
