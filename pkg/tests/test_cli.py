import json
import subprocess
import sys

import pytest

from gigp.harness.cli import main

TINY_CFG = """\
task = synth_invariant
channels = 6
blocks = 1
nbhd = 5
kernel_hidden = 8
anchors = 4
phi_hidden = 8
epochs = 2
batch_size = 16
n_train = 40
n_val = 10
n_test = 10
n_points = 10
"""


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    cfg = d / "tiny.cfg"
    cfg.write_text(TINY_CFG)
    assert main(["train", "--config", str(cfg), "--seed", "2", "--out", str(d / "out")]) == 0
    return d / "out"


def test_train_writes_run_directory(trained):
    for name in ("metrics.jsonl", "checkpoint.gigp", "config.txt", "summary.json", "timing.jsonl"):
        assert (trained / name).exists()
    recs = [json.loads(x) for x in (trained / "metrics.jsonl").read_text().splitlines()]
    assert [r["seed"] for r in recs] == [2, 2, 2]


def test_gen_synth_then_eval(trained, tmp_path, capsys):
    data = tmp_path / "synth.jsonl"
    assert main(["gen-synth", "--out", str(data), "--n-samples", "12", "--n-points", "8", "--seed", "5"]) == 0
    assert len(data.read_text().splitlines()) == 12
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(trained / "checkpoint.gigp"), "--data", str(data)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 12 and out["mse"] >= 0


def test_check_invariance(trained, capsys):
    assert main(["check-invariance", "--checkpoint", str(trained / "checkpoint.gigp"), "--n-transforms", "3",
                 "--n-samples", "4"]) == 0
    assert "invariance check: PASS" in capsys.readouterr().out


def test_eval_on_idx_digits(tmp_path, digits_idx, capsys):
    images, labels = digits_idx
    cfg = tmp_path / "d.cfg"
    cfg.write_text(f"task = rot_digits\nchannels = 4\nblocks = 1\nnbhd = 4\nkernel_hidden = 4\nanchors = 2\n"
                   f"phi_hidden = 4\nepochs = 1\nn_train = 20\nn_val = 10\nn_test = 10\nmax_points = 16\n"
                   f"idx_images = {images}\nidx_labels = {labels}\n")
    out = tmp_path / "o"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    # labels path is guessed from the images file name
    assert main(["eval", "--checkpoint", str(out / "checkpoint.gigp"), "--data", str(images)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["n"] == 5000 and 0 <= res["error_pct"] <= 100


def test_grad_check_cli(capsys):
    assert main(["grad-check", "--tol", "1e-4"]) == 0
    out = capsys.readouterr().out
    assert "grad check: PASS" in out
    assert "end_to_end[SO2]/gigp.alpha" in out and "end_to_end[SO3]/gigp.anchors" in out


def test_check_expressivity_cli(capsys):
    assert main(["check-expressivity", "--max-elems", "4", "--format", "kv"]) == 0
    kv = dict(line.split("=") for line in capsys.readouterr().out.splitlines())
    assert kv["passed"] == "true" and kv["collisions"] == "0"


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("channels = 4\nwidth = 3\n")
    assert main(["train", "--config", str(cfg)]) == 2
    assert "unknown key 'width'" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert main(["eval", "--checkpoint", str(tmp_path / "nope.gigp"), "--data", "x.jsonl"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "gigp", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("train", "eval", "check-invariance", "grad-check", "check-expressivity", "gen-synth"):
        assert cmd in r.stdout
