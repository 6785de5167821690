"""Command-line workflows: artifacts, exit codes, determinism, dump formats."""

import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

PKG_ROOT = Path(__file__).resolve().parents[1]


def run_cli(*args, cwd=None):
    env = dict(os.environ, PYTHONPATH=str(PKG_ROOT / "src"))
    return subprocess.run(
        [sys.executable, "-m", "gabornet.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=env,
    )


@pytest.fixture(scope="module")
def scene_files(tmp_path_factory):
    """Small synthetic scene written through the CLI itself."""
    root = tmp_path_factory.mktemp("scene")
    cube = root / "scene.hsic"
    labels = root / "scene.hsil"
    result = run_cli(
        "synth", "--out-cube", cube, "--out-labels", labels,
        "--bands", 6, "--height", 20, "--width", 20, "--classes", 3,
        "--noise", 0.3, "--seed", 5,
    )
    assert result.returncode == 0, result.stderr
    return cube, labels


def write_config(path: Path, cube=None, labels=None, **overrides):
    values = dict(
        mode="gabor", blocks=1, n_theta=2, n_mag=1, kernel_size=3, patch_size=5,
        epochs=2, lr=0.0076, lr_decay=0.995, batch_size=32, seed=1,
        train_per_class=12, augment="false", precision="f64",
    )
    values.update(overrides)
    if cube is not None:
        values["cube_path"] = cube
        values["labels_path"] = labels
    path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()))
    return path


class TestSynth:
    def test_files_load(self, scene_files):
        from gabornet.data import load_cube, load_labels

        cube, labels = scene_files
        c = load_cube(cube)
        g = load_labels(labels)
        assert (c.bands, c.height, c.width) == (6, 20, 20)
        assert g.n_classes == 3
        assert np.bincount(g.labels.ravel(), minlength=4)[1:].min() > 0


class TestParamCount:
    def test_two_block_reference_count(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.cfg", blocks=2, n_theta=4, n_mag=4, kernel_size=5,
            input_bands=103, n_classes=9,
        )
        result = run_cli("param-count", "--config", cfg)
        assert result.returncode == 0, result.stderr
        assert result.stdout.strip() == "16601"

    def test_requires_dims(self, tmp_path):
        cfg = write_config(tmp_path / "c.cfg")
        result = run_cli("param-count", "--config", cfg)
        assert result.returncode == 2
        assert "input_bands" in result.stderr


class TestFreqDump:
    def test_quarter_turn_kills_cos_dc(self, tmp_path):
        out = tmp_path / "freq.csv"
        result = run_cli(
            "freq-dump", "--omega0", math.pi / 2, "--sigma", 5 / 8,
            "--phase", math.pi / 2, "--out", out,
        )
        assert result.returncode == 0, result.stderr
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "omega,sq_mag_cos,sq_mag_sin"
        assert len(lines) == 258
        rows = [tuple(float(v) for v in ln.split(",")) for ln in lines[1:]]
        zero_row = min(rows, key=lambda r: abs(r[0]))
        assert zero_row[0] == 0.0
        assert abs(zero_row[1]) < 1e-12
        assert (tmp_path / "freq.png").exists()

    def test_stdout_mode(self):
        result = run_cli("freq-dump", "--omega0", 1.0, "--sigma", 0.6, "--phase", 0.0,
                         "--samples", 9)
        assert result.returncode == 0
        assert result.stdout.startswith("omega,")
        assert len(result.stdout.strip().split("\n")) == 10

    def test_bad_sigma(self):
        result = run_cli("freq-dump", "--omega0", 1.0, "--sigma", 0, "--phase", 0.0)
        assert result.returncode == 1


class TestTrain:
    def test_artifacts_and_manifest(self, scene_files, tmp_path):
        cube, labels = scene_files
        cfg = write_config(tmp_path / "c.cfg", cube, labels)
        out = tmp_path / "run"
        result = run_cli("train", "--config", cfg, "--out", out)
        assert result.returncode == 0, result.stderr
        manifest = json.loads((out / "manifest.json").read_text())
        for path in manifest["runs"][0]["artifacts"].values():
            assert os.path.exists(path), path
        history = (out / "history.csv").read_text().strip().split("\n")
        assert history[0] == "epoch,loss,train_acc,lr"
        assert len(history) == 1 + 2  # header + one row per epoch
        assert (out / "history.png").exists()
        assert (out / "frequencies_layer1.png").exists()
        metrics = (out / "metrics.txt").read_text()
        assert "overall_accuracy:" in metrics and "confusion_matrix:" in metrics
        assert "parameter_count:" in metrics and "wall_clock_seconds:" in metrics

    def test_unknown_config_key_exits_2(self, scene_files, tmp_path):
        cube, labels = scene_files
        cfg = write_config(tmp_path / "c.cfg", cube, labels)
        cfg.write_text(cfg.read_text() + "lr_rate = 0.01\n")
        result = run_cli("train", "--config", cfg, "--out", tmp_path / "run")
        assert result.returncode == 2
        assert "lr_rate" in result.stderr

    def test_seed_repeat_is_byte_identical(self, scene_files, tmp_path):
        cube, labels = scene_files
        cfg = write_config(tmp_path / "c.cfg", cube, labels)
        r1 = run_cli("train", "--config", cfg, "--out", tmp_path / "a", "--threads", 1)
        r2 = run_cli("train", "--config", cfg, "--out", tmp_path / "b", "--threads", 1)
        assert r1.returncode == 0 and r2.returncode == 0
        assert (tmp_path / "a/history.csv").read_bytes() == (tmp_path / "b/history.csv").read_bytes()

    def test_multi_run_aggregate(self, scene_files, tmp_path):
        cube, labels = scene_files
        cfg = write_config(tmp_path / "c.cfg", cube, labels, epochs=1)
        out = tmp_path / "runs"
        result = run_cli("train", "--config", cfg, "--out", out, "--runs", 2)
        assert result.returncode == 0, result.stderr
        agg = (out / "metrics.txt").read_text()
        assert "mean_accuracy:" in agg and "std_accuracy:" in agg
        assert (out / "run0" / "history.csv").exists()
        assert (out / "run1" / "history.csv").exists()

    def test_missing_dataset_exits_nonzero(self, tmp_path):
        cfg = write_config(tmp_path / "c.cfg", tmp_path / "no.hsic", tmp_path / "no.hsil")
        result = run_cli("train", "--config", cfg, "--out", tmp_path / "run")
        assert result.returncode == 1


@pytest.fixture(scope="module")
def trained_run(scene_files, tmp_path_factory):
    cube, labels = scene_files
    root = tmp_path_factory.mktemp("trained")
    cfg = write_config(root / "c.cfg", cube, labels, epochs=3)
    out = root / "run"
    result = run_cli("train", "--config", cfg, "--out", out)
    assert result.returncode == 0, result.stderr
    return cfg, out / "model"


class TestEvalAndDumps:
    def test_eval_prints_report(self, trained_run):
        cfg, model = trained_run
        result = run_cli("eval", "--model", model, "--config", cfg)
        assert result.returncode == 0, result.stderr
        assert "overall_accuracy:" in result.stdout

    def test_eval_map_out(self, trained_run, tmp_path):
        cfg, model = trained_run
        grid_path = tmp_path / "map.csv"
        result = run_cli("eval", "--model", model, "--config", cfg, "--map-out", grid_path)
        assert result.returncode == 0, result.stderr
        rows = grid_path.read_text().strip().split("\n")
        assert len(rows) == 20
        values = np.array([[int(v) for v in row.split(",")] for row in rows])
        assert values.shape == (20, 20)
        assert values.min() >= 1 and values.max() <= 3

    def test_eval_missing_model(self, trained_run, tmp_path):
        cfg, _ = trained_run
        result = run_cli("eval", "--model", tmp_path / "missing", "--config", cfg)
        assert result.returncode == 1

    def test_untrained_snapshot_near_chance(self, scene_files, tmp_path):
        cube, labels = scene_files
        cfg = write_config(tmp_path / "c.cfg", cube, labels, epochs=0, seed=2)
        out = tmp_path / "run0"
        assert run_cli("train", "--config", cfg, "--out", out).returncode == 0
        result = run_cli("eval", "--model", out / "model", "--config", cfg)
        assert result.returncode == 0, result.stderr
        acc = float(
            [ln for ln in result.stdout.split("\n") if ln.startswith("overall_accuracy")][0]
            .split(":")[1]
        )
        assert acc < 0.75  # 3 balanced-ish classes, untrained net

    def test_kernel_dump_format(self, trained_run, tmp_path):
        cfg, model = trained_run
        out = tmp_path / "k.txt"
        result = run_cli("kernel-dump", "--model", model, "--config", cfg,
                         "--layer", 1, "--out", out)
        assert result.returncode == 0, result.stderr
        records = [b for b in out.read_text().split("\n\n") if b.strip()]
        assert len(records) == 2 * 6  # n_out=2 filters x 6 input bands
        header, *rows = records[0].split("\n")
        assert header.startswith("layer=1 out=0 in=0 theta=")
        assert len(rows) == 3 and all(len(r.split()) == 3 for r in rows)

    def test_kernel_dump_regular_mode_fails(self, scene_files, tmp_path):
        cube, labels = scene_files
        cfg = write_config(tmp_path / "c.cfg", cube, labels, mode="regular", epochs=0)
        out = tmp_path / "runr"
        assert run_cli("train", "--config", cfg, "--out", out).returncode == 0
        result = run_cli("kernel-dump", "--model", out / "model", "--config", cfg, "--layer", 1)
        assert result.returncode == 1
        assert "gabor" in result.stderr


class TestGradCheckCommand:
    def test_tiny_config_passes(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.cfg", blocks=1, n_theta=1, n_mag=1, kernel_size=3,
            patch_size=4, input_bands=2, n_classes=2,
        )
        result = run_cli("grad-check", "--config", cfg)
        assert result.returncode == 0, result.stderr
        lines = [ln for ln in result.stdout.strip().split("\n") if ln.startswith(("PASS", "FAIL"))]
        assert len(lines) == 25  # every learnable scalar reported
        assert all(ln.startswith("PASS") for ln in lines)

    def test_big_config_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "c.cfg", kernel_size=5, input_bands=2, n_classes=2)
        result = run_cli("grad-check", "--config", cfg)
        assert result.returncode == 2
        assert "tiny" in result.stderr
