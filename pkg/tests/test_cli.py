import os

import numpy as np
import pytest
import yaml

import neuralreg
from common import fileio, manifest
from neural.dataset import load_scans
from neural.snr import compute_snr_weights


def write_config(directory, name, settings):
    path = os.path.join(str(directory), name)

    with open(path, "w") as f:
        yaml.safe_dump(settings, f)

    return path


SYNTH = dict(scans=2, population=40, neurons=24, stimuli=40, oracle=12,
             repeats=4, size=8, features=4, pool=4)


def test_no_arguments(capsys):
    assert neuralreg.cli_dispatch([]) == 1
    assert "usage" in capsys.readouterr().err


def test_help(capsys):
    assert neuralreg.cli_dispatch(["--help"]) == 0
    assert "synth-data" in capsys.readouterr().out


def test_unknown_subcommand(capsys):
    assert neuralreg.cli_dispatch(["frobnicate"]) == 1
    assert "frobnicate" in capsys.readouterr().err


def test_bad_flag():
    assert neuralreg.cli_dispatch(["synth-data", "--bogus"]) == 1


def test_invalid_config_value(tmp_path):
    path = write_config(tmp_path, "synth.yaml", dict(SYNTH, repeats=1))

    assert neuralreg.cli_dispatch(["synth-data", "--config", path]) == 1


def test_missing_config_file(tmp_path):
    path = str(tmp_path / "absent.yaml")

    assert neuralreg.cli_dispatch(["synth-data", "--config", path]) == 2


def test_json_config_with_exponent_floats(tmp_path, capsys):
    path = tmp_path / "train.json"
    path.write_text('{"epochs": 1, "clamp": 1e-6, "task": "%s"}'
                    % (tmp_path / "absent.json"))

    # past config loading, stopped by the missing task
    assert neuralreg.cli_dispatch(["train", "--config", str(path)]) == 2
    assert "usage" not in capsys.readouterr().err


def test_missing_manifest(tmp_path):
    path = write_config(tmp_path, "denoiser.yaml", {
        "manifest": str(tmp_path / "absent.json"), "out": str(tmp_path)})

    assert neuralreg.cli_dispatch(["fit-denoiser", "--config", path]) == 2


def test_synth_data(tmp_path):
    out = str(tmp_path / "data")
    path = write_config(tmp_path, "synth.yaml", SYNTH)

    assert neuralreg.cli_dispatch(
        ["synth-data", "--config", path, "--out", out, "--seed", "5"]) == 0

    datasets, m = load_scans(os.path.join(out, "manifest.json"))

    assert len(datasets) == 2
    assert datasets[0].neurons == 24
    assert m["seed"] == 5
    assert fileio.read_json(os.path.join(out, "synth-config.json"))["seed"] \
        == 5


def test_synth_data_is_reproducible(tmp_path):
    path = write_config(tmp_path, "synth.yaml", SYNTH)

    for name in ("a", "b"):
        assert neuralreg.cli_dispatch(
            ["synth-data", "--config", path,
             "--out", str(tmp_path / name)]) == 0

    # the recorded configs name their output directory
    files = [f for f in sorted(os.listdir(str(tmp_path / "a")))
             if not f.endswith("-config.json")]

    assert "manifest.json" in files

    for f in files:
        with open(str(tmp_path / "a" / f), "rb") as a, \
             open(str(tmp_path / "b" / f), "rb") as b:
            assert a.read() == b.read(), f


def test_fit_denoiser_uses_the_configured_weights(tmp_path):
    data = str(tmp_path / "data")
    path = write_config(tmp_path, "synth.yaml", SYNTH)
    assert neuralreg.cli_dispatch(
        ["synth-data", "--config", path, "--out", data]) == 0

    path = write_config(tmp_path, "denoiser.yaml", {
        "manifest": os.path.join(data, "manifest.json"), "out": data,
        "encoder": "none", "scans": [0], "w_max": 0.5})
    assert neuralreg.cli_dispatch(["fit-denoiser", "--config", path]) == 0

    datasets, _ = load_scans(os.path.join(data, "manifest.json"))
    expected = compute_snr_weights(datasets[0], w_max=0.5).weights
    written = fileio.read_tensor(os.path.join(data, "denoiser-0",
                                              "weights.nrtb"))

    assert written.max() <= 0.5
    np.testing.assert_array_equal(written, expected.astype(np.float32))


def test_synth_task(tmp_path):
    out = str(tmp_path)
    path = write_config(tmp_path, "task.yaml", {
        "classes": 3, "train_per_class": 4, "test_per_class": 2, "size": 8})

    assert neuralreg.cli_dispatch(
        ["synth-task", "--config", path, "--out", out]) == 0

    m = manifest.read_classification(os.path.join(out, "task.json"))
    images, labels = m["splits"]["train"]

    assert images.shape == (12, 8, 8)
    assert np.bincount(labels).tolist() == [4, 4, 4]


def run_pipeline(directory):
    """
    Every subcommand in order on a small synthetic problem

    Returns:
        (data directory, runs directory)
    """

    os.makedirs(str(directory), exist_ok=True)

    data = os.path.join(str(directory), "data")
    runs = os.path.join(str(directory), "runs")

    def run(subcommand, settings, *extra):
        path = write_config(directory, subcommand + ".yaml", settings)
        assert neuralreg.cli_dispatch(
            [subcommand, "--config", path] + list(extra)) == 0

    evaluation = {"task": os.path.join(data, "task.json"), "runs": runs,
                  "out": runs}

    run("synth-data", dict(SYNTH, out=data))
    run("synth-task", {"out": data, "classes": 3, "train_per_class": 8,
                       "test_per_class": 4, "size": 8})
    run("fit-denoiser", {"manifest": os.path.join(data, "manifest.json"),
                         "out": data, "encoder": "none"})
    run("build-similarity", {"manifest": os.path.join(data, "manifest.json"),
                             "out": data})
    run("train", {
        "task": os.path.join(data, "task.json"),
        "stimuli": os.path.join(data, "manifest.json"),
        "target": os.path.join(data, "target"),
        "data_target": os.path.join(data, "data"),
        "out": runs,
        "epochs": 1,
        "batch_size": 8,
        "widths": [4],
        "conditions": [
            {"name": "vanilla", "alpha": 0.0},
            {"name": "neural", "alpha": 4.0, "target": "neural"},
            {"name": "shuffle", "alpha": 4.0, "target": "shuffle"},
        ],
    }, "--seeds", "0,1")
    run("eval-noise", dict(evaluation, samples=12, noise_seeds=[0]),
        "--sigmas", "0,0.2")
    run("eval-adversarial", dict(
        evaluation, samples=4, pgd_steps=[0.05], pgd_iterations=[5],
        linf_rounds=4, boundary_steps=[0.1], queries=30,
        checkpoints=[10, 30]))
    run("report", {"root": runs,
                   "diagnostics": os.path.join(data, "diagnostics.json")})

    return data, runs


@pytest.mark.slow
def test_pipeline(tmp_path):
    data, runs = run_pipeline(tmp_path)

    target = fileio.read_json(os.path.join(data, "target.json"))

    assert target["kind"] == "neural-target"
    assert len(target["stimulus_ids"]) <= SYNTH["stimuli"] - SYNTH["oracle"]

    suite = fileio.read_json(os.path.join(runs, "suite.json"))

    assert [c["runs"] for c in suite["conditions"]] == [2, 2, 2]

    noise = fileio.read_json(os.path.join(runs, "noise.json"))

    assert noise["conditions"]["neural"]["sigmas"] == [0.0, 0.2]

    adversarial = fileio.read_json(os.path.join(runs, "adversarial.json"))

    assert set(adversarial["conditions"]["vanilla"]) == {"linf", "l2"}

    report = fileio.read_json(os.path.join(runs, "report.json"))

    assert sorted(report) == ["accuracy", "gamma", "noise", "robustness",
                              "similarity"]


@pytest.mark.slow
def test_pipeline_reports_are_bit_identical(tmp_path):
    outputs = [run_pipeline(tmp_path / name)[1] for name in ("a", "b")]

    for name in ("report.json", "noise.json", "adversarial.json",
                 "noise.csv", "adversarial.csv"):
        with open(os.path.join(outputs[0], name), "rb") as a, \
             open(os.path.join(outputs[1], name), "rb") as b:
            assert a.read() == b.read(), name
