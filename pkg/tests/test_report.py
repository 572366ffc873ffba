import os

import pytest

import common.view
from common import fileio
from report import report, tables


SUITE = {
    "conditions": [
        {"condition": "vanilla", "runs": 2, "failed": 0,
         "train_accuracy": 0.9, "train_accuracy_sem": 0.01,
         "test_accuracy": 0.8, "test_accuracy_sem": 0.02},
        {"condition": "data", "runs": 0, "failed": 2},
    ],
    "runs": [],
}

GAMMA = [
    {"condition": "neural", "seed": "0", "gamma_a": "0.9", "gamma_b": "0.1",
     "max_gamma": "0.9"},
    {"condition": "neural", "seed": "1", "gamma_a": "0.7", "gamma_b": "0.3",
     "max_gamma": "0.7"},
    {"condition": "vanilla", "seed": "0", "gamma_a": "0.5",
     "gamma_b": "0.5", "max_gamma": "0.5"},
]

NOISE = {
    "conditions": {
        "vanilla": {"sigmas": [0.0, 0.1], "accuracy": [0.9, 0.7],
                    "sem": [0.01, 0.02]},
    },
}

ADVERSARIAL = {
    "conditions": {
        "vanilla": {"l2": {"median": 0.2, "median_sem": 0.01, "mean": 0.25}},
        "neural": {"l2": {"median": 0.3, "median_sem": 0.02, "mean": 0.35},
                   "linf": {"median": 0.05, "mean": 0.06}},
    },
}


def test_accuracy_table_keeps_failed_conditions():
    header, rows = tables.accuracy_table(SUITE)

    assert header[:3] == ["condition", "runs", "failed"]
    assert rows[0] == ["vanilla", 2, 0, 0.9, 0.01, 0.8, 0.02]
    assert rows[1] == ["data", 0, 2, None, None, None, None]


def test_gamma_table_averages_over_seeds():
    header, rows = tables.gamma_table(GAMMA)

    assert header == ["condition", "seeds", "gamma_a", "gamma_b",
                      "max_gamma", "max_gamma_sem", "dominant"]

    neural = rows[0]

    assert neural[:2] == ["neural", 2]
    assert neural[2] == pytest.approx(0.8)
    assert neural[4] == pytest.approx(0.8)
    assert neural[6] == "a"
    assert rows[1][1] == 1

    assert tables.gamma_table([])[1] == []


def test_noise_table():
    _, rows = tables.noise_table(NOISE)

    assert rows == [["vanilla", 0.0, 0.9, 0.01], ["vanilla", 0.1, 0.7, 0.02]]


def test_robustness_table_ratios():
    _, rows = tables.robustness_table(ADVERSARIAL, "vanilla")

    by_key = {(r[0], r[1]): r for r in rows}

    assert by_key[("vanilla", "l2")][5] == pytest.approx(1.0)
    assert by_key[("neural", "l2")][5] == pytest.approx(1.5)
    # the baseline has no linf entry
    assert by_key[("neural", "linf")][5] is None
    assert by_key[("neural", "linf")][3] is None


def test_missing_baseline_is_logged(caplog):
    _, rows = tables.robustness_table(ADVERSARIAL, "shuffle")

    assert all(r[5] is None for r in rows)
    assert "shuffle" in caplog.text


def test_diagnostics_table():
    header, rows = tables.diagnostics_table(
        {"scans": [{"scan": 0, "neurons": 10, "mean_w": 1.2}]})

    assert rows == [[0, 10, 1.2, None, None, None, None]]
    assert len(header) == 7


def write_results(root):
    fileio.write_json(os.path.join(root, "suite.json"), SUITE)
    fileio.write_csv(os.path.join(root, "gamma.csv"), list(GAMMA[0]),
                     [list(r.values()) for r in GAMMA])
    fileio.write_json(os.path.join(root, "noise.json"), NOISE)
    fileio.write_json(os.path.join(root, "adversarial.json"), ADVERSARIAL)


def test_report_writes_tables(tmp_path, capsys):
    root = str(tmp_path)
    write_results(root)

    config = tmp_path / "report.yaml"
    config.write_text("root: {}\ndiagnostics: null\n".format(root))

    assert report.main(["--config", str(config)]) == 0

    for name in ("accuracy", "gamma", "noise", "robustness"):
        assert os.path.exists(os.path.join(root, "report-{}.csv".format(name)))

    document = fileio.read_json(os.path.join(root, "report.json"))

    assert sorted(document) == ["accuracy", "gamma", "noise", "robustness"]
    assert document["accuracy"][0]["condition"] == "vanilla"
    assert os.path.exists(os.path.join(root, "report-config.json"))
    assert "Robustness" in capsys.readouterr().out


def test_report_without_a_suite(tmp_path):
    config = tmp_path / "report.yaml"
    config.write_text("root: {}\n".format(tmp_path))

    assert report.main(["--config", str(config)]) == 2


def test_entity_lists_are_summarized(capsys):
    common.view.print_entity(
        {"Scans": 4, "Stimuli": [1, 2, 3], "Scan std": None},
        title="Target"
    )

    out = capsys.readouterr().out

    assert out.startswith("Target\n======\n")
    assert "[3]" in out
    assert "Scans" in out
