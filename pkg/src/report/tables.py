"""
Tables of the report subcommand, built from the documents the train and
evaluation subcommands write. Every function returns (header, rows) so
that the same table is printed and written as CSV.
"""

import logging

import numpy as np

from common.stats import standard_error


logger = logging.getLogger(__name__)


def accuracy_table(suite):
    """
    Final accuracy per training condition, from suite.json
    """

    header = ["condition", "runs", "failed", "train_accuracy",
              "train_accuracy_sem", "test_accuracy", "test_accuracy_sem"]

    rows = [[c["condition"], c["runs"], c["failed"]] +
            [c.get(k) for k in header[3:]]
            for c in suite.get("conditions", [])]

    return header, rows


def gamma_table(gamma_rows):
    """
    Mean final layer weights per condition over seeds, from the rows of
    gamma.csv, with the mean of the largest weight (γ collapse onto one
    layer shows as max_gamma near 1)
    """

    if len(gamma_rows) == 0:
        return ["condition", "seeds", "max_gamma", "max_gamma_sem"], []

    layers = [k for k in gamma_rows[0] if k.startswith("gamma_")]

    grouped = {}

    for row in gamma_rows:
        grouped.setdefault(row["condition"], []).append(row)

    header = ["condition", "seeds"] + layers + ["max_gamma", "max_gamma_sem",
                                                "dominant"]
    rows = []

    for condition, runs in grouped.items():
        values = np.array([[float(r[l]) for l in layers] for r in runs])
        peaks = values.max(axis=1)
        mean = values.mean(axis=0)

        rows.append([condition, len(runs)] + mean.tolist() + [
            float(peaks.mean()),
            standard_error(peaks),
            layers[int(np.argmax(mean))][len("gamma_"):],
        ])

    return header, rows


def noise_table(noise):
    """
    Accuracy under Gaussian noise per condition and noise level, from
    noise.json
    """

    header = ["condition", "sigma", "accuracy", "sem"]
    rows = []

    for condition, entry in noise.get("conditions", {}).items():
        for sigma, accuracy, sem in zip(entry["sigmas"], entry["accuracy"],
                                        entry["sem"]):
            rows.append([condition, sigma, accuracy, sem])

    return header, rows


def robustness_table(adversarial, baseline=None):
    """
    Median minimal perturbation per condition and norm, from
    adversarial.json, with the ratio to the baseline condition's median
    where the baseline was evaluated
    """

    header = ["condition", "norm", "median", "median_sem", "mean",
              "ratio_to_baseline"]
    rows = []

    conditions = adversarial.get("conditions", {})
    reference = conditions.get(baseline, {})

    if baseline is not None and baseline not in conditions and \
       len(conditions) > 0:
        logger.warning("baseline condition '%s' wasn't evaluated", baseline)

    for condition, norms in conditions.items():
        for norm, entry in norms.items():
            base = reference.get(norm, {}).get("median")

            ratio = entry["median"] / base if base else None

            rows.append([condition, norm, entry["median"],
                         entry.get("median_sem"), entry["mean"], ratio])

    return header, rows


def diagnostics_table(diagnostics):
    """
    Per-scan similarity diagnostics, from build-similarity's
    diagnostics.json
    """

    header = ["scan", "neurons", "mean_w", "mean_v", "corr_model_oracle",
              "corr_data_oracle", "cka_model_oracle"]

    rows = [[d.get(k) for k in header] for d in diagnostics.get("scans", [])]

    return header, rows
