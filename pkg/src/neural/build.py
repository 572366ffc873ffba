#!/usr/bin/env python

import logging
import os
import sys

import numpy as np

import common.cli
import common.view
from common import fileio
from neural.config import SimilarityConfig
from neural.dataset import load_scans
from neural.denoiser import (
    PredictiveModel,
    denoiser_directory,
    model_population,
    similarity_model,
)
from neural.similarity import (
    average_over_scans,
    cka_index,
    common_stimuli,
    fluctuation_stats,
    matrix_correlation,
    similarity_data,
    similarity_oracle,
    trial_similarity,
)
from neural.snr import compute_snr_weights, scale_and_center


logger = logging.getLogger(__name__)


def scan_similarities(ds, model, config):
    """
    Every similarity matrix build-similarity derives from one scan.

    The regularization candidates (model and single-trial data similarity)
    cover the non-oracle stimuli; the oracle stimuli only serve the
    diagnostics comparing them against the oracle similarity.

    Returns:
        dict of SimilarityMatrix / TrialSimilarity plus diagnostic values
    """

    weights = compute_snr_weights(ds, config.eps, config.w_max)

    single = np.flatnonzero(~ds.oracle)
    oracle = np.flatnonzero(ds.oracle)

    result = {
        "model": similarity_model(model, weights, ds.stimuli[single],
                                  ds.stimulus_ids[single], config.eps),
        "data": similarity_data(scale_and_center(
            ds.subset(single), weights, "first", config.eps)),
    }

    trials = trial_similarity(ds, weights, oracle, config.eps)

    result["trials"] = trials
    result["oracle"] = similarity_oracle(ds, weights, trials=trials,
                                         eps=config.eps)

    model_oracle, data_oracle, reference = common_stimuli([
        similarity_model(model, weights, ds.stimuli[oracle],
                         ds.stimulus_ids[oracle], config.eps),
        similarity_data(scale_and_center(
            ds.oracle_subset(), weights, "first", config.eps)),
        result["oracle"],
    ])

    predicted = model_population(model.predict(ds.stimuli[oracle]), weights,
                                 model.correlations, ds.stimulus_ids[oracle])
    measured = ds.trial_means()[oracle] * weights.weights[None, :]

    result["diagnostics"] = {
        "scan": ds.scan,
        "neurons": ds.neurons,
        "mean_w": float(np.mean(weights.weights)),
        "mean_v": float(np.mean(model.correlations)),
        "corr_model_oracle": matrix_correlation(model_oracle, reference),
        "corr_data_oracle": matrix_correlation(data_oracle, reference),
        "cka_model_oracle": cka_index(predicted.scaled, measured),
    }

    return result


@common.cli.entry_point
def main(argv=None):
    """
    Build the neural similarity target (scan-averaged model similarity over
    the non-oracle stimuli), the matching single-trial data similarity and
    the oracle-based diagnostics.
    """

    parser = common.cli.parser(
        "neuralreg build-similarity",
        "Build the neural similarity regularization target",
        SimilarityConfig
    )

    args, config = common.cli.setup(parser, argv, SimilarityConfig)

    datasets, _ = load_scans(config.manifest)

    per_scan = []

    for ds in datasets:
        model = PredictiveModel.load(
            denoiser_directory(config.denoiser_root, ds.scan)
        )
        per_scan.append(scan_similarities(ds, model, config))

    target = average_over_scans(
        common_stimuli([s["model"] for s in per_scan]), "neural-target"
    )
    data = average_over_scans(
        common_stimuli([s["data"] for s in per_scan]), "data"
    )

    target.check().save(os.path.join(config.out, "target"))
    data.check().save(os.path.join(config.out, "data"))

    diagnostics = {
        "scans": [s["diagnostics"] for s in per_scan],
        "target_stimuli": len(target),
    }

    rows = []

    if len(per_scan) >= 2:
        oracle = common_stimuli([s["oracle"] for s in per_scan])

        stats = fluctuation_stats(oracle, [s["trials"] for s in per_scan])

        diagnostics["scan_std"] = stats.scan_std
        diagnostics["repeat_std"] = stats.repeat_std

        rows = [("scan", v) for v in stats.scan] + \
            [("repeat", v) for v in stats.repeat]
    else:
        logger.warning("a single scan: fluctuation statistics skipped")

    fileio.write_csv(os.path.join(config.out, "fluctuations.csv"),
                     ["source", "value"], rows)
    fileio.write_json(os.path.join(config.out, "diagnostics.json"),
                      diagnostics)

    common.cli.record_config(config, config.out, "similarity-config.json")

    common.view.print_entity(
        {
            "Target stimuli": len(target),
            "Scans": len(per_scan),
            "Scan std": diagnostics.get("scan_std"),
            "Repeat std": diagnostics.get("repeat_std"),
        },
        title="Neural similarity target"
    )

    common.view.print_collection(
        "Similarity diagnostics",
        diagnostics["scans"],
        [
            ("Scan", lambda d: d["scan"]),
            ("Mean v", lambda d: d["mean_v"]),
            ("r(model, oracle)", lambda d: d["corr_model_oracle"]),
            ("r(data, oracle)", lambda d: d["corr_data_oracle"]),
            ("CKA", lambda d: d["cka_model_oracle"]),
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
