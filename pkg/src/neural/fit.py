#!/usr/bin/env python

import os
import sys

import numpy as np

import common.cli
import common.view
from common import fileio
from neural.config import DenoiserConfig
from neural.dataset import load_scans
from neural.denoiser import denoiser_directory, fit_denoiser
from neural.snr import compute_snr_weights


@common.cli.entry_point
def main(argv=None):
    """
    Fit one denoiser per scan of a scans manifest and store it together
    with the scan's SNR weights and validation correlations.
    """

    parser = common.cli.parser(
        "neuralreg fit-denoiser",
        "Fit predictive models that denoise single-trial responses",
        DenoiserConfig
    )

    args, config = common.cli.setup(parser, argv, DenoiserConfig)

    datasets, _ = load_scans(config.manifest)

    if config.scans is not None:
        datasets = [ds for ds in datasets if ds.scan in config.scans]

    summary = []

    for ds in datasets:
        model = fit_denoiser(ds, config)
        weights = compute_snr_weights(ds, config.eps, config.w_max)

        directory = denoiser_directory(config.out, ds.scan)

        model.save(directory)

        #
        # The weights and correlations are also stored as plain tensors so
        # that they can be read without the network
        #
        fileio.write_tensor(os.path.join(directory, "weights.nrtb"),
                            weights.weights)
        fileio.write_tensor(os.path.join(directory, "correlations.nrtb"),
                            model.correlations)

        summary.append({
            "scan": ds.scan,
            "neurons": ds.neurons,
            "mean_v": float(np.mean(model.correlations)),
            "mean_w": float(np.mean(weights.weights)),
        })

    common.cli.record_config(config, config.out, "denoiser-config.json")

    common.view.print_collection(
        "Denoisers",
        summary,
        [
            ("Scan", lambda s: s["scan"]),
            ("Neurons", lambda s: s["neurons"]),
            ("Mean v", lambda s: s["mean_v"]),
            ("Mean w", lambda s: s["mean_w"]),
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
