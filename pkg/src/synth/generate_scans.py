#!/usr/bin/env python

import sys

import numpy as np

import common.cli
import common.view
from common import manifest
from synth.config import SynthConfig
from synth.scans import synth_scans


@common.cli.entry_point
def main(argv=None):
    """
    Generate synthetic multi-trial scans and write them as a scans
    manifest with the ground truth of every scan.
    """

    parser = common.cli.parser(
        "neuralreg synth-data",
        "Generate synthetic neural scans with known ground truth",
        SynthConfig
    )

    args, config = common.cli.setup(parser, argv, SynthConfig)

    scans = synth_scans(config)

    stimuli = scans[0][0].stimuli
    counts = scans[0][0].trial_counts

    manifest.write_scans(
        config.out,
        stimuli,
        counts,
        [(ds.scan, ds.responses) for ds, _ in scans],
        seed=config.seed,
        ground_truth={truth.scan: truth.arrays() for _, truth in scans}
    )

    common.cli.record_config(config, config.out, "synth-config.json")

    common.view.print_collection(
        "Synthetic scans",
        scans,
        [
            ("Scan", lambda s: s[0].scan),
            ("Neurons", lambda s: s[0].neurons),
            ("Trials", lambda s: s[0].responses.shape[0]),
            ("Median SNR", lambda s: float(np.median(
                s[1].signal / np.maximum(s[1].noise, 1e-12)))),
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
