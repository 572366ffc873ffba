#!/usr/bin/env python

import os
import sys

import numpy as np

import common.args
import common.cli
import common.view
from common import fileio
from common.stats import standard_error
from robustness.config import NoiseConfig
from robustness.noise import noise_eval
from robustness.runs import evaluation_samples, group_by_condition, load_models


@common.cli.entry_point
def main(argv=None):
    """
    Evaluate every trained run on Gaussian-noise corrupted test images and
    aggregate the accuracy curves per condition across training seeds.
    """

    parser = common.cli.parser(
        "neuralreg eval-noise",
        "Accuracy of trained runs under Gaussian input noise",
        NoiseConfig
    )

    parser.add_argument(
        "--sigmas",
        type=common.args.float_list,
        default=None,
        help="Comma separated noise levels overriding the config's"
    )

    args, config = common.cli.setup(parser, argv, NoiseConfig)

    if args.sigmas is not None:
        config.update({"sigmas": args.sigmas})
        config.validate()

    images, labels = evaluation_samples(config.task, config.split,
                                        config.samples, config.seed)

    models = load_models(config.runs)

    curves = {}
    rows = []

    for name, metadata, model in models:
        curve = noise_eval(model, images, labels, config.sigmas,
                           config.noise_seeds)
        curves[name] = curve

        for sigma, accuracy, sem in curve.rows():
            rows.append([name, metadata.get("condition", name),
                         metadata.get("seed"), sigma, accuracy, sem])

    conditions = {}

    for condition, names in group_by_condition(models).items():
        per_run = np.stack([curves[n].accuracy for n in names])

        conditions[condition] = {
            "runs": names,
            "sigmas": list(config.sigmas),
            "accuracy": per_run.mean(axis=0).tolist(),
            "sem": np.asarray(standard_error(per_run, axis=0)).reshape(-1)
            .tolist() if len(names) > 1 else [0.0] * len(config.sigmas),
        }

    fileio.write_csv(
        os.path.join(config.out, "noise.csv"),
        ["run", "condition", "seed", "sigma", "accuracy", "sem"],
        rows
    )

    fileio.write_json(os.path.join(config.out, "noise.json"), {
        "samples": int(labels.shape[0]),
        "noise_seeds": list(config.noise_seeds),
        "conditions": conditions,
        "runs": {
            n: {"accuracy": c.accuracy.tolist(), "sem": c.sem.tolist()}
            for n, c in curves.items()
        },
    })

    common.cli.record_config(config, config.out, "noise-config.json")

    columns = [("Condition", lambda e: e[0])] + [
        ("sigma={:g}".format(s), lambda e, k=k: e[1]["accuracy"][k])
        for k, s in enumerate(config.sigmas)
    ]

    common.view.print_collection("Accuracy under noise",
                                 list(conditions.items()), columns)


if __name__ == "__main__":
    sys.exit(main())
