#!/usr/bin/env python

import logging
import os
import sys

import common.args
import common.cli
import common.view
from common.errors import DatasetError, NeuralRegError
from neural.similarity import SimilarityMatrix
from trainer.config import PRESETS, TrainConfig
from trainer.data import load_stimuli, load_task
from trainer.suite import train_suite, write_suite


logger = logging.getLogger(__name__)


def load_targets(config, runs, shape):
    """
    The similarity targets and matching stimulus sets the runs need

    Returns:
        (targets, stimuli), both dicts keyed by "neural" / "data"
    """

    targets = {}
    stimuli = {}

    kinds = set(
        "data" if r.target_kind == "data" else "neural"
        for r in runs if r.alpha > 0
    )

    paths = {"neural": config.target, "data": config.data_target}

    for kind in sorted(kinds):
        targets[kind] = SimilarityMatrix.load(paths[kind])
        stimuli[kind] = load_stimuli(config.stimuli, targets[kind], shape)

    return targets, stimuli


@common.cli.entry_point
def main(argv=None):
    """
    Train the classifier under every configured condition and seed, with
    the neural similarity penalty (or a control) in the loss.
    """

    parser = common.cli.parser(
        "neuralreg train",
        "Train classifiers with neural similarity regularization",
        TrainConfig
    )

    parser.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        default=None,
        help="Apply a named set of schedule and condition settings on top "
             "of the config file"
    )

    parser.add_argument(
        "--seeds",
        type=common.args.int_list,
        default=None,
        help="Comma separated training seeds overriding the config's"
    )

    args, config = common.cli.setup(parser, argv, TrainConfig)

    if args.preset is not None:
        config.apply_preset(args.preset)

        if args.seed is not None:
            config.update({"seed": args.seed, "seeds": [args.seed]})

        config.validate()

    if args.seeds is not None:
        config.update({"seeds": args.seeds})
        config.validate()

    splits = load_task(config.task)

    if "train" not in splits:
        raise DatasetError("{}: no 'train' split".format(config.task))

    train = splits["train"]
    test = splits.get("test")

    runs = config.runs()

    targets, stimuli = load_targets(config, runs, train.images.shape[1:])

    results = train_suite(runs, config.run_seeds(), train, stimuli, targets,
                          test)

    statistics = write_suite(results, runs, config.out)

    common.cli.record_config(config, config.out, "train-config.json")

    common.view.print_collection(
        "Training suite",
        statistics,
        [
            ("Condition", lambda s: s["condition"]),
            ("Runs", lambda s: s["runs"]),
            ("Failed", lambda s: s["failed"]),
            ("Test acc", lambda s: s.get("test_accuracy")),
            ("SEM", lambda s: s.get("test_accuracy_sem")),
            ("Max gamma", lambda s: max(s["gamma"]) if "gamma" in s
             else None),
        ]
    )

    if not any(r.ok for r in results):
        raise NeuralRegError("every training run failed")

    logger.info("suite written to %s", os.path.abspath(config.out))


if __name__ == "__main__":
    sys.exit(main())
