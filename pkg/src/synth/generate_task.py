#!/usr/bin/env python

import sys

import numpy as np

import common.cli
import common.view
from common import manifest
from synth.config import TaskConfig
from synth.tasks import synth_classification


@common.cli.entry_point
def main(argv=None):
    """
    Generate the synthetic orientation classification task (train and test
    splits drawn from separate seed streams).
    """

    parser = common.cli.parser(
        "neuralreg synth-task",
        "Generate the synthetic classification task",
        TaskConfig
    )

    args, config = common.cli.setup(parser, argv, TaskConfig)

    splits = {
        "train": synth_classification(config.classes, config.train_per_class,
                                      config.size, [config.seed, 0]),
        "test": synth_classification(config.classes, config.test_per_class,
                                     config.size, [config.seed, 1]),
    }

    manifest.write_classification(
        config.out,
        {name: (s.images, s.labels) for name, s in splits.items()},
        config.classes,
        seed=config.seed
    )

    common.cli.record_config(config, config.out, "task-config.json")

    common.view.print_collection(
        "Synthetic task",
        list(splits.items()),
        [
            ("Split", lambda e: e[0]),
            ("Images", lambda e: len(e[1])),
            ("Classes", lambda e: e[1].classes),
            ("Per class", lambda e: int(np.bincount(e[1].labels).min())),
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
