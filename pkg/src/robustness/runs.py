"""
Loading trained runs and evaluation samples for the evaluation subcommands.
"""

import logging
import os

import numpy as np

from common.errors import DatasetError
from robustness.model import FrozenModel
from tensor import network
from trainer.data import load_task
from trainer.suite import list_runs


logger = logging.getLogger(__name__)


def load_models(root):
    """
    Every trained run under root

    Returns:
        list of (run name, metadata dict, FrozenModel), sorted by name
    """

    directories = list_runs(root)

    if len(directories) == 0:
        raise DatasetError("no trained runs under {}".format(
            os.path.join(root, "runs")))

    models = []

    for d in directories:
        net, _, metadata = network.load_checkpoint(d)
        models.append((os.path.basename(d), metadata, FrozenModel(net)))

    logger.info("loaded %d runs from %s", len(models), root)

    return models


def evaluation_samples(task, split, samples, seed):
    """
    A seeded subset of at most `samples` images of a task split, in their
    original order

    Returns:
        (images [N, H, W], labels [N])
    """

    splits = load_task(task)

    if split not in splits:
        raise DatasetError("{}: no '{}' split".format(task, split))

    data = splits[split]

    if samples >= len(data):
        return data.images, data.labels

    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(data), size=samples, replace=False))

    return data.images[chosen], data.labels[chosen]


def group_by_condition(models):
    """
    Run names grouped by their training condition, in first-seen order
    """

    groups = {}

    for name, metadata, _ in models:
        groups.setdefault(metadata.get("condition", name), []).append(name)

    return groups
