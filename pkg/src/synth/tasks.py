"""
A synthetic orientation classification task standing in for a natural
image benchmark.
"""

import logging

import numpy as np

from trainer.data import ClassificationSet


logger = logging.getLogger(__name__)

#
# Pixel noise added on top of every pattern
#
PIXEL_NOISE = 0.05


def _grating(coords, theta, rng):
    """
    A sinusoidal grating across direction theta
    """

    u = coords[0] * np.cos(theta) + coords[1] * np.sin(theta)
    frequency = rng.uniform(1.5, 3.5)
    phase = rng.uniform(0, 2 * np.pi)

    return 0.5 + 0.5 * np.sin(2 * np.pi * frequency * u + phase)


def _bar(coords, theta, rng):
    """
    A soft bar along direction theta through a random offset point
    """

    offset = rng.uniform(-0.25, 0.25, 2)
    width = rng.uniform(0.06, 0.15)

    x, y = coords[0] - offset[0], coords[1] - offset[1]

    # distance to the bar's axis
    d = -x * np.sin(theta) + y * np.cos(theta)

    return np.exp(-0.5 * (d / width) ** 2)


def oriented_pattern(size, theta, rng):
    """
    One [size, size] image in [0, 1] whose dominant orientation is theta:
    a grating or a bar at random contrast, plus pixel noise
    """

    grid = (np.arange(size) + 0.5) / size - 0.5
    coords = np.meshgrid(grid, grid, indexing="xy")

    pattern = _grating(coords, theta, rng) if rng.random() < 0.5 else \
        _bar(coords, theta, rng)

    contrast = rng.uniform(0.5, 1.0)
    background = rng.uniform(0.0, 1.0 - contrast)

    image = background + contrast * pattern + \
        rng.normal(0.0, PIXEL_NOISE, (size, size))

    return np.clip(image, 0.0, 1.0)


def synth_classification(classes, per_class, size, seed):
    """
    Balanced oriented-pattern images labeled by orientation bin.

    Class k covers orientations [k·π/classes, (k+1)·π/classes). The images
    are returned in a seeded random order.

    Args:
        classes: number of orientation bins, >= 2
        per_class: images per class
        size: image side length
        seed: generator seed

    Returns:
        ClassificationSet
    """

    rng = np.random.default_rng(seed)

    labels = np.repeat(np.arange(classes), per_class)

    thetas = (labels + rng.random(labels.shape[0])) * np.pi / classes

    images = np.stack([oriented_pattern(size, t, rng) for t in thetas]) \
        if labels.shape[0] > 0 else np.zeros((0, size, size))

    order = rng.permutation(labels.shape[0])

    logger.debug("%d images of size %d in %d classes", labels.shape[0],
                 size, classes)

    return ClassificationSet(images[order].astype(np.float32),
                             labels[order].astype(np.int64), classes)
