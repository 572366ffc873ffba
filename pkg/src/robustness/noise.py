from dataclasses import dataclass
import logging

import numpy as np

from common.stats import standard_error


logger = logging.getLogger(__name__)


@dataclass
class NoiseCurve:
    """
    Accuracy under additive Gaussian pixel noise, per noise level: the mean
    over seeds, its standard error and the per-seed values [seeds, levels]
    """

    sigmas: np.ndarray
    accuracy: np.ndarray
    sem: np.ndarray
    per_seed: np.ndarray

    def rows(self):
        for s, a, e in zip(self.sigmas, self.accuracy, self.sem):
            yield float(s), float(a), float(e)


def check_sigmas(sigmas):
    sigmas = np.asarray(sigmas, dtype=np.float64)

    if sigmas.ndim != 1 or sigmas.shape[0] == 0:
        raise ValueError("at least one noise level is needed")

    if np.any(sigmas < 0):
        raise ValueError("noise levels must be >= 0")

    if np.any(np.diff(sigmas) <= 0):
        raise ValueError("noise levels must be strictly increasing")

    return sigmas


def noise_eval(model, images, labels, sigmas, seeds=(0,)):
    """
    Accuracy on x + N(0, sigma^2) clipped to [0, 1] for every noise level.

    The noise of (seed, level k) is drawn from its own generator, so the
    curve depends only on the seeds. A zero level evaluates the clean
    images.

    Args:
        model: FrozenModel
        images: [N, H, W] in [0, 1]
        labels: [N]
        sigmas: strictly increasing noise standard deviations
        seeds: noise seeds

    Returns:
        NoiseCurve
    """

    sigmas = check_sigmas(sigmas)
    images = np.asarray(images, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64)

    per_seed = np.zeros((len(seeds), sigmas.shape[0]))

    for i, seed in enumerate(seeds):
        for k, sigma in enumerate(sigmas):
            if sigma == 0:
                noisy = images
            else:
                rng = np.random.default_rng([int(seed), k])
                noisy = np.clip(
                    images + rng.normal(0.0, sigma, images.shape), 0, 1
                ).astype(np.float32)

            per_seed[i, k] = np.mean(model.predict(noisy) == labels)

        logger.debug("noise seed %s: %s", seed, per_seed[i])

    return NoiseCurve(
        sigmas,
        per_seed.mean(axis=0),
        np.asarray(standard_error(per_seed, axis=0)).reshape(-1)
        if len(seeds) > 1 else np.zeros(sigmas.shape[0]),
        per_seed
    )
