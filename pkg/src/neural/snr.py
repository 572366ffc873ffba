"""
Signal-to-noise weighting of neurons and the centered unit vectors of the
weighted population responses.
"""

from dataclasses import dataclass
import logging

import numpy as np

from common.errors import DatasetError


logger = logging.getLogger(__name__)

#
# Weight given to a neuron with signal but no measurable trial noise
#
W_MAX = 1e3

EPS = 1e-8


@dataclass
class SnrWeights:
    """
    Per-neuron signal strength sigma_a, noise strength eta_a and weight w_a
    """

    signal: np.ndarray
    noise: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.weights.shape[0]


@dataclass
class ScaledPopulation:
    """
    Scaled responses r_i = w * rho_i, their mean over all stimuli and the
    centered unit vectors e_i. Rows of `units` are NaN where `valid` is
    False (the centered response vanished).
    """

    scaled: np.ndarray
    mean: np.ndarray
    units: np.ndarray
    valid: np.ndarray
    stimulus_ids: np.ndarray


def compute_snr_weights(ds, eps=EPS, w_max=W_MAX):
    """
    Estimate w_a = sigma_a / eta_a from the oracle stimuli of a dataset.

    sigma_a^2 is the variance over oracle stimuli of the trial-mean
    response, eta_a^2 the mean over oracle stimuli of the variance over
    trials; both use the population (1/N) divisor. A neuron with neither
    signal nor noise gets weight 0, one with signal but no noise gets
    w_max.

    Args:
        ds: ResponseDataset
        eps: strengths below eps count as zero
        w_max: cap for noise-free neurons

    Returns:
        SnrWeights
    """

    oracle = np.flatnonzero(ds.oracle)

    if oracle.shape[0] < 2:
        raise DatasetError(
            "scan {}: SNR weights need at least 2 oracle stimuli, found {}"
            .format(ds.scan, oracle.shape[0])
        )

    means = np.empty((oracle.shape[0], ds.neurons))
    variances = np.empty((oracle.shape[0], ds.neurons))

    for row, i in enumerate(oracle):
        trials = ds.trials(i).astype(np.float64)
        means[row] = trials.mean(axis=0)
        variances[row] = trials.var(axis=0)

    signal = np.sqrt(means.var(axis=0))
    noise = np.sqrt(variances.mean(axis=0))

    weights = np.zeros(ds.neurons)

    noisy = noise >= eps
    weights[noisy] = signal[noisy] / noise[noisy]
    weights[~noisy & (signal >= eps)] = w_max

    logger.debug("scan %d: %d neurons capped at w_max, %d zero-weighted",
                 ds.scan, int(np.sum(~noisy & (signal >= eps))),
                 int(np.sum(weights == 0)))

    return SnrWeights(signal, noise, weights)


def center_units(responses, eps=EPS):
    """
    Center population vectors on their mean and normalize them.

    A vector is degenerate when its centered norm is below eps times the
    largest centered norm (or everything vanishes), which keeps the test
    invariant to rescaling the responses.

    Args:
        responses: [n, A] population vectors

    Returns:
        (mean [A], units [n, A] with NaN rows for degenerate vectors,
         valid [n] bool)
    """

    responses = np.asarray(responses, dtype=np.float64)

    mean = responses.mean(axis=0)
    centered = responses - mean
    norms = np.linalg.norm(centered, axis=1)

    largest = norms.max() if norms.shape[0] > 0 else 0.0

    valid = norms > eps * largest if largest > 0 else \
        np.zeros(norms.shape[0], dtype=bool)

    units = np.full(centered.shape, np.nan)
    units[valid] = centered[valid] / norms[valid, None]

    return mean, units, valid


def scale_and_center(ds, weights, responses="first", eps=EPS):
    """
    Build the scaled population of a dataset.

    Args:
        ds: ResponseDataset
        weights: SnrWeights computed for the same neurons
        responses: "first" to use one trial per stimulus (single-trial
                   data), "mean" to use the trial mean
        eps: degeneracy threshold (see center_units)

    Returns:
        ScaledPopulation
    """

    if len(weights) != ds.neurons:
        raise DatasetError(
            "scan {}: {} weights for {} neurons".format(
                ds.scan, len(weights), ds.neurons)
        )

    if responses == "first":
        rho = ds.first_trials()
    elif responses == "mean":
        rho = ds.trial_means()
    else:
        raise ValueError("responses must be 'first' or 'mean'")

    scaled = rho * weights.weights[None, :]

    mean, units, valid = center_units(scaled, eps)

    if not np.all(valid):
        logger.warning("scan %d: %d degenerate stimuli excluded",
                       ds.scan, int(np.sum(~valid)))

    return ScaledPopulation(scaled, mean, units, valid, ds.stimulus_ids)
