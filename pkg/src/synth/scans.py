"""
Synthetic multi-trial population responses with known ground truth.

Stimuli are smoothed random images. A population of model neurons reads
fixed random features of the stimuli through a random readout and a
softplus, ρ = softplus(G·φ(x) + b), and every trial adds independent
Gaussian noise. Scans record different subsets of the same population, so
they share tuning but not neurons or noise.
"""

from dataclasses import dataclass
import logging

import numpy as np
import scipy.ndimage

from neural.dataset import ResponseDataset
from tensor import ops


logger = logging.getLogger(__name__)

#
# Seed streams of the generator
#
STREAM_STIMULI = 0
STREAM_TUNING = 1
STREAM_SCANS = 2


@dataclass
class GroundTruth:
    """
    What the generator knows about one scan: per-neuron signal strength
    (standard deviation of the noiseless response over the oracle
    stimuli), noise standard deviation, the noiseless responses [M, A] and
    the population indices of the recorded neurons
    """

    scan: int
    signal: np.ndarray
    noise: np.ndarray
    noiseless: np.ndarray
    units: np.ndarray

    @property
    def snr(self):
        return self.signal / self.noise

    def arrays(self):
        return {
            "signal": self.signal,
            "noise": self.noise,
            "noiseless": self.noiseless,
            "units": self.units,
        }


@dataclass
class Population:
    """
    Stimuli, trial table and the noiseless tuning of the whole model
    population [M, P], plus each neuron's noise-to-signal ratio
    """

    stimuli: np.ndarray
    trial_counts: np.ndarray
    tuning: np.ndarray
    noise_ratio: np.ndarray

    @property
    def oracle(self):
        return self.trial_counts >= 2


def synth_stimuli(count, size, smoothness, rng):
    """
    Smoothed white-noise images rescaled to [0, 1]
    """

    images = rng.standard_normal((count, size, size))

    if smoothness > 0:
        images = scipy.ndimage.gaussian_filter(
            images, (0, smoothness, smoothness), mode="wrap")

    lo = images.min(axis=(1, 2), keepdims=True)
    hi = images.max(axis=(1, 2), keepdims=True)

    return ((images - lo) / np.maximum(hi - lo, 1e-12)).astype(np.float32)


def stimulus_features(stimuli, cfg, rng):
    """
    The fixed feature map φ of the tuning model, z-scored over stimuli.

    "conv" is a bank of random small filters followed by a ReLU and
    average pooling, which a small convolutional encoder can represent.
    "linear" pools the raw pixels. "misspecified" uses larger filters and
    a squaring nonlinearity that the encoder's architecture doesn't share.

    Returns:
        [M, F] array
    """

    x = stimuli[:, None, :, :].astype(np.float64) - 0.5

    if cfg.tuning == "linear":
        maps = x
    else:
        k = cfg.kernel if cfg.tuning == "conv" else 2 * cfg.kernel + 1

        kernels = rng.standard_normal((cfg.features, 1, k, k)) / k

        maps = ops.conv2d(x, kernels).data

        maps = np.maximum(maps, 0.0) if cfg.tuning == "conv" else maps ** 2

    phi = ops.avg_pool2d(maps, cfg.pool).data.reshape(x.shape[0], -1)

    std = phi.std(axis=0)

    return (phi - phi.mean(axis=0)) / np.where(std > 0, std, 1.0)


def synth_population(cfg):
    """
    Draw the stimuli and tune the shared population.

    The first `oracle` stimuli are shown `repeats` times, the others once.

    Returns:
        Population
    """

    stimuli = synth_stimuli(
        cfg.stimuli, cfg.size, cfg.smoothness,
        np.random.default_rng([cfg.seed, STREAM_STIMULI])
    )

    rng = np.random.default_rng([cfg.seed, STREAM_TUNING])

    phi = stimulus_features(stimuli, cfg, rng)

    readout = rng.standard_normal((cfg.population, phi.shape[1]))
    bias = rng.normal(0.0, 0.5, cfg.population)

    drive = phi @ readout.T / np.sqrt(phi.shape[1]) + bias

    tuning = np.logaddexp(0.0, drive)

    noise_ratio = rng.uniform(cfg.noise_min, cfg.noise_max, cfg.population)

    counts = np.ones(cfg.stimuli, dtype=np.int64)
    counts[:cfg.oracle] = cfg.repeats

    return Population(stimuli, counts, tuning, noise_ratio)


def record_scan(population, cfg, scan):
    """
    Record one scan of a population: pick its neurons and add trial noise.

    Returns:
        (ResponseDataset, GroundTruth)
    """

    rng = np.random.default_rng([cfg.seed, STREAM_SCANS, scan])

    units = np.sort(rng.choice(population.tuning.shape[1], cfg.neurons,
                               replace=False))

    noiseless = population.tuning[:, units]

    noise = population.noise_ratio[units] * noiseless.std(axis=0)

    rows = np.repeat(np.arange(noiseless.shape[0]), population.trial_counts)

    responses = noiseless[rows] + \
        rng.standard_normal((rows.shape[0], cfg.neurons)) * noise

    oracle = np.flatnonzero(population.oracle)
    reference = noiseless[oracle] if oracle.shape[0] >= 2 else noiseless

    truth = GroundTruth(scan, reference.std(axis=0), noise, noiseless,
                        units.astype(np.float64))

    ds = ResponseDataset(scan, population.stimuli, responses,
                         population.trial_counts)

    logger.debug("scan %d: median true SNR %.3f", scan,
                 float(np.median(truth.signal / np.maximum(noise, 1e-12))))

    return ds, truth


def synth_scan(cfg, scan=0):
    """
    One synthetic scan and its ground truth, deterministic per seed

    Returns:
        (ResponseDataset, GroundTruth)
    """

    return record_scan(synth_population(cfg), cfg, scan)


def synth_scans(cfg):
    """
    Every scan of a config, recorded from one shared population

    Returns:
        list of (ResponseDataset, GroundTruth)
    """

    population = synth_population(cfg)

    return [record_scan(population, cfg, h) for h in range(cfg.scans)]
