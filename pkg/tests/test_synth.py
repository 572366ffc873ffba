import numpy as np
import pytest

from neural.snr import compute_snr_weights
from synth.config import SynthConfig
from synth.scans import synth_scan, synth_scans
from synth.tasks import synth_classification


def test_scans_are_deterministic(synth_config):
    first = synth_scans(synth_config)
    second = synth_scans(synth_config)

    for (a, truth_a), (b, truth_b) in zip(first, second):
        np.testing.assert_array_equal(a.responses, b.responses)
        np.testing.assert_array_equal(a.stimuli, b.stimuli)
        np.testing.assert_array_equal(truth_a.units, truth_b.units)


def test_scans_share_stimuli_but_not_noise(scans):
    (a, _), (b, _) = scans

    np.testing.assert_array_equal(a.stimuli, b.stimuli)
    np.testing.assert_array_equal(a.trial_counts, b.trial_counts)
    assert not np.array_equal(a.responses, b.responses)


def test_single_scan_matches_the_first_of_many(synth_config):
    ds, _ = synth_scan(synth_config, 0)

    np.testing.assert_array_equal(ds.responses,
                                  synth_scans(synth_config)[0][0].responses)


def test_trial_table(scan, synth_config):
    counts = scan.trial_counts

    assert counts.shape[0] == synth_config.stimuli
    assert np.all(counts[:synth_config.oracle] == synth_config.repeats)
    assert np.all(counts[synth_config.oracle:] == 1)
    assert scan.neurons == synth_config.neurons
    assert scan.stimuli.min() >= 0 and scan.stimuli.max() <= 1


def test_noise_free_trials_are_identical(make_synth):
    ds, _ = synth_scan(make_synth(noise_min=0.0, noise_max=0.0))

    for i in np.flatnonzero(ds.oracle):
        trials = ds.trials(i)
        np.testing.assert_array_equal(trials, trials[:1].repeat(
            trials.shape[0], axis=0))


@pytest.mark.parametrize("tuning", ["linear", "conv", "misspecified"])
def test_trial_variance_matches_the_noise_level(make_synth, tuning):
    ds, truth = synth_scan(make_synth(
        tuning=tuning, population=60, neurons=60, stimuli=100, oracle=100,
        repeats=10))

    variance = np.mean([ds.trials(i).astype(np.float64).var(axis=0, ddof=1)
                        for i in range(100)], axis=0)

    ratio = variance / truth.noise ** 2

    assert np.median(np.abs(ratio - 1)) < 0.2


def test_snr_estimates_recover_the_ground_truth(make_synth):
    ds, truth = synth_scan(make_synth(
        population=200, neurons=200, stimuli=100, oracle=100, repeats=10,
        noise_min=0.2, noise_max=0.5))

    w = compute_snr_weights(ds)

    within = np.abs(w.weights / truth.snr - 1) <= 0.15

    assert np.mean(within) >= 0.9


def test_snr_estimates_converge_at_the_default_noise(make_synth):
    defaults = SynthConfig()
    repeats = 10

    ds, truth = synth_scan(make_synth(
        population=200, neurons=200, stimuli=100, oracle=100,
        repeats=repeats, noise_min=defaults.noise_min,
        noise_max=defaults.noise_max))

    w = compute_snr_weights(ds)

    #
    # Trial means keep 1/T of the noise variance, and the 1/T trial
    # variance keeps (T - 1)/T of it
    #
    expected = np.sqrt(truth.signal ** 2 + truth.noise ** 2 / repeats) / \
        (truth.noise * np.sqrt((repeats - 1) / repeats))

    within = np.abs(w.weights / expected - 1) <= 0.15

    assert np.mean(within) >= 0.9


def test_classification_set():
    data = synth_classification(classes=4, per_class=10, size=12, seed=0)

    assert len(data) == 40
    assert data.images.shape == (40, 12, 12)
    assert data.input_shape == (1, 12, 12)
    assert np.bincount(data.labels).tolist() == [10, 10, 10, 10]
    assert data.images.min() >= 0 and data.images.max() <= 1

    again = synth_classification(classes=4, per_class=10, size=12, seed=0)
    np.testing.assert_array_equal(data.images, again.images)


def _spectrum(images):
    power = np.abs(np.fft.fft2(images - images.mean(axis=(1, 2),
                                                     keepdims=True))) ** 2
    power = np.log1p(power).reshape(images.shape[0], -1)

    return power / np.linalg.norm(power, axis=1, keepdims=True)


def test_orientation_is_learnable():
    train = synth_classification(classes=4, per_class=64, size=16, seed=1)
    test = synth_classification(classes=4, per_class=32, size=16, seed=2)

    x = _spectrum(train.images)
    centroids = np.stack([x[train.labels == k].mean(axis=0)
                          for k in range(4)])

    predicted = np.argmax(_spectrum(test.images) @ centroids.T, axis=1)

    assert np.mean(predicted == test.labels) > 0.4
