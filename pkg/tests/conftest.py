import logging
import os

import hypothesis
import numpy as np
import pytest

from synth.config import SynthConfig
from synth.scans import synth_scans
from synth.tasks import synth_classification
from tensor import network


np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200,
                                     deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture(autouse=True)
def restore_logging():
    """
    Subcommands reconfigure the root logger; undo that after every test
    """

    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level

    yield

    root.handlers[:] = handlers
    root.setLevel(level)


def small_synth(**overrides):
    """
    A synthetic scan config small enough for unit tests
    """

    settings = dict(scans=2, population=40, neurons=24, stimuli=40, oracle=12,
                    repeats=4, size=8, features=4, pool=4, noise_min=0.5,
                    noise_max=1.0, seed=3)
    settings.update(overrides)

    return SynthConfig(**settings)


@pytest.fixture
def make_synth():
    return small_synth


@pytest.fixture
def synth_config():
    return small_synth()


@pytest.fixture
def scans(synth_config):
    return synth_scans(synth_config)


@pytest.fixture
def scan(scans):
    return scans[0][0]


@pytest.fixture
def task():
    return synth_classification(classes=3, per_class=8, size=8, seed=5)


@pytest.fixture
def classifier():
    net = network.residual_classifier((1, 8, 8), 3, widths=(4, 6), kernel=3)
    net.initialize(np.random.default_rng(0))
    return net
