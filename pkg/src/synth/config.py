import common.config


TUNINGS = ("linear", "conv", "misspecified")


class SynthConfig(common.config.Config):
    """
    Settings of the synthetic scan generator.

    A shared population of `population` model neurons is tuned to the
    stimuli once; every scan records `neurons` of them with its own trial
    noise. Noise strengths are drawn per neuron as a multiple of the
    neuron's signal standard deviation, uniformly in
    [noise_min, noise_max].
    """

    def defaults(self):
        return {
            "out": "data",
            "scans": 4,
            "population": 400,
            "neurons": 200,
            "stimuli": 300,
            "oracle": 100,
            "repeats": 10,
            "size": 16,
            "smoothness": 1.5,
            "tuning": "conv",
            "features": 8,
            "kernel": 3,
            "pool": 4,
            "noise_min": 0.5,
            "noise_max": 2.0,
            "seed": 0,
        }

    def validate(self):
        super(SynthConfig, self).validate()

        self.require(self.scans >= 1, "scans", "must be >= 1")
        self.require(self.neurons >= 1, "neurons", "must be >= 1")
        self.require(self.population >= self.neurons, "population",
                     "must be >= neurons")
        self.require(self.stimuli >= 2, "stimuli", "must be >= 2")
        self.require(0 <= self.oracle <= self.stimuli, "oracle",
                     "must be in [0, stimuli]")
        self.require(self.repeats >= 2, "repeats",
                     "oracle stimuli need at least 2 trials")
        self.require(self.size >= 1, "size", "must be >= 1")
        self.require(self.smoothness >= 0, "smoothness", "must be >= 0")
        self.require(self.tuning in TUNINGS, "tuning",
                     "must be one of {}".format(", ".join(TUNINGS)))
        self.require(self.features >= 1, "features", "must be >= 1")
        self.require(self.kernel >= 1 and self.kernel % 2 == 1, "kernel",
                     "must be a positive odd number")
        self.require(self.pool >= 1 and self.size % self.pool == 0, "pool",
                     "must divide size")
        self.require(0 <= self.noise_min <= self.noise_max, "noise_min",
                     "must be in [0, noise_max]")


class TaskConfig(common.config.Config):
    """
    Settings of the synthetic orientation classification task
    """

    def defaults(self):
        return {
            "out": "data",
            "classes": 4,
            "train_per_class": 128,
            "test_per_class": 64,
            "size": 16,
            "seed": 0,
        }

    def validate(self):
        super(TaskConfig, self).validate()

        self.require(self.classes >= 2, "classes", "must be >= 2")
        self.require(self.train_per_class >= 1, "train_per_class",
                     "must be >= 1")
        self.require(self.test_per_class >= 1, "test_per_class",
                     "must be >= 1")
        self.require(self.size >= 4, "size", "must be >= 4")
