import common.config
from neural.snr import EPS, W_MAX


ENCODERS = ("trained", "frozen", "none")


class DenoiserConfig(common.config.Config):
    """
    Settings of fit-denoiser: which scans to fit and how the predictive
    model is built and trained
    """

    def defaults(self):
        return {
            "manifest": "data/manifest.json",
            "out": "data",
            "scans": None,
            "encoder": "trained",
            "channels": 8,
            "kernel": 3,
            "pool": 4,
            "epochs": 30,
            "batch_size": 32,
            "lr": 0.01,
            "momentum": 0.9,
            "weight_decay": 0.0,
            "ridge": 1e-3,
            "eps": EPS,
            "w_max": W_MAX,
            "seed": 0,
        }

    def optional(self):
        return ("scans",)

    def validate(self):
        super(DenoiserConfig, self).validate()

        self.require(self.encoder in ENCODERS, "encoder",
                     "must be one of {}".format(", ".join(ENCODERS)))
        self.require(self.channels >= 1, "channels", "must be >= 1")
        self.require(self.kernel >= 1 and self.kernel % 2 == 1, "kernel",
                     "must be a positive odd number")
        self.require(self.pool >= 1, "pool", "must be >= 1")
        self.require(self.epochs >= 0, "epochs", "must be >= 0")
        self.require(self.batch_size >= 1, "batch_size", "must be >= 1")
        self.require(self.lr >= 0, "lr", "must be >= 0")
        self.require(0 <= self.momentum < 1, "momentum", "must be in [0, 1)")
        self.require(self.weight_decay >= 0, "weight_decay", "must be >= 0")
        self.require(self.ridge >= 0, "ridge", "must be >= 0")
        self.require(0 < self.eps < 0.1, "eps", "must be in (0, 0.1)")
        self.require(self.w_max > 0, "w_max", "must be > 0")


class SimilarityConfig(common.config.Config):
    """
    Settings of build-similarity
    """

    def defaults(self):
        return {
            "manifest": "data/manifest.json",
            "denoisers": None,
            "out": "data",
            "eps": EPS,
            "w_max": W_MAX,
            "seed": 0,
        }

    def optional(self):
        return ("denoisers",)

    def validate(self):
        super(SimilarityConfig, self).validate()

        self.require(0 < self.eps < 0.1, "eps", "must be in (0, 0.1)")
        self.require(self.w_max > 0, "w_max", "must be > 0")

    @property
    def denoiser_root(self):
        return self.out if self.denoisers is None else self.denoisers
