import copy

import common.config
from regularizer.loss import CLAMP, TARGET_KINDS, RegularizerConfig
from regularizer.targets import SHUFFLE_MODES


#
# The main-text conditions: unregularized baseline, neural target and the
# two controls, all at the main-text strength
#
DEFAULT_ALPHA = 20.0

MAIN_CONDITIONS = [
    {"name": "vanilla", "alpha": 0.0, "target": "neural"},
    {"name": "neural", "alpha": DEFAULT_ALPHA, "target": "neural"},
    {"name": "shuffle", "alpha": DEFAULT_ALPHA, "target": "shuffle"},
    {"name": "random", "alpha": DEFAULT_ALPHA, "target": "random"},
]

ALPHA_SWEEP = [0.0, 2.0, 8.0, 20.0]

PRESETS = {
    #
    # Full-scale schedule; far too slow for the synthetic task
    #
    "full": {
        "epochs": 40,
        "batch_size": 64,
        "lr": 0.1,
        "widths": [16, 32, 64],
        "seeds": [0, 1, 2, 3, 4],
        "conditions": MAIN_CONDITIONS,
    },
    "desk": {
        "epochs": 20,
        "batch_size": 32,
        "lr": 0.05,
        "widths": [8, 16, 32],
        "seeds": [0, 1, 2],
        "conditions": MAIN_CONDITIONS,
    },
    "alpha-sweep": {
        "conditions": [
            {"name": "alpha{:g}".format(a), "alpha": a, "target": "neural"}
            for a in ALPHA_SWEEP
        ],
    },
}


class TrainConfig(common.config.Config):
    """
    Settings of one training condition, or of a suite of conditions when
    `conditions` is set
    """

    def defaults(self):
        return {
            "task": "data/task.json",
            "stimuli": "data/manifest.json",
            "target": "data/target",
            "data_target": "data/data",
            "out": "runs",
            "condition": "neural",
            "alpha": DEFAULT_ALPHA,
            "target_kind": "neural",
            "taps": None,
            "clamp": CLAMP,
            "shuffle_mode": "permute",
            "epochs": 20,
            "batch_size": 32,
            "lr": 0.05,
            "momentum": 0.0,
            "weight_decay": 0.0,
            "lr_decay": 0.3,
            "lr_every": 4,
            "lr_reset": 20,
            "widths": [16, 32, 64],
            "kernel": 3,
            "seed": 0,
            "seeds": None,
            "conditions": None,
        }

    def optional(self):
        return ("taps", "seeds", "conditions")

    def validate(self):
        super(TrainConfig, self).validate()

        self.require(self.epochs >= 1, "epochs", "must be >= 1")
        self.require(self.batch_size >= 1, "batch_size", "must be >= 1")
        self.require(self.lr >= 0, "lr", "must be >= 0")
        self.require(0 <= self.momentum < 1, "momentum", "must be in [0, 1)")
        self.require(self.weight_decay >= 0, "weight_decay", "must be >= 0")
        self.require(len(self.widths) >= 1, "widths", "needs one block")
        self.require(self.shuffle_mode in SHUFFLE_MODES, "shuffle_mode",
                     "must be one of {}".format(", ".join(SHUFFLE_MODES)))

        self.regularizer().validate()

        for c in self.conditions or []:
            self.require(isinstance(c, dict) and "name" in c, "conditions",
                         "every condition needs a name")
            self.require(c.get("target", "neural") in TARGET_KINDS,
                         "conditions", "unknown target '{}'".format(
                             c.get("target")))
            self.require(c.get("alpha", 0) >= 0, "conditions",
                         "alpha must be >= 0")

    def regularizer(self):
        return RegularizerConfig(self.alpha, self.taps, self.clamp,
                                 self.target_kind)

    def apply_preset(self, name):
        if name not in PRESETS:
            raise common.config.ConfigValueError(
                "preset", "must be one of {}".format(", ".join(PRESETS)))

        self.update(copy.deepcopy(PRESETS[name]))

    def run_seeds(self):
        return [self.seed] if self.seeds is None else list(self.seeds)

    def runs(self):
        """
        One config per condition of the suite (just this one when no
        conditions are listed)
        """

        if self.conditions is None:
            return [self]

        result = []

        for c in self.conditions:
            run = copy.deepcopy(self)
            run.conditions = None
            run.condition = c["name"]
            run.alpha = float(c.get("alpha", self.alpha))
            run.target_kind = c.get("target", self.target_kind)
            result.append(run)

        return result
