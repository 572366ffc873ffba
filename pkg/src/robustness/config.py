import common.config
from robustness.attacks import LINE_STEPS, LINF_BRACKET, LINF_ROUNDS


#
# Hyperparameter grids of the full-scale evaluation
#
FULL_PGD_STEPS = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0]
FULL_PGD_ITERATIONS = [10, 30, 50, 100, 200]
FULL_BOUNDARY_STEPS = [0.0003, 0.001, 0.003, 0.01, 0.03, 0.1]

PRESETS = {
    "full": {
        "pgd_steps": FULL_PGD_STEPS,
        "pgd_iterations": FULL_PGD_ITERATIONS,
        "boundary_steps": FULL_BOUNDARY_STEPS,
        "queries": 1000,
        "samples": 1000,
        "repetitions": 5,
    },
}


class EvaluationConfig(common.config.Config):
    """
    Fields shared by the evaluation subcommands
    """

    def defaults(self):
        return {
            "task": "data/task.json",
            "runs": "runs",
            "out": "runs",
            "split": "test",
            "samples": 200,
            "seed": 0,
        }

    def validate(self):
        super(EvaluationConfig, self).validate()

        self.require(self.samples >= 1, "samples", "must be >= 1")


class NoiseConfig(EvaluationConfig):

    def defaults(self):
        d = super(NoiseConfig, self).defaults()
        d.update({
            "sigmas": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            "noise_seeds": [0, 1, 2],
        })
        return d

    def validate(self):
        super(NoiseConfig, self).validate()

        self.require(len(self.sigmas) >= 1, "sigmas", "needs a level")
        self.require(all(s >= 0 for s in self.sigmas), "sigmas",
                     "must be >= 0")
        self.require(
            all(b > a for a, b in zip(self.sigmas, self.sigmas[1:])),
            "sigmas", "must be strictly increasing"
        )
        self.require(len(self.noise_seeds) >= 1, "noise_seeds",
                     "needs a seed")


class AdversarialConfig(EvaluationConfig):

    def defaults(self):
        d = super(AdversarialConfig, self).defaults()
        d.update({
            "norms": ["linf", "l2"],
            "pgd_steps": [0.01, 0.05],
            "pgd_iterations": [10, 30],
            "linf_rounds": LINF_ROUNDS,
            "linf_bracket": LINF_BRACKET,
            "boundary_steps": [0.01, 0.1],
            "queries": 200,
            "line_steps": LINE_STEPS,
            "repetitions": 1,
            "checkpoints": [10, 20, 50, 100, 200],
            "pool": "train",
        })
        return d

    def validate(self):
        super(AdversarialConfig, self).validate()

        self.require(len(self.norms) >= 1 and
                     all(n in ("linf", "l2") for n in self.norms),
                     "norms", "must list linf and/or l2")
        self.require(len(self.pgd_steps) >= 1 and
                     all(s > 0 for s in self.pgd_steps),
                     "pgd_steps", "must be positive")
        self.require(len(self.pgd_iterations) >= 1 and
                     all(i >= 1 for i in self.pgd_iterations),
                     "pgd_iterations", "must be >= 1")
        self.require(self.linf_rounds >= 1, "linf_rounds", "must be >= 1")
        self.require(self.linf_bracket > 0, "linf_bracket", "must be > 0")
        self.require(len(self.boundary_steps) >= 1 and
                     all(s > 0 for s in self.boundary_steps),
                     "boundary_steps", "must be positive")
        self.require(self.queries >= 1, "queries", "must be >= 1")
        self.require(self.line_steps >= 1, "line_steps", "must be >= 1")
        self.require(self.repetitions >= 1, "repetitions", "must be >= 1")

    def pgd_grid(self):
        return [(s, i) for s in self.pgd_steps for i in self.pgd_iterations]

    def apply_preset(self, name):
        if name not in PRESETS:
            raise common.config.ConfigValueError(
                "preset", "must be one of {}".format(", ".join(PRESETS)))

        self.update(PRESETS[name])
