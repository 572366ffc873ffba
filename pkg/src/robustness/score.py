from dataclasses import dataclass, field

import numpy as np

from common.errors import DatasetError


@dataclass
class RobustnessReport:
    """
    Robustness score of one model under one norm: the median (and mean)
    minimal perturbation over the evaluated samples, plus the per-sample
    table it was computed from
    """

    norm: str
    median: float
    mean: float
    distances: np.ndarray
    found: np.ndarray
    provenance: list = field(default_factory=list)

    @property
    def samples(self):
        return self.distances.shape[0]

    @property
    def unfound(self):
        return int(np.sum(~self.found))

    def summary(self):
        return {
            "norm": self.norm,
            "median": self.median,
            "mean": self.mean,
            "samples": self.samples,
            "unfound": self.unfound,
        }

    def rows(self):
        for i, (d, f) in enumerate(zip(self.distances, self.found)):
            p = self.provenance[i] if i < len(self.provenance) else None
            yield i, float(d), bool(f), p


def robustness_score(distances, found=None, norm="l2", provenance=None):
    """
    Median minimal perturbation over all evaluated samples. Unfound
    adversarials enter with the score their attack assigned them.

    Args:
        distances: per-sample minimal distances (0 for samples misclassified
                   without perturbation)
        found: per-sample flags, all True when omitted

    Returns:
        RobustnessReport
    """

    distances = np.asarray(distances, dtype=np.float64)

    if distances.ndim != 1 or distances.shape[0] == 0:
        raise DatasetError("robustness score needs at least one sample")

    found = np.ones(distances.shape[0], dtype=bool) if found is None \
        else np.asarray(found, dtype=bool)

    return RobustnessReport(
        norm,
        float(np.median(distances)),
        float(np.mean(distances)),
        distances,
        found,
        list(provenance) if provenance is not None else []
    )


def score_attack(result):
    """
    RobustnessReport of an AttackResult
    """

    return robustness_score(result.distances, result.found, result.norm,
                            result.hyperparameters)
