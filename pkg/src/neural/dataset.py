from dataclasses import dataclass, field

import numpy as np

from common import manifest
from common.errors import DatasetError


@dataclass
class ResponseDataset:
    """
    Responses of A neurons to M stimuli recorded in one scan.

    Trials are stored stacked: rows offsets[i] .. offsets[i] + T_i - 1 of
    `responses` hold the T_i trials of stimulus i. A stimulus is an oracle
    stimulus exactly when it was shown at least twice.
    """

    scan: int
    stimuli: np.ndarray
    responses: np.ndarray
    trial_counts: np.ndarray
    stimulus_ids: np.ndarray = None
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.stimuli = np.asarray(self.stimuli, dtype=np.float32)
        self.responses = np.asarray(self.responses, dtype=np.float32)
        self.trial_counts = np.asarray(self.trial_counts, dtype=np.int64)

        if self.stimulus_ids is None:
            self.stimulus_ids = np.arange(self.trial_counts.shape[0])

        self.stimulus_ids = np.asarray(self.stimulus_ids, dtype=np.int64)

        if self.trial_counts.ndim != 1 or \
           self.stimuli.shape[0] != self.trial_counts.shape[0] or \
           self.stimulus_ids.shape != self.trial_counts.shape:
            raise DatasetError(
                "scan {}: {} stimuli, {} trial counts, {} ids".format(
                    self.scan, self.stimuli.shape[0],
                    self.trial_counts.shape[0], self.stimulus_ids.shape[0]
                )
            )

        if np.any(self.trial_counts < 1):
            raise DatasetError(
                "scan {}: every stimulus needs at least one trial".format(
                    self.scan)
            )

        if self.responses.ndim != 2 or \
           self.responses.shape[0] != self.trial_counts.sum():
            raise DatasetError(
                "scan {}: responses {} don't match {} trials".format(
                    self.scan, list(self.responses.shape),
                    int(self.trial_counts.sum())
                )
            )

        if not np.all(np.isfinite(self.responses)):
            raise DatasetError(
                "scan {}: responses contain non-finite values".format(
                    self.scan)
            )

        self.offsets = np.concatenate(
            [[0], np.cumsum(self.trial_counts)[:-1]]
        ).astype(np.int64)

    @property
    def neurons(self):
        return self.responses.shape[1]

    @property
    def oracle(self):
        return self.trial_counts >= 2

    def trials(self, i):
        """
        [T_i, A] responses of stimulus i
        """

        start = self.offsets[i]
        return self.responses[start:start + self.trial_counts[i]]

    def trial_means(self):
        """
        [M, A] mean response over trials
        """

        return np.add.reduceat(self.responses.astype(np.float64),
                               self.offsets, axis=0) / \
            self.trial_counts[:, None]

    def first_trials(self):
        """
        [M, A] single-trial responses (the first trial of every stimulus)
        """

        return self.responses[self.offsets].astype(np.float64)

    def subset(self, indices):
        """
        Dataset restricted to the given stimulus positions
        """

        indices = np.asarray(indices, dtype=np.int64)

        rows = np.concatenate([
            np.arange(self.offsets[i], self.offsets[i] + self.trial_counts[i])
            for i in indices
        ]) if len(indices) > 0 else np.zeros(0, dtype=np.int64)

        return ResponseDataset(
            self.scan,
            self.stimuli[indices],
            self.responses[rows],
            self.trial_counts[indices],
            self.stimulus_ids[indices]
        )

    def oracle_subset(self):
        return self.subset(np.flatnonzero(self.oracle))

    def single_subset(self):
        return self.subset(np.flatnonzero(~self.oracle))


def load_scans(path):
    """
    Load every scan of a scans manifest

    Returns:
        (list of ResponseDataset, manifest dict from common.manifest)
    """

    m = manifest.read_scans(path)

    datasets = [
        ResponseDataset(scan, m["stimuli"], responses, m["trial_counts"])
        for scan, responses in m["scans"]
    ]

    return datasets, m
