"""
Representational similarity matrices and the statistics comparing them.
"""

from dataclasses import dataclass
import logging
import os

import numpy as np

from common import fileio
from common.errors import DatasetError, DegenerateError, FormatError
from neural.snr import center_units


logger = logging.getLogger(__name__)

KINDS = ("data", "oracle", "model", "neural-target", "cnn", "shuffle",
         "random")

SYMMETRY_TOLERANCE = 1e-6


@dataclass
class SimilarityMatrix:
    """
    Square matrix of pairwise similarities between the stimuli listed in
    stimulus_ids (row/column order).
    """

    kind: str
    matrix: np.ndarray
    stimulus_ids: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.stimulus_ids = np.asarray(self.stimulus_ids, dtype=np.int64)

        n = self.stimulus_ids.shape[0]

        if self.matrix.shape != (n, n):
            raise DatasetError(
                "{} similarity: matrix {} for {} stimuli".format(
                    self.kind, list(self.matrix.shape), n)
            )

    def __len__(self):
        return self.stimulus_ids.shape[0]

    def check(self):
        """
        Verify symmetry and range; returns self
        """

        if not np.allclose(self.matrix, self.matrix.T, rtol=0,
                           atol=SYMMETRY_TOLERANCE):
            raise DegenerateError("{} similarity is not symmetric".format(
                self.kind))

        if np.any(np.abs(self.matrix) > 1 + SYMMETRY_TOLERANCE):
            raise DegenerateError("{} similarity leaves [-1, 1]".format(
                self.kind))

        return self

    def position(self, ids):
        """
        Row positions of the given stimulus ids
        """

        lookup = {int(s): p for p, s in enumerate(self.stimulus_ids)}

        try:
            return np.array([lookup[int(s)] for s in ids], dtype=np.int64)
        except KeyError as e:
            raise DatasetError("stimulus {} not in {} similarity".format(
                e.args[0], self.kind))

    def subset(self, ids):
        """
        The matrix restricted to the given stimulus ids, in that order
        """

        p = self.position(ids)

        return SimilarityMatrix(self.kind, self.matrix[np.ix_(p, p)],
                                self.stimulus_ids[p])

    def off_diagonal(self):
        return self.matrix[np.triu_indices(len(self), k=1)]

    def save(self, path):
        """
        Write the matrix as <path>.nrtb and its index as <path>.json
        """

        fileio.write_tensor(path + ".nrtb", self.matrix)
        fileio.write_json(path + ".json", {
            "kind": self.kind,
            "stimulus_ids": self.stimulus_ids.tolist(),
            "tensor": os.path.basename(path) + ".nrtb",
        })

    @classmethod
    def load(cls, path):
        if path.endswith(".json") or path.endswith(".nrtb"):
            path = path[:-5]

        index = fileio.read_json(path + ".json")

        if index.get("kind") not in KINDS:
            raise FormatError(path + ".json", "unknown similarity kind {!r}"
                              .format(index.get("kind")))

        matrix = fileio.read_tensor(path + ".nrtb")

        return cls(index["kind"], matrix, index["stimulus_ids"])


def population_similarity(pop, kind):
    """
    Gram matrix of the centered unit vectors of a ScaledPopulation,
    restricted to its non-degenerate stimuli
    """

    units, valid = pop.units, pop.valid

    if np.sum(valid) < 2:
        raise DegenerateError(
            "{} similarity needs 2 non-degenerate stimuli, found {}".format(
                kind, int(np.sum(valid)))
        )

    e = units[valid]
    s = e @ e.T
    s = np.clip((s + s.T) / 2, -1.0, 1.0)
    np.fill_diagonal(s, 1.0)

    return SimilarityMatrix(kind, s, np.asarray(pop.stimulus_ids)[valid])


def similarity_data(pop):
    """
    S_ij = e_i . e_j over the non-degenerate stimuli of a ScaledPopulation
    """

    return population_similarity(pop, "data")


@dataclass
class TrialSimilarity:
    """
    Similarity between every pair of oracle trial vectors, each trial
    treated as a separate pseudo-stimulus. Row r belongs to stimulus
    stimulus_ids[owner[r]], trial trial[r].
    """

    matrix: np.ndarray
    owner: np.ndarray
    trial: np.ndarray
    valid: np.ndarray
    stimulus_ids: np.ndarray


def trial_similarity(ds, weights, stimuli=None, eps=1e-8):
    """
    Centered cosine similarity between all trial vectors of the oracle
    stimuli, centering over all of those trial vectors jointly.

    Args:
        ds: ResponseDataset
        weights: SnrWeights for its neurons
        stimuli: optional positions of the stimuli to use; defaults to
                 every oracle stimulus

    Returns:
        TrialSimilarity
    """

    if stimuli is None:
        stimuli = np.flatnonzero(ds.oracle)

    stimuli = np.asarray(stimuli, dtype=np.int64)

    if stimuli.shape[0] == 0:
        raise DatasetError("scan {}: no oracle stimuli".format(ds.scan))

    short = stimuli[ds.trial_counts[stimuli] < 2]

    if short.shape[0] > 0:
        raise DatasetError(
            "scan {}: oracle similarity needs >= 2 trials, stimulus {} "
            "has {}".format(ds.scan, int(ds.stimulus_ids[short[0]]),
                            int(ds.trial_counts[short[0]]))
        )

    rows = []
    owner = []
    trial = []

    for k, i in enumerate(stimuli):
        t = ds.trials(i)
        rows.append(t)
        owner += [k] * t.shape[0]
        trial += list(range(t.shape[0]))

    scaled = np.concatenate(rows, axis=0).astype(np.float64) * \
        weights.weights[None, :]

    _, units, valid = center_units(scaled, eps)

    e = np.where(valid[:, None], units, 0.0)
    s = np.clip(e @ e.T, -1.0, 1.0)
    s = (s + s.T) / 2

    return TrialSimilarity(
        s,
        np.asarray(owner, dtype=np.int64),
        np.asarray(trial, dtype=np.int64),
        valid,
        ds.stimulus_ids[stimuli]
    )


def similarity_oracle(ds, weights, stimuli=None, trials=None, eps=1e-8):
    """
    Oracle similarity: the mean similarity over all trial pairs of two
    repeated stimuli. On the diagonal, pairs of a trial with itself are
    excluded.

    Args:
        ds: ResponseDataset
        weights: SnrWeights
        stimuli: optional stimulus positions (default: all oracle stimuli)
        trials: a TrialSimilarity already computed for the same stimuli

    Returns:
        SimilarityMatrix(kind="oracle")
    """

    if trials is None:
        trials = trial_similarity(ds, weights, stimuli, eps)

    n = trials.stimulus_ids.shape[0]

    indicator = np.zeros((n, trials.matrix.shape[0]))
    indicator[trials.owner[trials.valid],
              np.flatnonzero(trials.valid)] = 1.0

    counts = indicator.sum(axis=1)

    usable = counts >= 2

    if not np.all(usable):
        logger.warning("scan %d: %d oracle stimuli with < 2 usable trials "
                       "excluded", ds.scan, int(np.sum(~usable)))

    sums = indicator @ trials.matrix @ indicator.T

    with np.errstate(invalid="ignore", divide="ignore"):
        s = sums / np.outer(counts, counts)

        #
        # Same-trial pairs contribute exactly 1 each to the diagonal sums
        #
        diagonal = (np.diag(sums) - counts) / (counts * (counts - 1))

    np.fill_diagonal(s, diagonal)

    s = s[np.ix_(usable, usable)]
    s = np.clip((s + s.T) / 2, -1.0, 1.0)

    return SimilarityMatrix("oracle", s, trials.stimulus_ids[usable])


@dataclass
class FluctuationStats:
    """
    Fluctuation of oracle similarities across scans and of single-trial
    similarities across repeats
    """

    scan: np.ndarray
    repeat: np.ndarray
    scan_std: float
    repeat_std: float


def fluctuation_stats(oracle_mats, trial_mats):
    """
    Compare the spread of similarity values across scans with their spread
    across repeated trials.

    scan samples: S^oracle-h_ij minus the mean over scans, for i <= j
    repeat samples: S^data-h between trials t1 < t2 of stimulus i minus
                    S^oracle-h_ii

    Args:
        oracle_mats: one oracle SimilarityMatrix per scan
        trial_mats: the matching TrialSimilarity per scan

    Returns:
        FluctuationStats
    """

    if len(oracle_mats) < 2:
        raise DatasetError("fluctuation statistics need at least 2 scans")

    if len(trial_mats) != len(oracle_mats):
        raise DatasetError("one trial similarity is needed per scan")

    ids = oracle_mats[0].stimulus_ids

    for m in oracle_mats[1:]:
        if not np.array_equal(m.stimulus_ids, ids):
            raise DatasetError("scans don't share the oracle stimulus set")

    stack = np.stack([m.matrix for m in oracle_mats])
    upper = np.triu_indices(len(ids))

    scan = (stack - stack.mean(axis=0))[:, upper[0], upper[1]].reshape(-1)

    repeat = []

    for oracle, trials in zip(oracle_mats, trial_mats):
        for k, stimulus in enumerate(trials.stimulus_ids):
            if stimulus not in ids:
                continue

            rows = np.flatnonzero((trials.owner == k) & trials.valid)

            if rows.shape[0] < 2:
                continue

            block = trials.matrix[np.ix_(rows, rows)]
            pairs = block[np.triu_indices(rows.shape[0], k=1)]
            p = oracle.position([stimulus])[0]

            repeat.append(pairs - oracle.matrix[p, p])

    repeat = np.concatenate(repeat) if len(repeat) > 0 else np.zeros(0)

    return FluctuationStats(
        scan,
        repeat,
        float(scan.std()),
        float(repeat.std()) if repeat.shape[0] > 0 else float("nan")
    )


def average_over_scans(mats, kind="neural-target"):
    """
    Entrywise mean of similarity matrices over the same stimuli

    Args:
        mats: list of SimilarityMatrix
        kind: kind of the result

    Returns:
        SimilarityMatrix
    """

    if len(mats) == 0:
        raise DatasetError("nothing to average")

    ids = mats[0].stimulus_ids

    for m in mats[1:]:
        if not np.array_equal(m.stimulus_ids, ids):
            raise DatasetError(
                "similarity matrices cover different stimuli ({} vs {})"
                .format(len(ids), len(m.stimulus_ids))
            )

    mean = np.mean(np.stack([m.matrix for m in mats]), axis=0)

    return SimilarityMatrix(kind, (mean + mean.T) / 2, ids)


def common_stimuli(mats):
    """
    Restrict every matrix to the stimulus ids present in all of them
    (sorted), so that matrices with different degenerate exclusions can be
    compared or averaged
    """

    ids = mats[0].stimulus_ids

    for m in mats[1:]:
        ids = np.intersect1d(ids, m.stimulus_ids)

    ids = np.sort(ids)

    if ids.shape[0] < 2:
        raise DegenerateError("fewer than 2 stimuli shared by all "
                              "similarity matrices")

    return [m.subset(ids) for m in mats]


def _values(m):
    return m.matrix if isinstance(m, SimilarityMatrix) else np.asarray(m)


def matrix_correlation(a, b):
    """
    Pearson correlation of the strict upper triangles of two matrices.
    Returns NaN (with a warning) when either triangle has no variance.
    """

    a, b = _values(a), _values(b)

    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DatasetError("matrix correlation needs equal square shapes, "
                           "got {} and {}".format(list(a.shape), list(b.shape)))

    upper = np.triu_indices(a.shape[0], k=1)

    x = a[upper] - a[upper].mean()
    y = b[upper] - b[upper].mean()

    denom = np.sqrt((x * x).sum() * (y * y).sum())

    if upper[0].shape[0] < 2 or denom == 0:
        logger.warning("matrix correlation undefined: zero variance")
        return float("nan")

    return float(np.clip((x * y).sum() / denom, -1.0, 1.0))


def cka_index(feat_a, feat_b):
    """
    Linear centered kernel alignment between two feature matrices with one
    row per sample. Returns NaN (with a warning) for zero-variance
    features.
    """

    x = np.asarray(feat_a, dtype=np.float64)
    y = np.asarray(feat_b, dtype=np.float64)

    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DatasetError("CKA needs two matrices with the same number of "
                           "rows, got {} and {}".format(list(x.shape),
                                                        list(y.shape)))

    x = x - x.mean(axis=0)
    y = y - y.mean(axis=0)

    cross = np.linalg.norm(y.T @ x) ** 2
    norm_x = np.linalg.norm(x.T @ x)
    norm_y = np.linalg.norm(y.T @ y)

    if norm_x == 0 or norm_y == 0:
        logger.warning("CKA undefined: zero-variance features")
        return float("nan")

    return float(np.clip(cross / (norm_x * norm_y), 0.0, 1.0))
