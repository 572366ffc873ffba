"""
Control regularization targets that keep the statistics of the neural
similarity matrix but break its correspondence with the images.
"""

import logging

import numpy as np

from neural.similarity import SimilarityMatrix


logger = logging.getLogger(__name__)

CONTROL_KINDS = ("shuffle", "random")

SHUFFLE_MODES = ("permute", "entrywise")


def permute_target(target, permutation):
    """
    S'_ij = S_pi(i)pi(j): one permutation applied to rows and columns
    """

    p = np.asarray(permutation, dtype=np.int64)

    if sorted(p.tolist()) != list(range(len(target))):
        raise ValueError("not a permutation of {} stimuli".format(len(target)))

    return SimilarityMatrix("shuffle", target.matrix[np.ix_(p, p)],
                            target.stimulus_ids)


def _from_upper(values, n):
    m = np.eye(n)
    upper = np.triu_indices(n, k=1)
    m[upper] = values
    m[(upper[1], upper[0])] = values

    return m


def make_control_target(target, kind, seed, shuffle_mode="permute"):
    """
    Build a control target from a neural similarity matrix.

    shuffle/permute: the stimulus indices are permuted jointly on rows and
    columns. shuffle/entrywise: the off-diagonal values are shuffled among
    the off-diagonal positions (kept symmetric). random: a symmetric matrix
    whose off-diagonal entries are drawn i.i.d. from the off-diagonal
    values of the target. Diagonals of the entrywise and random variants
    are 1.

    Args:
        target: SimilarityMatrix
        kind: "shuffle" or "random"
        seed: seed of the permutation / draw

    Returns:
        SimilarityMatrix over the same stimulus ids
    """

    if kind not in CONTROL_KINDS:
        raise ValueError("control target kind must be one of {}".format(
            ", ".join(CONTROL_KINDS)))

    if shuffle_mode not in SHUFFLE_MODES:
        raise ValueError("shuffle mode must be one of {}".format(
            ", ".join(SHUFFLE_MODES)))

    rng = np.random.default_rng(seed)
    n = len(target)
    values = target.off_diagonal()

    if kind == "shuffle" and shuffle_mode == "permute":
        result = permute_target(target, rng.permutation(n))
    elif kind == "shuffle":
        result = SimilarityMatrix("shuffle",
                                  _from_upper(rng.permutation(values), n),
                                  target.stimulus_ids)
    else:
        result = SimilarityMatrix(
            "random",
            _from_upper(rng.choice(values, size=values.shape[0],
                                   replace=True), n),
            target.stimulus_ids
        )

    logger.info("%s control target (%s) over %d stimuli, seed %s", kind,
                shuffle_mode if kind == "shuffle" else "iid", n, seed)

    return result
