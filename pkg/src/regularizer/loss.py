"""
The neural similarity penalty.

For a batch of image pairs (i, j) the network similarity is a softmax
weighted combination of the centered cosine similarities of the K tap
layers. The penalty compares it with the neural target after an arctanh
remap of both values.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

import common.config
from common.errors import NonFiniteError
from tensor import ops
from tensor.tape import Tensor, as_tensor


logger = logging.getLogger(__name__)

TARGET_KINDS = ("neural", "shuffle", "random", "data")

#
# Default arctanh clamp; arctanh is singular at +-1
#
CLAMP = 1e-6

#
# A centered feature vector shorter than this fraction of the longest one
# in its layer drops that layer from the pair's similarity
#
DEGENERATE = 1e-8

GAMMA = "regularizer.gamma"


@dataclass
class RegularizerConfig:
    alpha: float = 20.0
    taps: list = None
    clamp: float = CLAMP
    target: str = "neural"

    def validate(self):
        if self.alpha < 0:
            raise common.config.ConfigValueError("alpha", "must be >= 0")

        if not 0 < self.clamp < 0.1:
            raise common.config.ConfigValueError("clamp", "must be in (0, 0.1)")

        if self.taps is not None and len(self.taps) < 1:
            raise common.config.ConfigValueError("taps", "needs at least one")

        if self.target not in TARGET_KINDS:
            raise common.config.ConfigValueError(
                "target", "must be one of {}".format(", ".join(TARGET_KINDS))
            )

        return self


class GammaWeights(object):
    """
    Trainable layer weights: K logits whose softmax gives the probabilities
    gamma_k combining the per-layer similarities
    """

    def __init__(self, layers, logits=None):
        if logits is None:
            logits = np.zeros(layers, dtype=np.float32)

        logits = np.asarray(logits, dtype=np.float32)

        if logits.shape != (layers,):
            raise ValueError("{} logits for {} layers".format(
                logits.shape[0], layers))

        self.logits = Tensor(logits, requires_grad=True, name=GAMMA)

    def __len__(self):
        return self.logits.shape[0]

    def probabilities(self):
        z = self.logits.data.astype(np.float64)
        e = np.exp(z - z.max())

        return e / e.sum()

    def tensor(self):
        """
        The differentiable probabilities
        """

        return ops.softmax(self.logits)

    def parameters(self):
        return {GAMMA: self.logits}


@dataclass
class LossBreakdown:
    task: float
    similarity: float
    total: float
    gamma: list
    pairs: int = 0
    tensor: Tensor = field(default=None, repr=False, compare=False)


def pair_means(taps_i, taps_j):
    """
    Mean feature vector per tap layer over all 2P images of a pair batch
    """

    return [
        ops.scale(ops.add(ops.mean(a, axis=0), ops.mean(b, axis=0)), 0.5)
        for a, b in zip(taps_i, taps_j)
    ]


def _centered(taps, means):
    return [ops.sub(f, m) for f, m in zip(taps, means)]


def _norms(centered):
    return [np.sqrt((c.data.astype(np.float64) ** 2).sum(axis=1))
            for c in centered]


def usable_layers(taps_i, taps_j, batch_means):
    """
    Per pair and tap layer, whether both centered feature vectors are long
    enough for a cosine similarity

    Returns:
        [P, K] bool mask
    """

    usable = []

    for a, b in zip(_norms(_centered(taps_i, batch_means)),
                    _norms(_centered(taps_j, batch_means))):
        largest = max(a.max(initial=0.0), b.max(initial=0.0))
        usable.append((a > DEGENERATE * largest) &
                      (b > DEGENERATE * largest) & (largest > 0))

    return np.stack(usable, axis=-1)


def layer_similarity(taps_i, taps_j, batch_means, mask=None):
    """
    Centered cosine similarity of the two images of every pair, per tap
    layer.

    Args:
        taps_i: K Tensors [P, D_k], features of the first images
        taps_j: K Tensors [P, D_k], features of the second images
        batch_means: K Tensors or arrays [D_k], the mean feature estimate
        mask: optional [P, K] usable layers; masked entries get a unit norm
              so their (unused) similarity stays finite

    Returns:
        Tensor [P, K]
    """

    batch_means = [as_tensor(m) for m in batch_means]

    per_layer = []

    for k, (a, b) in enumerate(zip(_centered(taps_i, batch_means),
                                   _centered(taps_j, batch_means))):
        dot = ops.total(ops.mul(a, b), axis=1)
        sa = ops.total(ops.square(a), axis=1)
        sb = ops.total(ops.square(b), axis=1)

        if mask is not None:
            pad = (~mask[:, k]).astype(sa.data.dtype)
            sa, sb = ops.add(sa, pad), ops.add(sb, pad)

        per_layer.append(ops.div(dot, ops.mul(ops.sqrt(sa), ops.sqrt(sb))))

    return ops.stack(per_layer, axis=-1)


def combined_similarity(per_layer, gamma, mask=None):
    """
    S^CNN = sum_k gamma_k S^CNN-k

    With a mask, the sum runs over the usable layers of each pair and gamma
    is renormalized over them.

    Args:
        per_layer: Tensor [P, K]
        gamma: GammaWeights, or a Tensor / array of K probabilities
        mask: optional [P, K] usable layers, at least one per pair

    Returns:
        Tensor [P]
    """

    if isinstance(gamma, GammaWeights):
        gamma = gamma.tensor()

    gamma = as_tensor(gamma)
    per_layer = as_tensor(per_layer)
    column = ops.reshape(gamma, (gamma.shape[0], 1))

    if mask is None:
        return ops.reshape(ops.matmul(per_layer, column), (-1,))

    m = mask.astype(per_layer.data.dtype)

    return ops.reshape(
        ops.div(ops.matmul(ops.mul(per_layer, m), column),
                ops.matmul(m, column)),
        (-1,)
    )


def similarity_loss(s_cnn, s_neural, clamp=CLAMP):
    """
    [arctanh(s_cnn) - arctanh(s_neural)]^2 elementwise, with both inputs
    clamped into [-1 + clamp, 1 - clamp]

    Args:
        s_cnn: Tensor of network similarities
        s_neural: array of target similarities, same shape

    Returns:
        Tensor of per-pair losses
    """

    s_cnn = as_tensor(s_cnn)
    s_neural = np.asarray(as_tensor(s_neural).data, dtype=s_cnn.data.dtype)

    if not np.all(np.isfinite(s_cnn.data)):
        raise NonFiniteError("network similarity")

    if not np.all(np.isfinite(s_neural)):
        raise NonFiniteError("target similarity")

    lo, hi = -1 + clamp, 1 - clamp

    remapped = ops.arctanh(ops.clip(s_cnn, lo, hi))
    target = np.arctanh(np.clip(s_neural, lo, hi))

    return ops.square(ops.sub(remapped, target))


def total_loss(task_loss, similarity, alpha, gamma=None, pairs=0):
    """
    L = L_task + alpha * L_similarity

    Args:
        task_loss: scalar Tensor
        similarity: scalar Tensor (batch mean of the similarity losses), or
                    None when no pair contributed
        alpha: regularization strength

    Returns:
        LossBreakdown whose `tensor` is the differentiable total
    """

    task_loss = as_tensor(task_loss)

    if similarity is None or alpha == 0:
        total = task_loss
    else:
        total = ops.add(task_loss, ops.scale(similarity, alpha))

    sim = 0.0 if similarity is None else as_tensor(similarity).item()

    return LossBreakdown(
        task=task_loss.item(),
        similarity=sim,
        total=total.item(),
        gamma=[] if gamma is None else [float(g) for g in gamma],
        pairs=pairs,
        tensor=total
    )


def pair_loss(taps_i, taps_j, targets, gamma, clamp=CLAMP, usage=None):
    """
    Mean similarity loss over the usable pairs of a batch. A layer that is
    degenerate for a pair drops out of that pair's combination only.

    Args:
        taps_i, taps_j: K Tensors [P, D_k] each
        targets: [P] target similarities
        gamma: GammaWeights
        usage: optional [K] int array, incremented by the usable pairs of
               every layer

    Returns:
        (scalar Tensor or None, number of usable pairs)
    """

    means = pair_means(taps_i, taps_j)

    usable = usable_layers(taps_i, taps_j, means)

    if usage is not None:
        usage += usable.sum(axis=0)

    valid = usable.any(axis=1)

    if not np.any(valid):
        logger.debug("no usable pair in batch")
        return None, 0

    keep = np.flatnonzero(valid)
    usable = usable[keep]

    if keep.shape[0] < valid.shape[0]:
        logger.debug("%d degenerate pairs excluded",
                     valid.shape[0] - keep.shape[0])

    mask = None if usable.all() else usable

    per_layer = layer_similarity(
        [ops.take(t, keep) for t in taps_i],
        [ops.take(t, keep) for t in taps_j],
        means,
        mask
    )

    losses = similarity_loss(combined_similarity(per_layer, gamma, mask),
                             np.asarray(targets)[keep], clamp)

    return ops.mean(losses), int(keep.shape[0])
