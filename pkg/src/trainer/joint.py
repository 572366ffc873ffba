"""
Joint training: every step processes one classification batch and one
batch of stimulus pairs and applies a single combined gradient update.
"""

from dataclasses import dataclass, field
import logging
import time

import numpy as np

from common import fileio
from common.errors import DatasetError, DegenerateError, NonFiniteError
from regularizer.loss import DEGENERATE, GammaWeights, pair_loss, total_loss
from tensor import network, ops
from tensor.optim import SGD, lr_schedule
from tensor.tape import ParameterSet, Tape


logger = logging.getLogger(__name__)

#
# Independent random streams derived from the run seed
#
STREAM_INIT = 0
STREAM_CLASSIFICATION = 1
STREAM_PAIRS = 2


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    task: float
    similarity: float
    total: float
    accuracy: float
    gamma: list
    pairs: int
    seconds: float = field(default=0.0, compare=False)


@dataclass
class TrainLog:
    """
    Per-epoch losses, training accuracy and layer weights of one run
    """

    condition: str
    seed: int
    alpha: float
    target: str
    layers: list
    epochs: list = field(default_factory=list)
    initial_similarity: float = float("nan")
    final_similarity: float = float("nan")
    test_accuracy: float = float("nan")

    @property
    def gamma(self):
        return self.epochs[-1].gamma if len(self.epochs) > 0 else []

    @property
    def accuracy(self):
        return self.epochs[-1].accuracy if len(self.epochs) > 0 else \
            float("nan")

    @property
    def seconds(self):
        return float(sum(e.seconds for e in self.epochs))

    def header(self):
        return ["epoch", "lr", "task_loss", "similarity_loss", "total_loss",
                "accuracy", "pairs"] + \
            ["gamma_{}".format(name) for name in self.layers]

    def rows(self):
        for e in self.epochs:
            yield [e.epoch, e.lr, e.task, e.similarity, e.total, e.accuracy,
                   e.pairs] + list(e.gamma)

    def write_csv(self, path):
        fileio.write_csv(path, self.header(), self.rows())

    def summary(self):
        return {
            "condition": self.condition,
            "seed": self.seed,
            "alpha": self.alpha,
            "target": self.target,
            "train_accuracy": self.accuracy,
            "test_accuracy": self.test_accuracy,
            "initial_similarity_loss": self.initial_similarity,
            "final_similarity_loss": self.final_similarity,
            "gamma": list(self.gamma),
            "max_gamma": max(self.gamma) if len(self.gamma) > 0 else None,
        }


def sample_pairs(rng, n, count):
    """
    `count` uniformly random unordered pairs i != j of range(n)

    Returns:
        [count, 2] int array with i < j in every row
    """

    if n < 2:
        raise DatasetError("pair sampling needs at least 2 stimuli")

    first = rng.integers(0, n, size=count)
    second = (first + rng.integers(1, n, size=count)) % n

    return np.stack([np.minimum(first, second),
                     np.maximum(first, second)], axis=1)


def tap_features(net, images, batch_size=256):
    """
    Flattened features of every tap layer, [M, D_k] per layer
    """

    images = np.asarray(images, dtype=np.float32)

    feats = [[] for _ in net.taps]

    for start in range(0, images.shape[0], batch_size):
        _, taps = network.forward(net, images[start:start + batch_size])

        for k, t in enumerate(taps):
            feats[k].append(t.data.astype(np.float64))

    return [np.concatenate(f, axis=0) for f in feats]


def network_similarity(net, gamma, images):
    """
    The combined network similarity matrix over a stimulus set, with the
    mean feature taken over the whole set

    Args:
        net: NetworkGraph
        gamma: GammaWeights or K probabilities
        images: [M, 1, H, W]

    Returns:
        ([M, M] combined similarity, [K, M, M] per-layer similarities)
    """

    if isinstance(gamma, GammaWeights):
        gamma = gamma.probabilities()

    per_layer, masks = [], []

    for f in tap_features(net, images):
        c = f - f.mean(axis=0)
        norms = np.linalg.norm(c, axis=1)
        ok = (norms > DEGENERATE * norms.max(initial=0.0)) & (norms > 0)
        u = np.where(ok[:, None], c, 0.0) / np.where(ok, norms, 1.0)[:, None]
        per_layer.append(np.clip(u @ u.T, -1.0, 1.0))
        masks.append(np.outer(ok, ok).astype(np.float64))

    per_layer, masks = np.stack(per_layer), np.stack(masks)

    #
    # Renormalize gamma over the layers usable for each entry; entries
    # without one are 0
    #
    weight = np.tensordot(gamma, masks, axes=1)
    combined = np.tensordot(gamma, per_layer * masks, axes=1)

    return combined / np.where(weight > 0, weight, 1.0), per_layer


def stimulus_similarity_loss(net, gamma, images, target, clamp):
    """
    Mean similarity loss over every stimulus pair i < j

    Args:
        target: [M, M] target similarity in the row order of images
    """

    s, _ = network_similarity(net, gamma, images)

    upper = np.triu_indices(s.shape[0], k=1)
    lo, hi = -1 + clamp, 1 - clamp

    d = np.arctanh(np.clip(s[upper], lo, hi)) - \
        np.arctanh(np.clip(np.asarray(target)[upper], lo, hi))

    return float(np.mean(d * d))


def accuracy(net, data, batch_size=256):
    logits = network.predict(net, data.images[:, None], batch_size)

    return float(np.mean(np.argmax(logits, axis=1) == data.labels))


def check_usage(layers, usage, epoch):
    """
    Warn about tap layers that were degenerate for every pair of an epoch

    Raises:
        DegenerateError: when no layer had a usable pair, which leaves the
                         penalty switched off
    """

    if not np.any(usage):
        raise DegenerateError(
            "no usable stimulus pair in epoch {}: every tap layer is "
            "degenerate".format(epoch))

    for name, count in zip(layers, usage):
        if count == 0:
            logger.warning("epoch %d: tap layer %s is degenerate for every "
                           "pair and drops out of the penalty", epoch, name)


def joint_train(cfg, class_ds, stimulus_ds=None, target=None, test_ds=None):
    """
    Train a residual classifier with the neural similarity penalty.

    The classification pathway and the pair pathway draw from separate
    random streams, so a run with alpha = 0 (which skips the pair pathway)
    follows exactly the trajectory of plain classification training.

    Args:
        cfg: TrainConfig of a single condition
        class_ds: ClassificationSet used for training
        stimulus_ds: StimulusSet in the row order of target
        target: [M, M] target similarity (array or SimilarityMatrix)
        test_ds: optional held-out ClassificationSet

    Returns:
        (NetworkGraph, GammaWeights, TrainLog)
    """

    seed = int(cfg.seed)
    reg = cfg.regularizer().validate()

    rng_init = np.random.default_rng([seed, STREAM_INIT])
    rng_class = np.random.default_rng([seed, STREAM_CLASSIFICATION])
    rng_pairs = np.random.default_rng([seed, STREAM_PAIRS])

    net = network.residual_classifier(class_ds.input_shape, class_ds.classes,
                                      cfg.widths, cfg.kernel, reg.taps)
    net.initialize(rng_init)

    gamma = GammaWeights(len(net.taps))

    params = ParameterSet(net.parameters)
    params.update(gamma.parameters())

    regularized = reg.alpha > 0

    if regularized:
        if stimulus_ds is None or target is None:
            raise DatasetError("alpha > 0 needs stimuli and a target")

        target = getattr(target, "matrix", target)

        if np.shape(target) != (len(stimulus_ds), len(stimulus_ds)):
            raise DatasetError("target {} for {} stimuli".format(
                list(np.shape(target)), len(stimulus_ds)))

        stimuli = stimulus_ds.images[:, None]

    log = TrainLog(cfg.condition, seed, reg.alpha, reg.target,
                   [net.layers[t].name for t in net.taps])

    if regularized:
        log.initial_similarity = stimulus_similarity_loss(
            net, gamma, stimuli, target, reg.clamp)

    optimizer = SGD(params, cfg.lr, cfg.momentum, cfg.weight_decay)

    n = len(class_ds)
    pairs_per_step = max(1, cfg.batch_size // 2)

    for epoch in range(cfg.epochs):
        started = time.time()

        optimizer.lr = lr_schedule(epoch, cfg.lr, cfg.lr_decay, cfg.lr_every,
                                   cfg.lr_reset)

        order = rng_class.permutation(n)
        sums = np.zeros(3)
        correct = 0
        used = 0
        usage = np.zeros(len(net.taps), dtype=np.int64)

        for step, start in enumerate(range(0, n, cfg.batch_size)):
            x, y = class_ds.batch(order[start:start + cfg.batch_size])

            with Tape(params) as tape:
                logits, _ = network.forward(net, x)
                task = ops.softmax_cross_entropy(logits, y)

                similarity, count = None, 0

                if regularized:
                    pairs = sample_pairs(rng_pairs, len(stimulus_ds),
                                         pairs_per_step)

                    _, taps = network.forward(
                        net,
                        np.concatenate([stimuli[pairs[:, 0]],
                                        stimuli[pairs[:, 1]]])
                    )

                    first = np.arange(pairs.shape[0])
                    second = first + pairs.shape[0]

                    similarity, count = pair_loss(
                        [ops.take(t, first) for t in taps],
                        [ops.take(t, second) for t in taps],
                        target[pairs[:, 0], pairs[:, 1]],
                        gamma,
                        reg.clamp,
                        usage
                    )

                breakdown = total_loss(task, similarity, reg.alpha,
                                       gamma.probabilities(), count)

                if not np.isfinite(breakdown.total):
                    raise NonFiniteError(
                        "loss", "epoch {} step {}".format(epoch, step))

                grads = tape.backward(breakdown.tensor)

            optimizer.step(grads)

            sums += [breakdown.task * len(y), breakdown.similarity * len(y),
                     breakdown.total * len(y)]
            correct += int(np.sum(np.argmax(logits.data, axis=1) == y))
            used += count

        if regularized:
            check_usage(log.layers, usage, epoch)

        record = EpochRecord(
            epoch,
            optimizer.lr,
            float(sums[0] / n),
            float(sums[1] / n),
            float(sums[2] / n),
            correct / n,
            [float(g) for g in gamma.probabilities()],
            used,
            time.time() - started
        )

        log.epochs.append(record)

        logger.info(
            "%s seed %d epoch %d: task %.4f similarity %.4f accuracy %.3f "
            "gamma [%s]", cfg.condition, seed, epoch, record.task,
            record.similarity, record.accuracy,
            ", ".join("{:.2f}".format(g) for g in record.gamma)
        )

    if regularized:
        log.final_similarity = stimulus_similarity_loss(
            net, gamma, stimuli, target, reg.clamp)

    if test_ds is not None:
        log.test_accuracy = accuracy(net, test_ds)

    return net, gamma, log
