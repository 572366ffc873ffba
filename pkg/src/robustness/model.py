"""
A frozen classifier seen from the attacks: predictions and input gradients.
"""

import logging

import numpy as np

from tensor import network, ops
from tensor.tape import Tape, Tensor


logger = logging.getLogger(__name__)


class FrozenModel(object):
    """
    Read-only view of a trained NetworkGraph. Inputs are [N, H, W] images
    in [0, 1]; every forward pass counts as one query per sample.
    """

    def __init__(self, net, batch_size=256):
        self.net = net
        self.batch_size = batch_size
        self.queries = 0

    @property
    def image_shape(self):
        return tuple(self.net.input_shape[1:])

    def logits(self, images):
        images = np.asarray(images, dtype=np.float32)
        self.queries += 1

        return network.predict(self.net, images[:, None], self.batch_size)

    def predict(self, images):
        return np.argmax(self.logits(images), axis=1)

    def _gradient(self, images, objective):
        x = Tensor(np.asarray(images, dtype=np.float32)[:, None],
                   requires_grad=True)

        self.queries += 1

        with Tape() as tape:
            logits, _ = network.forward(self.net, x)
            value = objective(logits)
            tape.backward(value)

        grad = x.grad if x.grad is not None else np.zeros_like(x.data)

        return logits.data, grad[:, 0].astype(np.float64)

    def loss_gradient(self, images, labels):
        """
        Gradient of the summed cross-entropy with respect to the inputs
        (per-sample gradients, as samples don't interact)

        Returns:
            (logits [N, C], gradient [N, H, W])
        """

        n = np.shape(images)[0]

        return self._gradient(
            images,
            lambda logits: ops.scale(
                ops.softmax_cross_entropy(logits, labels), n)
        )

    def margin_gradient(self, images, labels):
        """
        Gradient of the decision margin f(x) = max_{k != y} z_k - z_y,
        which is positive exactly on adversarial inputs

        Returns:
            (margins [N], gradient [N, H, W])
        """

        labels = np.asarray(labels, dtype=np.int64)

        def objective(z):
            runner = runner_up(z.data, labels)
            return ops.total(ops.sub(ops.pick(z, runner), ops.pick(z, labels)))

        logits, grad = self._gradient(images, objective)

        return margins(logits, labels), grad


def runner_up(logits, labels):
    """
    Highest-scoring class other than the label, per row
    """

    masked = np.array(logits, dtype=np.float64)
    masked[np.arange(masked.shape[0]), labels] = -np.inf

    return np.argmax(masked, axis=1)


def margins(logits, labels):
    """
    max_{k != y} z_k - z_y per row
    """

    rows = np.arange(np.shape(logits)[0])

    return np.asarray(logits)[rows, runner_up(logits, labels)] - \
        np.asarray(logits)[rows, labels]
