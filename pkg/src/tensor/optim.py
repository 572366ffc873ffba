import logging

import numpy as np

from common.errors import NonFiniteError


logger = logging.getLogger(__name__)


def sgd_step(params, grads, lr, momentum=0.0, velocity=None,
             weight_decay=0.0):
    """
    One stochastic gradient descent step, applied in place.

    With velocity v (initially zero) the update is
        v <- momentum * v + (g + weight_decay * p)
        p <- p - lr * v
    which reduces to p <- p - lr * g for momentum 0 and no weight decay.

    Args:
        params: mapping name -> Tensor
        grads: mapping name -> gradient array (same shapes as params)
        lr: learning rate, >= 0
        momentum: in [0, 1)
        velocity: mapping name -> array carried between steps; required
                  when momentum > 0
        weight_decay: L2 coefficient added to the gradient

    Returns:
        The updated params mapping
    """

    if lr < 0:
        raise ValueError("learning rate must be >= 0, got {}".format(lr))

    if not 0 <= momentum < 1:
        raise ValueError("momentum must be in [0, 1), got {}".format(momentum))

    #
    # Reject the whole step before touching any parameter
    #
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("gradient", name)

    for name, p in params.items():
        g = grads.get(name)

        if g is None:
            continue

        if weight_decay != 0:
            g = g + weight_decay * p.data

        if momentum > 0:
            v = velocity.get(name)
            v = g.copy() if v is None else momentum * v + g
            velocity[name] = v
            g = v

        p.data = (p.data - lr * g).astype(p.data.dtype)

    return params


class SGD(object):
    """
    Stochastic gradient descent with optional momentum and weight decay,
    keeping the velocity between steps.
    """

    def __init__(self, params, lr, momentum=0.0, weight_decay=0.0):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = {}

    def step(self, grads):
        sgd_step(
            self.params,
            grads,
            self.lr,
            momentum=self.momentum,
            velocity=self.velocity,
            weight_decay=self.weight_decay
        )


def lr_schedule(epoch, base, decay=0.3, every=4, reset=20):
    """
    Step-decay learning rate: multiplied by decay every `every` epochs and
    reset to base every `reset` epochs, after which the pattern restarts.

    Args:
        epoch: zero-based epoch index
        base: learning rate at epoch 0
    """

    if epoch < 0:
        raise ValueError("epoch must be >= 0, got {}".format(epoch))

    phase = epoch % reset if reset > 0 else epoch

    return base * decay ** (phase // every)
