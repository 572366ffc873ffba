"""
Differentiable primitives.

Every primitive computes its forward value with numpy and, when a tape is
active and an input requires a gradient, records a closure mapping the
output gradient to the input gradients.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from common.errors import ShapeError
from tensor.tape import Tensor, as_tensor, record


def _unbroadcast(g, shape):
    """
    Sum a broadcast gradient back down to the shape of the operand
    """

    while g.ndim > len(shape):
        g = g.sum(axis=0)

    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)

    return g


#
# Elementwise arithmetic (numpy broadcasting rules)
#

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor.wrap(a.data + b.data)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", out, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor.wrap(a.data - b.data)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record("sub", out, (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor.wrap(a.data * b.data)

    def backward(g):
        return (
            _unbroadcast(g * b.data, a.shape),
            _unbroadcast(g * a.data, b.shape)
        )

    return record("mul", out, (a, b), backward)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor.wrap(a.data / b.data)

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape)
        )

    return record("div", out, (a, b), backward)


def scale(a, c):
    """
    Multiply by a constant scalar
    """

    a = as_tensor(a)
    c = float(c)
    out = Tensor.wrap(a.data * a.data.dtype.type(c))

    return record("scale", out, (a,), lambda g: (g * g.dtype.type(c),))


def square(a):
    a = as_tensor(a)
    out = Tensor.wrap(a.data * a.data)

    return record("square", out, (a,), lambda g: (2 * g * a.data,))


def sqrt(a):
    a = as_tensor(a)
    y = np.sqrt(a.data)
    out = Tensor.wrap(y)

    return record("sqrt", out, (a,), lambda g: (0.5 * g / y,))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    out = Tensor.wrap(np.where(mask, a.data, a.data.dtype.type(0)))

    return record("relu", out, (a,), lambda g: (g * mask,))


def clip(a, lo, hi):
    """
    Clamp into [lo, hi]. The gradient is zero wherever the clamp is active.
    """

    a = as_tensor(a)
    inside = (a.data > lo) & (a.data < hi)
    out = Tensor.wrap(np.clip(a.data, lo, hi).astype(a.data.dtype))

    return record("clip", out, (a,), lambda g: (g * inside,))


def arctanh(a):
    a = as_tensor(a)
    out = Tensor.wrap(np.arctanh(a.data))

    return record(
        "arctanh", out, (a,),
        lambda g: (g / (1 - a.data * a.data),)
    )


#
# Shapes and reductions
#

def reshape(a, shape):
    a = as_tensor(a)
    out = Tensor.wrap(a.data.reshape(shape))

    return record("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def flatten(a):
    """
    Collapse everything but the leading (batch) dimension
    """

    a = as_tensor(a)

    return reshape(a, (a.shape[0], -1))


def stack(tensors, axis=-1):
    """
    Stack equally shaped tensors along a new axis
    """

    tensors = [as_tensor(t) for t in tensors]
    out = Tensor.wrap(np.stack([t.data for t in tensors], axis=axis))

    def backward(g):
        return tuple(
            np.array(np.take(g, i, axis=axis), order="C")
            for i in range(len(tensors))
        )

    return record("stack", out, tuple(tensors), backward)


def total(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = Tensor.wrap(np.asarray(a.data.sum(axis=axis, keepdims=keepdims)))

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)

        return (np.broadcast_to(g, a.shape).astype(a.data.dtype),)

    return record("sum", out, (a,), backward)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)

    if axis is None:
        n = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = int(np.prod([a.shape[i] for i in axes]))

    return scale(total(a, axis=axis, keepdims=keepdims), 1.0 / n)


def take(a, indices):
    """
    Select rows (leading dimension) by index; indices may repeat
    """

    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    out = Tensor.wrap(a.data[indices])

    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, indices, g)
        return (ga,)

    return record("take", out, (a,), backward)


def pick(a, columns):
    """
    Select one element per row of a 2-d tensor: out[n] = a[n, columns[n]]
    """

    a = as_tensor(a)
    columns = np.asarray(columns, dtype=np.int64)
    rows = np.arange(a.shape[0])
    out = Tensor.wrap(a.data[rows, columns])

    def backward(g):
        ga = np.zeros_like(a.data)
        ga[rows, columns] = g
        return (ga,)

    return record("pick", out, (a,), backward)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", "[n, k] @ [k, m]",
                         "{} @ {}".format(list(a.shape), list(b.shape)))

    out = Tensor.wrap(a.data @ b.data)

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return record("matmul", out, (a, b), backward)


def softmax(a):
    """
    Softmax over the last axis
    """

    a = as_tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor.wrap(y)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return record("softmax", out, (a,), backward)


#
# Network layers
#

def conv2d(x, w, b=None, stride=1, padding=None):
    """
    2-d cross-correlation over [N, C, H, W] inputs with [O, C, k, k] kernels.

    Args:
        x: input batch
        w: kernel
        b: optional per-output-channel bias
        stride: step between output positions
        padding: zero padding on every side, defaults to k // 2
    """

    x, w = as_tensor(x), as_tensor(w)

    n, c, h, wd = x.shape
    o, ck, k, k2 = w.shape

    if ck != c or k != k2:
        raise ShapeError("conv2d", "kernel [O, {}, k, k]".format(c),
                         list(w.shape))

    p = k // 2 if padding is None else padding
    s = stride

    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p)))

    windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]

    ho, wo = windows.shape[2], windows.shape[3]

    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
    wflat = w.data.reshape(o, c * k * k)

    y = cols @ wflat.T

    inputs = (x, w)

    if b is not None:
        b = as_tensor(b)
        y = y + b.data
        inputs = (x, w, b)

    out = Tensor.wrap(
        np.ascontiguousarray(y.reshape(n, ho, wo, o).transpose(0, 3, 1, 2))
    )

    def backward(g):
        gf = g.transpose(0, 2, 3, 1).reshape(-1, o)

        gw = (gf.T @ cols).reshape(w.shape)

        dcols = (gf @ wflat).reshape(n, ho, wo, c, k, k)

        gxp = np.zeros_like(xp)

        for i in range(k):
            for j in range(k):
                gxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += \
                    dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)

        gx = gxp[:, :, p:p + h, p:p + wd]

        if b is None:
            return gx, gw

        return gx, gw, gf.sum(axis=0)

    return record("conv2d", out, inputs, backward)


def channel_affine(x, gain, shift):
    """
    Per-channel learnable scale and shift over [N, C, H, W]
    """

    x, gain, shift = as_tensor(x), as_tensor(gain), as_tensor(shift)

    gb = gain.data[None, :, None, None]
    out = Tensor.wrap(x.data * gb + shift.data[None, :, None, None])

    def backward(g):
        return (
            g * gb,
            (g * x.data).sum(axis=(0, 2, 3)),
            g.sum(axis=(0, 2, 3))
        )

    return record("channel_affine", out, (x, gain, shift), backward)


def global_avg_pool(x):
    """
    [N, C, H, W] -> [N, C]
    """

    x = as_tensor(x)
    n, c, h, w = x.shape
    out = Tensor.wrap(x.data.mean(axis=(2, 3)))

    def backward(g):
        return (np.broadcast_to(
            g[:, :, None, None] / (h * w), x.shape
        ).astype(x.data.dtype),)

    return record("global_avg_pool", out, (x,), backward)


def avg_pool2d(x, size):
    """
    Non-overlapping size x size average pooling; H and W must be
    multiples of size
    """

    x = as_tensor(x)
    n, c, h, w = x.shape

    if h % size != 0 or w % size != 0:
        raise ShapeError("avg_pool2d", "H, W multiples of {}".format(size),
                         list(x.shape))

    out = Tensor.wrap(
        x.data.reshape(n, c, h // size, size, w // size, size).mean(axis=(3, 5))
    )

    def backward(g):
        gx = np.repeat(np.repeat(g, size, axis=2), size, axis=3)
        return (gx / (size * size),)

    return record("avg_pool2d", out, (x,), backward)


#
# Losses
#

def softmax_cross_entropy(logits, labels):
    """
    Mean cross-entropy of integer labels under softmax(logits)
    """

    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)

    n = logits.shape[0]
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp

    rows = np.arange(n)
    out = Tensor.wrap(np.asarray(-logp[rows, labels].mean()))

    def backward(g):
        p = np.exp(logp)
        p[rows, labels] -= 1
        return (p * (g / n),)

    return record("softmax_cross_entropy", out, (logits,), backward)


def mse(prediction, target):
    """
    Mean squared error against a constant target
    """

    prediction = as_tensor(prediction)
    target = np.asarray(as_tensor(target).data, dtype=prediction.data.dtype)

    diff = prediction.data - target
    out = Tensor.wrap(np.asarray((diff * diff).mean()))

    def backward(g):
        return (2 * g * diff / diff.size,)

    return record("mse", out, (prediction,), backward)
