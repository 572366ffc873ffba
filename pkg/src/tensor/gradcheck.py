"""
Central finite-difference checks of tape gradients.
"""

import numpy as np

from tensor.tape import Tape, Tensor


def numeric_gradient(fn, arrays, index, step):
    """
    Central finite differences of fn(*arrays) with respect to arrays[index]
    """

    base = arrays[index]
    grad = np.zeros_like(base)

    it = np.nditer(base, flags=["multi_index"])

    for _ in it:
        i = it.multi_index
        original = base[i]

        base[i] = original + step
        plus = fn(*arrays)
        base[i] = original - step
        minus = fn(*arrays)
        base[i] = original

        grad[i] = (plus - minus) / (2 * step)

    return grad


def relative_error(analytic, numeric):
    """
    ||a - n|| / (||a|| + ||n||), zero when both vanish
    """

    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)

    if denom == 0:
        return 0.0

    return float(np.linalg.norm(analytic - numeric) / denom)


def check_gradients(fn, arrays, step=1e-3, dtype=np.float64):
    """
    Compare tape gradients of a scalar function against central finite
    differences.

    Args:
        fn: callable taking Tensors and returning a scalar Tensor
        arrays: input arrays; every one of them is differentiated
        step: finite-difference step
        dtype: precision both evaluations run in

    Returns:
        The largest relative error over all inputs
    """

    arrays = [np.array(a, dtype=dtype) for a in arrays]

    tensors = [
        Tensor(a, requires_grad=True, name="input{}".format(i), dtype=dtype)
        for i, a in enumerate(arrays)
    ]

    with Tape() as tape:
        loss = fn(*tensors)
        tape.backward(loss)

    def value(*xs):
        return float(fn(*[Tensor(x, dtype=dtype) for x in xs]).data)

    worst = 0.0

    for i, t in enumerate(tensors):
        numeric = numeric_gradient(value, arrays, i, step)
        analytic = t.grad if t.grad is not None else np.zeros_like(arrays[i])
        worst = max(worst, relative_error(analytic, numeric))

    return worst
