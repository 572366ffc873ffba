import numpy as np
import scipy.stats


def standard_error(values, axis=0):
    """
    Standard error of the mean (N - 1 divisor); 0 when fewer than two
    values are given
    """

    values = np.asarray(values, dtype=np.float64)

    if values.ndim == 0 or values.shape[axis] < 2:
        return np.zeros(np.delete(values.shape, axis)) if values.ndim > 1 \
            else 0.0

    result = scipy.stats.sem(values, axis=axis)

    return float(result) if np.ndim(result) == 0 else result
