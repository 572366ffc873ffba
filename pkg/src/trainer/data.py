"""
Inputs of the training loop: the labeled classification images and the
neural stimuli shown in the similarity pathway.
"""

from dataclasses import dataclass
import logging

import numpy as np
import scipy.ndimage

from common import manifest
from common.errors import DatasetError


logger = logging.getLogger(__name__)


@dataclass
class ClassificationSet:
    images: np.ndarray
    labels: np.ndarray
    classes: int

    def __len__(self):
        return self.labels.shape[0]

    @property
    def input_shape(self):
        return (1,) + tuple(self.images.shape[1:])

    def batch(self, indices):
        return self.images[indices][:, None], self.labels[indices]


@dataclass
class StimulusSet:
    """
    Stimulus images at the classifier's input size, in the row order of
    the similarity target they are paired with
    """

    images: np.ndarray
    stimulus_ids: np.ndarray

    def __len__(self):
        return self.stimulus_ids.shape[0]


def load_task(path):
    """
    Read a classification manifest

    Returns:
        dict split name -> ClassificationSet
    """

    m = manifest.read_classification(path)

    return {
        split: ClassificationSet(images.astype(np.float32), labels,
                                 m["classes"])
        for split, (images, labels) in m["splits"].items()
    }


def resize_stimuli(stimuli, shape):
    """
    Resample [M, H, W] stimuli to [M] + shape with linear interpolation,
    clipped to [0, 1]
    """

    stimuli = np.asarray(stimuli, dtype=np.float32)

    h, w = shape

    if stimuli.shape[1:] == (h, w):
        return stimuli.copy()

    factors = (1.0, h / stimuli.shape[1], w / stimuli.shape[2])

    resized = scipy.ndimage.zoom(stimuli, factors, order=1,
                                 grid_mode=True, mode="nearest")

    if resized.shape[1:] != (h, w):
        raise DatasetError("stimuli of shape {} can't be resampled to {}"
                           .format(list(stimuli.shape[1:]), [h, w]))

    return np.clip(resized, 0.0, 1.0).astype(np.float32)


def load_stimuli(path, target, shape):
    """
    The stimuli of a scans manifest that the target covers, resized to the
    classifier input and ordered like the target's rows

    Args:
        path: scans manifest
        target: SimilarityMatrix
        shape: (H, W) of the classifier input
    """

    m = manifest.read_scans(path)

    ids = np.arange(m["stimuli"].shape[0])
    lookup = {int(s): p for p, s in enumerate(ids)}

    missing = [int(s) for s in target.stimulus_ids if int(s) not in lookup]

    if len(missing) > 0:
        raise DatasetError("{}: target stimuli {} not in the manifest".format(
            path, missing[:5]))

    positions = [lookup[int(s)] for s in target.stimulus_ids]

    images = resize_stimuli(m["stimuli"][positions], shape)

    logger.info("%d stimuli resized from %s to %s", len(positions),
                list(m["stimuli"].shape[1:]), list(shape))

    return StimulusSet(images, np.asarray(target.stimulus_ids))
