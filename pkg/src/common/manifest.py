"""
Dataset manifests: JSON documents naming the NRTB tensors of a dataset.

Two kinds exist. A "scans" manifest describes one stimulus set and the
responses recorded from it in one or more scans; a "classification"
manifest describes labeled train/test image sets. Every path is relative
to the manifest's directory. Validation reads every referenced tensor and
checks it against the trial-count table before any computation starts.
"""

import logging
import os

import numpy as np

from common import fileio
from common.errors import DatasetError, FormatError


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def _resolve(root, relative):
    return os.path.join(root, relative)


def write_scans(directory, stimuli, trial_counts, scans, seed=None,
                ground_truth=None, filename="manifest.json"):
    """
    Write a scans manifest and its tensors.

    Args:
        directory: output directory
        stimuli: [M, H, W] array
        trial_counts: [M] integer array
        scans: list of (scan id, responses array [sum(trial_counts), A])
        seed: generator seed, recorded when the data is synthetic
        ground_truth: optional dict scan id -> dict of name -> array

    Returns:
        The manifest path
    """

    trial_counts = np.asarray(trial_counts, dtype=np.int64)

    fileio.write_tensor(os.path.join(directory, "stimuli.nrtb"), stimuli)

    document = {
        "schema_version": SCHEMA_VERSION,
        "kind": "scans",
        "stimuli": "stimuli.nrtb",
        "trial_counts": trial_counts.tolist(),
        "oracle": (trial_counts >= 2).tolist(),
        "scans": [],
        "seed": seed,
    }

    for scan, responses in scans:
        filename_h = "scan-{}.nrtb".format(scan)
        fileio.write_tensor(os.path.join(directory, filename_h), responses)
        document["scans"].append({
            "scan": int(scan),
            "responses": filename_h,
            "neurons": int(np.shape(responses)[1]),
        })

    if ground_truth is not None:
        document["ground_truth"] = {}

        for scan, arrays in ground_truth.items():
            entry = {}

            for name, array in arrays.items():
                f = "truth-{}-{}.nrtb".format(scan, name)
                fileio.write_tensor(os.path.join(directory, f), array)
                entry[name] = f

            document["ground_truth"][str(scan)] = entry

    path = os.path.join(directory, filename)

    fileio.write_json(path, document)

    return path


def read_scans(path):
    """
    Read and validate a scans manifest.

    Returns:
        dict with "stimuli" [M, H, W], "trial_counts" [M], "scans" (list
        of (scan id, responses)), "ground_truth" (scan id -> name ->
        array), "seed" and "document"
    """

    document = fileio.read_json(path)
    root = os.path.dirname(os.path.abspath(path))

    _check_header(path, document, "scans")

    for key in ("stimuli", "trial_counts", "oracle", "scans"):
        if key not in document:
            raise FormatError(path, "missing '{}'".format(key))

    stimuli = fileio.read_tensor(_resolve(root, document["stimuli"]))
    counts = np.asarray(document["trial_counts"], dtype=np.int64)
    oracle = np.asarray(document["oracle"], dtype=bool)

    if stimuli.ndim != 3 or stimuli.shape[0] != counts.shape[0]:
        raise DatasetError(
            "{}: stimuli shape {} doesn't match {} trial counts".format(
                path, list(stimuli.shape), counts.shape[0]
            )
        )

    if oracle.shape != counts.shape or \
       not np.array_equal(oracle, counts >= 2):
        raise DatasetError(
            "{}: oracle flags must be set exactly where trial count >= 2"
            .format(path)
        )

    scans = []

    for entry in document["scans"]:
        responses = fileio.read_tensor(_resolve(root, entry["responses"]))

        if responses.ndim != 2 or responses.shape[0] != counts.sum() or \
           responses.shape[1] != entry.get("neurons", responses.shape[1]):
            raise DatasetError(
                "{}: scan {} responses have shape {}, trial table needs "
                "[{}, {}]".format(
                    path, entry["scan"], list(responses.shape),
                    int(counts.sum()), entry.get("neurons")
                )
            )

        scans.append((int(entry["scan"]), responses))

    truth = {}

    for scan, entry in document.get("ground_truth", {}).items():
        truth[int(scan)] = {
            name: fileio.read_tensor(_resolve(root, f))
            for name, f in entry.items()
        }

    logger.info("read %d scans over %d stimuli from %s",
                len(scans), counts.shape[0], path)

    return {
        "stimuli": stimuli,
        "trial_counts": counts,
        "scans": scans,
        "ground_truth": truth,
        "seed": document.get("seed"),
        "document": document,
    }


def write_classification(directory, splits, classes, seed=None,
                         filename="task.json"):
    """
    Write a classification manifest.

    Args:
        directory: output directory
        splits: dict split name -> (images [N, H, W], labels [N])
        classes: number of classes
        seed: generator seed

    Returns:
        The manifest path
    """

    document = {
        "schema_version": SCHEMA_VERSION,
        "kind": "classification",
        "classes": int(classes),
        "splits": {},
        "seed": seed,
    }

    for split, (images, labels) in splits.items():
        fi = "{}-images.nrtb".format(split)
        fl = "{}-labels.nrtb".format(split)
        fileio.write_tensor(os.path.join(directory, fi), images)
        fileio.write_tensor(os.path.join(directory, fl), labels)
        document["splits"][split] = {"images": fi, "labels": fl}

    path = os.path.join(directory, filename)

    fileio.write_json(path, document)

    return path


def read_classification(path):
    """
    Read and validate a classification manifest.

    Returns:
        dict with "classes" and "splits": split -> (images, int labels)
    """

    document = fileio.read_json(path)
    root = os.path.dirname(os.path.abspath(path))

    _check_header(path, document, "classification")

    classes = int(document.get("classes", 0))

    splits = {}

    for split, entry in document.get("splits", {}).items():
        images = fileio.read_tensor(_resolve(root, entry["images"]))
        labels = fileio.read_tensor(_resolve(root, entry["labels"]))

        if images.ndim != 3 or labels.shape != (images.shape[0],):
            raise DatasetError(
                "{}: split '{}' has images {} and labels {}".format(
                    path, split, list(images.shape), list(labels.shape)
                )
            )

        labels = labels.astype(np.int64)

        if labels.size > 0 and (labels.min() < 0 or labels.max() >= classes):
            raise DatasetError(
                "{}: split '{}' has labels outside [0, {})".format(
                    path, split, classes
                )
            )

        splits[split] = (images, labels)

    return {"classes": classes, "splits": splits, "seed": document.get("seed")}


def _check_header(path, document, kind):
    if not isinstance(document, dict):
        raise FormatError(path, "manifest must be a JSON object")

    if document.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(path, "unsupported schema version {}".format(
            document.get("schema_version")))

    if document.get("kind") != kind:
        raise FormatError(path, "expected a '{}' manifest, got '{}'".format(
            kind, document.get("kind")))
