"""
On-disk formats: the NRTB binary tensor file, JSON documents and CSV tables.

All writers go through atomic_write so that an interrupted run never leaves
a truncated file behind.
"""

import csv
import io
import logging
import os
import struct
import tempfile

import numpy as np
import ujson

from common.errors import FormatError


logger = logging.getLogger(__name__)

MAGIC = b"NRTB"

VERSION = 1

#
# dtype code -> numpy dtype. Only 32-bit little-endian reals exist in
# version 1 of the format.
#
DTYPES = {
    0: np.dtype("<f4"),
}

HEADER = struct.Struct("<4sIBB")


def atomic_write(path, payload):
    """
    Write bytes to path through a temporary file in the same directory
    followed by a rename.

    Args:
        path: The destination path
        payload: The bytes to write
    """

    directory = os.path.dirname(os.path.abspath(path))

    os.makedirs(directory, exist_ok=True)

    fd, tmp = tempfile.mkstemp(
        prefix=".{}.".format(os.path.basename(path)),
        dir=directory
    )

    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def encode_tensor(array):
    """
    Encode an array as an NRTB byte string

    Args:
        array: Anything convertible to a float32 numpy array

    Returns:
        The encoded bytes
    """

    array = np.asarray(array, dtype=DTYPES[0], order="C")

    header = HEADER.pack(MAGIC, VERSION, 0, array.ndim)

    dims = struct.pack("<{}Q".format(array.ndim), *array.shape)

    return header + dims + array.tobytes(order="C")


def decode_tensor(payload, path="<bytes>"):
    """
    Decode an NRTB byte string

    Args:
        payload: The encoded bytes
        path: Used in diagnostics only

    Returns:
        A float32 numpy array with the stored shape
    """

    if len(payload) < HEADER.size:
        raise FormatError(path, "truncated header")

    magic, version, dtype, ndim = HEADER.unpack_from(payload, 0)

    if magic != MAGIC:
        raise FormatError(path, "bad magic {!r}".format(magic))

    if version != VERSION:
        raise FormatError(path, "unsupported version {}".format(version))

    if dtype not in DTYPES:
        raise FormatError(path, "unknown dtype code {}".format(dtype))

    offset = HEADER.size
    dims_size = 8 * ndim

    if len(payload) < offset + dims_size:
        raise FormatError(path, "truncated dimension table")

    dims = struct.unpack_from("<{}Q".format(ndim), payload, offset)

    offset += dims_size

    count = int(np.prod(dims, dtype=np.int64)) if ndim > 0 else 1
    expected = DTYPES[dtype].itemsize * count

    if len(payload) - offset != expected:
        raise FormatError(
            path,
            "payload is {} bytes, dims {} need {}".format(
                len(payload) - offset, list(dims), expected
            )
        )

    array = np.frombuffer(payload, dtype=DTYPES[dtype], count=count,
                          offset=offset)

    return array.reshape(dims).astype(np.float32)


def write_tensor(path, array):
    atomic_write(path, encode_tensor(array))


def read_tensor(path):
    try:
        with open(path, "rb") as f:
            payload = f.read()
    except OSError as e:
        raise FormatError(path, "could not be read ({})".format(e.strerror))

    return decode_tensor(payload, path)


def plain(value):
    """
    Convert numpy scalars and arrays inside nested containers to plain
    Python values that ujson can serialize. Non-finite floats become None.
    """

    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}

    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]

    if isinstance(value, np.ndarray):
        return plain(value.tolist())

    if isinstance(value, np.bool_):
        return bool(value)

    if isinstance(value, np.integer):
        return int(value)

    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None

    return value


def dumps_json(document):
    return ujson.dumps(
        plain(document),
        indent=2,
        sort_keys=True,
        escape_forward_slashes=False
    ) + "\n"


def write_json(path, document):
    atomic_write(path, dumps_json(document).encode("utf-8"))


def read_json(path):
    try:
        with open(path) as f:
            return ujson.load(f)
    except OSError as e:
        raise FormatError(path, "could not be read ({})".format(e.strerror))
    except ValueError as e:
        raise FormatError(path, "invalid JSON ({})".format(e))


def write_csv(path, header, rows):
    """
    Write a CSV table atomically

    Args:
        path: The destination path
        header: The list of column names
        rows: Iterable of row sequences, one value per column
    """

    buf = io.StringIO()

    writer = csv.writer(buf, lineterminator="\n")

    writer.writerow(header)

    for row in rows:
        writer.writerow([v.item() if isinstance(v, np.generic) else v
                         for v in row])

    atomic_write(path, buf.getvalue().encode("utf-8"))


def read_csv(path):
    """
    Read a CSV table written by write_csv

    Returns:
        A list of dicts keyed by column name, values left as strings
    """

    try:
        with open(path, newline="") as f:
            return list(csv.DictReader(f))
    except OSError as e:
        raise FormatError(path, "could not be read ({})".format(e.strerror))
