"""
Layered differentiable networks with designated tap layers.

A NetworkGraph is an ordered list of LayerSpecs. Every layer consumes the
output of the layer before it; residual "add" layers additionally read the
output of an earlier layer (or of the network input) through an optional
1x1 projection when the shapes differ.
"""

from collections import OrderedDict
from dataclasses import asdict, dataclass
import logging
import os

import numpy as np

from common import fileio
from common.errors import FormatError, ShapeError
from tensor import ops
from tensor.tape import ParameterSet, as_tensor


logger = logging.getLogger(__name__)

KINDS = ("conv", "affine", "relu", "add", "pool", "gap", "flatten", "fc")

HEADS = ("softmax-xent", "mse")

#
# Layer index used by "add" layers to refer to the network input
#
INPUT = -1


@dataclass
class LayerSpec:
    kind: str
    name: str
    channels: int = 0
    kernel: int = 3
    stride: int = 1
    skip: int = INPUT
    size: int = 2
    features: int = 0

    def describe(self):
        return "layer '{}' ({})".format(self.name, self.kind)


def conv(name, channels, kernel=3, stride=1):
    return LayerSpec("conv", name, channels=channels, kernel=kernel,
                     stride=stride)


def affine(name):
    return LayerSpec("affine", name)


def relu(name):
    return LayerSpec("relu", name)


def residual_add(name, skip):
    return LayerSpec("add", name, skip=skip)


def pool(name, size):
    return LayerSpec("pool", name, size=size)


def gap(name):
    return LayerSpec("gap", name)


def flatten(name):
    return LayerSpec("flatten", name)


def fc(name, features):
    return LayerSpec("fc", name, features=features)


class NetworkGraph(object):
    """
    A layered network, its parameters and the K tap layers whose flattened
    outputs are exposed next to the network output.
    """

    def __init__(self, layers, input_shape, taps=(), head="softmax-xent"):
        """
        Args:
            layers: list of LayerSpec
            input_shape: per-sample input shape (C, H, W)
            taps: indices of the layers exposed by forward()
            head: "softmax-xent" for classifiers, "mse" for regressors
        """

        self.layers = list(layers)
        self.input_shape = tuple(int(d) for d in input_shape)
        self.taps = [int(t) for t in taps]
        self.head = head
        self.parameters = ParameterSet()
        self.shapes = []
        self.projected = set()

        if head not in HEADS:
            raise ShapeError("head", "one of {}".format(HEADS), head)

        for t in self.taps:
            if t < 0 or t >= len(self.layers):
                raise ShapeError(
                    "taps",
                    "indices in [0, {})".format(len(self.layers)),
                    self.taps
                )

        self._infer_shapes()

    def _infer_shapes(self):
        shape = self.input_shape

        for i, layer in enumerate(self.layers):
            if layer.kind not in KINDS:
                raise ShapeError(layer.describe(), "a known kind", layer.kind)

            shape = self._layer_shape(i, layer, shape)

            self.shapes.append(shape)

    def _layer_shape(self, i, layer, shape):
        where = "{} at index {}".format(layer.describe(), i)

        if layer.kind in ("conv", "affine", "relu", "add", "pool", "gap"):
            if len(shape) != 3:
                raise ShapeError(where, "a [C, H, W] input", list(shape))

        if layer.kind == "conv":
            c, h, w = shape
            k, s = layer.kernel, layer.stride
            p = k // 2

            self.parameters.add(
                layer.name + ".weight",
                np.zeros((layer.channels, c, k, k), dtype=np.float32)
            )
            self.parameters.add(
                layer.name + ".bias",
                np.zeros(layer.channels, dtype=np.float32)
            )

            return (
                layer.channels,
                (h + 2 * p - k) // s + 1,
                (w + 2 * p - k) // s + 1
            )

        if layer.kind == "affine":
            self.parameters.add(
                layer.name + ".scale", np.ones(shape[0], dtype=np.float32)
            )
            self.parameters.add(
                layer.name + ".shift", np.zeros(shape[0], dtype=np.float32)
            )
            return shape

        if layer.kind == "relu":
            return shape

        if layer.kind == "add":
            if layer.skip != INPUT and not 0 <= layer.skip < i:
                raise ShapeError(where, "a skip from an earlier layer",
                                 layer.skip)

            source = self.input_shape if layer.skip == INPUT \
                else self.shapes[layer.skip]

            if len(source) != 3:
                raise ShapeError(where, "a [C, H, W] skip", list(source))

            if tuple(source) != tuple(shape):
                if source[1] % shape[1] != 0 or \
                   source[1] // shape[1] != source[2] // shape[2]:
                    raise ShapeError(where, "a skip reducible to {}".format(
                        list(shape)), list(source))

                self.projected.add(i)
                self.parameters.add(
                    layer.name + ".projection",
                    np.zeros((shape[0], source[0], 1, 1), dtype=np.float32)
                )

            return shape

        if layer.kind == "pool":
            c, h, w = shape

            if h % layer.size != 0 or w % layer.size != 0:
                raise ShapeError(where, "H, W multiples of {}".format(
                    layer.size), list(shape))

            return (c, h // layer.size, w // layer.size)

        if layer.kind == "gap":
            return (shape[0],)

        if layer.kind == "flatten":
            return (int(np.prod(shape)),)

        if layer.kind == "fc":
            if len(shape) != 1:
                raise ShapeError(where, "a flat input", list(shape))

            self.parameters.add(
                layer.name + ".weight",
                np.zeros((shape[0], layer.features), dtype=np.float32)
            )
            self.parameters.add(
                layer.name + ".bias",
                np.zeros(layer.features, dtype=np.float32)
            )
            return (layer.features,)

    @property
    def output_shape(self):
        return self.shapes[-1]

    def initialize(self, rng):
        """
        He-normal initialization for kernels and projections, zeros for
        biases and shifts, ones for affine scales.

        Args:
            rng: a numpy Generator
        """

        for name, p in self.parameters.items():
            if name.endswith(".weight") or name.endswith(".projection"):
                fan_in = int(np.prod(p.shape[1:])) if p.data.ndim == 4 \
                    else p.shape[0]
                std = np.sqrt(2.0 / fan_in)
                p.data = (rng.standard_normal(p.shape) * std).astype(
                    np.float32
                )
            elif name.endswith(".scale"):
                p.data = np.ones(p.shape, dtype=np.float32)
            else:
                p.data = np.zeros(p.shape, dtype=np.float32)

    def spec(self):
        return {
            "input_shape": list(self.input_shape),
            "layers": [asdict(layer) for layer in self.layers],
            "taps": list(self.taps),
            "head": self.head,
        }

    @classmethod
    def from_spec(cls, spec):
        return cls(
            [LayerSpec(**layer) for layer in spec["layers"]],
            spec["input_shape"],
            spec.get("taps", ()),
            spec.get("head", "softmax-xent")
        )

    def __str__(self):
        lines = []

        for i, (layer, shape) in enumerate(zip(self.layers, self.shapes)):
            tap = " [tap]" if i in self.taps else ""
            lines.append("{:>3} {:<8} {:<12} {}{}".format(
                i, layer.kind, layer.name, list(shape), tap
            ))

        return "\n".join(lines)


def forward(net, batch):
    """
    Run a batch through the network.

    Args:
        net: The NetworkGraph
        batch: Tensor or array shaped [N] + net.input_shape

    Returns:
        (output, taps): the output Tensor [N, F] and one flattened Tensor
        [N, D_k] per tap layer, in tap order
    """

    x = as_tensor(batch)

    if x.data.ndim != len(net.input_shape) + 1 or \
       tuple(x.shape[1:]) != net.input_shape:
        first = "{} at index 0".format(net.layers[0].describe()) \
            if len(net.layers) > 0 else "network input"
        raise ShapeError(first, ["N"] + list(net.input_shape), list(x.shape))

    source = x
    outputs = []
    tapped = {}

    for i, layer in enumerate(net.layers):
        x = _apply(net, i, layer, x, source, outputs)

        outputs.append(x)

        if i in net.taps:
            tapped[i] = ops.flatten(x)

    return x, [tapped[t] for t in net.taps]


def _apply(net, i, layer, x, source, outputs):
    p = net.parameters

    if layer.kind == "conv":
        return ops.conv2d(
            x,
            p[layer.name + ".weight"],
            p[layer.name + ".bias"],
            stride=layer.stride
        )

    if layer.kind == "affine":
        return ops.channel_affine(
            x, p[layer.name + ".scale"], p[layer.name + ".shift"]
        )

    if layer.kind == "relu":
        return ops.relu(x)

    if layer.kind == "add":
        skip = source if layer.skip == INPUT else outputs[layer.skip]

        if i in net.projected:
            stride = skip.shape[2] // x.shape[2]
            skip = ops.conv2d(
                skip, p[layer.name + ".projection"], None,
                stride=stride, padding=0
            )

        return ops.add(x, skip)

    if layer.kind == "pool":
        return ops.avg_pool2d(x, layer.size)

    if layer.kind == "gap":
        return ops.global_avg_pool(x)

    if layer.kind == "flatten":
        return ops.flatten(x)

    if layer.kind == "fc":
        return ops.add(
            ops.matmul(x, p[layer.name + ".weight"]),
            p[layer.name + ".bias"]
        )


def predict(net, images, batch_size=256):
    """
    Network outputs for a stack of inputs, without recording gradients

    Returns:
        numpy array [N, F]
    """

    images = np.asarray(images, dtype=np.float32)

    out = []

    for start in range(0, images.shape[0], batch_size):
        y, _ = forward(net, images[start:start + batch_size])
        out.append(y.data)

    return np.concatenate(out, axis=0) if len(out) > 0 else \
        np.zeros((0,) + tuple(net.output_shape), dtype=np.float32)


def save_checkpoint(net, directory, extra=None, metadata=None):
    """
    Write the network's parameters as NRTB files plus an index.json
    describing the architecture and naming every parameter file.

    Args:
        net: The NetworkGraph
        directory: The checkpoint directory
        extra: additional named arrays to store (e.g. regularizer logits)
        metadata: JSON-serializable dict stored in the index
    """

    params = OrderedDict(
        (name, p.data) for name, p in net.parameters.items()
    )

    extra = OrderedDict() if extra is None else OrderedDict(extra)

    index = {
        "network": net.spec(),
        "parameters": {},
        "extra": {},
        "metadata": {} if metadata is None else metadata,
    }

    for section, arrays in (("parameters", params), ("extra", extra)):
        for name, array in arrays.items():
            filename = "{}.nrtb".format(name)
            fileio.write_tensor(os.path.join(directory, filename), array)
            index[section][name] = {
                "file": filename,
                "shape": list(np.shape(array)),
            }

    fileio.write_json(os.path.join(directory, "index.json"), index)

    logger.info("saved %d parameters to %s", len(params), directory)


def load_checkpoint(directory):
    """
    Read a checkpoint written by save_checkpoint

    Returns:
        (net, extra, metadata)
    """

    path = os.path.join(directory, "index.json")
    index = fileio.read_json(path)

    try:
        net = NetworkGraph.from_spec(index["network"])
    except (KeyError, TypeError) as e:
        raise FormatError(path, "bad network description ({})".format(e))

    def read_section(section):
        arrays = OrderedDict()

        for name, entry in index.get(section, {}).items():
            array = fileio.read_tensor(os.path.join(directory, entry["file"]))

            if list(array.shape) != list(entry["shape"]):
                raise FormatError(
                    entry["file"],
                    "shape {} doesn't match index {}".format(
                        list(array.shape), entry["shape"]
                    )
                )

            arrays[name] = array

        return arrays

    net.parameters.load_state(read_section("parameters"))

    return net, read_section("extra"), index.get("metadata", {})


def residual_classifier(input_shape, classes, widths=(16, 32, 64), kernel=3,
                        select=None):
    """
    Small residual classifier: a conv stem followed by one residual block
    per width (stride 2 from the second block on), global average pooling
    and a fully-connected head. Taps sit on the stem output and on the
    output of every block, spread uniformly over depth.

    Args:
        input_shape: (C, H, W)
        classes: number of output classes
        widths: channel count of each residual block
        kernel: kernel size of every convolution
        select: positions of the candidate taps to keep (all by default)
    """

    layers = [
        conv("stem.conv", widths[0], kernel),
        affine("stem.affine"),
        relu("stem.relu"),
    ]

    taps = [len(layers) - 1]

    for b, width in enumerate(widths):
        block_input = len(layers) - 1
        stride = 1 if b == 0 else 2
        prefix = "block{}".format(b + 1)

        layers += [
            conv(prefix + ".conv1", width, kernel, stride),
            affine(prefix + ".affine1"),
            relu(prefix + ".relu1"),
            conv(prefix + ".conv2", width, kernel),
            affine(prefix + ".affine2"),
            residual_add(prefix + ".add", block_input),
            relu(prefix + ".relu2"),
        ]

        taps.append(len(layers) - 1)

    layers += [
        gap("head.gap"),
        fc("head.fc", classes),
    ]

    if select is not None:
        try:
            taps = [taps[k] for k in select]
        except IndexError:
            raise ShapeError("taps", "positions in [0, {})".format(len(taps)),
                             list(select))

    return NetworkGraph(layers, input_shape, taps, head="softmax-xent")
