"""
Reverse-mode automatic differentiation.

A Tape records every primitive applied to tensors that require gradients
while it is active (``with Tape() as tape:``). Operations are appended in
execution order, which is already a topological order of the graph, so
backward() simply walks the list in reverse.
"""

from collections import OrderedDict

import numpy as np

from common.errors import TapeError


_active = []


class Tensor(object):
    """
    A numpy array plus the bookkeeping needed for differentiation.

    Data is stored row-major as 32-bit reals unless another float dtype is
    requested explicitly (gradient checks run in 64-bit).
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad=False, name=None, dtype=None):
        if isinstance(data, Tensor):
            data = data.data

        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and \
                data.dtype in (np.float32, np.float64) else np.float32

        self.data = np.array(data, dtype=dtype, copy=True, order="C")
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name

    @classmethod
    def wrap(cls, array):
        """
        Wrap a freshly computed array without copying it
        """

        t = cls.__new__(cls)
        t.data = array
        t.requires_grad = False
        t.grad = None
        t.name = None
        return t

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return "Tensor(shape={}, name={}, requires_grad={})".format(
            list(self.shape), self.name, self.requires_grad
        )


def as_tensor(value):
    """
    Wrap a constant (array or scalar) as a Tensor that doesn't require
    gradients. Tensors are returned unchanged.
    """

    if isinstance(value, Tensor):
        return value

    return Tensor(np.asarray(value))


class Operation(object):
    """
    One recorded primitive: its output, its inputs and the function mapping
    the output gradient to one gradient per input (None where the input
    doesn't need one).
    """

    __slots__ = ("name", "output", "inputs", "backward")

    def __init__(self, name, output, inputs, backward):
        self.name = name
        self.output = output
        self.inputs = inputs
        self.backward = backward


class ParameterSet(OrderedDict):
    """
    Ordered mapping of parameter name -> Tensor (requires_grad=True)
    """

    def add(self, name, array):
        tensor = Tensor(array, requires_grad=True, name=name)
        self[name] = tensor
        return tensor

    def state(self):
        """
        Copy of the parameter values keyed by name
        """

        return OrderedDict(
            (name, p.data.copy()) for name, p in self.items()
        )

    def load_state(self, state):
        for name, p in self.items():
            if name not in state:
                raise TapeError("missing parameter '{}'".format(name))

            value = np.asarray(state[name], dtype=p.data.dtype)

            if value.shape != p.data.shape:
                raise TapeError(
                    "parameter '{}' has shape {}, state has {}".format(
                        name, list(p.data.shape), list(value.shape)
                    )
                )

            p.data = value.copy()

    def count(self):
        return int(sum(p.data.size for p in self.values()))


class Tape(object):
    """
    The computation tape: the ordered list of recorded operations and the
    registry of named parameters whose gradients backward() reports.
    """

    def __init__(self, parameters=None):
        self.operations = []
        self.parameters = ParameterSet()

        if parameters is not None:
            self.watch(parameters)

    def __enter__(self):
        _active.append(self)
        return self

    def __exit__(self, *exc):
        _active.remove(self)
        return False

    def watch(self, parameters):
        """
        Register named parameters

        Args:
            parameters: mapping of name -> Tensor
        """

        for name, p in parameters.items():
            p.requires_grad = True
            self.parameters[name] = p

    def record(self, name, output, inputs, backward):
        self.operations.append(Operation(name, output, inputs, backward))

    def backward(self, loss):
        """
        Propagate gradients from a scalar loss back through the recorded
        operations.

        Args:
            loss: A single-element Tensor produced while this tape was
                  active

        Returns:
            An OrderedDict of parameter name -> gradient array, with zeros
            for parameters the loss doesn't depend on
        """

        if not isinstance(loss, Tensor) or loss.data.size != 1:
            raise TapeError(
                "backward needs a scalar loss, got shape {}".format(
                    list(getattr(loss, "shape", ()))
                )
            )

        grads = {id(loss): np.ones_like(loss.data)}

        produced = set()
        leaves = {}

        for op in reversed(self.operations):
            produced.add(id(op.output))

            g = grads.pop(id(op.output), None)

            if g is None:
                continue

            input_grads = op.backward(g)

            for t, gi in zip(op.inputs, input_grads):
                if gi is None or not t.requires_grad:
                    continue

                if gi.shape != t.data.shape:
                    raise TapeError(
                        "{}: gradient shape {} doesn't match input {}".format(
                            op.name, list(gi.shape), list(t.data.shape)
                        )
                    )

                key = id(t)

                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi

                leaves[key] = t

        for key, t in leaves.items():
            if key not in produced:
                t.grad = grads.get(key, np.zeros_like(t.data))

        result = OrderedDict()

        for name, p in self.parameters.items():
            g = grads.get(id(p))

            if g is None:
                g = np.zeros_like(p.data)

            p.grad = g
            result[name] = g

        return result


def current_tape():
    """
    The innermost active Tape, or None outside of any tape
    """

    return _active[-1] if len(_active) > 0 else None


def record(name, output, inputs, backward):
    """
    Record an operation on the active tape when one of its inputs needs a
    gradient. Returns the output tensor.
    """

    tape = current_tape()

    if tape is None or not any(t.requires_grad for t in inputs):
        return output

    output.requires_grad = True

    tape.record(name, output, inputs, backward)

    return output
