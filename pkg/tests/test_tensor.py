import functools

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from common.errors import NonFiniteError, ShapeError, TapeError
from tensor import network, ops
from tensor.gradcheck import check_gradients, numeric_gradient, \
    relative_error
from tensor.optim import SGD, lr_schedule, sgd_step
from tensor.tape import ParameterSet, Tape, Tensor


TOLERANCE = 1e-5

SEEDS = range(10)


def random(*shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


def inputs(shapes, seed, scale=1.0):
    return [scale * random(*shape, seed=100 * seed + i)
            for i, shape in enumerate(shapes)]


#
# (function, input shapes, input scale)
#
PRIMITIVES = [
    (lambda a, b: ops.total(ops.mul(ops.add(a, b), ops.sub(a, b))),
     [(3, 4), (3, 4)], 1.0),
    (lambda a, b: ops.total(ops.div(a, ops.add(ops.square(b), 1.0))),
     [(2, 5), (5,)], 1.0),
    (lambda a: ops.total(ops.sqrt(ops.add(ops.square(a), 1.0))),
     [(4, 3)], 1.0),
    (lambda a: ops.mean(ops.arctanh(ops.scale(ops.clip(a, -0.9, 0.9), 0.5))),
     [(6,)], 0.3),
    (lambda a, b: ops.total(ops.matmul(a, b)), [(3, 4), (4, 2)], 1.0),
    (lambda a: ops.total(ops.mul(ops.softmax(a), random(2, 5, seed=3))),
     [(2, 5)], 1.0),
    (lambda a: ops.softmax_cross_entropy(a, np.array([0, 2, 1])),
     [(3, 4)], 1.0),
    (lambda a, b: ops.total(ops.mul(ops.stack([a, b], axis=-1),
                                    random(3, 2, seed=4))),
     [(3,), (3,)], 1.0),
    (lambda a, b: ops.total(ops.mul(ops.stack([a, b]), random(2, seed=4))),
     [(), ()], 1.0),
    (lambda a: ops.total(ops.square(ops.take(a, [0, 2, 2]))), [(3, 2)], 1.0),
    (lambda a: ops.total(ops.pick(a, [1, 0])), [(2, 3)], 1.0),
    (lambda a: ops.mse(a, random(2, 3, seed=2)), [(2, 3)], 1.0),
    (lambda a: ops.total(ops.mul(ops.relu(a), random(4, 3, seed=6))),
     [(4, 3)], 1.0),
]


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("fn, shapes, scale", PRIMITIVES)
def test_primitive_gradients(fn, shapes, scale, seed):
    assert check_gradients(fn, inputs(shapes, seed, scale),
                           step=1e-6) < TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_conv_layer_gradients(seed):
    def fn(x, w, b):
        y = ops.conv2d(x, w, b, stride=2)
        return ops.total(ops.square(ops.relu(y)))

    arrays = inputs([(2, 2, 6, 6), (3, 2, 3, 3), (3,)], seed)

    assert check_gradients(fn, arrays, step=1e-6) < TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_pooling_and_affine_gradients(seed):
    def fn(x, gain, shift):
        y = ops.channel_affine(x, gain, shift)
        return ops.total(ops.mul(ops.global_avg_pool(ops.avg_pool2d(y, 2)),
                                 random(2, 3, seed=5)))

    arrays = inputs([(2, 3, 4, 4), (3,), (3,)], seed)

    assert check_gradients(fn, arrays, step=1e-6) < TOLERANCE


def test_backward_needs_a_scalar():
    a = Tensor(np.ones(3), requires_grad=True)

    with Tape() as tape:
        y = ops.square(a)

        with pytest.raises(TapeError):
            tape.backward(y)


def test_unused_parameters_get_zero_gradients():
    params = ParameterSet()
    used = params.add("used", np.ones(2))
    params.add("unused", np.ones(3))

    with Tape(params) as tape:
        grads = tape.backward(ops.total(ops.square(used)))

    np.testing.assert_allclose(grads["used"], [2.0, 2.0])
    np.testing.assert_array_equal(grads["unused"], np.zeros(3))


def test_no_recording_outside_a_tape():
    a = Tensor(np.ones(2), requires_grad=True)

    y = ops.square(a)

    assert not y.requires_grad


def test_shared_input_gradients_accumulate():
    a = Tensor(np.array([3.0]), requires_grad=True, dtype=np.float64)

    with Tape() as tape:
        tape.watch({"a": a})
        grads = tape.backward(ops.total(ops.mul(a, a)))

    np.testing.assert_allclose(grads["a"], [6.0])


def test_classifier_shapes_and_taps(classifier):
    out, taps = network.forward(classifier, np.zeros((5, 1, 8, 8)))

    assert out.shape == (5, 3)
    assert len(taps) == 3
    assert [t.shape[0] for t in taps] == [5, 5, 5]
    assert taps[0].shape[1] == 4 * 8 * 8
    assert taps[-1].shape[1] == 6 * 4 * 4


def naive_conv(x, w, b, stride):
    n, c, h, width = x.shape
    f, _, k, _ = w.shape
    p = k // 2
    padded = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    oh = (h + 2 * p - k) // stride + 1
    ow = (width + 2 * p - k) // stride + 1
    out = np.zeros((n, f, oh, ow))

    for i in range(oh):
        for j in range(ow):
            patch = padded[:, :, i * stride:i * stride + k,
                           j * stride:j * stride + k]
            out[:, :, i, j] = np.einsum("nchw,fchw->nf", patch, w) + b

    return out


@pytest.mark.parametrize("stride, kernel", [(1, 3), (2, 3), (1, 1), (2, 5)])
def test_conv_matches_loops(stride, kernel):
    x = random(2, 3, 8, 8)
    w = random(4, 3, kernel, kernel, seed=1)
    b = random(4, seed=2)

    y = ops.conv2d(Tensor(x, dtype=np.float64), Tensor(w, dtype=np.float64),
                   Tensor(b, dtype=np.float64), stride=stride)

    np.testing.assert_allclose(y.data, naive_conv(x, w, b, stride),
                               rtol=1e-10, atol=1e-10)


def reference_classifier(p, x, blocks):
    """
    Loop-based forward pass of residual_classifier, written out by hand
    """

    def affine(y, name):
        return y * p[name + ".scale"][None, :, None, None] + \
            p[name + ".shift"][None, :, None, None]

    def conv(y, name, stride=1):
        return naive_conv(y, p[name + ".weight"], p[name + ".bias"], stride)

    h = np.maximum(affine(conv(x, "stem.conv"), "stem.affine"), 0)
    taps = [h]

    for b in range(1, blocks + 1):
        name = "block{}".format(b)
        stride = 1 if b == 1 else 2

        y = np.maximum(affine(conv(h, name + ".conv1", stride),
                              name + ".affine1"), 0)
        y = affine(conv(y, name + ".conv2"), name + ".affine2")

        skip = h

        if name + ".add.projection" in p:
            skip = np.einsum("oc,nchw->nohw", p[name + ".add.projection"][
                :, :, 0, 0], h[:, :, ::stride, ::stride])

        h = np.maximum(y + skip, 0)
        taps.append(h)

    logits = h.mean(axis=(2, 3)) @ p["head.fc.weight"] + p["head.fc.bias"]

    return logits, [t.reshape(t.shape[0], -1) for t in taps]


def test_classifier_matches_reference():
    net = network.residual_classifier((1, 8, 8), 3, widths=(4, 6), kernel=3)
    rng = np.random.default_rng(7)

    for p in net.parameters.values():
        p.data = 0.5 * rng.standard_normal(p.shape)

    x = rng.random((3, 1, 8, 8))
    params = {name: p.data for name, p in net.parameters.items()}

    out, taps = network.forward(net, x)
    expected, expected_taps = reference_classifier(params, x, 2)

    np.testing.assert_allclose(out.data, expected, rtol=1e-9, atol=1e-9)

    for t, e in zip(taps, expected_taps):
        np.testing.assert_allclose(t.data, e, rtol=1e-9, atol=1e-9)


def test_zero_weights_give_equal_logits(classifier):
    for p in classifier.parameters.values():
        p.data = np.zeros_like(p.data)

    out, _ = network.forward(classifier, random(4, 1, 8, 8))

    np.testing.assert_array_equal(out.data, np.zeros((4, 3)))


def test_identity_conv_taps_the_pixels():
    net = network.NetworkGraph(
        [network.conv("c", 1, kernel=1), network.flatten("f")], (1, 4, 4),
        [0])
    net.parameters["c.weight"].data = np.ones((1, 1, 1, 1), dtype=np.float32)

    images = np.random.default_rng(0).random((2, 1, 4, 4)).astype(np.float32)

    _, taps = network.forward(net, images)

    np.testing.assert_array_equal(taps[0].data, images.reshape(2, -1))


def test_gradient_of_a_parameter_sum(classifier):
    with Tape(classifier.parameters) as tape:
        loss = functools.reduce(
            ops.add, [ops.total(p) for p in classifier.parameters.values()])
        grads = tape.backward(loss)

    for name, p in classifier.parameters.items():
        np.testing.assert_array_equal(grads[name], np.ones(p.shape))


def test_zero_loss_has_zero_gradients(classifier):
    with Tape(classifier.parameters) as tape:
        out, _ = network.forward(classifier, random(2, 1, 8, 8))
        grads = tape.backward(ops.scale(ops.total(out), 0.0))

    for g in grads.values():
        assert not np.any(g)


def test_tap_selection():
    net = network.residual_classifier((1, 8, 8), 2, widths=(4, 4),
                                      select=[2])

    assert len(net.taps) == 1

    with pytest.raises(ShapeError):
        network.residual_classifier((1, 8, 8), 2, widths=(4,), select=[5])


def test_input_shape_mismatch_names_the_layer(classifier):
    with pytest.raises(ShapeError) as e:
        network.forward(classifier, np.zeros((2, 1, 6, 6)))

    assert "stem.conv" in str(e.value)


def test_network_gradient_matches_finite_differences():
    net = network.residual_classifier((1, 4, 4), 2, widths=(2,), kernel=3)
    net.initialize(np.random.default_rng(1))

    for p in net.parameters.values():
        p.data = p.data.astype(np.float64)

    images = np.random.default_rng(2).random((3, 1, 4, 4))
    labels = np.array([0, 1, 1])
    name = "block1.conv1.weight"

    with Tape(net.parameters) as tape:
        out, _ = network.forward(net, images)
        grads = tape.backward(ops.softmax_cross_entropy(out, labels))

    def loss(weight):
        net.parameters[name].data = weight
        out, _ = network.forward(net, images)
        return float(ops.softmax_cross_entropy(out, labels).data)

    weight = net.parameters[name].data.copy()
    numeric = numeric_gradient(loss, [weight], 0, 1e-5)

    assert relative_error(grads[name], numeric) < 1e-4


def test_checkpoint_round_trip(tmp_path, classifier):
    directory = str(tmp_path / "ckpt")
    images = np.random.default_rng(0).random((4, 1, 8, 8))

    network.save_checkpoint(classifier, directory, extra={"g": np.ones(3)},
                            metadata={"seed": 4})
    net, extra, metadata = network.load_checkpoint(directory)

    np.testing.assert_array_equal(network.predict(net, images),
                                  network.predict(classifier, images))
    np.testing.assert_array_equal(extra["g"], np.ones(3))
    assert metadata == {"seed": 4}
    assert net.taps == classifier.taps


def test_sgd_without_momentum_is_plain_descent():
    params = ParameterSet()
    p = params.add("p", np.array([1.0, -2.0]))

    sgd_step(params, {"p": np.array([0.5, 0.5])}, lr=0.1)

    np.testing.assert_allclose(p.data, [0.95, -2.05], rtol=1e-6)


def test_sgd_momentum_and_weight_decay():
    params = ParameterSet()
    p = params.add("p", np.array([1.0]))
    optimizer = SGD(params, lr=0.1, momentum=0.5, weight_decay=0.1)

    optimizer.step({"p": np.array([1.0])})
    # v = 1 + 0.1 * 1 = 1.1, p = 1 - 0.11
    np.testing.assert_allclose(p.data, [0.89], rtol=1e-6)

    optimizer.step({"p": np.array([1.0])})
    # v = 0.5 * 1.1 + 1 + 0.1 * 0.89 = 1.639
    np.testing.assert_allclose(p.data, [0.89 - 0.1639], rtol=1e-5)


def test_sgd_rejects_non_finite_gradients_before_updating():
    params = ParameterSet()
    a = params.add("a", np.array([1.0]))
    params.add("b", np.array([1.0]))

    with pytest.raises(NonFiniteError):
        sgd_step(params, {"a": np.array([1.0]), "b": np.array([np.nan])},
                 lr=0.1)

    assert a.data[0] == 1.0


@given(st.integers(min_value=0, max_value=200),
       st.floats(min_value=1e-4, max_value=1.0))
def test_lr_schedule_arithmetic(epoch, base):
    expected = base * 0.3 ** ((epoch % 20) // 4)

    assert lr_schedule(epoch, base) == pytest.approx(expected)
    assert lr_schedule(epoch, base) == lr_schedule(epoch + 20, base)


def test_lr_schedule_values():
    assert lr_schedule(0, 0.1) == 0.1
    assert lr_schedule(3, 0.1) == 0.1
    assert lr_schedule(4, 0.1) == pytest.approx(0.03)
    assert lr_schedule(19, 0.1) == pytest.approx(0.1 * 0.3 ** 4)
    assert lr_schedule(20, 0.1) == 0.1
