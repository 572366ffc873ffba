import logging

import numpy as np
import pytest
from hypothesis import given
import hypothesis.extra.numpy as hnp
import hypothesis.strategies as st

import common.config
from common.errors import NonFiniteError
from neural.similarity import SimilarityMatrix
from regularizer.loss import (
    GammaWeights,
    RegularizerConfig,
    combined_similarity,
    layer_similarity,
    pair_loss,
    pair_means,
    similarity_loss,
    total_loss,
    usable_layers,
)
from regularizer.targets import make_control_target, permute_target
from tensor import ops
from tensor.gradcheck import check_gradients
from tensor.tape import Tensor


def features(*shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


def tensors(arrays):
    return [Tensor(a, dtype=np.float64) for a in arrays]


def test_layer_similarity_is_scale_and_offset_invariant():
    taps_i = [features(4, 6), features(4, 3, seed=1)]
    taps_j = [features(4, 6, seed=2), features(4, 3, seed=3)]
    offsets = [features(6, seed=4), features(3, seed=5)]

    def similarity(c, shift):
        a = [c * t + shift * o for t, o in zip(taps_i, offsets)]
        b = [c * t + shift * o for t, o in zip(taps_j, offsets)]

        a, b = tensors(a), tensors(b)
        return layer_similarity(a, b, pair_means(a, b)).data

    base = similarity(1.0, 0.0)

    assert base.shape == (4, 2)
    assert np.all(np.abs(base) <= 1 + 1e-9)
    np.testing.assert_allclose(similarity(7.5, 3.0), base, atol=1e-9)


@given(hnp.arrays(np.float32, 4,
                  elements=st.floats(-20, 20, width=32)))
def test_gamma_is_on_the_simplex(logits):
    gamma = GammaWeights(4, logits)

    p = gamma.probabilities()

    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(gamma.tensor().data, p, rtol=1e-4,
                               atol=1e-6)


def test_gamma_starts_uniform():
    np.testing.assert_allclose(GammaWeights(3).probabilities(), [1 / 3] * 3)

    with pytest.raises(ValueError):
        GammaWeights(3, [0.0, 1.0])


def test_one_hot_gamma_selects_a_layer():
    per_layer = features(5, 3)

    s = combined_similarity(per_layer, np.array([0.0, 1.0, 0.0]))

    np.testing.assert_allclose(s.data, per_layer[:, 1], rtol=1e-6)


def test_loss_vanishes_on_the_target():
    s = np.array([-0.9, -0.2, 0.0, 0.5, 0.99])

    losses = similarity_loss(Tensor(s, dtype=np.float64), s)

    np.testing.assert_allclose(losses.data, 0.0, atol=1e-12)


def test_clamp_keeps_the_loss_finite():
    losses = similarity_loss(Tensor(np.array([1.0, -1.0]), dtype=np.float64),
                             np.array([-1.0, 1.0]))

    assert np.all(np.isfinite(losses.data))
    # arctanh(1 - 1e-6) ~ 7.25
    assert losses.data[0] == pytest.approx((2 * np.arctanh(1 - 1e-6)) ** 2)


def test_non_finite_similarity_rejected():
    with pytest.raises(NonFiniteError):
        similarity_loss(Tensor(np.array([np.nan])), np.array([0.0]))

    with pytest.raises(NonFiniteError):
        similarity_loss(Tensor(np.array([0.0])), np.array([np.inf]))


def test_degenerate_layers_drop_out_per_pair():
    taps_i = [features(3, 4), features(3, 2, seed=1)]
    taps_j = [features(3, 4, seed=2), features(3, 2, seed=3)]

    #
    # Put the second pair's first image on the batch mean of layer 0
    #
    rest = np.concatenate([np.delete(taps_i[0], 1, axis=0), taps_j[0]])
    taps_i[0][1] = rest.mean(axis=0)

    a, b = tensors(taps_i), tensors(taps_j)
    means = pair_means(a, b)

    mask = usable_layers(a, b, means)

    assert mask.tolist() == [[True, True], [False, True], [True, True]]
    assert mask.any(axis=1).all()

    per_layer = layer_similarity(a, b, means, mask)
    s = combined_similarity(per_layer, np.array([0.9, 0.1]), mask)

    assert np.all(np.isfinite(per_layer.data))
    assert s.data[1] == pytest.approx(per_layer.data[1, 1])
    assert s.data[0] == pytest.approx(0.9 * per_layer.data[0, 0] +
                                      0.1 * per_layer.data[0, 1])

    usage = np.zeros(2, dtype=np.int64)
    loss, used = pair_loss(a, b, np.zeros(3), GammaWeights(2), usage=usage)

    assert used == 3
    assert usage.tolist() == [2, 3]
    assert np.isfinite(loss.item())


def test_dead_layer_leaves_the_healthy_one():
    healthy_i, healthy_j = features(4, 5), features(4, 5, seed=1)
    dead = np.zeros((4, 3))
    targets = np.random.default_rng(2).uniform(-0.5, 0.5, 4)

    usage = np.zeros(2, dtype=np.int64)
    loss, used = pair_loss(tensors([dead, healthy_i]),
                           tensors([dead, healthy_j]), targets,
                           GammaWeights(2, [3.0, -3.0]), usage=usage)
    alone, _ = pair_loss(tensors([healthy_i]), tensors([healthy_j]), targets,
                         GammaWeights(1))

    assert used == 4
    assert usage.tolist() == [0, 4]
    assert loss.item() == pytest.approx(alone.item())


def test_masked_combination_gradients():
    mask = np.array([[True, False, True], [False, True, True],
                     [True, True, True], [False, False, True]])
    arrays = [np.random.default_rng(0).uniform(-0.9, 0.9, (4, 3)),
              features(3, seed=1)]

    def fn(per_layer, logits):
        return ops.total(combined_similarity(per_layer, ops.softmax(logits),
                                             mask))

    assert check_gradients(fn, arrays, step=1e-5) < 1e-5


def test_batch_without_usable_pairs():
    # one pair of identical images, both on the batch mean
    same = features(1, 4)
    a, b = tensors([same]), tensors([same])

    loss, used = pair_loss(a, b, np.zeros(1), GammaWeights(1))

    assert loss is None
    assert used == 0


def test_pair_loss_gradients():
    arrays = [features(5, 4), features(5, 3, seed=1), features(5, 4, seed=2),
              features(5, 3, seed=3), features(2, seed=4)]
    targets = np.random.default_rng(5).uniform(-0.8, 0.8, 5)

    def fn(ai, aj, bi, bj, logits):
        loss, _ = pair_loss([ai, aj], [bi, bj], targets, ops.softmax(logits))
        return loss

    assert check_gradients(fn, arrays, step=1e-5) < 1e-5


def test_total_loss():
    task = Tensor(np.array(1.5))
    sim = Tensor(np.array(0.25))

    breakdown = total_loss(task, sim, 4.0, gamma=np.array([0.5, 0.5]),
                           pairs=8)

    assert breakdown.total == pytest.approx(2.5)
    assert breakdown.similarity == pytest.approx(0.25)
    assert breakdown.gamma == [0.5, 0.5]

    plain = total_loss(task, sim, 0.0)

    assert plain.total == pytest.approx(1.5)
    assert plain.tensor is task

    assert total_loss(task, None, 4.0).similarity == 0.0


def test_regularizer_config_validation():
    RegularizerConfig().validate()

    for bad in ({"alpha": -1.0}, {"clamp": 0.5}, {"taps": []},
                {"target": "oracle"}):
        with pytest.raises(common.config.ConfigValueError):
            RegularizerConfig(**bad).validate()


@pytest.fixture
def target():
    rng = np.random.default_rng(0)
    a = rng.uniform(-1, 1, (6, 6))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 1.0)

    return SimilarityMatrix("neural-target", a, np.arange(10, 16))


def test_permuted_target_keeps_values(target):
    p = [2, 0, 1, 5, 4, 3]

    shuffled = permute_target(target, p)

    assert shuffled.kind == "shuffle"
    assert shuffled.matrix[0, 1] == target.matrix[2, 0]
    np.testing.assert_allclose(np.sort(shuffled.matrix, axis=None),
                               np.sort(target.matrix, axis=None))
    np.testing.assert_array_equal(shuffled.stimulus_ids, target.stimulus_ids)

    with pytest.raises(ValueError):
        permute_target(target, [0, 0, 1, 2, 3, 4])


@pytest.mark.parametrize("kind, mode", [("shuffle", "permute"),
                                        ("shuffle", "entrywise"),
                                        ("random", "permute")])
def test_control_targets(target, kind, mode):
    control = make_control_target(target, kind, seed=3, shuffle_mode=mode)

    control.check()
    assert control.kind == kind
    np.testing.assert_allclose(np.diag(control.matrix), 1.0)
    assert np.all(np.isin(control.off_diagonal(), target.off_diagonal()))

    if kind == "shuffle":
        np.testing.assert_allclose(np.sort(control.off_diagonal()),
                                   np.sort(target.off_diagonal()))

    again = make_control_target(target, kind, seed=3, shuffle_mode=mode)
    np.testing.assert_array_equal(control.matrix, again.matrix)


def test_control_target_seeds_differ(target):
    a = make_control_target(target, "random", seed=0)
    b = make_control_target(target, "random", seed=1)

    assert not np.array_equal(a.matrix, b.matrix)


def test_unseeded_control_target_is_logged(target, caplog):
    caplog.set_level(logging.INFO, logger="regularizer.targets")

    control = make_control_target(target, "shuffle", seed=None)

    control.check()
    assert "seed None" in caplog.text


def test_unknown_control_kind(target):
    with pytest.raises(ValueError):
        make_control_target(target, "neural", seed=0)

    with pytest.raises(ValueError):
        make_control_target(target, "shuffle", seed=0, shuffle_mode="rows")
