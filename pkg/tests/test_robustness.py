import numpy as np
import pytest

from common.errors import AttackError, DatasetError
from common.stats import standard_error
from robustness.attacks import (
    boundary_attack_l2,
    min_l2_distance,
    min_linf_distance,
    perturbation_norm,
    pgd_attack,
    verify_adversarial,
)
from robustness.model import FrozenModel, margins
from robustness.noise import check_sigmas, noise_eval
from robustness.score import robustness_score, score_attack
from synth.tasks import synth_classification
from tensor import network


def linear_model(weight, bias):
    """
    Two-class model on 2x2 images: logits = flatten(x) @ weight + bias
    """

    net = network.NetworkGraph(
        [network.flatten("flatten"), network.fc("fc", 2)], (1, 2, 2), [0])
    net.initialize(np.random.default_rng(0))

    net.parameters["fc.weight"].data = np.asarray(weight, dtype=np.float32)
    net.parameters["fc.bias"].data = np.asarray(bias, dtype=np.float32)

    return FrozenModel(net)


@pytest.fixture
def threshold_model():
    # class 1 exactly when the pixel sum exceeds 2
    weight = np.zeros((4, 2))
    weight[:, 1] = 1.0

    return linear_model(weight, [0.0, -2.0])


@pytest.fixture
def constant_model():
    return linear_model(np.zeros((4, 2)), [1.0, 0.0])


def images(*rows):
    return np.array(rows, dtype=np.float32).reshape(-1, 2, 2)


def test_predictions_and_margins(threshold_model):
    x = images([0.3] * 4, [0.9] * 4)

    assert threshold_model.predict(x).tolist() == [0, 1]
    assert threshold_model.queries == 1

    m, g = threshold_model.margin_gradient(x, np.array([0, 0]))

    np.testing.assert_allclose(m, [-0.8, 1.6], atol=1e-6)
    np.testing.assert_allclose(g, np.ones((2, 2, 2)), atol=1e-6)
    np.testing.assert_allclose(
        margins(np.array([[1.0, 3.0, 2.0]]), np.array([1])), [-1.0])


def test_linf_distance_of_a_linear_model(threshold_model):
    x = images([0.3] * 4, [0.2, 0.4, 0.3, 0.1], [0.9] * 4)
    y = np.array([0, 0, 0])

    result = min_linf_distance(threshold_model, x, y, [(0.05, 10)])

    assert result.found.tolist() == [True, True, True]
    np.testing.assert_allclose(result.distances, [0.2, 0.25, 0.0],
                               atol=1e-3)
    assert result.hyperparameters[0]["attack"] == "pgd"
    assert result.hyperparameters[2] == {"attack": "clean"}
    assert np.all(verify_adversarial(threshold_model, x, y, result))


def test_linf_unfound_scores_the_bracket(constant_model):
    x = images([0.3] * 4)

    result = min_linf_distance(constant_model, x, np.array([0]),
                               [(0.05, 5)], rounds=4)

    assert not result.found[0]
    assert result.distances[0] == 0.5


def test_l2_distance_of_a_linear_model(threshold_model):
    x = images([0.3] * 4, [0.2, 0.4, 0.3, 0.1])
    y = np.array([0, 0])
    pool = images([0.95, 0.6, 0.9, 0.7], [0.8, 1.0, 0.5, 0.9],
                  [0.1] * 4)

    result = min_l2_distance(threshold_model, x, y, pool, steps=[0.5],
                             queries=200)

    optimal = np.array([0.4, 0.5])

    assert np.all(result.found)
    assert np.all(result.distances >= optimal - 1e-4)
    assert np.all(result.distances <= optimal * 1.05)
    assert np.all(verify_adversarial(threshold_model, x, y, result))

    assert result.history.shape == (2, 200)
    assert np.all(np.diff(result.history, axis=1) <= 0)
    np.testing.assert_allclose(result.history[:, -1], result.distances)


def test_boundary_attack_never_grows_the_distance(threshold_model):
    x = images([0.3] * 4)
    start = images([0.95, 0.6, 0.9, 0.7])

    result = boundary_attack_l2(threshold_model, x, np.array([0]), start,
                                queries=40, step=0.01)

    assert result.distances[0] <= perturbation_norm(x, start, "l2")[0]
    assert result.queries[0] <= 40
    assert threshold_model.predict(result.adversarials)[0] == 1


def test_boundary_attack_needs_adversarial_starts(threshold_model):
    x = images([0.3] * 4)

    with pytest.raises(AttackError):
        boundary_attack_l2(threshold_model, x, np.array([0]),
                           images([0.4] * 4))


def test_l2_unfound_scores_the_box_diagonal(constant_model):
    x = images([0.3] * 4)

    result = min_l2_distance(constant_model, x, np.array([0]),
                             images([0.9] * 4), steps=[0.1], queries=20)

    assert not result.found[0]
    assert result.distances[0] == pytest.approx(np.sqrt(4 * 0.7 ** 2))


def test_verification_catches_bad_adversarials(threshold_model):
    x = images([0.3] * 4)
    y = np.array([0])

    result = min_linf_distance(threshold_model, x, y, [(0.05, 10)])
    result.adversarials[0] = x[0]

    assert not verify_adversarial(threshold_model, x, y, result)[0]


def test_noise_curve(classifier, task):
    model = FrozenModel(classifier)
    clean = np.mean(model.predict(task.images) == task.labels)

    curve = noise_eval(model, task.images, task.labels, [0.0, 0.1, 0.3],
                       seeds=[0, 1])

    assert curve.per_seed.shape == (2, 3)
    assert curve.accuracy[0] == pytest.approx(clean)
    assert curve.sem[0] == 0.0

    again = noise_eval(model, task.images, task.labels, [0.0, 0.1, 0.3],
                       seeds=[0, 1])

    np.testing.assert_array_equal(curve.per_seed, again.per_seed)
    assert len(list(curve.rows())) == 3


def test_noise_curve_sem_by_hand(classifier, task):
    curve = noise_eval(FrozenModel(classifier), task.images, task.labels,
                       [0.0, 0.2, 0.5], seeds=[0, 1, 2, 3])

    v = curve.per_seed
    n = v.shape[0]

    by_hand = []

    for k in range(v.shape[1]):
        mean = sum(v[i, k] for i in range(n)) / n
        spread = sum((v[i, k] - mean) ** 2 for i in range(n)) / (n - 1)
        by_hand.append(np.sqrt(spread) / np.sqrt(n))

    np.testing.assert_allclose(curve.sem, by_hand, rtol=1e-12, atol=1e-15)
    assert standard_error([0.4]) == 0.0
    np.testing.assert_allclose(standard_error([[1.0, 2.0], [3.0, 6.0]]),
                               [1.0, 2.0])


def test_heavy_noise_gives_chance_accuracy(classifier):
    data = synth_classification(classes=3, per_class=100, size=8, seed=9)

    curve = noise_eval(FrozenModel(classifier), data.images, data.labels,
                       [10.0, 20.0], seeds=[0, 1, 2, 3, 4])

    np.testing.assert_allclose(curve.accuracy, 1 / 3, atol=0.05)


def test_pgd_without_budget_returns_the_input(classifier, task):
    model = FrozenModel(classifier)
    x = task.images[:6]

    adversarials, success = pgd_attack(model, x, task.labels[:6], eps=0.0,
                                       step=0.1, iters=5)

    np.testing.assert_array_equal(adversarials, x)
    np.testing.assert_array_equal(success,
                                  model.predict(x) != task.labels[:6])


@pytest.mark.parametrize("sigmas", [[], [-0.1, 0.2], [0.2, 0.1],
                                    [0.1, 0.1]])
def test_bad_noise_levels(sigmas):
    with pytest.raises(ValueError):
        check_sigmas(sigmas)


def test_robustness_score():
    report = robustness_score([0.1, 0.4, 0.2], [True, False, True])

    assert report.median == pytest.approx(0.2)
    assert report.mean == pytest.approx(0.7 / 3)
    assert report.unfound == 1
    assert report.summary()["samples"] == 3

    with pytest.raises(DatasetError):
        robustness_score([])


def test_score_attack(threshold_model):
    x = images([0.3] * 4, [0.9] * 4)

    report = score_attack(min_linf_distance(threshold_model, x,
                                            np.array([0, 0]), [(0.05, 10)]))

    assert report.norm == "linf"
    assert report.median == pytest.approx(0.1, abs=1e-3)
    assert [row[3]["attack"] for row in report.rows()] == ["pgd", "clean"]
