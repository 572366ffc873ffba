"""
Minimal adversarial perturbations.

Both attacks run on a batch of samples at once. An attack returns, per
sample, the smallest perturbation it found that moves the model's decision
away from the true label, together with the hyperparameters of the run
that found it.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from common.errors import AttackError


logger = logging.getLogger(__name__)

NORMS = ("linf", "l2")

LINF_ROUNDS = 12
LINF_BRACKET = 0.5

LINE_STEPS = 8

#
# The boundary attack aims slightly past the linearized boundary so that
# its candidates land on the adversarial side
#
OVERSHOOT = 1e-3


@dataclass
class AttackResult:
    """
    Per-sample outcome of an attack. Where `found` is False the distance
    holds the score given to an unfound adversarial and the adversarial is
    the original image.
    """

    norm: str
    distances: np.ndarray
    found: np.ndarray
    adversarials: np.ndarray
    queries: np.ndarray
    hyperparameters: list
    history: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.distances.shape[0]


def perturbation_norm(x, adversarial, norm):
    d = np.asarray(adversarial, dtype=np.float64) - \
        np.asarray(x, dtype=np.float64)
    d = d.reshape(d.shape[0], int(np.prod(d.shape[1:])))

    if norm == "linf":
        return np.abs(d).max(axis=1) if d.shape[1] > 0 else \
            np.zeros(d.shape[0])

    if norm == "l2":
        return np.linalg.norm(d, axis=1)

    raise ValueError("unknown norm '{}'".format(norm))


def unfound_l2(x):
    """
    Largest L2 distance inside the pixel box from each image
    """

    x = np.asarray(x, dtype=np.float64)

    far = np.maximum(x, 1 - x)

    return np.linalg.norm(far.reshape(x.shape[0], int(np.prod(x.shape[1:]))),
                          axis=1)


def pgd_attack(model, x, y, eps, step, iters, rng=None, random_start=False):
    """
    Projected gradient descent under an L-infinity budget.

    Signed cross-entropy gradient steps, each followed by projection onto
    the eps-ball around x and onto [0, 1]. A sample stops at the first
    iterate the model misclassifies.

    Args:
        model: FrozenModel
        x: [N, H, W] images in [0, 1]
        y: [N] labels
        eps: budget, scalar or per sample
        step: step size
        iters: number of iterations
        rng: Generator for the random start
        random_start: start from a uniform point in the eps-ball

    Returns:
        (adversarials [N, H, W], success [N] bool). Samples whose gradient
        turned non-finite are reported as failures.
    """

    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]

    eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), (n,)).copy()

    if np.any(eps < 0):
        raise ValueError("eps must be >= 0")

    e = eps[:, None, None]
    lo = np.clip(x - e, 0, 1).astype(np.float32)
    hi = np.clip(x + e, 0, 1).astype(np.float32)

    adv = x.copy()

    if random_start and rng is not None:
        adv = np.clip(adv + rng.uniform(-1, 1, x.shape) * e, lo,
                      hi).astype(np.float32)

    success = model.predict(adv) != y if n > 0 else np.zeros(0, dtype=bool)
    best = adv.copy()
    active = ~success

    for _ in range(iters):
        idx = np.flatnonzero(active)

        if idx.shape[0] == 0:
            break

        _, g = model.loss_gradient(adv[idx], y[idx])

        finite = np.all(np.isfinite(g), axis=(1, 2))

        if not np.all(finite):
            logger.warning("%d samples with non-finite gradients",
                           int(np.sum(~finite)))
            active[idx[~finite]] = False
            idx, g = idx[finite], g[finite]

        adv[idx] = np.clip(adv[idx] + step * np.sign(g), lo[idx],
                           hi[idx]).astype(np.float32)

        hit = model.predict(adv[idx]) != y[idx]

        best[idx[hit]] = adv[idx[hit]]
        success[idx[hit]] = True
        active[idx[hit]] = False

    return best, success


def min_linf_distance(model, x, y, grid, rounds=LINF_ROUNDS,
                      bracket=LINF_BRACKET, repetitions=1, seed=0):
    """
    Smallest L-infinity perturbation found by fixed-budget PGD inside a
    bisection over the budget, minimized over a grid of (step, iterations)
    and over repetitions (random starts when repetitions > 1).

    Samples misclassified without perturbation score 0; samples PGD can't
    flip at the top of the bracket score the bracket top.

    Returns:
        AttackResult with norm "linf"
    """

    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]

    start = model.queries

    best = np.full(n, np.inf)
    adversarials = x.copy()
    hyper = [None] * n

    wrong = model.predict(x) != y

    for g, (step, iters) in enumerate(grid):
        for rep in range(repetitions):
            rng = np.random.default_rng([seed, g, rep])
            random_start = repetitions > 1

            idx = np.flatnonzero(~wrong)

            adv, ok = pgd_attack(model, x[idx], y[idx], bracket, step, iters,
                                 rng, random_start)

            idx, adv = idx[ok], adv[ok]

            lo = np.zeros(idx.shape[0])
            hi = np.full(idx.shape[0], float(bracket))

            for r in range(rounds):
                mid = (lo + hi) / 2

                cand, hit = pgd_attack(model, x[idx], y[idx], mid, step,
                                       iters, rng, random_start)

                hi[hit] = mid[hit]
                adv[hit] = cand[hit]
                lo[~hit] = mid[~hit]

                logger.debug("pgd step %g iters %d rep %d round %d: "
                             "median bracket [%.5f, %.5f]", step, iters, rep,
                             r, float(np.median(lo)) if lo.size else 0.0,
                             float(np.median(hi)) if hi.size else 0.0)

            d = perturbation_norm(x[idx], adv, "linf")

            better = d < best[idx]

            for k in np.flatnonzero(better):
                i = idx[k]
                best[i] = d[k]
                adversarials[i] = adv[k]
                hyper[i] = {
                    "attack": "pgd",
                    "step": float(step),
                    "iterations": int(iters),
                    "repetition": rep,
                    "epsilon": float(hi[k]),
                }

    best[wrong] = 0.0

    for i in np.flatnonzero(wrong):
        hyper[i] = {"attack": "clean"}

    found = np.isfinite(best)

    return AttackResult(
        "linf",
        np.where(found, best, float(bracket)),
        found,
        adversarials,
        np.full(n, model.queries - start),
        hyper
    )


def line_search(model, y, benign, adversarial, steps=LINE_STEPS):
    """
    Bisection along the segment from a benign to an adversarial point.
    Returns the adversarial point closest to `benign` that was verified,
    so every returned point is adversarial.
    """

    benign = np.asarray(benign, dtype=np.float64)
    adversarial = np.asarray(adversarial, dtype=np.float64)

    lo = np.zeros(benign.shape[0])
    hi = np.ones(benign.shape[0])

    for _ in range(steps):
        mid = (lo + hi) / 2
        z = benign + mid[:, None, None] * (adversarial - benign)

        hit = model.predict(z.astype(np.float32)) != y

        hi = np.where(hit, mid, hi)
        lo = np.where(hit, lo, mid)

    return (benign + hi[:, None, None] * (adversarial - benign)).astype(
        np.float32)


def boundary_attack_l2(model, x_orig, y, x_start, queries=200, step=0.01,
                       line_steps=LINE_STEPS):
    """
    Gradient-based boundary attack minimizing the L2 perturbation.

    The attack first moves from x_start onto the decision boundary by a
    line search towards x_orig. Each iteration then linearizes the margin
    between the true class and the strongest other class at the current
    point and steps towards the point of that linearized boundary closest
    to x_orig. The step stays within the pixel box and within
    `step` times the current distance of the current point. A candidate
    that isn't adversarial is pulled back by a line search towards the
    current point; an adversarial one is moved onto the boundary by a line
    search from x_orig.

    Args:
        model: FrozenModel
        x_orig: [N, H, W] images
        y: [N] labels
        x_start: [N, H, W] adversarial starting points
        queries: model evaluations allowed per sample
        step: trust radius relative to the current distance

    Returns:
        AttackResult with norm "l2"; history [N, queries] holds the best
        distance after every query
    """

    x = np.asarray(x_orig, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]

    history = []

    wrong = model.predict(x) != y

    best = np.zeros(n)
    adversarials = x.copy()

    idx = np.flatnonzero(~wrong)

    start = np.asarray(x_start, dtype=np.float32)[idx]

    bad = model.predict(start) == y[idx] if idx.shape[0] > 0 else \
        np.zeros(0, dtype=bool)

    if np.any(bad):
        raise AttackError(
            "starting point of sample {} is classified as its true label"
            .format(int(idx[np.flatnonzero(bad)[0]]))
        )

    x0, y0 = x[idx], y[idx]

    best[idx] = perturbation_norm(x0, start, "l2")
    adversarials[idx] = start

    used = 2

    def account(k):
        for _ in range(k):
            history.append(best.copy())

    account(2)

    def keep(points):
        d = perturbation_norm(x0, points, "l2")
        better = d < best[idx]
        best[idx[better]] = d[better]
        adversarials[idx[better]] = points[better]

    if idx.shape[0] > 0 and used + line_steps <= queries:
        current = line_search(model, y0, x0, start, line_steps)
        used += line_steps
        keep(current)
        account(line_steps)
    else:
        current = start

    while idx.shape[0] > 0 and used + 2 + line_steps <= queries:
        margin, g = model.margin_gradient(current, y0)

        c64 = current.astype(np.float64)
        x64 = x0.astype(np.float64)

        distance = perturbation_norm(x0, current, "l2")
        gg = (g * g).sum(axis=(1, 2))
        gg = np.where(gg > 0, gg, 1.0)

        #
        # Closest point to x_orig on the plane where the linearized margin
        # equals a small positive overshoot
        #
        aim = OVERSHOOT * np.sqrt(gg) * distance
        lam = (margin + (g * (x64 - c64)).sum(axis=(1, 2)) - aim) / gg
        target = x64 - lam[:, None, None] * g

        move = target - c64
        length = np.linalg.norm(move.reshape(move.shape[0], -1), axis=1)
        radius = step * distance
        shrink = np.where(length > radius, radius / np.where(length > 0,
                                                             length, 1.0), 1.0)

        candidate = np.clip(c64 + shrink[:, None, None] * move, 0,
                            1).astype(np.float32)

        hit = model.predict(candidate) != y0

        benign = np.where(hit[:, None, None], x0, candidate)
        adversarial = np.where(hit[:, None, None], candidate, current)

        current = line_search(model, y0, benign, adversarial, line_steps)

        used += 2 + line_steps
        keep(current)
        account(2 + line_steps)

    account(queries - len(history))

    logger.debug("boundary attack step %g: median distance %.5f after %d "
                 "queries", step, float(np.median(best)), used)

    hyper = [
        {"attack": "clean"} if wrong[i] else
        {"attack": "boundary", "step": float(step), "queries": int(queries)}
        for i in range(n)
    ]

    return AttackResult(
        "l2",
        best,
        np.ones(n, dtype=bool),
        adversarials,
        np.full(n, min(used, queries)),
        hyper,
        np.stack(history[:queries], axis=1) if queries > 0 else
        np.zeros((n, 0))
    )


def starting_points(x, y, pool, pool_predictions, rng=None):
    """
    Boundary attack starting points: the nearest (L2) pool image the model
    assigns to a class other than the sample's label, or a random such
    image when rng is given.

    Returns:
        (starts [N, H, W], available [N] bool)
    """

    x = np.asarray(x, dtype=np.float64)
    pool = np.asarray(pool, dtype=np.float64)

    flat = pool.reshape(pool.shape[0], -1)
    starts = np.zeros(x.shape, dtype=np.float32)
    available = np.zeros(x.shape[0], dtype=bool)

    for i in range(x.shape[0]):
        other = np.flatnonzero(pool_predictions != y[i])

        if other.shape[0] == 0:
            continue

        if rng is None:
            d = np.linalg.norm(flat[other] - x[i].reshape(-1), axis=1)
            choice = other[np.argmin(d)]
        else:
            choice = rng.choice(other)

        starts[i] = pool[choice]
        available[i] = True

    return starts, available


def min_l2_distance(model, x, y, pool, steps, queries=200, repetitions=1,
                    seed=0, line_steps=LINE_STEPS):
    """
    Smallest L2 perturbation found by the boundary attack over a grid of
    step sizes and over repetitions. The first repetition starts from the
    nearest differently classified pool image, further ones from random
    differently classified pool images. Samples without a starting point
    score the largest distance possible inside the pixel box.

    Returns:
        AttackResult with norm "l2"; history is the per-query minimum over
        all runs
    """

    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]

    start_queries = model.queries

    pool_predictions = model.predict(pool)

    best = np.full(n, np.inf)
    adversarials = x.copy()
    hyper = [None] * n
    history = np.full((n, queries), np.inf)

    for rep in range(repetitions):
        rng = None if rep == 0 else np.random.default_rng([seed, rep])

        starts, available = starting_points(x, y, pool, pool_predictions, rng)

        idx = np.flatnonzero(available)

        if idx.shape[0] < n:
            logger.warning("%d samples without a differently classified "
                           "starting point", n - idx.shape[0])

        if idx.shape[0] == 0:
            continue

        for s in steps:
            result = boundary_attack_l2(model, x[idx], y[idx], starts[idx],
                                        queries, s, line_steps)

            history[idx] = np.minimum(history[idx], result.history)

            better = result.distances < best[idx]

            for k in np.flatnonzero(better):
                i = idx[k]
                best[i] = result.distances[k]
                adversarials[i] = result.adversarials[k]
                hyper[i] = dict(result.hyperparameters[k], repetition=rep)

    found = np.isfinite(best)
    box = unfound_l2(x)

    history = np.where(np.isfinite(history), history, box[:, None])

    return AttackResult(
        "l2",
        np.where(found, best, box),
        found,
        adversarials,
        np.full(n, model.queries - start_queries),
        hyper,
        history
    )


def verify_adversarial(model, x, y, result, tolerance=1e-5):
    """
    Re-check every adversarial an attack reported, independently of the
    attack: the model's decision differs from the label, the pixels stay in
    [0, 1] and the perturbation norm doesn't exceed the reported distance.

    Returns:
        [N] bool, True for verified samples and for samples without an
        adversarial
    """

    adv = np.asarray(result.adversarials, dtype=np.float32)

    flipped = model.predict(adv) != np.asarray(y)
    boxed = np.all((adv >= 0) & (adv <= 1), axis=(1, 2))
    within = perturbation_norm(x, adv, result.norm) <= \
        result.distances + tolerance

    return np.where(result.found, flipped & boxed & within, True)
