#!/usr/bin/env python

import logging
import os
import sys

import numpy as np

import common.cli
import common.view
from common import fileio
from common.errors import AttackError
from common.stats import standard_error
from robustness.attacks import min_l2_distance, min_linf_distance, \
    verify_adversarial
from robustness.config import PRESETS, AdversarialConfig
from robustness.runs import evaluation_samples, group_by_condition, load_models
from robustness.score import score_attack


logger = logging.getLogger(__name__)


def attack_run(model, images, labels, pool, config):
    """
    Run the configured attacks against one model

    Returns:
        dict norm -> (AttackResult, RobustnessReport, verified mask)
    """

    outcome = {}

    for norm in config.norms:
        if norm == "linf":
            result = min_linf_distance(
                model, images, labels, config.pgd_grid(), config.linf_rounds,
                config.linf_bracket, config.repetitions, config.seed
            )
        else:
            result = min_l2_distance(
                model, images, labels, pool, config.boundary_steps,
                config.queries, config.repetitions, config.seed,
                config.line_steps
            )

        verified = verify_adversarial(model, images, labels, result)

        if not np.all(verified):
            logger.error("%d %s adversarials failed verification",
                         int(np.sum(~verified)), norm)

        outcome[norm] = (result, score_attack(result), verified)

    return outcome


@common.cli.entry_point
def main(argv=None):
    """
    Score every trained run by the median minimal adversarial perturbation
    under the L-infinity (PGD) and L2 (boundary attack) norms.
    """

    parser = common.cli.parser(
        "neuralreg eval-adversarial",
        "Minimal adversarial perturbations of trained runs",
        AdversarialConfig
    )

    parser.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        default=None,
        help="Use a named hyperparameter grid instead of the config's"
    )

    args, config = common.cli.setup(parser, argv, AdversarialConfig)

    if args.preset is not None:
        config.apply_preset(args.preset)
        config.validate()

    images, labels = evaluation_samples(config.task, config.split,
                                        config.samples, config.seed)
    pool, _ = evaluation_samples(config.task, config.pool, 10 ** 9,
                                 config.seed)

    models = load_models(config.runs)

    rows = []
    curve = []
    runs = {}

    for name, metadata, model in models:
        condition = metadata.get("condition", name)

        outcome = attack_run(model, images, labels, pool, config)

        runs[name] = {}

        for norm, (result, report, verified) in outcome.items():
            runs[name][norm] = dict(report.summary(),
                                    verified=bool(np.all(verified)),
                                    queries=int(result.queries.max(initial=0)))

            for (i, distance, found, hyper), ok in zip(report.rows(),
                                                        verified):
                hyper = hyper or {}
                rows.append([
                    name, condition, metadata.get("seed"), norm, i, distance,
                    found, bool(ok), hyper.get("attack"), hyper.get("step"),
                    hyper.get("iterations"), hyper.get("repetition"),
                ])

            if result.history is not None:
                for q in config.checkpoints:
                    if 1 <= q <= result.history.shape[1]:
                        curve.append([name, condition, norm, q, float(
                            np.median(result.history[:, q - 1]))])

    conditions = {}

    for condition, names in group_by_condition(models).items():
        conditions[condition] = {}

        for norm in config.norms:
            medians = [runs[n][norm]["median"] for n in names]
            means = [runs[n][norm]["mean"] for n in names]

            conditions[condition][norm] = {
                "median": float(np.mean(medians)),
                "median_sem": standard_error(medians),
                "mean": float(np.mean(means)),
                "runs": names,
            }

    fileio.write_csv(
        os.path.join(config.out, "adversarial.csv"),
        ["run", "condition", "seed", "norm", "sample", "distance", "found",
         "verified", "attack", "step", "iterations", "repetition"],
        rows
    )

    fileio.write_csv(
        os.path.join(config.out, "queries.csv"),
        ["run", "condition", "norm", "queries", "median_distance"],
        curve
    )

    fileio.write_json(os.path.join(config.out, "adversarial.json"), {
        "samples": int(labels.shape[0]),
        "grid": {
            "pgd": config.pgd_grid(),
            "boundary_steps": list(config.boundary_steps),
            "repetitions": config.repetitions,
            "queries": config.queries,
        },
        "conditions": conditions,
        "runs": runs,
    })

    common.cli.record_config(config, config.out, "adversarial-config.json")

    common.view.print_collection(
        "Median minimal perturbation",
        list(conditions.items()),
        [("Condition", lambda e: e[0])] + [
            (norm, lambda e, norm=norm: e[1][norm]["median"])
            for norm in config.norms
        ]
    )

    if not all(v["verified"] for r in runs.values() for v in r.values()):
        raise AttackError("some adversarial examples failed verification")


if __name__ == "__main__":
    sys.exit(main())
