"""
Training suites: every (condition, seed) combination, run one after the
other with isolated state, and the across-seed statistics of their results.
"""

from dataclasses import dataclass
import logging
import os

import numpy as np

from common import fileio
from common.stats import standard_error
from common.errors import DatasetError, NeuralRegError
from regularizer.loss import GAMMA
from regularizer.targets import make_control_target
from tensor import network
from trainer.joint import joint_train


logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    condition: str
    seed: int
    net: object = None
    gamma: object = None
    log: object = None
    error: str = None

    @property
    def ok(self):
        return self.error is None

    @property
    def name(self):
        return run_name(self.condition, self.seed)


def run_name(condition, seed):
    return "{}-seed{}".format(condition, seed)


def resolve_target(cfg, seed, targets):
    """
    The similarity target of one run.

    Args:
        cfg: TrainConfig of the condition
        seed: run seed, also seeding the control target construction
        targets: dict with the "neural" and (optionally) "data"
                 SimilarityMatrix

    Returns:
        SimilarityMatrix, or None for unregularized runs
    """

    if cfg.alpha == 0:
        return None

    kind = cfg.target_kind

    if kind in ("shuffle", "random"):
        return make_control_target(targets["neural"], kind, seed,
                                   cfg.shuffle_mode)

    if kind not in targets or targets[kind] is None:
        raise DatasetError("no '{}' similarity target available".format(
            kind))

    return targets[kind]


def train_suite(cfgs, seeds, class_ds, stimuli, targets, test_ds=None):
    """
    Train every (config, seed) combination. A run that fails is recorded
    with its diagnostic and the suite continues.

    Args:
        cfgs: list of single-condition TrainConfigs
        seeds: list of seeds
        class_ds: training ClassificationSet
        stimuli: dict target kind -> StimulusSet in the row order of that
                 target ("neural" also serves the controls)
        targets: dict target kind -> SimilarityMatrix
        test_ds: optional held-out ClassificationSet

    Returns:
        list of RunResult in (config, seed) order
    """

    results = []

    for cfg in cfgs:
        for seed in seeds:
            run = type(cfg)()
            run.update(cfg.as_dict())
            run.update({"seed": int(seed)})

            try:
                target = resolve_target(run, seed, targets)
                source = "data" if run.target_kind == "data" else "neural"

                net, gamma, log = joint_train(
                    run,
                    class_ds,
                    stimuli.get(source) if target is not None else None,
                    target,
                    test_ds
                )
            except NeuralRegError as e:
                logger.error("run %s failed: %s",
                             run_name(run.condition, seed), e)
                results.append(RunResult(run.condition, seed, error=str(e)))
                continue

            results.append(RunResult(run.condition, seed, net, gamma, log))

    return results


def suite_statistics(results):
    """
    Mean and SEM of the final accuracies and the mean final gamma per
    condition, over the successful runs

    Returns:
        list of dicts, one per condition in first-seen order
    """

    conditions = []

    for r in results:
        if r.condition not in conditions:
            conditions.append(r.condition)

    table = []

    for c in conditions:
        runs = [r for r in results if r.condition == c and r.ok]
        failed = sum(1 for r in results if r.condition == c and not r.ok)

        entry = {"condition": c, "runs": len(runs), "failed": failed}

        if len(runs) > 0:
            train = [r.log.accuracy for r in runs]
            test = [r.log.test_accuracy for r in runs]

            entry.update({
                "train_accuracy": float(np.mean(train)),
                "train_accuracy_sem": standard_error(train),
                "test_accuracy": float(np.mean(test)),
                "test_accuracy_sem": standard_error(test),
                "gamma": np.mean([r.log.gamma for r in runs], axis=0).tolist(),
                "layers": runs[0].log.layers,
            })

        table.append(entry)

    return table


def save_run(result, cfg, directory):
    """
    Write a run's checkpoint (with the gamma logits) and its log.csv
    """

    network.save_checkpoint(
        result.net,
        directory,
        extra={GAMMA: result.gamma.logits.data},
        metadata={
            "condition": result.condition,
            "seed": int(result.seed),
            "alpha": float(cfg.alpha),
            "target": cfg.target_kind,
            "summary": result.log.summary(),
        }
    )

    result.log.write_csv(os.path.join(directory, "log.csv"))


def write_suite(results, cfgs, out):
    """
    Write every run under out/runs/ plus suite.json and gamma.csv

    Returns:
        the suite statistics
    """

    by_name = {c.condition: c for c in cfgs}

    for r in results:
        if r.ok:
            save_run(r, by_name[r.condition],
                     os.path.join(out, "runs", r.name))

    statistics = suite_statistics(results)

    fileio.write_json(os.path.join(out, "suite.json"), {
        "conditions": statistics,
        "runs": [
            r.log.summary() if r.ok else
            {"condition": r.condition, "seed": r.seed, "error": r.error}
            for r in results
        ],
    })

    done = [r for r in results if r.ok]
    layers = done[0].log.layers if len(done) > 0 else []

    fileio.write_csv(
        os.path.join(out, "gamma.csv"),
        ["condition", "seed"] + ["gamma_{}".format(l) for l in layers] +
        ["max_gamma"],
        [[r.condition, r.seed] + list(r.log.gamma) + [max(r.log.gamma)]
         for r in done]
    )

    return statistics


def list_runs(out):
    """
    Checkpoint directories of the runs written by write_suite, sorted
    """

    root = os.path.join(out, "runs")

    if not os.path.isdir(root):
        return []

    return [
        os.path.join(root, name) for name in sorted(os.listdir(root))
        if os.path.exists(os.path.join(root, name, "index.json"))
    ]
