#!/usr/bin/env python

import logging
import os
import sys

import common.cli
import common.view
from common import fileio
from common.errors import DatasetError
from report import tables
from report.config import ReportConfig


logger = logging.getLogger(__name__)


def read_optional(path, reader):
    """
    The parsed document at path, or None when it doesn't exist
    """

    if path is None or not os.path.exists(path):
        logger.warning("%s not found, its tables are skipped", path)
        return None

    return reader(path)


def collect_tables(config):
    """
    Every table whose source documents exist under the config's root

    Returns:
        dict table name -> (header, rows), in display order
    """

    suite_path = os.path.join(config.root, "suite.json")

    if not os.path.exists(suite_path):
        raise DatasetError("{}: no training suite to report on".format(
            suite_path))

    result = {"accuracy": tables.accuracy_table(fileio.read_json(suite_path))}

    gamma = read_optional(os.path.join(config.root, "gamma.csv"),
                          fileio.read_csv)

    if gamma is not None:
        result["gamma"] = tables.gamma_table(gamma)

    noise = read_optional(os.path.join(config.root, "noise.json"),
                          fileio.read_json)

    if noise is not None:
        result["noise"] = tables.noise_table(noise)

    adversarial = read_optional(os.path.join(config.root, "adversarial.json"),
                                fileio.read_json)

    if adversarial is not None:
        result["robustness"] = tables.robustness_table(adversarial,
                                                       config.baseline)

    diagnostics = read_optional(config.diagnostics, fileio.read_json)

    if diagnostics is not None:
        result["similarity"] = tables.diagnostics_table(diagnostics)

    return result


@common.cli.entry_point
def main(argv=None):
    """
    Summarize a training suite and its evaluations as tables on stdout,
    report-<table>.csv files and one report.json.
    """

    parser = common.cli.parser(
        "neuralreg report",
        "Summarize training and robustness results",
        ReportConfig
    )

    args, config = common.cli.setup(parser, argv, ReportConfig)

    out = config.destination

    collected = collect_tables(config)

    document = {}

    for name, (header, rows) in collected.items():
        fileio.write_csv(os.path.join(out, "report-{}.csv".format(name)),
                         header, rows)

        document[name] = [dict(zip(header, row)) for row in rows]

        common.view.print_collection(
            name.capitalize(),
            rows,
            [(h, lambda r, k=k: r[k]) for k, h in enumerate(header)]
        )

    fileio.write_json(os.path.join(out, "report.json"), document)

    common.cli.record_config(config, out, "report-config.json")


if __name__ == "__main__":
    sys.exit(main())
