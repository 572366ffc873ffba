#!/usr/bin/env python

import importlib
import sys

from common.cli import EXIT_OK, EXIT_USAGE


#
# Subcommand name -> module exposing main(argv), in pipeline order
#
SUBCOMMANDS = {
    "synth-data": "synth.generate_scans",
    "synth-task": "synth.generate_task",
    "fit-denoiser": "neural.fit",
    "build-similarity": "neural.build",
    "train": "trainer.train",
    "eval-noise": "robustness.evaluate_noise",
    "eval-adversarial": "robustness.evaluate_adversarial",
    "report": "report.report",
}


def usage():
    lines = ["usage: neuralreg <subcommand> [options]", "", "subcommands:"]
    lines += ["  {}".format(name) for name in SUBCOMMANDS]
    lines += ["", "Run 'neuralreg <subcommand> --help' for its options."]

    return "\n".join(lines)


def cli_dispatch(argv):
    """
    Run the subcommand named by argv[0] with the remaining arguments

    Returns:
        The subcommand's exit status; 1 with usage text on stderr when no
        known subcommand is given
    """

    if len(argv) == 0:
        print(usage(), file=sys.stderr)
        return EXIT_USAGE

    if argv[0] in ("-h", "--help"):
        print(usage())
        return EXIT_OK

    if argv[0] not in SUBCOMMANDS:
        print("neuralreg: unknown subcommand '{}'\n".format(argv[0]),
              file=sys.stderr)
        print(usage(), file=sys.stderr)
        return EXIT_USAGE

    module = importlib.import_module(SUBCOMMANDS[argv[0]])

    return module.main(argv[1:])


def main():
    return cli_dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
