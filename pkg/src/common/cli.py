"""
Shared plumbing for the subcommand entry points.
"""

import functools
import logging
import os
import sys

import common.args
import common.config
import common.logs
from common.errors import NeuralRegError, UsageError


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


def entry_point(main):
    """
    Wrap a subcommand's main(argv) so that it returns an exit status:
    0 on success, 1 for usage and config value errors, 2 for every other
    runtime failure. Diagnostics go to stderr.
    """

    @functools.wraps(main)
    def run(argv=None):
        try:
            main(argv)
        except (UsageError, common.config.ConfigValueError) as e:
            print(str(e), file=sys.stderr)
            return EXIT_USAGE
        except (NeuralRegError, common.config.ConfigPathError) as e:
            logger.debug("failure", exc_info=True)
            print("error: {}".format(e), file=sys.stderr)
            return EXIT_FAILURE

        return EXIT_OK

    return run


def parser(prog, description, config_class):
    """
    An ArgumentParser carrying the config and logging options every
    subcommand accepts
    """

    p = common.args.ArgumentParser(prog=prog, description=description)

    common.config.add_argument(p, config_class)
    common.logs.add_argument(p)

    return p


def setup(p, argv, config_class):
    """
    Parse the command line, configure logging and resolve the config

    Returns:
        (args, config)
    """

    args = p.parse_args(argv)

    common.logs.configure_from_args(args)

    config = common.config.from_args(args, config_class)

    logger.debug("resolved config:\n%s", config)

    return args, config


def record_config(config, directory, filename="config.json"):
    """
    Write the resolved config next to a subcommand's outputs
    """

    config.dump(os.path.join(directory, filename))
