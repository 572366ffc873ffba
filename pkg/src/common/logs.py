import logging
import sys


FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure(verbosity=0):
    """
    Install a single stderr handler on the root logger.

    Args:
        verbosity: -1 for errors only, 0 for warnings, 1 for info, 2+ for
                   debug output
    """

    if verbosity < 0:
        level = logging.ERROR
    elif verbosity == 0:
        level = logging.WARNING
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.DEBUG

    root = logging.getLogger()

    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(FORMAT))

    root.addHandler(handler)
    root.setLevel(level)


def add_argument(parser):
    """
    Add the -v/--verbose and -q/--quiet options to an ArgumentParser

    Args:
        parser: The ArgumentParser to add the logging options to
    """

    parser.add_argument(
        "--verbose", "-v",
        action="count",
        default=0,
        help="Increase logging output (repeat for debug output)"
    )

    parser.add_argument(
        "--quiet", "-q",
        action="store_true",
        default=False,
        help="Only log errors"
    )


def configure_from_args(args):
    configure(-1 if args.quiet else args.verbose)
