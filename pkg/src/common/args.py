import argparse
import sys

from common.errors import UsageError


class ArgumentParser(argparse.ArgumentParser):
    """
    ArgumentParser that reports usage problems as a UsageError instead of
    exiting with argparse's own status code, so that the dispatcher can
    map them to exit status 1.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError("{}: error: {}".format(self.prog, message))


def float_list(s):
    """
    Parse a comma separated list of floats, e.g. "0,0.1,0.3"
    """

    try:
        return [float(v) for v in s.split(",") if len(v.strip()) > 0]
    except ValueError:
        msg = "Not a comma separated list of numbers: '{0}'.".format(s)
        raise argparse.ArgumentTypeError(msg)


def int_list(s):
    """
    Parse a comma separated list of integers, e.g. "0,1,2"
    """

    try:
        return [int(v) for v in s.split(",") if len(v.strip()) > 0]
    except ValueError:
        msg = "Not a comma separated list of integers: '{0}'.".format(s)
        raise argparse.ArgumentTypeError(msg)
