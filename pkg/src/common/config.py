import os
import re

import yaml

from common import fileio
from common.errors import FormatError


class ConfigLoader(yaml.SafeLoader):
    """
    SafeLoader that also reads exponent-only floats such as 1e-6, which
    YAML 1.1 leaves as strings
    """


ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?[0-9][0-9_]*(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789")
)


class ConfigPathError(Exception):
    """
    Exception that indicates that the path specifed for a config file
    location doesn't exist or can't be parsed
    """

    def __init__(self, path, reason=None):
        self.path = path
        self.reason = reason

    def __str__(self):
        s = "Config file '{}' could not be loaded".format(self.path)

        if self.reason is not None:
            s += " ({})".format(self.reason)

        return s + "."


class ConfigValueError(Exception):
    """
    Exception that indicates that a configuration value is missing or
    invalid
    """

    def __init__(self, value, reason=None):
        self.value = value
        self.reason = reason

    def __str__(self):
        if self.reason is None:
            return "Config is missing value for '{}'.".format(self.value)

        return "Config value '{}' is invalid: {}.".format(
            self.value,
            self.reason
        )


class Config(object):
    """
    Base class for the configuration of one subcommand.

    Subclasses list their fields and defaults in defaults(). Every field is
    a plain attribute so that the code reading the configuration stays free
    of dictionary lookups. Configs are loaded from YAML documents, which
    includes plain JSON.
    """

    def __init__(self, **overrides):
        """
        Initialize a Config object with its defaults, then apply overrides
        """

        self.path = None

        for name, value in self.defaults().items():
            setattr(self, name, value)

        self.update(overrides)

    def defaults(self):
        """
        Mapping of field name to default value, in display order
        """

        return {}

    def fields(self):
        return list(self.defaults().keys())

    def as_dict(self):
        return {name: getattr(self, name) for name in self.fields()}

    def __str__(self):
        """
        Create the string (YAML) representaion of the Config instance
        """

        return yaml.safe_dump(
            fileio.plain(self.as_dict()),
            default_flow_style=False,
            sort_keys=False
        ).rstrip()

    def update(self, mapping):
        """
        Set fields from a mapping, rejecting names this config doesn't have

        Args:
            mapping: field name -> value
        """

        known = self.defaults()

        for name, value in mapping.items():
            if name not in known:
                raise ConfigValueError(name, "unknown field")

            setattr(self, name, value)

    def dump(self, path):
        """
        Dump the JSON representation of the Config instance to a file.

        Args:
            path: The location to write the config to
        """

        fileio.write_json(os.path.expanduser(path), self.as_dict())

    def load(self, path):
        """
        Load a YAML or JSON config document from a file into the Config
        instance

        Args:
            path: The location to read the config from
        """

        self.path = path

        try:
            if path.endswith(".json"):
                y = fileio.read_json(os.path.expanduser(path))
            else:
                with open(os.path.expanduser(path)) as f:
                    y = yaml.load(f, Loader=ConfigLoader)
        except FormatError as e:
            raise ConfigPathError(path, e.reason)
        except OSError as e:
            raise ConfigPathError(path, e.strerror)
        except yaml.YAMLError as e:
            raise ConfigPathError(path, str(e).splitlines()[0])

        if y is None:
            y = {}

        if not isinstance(y, dict):
            raise ConfigPathError(path, "top level must be a mapping")

        self.update(y)

    def require(self, condition, name, reason):
        if not condition:
            raise ConfigValueError(name, reason)

    def validate(self):
        """
        Ensure that the Config instance is valid
        """

        for name in self.fields():
            if getattr(self, name) is None and name not in self.optional():
                raise ConfigValueError(name)

    def optional(self):
        """
        Names of fields that may be left unset
        """

        return ()


def make_config_loader(config_class):
    """
    Create the argparse type callable that builds a config_class instance,
    loads its state from the provided path and ensures that it is valid.

    Args:
        config_class: The Config subclass to instantiate
    """

    def load(path):
        config = config_class()

        config.load(path)

        config.validate()

        return config

    return load


def add_argument(parser, config_class):
    """
    Add the --config, --seed and --out arguments to an ArgumentParser. The
    config object is created by the parser; when --config is not provided
    the defaults of config_class are used.

    Args:
        parser: The ArgumentParser to add the config option to
        config_class: The Config subclass the subcommand reads
    """

    parser.add_argument(
        "--config",
        type=make_config_loader(config_class),
        default=None,
        help="The location of the YAML or JSON config file to load. "
             "Defaults are used when omitted."
    )

    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Override the seed found in the config"
    )

    parser.add_argument(
        "--out",
        default=None,
        help="Override the output location found in the config"
    )


def from_args(args, config_class):
    """
    Resolve the config for a parsed command line: the loaded (or default)
    config with the --seed and --out overrides applied.
    """

    config = args.config if args.config is not None else config_class()

    if args.seed is not None:
        config.update({"seed": args.seed})

    if args.out is not None:
        config.update({"out": args.out})

    config.validate()

    return config
