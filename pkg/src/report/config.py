import common.config


class ReportConfig(common.config.Config):
    """
    Settings of the report subcommand. `root` holds the outputs of train
    and the evaluations; the report is written to `out` (the root when
    unset).
    """

    def defaults(self):
        return {
            "root": "runs",
            "diagnostics": "data/diagnostics.json",
            "out": None,
            "baseline": "vanilla",
            "seed": 0,
        }

    def optional(self):
        return ("out", "diagnostics")

    @property
    def destination(self):
        return self.root if self.out is None else self.out
