#!/usr/bin/env python3
import argparse
import sys

from heatbath.controller.experiment_controller import ExperimentController, report
from heatbath.core.errors import ConfigError, HeatBathError
from heatbath.core.localization import SUPPORTED_LANGUAGES, set_language, tr
from heatbath.core.utils import print_status, setup_console_logging
from heatbath.io.config_file import SCHEMA, build_experiment_config, read_config_file

COMMANDS = {
    "synth": "realize Foster loads and verify the lossless certificate",
    "couple": "close the feedback loops and check the scattering function",
    "line-sim": "simulate a truncated line driving the load",
    "string-sim": "simulate a string driving the load",
    "lattice-sim": "integrate the harmonic chain with a Brownian particle",
    "autocorr": "momentum autocorrelation, whitening and periodicity",
    "mb-stats": "Maxwell-Boltzmann statistics and entropy checks",
    "invert": "synthesize a bath from a spectral density",
}
ALIASES = {"lattice-sim": ["lattice"]}


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=None, help="random seed (non-negative)")
    sub.add_argument("--out", default=None, help="output directory for artifacts")
    sub.add_argument("--config", default=None, help="experiment config file")
    sub.add_argument("--verbose", action="store_true", help="debug logging")
    sub.add_argument("--lang", choices=SUPPORTED_LANGUAGES, default=None, help="report language")


def build_parser():
    parser = argparse.ArgumentParser(prog="heatbath", description="Lossless heat-bath laboratory")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in COMMANDS.items():
        sub = subparsers.add_parser(name, aliases=ALIASES.get(name, []), help=help_text)
        _add_common(sub)
        # 每个参数对应一个 --flag / one flag per config key
        for key, kind in SCHEMA[name].items():
            sub.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, default=None)
        sub.set_defaults(command=name, module_keys=tuple(SCHEMA[name]))
    rep = subparsers.add_parser("report", help="merge summary.json files into one acceptance table")
    rep.add_argument("run_dirs", nargs="*", help="run output directories")
    rep.add_argument("--verbose", action="store_true")
    rep.add_argument("--lang", choices=SUPPORTED_LANGUAGES, default=None)
    rep.set_defaults(command="report", module_keys=())
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_console_logging(args.verbose)
    if args.lang:
        set_language(args.lang)
    try:
        if args.command == "report":
            return report(args.run_dirs)
        sections = read_config_file(args.config) if args.config else None
        overrides = {key: getattr(args, key) for key in args.module_keys}
        config = build_experiment_config(args.command, sections, overrides, args.seed, args.out)
        return ExperimentController(config).run()
    except ConfigError as exc:
        print_status(tr("config_error").format(exc), "ERROR")
        return 2
    except HeatBathError as exc:
        print_status(tr("computation_error").format(exc), "ERROR")
        return 1


if __name__ == "__main__":
    sys.exit(main())
