"""
Batch front end: `python cli.py <command> [--config FILE] [--<key> VALUE ...]`.

Commands are forward, reconstruct, roundtrip and fit-tail.  Every RunConfig
key is a flag; flags beat the config file, which beats MARCHENKO_* variables.
With --out the artifacts and report.json go to that directory, otherwise the
primary artifact is printed to stdout.  Exit codes: 0 ok, 1 pipeline error,
2 configuration error.
"""
import argparse
import logging
import sys
from typing import List, Optional

from apps.marchenko.config import RunConfig, load_run_config
from apps.marchenko.services import pipeline
from common.exceptions import ConfigError, MarchenkoError
from config.logging import setup_logging

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_PIPELINE_ERROR = 1
EXIT_CONFIG_ERROR = 2


def _config_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    parent.add_argument("--config", dest="config_file", help="flat key=value config file")
    parent.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING, ...")
    group = parent.add_argument_group("run configuration")
    for name, field in RunConfig.model_fields.items():
        flags = [f"--{name}"]
        if "_" in name:
            flags.append(f"--{name.replace('_', '-')}")
        group.add_argument(*flags, dest=f"cfg_{name}", metavar="VALUE", help=field.description)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marchenko", description="Marchenko inverse-scattering toolkit",
                                     allow_abbrev=False)
    parent = _config_flags()
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("forward", parents=[parent], allow_abbrev=False, help="phase shifts of a potential")
    commands.add_parser("reconstruct", parents=[parent], allow_abbrev=False, help="potential from a phase-shift table")
    commands.add_parser("roundtrip", parents=[parent], allow_abbrev=False, help="forward scan, reconstruction and comparison")
    commands.add_parser("fit-tail", parents=[parent], allow_abbrev=False, help="1/q-power tail fit of a phase-shift table")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {
        key[len("cfg_"):]: value
        for key, value in vars(args).items()
        if key.startswith("cfg_") and value is not None
    }


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    config = None
    try:
        config = load_run_config(args.config_file, _overrides(args))
        result = pipeline.run_command(args.command, config)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except MarchenkoError as e:
        print(str(e), file=sys.stderr)
        if config is not None and config.out:
            pipeline.CommandResult(report=pipeline.error_report(args.command, config, e)).write(config.out)
        return EXIT_PIPELINE_ERROR

    if config.out:
        for path in result.write(config.out):
            logger.info("Wrote %s", path)
    elif result.primary == pipeline.REPORT:
        sys.stdout.write(result.report.to_json() + "\n")
    else:
        sys.stdout.write(result.artifacts[result.primary])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
