"""
Entry point for the WGM tuning toolkit.

    python main.py spectrum --preset device2
    python main.py tune-curve --preset device1 --v-max 150 --v-step 10
    python main.py scan --config run.json --seed 7 --out out/sweep
    python main.py fit out/sweep/trace_*.csv
    python main.py assign dips.csv
    python main.py calibrate out/sweep/trace_*.csv
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from config import Config
from src.commands import (
    CommandResult,
    cmd_assign,
    cmd_calibrate,
    cmd_fit,
    cmd_scan,
    cmd_spectrum,
    cmd_tune_curve,
)
from src.errors import DomainError, FitError, NumericError
from src.run_config import CUSTOM_PRESET, PRESET_NAMES, load_run_config

logger = logging.getLogger(__name__)


def print_results(result: CommandResult) -> None:
    """
    Print a command summary to stdout.

    Args:
        result: CommandResult of the command that ran
    """
    output_label = f"{result.command.upper()} RESULTS"
    print("=" * len(output_label))
    print(output_label)
    print("=" * len(output_label))
    for label, value in result.summary:
        print(f"{label}: {value}")
    for path in result.outputs:
        print(f"Wrote {path}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (default: $%s)" % Config.CONFIG_ENV_VAR)
    common.add_argument("--preset", choices=PRESET_NAMES + (CUSTOM_PRESET,),
                        help="device preset used as the config base")
    common.add_argument("--seed", type=int, help="noise seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="wgm-tuning",
        description="Strain and temperature tuning of whispering-gallery modes in silica microspheres.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    spectrum = commands.add_parser("spectrum", parents=[common], help="mode lines in a window")
    spectrum.add_argument("--f-lo", type=float, help="window start in THz")
    spectrum.add_argument("--f-hi", type=float, help="window end in THz")

    for name, text in (("tune-curve", "shift versus PZT voltage"),
                       ("scan", "synthesize a voltage sweep of transmission traces")):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("--v-max", type=float, help="voltage grid 0..V_MAX")
        sub.add_argument("--v-step", type=float, default=1.0, help="voltage grid step (default 1 V)")

    fit = commands.add_parser("fit", parents=[common], help="fit Lorentzian dips in traces")
    fit.add_argument("files", nargs="+", help="trace CSV files")
    assign = commands.add_parser("assign", parents=[common], help="assign mode numbers to dips")
    assign.add_argument("file", help="trace CSV or CSV with a frequency_THz column")
    calibrate = commands.add_parser("calibrate", parents=[common],
                                    help="strain per volt from a voltage sweep")
    calibrate.add_argument("files", nargs="+", help="trace CSV files of one sweep")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    window = {key: getattr(args, attr) for key, attr in (("f_lo_thz", "f_lo"), ("f_hi_thz", "f_hi"))
              if getattr(args, attr, None) is not None}
    if window:
        overrides["window"] = window
    if getattr(args, "v_max", None) is not None:
        overrides["voltages_v"] = {"start": 0.0, "stop": args.v_max, "step": args.v_step}
    return overrides


def _run(args: argparse.Namespace) -> CommandResult:
    config = load_run_config(args.config, args.preset, _overrides(args))
    logger.info("Preset %s, config %s", config.preset, config.config_sha256[:12])
    if args.command == "spectrum":
        return cmd_spectrum(config)
    if args.command == "tune-curve":
        return cmd_tune_curve(config)
    if args.command == "scan":
        return cmd_scan(config)
    if args.command == "fit":
        return cmd_fit(config, args.files)
    if args.command == "assign":
        return cmd_assign(config, args.file)
    return cmd_calibrate(config, args.files)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Execute one command.

    Returns:
        Exit code (0 - success, 2 - bad config or input, 3 - fit or
        assignment failed; partial report written)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return Config.EXIT_USAGE if e.code else Config.EXIT_OK

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        result = _run(args)
    except (DomainError, FileNotFoundError) as e:
        print(f"\n✗ Error: {e}", file=sys.stderr)
        return Config.EXIT_USAGE
    except (FitError, NumericError) as e:
        print(f"\n✗ Processing failed: {e}", file=sys.stderr)
        return Config.EXIT_FIT_FAILED
    except KeyboardInterrupt:
        print("\n\nInterrupted by user.")
        return 1

    print_results(result)
    if result.exit_code != Config.EXIT_OK:
        print("\nWarning: results are partial; see the report for failures.")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
