"""
solarsched command-line entry point.

    solarsched generate --days 4 --seed 0 --out data/
    solarsched fit      --trace trace.csv [--irradiation irr.csv] --out out/
    solarsched predict  --trace trace.csv --weights out/weights.cfg --from day2 --days 2
    solarsched schedule --trace trace.csv --algo ptf|bcd|sgtdma --from 0 --days 1
    solarsched simulate --trace trace.csv --algo ptfon|sgtdma --from day2 --days 2
    solarsched compare  --trace trace.csv --days 2

Exit status: 0 success, 1 invalid input, 2 insufficient history,
3 parse/configuration error, 4 schedule failed re-validation.
"""

import argparse
import json
import sys
from typing import List, Optional

from pydantic import ValidationError

from solarsched import __version__
from solarsched.errors import SolarschedError
from solarsched.orchestrator import Orchestrator
from solarsched.schemas.request import RunSpec
from solarsched.utils.logger import log_command, log_error, setup_logger
from solarsched.utils.validation import ALLOWED_COMMANDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solarsched",
        description="Solar harvest prediction and proportional-fair downlink scheduling",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(ALLOWED_COMMANDS), help="Command to run")
    parser.add_argument("--config", help="key=value system configuration file")
    parser.add_argument("--trace", help="Power trace (timestamp,value) or sub-hour CSV")
    parser.add_argument("--irradiation", help="Irradiation trace (timestamp,value)")
    parser.add_argument("--weights", help="Predictor parameter file written by `fit`")
    parser.add_argument("--algo", help="schedule: ptf|bcd|sgtdma, simulate: ptfon|sgtdma")
    parser.add_argument("--from", dest="from_", help="First frame: sub-hour index, dayN or ISO date")
    parser.add_argument("--days", type=int, default=1, help="Number of frames (days for generate)")
    parser.add_argument("--seed", type=int, default=0, help="Seed for generation and BCD restarts")
    parser.add_argument("--out", default="out", help="Output directory")
    parser.add_argument("--fill-gaps", dest="fill_gaps", default="error", help="error|zero")
    parser.add_argument("--horizon", default="sliding", help="PTF-On horizon: sliding|frame")
    parser.add_argument("--restarts", type=int, default=10, help="BCD starts per frame")
    parser.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=500, help="BCD sweep cap per start")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG|INFO|WARNING|ERROR")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Returns:
        Process exit status
    """
    args = build_parser().parse_args(argv)
    logger = setup_logger(level=args.log_level)

    params = {k: v for k, v in vars(args).items() if k not in ("command", "log_level") and v is not None}
    log_command(args.command, params)

    try:
        spec = RunSpec(command=args.command, **params)
        result = Orchestrator(spec).handle()
    except ValidationError as e:
        log_error(e, args.command)
        print(f"solarsched: invalid arguments: {e.errors()[0]['msg']}", file=sys.stderr)
        return 1
    except SolarschedError as e:
        log_error(e, args.command)
        print(f"solarsched: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        log_error(e, args.command)
        print(f"solarsched: unexpected error: {e}", file=sys.stderr)
        return 1

    logger.info(f"Command {args.command} finished: {len(result.get('artifacts', []))} artifacts")
    print(json.dumps(result, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
