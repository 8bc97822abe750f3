"""
Self-Triggered Invariant Scheduler
Command-line entry point.

pipeline: maximal robust control invariant set -> safe time interval alpha
-> transmission schedule -> closed-loop simulation -> json/csv exportation

Exit codes: 0 success, 1 configuration or usage error, 2 empty invariant set,
3 iteration or horizon cap reached, 4 safety violation.
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from core_pipeline import get_pipeline, output_path
from errors import (
    ConfigError,
    DimensionMismatch,
    EmptyInvariant,
    Infeasible,
    InvalidInvariant,
    InvSchedError,
    MalformedSequence,
    SafetyViolation,
)
from reporting.exporter import build_report, write_gnuplot_script, write_json, write_trajectory_csv
from scheduling.scheduler import savings
from settings.run_config import RunConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EMPTY_INVARIANT = 2
EXIT_CAP = 3
EXIT_SAFETY = 4

LOG_ENV = "INVSCHED_LOG"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

logger = logging.getLogger("invsched")


class CapReached(Exception):
    """Internal signal for exit code 3"""


def configure_logging() -> None:
    """One stderr handler; level from INVSCHED_LOG (default WARNING)"""
    requested = os.environ.get(LOG_ENV, "WARNING").strip().upper()
    level = requested if requested in LOG_LEVELS else "WARNING"

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(levelname)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)

    if requested != level:
        logger.warning("unknown %s value '%s', using WARNING", LOG_ENV, requested)


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: exit 1 instead of argparse's 2"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None, help="JSON/YAML run file (flags override it)")
    common.add_argument("--system", default=None, help="'aps' or a LinearSystem JSON path")
    common.add_argument("--j-max", dest="j_max", type=int, default=None, help="safe-time horizon cap")
    common.add_argument("--max-iter", dest="max_iter", type=int, default=None, help="invariant-set iteration cap")
    common.add_argument("--horizon", type=int, default=None, help="simulation / schedule length in steps")
    common.add_argument("--seed", type=int, default=None, help="seed for random disturbances")
    common.add_argument("--schedule", default=None, help="periodic | max-sleep | @file")
    common.add_argument("--period", type=int, default=None, help="period for the periodic schedule (default alpha)")
    common.add_argument("--disturbance", default=None, help="zero | uniform | worst | meals@file")
    common.add_argument("--out", dest="output_dir", default=None, help="output directory")
    common.add_argument("--x0", type=float, nargs="+", default=None, help="initial state (default origin)")
    common.add_argument("--lp-backend", dest="lp_backend", default=None, choices=["simplex", "highs"])
    common.add_argument("--dump-feasible-sets", dest="dump_feasible_sets", action="store_true", default=None,
                        help="include X_1..X_j in safetime.json")
    common.add_argument("--a32-zero", dest="a32_zero", action="store_true", default=None,
                        help="companion-form A: bottom row (0, 1, 0)")
    common.add_argument("--gnuplot-script", dest="gnuplot_script", action="store_true", default=None,
                        help="also write plot.gp for trajectory.csv")

    parser = _Parser(
        prog="invsched",
        description="Self-triggered sensor scheduling from robust control invariant sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("invariant", parents=[common], help="compute the maximal robust control invariant set")
    sub.add_parser("safetime", parents=[common], help="compute the safe time interval alpha")
    sub.add_parser("schedule", parents=[common], help="build a transmission schedule and its savings")
    sub.add_parser("simulate", parents=[common], help="run the self-triggered closed loop")
    sub.add_parser("demo", parents=[common], help="run the whole artificial pancreas pipeline")
    return parser.parse_args(argv)


def _build_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        key: getattr(args, key)
        for key in (
            "system", "j_max", "max_iter", "horizon", "seed", "schedule", "period",
            "disturbance", "output_dir", "x0", "lp_backend", "dump_feasible_sets",
            "a32_zero", "gnuplot_script",
        )
    }
    return load_config(args.config, overrides)


def _invariant(pipeline, config: RunConfig) -> Dict:
    document = pipeline.invariant_document()
    write_json(document, output_path(config, "c_inf.json"))
    print(f"iterations = {document['iterations']}")
    print(f"converged = {str(document['converged']).lower()}")
    print(f"facets = {len(document['set']['h'])}")
    if not document["converged"]:
        raise CapReached(f"invariant set did not converge within {config.max_iter} iterations")
    return document


def _alternate_line(alternate: Dict) -> str:
    if alternate.get("alpha") is None:
        return f"{alternate['form']}-form alpha unavailable"
    if alternate.get("hit_cap"):
        return f"{alternate['form']}-form alpha ≥ {alternate['alpha']} (cap reached)"
    return f"{alternate['form']}-form alpha = {alternate['alpha']}"


def _safetime(pipeline, config: RunConfig, compare: bool = True) -> int:
    _invariant(pipeline, config)
    result = pipeline.compute_safe_time()
    document = result.to_dict(include_sets=config.dump_feasible_sets)
    alternate = pipeline.alternate_form() if compare else None
    if alternate is not None:
        document["matrix_form"] = "companion" if config.a32_zero else "printed"
        document["alternate_form"] = alternate
    write_json(document, output_path(config, "safetime.json"))
    if result.hit_cap:
        print(f"alpha ≥ {result.alpha} (cap reached)")
    else:
        print(f"alpha = {result.alpha}")
    if alternate is not None:
        print(_alternate_line(alternate))
    return result.alpha


def _schedule(pipeline, config: RunConfig):
    alpha = _safetime(pipeline, config, compare=False)
    schedule = pipeline.build_schedule(alpha)
    write_json(schedule.to_dict(), output_path(config, "schedule.json"))
    print(f"transmissions = {len(schedule.instants)}")
    print(f"savings = {savings(schedule, config.horizon):.4f}")
    return schedule


def _simulate(pipeline, config: RunConfig, extra: Optional[Dict] = None) -> Dict:
    schedule = _schedule(pipeline, config)
    alpha = schedule.alpha
    traj = pipeline.simulate(schedule)

    write_trajectory_csv(traj, output_path(config, "trajectory.csv"))
    write_json(traj.to_dict(), output_path(config, "trajectory.json"))

    c_inf = pipeline.compute_invariant().set
    report_extra = {
        "c_inf_bounding_box": c_inf.bounding_box(),
        "disturbance": pipeline.disturbance_generator().to_dict(),
        "safe_time_hit_cap": pipeline.compute_safe_time().hit_cap,
        "sample_minutes": config.sample_minutes,
    }
    report_extra.update(extra or {})
    report = build_report(traj, schedule, config.horizon, alpha, report_extra)
    write_json(report, output_path(config, "report.json"))

    if config.gnuplot_script:
        write_gnuplot_script(output_path(config, "plot.gp"), sample_minutes=config.sample_minutes)

    print(f"glucose deviation range = [{report['min_glucose_deviation']:.4f}, "
          f"{report['max_glucose_deviation']:.4f}]")
    return report


def _demo(pipeline, config: RunConfig) -> Dict:
    extra = {}
    alternate = pipeline.alternate_form()
    if alternate is not None:
        extra["matrix_form"] = "companion" if config.a32_zero else "printed"
        extra["alternate_form"] = alternate
        print(_alternate_line(alternate))
    return _simulate(pipeline, config, extra)


COMMANDS = {
    "invariant": _invariant,
    "safetime": _safetime,
    "schedule": _schedule,
    "simulate": _simulate,
    "demo": _demo,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: Command-line arguments (default sys.argv[1:])

    Returns:
        Process exit code
    """
    args = _parse_args(argv)
    configure_logging()

    try:
        config = _build_config(args)
        pipeline = get_pipeline(config)
        COMMANDS[args.command](pipeline, config)

        if args.command == "safetime" and pipeline.compute_safe_time().hit_cap:
            return EXIT_CAP
        return EXIT_OK

    except CapReached as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, MalformedSequence, DimensionMismatch, Infeasible) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (EmptyInvariant, InvalidInvariant) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_EMPTY_INVARIANT
    except SafetyViolation as e:
        print(f"Error: safety violation at t={e.t}, state={e.state}", file=sys.stderr)
        return EXIT_SAFETY
    except InvSchedError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
