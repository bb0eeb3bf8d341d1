"""Command-line front end.

    tikhonov-kaczmarz run <config>
    tikhonov-kaczmarz semiconv <config>
    tikhonov-kaczmarz compare <config>
    tikhonov-kaczmarz diagnose <config>

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

import argparse
import json
import logging
import sys

from .errors import AdmissibilityViolation, ConfigError, DegenerateNoise, DegenerateSample, SingularMatrix
from .experiments import compare_methods, load_config, report_dict, run_diagnostics, run_experiment, semiconvergence_study
from .kaczmarz import StopReason

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _run(cfg):
    traces = run_experiment(cfg)
    for j, t in enumerate(traces):
        print(f"level {j}: stop_index={t.stop_index} reason={t.stop_reason.value} steps={len(t.steps)}")
    failed = any(t.stop_reason is StopReason.INNER_FAILURE for t in traces)
    return EXIT_SOLVER if failed else EXIT_OK


def _rows(rows):
    failed = False
    for r in rows:
        print(
            f"{r.method.value:>5} delta={r.delta:.3g} stop_index={r.stop_index} "
            f"final_error={r.final_error:.6g} inner={r.total_inner_iterations} loped={r.loped_steps}"
        )
        failed |= r.stop_reason is StopReason.INNER_FAILURE
    return EXIT_SOLVER if failed else EXIT_OK


def _diagnose(cfg):
    print(json.dumps(report_dict(run_diagnostics(cfg)), indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "run": _run,
    "semiconv": lambda cfg: _rows(semiconvergence_study(cfg)),
    "compare": lambda cfg: _rows(compare_methods(cfg)),
    "diagnose": _diagnose,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tikhonov-kaczmarz",
        description="Iterated Tikhonov-Kaczmarz experiments on 1D elliptic parameter identification.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log inner-solver warnings")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "run the configured method at every noise level",
        "semiconv": "final error and stopping index across noise levels",
        "compare": "iTK vs l-iTK on identical noise",
        "diagnose": "adjoint / Taylor / cone diagnostics as JSON",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="path to an INI configuration file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularMatrix, AdmissibilityViolation, ArithmeticError, DegenerateSample, DegenerateNoise) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
