"""Command line front end.

    python -m backend.cli solve instance.json --scheme b --mode greedy
    python -m backend.cli example --id 1
    python -m backend.cli region instance.json --T 0.8 --samples 11
    python -m backend.cli montecarlo config.json --out results/

Exit codes: 0 on success, 1 for bad input, 2 when a solver fails.
"""
import argparse
import json
import logging
import os
import sys

import pandas as pd

from .config import load_settings
from .errors import INPUT_ERRORS, WptNomaError
from .models.network import NetworkInstance
from .models.reports import example_report
from .models.schedulers import run_scheme
from .models.timeshare import region_boundary
from .utils.montecarlo import ExperimentConfig, run_experiment

SCHEME_CHOICES = ['a', 'b', 'c', 'd', 'tdma-sum', 'tdma-common']
EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


class InputFileError(Exception):
    pass


def _load_json(path):
    try:
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise InputFileError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    except OSError as e:
        raise InputFileError(f"cannot read {path}: {e.strerror or e}") from e


def _emit(doc):
    print(json.dumps(doc, indent=2))


def cmd_solve(args):
    instance = NetworkInstance.from_dict(_load_json(args.instance))
    result = run_scheme(instance, args.scheme, mode=args.mode, T=args.T)
    _emit(result.to_dict())


def cmd_example(args):
    _emit(example_report(args.id))


def cmd_region(args):
    instance = NetworkInstance.from_dict(_load_json(args.instance))
    points = region_boundary(instance, args.T, args.samples)
    columns = [f"R{n}" for n in range(1, instance.n_users + 1)]
    frame = pd.DataFrame([p.rates for p in points], columns=columns)
    frame.to_csv(sys.stdout, index=False, float_format='%.10g')


def cmd_montecarlo(args):
    config = ExperimentConfig.from_dict(_load_json(args.config))
    workers = args.workers if args.workers is not None else load_settings().workers
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as e:
        raise InputFileError(f"cannot create {args.out}: {e.strerror or e}") from e
    result = run_experiment(config, workers=workers)
    try:
        result.write_csvs(args.out)
    except OSError as e:
        raise InputFileError(f"cannot write to {args.out}: {e.strerror or e}") from e
    for line in result.summary_lines():
        print(line)


def build_parser():
    parser = argparse.ArgumentParser(prog='wpt-noma',
                                     description='Wireless-powered uplink NOMA rate optimization')
    parser.add_argument('--log-level', type=str.upper, default=None,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='overrides WPT_NOMA_LOG_LEVEL')
    sub = parser.add_subparsers(dest='command', required=True)

    solve = sub.add_parser('solve', help='solve one instance with one scheme')
    solve.add_argument('instance', help='instance JSON file')
    solve.add_argument('--scheme', choices=SCHEME_CHOICES, required=True)
    solve.add_argument('--mode', choices=['full', 'greedy'], default=None,
                       help='time-sharing search for schemes b and d')
    solve.add_argument('--T', type=float, default=None, help='fixed harvesting split for schemes a and b')
    solve.set_defaults(handler=cmd_solve)

    example = sub.add_parser('example', help='report on a built-in example')
    example.add_argument('--id', type=int, choices=[1, 2], required=True)
    example.set_defaults(handler=cmd_example)

    region = sub.add_parser('region', help='export rate-region boundary points as CSV')
    region.add_argument('instance', help='instance JSON file')
    region.add_argument('--T', type=float, required=True)
    region.add_argument('--samples', type=int, default=2, help='points per edge, corners included')
    region.set_defaults(handler=cmd_region)

    montecarlo = sub.add_parser('montecarlo', help='run a Monte Carlo experiment')
    montecarlo.add_argument('config', help='experiment config JSON file')
    montecarlo.add_argument('--out', required=True, help='output directory for the CSV files')
    montecarlo.add_argument('--workers', type=int, default=None, help='overrides WPT_NOMA_WORKERS')
    montecarlo.set_defaults(handler=cmd_montecarlo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = load_settings()
    logging.basicConfig(level=args.log_level or settings.log_level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        args.handler(args)
    except (InputFileError, *INPUT_ERRORS) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (WptNomaError, ArithmeticError) as e:
        logging.debug("solver failure", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
