# Copyright (c) 2026 The curvcheck Authors. All rights reserved.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import argparse
import dataclasses
import json
import logging
import os
import sys

import torch

from .checks.structures import classify
from .geometry.curvature import DET_EPS, SingularMetricError
from .jets import SingularPointError
from .metric.corpus import UnknownMetricError, available, builtin
from .metric.dsl import MetricLoadError, OutsideDomainError, load_metric, metric_values
from .report import ConfigError, RunConfig, emit, resolve_metric, run_suite
from .sampling import sample_points

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curvcheck", description="Numerical checks of Riemann curvature identities.")
    parser.add_argument(
        "--log-level", type=str, default=None, help="logging level (default: $CURVCHECK_LOG_LEVEL or WARNING)"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    verify = sub.add_parser("verify", help="run the identity suite on sampled points")
    verify.add_argument("--metric", type=str, default=None, help="built-in metric name or metric file path")
    verify.add_argument("--config", type=str, default=None, help="YAML run configuration")
    verify.add_argument("--points", type=int, default=None)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--tol", type=float, default=None)
    verify.add_argument(
        "--k-tensor", dest="k_kinds", action="append", default=None, help="repeatable, e.g. quasi:1:0.5"
    )
    verify.add_argument("--identity", dest="identities", action="append", default=None, help="repeatable identity id")
    verify.add_argument("--no-structures", dest="structures", action="store_false", default=None)
    out = verify.add_mutually_exclusive_group()
    out.add_argument("--json", dest="json_path", type=str, default=None, help="write a JSON report ('-' for stdout)")
    out.add_argument("--text", action="store_true")
    verify.add_argument("--quiet", action="store_true", help="hide the progress bar")

    sub.add_parser("list-metrics", help="list the built-in metrics")

    cls = sub.add_parser("classify", help="structure flags and fits only")
    cls.add_argument("--metric", type=str, required=True)
    cls.add_argument("--points", type=int, default=3)
    cls.add_argument("--seed", type=int, default=42)
    cls.add_argument("--tol", type=float, default=1e-8)
    cls.add_argument("--quiet", action="store_true")

    check = sub.add_parser("parse-check", help="validate a metric file")
    check.add_argument("path", type=str)
    return parser


def setup_logging(level: str | None):
    level = (level or os.environ.get("CURVCHECK_LOG_LEVEL") or "WARNING").upper()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _config(args) -> RunConfig:
    overrides = dict(
        metric=args.metric,
        points=args.points,
        seed=args.seed,
        tol=args.tol,
        k_kinds=args.k_kinds,
        identities=args.identities,
        structures=args.structures,
    )
    if args.json_path is not None:
        overrides.update(format="json", output=None if args.json_path == "-" else args.json_path)
    elif args.text:
        overrides.update(format="text")
    if args.config:
        return RunConfig.from_yaml(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _write(data: bytes, path: str | None):
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    with open(path, "wb") as f:
        f.write(data)


def cmd_verify(args) -> int:
    config = _config(args)
    report = run_suite(config, quiet=args.quiet)
    _write(emit(report, config.format), config.output)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_list_metrics(args) -> int:
    for name in available():
        spec = builtin(name)
        print(f"{name:<16} dim {spec.dim}  coords {' '.join(spec.coords)}")
    return EXIT_OK


def cmd_classify(args) -> int:
    spec = resolve_metric(args.metric)
    points = sample_points(spec, args.points, args.seed)
    report = classify(spec, points, tolerance=args.tol, progress=not args.quiet)
    print(json.dumps(dataclasses.asdict(report), sort_keys=True, indent=2))
    return EXIT_OK


def cmd_parse_check(args) -> int:
    spec = load_metric(args.path)
    centre = [(lo + hi) / 2 for lo, hi in spec.domain]
    eig = torch.linalg.eigvalsh(torch.tensor(metric_values(spec, centre), dtype=torch.float64))
    if float(eig.abs().min()) <= DET_EPS * max(1.0, float(eig.abs().max())):
        raise SingularMetricError(f"metric {spec.name} is degenerate at the domain centre {centre}")
    signature = (int((eig < 0).sum()), int((eig > 0).sum()))
    print(f"{args.path}: ok ({spec.name}, dim {spec.dim}, coords {' '.join(spec.coords)}, signature {signature})")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "list-metrics": cmd_list_metrics,
    "classify": cmd_classify,
    "parse-check": cmd_parse_check,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (
        MetricLoadError,
        UnknownMetricError,
        ConfigError,
        OSError,
        OutsideDomainError,
        SingularMetricError,
        SingularPointError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
