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

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import yaml
from tqdm import tqdm

from .checks.identities import UNIVERSAL, IdentityId, Residual, identity_label, residual
from .checks.structures import StructureReport, classify
from .geometry.curvature import riemann_at
from .geometry.k_tensors import ALL_KINDS, KKind, k_bianchi_B, k_div_B, k_divergence
from .metric.corpus import CORPUS, UnknownMetricError, builtin
from .metric.dsl import MetricSpec, load_metric
from .sampling import sample_points

logger = logging.getLogger(__name__)

SCHEMA = "curvcheck.report/1"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    metric: str | None = None
    points: int = 10
    seed: int = 42
    tol: float = 1e-8
    k_kinds: list[str] = field(default_factory=lambda: [kind.label for kind in ALL_KINDS])
    identities: list[str] = field(default_factory=lambda: [i.value for i in IdentityId])
    format: Literal["text", "json"] = "text"
    output: str | None = None
    structures: bool = True

    def __post_init__(self):
        if not self.metric:
            raise ConfigError("no metric given; pass --metric or set 'metric' in the run configuration")
        if self.points < 1:
            raise ConfigError(f"points must be >= 1, got {self.points}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.format not in ("text", "json"):
            raise ConfigError(f"format must be 'text' or 'json', got {self.format!r}")
        known = {i.value for i in IdentityId}
        unknown = [name for name in self.identities if name not in known]
        if unknown:
            raise ConfigError(f"unknown identities {unknown}; expected a subset of {sorted(known)}")
        try:
            self.kinds()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def kinds(self) -> list[KKind]:
        return [KKind.parse(label) for label in self.k_kinds]

    @classmethod
    def from_yaml(cls, path: str | Path, **overrides) -> "RunConfig":
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping at the top level")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"{path}: unknown configuration keys {unknown}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def resolve_metric(source: str) -> MetricSpec:
    """A built-in metric by name, otherwise a metric file path."""
    if source in CORPUS:
        return builtin(source)
    if not Path(source).exists():
        raise UnknownMetricError(f"{source!r} is neither a built-in metric nor an existing file")
    return load_metric(source)


def _residual_record(r: Residual) -> dict[str, Any] | None:
    if not r.applicable:
        return None
    return {
        "max_abs": r.max_abs,
        "scale": r.scale,
        "relative": r.relative,
        "worst_index": list(r.worst_index) if r.worst_index is not None else None,
    }


def _relative(a, b) -> float:
    diff = (a - b).max_abs()
    return diff / max(1.0, a.max_abs(), b.max_abs())


def k_tensor_checks(cp, kind: KKind) -> dict[str, float]:
    """Direct jet differentiation of a K tensor against its closed forms."""
    return {
        "divergence": _relative(k_divergence(cp, kind, "direct"), k_divergence(cp, kind, "closed_form")),
        "bianchi_source": k_bianchi_B(cp, kind).discrepancy,
        "source_divergence": _relative(k_div_B(cp, kind, "direct"), k_div_B(cp, kind, "closed_form")),
    }


@dataclass
class Report:
    metric: str
    dim: int
    signature: tuple[int, int]
    config: RunConfig
    records: list[dict[str, Any]]
    summary: dict[str, Any]
    structures: StructureReport | None

    @property
    def passed(self) -> bool:
        return self.summary["passed"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "metric": self.metric,
            "dim": self.dim,
            "signature": list(self.signature),
            "config": dataclasses.asdict(self.config),
            "points": self.records,
            "summary": self.summary,
            "structures": dataclasses.asdict(self.structures) if self.structures is not None else None,
        }


def _labels(config: RunConfig, dim: int) -> list[tuple[str, IdentityId, KKind | None]]:
    labels = []
    for id in IdentityId:
        if id.value not in config.identities:
            continue
        if id is IdentityId.K_LOVELOCK:
            labels += [(identity_label(id, k), id, k) for k in config.kinds() if dim >= k.min_dim]
        else:
            labels.append((id.value, id, None))
    return labels


def run_suite(config: RunConfig, *, quiet: bool = True) -> Report:
    spec = resolve_metric(config.metric)
    points = sample_points(spec, config.points, config.seed)
    labels = _labels(config, spec.dim)
    kinds = [k for k in config.kinds() if spec.dim >= k.min_dim]
    logger.info("verifying %s at %d points (seed %d)", spec.name, len(points), config.seed)

    records, signature = [], None
    for index, point in enumerate(tqdm(points, desc=spec.name, disable=quiet)):
        cp = riemann_at(spec, point)
        signature = cp.metric.signature
        records.append(
            {
                "index": index,
                "coords": list(cp.point),
                "scalar": cp.scalar,
                "identities": {label: _residual_record(residual(cp, id, kind)) for label, id, kind in labels},
                "k_tensors": {kind.label: k_tensor_checks(cp, kind) for kind in kinds},
            }
        )

    summary = _summarize(records, labels, kinds, config.tol)
    for label, entry in summary["identities"].items():
        if entry["max_relative"] is None:
            logger.warning("%s is not applicable on %s", label, spec.name)
    structures = classify(spec, points, tolerance=config.tol, progress=not quiet) if config.structures else None
    return Report(spec.name, spec.dim, signature, config, records, summary, structures)


def _summarize(records, labels, kinds, tol: float) -> dict[str, Any]:
    asserted_ids = set(UNIVERSAL) | {IdentityId.LICHNEROWICZ}
    identities = {}
    for label, id, _ in labels:
        values = [r["identities"][label]["relative"] for r in records if r["identities"][label] is not None]
        worst = max(values) if values else None
        asserted = id in asserted_ids and worst is not None
        identities[label] = {
            "max_relative": worst,
            "asserted": asserted,
            "passed": (worst <= tol) if asserted else None,
        }
    k_tensors = {}
    for kind in kinds:
        per_point = [r["k_tensors"][kind.label] for r in records]
        checks = {name: max(p[name] for p in per_point) for name in per_point[0]}
        k_tensors[kind.label] = {**checks, "passed": all(v <= tol for v in checks.values())}
    passed = all(e["passed"] is not False for e in identities.values()) and all(
        e["passed"] for e in k_tensors.values()
    )
    return {"identities": identities, "k_tensors": k_tensors, "passed": passed, "tol": tol}


def emit(report: Report, format: Literal["text", "json"]) -> bytes:
    if format == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")
    if format != "text":
        raise ValueError(f"format must be 'text' or 'json', got {format!r}")
    return _text(report).encode("utf-8")


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3e}"


def _text(report: Report) -> str:
    summary = report.summary
    neg, pos = report.signature
    lines = [
        f"metric {report.metric}  dim {report.dim}  signature ({neg}, {pos})",
        f"points {report.config.points}  seed {report.config.seed}  tol {report.config.tol:g}",
        "",
        f"{'identity':<28} {'max relative':>14}  status",
    ]
    for label, entry in summary["identities"].items():
        status = {True: "ok", False: "FAIL", None: "reported"}[entry["passed"]]
        lines.append(f"{label:<28} {_fmt(entry['max_relative']):>14}  {status}")
    if summary["k_tensors"]:
        lines += ["", f"{'K tensor':<28} {'divergence':>14} {'B tensor':>14} {'div B':>14}  status"]
        for label, entry in summary["k_tensors"].items():
            lines.append(
                f"{label:<28} {_fmt(entry['divergence']):>14} {_fmt(entry['bianchi_source']):>14} "
                f"{_fmt(entry['source_divergence']):>14}  {'ok' if entry['passed'] else 'FAIL'}"
            )
    if report.structures is not None:
        lines += ["", _structures_text(report.structures)]
    lines += ["", "PASS" if report.passed else "FAIL"]
    return "\n".join(lines) + "\n"


def _structures_text(s: StructureReport) -> str:
    lines = [f"{'structure':<28} {'residual':>14}  holds"]
    for name in ("locally_symmetric", "harmonic", "ncs", "semisymmetric", "constant_curvature"):
        flag = getattr(s, name)
        lines.append(f"{name:<28} {_fmt(flag.residual):>14}  {'yes' if flag.holds else 'no'}")
    pseudo = s.pseudosymmetric
    state = "degenerate Q" if pseudo["degenerate"] else f"fit residual {_fmt(pseudo['fit_residual'])}"
    lines.append(f"{'pseudosymmetric':<28} {state}")
    rec = s.recurrent
    lines.append(
        f"{'recurrent':<28} {_fmt(rec.fit_residual) if rec.fittable else 'unfittable':>14}  "
        f"closedness {_fmt(rec.closedness)}"
    )
    gen = s.generalized_recurrent
    lines.append(
        f"{'generalized recurrent':<28} {_fmt(gen.fit_residual) if gen.fittable else 'unfittable':>14}  "
        f"closedness {_fmt(gen.closedness)}{'  rank deficient' if gen.rank_deficient else ''}"
    )
    for label, k in s.k_recurrent.items():
        lines.append(f"{'recurrent ' + label:<28} {_fmt(k.fit_residual) if k.fittable else 'unfittable':>14}")
    if s.wrs is not None:
        lines.append(f"{'weakly Ricci symmetric':<28} {s.wrs.status:>14}  fit residual {_fmt(s.wrs.fit_residual)}")
    return "\n".join(lines)
