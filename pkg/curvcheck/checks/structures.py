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

"""Differential structures at sampled points.

Fitted covectors are pointwise least-squares solutions, so anything that needs
their derivatives (closedness, the commutator of a generalized recurrence) uses
second-order central differences of refits at x ± h e_i.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import torch
from einops import rearrange
from tqdm import tqdm

from ..geometry.curvature import CurvaturePoint, commutator_action, nabla, riemann_at, riemann_divergence
from ..geometry.k_tensors import ALL_KINDS, KKind, k_div_B, k_divergence, k_divergence_form, k_field
from ..metric.dsl import MetricSpec
from .identities import (
    DEGENERATE_TOL,
    Identity,
    Residual,
    Term,
    pseudosymmetry_fit,
    tachibana,
)

logger = logging.getLogger(__name__)

FD_STEP = 1e-3
CLOSEDNESS_TOL = 1e-5
CONSTANT_CURVATURE_TOL = 1e-8
RANK_TOL = 1e-10

Target = Literal["riemann"] | KKind
CovectorFn = Callable[[CurvaturePoint], torch.Tensor | None]


def _norm(t: torch.Tensor) -> float:
    return float(torch.linalg.vector_norm(t))


def _relative_remainder(remainder: torch.Tensor, reference: torch.Tensor) -> float:
    ref = _norm(reference)
    return 0.0 if ref == 0 else _norm(remainder) / ref


def _wedge(u: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    return torch.outer(u, v) - torch.outer(v, u)


def _max_abs(t: torch.Tensor) -> float:
    return float(t.abs().max()) if t.numel() else 0.0


def g_wedge(cp: CurvaturePoint) -> torch.Tensor:
    """δ^e_b g_cd − δ^e_c g_bd with slots (b, c, d, e)."""
    g = cp.metric.g.components
    eye = torch.eye(cp.dim, dtype=g.dtype)
    return torch.einsum("eb,cd->bcde", eye, g) - torch.einsum("ec,bd->bcde", eye, g)


# -- pointwise fits -------------------------------------------------------------------------------


def _target_and_gradient(cp: CurvaturePoint, target: Target) -> tuple[torch.Tensor, torch.Tensor]:
    if isinstance(target, KKind):
        k = k_field(cp, target)
        return k.value().components, nabla(k, cp.geometry.gamma).value().components
    if target != "riemann":
        raise ValueError(f"recurrence target must be 'riemann' or a K tensor kind, got {target!r}")
    return cp.riemann.components, cp.nabla_riemann.components


@dataclass(frozen=True)
class CovectorFit:
    """A fitted covector at one point; ``values`` is None when the target vanishes."""

    values: torch.Tensor | None
    fit_residual: float

    @property
    def fittable(self) -> bool:
        return self.values is not None


def recurrence_at(cp: CurvaturePoint, target: Target = "riemann") -> CovectorFit:
    """λ_a = <∇_a T, T> / <T, T>, the least-squares solution of ∇_a T = λ_a T."""
    t, dt = _target_and_gradient(cp, target)
    norm2 = float((t * t).sum())
    if norm2 <= DEGENERATE_TOL**2:
        return CovectorFit(None, 0.0)
    flat_t = t.reshape(-1)
    flat_dt = dt.reshape(cp.dim, -1)
    lam = flat_dt @ flat_t / norm2
    return CovectorFit(lam, _relative_remainder(flat_dt - torch.outer(lam, flat_t), flat_dt))


@dataclass(frozen=True)
class GeneralizedFit:
    lam: torch.Tensor | None
    mu: torch.Tensor | None
    fit_residual: float
    rank_deficient: bool

    @property
    def fittable(self) -> bool:
        return self.lam is not None


def generalized_recurrence_at(cp: CurvaturePoint) -> GeneralizedFit:
    """Joint least squares of ∇_a R_bcd^e = λ_a R_bcd^e + μ_a (δ^e_b g_cd − δ^e_c g_bd)."""
    r = cp.riemann.components
    if _norm(r) <= DEGENERATE_TOL:
        return GeneralizedFit(None, None, 0.0, False)
    design = torch.stack([r.reshape(-1), g_wedge(cp).reshape(-1)], dim=1)
    rhs = rearrange(cp.nabla_riemann.components, "a b c d e -> (b c d e) a")
    s = torch.linalg.svdvals(design)
    rank_deficient = bool(s[-1] <= RANK_TOL * s[0])
    solution = torch.linalg.lstsq(design, rhs, driver="gelsd").solution
    lam, mu = solution[0], solution[1]
    return GeneralizedFit(lam, mu, _relative_remainder(design @ solution - rhs, rhs), rank_deficient)


@dataclass(frozen=True)
class WRSFit:
    A: torch.Tensor | None
    B: torch.Tensor | None
    D: torch.Tensor | None
    fit_residual: float
    rank_deficient: bool
    degenerate: bool

    @property
    def fittable(self) -> bool:
        return self.A is not None


def wrs_at(cp: CurvaturePoint) -> WRSFit:
    """Least squares of ∇_a R_bc = A_a R_bc + B_b R_ac + D_c R_ab over the 3n unknowns."""
    n = cp.dim
    ric = cp.ricci.components
    if _norm(ric) <= DEGENERATE_TOL:
        return WRSFit(None, None, None, 0.0, False, False)
    eye = torch.eye(n, dtype=ric.dtype)
    design = torch.cat(
        [
            torch.einsum("ai,bc->abci", eye, ric),
            torch.einsum("bi,ac->abci", eye, ric),
            torch.einsum("ci,ab->abci", eye, ric),
        ],
        dim=-1,
    ).reshape(n**3, 3 * n)
    rhs = cp.nabla_ricci.components.reshape(n**3)
    s = torch.linalg.svdvals(design)
    rank = int((s > RANK_TOL * s[0]).sum())
    solution = torch.linalg.lstsq(design, rhs.unsqueeze(-1), driver="gelsd").solution.squeeze(-1)
    a, b, d = solution.split(n)
    degenerate = _norm(rhs) <= DEGENERATE_TOL
    return WRSFit(a, b, d, _relative_remainder(design @ solution - rhs, rhs), rank < 3 * n, degenerate)


# -- finite differences of fitted covectors -------------------------------------------------------


def covector_jacobian(
    spec: MetricSpec, point: Sequence[float], covector: CovectorFn, step: float = FD_STEP
) -> torch.Tensor | None:
    """J[i, j] = ∂_i v_j by central differences of refits; None when a neighbour cannot be fit."""
    n = spec.dim
    rows = []
    for i in range(n):
        values = []
        for sign in (1.0, -1.0):
            shifted = list(point)
            shifted[i] += sign * step
            v = covector(riemann_at(spec, shifted, derivatives=1, strict=False))
            if v is None:
                return None
            values.append(v)
        rows.append((values[0] - values[1]) / (2 * step))
    return torch.stack(rows)


def curl(jacobian: torch.Tensor) -> torch.Tensor:
    """∇_a v_b − ∇_b v_a; the connection terms cancel for a symmetric connection."""
    return jacobian - jacobian.T


def closedness_residual(spec: MetricSpec, point: Sequence[float], covector: CovectorFn, step: float = FD_STEP):
    jac = covector_jacobian(spec, point, covector, step)
    return None if jac is None else _max_abs(curl(jac))


# -- scalar residuals -----------------------------------------------------------------------------


def constant_curvature_residual(cp: CurvaturePoint) -> float:
    """max |R_abcd − R/(n(n−1)) (g_bd g_ac − g_ad g_bc)|."""
    n = cp.dim
    g = cp.metric.g.components
    model = torch.einsum("bd,ac->abcd", g, g) - torch.einsum("ad,bc->abcd", g, g)
    return _max_abs(cp.riemann_low.components - cp.scalar / (n * (n - 1)) * model)


def semisymmetric_residual(cp: CurvaturePoint) -> float:
    assert cp.nabla2_riemann is not None, "curvature evaluated without second derivatives"
    n2 = cp.nabla2_riemann.components
    return _max_abs(n2 - rearrange(n2, "b a c d e f -> a b c d e f"))


def ncs_identity(cp: CurvaturePoint) -> Identity:
    """∇_a R_bc − ∇_b R_ac = (g_bc ∇_a R − g_ac ∇_b R) / (2(n−1))."""
    n = cp.dim
    nr = cp.nabla_ricci.components
    g = cp.metric.g.components
    ds = cp.nabla_scalar.components
    source = (torch.einsum("bc,a->abc", g, ds) - torch.einsum("ac,b->abc", g, ds)) / (2 * (n - 1))
    terms = (
        Term("∇_a R_bc", 1.0, nr),
        Term("∇_b R_ac", -1.0, rearrange(nr, "b a c -> a b c")),
        Term("scalar gradient", -1.0, source),
    )
    return Identity("NCS", terms)


def ncs_residual(cp: CurvaturePoint) -> Residual:
    return ncs_identity(cp).residual()


def ncs_from_weyl(cp: CurvaturePoint) -> torch.Tensor:
    """The NCS defect rebuilt from the Weyl divergence, −(n−2)/(n−3) ∇_m C_abc^m; needs n ≥ 4."""
    n = cp.dim
    if n < 4:
        raise ValueError(f"the Weyl divergence carries the NCS defect only for n >= 4, got {n}")
    return -(n - 2) / (n - 3) * k_divergence(cp, KKind("conformal")).components


@dataclass(frozen=True)
class PseudosymmetryResult:
    l_r: float
    fit_residual: float
    degenerate: bool


def pseudosymmetric_fit(cp: CurvaturePoint) -> PseudosymmetryResult:
    fit = pseudosymmetry_fit(cp)
    n2 = cp.nabla2_riemann_low
    commutator = n2 - rearrange(n2, "b a c d e f -> a b c d e f")
    if fit.degenerate:
        return PseudosymmetryResult(0.0, _max_abs(commutator), True)
    q = rearrange(tachibana(cp).components, "c d e f a b -> a b c d e f")
    return PseudosymmetryResult(fit.l_r, _relative_remainder(commutator - fit.l_r * q, commutator), False)


def krm_residual(cp: CurvaturePoint, kind: KKind) -> Residual:
    """A (R_am R_bce^m + cyclic) − ∇_m B_abce^m for a K-recurrent metric with closed λ."""
    form = k_divergence_form(kind, cp.dim)
    rr = torch.einsum("am,bcem->abce", cp.ricci.components, cp.riemann.components)
    cyclic = rr + rearrange(rr, "b c a e -> a b c e") + rearrange(rr, "c a b e -> a b c e")
    terms = (Term("A R_am R_bce^m", form.A, cyclic), Term("∇_m B_abce^m", -1.0, k_div_B(cp, kind).components))
    return Identity(f"KRM[{kind.label}]", terms).residual()


# -- per-structure reports over several points ----------------------------------------------------


def _to_list(t: torch.Tensor | None) -> list[float] | None:
    return None if t is None else [float(x) for x in t]


def _points(points: Sequence[Sequence[float]]) -> list[tuple[float, ...]]:
    if not points:
        raise ValueError("at least one sample point is required")
    return [tuple(float(x) for x in p) for p in points]


@dataclass
class RecurrenceReport:
    target: str
    fittable: bool
    fit_residual: float
    lambdas: list[list[float] | None]
    closedness: float | None


def fit_recurrence(
    spec: MetricSpec, points: Sequence[Sequence[float]], target: Target = "riemann", *, step: float = FD_STEP
) -> RecurrenceReport:
    points = _points(points)

    def covector(cp: CurvaturePoint):
        return recurrence_at(cp, target).values

    label = target.label if isinstance(target, KKind) else target
    fits = [recurrence_at(riemann_at(spec, p, derivatives=1), target) for p in points]
    fittable = all(f.fittable for f in fits)
    if not fittable:
        logger.warning("recurrence target %s vanishes on %s; no covector fitted", label, spec.name)
    closed = None
    if fittable:
        closed = max(
            (c for c in (closedness_residual(spec, p, covector, step) for p in points) if c is not None), default=None
        )
    return RecurrenceReport(
        target=label,
        fittable=fittable,
        fit_residual=max(f.fit_residual for f in fits),
        lambdas=[_to_list(f.values) for f in fits],
        closedness=closed,
    )


@dataclass
class GeneralizedRecurrenceReport:
    fittable: bool
    fit_residual: float
    rank_deficient: bool
    lambdas: list[list[float] | None]
    mus: list[list[float] | None]
    collinearity: float
    contracted_residual: float
    commutator_residual: float | None
    closedness: float | None
    constant_curvature: float

    @property
    def dichotomy_holds(self) -> bool:
        """Either λ is closed or the curvature is constant."""
        closed = self.closedness is not None and self.closedness <= CLOSEDNESS_TOL
        return closed or self.constant_curvature <= CONSTANT_CURVATURE_TOL


def _contracted_residual(cp: CurvaturePoint, lam: torch.Tensor, mu: torch.Tensor) -> float:
    """∇_a R_bd = λ_a R_bd − (n−1) μ_a g_bd and ∇_a R = λ_a R − n(n−1) μ_a."""
    n = cp.dim
    g = cp.metric.g.components
    ricci = cp.nabla_ricci.components - torch.einsum("a,bd->abd", lam, cp.ricci.components)
    ricci = ricci + (n - 1) * torch.einsum("a,bd->abd", mu, g)
    scalar = cp.nabla_scalar.components - lam * cp.scalar + n * (n - 1) * mu
    return max(_max_abs(ricci), _max_abs(scalar))


def _commutator_residual(cp: CurvaturePoint, fit: GeneralizedFit, d_lam: torch.Tensor, d_mu: torch.Tensor) -> float:
    """[∇_a, ∇_b] R_cde^f against (dλ)_ab R + (dμ − λ ∧ μ)_ab (δ^f_c g_de − δ^f_d g_ce)."""
    lhs = commutator_action(cp, cp.riemann).components
    rhs = torch.einsum("ab,cdef->abcdef", curl(d_lam), cp.riemann.components)
    rhs = rhs + torch.einsum("ab,cdef->abcdef", curl(d_mu) - _wedge(fit.lam, fit.mu), g_wedge(cp))
    return _max_abs(lhs - rhs)


def _lambda_mu(cp: CurvaturePoint) -> torch.Tensor | None:
    fit = generalized_recurrence_at(cp)
    return torch.cat([fit.lam, fit.mu]) if fit.fittable else None


def fit_generalized_recurrence(
    spec: MetricSpec, points: Sequence[Sequence[float]], *, step: float = FD_STEP
) -> GeneralizedRecurrenceReport:
    points = _points(points)
    cps = [riemann_at(spec, p) for p in points]
    fits = [generalized_recurrence_at(cp) for cp in cps]
    fittable = all(f.fittable for f in fits)
    if any(f.rank_deficient for f in fits):
        logger.warning("generalized recurrence fit on %s is rank deficient", spec.name)
    collinearity = contracted = 0.0
    commutator = closed = None
    if fittable:
        collinearity = max(_max_abs(_wedge(f.lam, f.mu)) for f in fits)
        contracted = max(_contracted_residual(cp, f.lam, f.mu) for cp, f in zip(cps, fits))
        commutators, closures = [], []
        for p, cp, f in zip(points, cps, fits):
            jac = covector_jacobian(spec, p, _lambda_mu, step)
            if jac is None:
                continue
            d_lam, d_mu = jac.split(spec.dim, dim=1)
            closures.append(_max_abs(curl(d_lam)))
            commutators.append(_commutator_residual(cp, f, d_lam, d_mu))
        closed = max(closures, default=None)
        commutator = max(commutators, default=None)
    return GeneralizedRecurrenceReport(
        fittable=fittable,
        fit_residual=max(f.fit_residual for f in fits),
        rank_deficient=any(f.rank_deficient for f in fits),
        lambdas=[_to_list(f.lam) for f in fits],
        mus=[_to_list(f.mu) for f in fits],
        collinearity=collinearity,
        contracted_residual=contracted,
        commutator_residual=commutator,
        closedness=closed,
        constant_curvature=max(constant_curvature_residual(cp) for cp in cps),
    )


@dataclass
class WRSReport:
    status: Literal["ok", "unfittable", "degenerate"]
    fit_residual: float
    rank_deficient: bool
    A: list[list[float] | None]
    B: list[list[float] | None]
    D: list[list[float] | None]
    ricci_det: float
    B_minus_D_norm: float
    A_minus_B_closedness: float | None
    lemma_residual_A_minus_B: float | None
    lemma_residual_A_minus_D: float | None
    wrs_rr_residual: float
    beta_eigen_residual: float | None
    beta_ricci_residual: float | None
    beta_closure_residual: float | None


def wrs_rr(cp: CurvaturePoint) -> torch.Tensor:
    """R_dm R_bac^m + R_bm R_adc^m + R_am R_dbc^m indexed (a, b, c, d)."""
    ric, r = cp.ricci.components, cp.riemann.components
    return (
        torch.einsum("dm,bacm->abcd", ric, r)
        + torch.einsum("bm,adcm->abcd", ric, r)
        + torch.einsum("am,dbcm->abcd", ric, r)
    )


def _ricci_curl_sum(ric: torch.Tensor, f: torch.Tensor) -> torch.Tensor:
    """R_cb F_da + R_ca F_bd + R_cd F_ab indexed (a, b, c, d), F the curl of a covector."""
    return (
        torch.einsum("da,cb->abcd", f, ric) + torch.einsum("bd,ca->abcd", f, ric) + torch.einsum("ab,cd->abcd", f, ric)
    )


def _beta_curl_sum(beta: torch.Tensor, f: torch.Tensor) -> torch.Tensor:
    """β_b F_da + β_a F_bd + β_d F_ab indexed (a, b, d)."""
    return (
        torch.einsum("da,b->abd", f, beta) + torch.einsum("bd,a->abd", f, beta) + torch.einsum("ab,d->abd", f, beta)
    )


def fit_wrs(spec: MetricSpec, points: Sequence[Sequence[float]], *, step: float = FD_STEP) -> WRSReport:
    points = _points(points)
    cps = [riemann_at(spec, p, derivatives=1) for p in points]
    fits = [wrs_at(cp) for cp in cps]
    rr = max(_max_abs(wrs_rr(cp)) for cp in cps)
    det = min(abs(float(torch.linalg.det(cp.mixed_ricci.components))) for cp in cps)
    report = dict(
        fit_residual=max(f.fit_residual for f in fits),
        rank_deficient=any(f.rank_deficient for f in fits),
        A=[_to_list(f.A) for f in fits],
        B=[_to_list(f.B) for f in fits],
        D=[_to_list(f.D) for f in fits],
        ricci_det=det,
        wrs_rr_residual=rr,
    )
    if not all(f.fittable for f in fits):
        logger.warning("Ricci tensor of %s vanishes; weakly Ricci symmetric fit skipped", spec.name)
        return WRSReport(status="unfittable", B_minus_D_norm=0.0, **report, **_no_wrs_derivatives())
    b_minus_d = max(_norm(f.B - f.D) for f in fits)
    if any(f.degenerate for f in fits):
        return WRSReport(status="degenerate", B_minus_D_norm=b_minus_d, **report, **_no_wrs_derivatives())

    closures, lemma_ab, lemma_ad, eigen, beta_ricci, beta_closure = [], [], [], [], [], []
    for p, cp, f in zip(points, cps, fits):
        jac = covector_jacobian(spec, p, _wrs_covectors, step)
        d_ab = d_ad = d_beta = None
        if jac is not None:
            d_a, d_b, d_d = jac.split(spec.dim, dim=1)
            d_ab, d_ad, d_beta = d_a - d_b, d_a - d_d, d_b - d_d
        ric = cp.ricci.components
        rhs = wrs_rr(cp)
        if d_ab is not None:
            closures.append(_max_abs(curl(d_ab)))
            lemma_ab.append(_max_abs(_ricci_curl_sum(ric, curl(d_ab)) - rhs))
        if d_ad is not None:
            lemma_ad.append(_max_abs(_ricci_curl_sum(ric, curl(d_ad)) - rhs))
        beta = f.B - f.D
        if _norm(beta) > DEGENERATE_TOL:
            beta_up = cp.metric.g_inv.components @ beta
            eigen.append(_max_abs(cp.mixed_ricci.components @ beta_up - cp.scalar * beta_up))
            if d_beta is not None:
                fb = curl(d_beta)
                beta_ricci.append(_max_abs(_ricci_curl_sum(ric, fb)))
                beta_closure.append(_max_abs(_beta_curl_sum(beta, fb)))
    return WRSReport(
        status="ok",
        B_minus_D_norm=b_minus_d,
        A_minus_B_closedness=max(closures, default=None),
        lemma_residual_A_minus_B=max(lemma_ab, default=None),
        lemma_residual_A_minus_D=max(lemma_ad, default=None),
        beta_eigen_residual=max(eigen, default=None),
        beta_ricci_residual=max(beta_ricci, default=None),
        beta_closure_residual=max(beta_closure, default=None),
        **report,
    )


def _no_wrs_derivatives() -> dict:
    return dict(
        A_minus_B_closedness=None,
        lemma_residual_A_minus_B=None,
        lemma_residual_A_minus_D=None,
        beta_eigen_residual=None,
        beta_ricci_residual=None,
        beta_closure_residual=None,
    )


def _wrs_covectors(cp: CurvaturePoint) -> torch.Tensor | None:
    fit = wrs_at(cp)
    return torch.cat([fit.A, fit.B, fit.D]) if fit.fittable else None


# -- classification -------------------------------------------------------------------------------


@dataclass
class Flag:
    holds: bool
    residual: float


@dataclass
class StructureReport:
    metric: str
    points: list[tuple[float, ...]]
    tolerance: float
    locally_symmetric: Flag
    harmonic: Flag
    ncs: Flag
    semisymmetric: Flag
    constant_curvature: Flag
    pseudosymmetric: dict
    recurrent: RecurrenceReport
    generalized_recurrent: GeneralizedRecurrenceReport
    k_recurrent: dict[str, RecurrenceReport] = field(default_factory=dict)
    wrs: WRSReport | None = None


def _flag(value: float, tolerance: float) -> Flag:
    return Flag(value <= tolerance, value)


def classify(
    spec: MetricSpec,
    points: Sequence[Sequence[float]],
    *,
    tolerance: float = 1e-8,
    step: float = FD_STEP,
    progress: bool = False,
) -> StructureReport:
    """Structure flags and fits for ``spec``; every residual is a maximum over ``points``."""
    points = _points(points)
    cps = [riemann_at(spec, p) for p in tqdm(points, desc=f"classify {spec.name}", disable=not progress)]
    pseudo = [pseudosymmetric_fit(cp) for cp in cps]
    kinds = [kind for kind in ALL_KINDS if spec.dim >= kind.min_dim]
    logger.info("classifying %s at %d points", spec.name, len(points))
    return StructureReport(
        metric=spec.name,
        points=points,
        tolerance=tolerance,
        locally_symmetric=_flag(max(cp.nabla_riemann.max_abs() for cp in cps), tolerance),
        harmonic=_flag(max(riemann_divergence(cp).max_abs() for cp in cps), tolerance),
        ncs=_flag(max(ncs_residual(cp).max_abs for cp in cps), tolerance),
        semisymmetric=_flag(max(semisymmetric_residual(cp) for cp in cps), tolerance),
        constant_curvature=_flag(max(constant_curvature_residual(cp) for cp in cps), tolerance),
        pseudosymmetric={
            "degenerate": any(p.degenerate for p in pseudo),
            "L_R": [p.l_r for p in pseudo],
            "fit_residual": max(p.fit_residual for p in pseudo),
        },
        recurrent=fit_recurrence(spec, points, step=step),
        generalized_recurrent=fit_generalized_recurrence(spec, points, step=step),
        k_recurrent={kind.label: fit_recurrence(spec, points, kind, step=step) for kind in kinds},
        wrs=fit_wrs(spec, points, step=step),
    )
