import dataclasses

import pytest
import torch

from conftest import SEED, corpus_points, generic_point
from curvcheck.checks.identities import IdentityId, residual
from curvcheck.checks.structures import (
    classify,
    constant_curvature_residual,
    fit_generalized_recurrence,
    fit_recurrence,
    fit_wrs,
    krm_residual,
    ncs_from_weyl,
    ncs_identity,
    pseudosymmetric_fit,
    recurrence_at,
    semisymmetric_residual,
)
from curvcheck.geometry.k_tensors import KKind
from curvcheck.metric import builtin
from curvcheck.metric.dsl import BinOp, Const
from curvcheck.sampling import sample_points


def _points(name: str, count: int = 3):
    return sample_points(builtin(name), count, SEED)


def _rescaled(spec, factor: float):
    components = tuple(tuple(BinOp("*", Const(factor), e) for e in row) for row in spec.components)
    return dataclasses.replace(spec, components=components)


class TestRecurrence:
    def test_recurrent_plane_wave(self):
        report = fit_recurrence(builtin("ppwave_rec"), _points("ppwave_rec"))
        assert report.fittable
        assert report.fit_residual <= 1e-8
        for lam in report.lambdas:
            assert lam[0] == pytest.approx(1.0, abs=1e-6)
            assert max(abs(x) for x in lam[1:]) <= 1e-6
        assert report.closedness <= 1e-5

    @pytest.mark.parametrize("name", ["schwarzschild", "flrw_dust", "ppwave_rec"])
    def test_constant_rescale_leaves_fit_unchanged(self, name):
        spec = builtin(name)
        base = fit_recurrence(spec, _points(name))
        scaled = fit_recurrence(_rescaled(spec, 4.0), _points(name))
        assert scaled.fittable == base.fittable
        assert scaled.fit_residual == pytest.approx(base.fit_residual, abs=1e-10)
        for lam, lam4 in zip(base.lambdas, scaled.lambdas):
            torch.testing.assert_close(torch.tensor(lam4), torch.tensor(lam), rtol=1e-8, atol=1e-10)
        if base.closedness is not None:
            assert scaled.closedness == pytest.approx(base.closedness, abs=1e-6)

    def test_symmetric_plane_wave_has_zero_covector(self):
        for cp in corpus_points("ppwave_sym"):
            fit = recurrence_at(cp)
            assert fit.fittable
            assert fit.values.abs().max() <= 1e-10

    def test_flat_is_unfittable(self):
        report = fit_recurrence(builtin("flat_r4"), _points("flat_r4", 2))
        assert not report.fittable
        assert report.lambdas == [None, None]
        assert report.closedness is None

    def test_k_recurrence_labels_its_target(self):
        report = fit_recurrence(builtin("ppwave_rec"), _points("ppwave_rec", 2), KKind("conformal"))
        assert report.target == "conformal"
        # Weyl equals Riemann on a Ricci-flat metric
        assert report.fit_residual <= 1e-8

    def test_bad_target(self):
        with pytest.raises(ValueError, match="target"):
            recurrence_at(corpus_points("sphere_s3")[0], "ricci")

    def test_needs_points(self):
        with pytest.raises(ValueError, match="at least one"):
            fit_recurrence(builtin("sphere_s3"), [])


class TestGeneralizedRecurrence:
    def test_space_form(self):
        report = fit_generalized_recurrence(builtin("sphere_s3"), _points("sphere_s3", 2))
        assert report.rank_deficient
        assert report.constant_curvature <= 1e-10
        assert report.dichotomy_holds

    def test_recurrent_plane_wave(self):
        report = fit_generalized_recurrence(builtin("ppwave_rec"), _points("ppwave_rec", 2))
        assert report.fittable
        assert not report.rank_deficient
        assert report.fit_residual <= 1e-8
        for mu in report.mus:
            assert max(abs(x) for x in mu) <= 1e-6
        assert report.contracted_residual <= 1e-8
        assert report.closedness <= 1e-5
        assert report.dichotomy_holds


class TestWeaklyRicciSymmetric:
    def test_ricci_flat_is_unfittable(self):
        report = fit_wrs(builtin("schwarzschild"), _points("schwarzschild", 2))
        assert report.status == "unfittable"
        assert report.A == [None, None]
        assert report.lemma_residual_A_minus_B is None

    def test_parallel_ricci_is_degenerate(self):
        report = fit_wrs(builtin("sphere_s3"), _points("sphere_s3", 2))
        assert report.status == "degenerate"
        assert report.ricci_det == pytest.approx(8.0, rel=1e-8)
        assert report.A_minus_B_closedness is None

    def test_isotropic_fit_is_closed(self):
        # the fitted covectors are functions of t times dt, so A - B is closed
        report = fit_wrs(builtin("flrw_dust"), _points("flrw_dust"))
        assert report.status == "ok"
        assert report.fit_residual >= 0.0
        assert report.ricci_det > 1e-8
        assert report.A_minus_B_closedness is not None
        assert report.A_minus_B_closedness <= 1e-5


class TestResiduals:
    def test_constant_curvature(self, sphere3, schwarzschild):
        assert max(constant_curvature_residual(cp) for cp in sphere3) <= 1e-10
        assert min(constant_curvature_residual(cp) for cp in schwarzschild) > 1e-3

    def test_semisymmetric(self):
        for cp in corpus_points("ppwave_sym") + corpus_points("product_s2xr"):
            assert semisymmetric_residual(cp) <= 1e-10
        assert max(semisymmetric_residual(cp) for cp in corpus_points("schwarzschild")) > 1e-6

    def test_ncs_on_conformally_flat(self):
        for cp in corpus_points("flrw_dust"):
            assert ncs_identity(cp).residual().relative <= 1e-8
            assert ncs_from_weyl(cp).abs().max() <= 1e-8

    def test_ncs_defect_is_weyl_divergence(self):
        cp = generic_point()
        defect = ncs_identity(cp).total()
        assert float(defect.abs().max()) > 1e-6
        # compared as norms, which do not depend on slot order or sign
        assert float(torch.linalg.vector_norm(ncs_from_weyl(cp))) == pytest.approx(
            float(torch.linalg.vector_norm(defect)), rel=1e-8
        )

    def test_ncs_from_weyl_needs_four_dimensions(self, sphere3):
        with pytest.raises(ValueError, match="n >= 4"):
            ncs_from_weyl(sphere3[0])

    @pytest.mark.parametrize("name", ["ppwave_rec", "sphere_s3"])
    def test_k_recurrent_with_closed_covector(self, name):
        for cp in corpus_points(name):
            assert krm_residual(cp, KKind("projective")).relative <= 1e-8

    def test_k_recurrent_concircular_plane_wave(self):
        for cp in corpus_points("ppwave_rec"):
            assert krm_residual(cp, KKind("concircular")).relative <= 1e-7

    def test_pseudosymmetric_fit(self, sphere3, schwarzschild):
        for cp in sphere3:
            fit = pseudosymmetric_fit(cp)
            assert fit.degenerate
            assert fit.fit_residual <= 1e-10
        for cp in schwarzschild:
            fit = pseudosymmetric_fit(cp)
            assert not fit.degenerate
            assert fit.fit_residual >= 0.0


class TestClassify:
    def test_space_form(self):
        report = classify(builtin("sphere_s3"), _points("sphere_s3", 2))
        assert report.metric == "sphere_s3"
        assert report.locally_symmetric.holds
        assert report.harmonic.holds
        assert report.ncs.holds
        assert report.semisymmetric.holds
        assert report.constant_curvature.holds
        assert report.pseudosymmetric["degenerate"]
        assert report.wrs.status == "degenerate"
        assert not report.k_recurrent["concircular"].fittable
        assert report.generalized_recurrent.dichotomy_holds

    def test_schwarzschild(self):
        report = classify(builtin("schwarzschild"), _points("schwarzschild", 2))
        assert not report.locally_symmetric.holds
        assert report.harmonic.holds
        assert report.ncs.holds
        assert not report.constant_curvature.holds
        assert report.wrs.status == "unfittable"
        assert len(report.pseudosymmetric["L_R"]) == 2
        assert set(report.k_recurrent) == {"projective", "conformal", "concircular", "conharmonic", "quasi"}


def test_symmetry_implications(corpus_name):
    for cp in corpus_points(corpus_name):
        if cp.nabla_riemann.max_abs() > 1e-10:
            continue
        assert semisymmetric_residual(cp) <= 1e-10
        for id in (
            IdentityId.LOCALLY_SYMMETRIC_RRR,
            IdentityId.LOCALLY_SYMMETRIC_RR,
            IdentityId.LOCALLY_SYMMETRIC_RRRR,
        ):
            assert residual(cp, id).relative <= 1e-8, id
