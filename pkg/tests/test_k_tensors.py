import pytest
import torch

from conftest import corpus_points
from curvcheck.geometry.curvature import riemann_divergence
from curvcheck.geometry.k_tensors import (
    ALL_KINDS,
    KCoefficients,
    KindDimensionError,
    KKind,
    k_bianchi_B,
    k_div_B,
    k_divergence,
    k_divergence_form,
    k_field_derivatives,
    k_tensor,
)

WITNESSES = ["sphere_s3", "schwarzschild", "flrw_dust", "ppwave_rec", "product_s2xr"]


def _relative(a, b) -> float:
    return (a - b).max_abs() / max(1.0, a.max_abs(), b.max_abs())


class TestKinds:
    @pytest.mark.parametrize(
        "kind, expected",
        [
            ("projective", KCoefficients(1.0, 1 / 3, 0.0, 0.0)),
            ("conformal", KCoefficients(1.0, 0.5, 0.5, -1 / 6)),
            ("concircular", KCoefficients(1.0, 0.0, 0.0, 1 / 12)),
            ("conharmonic", KCoefficients(1.0, 0.5, 0.5, 0.0)),
            ("quasi", KCoefficients(1.0, -0.5, -0.5, 1 / 6 + 1 / 6)),
        ],
    )
    def test_coefficients_in_four_dimensions(self, kind, expected):
        got = KKind.parse(kind).coefficients(4)
        assert got.rho == pytest.approx(expected.rho)
        assert got.alpha == pytest.approx(expected.alpha)
        assert got.beta == pytest.approx(expected.beta)
        assert got.gamma == pytest.approx(expected.gamma)

    def test_quasi_without_b_is_concircular(self):
        assert KKind("quasi", 1.0, 0.0).coefficients(5) == KKind("concircular").coefficients(5)

    def test_parse(self):
        kind = KKind.parse("quasi:2:0.25")
        assert (kind.a, kind.b, kind.label) == (2.0, 0.25, "quasi:2:0.25")
        assert KKind.parse(" Conformal ").label == "conformal"
        assert [k.label for k in ALL_KINDS] == ["projective", "conformal", "concircular", "conharmonic", "quasi"]

    @pytest.mark.parametrize("text", ["weyl", "conformal:1:2", "quasi:1", "quasi:a:b", "quasi:0:0"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            KKind.parse(text)

    @pytest.mark.parametrize("kind, n", [("conformal", 2), ("conharmonic", 2), ("quasi", 2), ("projective", 1)])
    def test_minimum_dimension(self, kind, n):
        with pytest.raises(KindDimensionError):
            KKind(kind).coefficients(n)

    def test_divergence_form_constants(self):
        form = k_divergence_form(KKind("conformal"), 4)
        assert form.A == pytest.approx(0.5)
        assert form.B == pytest.approx(1 / 12)
        torch.testing.assert_close(form.codazzi.components, -torch.eye(4, dtype=torch.float64))
        quasi = k_divergence_form(KKind("quasi", 1.0, 0.5), 4)
        assert quasi.A == pytest.approx(1.5)
        assert quasi.B == pytest.approx(2 / 24)


class TestValues:
    @pytest.mark.parametrize("name", ["sphere_s2", "sphere_s3", "hyperbolic_h2"])
    def test_concircular_vanishes_on_constant_curvature(self, name):
        for cp in corpus_points(name):
            assert k_tensor(cp, KKind("concircular")).max_abs() <= 1e-10

    def test_weyl_of_conformally_flat(self):
        for cp in corpus_points("flrw_dust"):
            assert k_tensor(cp, KKind("conformal")).max_abs() <= 1e-9

    def test_weyl_of_ricci_flat_is_riemann(self, schwarzschild):
        for cp in schwarzschild:
            for name in ("conformal", "projective", "conharmonic", "concircular"):
                assert _relative(k_tensor(cp, KKind(name)), cp.riemann) <= 1e-9

    def test_weyl_is_traceless(self):
        for cp in corpus_points("ppwave_rec") + corpus_points("flrw_dust"):
            k = k_tensor(cp, KKind("conformal")).components
            assert torch.einsum("abcb->ac", k).abs().max() <= 1e-9 * max(1.0, cp.riemann.max_abs())

    def test_projective_is_ricci_traceless(self):
        for cp in corpus_points("product_s2xr"):
            p = k_tensor(cp, KKind("projective")).components
            assert torch.einsum("abcb->ac", p).abs().max() <= 1e-10


@pytest.mark.parametrize("name", WITNESSES)
@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.label)
class TestClosedForms:
    def test_divergence(self, name, kind):
        for cp in corpus_points(name):
            if cp.dim < kind.min_dim:
                pytest.skip(f"{kind.label} needs dim >= {kind.min_dim}")
            assert _relative(k_divergence(cp, kind, "direct"), k_divergence(cp, kind, "closed_form")) <= 1e-8

    def test_divergence_form_reconstructs(self, name, kind):
        for cp in corpus_points(name):
            if cp.dim < kind.min_dim:
                pytest.skip(f"{kind.label} needs dim >= {kind.min_dim}")
            form = k_divergence_form(kind, cp.dim, cp)
            rebuilt = form.reconstruct(riemann_divergence(cp))
            assert _relative(rebuilt, k_divergence(cp, kind)) <= 1e-9

    def test_bianchi_source(self, name, kind):
        for cp in corpus_points(name):
            if cp.dim < kind.min_dim:
                pytest.skip(f"{kind.label} needs dim >= {kind.min_dim}")
            assert k_bianchi_B(cp, kind).discrepancy <= 1e-8

    def test_source_divergence(self, name, kind):
        for cp in corpus_points(name)[:1]:
            if cp.dim < kind.min_dim:
                pytest.skip(f"{kind.label} needs dim >= {kind.min_dim}")
            assert _relative(k_div_B(cp, kind, "direct"), k_div_B(cp, kind, "closed_form")) <= 1e-8


def test_derivatives_of_k_match_k():
    cp = corpus_points("flrw_dust")[0]
    derivs = k_field_derivatives(cp, KKind("projective"))
    torch.testing.assert_close(derivs.k.components, k_tensor(cp, KKind("projective")).components)
    assert derivs.nabla2_k.valence == "dddddu"


def test_mode_is_checked():
    cp = corpus_points("sphere_s3")[0]
    with pytest.raises(ValueError, match="mode"):
        k_divergence(cp, KKind("projective"), "numeric")
