import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from curvcheck.jets import (
    DTYPE,
    MAX_INT_EXPONENT,
    MAX_ORDER,
    Jet,
    SingularPointError,
    extract_partial,
    jet_einsum,
    jet_elementary,
    jet_gradient,
    jet_inverse,
    jet_pow_const,
    jet_pow_int,
    jet_variables,
    monomial_basis,
)

coefficient = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)


def random_jet(draw, dim: int = 2, order: int = 3) -> Jet:
    size = monomial_basis(dim, order).size
    values = draw(st.lists(coefficient, min_size=size, max_size=size))
    return Jet(dim, order, torch.tensor(values, dtype=DTYPE))


@st.composite
def jets(draw):
    return random_jet(draw)


@st.composite
def invertible_jets(draw):
    jet = random_jet(draw)
    jet.coeffs[0] = draw(st.floats(min_value=0.5, max_value=3.0)) * draw(st.sampled_from([-1.0, 1.0]))
    return jet


class TestBasis:
    def test_graded_order(self):
        basis = monomial_basis(2, 2)
        assert basis.exponents == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
        assert basis.blocks == ((0, 1), (1, 3), (3, 6))

    def test_lower_order_is_prefix(self):
        high, low = monomial_basis(3, 4), monomial_basis(3, 2)
        assert high.exponents[: low.size] == low.exponents

    @pytest.mark.parametrize("order", [-1, MAX_ORDER + 1])
    def test_order_range(self, order):
        with pytest.raises(ValueError):
            monomial_basis(2, order)

    def test_coefficient_count_checked(self):
        with pytest.raises(ValueError, match="needs 6 coefficients"):
            Jet(2, 2, torch.zeros(5, dtype=DTYPE))


class TestArithmetic:
    def test_product_of_variables(self):
        x, y = jet_variables([2.0, 3.0], 2)
        xy = x * y
        assert xy.constant.item() == 6.0
        assert extract_partial(xy, (1, 0)).item() == 3.0
        assert extract_partial(xy, (0, 1)).item() == 2.0
        assert extract_partial(xy, (1, 1)).item() == 1.0
        assert extract_partial(xy, (2, 0)).item() == 0.0

    def test_scalars_lift(self):
        (x,) = jet_variables([1.5], 2)
        expr = 2 - x * 3.0 + 1
        torch.testing.assert_close(expr.coeffs, torch.tensor([-1.5, -3.0, 0.0], dtype=DTYPE))

    def test_operands_must_agree(self):
        (x,) = jet_variables([1.0], 2)
        (y,) = jet_variables([1.0], 3)
        with pytest.raises(ValueError, match="disagree"):
            x + y

    @given(jets(), jets(), jets())
    @settings(max_examples=50, deadline=None)
    def test_product_is_associative(self, a, b, c):
        torch.testing.assert_close(((a * b) * c).coeffs, (a * (b * c)).coeffs, rtol=1e-12, atol=1e-12)

    @given(jets(), jets(), jets())
    @settings(max_examples=50, deadline=None)
    def test_product_distributes(self, a, b, c):
        torch.testing.assert_close((a * (b + c)).coeffs, (a * b + a * c).coeffs, rtol=1e-12, atol=1e-12)

    @given(jets(), invertible_jets())
    @settings(max_examples=50, deadline=None)
    def test_division_inverts_product(self, a, b):
        torch.testing.assert_close(((a / b) * b).coeffs, a.coeffs, rtol=1e-9, atol=1e-9)

    def test_division_by_zero_constant(self):
        x, _ = jet_variables([0.0, 1.0], 2)
        with pytest.raises(SingularPointError):
            1.0 / x
        with pytest.raises(SingularPointError):
            x / 0


class TestPowers:
    def test_integer_power_derivatives(self):
        (x,) = jet_variables([2.0], 3)
        cube = jet_pow_int(x, 3)
        assert [extract_partial(cube, (k,)).item() for k in range(4)] == [8.0, 12.0, 12.0, 6.0]

    def test_negative_integer_power(self):
        (x,) = jet_variables([2.0], 2)
        inv = x**-2
        torch.testing.assert_close(extract_partial(inv, (1,)), torch.tensor(-2 / 8, dtype=DTYPE))
        torch.testing.assert_close(extract_partial(inv, (2,)), torch.tensor(6 / 16, dtype=DTYPE))

    def test_real_power_matches_sqrt(self):
        x, y = jet_variables([1.3, 0.7], 4)
        base = x * x + y
        torch.testing.assert_close(jet_pow_const(base, 0.5).coeffs, jet_elementary(base, "sqrt").coeffs)

    def test_real_power_of_negative_base(self):
        (x,) = jet_variables([-1.0], 2)
        with pytest.raises(SingularPointError):
            jet_pow_const(x, 1.5)

    def test_integer_exponents_allow_negative_bases(self):
        (x,) = jet_variables([-1.1], 2)
        torch.testing.assert_close(jet_pow_const(x, 14.0).coeffs, jet_pow_int(x, 14).coeffs)
        torch.testing.assert_close(
            jet_pow_const(x, float(MAX_INT_EXPONENT)).coeffs, jet_pow_int(x, MAX_INT_EXPONENT).coeffs
        )
        with pytest.raises(SingularPointError):
            jet_pow_const(x, float(MAX_INT_EXPONENT + 1))


class TestElementary:
    @pytest.mark.parametrize("x0", [-0.7, 0.0, 1.2])
    def test_exp_derivatives(self, x0):
        (x,) = jet_variables([x0], MAX_ORDER)
        e = jet_elementary(x, "exp")
        for k in range(MAX_ORDER + 1):
            assert extract_partial(e, (k,)).item() == pytest.approx(math.exp(x0), rel=1e-13)

    def test_sin_second_derivative(self):
        x, y = jet_variables([0.4, 1.1], 3)
        s = jet_elementary(x * y, "sin")
        # ∂_x∂_y sin(xy) = cos(xy) − xy sin(xy)
        expected = math.cos(0.44) - 0.44 * math.sin(0.44)
        assert extract_partial(s, (1, 1)).item() == pytest.approx(expected, rel=1e-13)

    def test_log_undoes_exp(self):
        x, y = jet_variables([0.3, -0.2], 4)
        arg = x + x * y
        back = jet_elementary(jet_elementary(arg, "exp"), "log")
        torch.testing.assert_close(back.coeffs, arg.coeffs, rtol=1e-12, atol=1e-12)

    def test_cosh_sinh_identity(self):
        x, y = jet_variables([0.3, -0.2], 4)
        arg = x * y + y
        c, s = jet_elementary(arg, "cosh"), jet_elementary(arg, "sinh")
        one = c * c - s * s
        torch.testing.assert_close(one.coeffs, Jet.constant_like(1.0, 2, 4).coeffs, rtol=1e-12, atol=1e-12)

    def test_log_outside_domain(self):
        (x,) = jet_variables([-0.5], 2)
        with pytest.raises(SingularPointError):
            jet_elementary(x, "log")


class TestDerivatives:
    def test_partial_lowers_order(self):
        x, y = jet_variables([1.0, 2.0], 3)
        f = x * x * y
        fx = f.partial(0)
        assert fx.order == 2
        assert fx.constant.item() == 4.0
        assert extract_partial(fx, (0, 1)).item() == 2.0

    def test_gradient_stacks_partials(self):
        x, y = jet_variables([1.0, 2.0], 2)
        grad = jet_gradient(x * y)
        assert grad.shape == (2,)
        torch.testing.assert_close(grad.constant, torch.tensor([2.0, 1.0], dtype=DTYPE))

    def test_degree_above_order(self):
        (x,) = jet_variables([1.0], 2)
        with pytest.raises(ValueError, match="exceeds jet order"):
            extract_partial(x, (3,))

    def test_truncate(self):
        (x,) = jet_variables([1.0], 4)
        cube = x**3
        torch.testing.assert_close(cube.truncate(1).coeffs, torch.tensor([1.0, 3.0], dtype=DTYPE))
        with pytest.raises(ValueError):
            cube.truncate(5)


class TestMatrices:
    def _matrix(self) -> Jet:
        x, y = jet_variables([0.6, 1.4], 3)
        rows = [[x * x + 2.0, x * y], [x * y, jet_elementary(y, "exp")]]
        return Jet(2, 3, torch.stack([torch.stack([c.coeffs for c in row]) for row in rows]))

    def test_inverse(self):
        m = self._matrix()
        product = jet_einsum("ab,bc->ac", m, jet_inverse(m))
        identity = Jet.constant_like(torch.eye(2, dtype=DTYPE), 2, 3)
        torch.testing.assert_close(product.coeffs, identity.coeffs, rtol=1e-12, atol=1e-12)

    def test_inverse_of_singular(self):
        x, y = jet_variables([1.0, 1.0], 2)
        rows = [[x, y], [x, y]]
        m = Jet(2, 2, torch.stack([torch.stack([c.coeffs for c in row]) for row in rows]))
        with pytest.raises(SingularPointError):
            jet_inverse(m)

    def test_einsum_trace_is_sum_of_products(self):
        m = self._matrix()
        trace = jet_einsum("ab,ba->", m, m)
        expected = m[0, 0] * m[0, 0] + m[0, 1] * m[1, 0] * 2.0 + m[1, 1] * m[1, 1]
        torch.testing.assert_close(trace.coeffs, expected.coeffs)
