import pytest

from curvcheck.metric import CORPUS, builtin
from curvcheck.sampling import SplitMix64, sample_points


def test_splitmix64_reference_sequence():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]


def test_floats_use_53_bits():
    rng = SplitMix64(1234567)
    assert rng.next_float() == (6457827717110365317 >> 11) * 2.0**-53
    assert all(0.0 <= rng.next_float() < 1.0 for _ in range(1000))


def test_seed_is_masked():
    assert SplitMix64(-1).state == 2**64 - 1


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_points_stay_in_domain(name):
    spec = builtin(name)
    points = sample_points(spec, 50, 3)
    assert len(points) == 50
    for p in points:
        assert len(p) == spec.dim
        assert all(lo <= x <= hi for x, (lo, hi) in zip(p, spec.domain))


def test_same_seed_same_points():
    spec = builtin("schwarzschild")
    assert sample_points(spec, 5, 11) == sample_points(spec, 5, 11)
    assert sample_points(spec, 5, 11) != sample_points(spec, 5, 12)


def test_count_must_be_positive():
    with pytest.raises(ValueError, match="at least one"):
        sample_points(builtin("sphere_s2"), 0, 1)
