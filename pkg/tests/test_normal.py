import math

import pytest

from vskte._normal import normal_cdf, normal_quantile, normal_sf, two_sided_p


def test_cdf_symmetry_and_anchors():
    assert normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
    for x in (-3.0, -0.7, 0.2, 4.1):
        assert normal_cdf(x) + normal_sf(x) == pytest.approx(1.0, abs=1e-14)
        assert normal_cdf(-x) == pytest.approx(normal_sf(x), rel=1e-13)


def test_far_tail_accuracy():
    # erfc keeps relative accuracy where 1 - cdf would cancel
    assert normal_sf(10.0) == pytest.approx(7.61985302416053e-24, rel=1e-10)


def test_two_sided():
    assert two_sided_p(0.0) == pytest.approx(1.0)
    assert two_sided_p(1.959963984540054) == pytest.approx(0.05, abs=1e-12)
    assert two_sided_p(-2.5) == two_sided_p(2.5)


def test_quantile_round_trip():
    for p in (1e-10, 1e-4, 0.025, 0.3, 0.5, 0.84, 0.975, 1 - 1e-6):
        x = normal_quantile(p)
        assert normal_cdf(x) == pytest.approx(p, rel=1e-10, abs=1e-13)


def test_quantile_domain():
    with pytest.raises(ValueError):
        normal_quantile(0.0)
    with pytest.raises(ValueError):
        normal_quantile(1.0)
    assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    assert math.isfinite(normal_quantile(1e-300))
