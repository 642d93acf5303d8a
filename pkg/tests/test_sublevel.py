import math

import numpy as np
import pytest
from scipy import integrate

from restrictlab.builtins import builtin_poly, builtin_surface
from restrictlab.errors import ResourceBudgetError, ValidationError
from restrictlab.sublevel import (TangentBall, axis_extents, build_P_delta, check_containment,
                                  consistent, fit_growth_exponent, hyperbola_demo,
                                  hyperbola_region_area, optimal_breaks, polar_constant,
                                  staircase_area, volume_csv, volume_grid, volume_mc,
                                  volume_polar_exact)


def test_polar_closed_forms():
    for dl in (0.5, 1e-3, 2.0 ** -20):
        v = volume_polar_exact(builtin_poly("parabola"), None, dl).value
        assert v == pytest.approx(2 * math.sqrt(dl), rel=1e-12)
        v = volume_polar_exact(builtin_poly("paraboloid"), None, dl).value
        assert v == pytest.approx(math.pi * dl, rel=1e-10)


def test_polar_constant_quartic_curve():
    assert polar_constant(builtin_poly("quartic_curve")) == pytest.approx(2.0)


def test_polar_constant_mixed_against_area_quadrature():
    # area of {x^2 + y^4 <= 1} = int_{-1}^{1} 2 (1 - y^4)^{1/2} dy
    ref, _ = integrate.quad(lambda y: 2 * math.sqrt(1 - y ** 4), -1, 1, epsabs=0, epsrel=1e-13)
    assert polar_constant(builtin_poly("mixed")) == pytest.approx(ref, rel=1e-9)


def test_polar_constant_quartic_quartic():
    ref, _ = integrate.quad(lambda y: 2 * (1 - y ** 4) ** 0.25, -1, 1, epsabs=0, epsrel=1e-12)
    assert polar_constant(builtin_poly("quartic_quartic"), 2048) == pytest.approx(ref, rel=1e-7)


def test_axis_extents():
    np.testing.assert_allclose(axis_extents(builtin_poly("mixed")), [1.0, 1.0], rtol=1e-9)
    np.testing.assert_allclose(axis_extents(builtin_poly("parabola")), [1.0], rtol=1e-12)


@pytest.mark.parametrize("name", ["parabola", "mixed"])
def test_mc_grid_polar_agree(backend, name):
    S = builtin_surface(name)
    for dl in (2.0 ** -3, 2.0 ** -9):
        mc = volume_mc(S, dl, 200_000, seed=3)
        gr = volume_grid(S, dl, 512)
        po = volume_polar_exact(S.Q, None, dl)
        assert consistent(mc, po) and consistent(gr, po) and consistent(mc, gr)
        assert gr.lower <= po.value <= gr.upper


def test_mc_thread_invariance():
    S = builtin_surface("mixed")
    a = volume_mc(S, 1e-3, 600_000, seed=11, threads=1)
    b = volume_mc(S, 1e-3, 600_000, seed=11, threads=4)
    assert a == b
    c = volume_mc(S, 1e-3, 600_000, seed=12)
    assert c.value != a.value


def test_mc_with_remainder_uses_domain_window():
    S = builtin_surface("paraboloid", remainder="cubic_perturbation")
    v = volume_mc(S, 0.01, 400_000, seed=0)
    g = volume_grid(S, 0.01, 1024)
    assert consistent(v, g)


def test_input_validation():
    S = builtin_surface("parabola")
    with pytest.raises(ValidationError):
        volume_mc(S, -1.0, 10_000)
    with pytest.raises(ValidationError):
        volume_mc(S, 0.1, 10)
    with pytest.raises(ValidationError):
        volume_grid(S, 0.1, 8)
    with pytest.raises(ResourceBudgetError):
        volume_grid(builtin_surface("mixed"), 0.1, 4096)


def test_growth_fit_slopes():
    for name, r in (("parabola", 0.5), ("mixed", 0.75)):
        Q = builtin_poly(name)
        rows = [(d, volume_polar_exact(Q, None, d)) for d in 2.0 ** -np.arange(2, 12)]
        assert fit_growth_exponent(rows).slope == pytest.approx(r, abs=1e-12)


def test_containment_margins():
    S = builtin_surface("mixed")
    ball = TangentBall(S, 1e-3)
    good = check_containment(ball, build_P_delta(S.Q, None, 1e-3, 1.1), samples=20_000)
    assert good.passed and good.violations == 0
    bad = check_containment(ball, build_P_delta(S.Q, None, 1e-3, 0.5), samples=20_000)
    assert bad.violations > 0 and not bad.passed


def test_containment_ratio_is_scale_free():
    S = builtin_surface("mixed")
    ratios = [check_containment(TangentBall(S, d), build_P_delta(S.Q, None, d), samples=50_000,
                                seed=1).ratio for d in (1e-2, 1e-4)]
    assert ratios[0] == pytest.approx(ratios[1], rel=1e-9)


def test_hyperbola_region_area():
    for dl in (1e-2, 1e-4, 1e-6):
        assert hyperbola_region_area(dl) == pytest.approx(4 * dl * (1 + math.log(1 / dl)), rel=1e-14)


def test_staircase_optimum_and_monotonicity():
    rows = hyperbola_demo([1e-2, 1e-4, 1e-6], k=4)
    ratios = [r["ratio"] for r in rows]
    assert ratios[0] < ratios[1] < ratios[2]
    for r in rows:
        assert r["cover_area"] == pytest.approx(r["cover_area_numeric"], rel=1e-6)
        assert r["cover_area"] >= r["region_area"]
    # more steps give a tighter cover
    dl = 1e-4
    areas = [staircase_area(dl, k) for k in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(areas, areas[1:]))
    assert np.all(np.diff(optimal_breaks(dl, 6)) > 0)


def test_volume_csv_columns():
    S = builtin_surface("parabola")
    text = volume_csv([(0.1, volume_mc(S, 0.1, 1000, seed=5))])
    head, row = text.splitlines()
    assert head == "delta,volume,err_low,err_high,method,seed"
    assert row.endswith(",monte_carlo,5")
