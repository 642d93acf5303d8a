import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrictlab.builtins import builtin_surface
from restrictlab.errors import DomainError, ValidationError
from restrictlab.knapp import (KnappFamily, build_knapp_function, dual, exponent_algebra,
                               fit_knapp_exponents, knapp_csv, lp_norm_knapp, p_star, r_star,
                               restriction_norm, scan_critical_p, sinc_kernel_norm)


def _cp_oracle(p):
    """Closed form via the Fourier series of |sin|^p and Mellin transforms of sin."""
    p = mpmath.mpf(p)
    with mpmath.workdps(30):
        mel = mpmath.pi / (2 * mpmath.gamma(p) * mpmath.sin(mpmath.pi * (p - 1) / 2))
        s = mpmath.nsum(lambda j: 2 * (-1) ** j * mpmath.binomial(p, p / 2 + j) * j ** (p - 1),
                        [1, mpmath.inf])
        return float(-2 * mel * s)


@pytest.mark.parametrize("p", [1.1, 1.2, 4 / 3, 14 / 11, 1.5, 1.75, 1.9])
def test_sinc_kernel_norm_oracle(p):
    assert sinc_kernel_norm(p) == pytest.approx(_cp_oracle(p), rel=1e-10)


def test_sinc_kernel_norm_p2_plancherel():
    assert sinc_kernel_norm(2.0) == pytest.approx(2 * math.pi, rel=1e-13)
    with pytest.raises(ValidationError):
        sinc_kernel_norm(1.0)


def test_exponent_algebra_exact():
    assert p_star(Fraction(1, 2)) == Fraction(6, 5)
    assert p_star(Fraction(3, 4)) == Fraction(14, 11)
    assert r_star(Fraction(6, 5)) == Fraction(1, 2)
    assert dual(Fraction(4, 3)) == 4
    # classical critical exponent 2(n+1)/(n+3) for r = (n-1)/2
    for n in range(2, 8):
        assert p_star(Fraction(n - 1, 2)) == Fraction(2 * (n + 1), n + 3)
    d = exponent_algebra(r=Fraction(1))
    assert d["p_star"] == Fraction(4, 3) and d["dual"] == 4
    with pytest.raises(ValidationError):
        exponent_algebra()
    with pytest.raises(ValidationError):
        r_star(2.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_round_trip_property(r):
    assert abs(r_star(p_star(r)) - r) <= 1e-12 * max(1.0, r)


def test_restriction_norm_parabola_closed_form():
    S = builtin_surface("parabola")
    for dl in (1e-2, 1e-4):
        sup = build_knapp_function(S, dl)
        s = math.sqrt(dl)
        ref = s * math.sqrt(1 + 4 * s * s) + math.asinh(2 * s) / 2
        assert restriction_norm(S, sup) ** 2 == pytest.approx(ref, rel=1e-9)


def test_restriction_norm_paraboloid_closed_form():
    S = builtin_surface("paraboloid")
    dl = 1e-3
    sup = build_knapp_function(S, dl)
    # area of the paraboloid cap z <= dl: (pi/6)((1 + 4 dl)^{3/2} - 1)
    ref = math.pi / 6 * ((1 + 4 * dl) ** 1.5 - 1)
    assert restriction_norm(S, sup) ** 2 == pytest.approx(ref, rel=1e-8)


def test_lp_norm_box_formula():
    S = builtin_surface("paraboloid")
    sup = build_knapp_function(S, 1e-2)
    p = 1.2
    s = sup.sides
    pd = p / (p - 1)
    ref = (2 * math.pi) ** -3 * np.prod(s ** (1 / pd)) * _cp_oracle(p) ** (3 / p)
    assert lp_norm_knapp(sup, p) == pytest.approx(ref, rel=1e-9)
    assert lp_norm_knapp(sup, p, normalized=False) == pytest.approx(ref * (2 * math.pi) ** 3)


def test_side_scale_needs_equal_weights():
    with pytest.raises(ValidationError):
        build_knapp_function(builtin_surface("mixed"), 1e-2, scale="side")
    sup = build_knapp_function(builtin_surface("paraboloid"), 1e-2, scale="side")
    assert sup.thickness == pytest.approx(1e-4)


def test_support_must_fit_in_domain():
    with pytest.raises(DomainError):
        build_knapp_function(builtin_surface("parabola"), 0.9)


def test_family_validation():
    S = builtin_surface("parabola")
    with pytest.raises(ValidationError):
        KnappFamily(S, (1e-2, 1e-3, 1e-4), 1.2)
    with pytest.raises(ValidationError):
        KnappFamily(S, tuple(10.0 ** -np.arange(2, 7)), 2.5)


def test_parabola_family_balance():
    S = builtin_surface("parabola")
    deltas = tuple(2.0 ** -np.arange(4, 15))
    v = fit_knapp_exponents(KnappFamily(S, deltas, 1.2))
    assert v.rho2 == pytest.approx(0.25, abs=0.01)
    assert v.rhop == pytest.approx(0.25, abs=0.01)
    assert v.admissible
    assert v.r_hat == pytest.approx(0.5, abs=0.02)
    bad = fit_knapp_exponents(KnappFamily(S, deltas, 1.5))
    assert not bad.admissible
    rows = [r.cap_ratio for r in v.rows]
    assert rows[-1] == pytest.approx(1.0, abs=1e-3)


def test_scan_crossing_parabola():
    S = builtin_surface("parabola")
    sc = scan_critical_p(S, 2.0 ** -np.arange(4, 15), np.linspace(1.1, 1.3, 5))
    assert sc.p_critical == pytest.approx(1.2, abs=0.01)


def test_thread_invariance():
    S = builtin_surface("mixed")
    fam = KnappFamily(S, tuple(2.0 ** -np.arange(4, 10)), 1.25)
    a = fit_knapp_exponents(fam, threads=1)
    b = fit_knapp_exponents(fam, threads=3)
    assert a.as_dict() == b.as_dict()


def test_knapp_csv():
    S = builtin_surface("parabola")
    v = fit_knapp_exponents(KnappFamily(S, tuple(2.0 ** -np.arange(4, 9)), 1.2))
    lines = knapp_csv(v.rows).splitlines()
    assert lines[0] == "delta,restriction_norm,lp_norm,p"
    assert len(lines) == 6
