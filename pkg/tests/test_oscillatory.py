import math

import numpy as np
import pytest
from scipy import integrate

from restrictlab.builtins import builtin_surface
from restrictlab.errors import ResourceBudgetError, ValidationError
from restrictlab.oscillatory import (decay_profile, envelope_flags, fit_decay_exponent,
                                     hemisphere_directions, lambda_grid, panel_count, profile_csv,
                                     scan_csv, isotropic_decay_scan, surface_measure_ft)
from restrictlab.surface import smooth_cutoff


def _quad_1d(S, xi):
    def amp(x):
        return smooth_cutoff(abs(x), *S.cutoff) * math.sqrt(1 + 4 * x * x)
    f = lambda x, part: amp(x) * (math.cos if part == 0 else math.sin)(-(xi[0] * x + xi[1] * x * x))
    pts = [-S.cutoff[0], S.cutoff[0]]
    re, _ = integrate.quad(f, -S.cutoff[1], S.cutoff[1], args=(0,), points=pts, limit=2000,
                           epsabs=1e-13, epsrel=1e-12)
    im, _ = integrate.quad(f, -S.cutoff[1], S.cutoff[1], args=(1,), points=pts, limit=2000,
                           epsabs=1e-13, epsrel=1e-12)
    return complex(re, im)


def test_parabola_against_adaptive_quadrature(backend):
    S = builtin_surface("parabola")
    for xi in ([0.0, 40.0], [13.0, -25.0], [3.0, 0.0]):
        ref = _quad_1d(S, xi)
        assert abs(surface_measure_ft(S, xi) - ref) < 1e-10 * max(1.0, abs(ref))


def test_paraboloid_radial_oracle(backend):
    S = builtin_surface("paraboloid")
    lam = 60.0

    def f(r, part):
        a = smooth_cutoff(r, *S.cutoff) * math.sqrt(1 + 4 * r * r) * 2 * math.pi * r
        return a * (math.cos if part == 0 else math.sin)(-lam * r * r)
    re, _ = integrate.quad(f, 0, S.cutoff[1], args=(0,), points=[S.cutoff[0]], limit=1000,
                           epsabs=1e-13)
    im, _ = integrate.quad(f, 0, S.cutoff[1], args=(1,), points=[S.cutoff[0]], limit=1000,
                           epsabs=1e-13)
    assert abs(surface_measure_ft(S, [0.0, 0.0, lam]) - complex(re, im)) < 1e-9


def test_stationary_phase_leading_term():
    S = builtin_surface("parabola")
    lam = 1000.0
    val = surface_measure_ft(S, [0.0, lam])
    # two terms of the expansion with amplitude sqrt(1 + 4 x^2) = 1 + 2 x^2 + ...
    two = math.sqrt(math.pi) * ((1j * lam) ** -0.5 + (1j * lam) ** -1.5)
    assert abs(val - two) < 1e-5 * abs(two)


def test_offset_only_changes_phase():
    a = surface_measure_ft(builtin_surface("mixed"), [3.0, -2.0, 50.0])
    b = surface_measure_ft(builtin_surface("mixed", offset=0.7), [3.0, -2.0, 50.0])
    assert abs(b - a * complex(math.cos(35.0), -math.sin(35.0))) < 1e-12


def test_refinement_self_convergence():
    S = builtin_surface("mixed")
    xi = [0.0, 0.0, 200.0]
    assert abs(surface_measure_ft(S, xi) - surface_measure_ft(S, xi, refine=2)) < 1e-9


def test_generic_path_matches_polynomial_path():
    S = builtin_surface("paraboloid", remainder="cubic_perturbation")
    T = builtin_surface("paraboloid", remainder="cubic_perturbation")
    # force the callable route by hiding the polynomial form
    object.__setattr__(T, "phi_poly", lambda: None)
    xi = [5.0, -3.0, 40.0]
    assert abs(surface_measure_ft(S, xi) - surface_measure_ft(T, xi)) < 1e-12


def test_thread_invariance():
    S = builtin_surface("mixed")
    xi = [1.0, 2.0, 100.0]
    a = surface_measure_ft(S, xi, threads=1)
    b = surface_measure_ft(S, xi, threads=4)
    assert abs(a - b) <= 1e-12 * abs(a)


def test_budget_and_validation():
    S = builtin_surface("paraboloid")
    with pytest.raises(ResourceBudgetError) as exc:
        surface_measure_ft(S, [0.0, 0.0, 4000.0])
    assert exc.value.at == pytest.approx(4000.0)
    with pytest.raises(ValidationError):
        surface_measure_ft(S, [0.0, 1.0])
    wide = builtin_surface("parabola", cutoff=(0.5, 1.0))
    with pytest.raises(ValidationError, match="inside K"):
        surface_measure_ft(wide, [0.0, 1.0])
    with pytest.raises(ValidationError):
        decay_profile(S, [0.0, 0.0, 2.0])


def test_panel_rule_scales_with_frequency():
    S = builtin_surface("parabola")
    assert panel_count(S, [0.0, 0.0]) == 32
    assert panel_count(S, [0.0, 4000.0]) > panel_count(S, [0.0, 1000.0]) * 3.9


def test_lambda_grid_and_envelope():
    g = lambda_grid(16, 256, 4)
    assert len(g) == 17 and g[0] == 16 and g[-1] == pytest.approx(256)
    flags = envelope_flags(g, 1 / g)
    assert flags.sum() == 5 and flags[0]


def test_decay_fits_1d():
    for name, r in (("parabola", 0.5), ("quartic_curve", 0.25)):
        fit = fit_decay_exponent(decay_profile(builtin_surface(name), [0.0, 1.0]))
        assert fit.slope == pytest.approx(r, abs=0.05)


def test_fit_needs_four_octaves():
    S = builtin_surface("parabola")
    with pytest.raises(ValidationError):
        fit_decay_exponent(decay_profile(S, [0.0, 1.0], 64, 256))


def test_hemisphere_directions():
    for n, c in ((2, 16), (3, 64)):
        d = hemisphere_directions(n, c)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
        assert np.all(d[:, -1] > 0)


def test_scan_parabola():
    S = builtin_surface("parabola")
    rep = isotropic_decay_scan(S, count=32, lam_probe=256)
    assert rep.worst_value <= 2.0 * rep.normal_value
    tangent = surface_measure_ft(S, [256.0, 0.0])
    assert abs(tangent) < 0.1 * rep.normal_value
    lines = scan_csv(rep).splitlines()
    assert lines[0] == "theta_index,theta_1,theta_2,abs_at_probe" and len(lines) == 33


def test_scan_argmax_matches_stationary_phase():
    # along a normal direction with stationary point x0 the amplitude is
    # psi(x0) (1 + 4 x0^2)^{3/4} sqrt(pi / lam), largest near the plateau edge
    S = builtin_surface("parabola")
    lam = 256.0
    rep = isotropic_decay_scan(S, count=64, lam_probe=lam)
    d = rep.directions
    x0 = -d[:, 0] / (2 * d[:, 1])
    amp = S.psi(x0[:, None]) * (1 + 4 * x0 ** 2) ** 0.75 * np.sqrt(np.pi / lam)
    k = int(np.argmax(amp))
    angle = np.degrees(np.arccos(np.clip(d[k] @ d[rep.worst_index], -1, 1)))
    assert angle < 5.0
    assert rep.worst_value == pytest.approx(amp[k], rel=0.1)


def test_profile_csv():
    prof = decay_profile(builtin_surface("parabola"), [0.0, 1.0], 32, 512)
    lines = profile_csv(prof).splitlines()
    assert lines[0] == "lambda,re,im,abs,envelope_flag"
    assert len(lines) == len(prof.lambdas) + 1
