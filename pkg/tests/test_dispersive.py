import json
import math
import pathlib

import numpy as np
import pytest

from resonance_lab import dispersive as dsp
from resonance_lab.errors import MisuseError, ParameterError, PreconditionError, SolverError
from resonance_lab.spectral import Field1D, Grid1D

REF = json.loads((pathlib.Path(__file__).with_name("reference_values.json")).read_text())


@pytest.fixture(scope="module")
def small_grid():
    return Grid1D.centered(64.0, 0.125)


@pytest.mark.parametrize("kind", ["resonant", "traveling_unit_speed"])
def test_integrator_matches_closed_form_at_second_order(small_grid, kind):
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(small_grid), kind)
    exact = dsp.zeta_L(run, 20.0).values - dsp.zeta_R(run, 20.0).values
    dt = dsp.default_dt(run)
    errs = []
    for h in (dt, dt / 2):
        z = dsp.evolve_spectral(run, None, [20.0], dt=h).zeta[0].values
        errs.append(np.max(np.abs(z - exact)) / np.max(np.abs(exact)))
    assert errs[0] < 2e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_duhamel_split_converges_to_closed_forms(small_grid):
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(small_grid), "resonant")
    exact = dsp.zeta_L(run, 15.0).values, dsp.zeta_R(run, 15.0).values
    errs = []
    for h in (0.02, 0.01):
        L, R = dsp.duhamel_split(run, 15.0, dt=h)
        errs.append([np.max(np.abs(a.values - b)) / np.max(np.abs(b)) for a, b in zip((L, R), exact)])
    errs = np.array(errs)
    assert np.all(errs[1] < 1e-4)
    np.testing.assert_allclose(errs[0] / errs[1], 4.0, rtol=0.05)


def test_resonant_closed_form_is_linear_in_t(small_grid):
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(small_grid), "resonant")
    t = 7.0
    nu, p = run.nu(), run.p0_coeffs()
    np.testing.assert_allclose(dsp.zeta_R_hat(run, t), 0.5j * t * nu * p * np.exp(-1j * t * nu), atol=1e-12)


def test_zeta_L_bounded_by_p0_hat_l1(small_grid):
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(small_grid), "resonant")
    bound = dsp.p0_hat_l1(run)
    assert bound == pytest.approx(REF["p0_hat_l1_gaussian"], rel=1e-9)
    for t in (1.0, 10.0, 40.0):
        assert dsp.zeta_L(run, t).norm_inf() <= bound


def test_along_ray_quadrature_matches_grid_value():
    g = Grid1D(-512.0, 512.0, 2**14)
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(g), "traveling_unit_speed")
    t = 400.0
    on_grid = float(dsp.zeta_R(run, t, [t])[0])
    assert dsp.zeta_R_along_ray(run, t) == pytest.approx(on_grid, rel=1e-6)


def test_cubic_phase_integral_routes_agree():
    J = dsp.cubic_phase_integral()
    assert abs(J.real) < 1e-12
    assert J.imag == pytest.approx(REF["cubic_phase_integral_imag"], rel=1e-12)
    assert dsp.cubic_phase_integral_closed_form().imag == pytest.approx(J.imag, rel=1e-12)
    assert dsp.unit_speed_limit_constant() == pytest.approx(REF["unit_speed_constant"], rel=1e-12)


def test_limits_against_oracle():
    g = Grid1D(-64.0, 64.0, 2048)
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(g), "traveling_unit_speed")
    assert dsp.unit_speed_limit(run) == pytest.approx(REF["unit_speed_limit_gaussian_mu1"], rel=1e-9)
    res = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(g), "resonant")
    limit, xi0 = dsp.resonant_sqrt_limit(res)
    assert limit == pytest.approx(REF["resonant_sqrt_limit_gaussian_mu1"], rel=1e-5)
    assert xi0 == pytest.approx(REF["resonant_sqrt_limit_xi"], abs=2e-3)


def test_phase_curvature_constants():
    c = dsp.decay_constants()
    assert c.y0 == pytest.approx(REF["phase_curvature_y0"], rel=1e-3)
    assert c.c1 == pytest.approx(REF["phase_curvature_c1"], rel=1e-3)
    assert c.c2 == pytest.approx(REF["phase_curvature_c2"], rel=1e-6)


def test_g_derivatives_against_finite_differences():
    y = np.array([1e-4, 0.3, 0.76, 2.0, 9.0])
    g = lambda s: np.sqrt(s * np.tanh(s))
    h = 1e-4
    np.testing.assert_allclose(dsp.g_prime(y), (g(y + h) - g(y - h)) / (2 * h), rtol=1e-6, atol=1e-7)
    np.testing.assert_allclose(dsp.g_second(y), (g(y + h) - 2 * g(y) + g(y - h)) / h**2, rtol=1e-4, atol=1e-5)


def test_unforced_energy_conserved(small_grid):
    run = dsp.DispersiveRun(0.5, dsp.gaussian_pressure(small_grid))
    init = (small_grid.sample(lambda x: np.exp(-x * x)), small_grid.sample(lambda x: np.sin(x) * np.exp(-x * x)))
    e = dsp.evolve_spectral(run, init, [0.0, 50.0, 300.0], forced=False).energy
    assert np.max(np.abs(e / e[0] - 1)) < 1e-12


def test_wrong_kind_is_misuse(small_grid):
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(small_grid), "resonant")
    with pytest.raises(MisuseError):
        dsp.zeta_R_unit_speed(run, 1.0)
    with pytest.raises(MisuseError):
        dsp.zeta_R_resonant(dsp.DispersiveRun(1.0, run.P0, "traveling_unit_speed"), 1.0)


def test_preconditions(small_grid):
    with pytest.raises(PreconditionError):
        dsp.dispersion_decay_check(small_grid.sample(lambda x: np.exp(-x * x)), 1.0, [5.0])
    odd = small_grid.sample(lambda x: x * np.exp(-x * x))
    with pytest.raises(PreconditionError):
        dsp.unit_speed_limit(dsp.DispersiveRun(1.0, odd, "traveling_unit_speed"))
    with pytest.raises(ParameterError):
        dsp.DispersiveRun(0.0, odd)
    with pytest.raises(ParameterError):
        dsp.DispersiveRun(1.0, odd, "general", speed_symbol=lambda xi: xi * xi)


def test_general_pressure_symbol(small_grid):
    run = dsp.DispersiveRun(1.0, dsp.gaussian_pressure(small_grid), "general", speed_symbol=lambda xi: 0.5 * xi)
    z = dsp.evolve_spectral(run, None, [10.0]).zeta[0].values
    exact = dsp.zeta_L(run, 10.0).values - dsp.zeta_R(run, 10.0).values
    assert np.max(np.abs(z - exact)) < 1e-3 * np.max(np.abs(exact)) + 1e-12


def test_decay_bound_holds_on_small_box():
    g = Grid1D(-128.0, 128.0, 4096)
    f = Field1D(g, -g.x * np.exp(-0.5 * g.x**2))
    rep = dsp.dispersion_decay_check(f, 1.0, [5.0, 20.0, 60.0])
    assert rep.K == pytest.approx(REF["decay_K_gaussian_derivative_mu1"], rel=1e-3)
    assert np.all(rep.sup < rep.envelope)
    assert math.isfinite(rep.norms[0]) and math.isfinite(rep.norms[1])


def test_generic_pressure_bound_policies(small_grid, caplog):
    P0 = dsp.gaussian_pressure(small_grid)
    mk = lambda **kw: dsp.DispersiveRun(1.0, P0, "general", speed_symbol=lambda xi: 0.5 * xi, **kw)
    dsp.evolve_spectral(mk(), None, [10.0])
    assert not caplog.records
    with caplog.at_level("WARNING"):
        dsp.evolve_spectral(mk(bound_constant=1e-6), None, [10.0])
    assert "exceeds" in caplog.text
    with pytest.raises(SolverError):
        dsp.evolve_spectral(mk(bound_constant=1e-6, bound_policy="raise"), None, [10.0])
    dsp.evolve_spectral(mk(bound_constant=1e-6, bound_policy="off"), None, [10.0])
    with pytest.raises(ParameterError):
        mk(bound_policy="loud")
