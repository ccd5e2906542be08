import numpy as np
import pytest

from resonance_lab import shallow as sh
from resonance_lab import topo as tp
from resonance_lab.errors import BathymetryError, ConfigurationError, ParameterError
from resonance_lab.spectral import Field1D, Grid1D


def test_flat_bottom_reduces_to_shallow_solver():
    U, T, dt = 1.0, 8.0, 0.01
    f = sh.traveling_gaussian(U)
    g = sh.default_grid(f.f0, U, T, 0.02)
    bathy = tp.flat_bathymetry(g)
    src = tp.LandslideMotion("source", source=lambda t: sh.flux_laplacian(f.value(t, g.x), 1.0, g.dx))
    topo_final = tp.run_topo(bathy, src, None, None, T, dt, sample_dt=T).final
    shallow = sh.run_shallow(f, g, dt, T, sample_dt=T, snapshot_times=[T])
    np.testing.assert_allclose(topo_final, shallow.snapshots[T]["h"], rtol=0, atol=1e-12)


def test_rate_entry_matches_velocity_entry_on_flat_bottom():
    g = Grid1D.centered(15.0, 0.01)
    via_velocity = tp.constructed_from_velocity(tp.flat_bathymetry(g), g.sample(lambda x: -np.exp(-x * x)))
    rate = tp.gaussian_rate(g)
    err = np.max(np.abs(via_velocity.zeta3_initial_rate.values - rate.values))
    assert err < 1e-4


def test_velocity_entry_keeps_bottom_l2_bounded():
    T = 30.0
    g = Grid1D.centered(1.23 * T + 20, 0.04)
    bathy = tp.tanh_bathymetry(g)
    slide = tp.constructed_from_velocity(bathy, g.sample(lambda x: -np.exp(-x * x)))
    res = tp.build_constructed_resonance(bathy, slide, T, 0.02, sample_dt=0.5)
    assert res.entry == "velocity"
    half = len(res.bm_l2) // 2
    assert res.bm_l2[-1] / res.bm_l2[half] == pytest.approx(1.0, abs=0.05)


def test_rate_entry_bottom_l2_grows():
    T = 30.0
    g = Grid1D.centered(1.23 * T + 20, 0.04)
    bathy = tp.tanh_bathymetry(g)
    res = tp.build_constructed_resonance(bathy, tp.constructed_from_rate(tp.gaussian_rate(g)), T, 0.02, 0.5)
    half = len(res.bm_l2) // 2
    assert res.bm_l2[-1] / res.bm_l2[half] > 1.2
    assert res.bm_sup.value_at(T) / res.bm_sup.value_at(T / 2) == pytest.approx(1.0, abs=0.05)


def test_zeta1_is_t_times_zeta3():
    g = Grid1D.centered(30.0, 0.04)
    bathy = tp.tanh_bathymetry(g)
    slide = tp.constructed_from_rate(tp.gaussian_rate(g))
    res = tp.build_constructed_resonance(bathy, slide, 4.0, 0.02, sample_dt=1.0, snapshot_times=[4.0])
    st = tp.initial_topo_state(bathy, slide, 0.02)
    for _ in range(200):
        st = tp.step_topo_fd(st, bathy, slide, 0.02, g)
    np.testing.assert_allclose(res.snapshots[4.0]["zeta1"], 4.0 * st.zeta3.values, atol=1e-12)


def test_staggered_energy_exact_on_tanh_bottom():
    g = Grid1D.centered(40.0, 0.04)
    bathy = tp.tanh_bathymetry(g)
    pulse = tp.right_moving_pulse(bathy, 1.0, -10.0, 1.0)
    run = tp.run_topo(bathy, tp.no_landslide(g), pulse.zeta0, pulse.v0, 20.0, 0.02, sample_dt=1.0)
    assert np.max(np.abs(run.energy / run.energy[0] - 1)) < 1e-11
    assert np.max(np.abs(run.centered_energy / run.centered_energy[0] - 1)) < 1e-3


def test_bathymetry_validation():
    g = Grid1D.centered(10.0, 0.1)
    with pytest.raises(BathymetryError):
        tp.Bathymetry.from_b0(g.sample(lambda x: np.ones_like(x)), beta=0.99)
    bathy = tp.tanh_bathymetry(g, beta=0.5)
    assert bathy.max_speed == pytest.approx(np.sqrt(1.5), rel=1e-3)
    with pytest.raises(ConfigurationError):
        tp.check_topo_cfl(0.09, bathy)


def test_box_too_small_rejected():
    g = Grid1D.centered(20.0, 0.05)
    bathy = tp.tanh_bathymetry(g)
    with pytest.raises(ParameterError, match="wrap"):
        tp.build_constructed_resonance(bathy, tp.constructed_from_rate(tp.gaussian_rate(g)), 40.0, 0.02)


def test_landslide_requires_data():
    with pytest.raises(ParameterError):
        tp.LandslideMotion("constructed")
    with pytest.raises(ParameterError):
        tp.LandslideMotion("avalanche", source=lambda t: 0)


def test_amplified_wave_grows_with_landslide():
    T = 20.0
    g = Grid1D.centered(1.23 * T + 40, 0.04)
    bathy = tp.tanh_bathymetry(g)
    pulse = tp.right_moving_pulse(bathy, 1.0, -20.0, 1.0)
    on = tp.run_amplified_wave(bathy, tp.constructed_from_rate(tp.gaussian_rate(g)), pulse, T, 0.02)
    off = tp.run_amplified_wave(bathy, tp.no_landslide(g), pulse, T, 0.02)
    assert on.sup_norm[-1] > 2 * off.sup_norm[-1]
    assert Field1D(g, pulse.zeta0.values).norm_inf() == pytest.approx(1.0)
