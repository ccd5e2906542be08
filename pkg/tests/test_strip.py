import math

import numpy as np
import pytest

from resonance_lab import strip as st
from resonance_lab.errors import DiffeoError, ParameterError
from resonance_lab.spectral import Grid1D


@pytest.fixture(scope="module")
def periodic():
    return Grid1D(0.0, 2 * math.pi, 64)


@pytest.fixture(scope="module")
def wavy(periodic):
    g = periodic
    return g.sample(lambda x: np.cos(x) + 0.5 * np.sin(2 * x)), g.sample(lambda x: np.sin(x) - 0.3 * np.cos(3 * x))


def test_cutoff_plateau_and_support():
    r = np.linspace(-3, 3, 601)
    th = st.theta(r)
    assert np.all(th[np.abs(r) <= 0.5] == 1.0)
    assert np.all(th[np.abs(r) >= 2.0] == 0.0)
    np.testing.assert_allclose(th, st.theta(-r))
    h = 1e-6
    rr = np.array([0.7, 1.0, 1.6, -1.2])
    np.testing.assert_allclose(st.theta_prime(rr), (st.theta(rr + h) - st.theta(rr - h)) / (2 * h), atol=1e-6)


def test_diffeo_maps_boundaries(periodic, wavy):
    zeta, b = wavy
    p = st.ShapeParams(0.1, 0.2, 1.0)
    d = st.build_diffeo(zeta, b, p, st.StripGrid2D(periodic, 16))
    sigma, _, _ = d.fields([0.0, -1.0])
    np.testing.assert_allclose(sigma[0], 0.1 * zeta.values, atol=1e-13)
    np.testing.assert_allclose(sigma[1], 0.2 * b.values, atol=1e-13)


def test_diffeo_derivatives_consistent(periodic, wavy):
    zeta, b = wavy
    d = st.build_diffeo(zeta, b, st.ShapeParams(0.2, 0.2, 1.0), st.StripGrid2D(periodic, 16))
    z, h = np.array([-0.6]), 1e-6
    _, _, sz = d.fields(z)
    fd = (d.fields(z + h)[0] - d.fields(z - h)[0]) / (2 * h)
    np.testing.assert_allclose(sz, fd, atol=1e-7)


def test_delta_halving_for_oscillatory_surface():
    g = Grid1D(0.0, 2 * math.pi, 128)
    zeta = g.sample(lambda x: np.cos(20 * x))
    d = st.build_diffeo(zeta, g.zeros(), st.ShapeParams(0.3, 0.0, 1.0), st.StripGrid2D(g, 16), delta=1.0, k0=0.5)
    assert d.delta < 1.0
    assert d.jacobian_min >= 0.5


def test_diffeo_errors(periodic):
    g2 = st.StripGrid2D(periodic, 16)
    ones = periodic.sample(lambda x: np.ones_like(x))
    with pytest.raises(DiffeoError, match="depth"):
        st.build_diffeo(periodic.zeros(), ones, st.ShapeParams(0.1, 0.99, 1.0), g2)
    with pytest.raises(DiffeoError, match="Jacobian"):
        st.build_diffeo(periodic.sample(np.cos), periodic.zeros(), st.ShapeParams(0.5, 0.0, 1.0), g2,
                        k0=0.99, max_halvings=3)
    with pytest.raises(ParameterError):
        st.StripGrid2D(periodic, 4)


def test_coercivity_positive(periodic, wavy):
    zeta, b = wavy
    d = st.build_diffeo(zeta, b, st.ShapeParams(0.1, 0.1, 1.0), st.StripGrid2D(periodic, 16))
    k = st.coercivity_constant(d)
    assert 0 < k < 1
    assert st.FEStrip(d).k_min >= k - 0.05


def test_fe_solutions_satisfy_discrete_system(periodic, wavy):
    zeta, b = wavy
    fe = st.FEStrip(st.build_diffeo(zeta, b, st.ShapeParams(0.1, 0.1, 1.0), st.StripGrid2D(periodic, 16)))
    for which, data in (("surface", periodic.sample(np.cos)), ("bottom", periodic.sample(np.sin))):
        sol = st.solve_strip(which, data, fe)
        assert sol.residual < 1e-10
    sol = fe.solve("surface", periodic.sample(np.cos))
    np.testing.assert_allclose(sol.phi[-1], np.cos(periodic.x))
    with pytest.raises(ParameterError):
        fe.solve("side", periodic.zeros())


def test_spectral_backend_exact_on_flat_strip(periodic):
    zero = periodic.zeros()
    sp_ = st.SpectralStrip(st.build_diffeo(zero, zero, st.ShapeParams(0.0, 0.0, 0.7), st.StripGrid2D(periodic, 16)), 24)
    psi = periodic.sample(lambda x: np.cos(x) + 0.2 * np.sin(5 * x))
    ops = st.apply_operators(sp_, psi, psi)
    ref = st.flat_oracles(psi, psi, 0.7)
    for key in ref:
        assert np.max(np.abs(ops[key].values - ref[key])) < 1e-9


def test_backends_agree_on_curved_strip(periodic):
    p = st.ShapeParams(0.1, 0.1, 0.7)
    shape = (lambda x: np.cos(x) + 0.5 * np.sin(2 * x), lambda x: np.sin(x) - 0.3 * np.cos(3 * x))
    data = (np.cos, lambda x: np.sin(2 * x))

    def operators(backend, nx, nz):
        g = Grid1D(0.0, 2 * math.pi, nx)
        d = st.build_diffeo(g.sample(shape[0]), g.sample(shape[1]), p, st.StripGrid2D(g, nz))
        return st.apply_operators(st.make_backend(d, backend, 24), g.sample(data[0]), g.sample(data[1]))

    ref = operators("spectral", 64, 16)
    errs = []
    for nx, nz in ((64, 16), (128, 32)):
        fe = operators("fe", nx, nz)
        stride = nx // 64
        errs.append(max(np.max(np.abs(fe[k].values[::stride] - ref[k].values)) for k in ref))
    assert errs[1] < 5e-3
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_flat_validation_second_order():
    rep = st.flat_validation(np.cos, np.sin, 1.0, ((32, 8), (64, 16), (128, 32)))
    for key, orders in rep.orders.items():
        assert all(1.8 < o < 2.2 for o in orders), key


def test_adjoint_identities_fe(periodic, wavy):
    zeta, b = wavy
    fe = st.FEStrip(st.build_diffeo(zeta, b, st.ShapeParams(0.1, 0.1, 1.0), st.StripGrid2D(periodic, 16)))
    f, h = periodic.sample(lambda x: np.cos(x) + np.sin(3 * x)), periodic.sample(lambda x: np.sin(2 * x) - np.cos(x))
    a, c = st.apply_operators(fe, f, h), st.apply_operators(fe, h, f)
    assert a["G_dn"].inner(h) == pytest.approx(f.inner(c["G_dn"]), abs=1e-12)
    assert a["G_nd"].inner(f) == pytest.approx(h.inner(c["G_nd"]), abs=1e-12)
    assert a["G_dn"].inner(f) >= 0
    assert a["G_nd"].inner(h) < 0


@pytest.mark.parametrize("backend", ["fe", "spectral"])
def test_kinetic_energy_two_forms(periodic, wavy, backend):
    zeta, b = wavy
    p = st.ShapeParams(0.1, 0.1, 1.0, rho=0.7)
    be = st.make_backend(st.build_diffeo(zeta, b, p, st.StripGrid2D(periodic, 16)), backend)
    vol, bdry = st.kinetic_energy_check(be, periodic.sample(np.cos), periodic.sample(lambda x: np.sin(2 * x)), p)
    assert vol == pytest.approx(bdry, rel=1e-8)


def test_trace_inequality(periodic):
    zero = periodic.zeros()
    fe = st.FEStrip(st.build_diffeo(zero, zero, st.ShapeParams(0.0, 0.0, 1.0), st.StripGrid2D(periodic, 16)))
    z = np.linspace(-1, 0, 17)[:, None]
    rng = np.random.default_rng(5)
    ratios = []
    for k in (1, 2, 5, 10, 20):
        ratios.append(st.trace_ratio(fe, fe.solve("bottom", periodic.sample(lambda x: np.cos(k * x))).phi))
    for _ in range(10):
        a, c, k = rng.normal(), rng.normal(), rng.integers(1, 8)
        field = -z * (1 + 0.5 * c * z) * (a * np.cos(k * periodic.x) + 1.0)
        ratios.append(st.trace_ratio(fe, field))
    assert max(ratios) <= 2.5
    with pytest.raises(ParameterError):
        st.trace_ratio(fe, np.ones((17, periodic.n)))


def test_velocity_traces_allow_flat_surface(periodic):
    g2 = st.StripGrid2D(periodic, 16)
    b = periodic.sample(np.sin)
    p = st.ShapeParams(0.0, 0.1, 1.0, rho=1.0)
    fe = st.FEStrip(st.build_diffeo(periodic.zeros(), b, p, g2))
    psi, B = periodic.sample(np.cos), periodic.sample(lambda x: np.cos(2 * x))
    ops = st.apply_operators(fe, psi, B)
    tr = st.velocity_traces(ops, periodic.zeros(), b, B, psi, p)
    np.testing.assert_allclose(tr["w_surf"].values, ops["G_dn"].values + ops["G_nn"].values, atol=1e-14)
    np.testing.assert_allclose(tr["V_surf"].values, -np.sin(periodic.x), atol=1e-12)


def test_shape_derivative_first_order_at_small_mu():
    g = Grid1D(0.0, 2 * math.pi, 64)
    S = g.sample
    rep = st.shape_derivative_check(S(np.cos), S(lambda x: np.cos(2 * x)), S(np.cos), S(np.sin), S(np.sin),
                                    S(np.cos), st.ShapeParams(0.1, 0.1, 0.5), st.StripGrid2D(g, 16),
                                    backend="spectral", n_cheb=16)
    for key, ratios in rep.ratios.items():
        assert all(0.4 <= r <= 0.6 for r in ratios), key
        assert rep.errors[key][0] < 1e-2
