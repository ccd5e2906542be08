import json
import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonance_lab import spectral as sp
from resonance_lab.errors import DomainError, ParameterError, SingularSymbolError

REF = json.loads((pathlib.Path(__file__).with_name("reference_values.json")).read_text())

sizes = st.sampled_from([8, 16, 32, 64, 128])


def _random_field(n, seed):
    g = sp.Grid1D(-3.0, 5.0, n)
    return sp.Field1D(g, np.random.default_rng(seed).normal(size=n))


@settings(max_examples=40, deadline=None)
@given(n=sizes, seed=st.integers(0, 10_000))
def test_round_trip(n, seed):
    f = _random_field(n, seed)
    back = sp.inverse(sp.forward(f))
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * max(f.norm_inf(), 1.0)


@settings(max_examples=40, deadline=None)
@given(n=sizes, seed=st.integers(0, 10_000))
def test_parseval(n, seed):
    f = _random_field(n, seed)
    assert sp.spectral_energy(sp.forward(f)) == pytest.approx(sp.energy(f), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), mu=st.floats(1e-3, 10.0))
def test_flat_multipliers_self_adjoint(seed, mu):
    g = sp.Grid1D(0.0, 2 * math.pi, 64)
    rng = np.random.default_rng(seed)
    f, h = sp.Field1D(g, rng.normal(size=64)), sp.Field1D(g, rng.normal(size=64))
    for op in (sp.flat_dn, sp.flat_nn, sp.flat_dd, sp.flat_nd):
        assert op(f, mu).inner(h) == pytest.approx(f.inner(op(h, mu)), rel=1e-10, abs=1e-10)


def test_scalar_symbols_against_frozen_values():
    assert float(np.tanh(1.0)) == pytest.approx(REF["tanh_1"], abs=1e-14)
    assert float(sp.sech(1.0)) == pytest.approx(REF["sech_1"], abs=1e-14)
    assert float(sp.omega(1.0)) == pytest.approx(REF["omega_1"], abs=1e-14)
    assert float(sp.sinh_ratio(0.5, 1.0)) == pytest.approx(REF["sinh_ratio_half"], abs=1e-14)


def test_symbols_near_zero_and_far_out():
    assert float(sp.tanhc(0.0)) == 1.0
    assert float(sp.tanhc(1e-9)) == pytest.approx(1.0, abs=1e-15)
    assert float(sp.sech(800.0)) == 0.0
    assert float(sp.sinh_ratio(0.3, 0.0)) == pytest.approx(0.3)
    assert np.isfinite(sp.sinh_ratio(0.5, 1e4))
    y = np.array([1e-9, 1e-8 * (1 + 1e-6), 1e-7])
    assert np.all(np.abs(sp.tanhc(y) - 1) < 1e-13)


def test_omega_even_and_decreasing():
    xi = np.linspace(0, 50, 2001)
    w = sp.omega(xi)
    assert np.all(np.diff(w) < 0)
    assert np.allclose(sp.omega(-xi), w)
    assert np.allclose(sp.dispersion(-xi, 0.7), -sp.dispersion(xi, 0.7))


def test_flat_nd_negative_and_dd_bounded():
    g = sp.Grid1D(0.0, 2 * math.pi, 64)
    B = g.sample(lambda x: np.sin(3 * x) + np.cos(x))
    assert sp.flat_nd(B, 1.0).inner(B) < 0
    assert sp.flat_dd(B, 1.0).norm_l2() <= B.norm_l2()


def test_single_mode_multipliers():
    g = sp.Grid1D(0.0, 2 * math.pi, 32)
    k, mu = 3, 0.5
    f = g.sample(lambda x: np.cos(k * x))
    r = math.sqrt(mu) * k
    np.testing.assert_allclose(sp.flat_dn(f, mu).values, k * math.tanh(r) / math.sqrt(mu) * f.values, atol=1e-12)
    np.testing.assert_allclose(sp.flat_nn(f, mu).values, f.values / math.cosh(r), atol=1e-12)
    np.testing.assert_allclose(sp.flat_nd(f, mu).values, -math.tanh(r) / r * f.values, atol=1e-12)
    ext = sp.extension_kernel(f, -0.5, mu)
    np.testing.assert_allclose(ext.values, math.sinh(0.5 * r) / math.sinh(r) * f.values, atol=1e-12)


def test_extension_levels():
    g = sp.Grid1D(0.0, 2 * math.pi, 16)
    f = g.sample(np.cos)
    np.testing.assert_allclose(sp.extension_kernel(f, 0.0, 1.0).values, f.values, atol=1e-13)
    with pytest.raises(DomainError):
        sp.extension_multiplier(0.5, 1.0)


def test_continuous_transform_of_gaussian():
    g = sp.Grid1D.centered(20.0, 0.05)
    f = g.sample(lambda x: np.exp(-x * x))
    fh = sp.continuous_transform(f)
    np.testing.assert_allclose(fh, math.sqrt(math.pi) * np.exp(-g.xi**2 / 4), atol=1e-12)
    at = sp.transform_at(f, [0.0, 1.3])
    np.testing.assert_allclose(at, math.sqrt(math.pi) * np.exp(-np.array([0.0, 1.3]) ** 2 / 4), atol=1e-12)


def test_derivative_of_sine():
    g = sp.Grid1D(0.0, 2 * math.pi, 32)
    np.testing.assert_allclose(sp.derivative(g.sample(np.sin)).values, np.cos(g.x), atol=1e-12)
    np.testing.assert_allclose(sp.derivative(g.sample(np.sin), 2).values, -np.sin(g.x), atol=1e-11)


def test_non_finite_symbol_names_wavenumber():
    g = sp.Grid1D(0.0, 2 * math.pi, 16)
    bad = sp.Multiplier(lambda xi: 1.0 / xi, "inverse")
    with np.errstate(divide="ignore"), pytest.raises(SingularSymbolError, match="xi = 0"):
        sp.apply_multiplier(g.sample(np.sin), bad)


def test_imaginary_residue_rejected():
    g = sp.Grid1D(0.0, 2 * math.pi, 16)
    odd = sp.Multiplier(lambda xi: np.where(xi > 0, 1.0, 0.0), "one-sided")
    with pytest.raises(SingularSymbolError):
        sp.apply_multiplier(g.sample(np.sin), odd)


@pytest.mark.parametrize("kwargs", [dict(x_min=0, x_max=1, n=3), dict(x_min=1, x_max=0, n=8),
                                    dict(x_min=0, x_max=1, n=8, periodic=False)])
def test_grid_validation(kwargs):
    with pytest.raises(ParameterError):
        sp.Grid1D(**kwargs)


def test_field_validation():
    g = sp.Grid1D(0.0, 1.0, 8)
    with pytest.raises(ParameterError):
        sp.Field1D(g, np.zeros(7))
    with pytest.raises(ParameterError):
        sp.Field1D(g, np.full(8, np.nan))
    with pytest.raises(ParameterError):
        sp.dn_multiplier(0.0)


def test_physical_params():
    p = sp.PhysicalParams(0.1, 0.2, 0.5, 1.0, require_matched=True)
    assert p.rho == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        sp.PhysicalParams(0.1, 0.2, 1.0, 1.0, require_matched=True)
    with pytest.raises(ParameterError):
        sp.PhysicalParams(0.0, 0.2, 1.0, 1.0)
