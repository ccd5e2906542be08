import numpy as np
import pytest

from resonance_lab.errors import ParameterError
from resonance_lab.series import MaxSeries, fit_growth, fit_slope


def _series(values, times):
    return MaxSeries(times, values, np.zeros_like(times))


def test_power_law_recovered():
    t = np.linspace(1, 100, 200)
    fit = fit_growth(_series(3.0 * t**0.5, t), (10, 100))
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.residual < 1e-12


def test_default_window_is_last_three_quarters():
    t = np.linspace(0, 40, 401)
    fit = fit_slope(_series(np.abs(2 * t - 1), t))
    assert fit.window == (10.0, 40.0)
    assert fit.exponent == pytest.approx(2.0)


def test_window_and_lookup():
    t = np.arange(11.0)
    s = _series(t * t, t)
    assert len(s.window(2, 5)) == 4
    assert s.value_at(4.2) == 16.0


@pytest.mark.parametrize("window", [(5, 5), (0, 1.5), (20, 30)])
def test_bad_windows(window):
    t = np.arange(0.0, 11.0)
    with pytest.raises(ParameterError):
        fit_growth(_series(t + 1, t), window)


def test_shape_validation():
    with pytest.raises(ParameterError):
        MaxSeries(np.arange(3.0), np.arange(4.0), np.arange(3.0))
    with pytest.raises(ParameterError):
        MaxSeries(np.arange(3.0), -np.ones(3), np.arange(3.0))
