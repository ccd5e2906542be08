"""Flat-bottom shallow-water response to a moving disturbance.

The free surface minus bottom, h, solves

    h_tt - h_XX = d_X^2 f,   h(0) = -b(0),   h_t(0) = 0,    f = P + b,

whose d'Alembert solution splits as h = h_T + h_L - h_R with

    h_T = -(b0(X - t) + b0(X + t)) / 2
    h_L = 1/2 int_0^t d_X f(s, X + t - s) ds      (left-going)
    h_R = 1/2 int_0^t d_X f(s, X - t + s) ds      (right-going)

A disturbance moving at speed U = 1 feeds h_R at a constant rate, so
sup|h_R| grows linearly; any other speed saturates below |f0|_inf / |1 - U|.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ParameterError
from .series import MaxSeries
from .spectral import Field1D, Grid1D

# ---------------------------------------------------------------------------
# Disturbances


@dataclass(frozen=True)
class Gaussian:
    """amplitude * exp(-(X - center)^2 / (2 width^2))."""

    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0

    def __call__(self, X):
        s = (np.asarray(X, dtype=float) - self.center) / self.width
        return self.amplitude * np.exp(-0.5 * s * s)

    def derivative(self, X):
        s = (np.asarray(X, dtype=float) - self.center) / self.width
        return -self.amplitude * s / self.width * np.exp(-0.5 * s * s)

    @property
    def sup(self) -> float:
        return abs(self.amplitude)

    @property
    def sup_derivative(self) -> float:
        return abs(self.amplitude) * math.exp(-0.5) / self.width

    def support_radius(self, tol: float = 1e-16) -> float:
        return self.width * math.sqrt(2 * math.log(1 / tol)) + abs(self.center)


@dataclass(frozen=True)
class DisturbanceProfile:
    """f(t, X) = f0(X - U t) for ``kind='traveling'``, or an explicit field for ``'tabulated'``.

    ``f0`` must be callable and expose ``derivative``.  Tabulated fields supply
    ``field(t, X)`` and ``field_dx(t, X)``.
    """

    f0: Optional[object] = None
    speed: float = 1.0
    kind: str = "traveling"
    field: Optional[Callable] = None
    field_dx: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == "traveling":
            if self.f0 is None or not hasattr(self.f0, "derivative"):
                raise ParameterError("traveling disturbance needs f0 with a derivative")
            if not math.isfinite(self.speed):
                raise ParameterError(f"speed must be finite, got {self.speed}")
        elif self.kind == "tabulated":
            if self.field is None or self.field_dx is None:
                raise ParameterError("tabulated disturbance needs field and field_dx")
        else:
            raise ParameterError(f"unknown disturbance kind {self.kind!r}")

    def value(self, t, X):
        if self.kind == "traveling":
            return self.f0(np.asarray(X) - self.speed * t)
        return self.field(t, X)

    def dx(self, t, X):
        if self.kind == "traveling":
            return self.f0.derivative(np.asarray(X) - self.speed * t)
        return self.field_dx(t, X)


def traveling_gaussian(speed: float, amplitude: float = 1.0, width: float = 1.0) -> DisturbanceProfile:
    return DisturbanceProfile(Gaussian(amplitude, width), speed)


@dataclass(frozen=True)
class _Zero:
    def __call__(self, X):
        return np.zeros_like(np.asarray(X, dtype=float))

    derivative = __call__
    sup = 0.0
    sup_derivative = 0.0

    def support_radius(self, tol=1e-16):
        return 0.0


def zero_disturbance() -> DisturbanceProfile:
    return DisturbanceProfile(_Zero(), 0.0)


@dataclass(frozen=True)
class _Combination:
    weights: tuple
    profiles: tuple
    derivative_part: bool

    def __call__(self, t, X):
        out = 0.0
        for w, p in zip(self.weights, self.profiles):
            out = out + w * (p.dx(t, X) if self.derivative_part else p.value(t, X))
        return out


def combine(weights: Sequence[float], profiles: Sequence[DisturbanceProfile]) -> DisturbanceProfile:
    """Linear combination sum w_k f_k as a tabulated disturbance."""
    w, p = tuple(map(float, weights)), tuple(profiles)
    return DisturbanceProfile(kind="tabulated", field=_Combination(w, p, False),
                              field_dx=_Combination(w, p, True))


# ---------------------------------------------------------------------------
# d'Alembert oracle


def _simpson_in_time(integrand, t: float, quadrature_n: int, X) -> np.ndarray:
    if quadrature_n < 2:
        raise ParameterError(f"quadrature_n must be >= 2, got {quadrature_n}")
    if t < 0:
        raise ParameterError(f"time must be >= 0, got {t}")
    X = np.asarray(X, dtype=float)
    if t == 0:
        return np.zeros_like(X)
    n = quadrature_n + (quadrature_n % 2)
    s = np.linspace(0.0, t, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (t / n) / 3.0
    acc = np.zeros_like(X)
    for sk, wk in zip(s, w):
        acc = acc + wk * integrand(sk, X)
    return acc


def dalembert_hR(f: DisturbanceProfile, t: float, X, quadrature_n: int) -> np.ndarray:
    """Right-going forced part 1/2 int_0^t d_X f(s, X - t + s) ds, composite Simpson."""
    return 0.5 * _simpson_in_time(lambda s, x: f.dx(s, x - t + s), t, quadrature_n, X)


def dalembert_hL(f: DisturbanceProfile, t: float, X, quadrature_n: int) -> np.ndarray:
    """Left-going forced part 1/2 int_0^t d_X f(s, X + t - s) ds."""
    return 0.5 * _simpson_in_time(lambda s, x: f.dx(s, x + t - s), t, quadrature_n, X)


def dalembert_hT(b0: Optional[Callable], t: float, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if b0 is None:
        return np.zeros_like(X)
    return -0.5 * (b0(X - t) + b0(X + t))


def dalembert_h(f: DisturbanceProfile, t: float, X, quadrature_n: int, b0=None) -> np.ndarray:
    return dalembert_hT(b0, t, X) + dalembert_hL(f, t, X, quadrature_n) - dalembert_hR(f, t, X, quadrature_n)


def hR_traveling_exact(f0, speed: float, t: float, X) -> np.ndarray:
    """Closed form of h_R for f = f0(X - U t)."""
    X = np.asarray(X, dtype=float)
    if speed == 1.0:
        return 0.5 * t * f0.derivative(X - t)
    return (f0(X - speed * t) - f0(X - t)) / (2.0 * (1.0 - speed))


def hL_traveling_exact(f0, speed: float, t: float, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if speed == -1.0:
        return 0.5 * t * f0.derivative(X + t)
    return (f0(X + t) - f0(X - speed * t)) / (2.0 * (1.0 + speed))


def saturation_bound(f0_sup: float, f0_prime_sup: float, speed: float, t: float) -> float:
    """min(|f0|_inf / |1-U|, t/2 |f0'|_inf), the two-branch bound on sup|h_R|."""
    linear = 0.5 * t * f0_prime_sup
    if speed == 1.0:
        return linear
    return min(f0_sup / abs(1.0 - speed), linear)


# ---------------------------------------------------------------------------
# Leapfrog kernel shared with the variable-depth solver.


def flux_laplacian(u: np.ndarray, h_mid, dx: float) -> np.ndarray:
    """D^-(h_mid D^+ u) on a periodic grid; ``h_mid[j]`` sits at x_j + dx/2."""
    flux = h_mid * (np.roll(u, -1) - u)
    return (flux - np.roll(flux, 1)) / (dx * dx)


def leapfrog_update(u: np.ndarray, u_prev: np.ndarray, rhs: np.ndarray, dt: float) -> np.ndarray:
    return 2.0 * u - u_prev + (dt * dt) * rhs


def leapfrog_start(u0: np.ndarray, v0: np.ndarray, acc0: np.ndarray, jerk0: np.ndarray, dt: float) -> np.ndarray:
    """Fictitious level u(-dt) from a Taylor expansion, so the first leapfrog step is third-order."""
    return u0 - dt * v0 + 0.5 * dt * dt * acc0 - (dt**3 / 6.0) * jerk0


@dataclass(frozen=True)
class ShallowState:
    h: Field1D
    h_prev: Field1D
    t: float


def check_cfl(dt: float, dx: float, speed: float = 1.0):
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigurationError(f"time step must be positive, got {dt}")
    if dt > dx / speed * (1 + 1e-12):
        raise ConfigurationError(
            f"CFL violated: dt = {dt:g} exceeds dx/c = {dx / speed:g} (wave speed {speed:g})"
        )


def _forcing_lap(forcing: DisturbanceProfile, t: float, grid: Grid1D) -> np.ndarray:
    return flux_laplacian(np.asarray(forcing.value(t, grid.x), dtype=float), 1.0, grid.dx)


def initial_state(grid: Grid1D, forcing: DisturbanceProfile, dt: float, b0=None) -> ShallowState:
    """h(0) = -b0, h_t(0) = 0; the stored previous level is the Taylor value at t = -dt."""
    check_cfl(dt, grid.dx)
    h0 = -np.asarray(b0(grid.x), dtype=float) if b0 is not None else np.zeros(grid.n)
    acc0 = flux_laplacian(h0, 1.0, grid.dx) + _forcing_lap(forcing, 0.0, grid)
    # h_t(0) = 0, so h_ttt(0) = d_X^2 f_t(0).
    jerk0 = (_forcing_lap(forcing, dt, grid) - _forcing_lap(forcing, -dt, grid)) / (2 * dt)
    prev = leapfrog_start(h0, np.zeros(grid.n), acc0, jerk0, dt)
    return ShallowState(Field1D(grid, h0), Field1D(grid, prev), 0.0)


def step_fd(state: ShallowState, forcing: DisturbanceProfile, dt: float, grid: Grid1D) -> ShallowState:
    """One leapfrog step of h_tt = h_XX + f_XX with centered second differences."""
    check_cfl(dt, grid.dx)
    h = state.h.values
    rhs = flux_laplacian(h, 1.0, grid.dx) + _forcing_lap(forcing, state.t, grid)
    new = leapfrog_update(h, state.h_prev.values, rhs, dt)
    return ShallowState(Field1D(grid, new), state.h, state.t + dt)


def split_characteristics(h_next: np.ndarray, h: np.ndarray, h_prev: np.ndarray, dt: float, dx: float):
    """Left/right-going parts of h at the middle level, h = left + right.

    With A(X) = int_{-inf}^X h_t, right = (h - A)/2 and left = (h + A)/2; for
    b(0) = 0 these are h_L and -h_R.  h_t is the centered time difference and the
    integral a cumulative trapezoid starting from the (quiet) left edge.
    """
    v = (h_next - h_prev) / (2.0 * dt)
    A = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * dx)))
    return 0.5 * (h + A), 0.5 * (h - A)


@dataclass(frozen=True)
class ShallowRun:
    """Output of :func:`run_shallow`: sampled series plus final levels."""

    series: MaxSeries
    final: ShallowState
    snapshots: dict


def run_shallow(forcing: DisturbanceProfile, grid: Grid1D, dt: float, t_end: float,
                sample_dt: float = 0.1, b0=None, snapshot_times: Sequence[float] = ()) -> ShallowRun:
    """Integrate to ``t_end`` recording sup|h_R| every ``sample_dt``.

    ``snapshots`` maps each requested time (rounded to the step grid) to a dict
    with the fields ``h`` and ``hR``.
    """
    check_cfl(dt, grid.dx)
    if t_end <= 0:
        raise ParameterError(f"t_end must be positive, got {t_end}")
    n_steps = int(round(t_end / dt))
    stride = max(1, int(round(sample_dt / dt)))
    snap_steps = {int(round(ts / dt)): ts for ts in snapshot_times}
    st = initial_state(grid, forcing, dt, b0)
    h_prev, h = st.h_prev.values, st.h.values
    dx, x = grid.dx, grid.x
    times, sups, args, snaps = [], [], [], {}
    lap_f = _forcing_lap(forcing, 0.0, grid)
    for n in range(n_steps + 1):
        h_next = leapfrog_update(h, h_prev, flux_laplacian(h, 1.0, dx) + lap_f, dt)
        if n % stride == 0 or n in snap_steps:
            _, right = split_characteristics(h_next, h, h_prev, dt, dx)
            hR = -right
            if n % stride == 0:
                j = int(np.argmax(np.abs(hR)))
                times.append(n * dt)
                sups.append(abs(hR[j]))
                args.append(x[j])
            if n in snap_steps:
                snaps[snap_steps[n]] = {"h": h.copy(), "hR": hR}
        if n == n_steps:
            break
        h_prev, h = h, h_next
        lap_f = _forcing_lap(forcing, (n + 1) * dt, grid)
    label = {"speed_U": forcing.speed} if forcing.kind == "traveling" else {}
    final = ShallowState(Field1D(grid, h), Field1D(grid, h_prev), n_steps * dt)
    return ShallowRun(MaxSeries(np.array(times), np.array(sups), np.array(args), label), final, snaps)


def default_grid(f0, speed: float, t_end: float, dx: float, margin: float = 10.0) -> Grid1D:
    """Box with half-width >= support + max(1, |U|) t_end + margin."""
    half = f0.support_radius() + max(1.0, abs(speed)) * t_end + margin
    return Grid1D.centered(half, dx)


def _sweep_member(args):
    speed, f0, t_end, grid, dx, dt, sample_dt = args
    g = grid if grid is not None else default_grid(f0, speed, t_end, dx)
    return run_shallow(DisturbanceProfile(f0, speed), g, dt, t_end, sample_dt).series


def run_proudman_sweep(speeds: Sequence[float], f0, t_end: float, grid: Optional[Grid1D] = None,
                       dt: float = 0.005, dx: float = 0.01, sample_dt: float = 0.1,
                       jobs: int = 1) -> list:
    """One MaxSeries of sup|h_R| per speed, in the order given.

    Without an explicit ``grid`` each speed gets :func:`default_grid`.  The CFL
    condition is checked for every member before any run starts.
    """
    speeds = [float(u) for u in speeds]
    if not speeds:
        raise ParameterError("speed list is empty")
    if t_end <= 0:
        raise ParameterError(f"t_end must be positive, got {t_end}")
    check_cfl(dt, grid.dx if grid is not None else dx)
    tasks = [(u, f0, t_end, grid, dx, dt, sample_dt) for u in speeds]
    if jobs <= 1 or len(tasks) == 1:
        return [_sweep_member(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_sweep_member, tasks))
