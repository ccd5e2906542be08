"""Shallow-water waves over variable depth forced by a moving bottom.

Solves  zeta_tt - d_X(h0 d_X zeta) = d_t^2 b_m  with h0 = 1 - beta*b0, using a
flux-form (staggered) space discretisation and leapfrog in time.

Resonant landslide construction: if zeta3 solves the homogeneous equation with
zeta3(0) = 0 and d_t zeta3(0) = r, then zeta1 = t*zeta3 solves the forced equation
with b_m = 2 int_0^t zeta3.  zeta1 grows linearly while b_m stays bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BathymetryError, ParameterError
from .series import MaxSeries
from .shallow import check_cfl, flux_laplacian, leapfrog_start, leapfrog_update
from .spectral import Field1D, Grid1D, derivative


def smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class Bathymetry:
    h0: Field1D
    beta: float
    b0: Field1D
    h_min: float = 0.05

    def __post_init__(self):
        expected = 1.0 - self.beta * self.b0.values
        if not np.allclose(self.h0.values, expected, rtol=0, atol=1e-14):
            raise BathymetryError("h0 must equal 1 - beta*b0 pointwise")
        low = float(self.h0.values.min())
        if low < self.h_min:
            x = self.h0.grid.x[int(np.argmin(self.h0.values))]
            raise BathymetryError(f"depth {low:.4g} at X = {x:.4g} is below h_min = {self.h_min:g}")

    @classmethod
    def from_b0(cls, b0: Field1D, beta: float, h_min: float = 0.05) -> "Bathymetry":
        return cls(Field1D(b0.grid, 1.0 - beta * b0.values), beta, b0, h_min)

    @property
    def grid(self) -> Grid1D:
        return self.h0.grid

    @property
    def h_mid(self) -> np.ndarray:
        """Depth at cell midpoints x_j + dx/2 (average of neighbours)."""
        h = self.h0.values
        return 0.5 * (h + np.roll(h, -1))

    @property
    def max_speed(self) -> float:
        return math.sqrt(float(self.h0.values.max()))

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Discrete L_h u = -D^-(h_mid D^+ u), symmetric positive semi-definite."""
        return -flux_laplacian(u, self.h_mid, self.grid.dx)


def flat_bathymetry(grid: Grid1D) -> Bathymetry:
    return Bathymetry.from_b0(grid.zeros(), 0.0)


def tanh_bathymetry(grid: Grid1D, beta: float = 0.5, blend_fraction: float = 0.05,
                    h_min: float = 0.05) -> Bathymetry:
    """b0 = -tanh(X), relaxed smoothly to 0 over the outer ``blend_fraction`` of each side."""
    x, L = grid.x, grid.length
    w = blend_fraction * L
    dist = np.minimum(x - grid.x_min, grid.x_max - x)
    window = smooth_step(dist / w)
    b0 = Field1D(grid, -np.tanh(x) * window)
    return Bathymetry.from_b0(b0, beta, h_min)


def check_topo_cfl(dt: float, bathy: Bathymetry):
    check_cfl(dt, bathy.grid.dx, bathy.max_speed)


# ---------------------------------------------------------------------------
# Bottom motion


@dataclass(frozen=True)
class LandslideMotion:
    """Bottom forcing d_t^2 b_m.

    kind = 'constructed': b_m = 2 int zeta3 with d_t zeta3(0) = ``zeta3_initial_rate``.
    kind = 'tabulated':   ``bm(t)`` returns b_m on the grid; forcing by centered differences.
    kind = 'source':      ``source(t)`` returns d_t^2 b_m directly.
    ``t_stop`` freezes the bottom from that time on; ``entry`` records how the
    constructed rate was specified.
    """

    kind: str
    zeta3_initial_rate: Optional[Field1D] = None
    bm: Optional[Callable[[float], np.ndarray]] = None
    source: Optional[Callable[[float], np.ndarray]] = None
    t_stop: Optional[float] = None
    entry: str = ""
    scale: float = 1.0

    def __post_init__(self):
        need = {"constructed": self.zeta3_initial_rate, "tabulated": self.bm, "source": self.source}
        if self.kind not in need:
            raise ParameterError(f"unknown landslide kind {self.kind!r}")
        if need[self.kind] is None:
            raise ParameterError(f"{self.kind} landslide is missing its data")

    def scaled(self, factor: float) -> "LandslideMotion":
        return LandslideMotion(self.kind, self.zeta3_initial_rate, self.bm, self.source,
                               self.t_stop, self.entry, self.scale * factor)

    def active(self, t: float) -> bool:
        return self.t_stop is None or t < self.t_stop - 1e-12


def constructed_from_rate(rate: Field1D, t_stop=None) -> LandslideMotion:
    return LandslideMotion("constructed", zeta3_initial_rate=rate, t_stop=t_stop, entry="rate")


def constructed_from_velocity(bathy: Bathymetry, f: Field1D, t_stop=None) -> LandslideMotion:
    """Initial data (zeta3, V3) = (0, f'): the rate is -d_X(h0 f') = L_h f."""
    rate = Field1D(f.grid, bathy.apply(f.values))
    return LandslideMotion("constructed", zeta3_initial_rate=rate, t_stop=t_stop, entry="velocity")


def gaussian_rate(grid: Grid1D) -> Field1D:
    """(4X^2 - 2) exp(-X^2), the second derivative of exp(-X^2)."""
    x = grid.x
    return Field1D(grid, (4 * x * x - 2) * np.exp(-x * x))


def no_landslide(grid: Grid1D) -> LandslideMotion:
    zero = np.zeros(grid.n)
    return LandslideMotion("source", source=lambda t: zero)


# ---------------------------------------------------------------------------
# Time stepping


@dataclass(frozen=True)
class TopoState:
    zeta1: Field1D
    zeta1_prev: Field1D
    t: float
    zeta3: Optional[Field1D] = None
    zeta3_prev: Optional[Field1D] = None
    bm: Optional[Field1D] = None


def _source(landslide: LandslideMotion, t: float, dt: float, grid: Grid1D) -> np.ndarray:
    if not landslide.active(t):
        return np.zeros(grid.n)
    if landslide.kind == "source":
        s = landslide.source(t)
    else:
        b = landslide.bm
        s = (b(t + dt) - 2.0 * b(t) + b(t - dt)) / (dt * dt)
    return landslide.scale * np.asarray(s, dtype=float)


def initial_topo_state(bathy: Bathymetry, landslide: LandslideMotion, dt: float,
                       zeta0: Optional[Field1D] = None, v0: Optional[Field1D] = None) -> TopoState:
    check_topo_cfl(dt, bathy)
    g = bathy.grid
    z0 = zeta0.values if zeta0 is not None else np.zeros(g.n)
    w0 = v0.values if v0 is not None else np.zeros(g.n)
    if landslide.kind == "constructed":
        r = landslide.zeta3_initial_rate.values
        # zeta3(0) = 0, d_t zeta3(0) = r, d_t^3 zeta3(0) = -L_h r.
        z3_prev = leapfrog_start(np.zeros(g.n), r, np.zeros(g.n), -bathy.apply(r), dt)
        s0 = landslide.scale * 2.0 * r if landslide.active(0.0) else np.zeros(g.n)
        ds0 = np.zeros(g.n)  # d_t(2 d_t zeta3) = 2 d_t^2 zeta3 = 0 at t = 0
        extra = dict(zeta3=Field1D(g, np.zeros(g.n)), zeta3_prev=Field1D(g, z3_prev),
                     bm=Field1D(g, np.zeros(g.n)))
    else:
        s0 = _source(landslide, 0.0, dt, g)
        ds0 = (_source(landslide, dt, dt, g) - _source(landslide, -dt, dt, g)) / (2 * dt)
        extra = {}
    acc0 = flux_laplacian(z0, bathy.h_mid, g.dx) + s0
    jerk0 = flux_laplacian(w0, bathy.h_mid, g.dx) + ds0
    prev = leapfrog_start(z0, w0, acc0, jerk0, dt)
    return TopoState(Field1D(g, z0), Field1D(g, prev), 0.0, **extra)


def step_topo_fd(state: TopoState, bathy: Bathymetry, forcing: LandslideMotion, dt: float,
                 grid: Grid1D) -> TopoState:
    """One leapfrog step; a constructed landslide advances its companion zeta3 first."""
    check_topo_cfl(dt, bathy)
    if grid != bathy.grid:
        raise ParameterError("bathymetry lives on a different grid")
    h_mid, dx = bathy.h_mid, grid.dx
    extra = {}
    if forcing.kind == "constructed":
        z3, z3p = state.zeta3.values, state.zeta3_prev.values
        z3n = leapfrog_update(z3, z3p, flux_laplacian(z3, h_mid, dx), dt)
        if forcing.active(state.t):
            src = forcing.scale * (z3n - z3p) / dt
            bm = state.bm.values + forcing.scale * dt * (z3 + z3n)
        else:
            src, bm = np.zeros(grid.n), state.bm.values
        extra = dict(zeta3=Field1D(grid, z3n), zeta3_prev=state.zeta3, bm=Field1D(grid, bm))
    else:
        src = _source(forcing, state.t, dt, grid)
    z = state.zeta1.values
    new = leapfrog_update(z, state.zeta1_prev.values, flux_laplacian(z, h_mid, dx) + src, dt)
    return TopoState(Field1D(grid, new), state.zeta1, state.t + dt, **extra)


def staggered_energy(z_next: np.ndarray, z: np.ndarray, bathy: Bathymetry, dt: float) -> float:
    """Leapfrog invariant at t + dt/2: |D_t zeta|^2 + <h_mid D^+ zeta^{n+1}, D^+ zeta^n>."""
    dx = bathy.grid.dx
    vt = (z_next - z) / dt
    gx1 = (np.roll(z_next, -1) - z_next) / dx
    gx0 = (np.roll(z, -1) - z) / dx
    return float((np.sum(vt * vt) + np.sum(bathy.h_mid * gx1 * gx0)) * dx)


def centered_energy(z_next: np.ndarray, z: np.ndarray, z_prev: np.ndarray, bathy: Bathymetry, dt: float) -> float:
    """int (d_t zeta)^2 + h0 (d_X zeta)^2 at integer time levels, centered differences."""
    dx = bathy.grid.dx
    vt = (z_next - z_prev) / (2 * dt)
    gx = (np.roll(z, -1) - z) / dx
    return float((np.sum(vt * vt) + np.sum(bathy.h_mid * gx * gx)) * dx)


# ---------------------------------------------------------------------------
# Experiments


@dataclass(frozen=True)
class ConstructedResonance:
    zeta1: MaxSeries
    bm_sup: MaxSeries
    bm_l2: np.ndarray
    times: np.ndarray
    entry: str
    snapshots: dict = field(default_factory=dict)
    window_levels: dict = field(default_factory=dict)


def _check_box(bathy: Bathymetry, t_end: float, rate: Field1D, margin: float = 10.0):
    g = bathy.grid
    c = bathy.max_speed
    # crude support of the initial rate
    big = np.abs(rate.values) > 1e-12 * max(rate.norm_inf(), 1e-300)
    reach = float(np.max(np.abs(g.x[big]))) if np.any(big) else 0.0
    half = min(-g.x_min, g.x_max)
    if half < reach + c * t_end + margin:
        raise ParameterError(
            f"box half-width {half:g} < support {reach:.3g} + {c:.3g}*t_end + {margin:g}; "
            "waves would wrap around"
        )


def build_constructed_resonance(bathy: Bathymetry, landslide: LandslideMotion, t_end: float, dt: float,
                                sample_dt: float = 0.5, snapshot_times=(), window_time: Optional[float] = None,
                                check_box: bool = True) -> ConstructedResonance:
    """Integrate zeta3 and report zeta1 = t*zeta3 and b_m = 2 int zeta3 (trapezoid).

    ``window_time`` additionally keeps the five time levels centred on that time,
    used by the residual check.
    """
    if landslide.kind != "constructed":
        raise ParameterError("build_constructed_resonance needs a constructed landslide")
    if t_end <= 0:
        raise ParameterError(f"t_end must be positive, got {t_end}")
    g = bathy.grid
    if check_box:
        _check_box(bathy, t_end, landslide.zeta3_initial_rate)
    st = initial_topo_state(bathy, landslide, dt)
    h_mid, dx, x = bathy.h_mid, g.dx, g.x
    z3p, z3, bm = st.zeta3_prev.values, st.zeta3.values, st.bm.values
    n_steps = int(round(t_end / dt))
    stride = max(1, int(round(sample_dt / dt)))
    snap_steps = {int(round(ts / dt)): ts for ts in snapshot_times}
    win_center = int(round(window_time / dt)) if window_time is not None else None
    times, s1, a1, sb, ab, l2b, snaps, win = [], [], [], [], [], [], {}, {}
    s = landslide.scale
    for n in range(n_steps + 1):
        t = n * dt
        z1, bmv = s * t * z3, bm
        if n % stride == 0:
            j, k = int(np.argmax(np.abs(z1))), int(np.argmax(np.abs(bmv)))
            times.append(t)
            s1.append(abs(z1[j])); a1.append(x[j])
            sb.append(abs(bmv[k])); ab.append(x[k])
            l2b.append(math.sqrt(float(np.sum(bmv * bmv)) * dx))
        if n in snap_steps:
            snaps[snap_steps[n]] = {"zeta1": z1.copy(), "bm": bmv.copy()}
        if win_center is not None and abs(n - win_center) <= 2:
            win[n - win_center] = {"t": t, "zeta1": z1.copy(), "bm": bmv.copy()}
        if n == n_steps:
            break
        z3n = leapfrog_update(z3, z3p, flux_laplacian(z3, h_mid, dx), dt)
        bm = bm + s * dt * (z3 + z3n)
        z3p, z3 = z3, z3n
    times = np.array(times)
    return ConstructedResonance(
        MaxSeries(times, np.array(s1), np.array(a1), {"quantity": "zeta1"}),
        MaxSeries(times, np.array(sb), np.array(ab), {"quantity": "b_m"}),
        np.array(l2b), times, landslide.entry, snaps, win,
    )


def spectral_depth_operator(u: np.ndarray, bathy: Bathymetry) -> np.ndarray:
    """d_X(h0 d_X u) by spectral differentiation (independent of the staggered stencil)."""
    g = bathy.grid
    du = derivative(Field1D(g, u)).values
    return derivative(Field1D(g, bathy.h0.values * du)).values


def constructed_residual(bathy: Bathymetry, landslide: LandslideMotion, t_check: float, dt: float) -> float:
    """L2 norm of zeta1_tt - d_X(h0 d_X zeta1) - d_t^2 b_m at ``t_check``.

    Time derivatives use the five-point fourth-order stencil, space derivatives
    are spectral, so the residual measures only the solver's own truncation error.
    """
    res = build_constructed_resonance(bathy, landslide, t_check + 3 * dt, dt, sample_dt=t_check,
                                      window_time=t_check, check_box=False)
    w = res.window_levels
    c = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}
    d2 = lambda key: sum(c[k] * w[k][key] for k in c) / (12.0 * dt * dt)
    r = d2("zeta1") - spectral_depth_operator(w[0]["zeta1"], bathy) - d2("bm")
    return math.sqrt(float(np.sum(r * r)) * bathy.grid.dx)


@dataclass(frozen=True)
class IncidentWave:
    zeta0: Field1D
    v0: Field1D


def right_moving_pulse(bathy: Bathymetry, amplitude: float = 1.0, center: float = 0.0,
                       width: float = 1.0) -> IncidentWave:
    """Gaussian with d_t zeta = -sqrt(h0) d_X zeta, i.e. locally right-going."""
    g = bathy.grid
    s = (g.x - center) / width
    z = amplitude * np.exp(-0.5 * s * s)
    dz = -amplitude * s / width * np.exp(-0.5 * s * s)
    return IncidentWave(Field1D(g, z), Field1D(g, -np.sqrt(bathy.h0.values) * dz))


@dataclass(frozen=True)
class TopoRun:
    series: MaxSeries
    energy: np.ndarray
    centered_energy: np.ndarray
    final: np.ndarray


def run_topo(bathy: Bathymetry, landslide: LandslideMotion, zeta0: Optional[Field1D], v0: Optional[Field1D],
             t_end: float, dt: float, sample_dt: float = 0.5) -> TopoRun:
    """Evolve zeta1 from (zeta0, v0) under the landslide forcing, recording sup|zeta1| and energies."""
    if t_end <= 0:
        raise ParameterError(f"t_end must be positive, got {t_end}")
    g = bathy.grid
    st = initial_topo_state(bathy, landslide, dt, zeta0, v0)
    n_steps = int(round(t_end / dt))
    stride = max(1, int(round(sample_dt / dt)))
    times, sups, args, en, cen = [], [], [], [], []
    for n in range(n_steps + 1):
        nxt = step_topo_fd(st, bathy, landslide, dt, g)
        if n % stride == 0:
            z = st.zeta1.values
            j = int(np.argmax(np.abs(z)))
            times.append(st.t); sups.append(abs(z[j])); args.append(g.x[j])
            en.append(staggered_energy(nxt.zeta1.values, z, bathy, dt))
            cen.append(centered_energy(nxt.zeta1.values, z, st.zeta1_prev.values, bathy, dt))
        if n == n_steps:
            break
        st = nxt
    return TopoRun(MaxSeries(np.array(times), np.array(sups), np.array(args), {"quantity": "zeta1"}),
                   np.array(en), np.array(cen), st.zeta1.values.copy())


def run_amplified_wave(bathy: Bathymetry, landslide: LandslideMotion, incident: IncidentWave, t_end: float,
                       dt: float, sample_dt: float = 0.5) -> MaxSeries:
    """sup|zeta1| for an incident wave evolving under the landslide forcing."""
    return run_topo(bathy, landslide, incident.zeta0, incident.v0, t_end, dt, sample_dt).series
