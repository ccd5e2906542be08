"""Linear water waves over a flat bottom with full dispersion, forced by surface pressure.

In Fourier variables, with nu(xi) = xi * omega(sqrt(mu) xi),

    d_t zeta_hat = nu^2 psi_hat,      d_t psi_hat = -zeta_hat - P_hat.

From rest the response splits as zeta = zeta_L - zeta_R with

    zeta_L_hat = (i/2) nu int_0^t P_hat(s) exp(+i nu (t - s)) ds,
    zeta_R_hat = (i/2) nu int_0^t P_hat(s) exp(-i nu (t - s)) ds.

For a pressure P_hat(t) = exp(-i t a(xi)) P0_hat both integrals are closed form:

    zeta_R_hat = (i/2) nu P0_hat t exp(-i t (nu + a)/2) sinc(t (nu - a)/2),
    zeta_L_hat = (i/2) nu P0_hat t exp(+i t (nu - a)/2) sinc(t (nu + a)/2),

where sinc(x) = sin(x)/x.  a = nu (pressure moving with the waves) gives
sup|zeta_R| ~ sqrt(t); a = xi (unit speed) gives sup|zeta_R| ~ t^(1/3).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma

from .errors import MisuseError, ParameterError, PreconditionError, SolverError
from .series import MaxSeries
from .spectral import (Field1D, Grid1D, continuous_transform, dispersion, real_part_checked,
                       sech, transform_at)

KINDS = ("resonant", "traveling_unit_speed", "general")
BOUND_POLICIES = ("warn", "raise", "off")

log = logging.getLogger(__name__)


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


# ---------------------------------------------------------------------------
# Dispersion-relation calculus.  g(y) = y omega(y) = sqrt(y tanh y); nu(xi) = g(sqrt(mu) xi)/sqrt(mu).

_SMALL_Y = 1e-3


def g_prime(y):
    """g'(y) for y >= 0."""
    y = np.abs(np.asarray(y, dtype=float))
    small = y < _SMALL_Y
    s = np.where(small, 1.0, y)
    u = s * np.tanh(s)
    du = np.tanh(s) + s * sech(s) ** 2
    return np.where(small, 1 - y * y / 2 + 19 * y**4 / 72, du / (2 * np.sqrt(u)))


def g_second(y):
    """g''(y) for y >= 0 (negative: g is concave)."""
    y = np.abs(np.asarray(y, dtype=float))
    small = y < _SMALL_Y
    s = np.where(small, 1.0, y)
    t, sh2 = np.tanh(s), sech(s) ** 2
    u = s * t
    du = t + s * sh2
    ddu = 2 * sh2 * (1 - s * t)
    big = ddu / (2 * np.sqrt(u)) - du * du / (4 * u**1.5)
    return np.where(small, -y + 19 * y**3 / 18, big)


def nu_second(xi, mu: float):
    """Second derivative of nu(xi) = xi omega(sqrt(mu) xi); odd in xi."""
    xi = np.asarray(xi, dtype=float)
    return np.sign(xi) * math.sqrt(mu) * g_second(math.sqrt(mu) * np.abs(xi))


@dataclass(frozen=True)
class PhaseProfile:
    """phi(xi) with its first two derivatives."""

    phi: Callable
    dphi: Callable
    d2phi: Callable
    name: str = ""


def resonance_phase(mu: float, ray_speed: float) -> PhaseProfile:
    """phi = nu(xi) - v xi, the phase of zeta_R observed along X = v t."""
    r = math.sqrt(mu)
    return PhaseProfile(lambda x: dispersion(x, mu) - ray_speed * np.asarray(x),
                        lambda x: g_prime(r * np.asarray(x)) - ray_speed,
                        lambda x: nu_second(x, mu), f"nu - {ray_speed:g} xi")


def unit_speed_phase(mu: float) -> PhaseProfile:
    """phi = xi (omega(sqrt(mu) xi) - 1) = -mu xi^3 / 6 + O(xi^5)."""
    return resonance_phase(mu, 1.0)


# ---------------------------------------------------------------------------
# Runs


@dataclass(frozen=True)
class DispersiveRun:
    """Pressure P(t) with P_hat(t) = exp(-i t a(xi)) P0_hat.

    ``a`` is nu for 'resonant', xi for 'traveling_unit_speed', and
    ``speed_symbol`` for 'general' (odd, real, sublinear, a(xi)/xi >= 0).
    """

    mu: float
    P0: Field1D
    pressure_kind: str = "resonant"
    t_samples: np.ndarray = field(default_factory=lambda: np.array([]))
    speed_symbol: Optional[Callable] = None
    mu_max: float = 100.0
    bound_policy: str = "warn"
    bound_constant: float = 1.0

    def __post_init__(self):
        if self.bound_policy not in BOUND_POLICIES:
            raise ParameterError(f"bound_policy must be one of {BOUND_POLICIES}, got {self.bound_policy!r}")
        if not self.bound_constant > 0:
            raise ParameterError("bound_constant must be positive")
        if not (0 < self.mu <= self.mu_max):
            raise ParameterError(f"mu must lie in (0, {self.mu_max:g}], got {self.mu}")
        if self.pressure_kind not in KINDS:
            raise ParameterError(f"unknown pressure kind {self.pressure_kind!r}")
        if self.pressure_kind == "general":
            if self.speed_symbol is None:
                raise ParameterError("general pressure kind needs speed_symbol")
            xi = np.linspace(0.01, 10, 101)
            a = np.asarray(self.speed_symbol(xi), dtype=float)
            if not np.allclose(np.asarray(self.speed_symbol(-xi)), -a) or np.any(a / xi < 0):
                raise ParameterError("speed_symbol must be odd with a(xi)/xi >= 0")
        object.__setattr__(self, "t_samples", np.asarray(self.t_samples, dtype=float))

    @property
    def grid(self) -> Grid1D:
        return self.P0.grid

    def nu(self) -> np.ndarray:
        return dispersion(self.grid.xi, self.mu)

    def symbol_a(self, xi=None) -> np.ndarray:
        xi = self.grid.xi if xi is None else np.asarray(xi, dtype=float)
        if self.pressure_kind == "resonant":
            return dispersion(xi, self.mu)
        if self.pressure_kind == "traveling_unit_speed":
            return xi
        return np.asarray(self.speed_symbol(xi), dtype=float)

    def p0_coeffs(self) -> np.ndarray:
        """DFT of P0 with the unpaired Nyquist mode removed (keeps outputs Hermitian)."""
        c = np.fft.fft(self.P0.values)
        if self.grid.n % 2 == 0:
            c[self.grid.n // 2] = 0.0
        return c

    def pressure_coeffs(self, t: float) -> np.ndarray:
        return np.exp(-1j * t * self.symbol_a()) * self.p0_coeffs()


def gaussian_pressure(grid: Grid1D, amplitude: float = -1.0, width_sq: float = 1.0) -> Field1D:
    """amplitude * exp(-X^2 / width_sq); the default is -exp(-X^2)."""
    return Field1D(grid, amplitude * np.exp(-grid.x**2 / width_sq))


def _to_field(run: DispersiveRun, coeffs: np.ndarray, X_samples=None):
    if X_samples is None:
        scale = max(float(np.max(np.abs(coeffs))) / run.grid.n, np.finfo(float).tiny)
        return Field1D(run.grid, real_part_checked(np.fft.ifft(coeffs), scale))
    # trapezoid in xi at arbitrary X (periodic interpolation of the grid field)
    X = np.atleast_1d(np.asarray(X_samples, dtype=float))
    phase = np.exp(1j * np.outer(X - run.grid.x_min, run.grid.xi))
    return (phase @ coeffs).real / run.grid.n


# ---------------------------------------------------------------------------
# Time integration


@dataclass(frozen=True)
class SpectralTrajectory:
    times: np.ndarray
    zeta: list
    psi: list
    energy: np.ndarray


def default_dt(run: DispersiveRun) -> float:
    """Largest step with dt * max(|nu|, |a|) <= 0.5 on the grid."""
    top = max(float(np.max(np.abs(run.nu()))), float(np.max(np.abs(run.symbol_a()))), 1e-300)
    return 0.5 / top


def _energy(zc, pc, nu, n, dx):
    return 0.5 * (np.sum(np.abs(zc) ** 2) + np.sum(nu * nu * np.abs(pc) ** 2)) * dx / n


def evolve_spectral(run: DispersiveRun, initial=None, t_samples: Optional[Sequence[float]] = None,
                    dt: Optional[float] = None, forced: bool = True) -> SpectralTrajectory:
    """Exponential integrator with the pressure frozen at each substep midpoint.

    Each mode is rotated exactly, so without forcing the energy
    1/2 |zeta|^2 + 1/2 <(1/mu) G psi, psi> is conserved to round-off.
    """
    g = run.grid
    times = np.asarray(run.t_samples if t_samples is None else t_samples, dtype=float)
    if times.size == 0 or np.any(np.diff(times) < 0) or times[0] < 0:
        raise ParameterError("t_samples must be a non-empty, non-decreasing list of times >= 0")
    if initial is None:
        zc, pc = np.zeros(g.n, complex), np.zeros(g.n, complex)
    else:
        z0, p0 = initial
        if z0.grid != g or p0.grid != g:
            raise ParameterError("initial data live on a different grid than the run")
        zc, pc = np.fft.fft(z0.values), np.fft.fft(p0.values)
    dt = default_dt(run) if dt is None else float(dt)
    nu = run.nu()
    p0c = run.p0_coeffs()
    a = run.symbol_a()
    t = 0.0
    out_z, out_p, en = [], [], []

    def advance(zc, pc, t, h):
        c, s = np.cos(nu * h), np.sin(nu * h)
        sinc_h = h * _sinc(nu * h)
        P = np.exp(-1j * (t + 0.5 * h) * a) * p0c if forced else 0.0
        u = zc + P
        u_new = u * c + nu * pc * s
        p_new = pc * c - u * sinc_h
        return u_new - P, p_new

    for target in times:
        steps = int(math.ceil((target - t) / dt - 1e-9))
        if steps > 0:
            h = (target - t) / steps
            for k in range(steps):
                zc, pc = advance(zc, pc, t + k * h, h)
        t = target
        out_z.append(_to_field(run, zc.copy()))
        out_p.append(_to_field(run, pc.copy()))
        en.append(_energy(zc, pc, nu, g.n, g.dx))
        if forced and run.pressure_kind == "general":
            _check_generic_bound(run, t, out_z[-1].norm_inf())
    return SpectralTrajectory(times, out_z, out_p, np.array(en))


def pressure_norm(run: DispersiveRun, t: float) -> float:
    """|P(t)|_L1 + |P(t)|_H3 + |X P(t)|_H3 on the grid."""
    g = run.grid
    P = _to_field(run, run.pressure_coeffs(t)).values
    w = (1.0 + g.xi**2) ** 3

    def h3(v):
        return math.sqrt(float(np.sum(w * np.abs(np.fft.fft(v)) ** 2)) * g.dx / g.n)

    return float(np.sum(np.abs(P))) * g.dx + h3(P) + h3(g.x * P)


def generic_bound(run: DispersiveRun, t: float) -> float:
    """C sqrt(t/mu) times the pressure norm; C is the user-set ``bound_constant``."""
    return run.bound_constant * math.sqrt(t / run.mu) * pressure_norm(run, t)


def _check_generic_bound(run: DispersiveRun, t: float, sup: float) -> None:
    if run.bound_policy == "off" or t <= 0:
        return
    bound = generic_bound(run, t)
    if sup <= bound:
        return
    msg = f"sup|zeta| = {sup:.6g} exceeds C sqrt(t/mu) |P| = {bound:.6g} at t = {t:g} (C = {run.bound_constant:g})"
    if run.bound_policy == "raise":
        raise SolverError(msg)
    log.warning(msg)


def duhamel_split(run: DispersiveRun, t: float, dt: Optional[float] = None):
    """(zeta_L, zeta_R) by midpoint-frozen quadrature of the two integrals (same substeps as the evolver)."""
    nu, p0c, a = run.nu(), run.p0_coeffs(), run.symbol_a()
    dt = default_dt(run) if dt is None else float(dt)
    steps = max(1, int(math.ceil(t / dt - 1e-9)))
    h = t / steps
    L = np.zeros(run.grid.n, complex)
    R = np.zeros(run.grid.n, complex)
    for k in range(steps):
        tk = k * h
        P = np.exp(-1j * (tk + 0.5 * h) * a) * p0c
        # int_{tk}^{tk+h} exp(+-i nu (t - s)) ds
        mid = t - tk - 0.5 * h
        w = h * _sinc(0.5 * nu * h)
        L += P * np.exp(1j * nu * mid) * w
        R += P * np.exp(-1j * nu * mid) * w
    return _to_field(run, 0.5j * nu * L), _to_field(run, 0.5j * nu * R)


# ---------------------------------------------------------------------------
# Closed forms


def zeta_R_hat(run: DispersiveRun, t: float, xi=None, p0_hat=None) -> np.ndarray:
    xi = run.grid.xi if xi is None else np.asarray(xi, dtype=float)
    p = run.p0_coeffs() if p0_hat is None else p0_hat
    nu, a = dispersion(xi, run.mu), run.symbol_a(xi)
    return 0.5j * nu * p * t * np.exp(-0.5j * t * (nu + a)) * _sinc(0.5 * t * (nu - a))


def zeta_L_hat(run: DispersiveRun, t: float) -> np.ndarray:
    nu, a, p = run.nu(), run.symbol_a(), run.p0_coeffs()
    return 0.5j * nu * p * t * np.exp(0.5j * t * (nu - a)) * _sinc(0.5 * t * (nu + a))


def zeta_R(run: DispersiveRun, t: float, X_samples=None):
    if t < 0:
        raise ParameterError(f"time must be >= 0, got {t}")
    return _to_field(run, zeta_R_hat(run, t), X_samples)


def zeta_L(run: DispersiveRun, t: float, X_samples=None):
    return _to_field(run, zeta_L_hat(run, t), X_samples)


def zeta_R_resonant(run: DispersiveRun, t: float, X_samples=None):
    """zeta_R_hat = (i t / 2) nu P0_hat exp(-i t nu), evaluated on the grid spectrum."""
    if run.pressure_kind != "resonant":
        raise MisuseError(f"zeta_R_resonant needs a resonant run, got {run.pressure_kind!r}")
    return zeta_R(run, t, X_samples)


def zeta_R_unit_speed(run: DispersiveRun, t: float, X_samples=None):
    """Response to P0(X - t); the inner time integral is the sinc closed form."""
    if run.pressure_kind != "traveling_unit_speed":
        raise MisuseError(f"zeta_R_unit_speed needs a unit-speed run, got {run.pressure_kind!r}")
    return zeta_R(run, t, X_samples)


def sup_series(run: DispersiveRun, times: Sequence[float], which: str = "R") -> MaxSeries:
    fn = zeta_R if which == "R" else zeta_L
    sups, args = [], []
    for t in times:
        v = fn(run, float(t)).values
        j = int(np.argmax(np.abs(v)))
        sups.append(abs(v[j])); args.append(run.grid.x[j])
    return MaxSeries(np.asarray(times, float), np.array(sups), np.array(args),
                     {"quantity": f"zeta_{which}", "kind": run.pressure_kind, "mu": run.mu})


def p0_hat_l1(run: DispersiveRun) -> float:
    """int |P0_hat(xi)| dxi from the grid spectrum."""
    g = run.grid
    return float(np.sum(np.abs(continuous_transform(run.P0))) * 2 * np.pi / g.length)


# ---------------------------------------------------------------------------
# Along-ray evaluation for the unit-speed law at large t.


def p0_hat_interpolant(run: DispersiveRun, xi_max: float, n: int = 4097):
    """Cubic-spline interpolant of the continuous P0_hat on [-xi_max, xi_max]."""
    xi = np.linspace(-xi_max, xi_max, n)
    v = transform_at(run.P0, xi)
    re, im = CubicSpline(xi, v.real), CubicSpline(xi, v.imag)
    return lambda s: re(s) + 1j * im(s)


def spectral_extent(run: DispersiveRun, rel_tol: float = 1e-16) -> float:
    """Wavenumber beyond which |P0_hat| stays below rel_tol * max."""
    xi = np.linspace(0, np.pi / run.grid.dx, 2049)
    mag = np.abs(transform_at(run.P0, xi)) + np.abs(transform_at(run.P0, -xi))
    above = np.nonzero(mag > rel_tol * mag.max())[0]
    return float(xi[min(above[-1] + 1, xi.size - 1)])


def zeta_R_along_ray(run: DispersiveRun, t: float, points_per_period: int = 30,
                     chunk: int = 1 << 20) -> float:
    """zeta_R(t, X = t) for the unit-speed pressure, by direct trapezoid quadrature in xi.

    The integrand oscillates with period about 4 pi / t at large |xi|, so the
    quadrature is refined with t instead of using the run's (periodic) grid.
    """
    if run.pressure_kind != "traveling_unit_speed":
        raise MisuseError("along-ray evaluation is defined for the unit-speed pressure")
    xm = spectral_extent(run)
    p_hat = p0_hat_interpolant(run, xm)
    n = int(points_per_period * t * xm / (2 * np.pi)) + 20001
    xi_all = np.linspace(-xm, xm, n)
    d = xi_all[1] - xi_all[0]
    total = 0.0 + 0.0j
    for s in range(0, n, chunk):
        xi = xi_all[s:s + chunk]
        nu = dispersion(xi, run.mu)
        x = t * (nu - xi)
        w = np.where((s + np.arange(xi.size) == 0) | (s + np.arange(xi.size) == n - 1), 0.5, 1.0)
        total += np.sum(w * 0.5j * nu * p_hat(xi) * t * np.exp(-0.5j * x) * _sinc(0.5 * x))
    return float((total * d / (2 * np.pi)).real)


# ---------------------------------------------------------------------------
# Stationary-phase oracles


def cubic_phase_integral() -> complex:
    """J = int_R z exp(i z^3) dz by rotating each half-line onto a decaying ray.

    On z = r exp(i pi/6) the integrand becomes r exp(-r^3) (times a phase), and
    on z = -r exp(-i pi/6) likewise; both pieces are smooth quadratures.
    """
    from scipy.integrate import quad

    m, _ = quad(lambda r: r * math.exp(-r**3), 0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    right = np.exp(2j * np.pi / 6) * m  # z = r e^{i pi/6}: z dz = r e^{i pi/3} dr
    left = -np.exp(-2j * np.pi / 6) * m  # int_{-inf}^0 = -int_0^inf z e^{-i z^3} dz, conjugate ray
    return complex(right + left)


def cubic_phase_integral_closed_form() -> complex:
    """i Gamma(2/3) / sqrt(3)."""
    return 1j * gamma(2.0 / 3.0) / math.sqrt(3.0)


def unit_speed_limit_constant() -> float:
    """C with |t^(-1/3) zeta_R(t, t)| -> C |P0_hat(0)| / mu^(2/3)."""
    return 3 * 6 ** (2 / 3) * abs(cubic_phase_integral()) / (4 * math.pi)


def unit_speed_limit(run: DispersiveRun) -> float:
    p0 = abs(transform_at(run.P0, [0.0])[0])
    if p0 < 1e-12 * max(run.P0.norm_inf(), 1e-300):
        raise PreconditionError("the t^(1/3) law needs P0_hat(0) != 0")
    return unit_speed_limit_constant() * p0 / run.mu ** (2 / 3)


def resonant_sqrt_limit(run: DispersiveRun, n: int = 20001) -> tuple:
    """Stationary-phase limit of sup_X |zeta_R(t)| / sqrt(t) for the resonant pressure.

    Each ray X = nu'(xi0) t carries amplitude |nu P0_hat|(xi0) / sqrt(2 pi |nu''(xi0)|);
    returns (limit, maximising xi0).
    """
    xm = spectral_extent(run)
    xi = np.linspace(xm / n, xm, n)
    amp = np.abs(dispersion(xi, run.mu) * transform_at(run.P0, xi)) / np.sqrt(
        2 * np.pi * np.abs(nu_second(xi, run.mu)))
    j = int(np.argmax(amp))
    return float(amp[j]), float(xi[j])


# ---------------------------------------------------------------------------
# Dispersive decay (second-derivative Van der Corput bound)

VDC_CONSTANT = 8.0  # |int_a^b e^{i Phi}| <= 8 / sqrt(min |Phi''|)


@dataclass(frozen=True)
class DecayConstants:
    y0: float
    c1: float
    c2: float


def decay_constants(n: int = 200001) -> DecayConstants:
    """y0 = argmax |g''|; c1 = inf_{(0,y0]} |g''|/y; c2 = inf_{[y0,inf)} |g''| y^{3/2}.

    The limits at 0 (value 1) and infinity (value 1/4) are included in the infima.
    """
    y = np.logspace(-6, 6, n)
    a = np.abs(g_second(y))
    k = int(np.argmax(a))
    y0 = float(y[k])
    c1 = min(float(np.min(a[: k + 1] / y[: k + 1])), 1.0)
    c2 = min(float(np.min(a[k:] * y[k:] ** 1.5)), 0.25)
    return DecayConstants(y0, c1, c2)


def _gauss_panels(a: float, b: float, panels: int = 400, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class DecayReport:
    times: np.ndarray
    sup: np.ndarray
    envelope: np.ndarray
    K: float
    norms: tuple
    constants: DecayConstants


def decay_envelope_constant(f: Field1D, mu: float, xi_max: Optional[float] = None) -> tuple:
    """K = 8/sqrt(c1) mu^(-1/2) N1 + 8/sqrt(c2) mu^(1/8) N2 with the two weighted L1 norms of f_hat'."""
    if xi_max is None:
        xi_max = spectral_extent(DispersiveRun(mu, f))
    s, w = _gauss_panels(0.0, math.sqrt(xi_max))
    xi = s * s
    dfh = lambda v: np.abs(transform_at(f, v, weight=lambda x: -1j * x))
    both = dfh(xi) + dfh(-xi)
    # xi = s^2: dxi / sqrt(xi) = 2 ds, xi^(3/4) dxi = 2 s^(5/2) ds
    n1 = float(np.sum(w * 2 * both))
    n2 = float(np.sum(w * 2 * s**2.5 * both))
    c = decay_constants()
    K = VDC_CONSTANT / math.sqrt(c.c1) * mu**-0.5 * n1 + VDC_CONSTANT / math.sqrt(c.c2) * mu**0.125 * n2
    return K, (n1, n2), c


def free_evolution(f: Field1D, mu: float, t: float) -> np.ndarray:
    """int exp(-i t nu) exp(i X xi) f_hat dxi on the grid, i.e. 2 pi exp(-i t nu(D)) f (complex)."""
    c = np.fft.fft(f.values)
    if f.grid.n % 2 == 0:
        c[f.grid.n // 2] = 0.0
    return 2 * np.pi * np.fft.ifft(np.exp(-1j * t * dispersion(f.grid.xi, mu)) * c)


def dispersion_decay_check(f: Field1D, mu: float, t_samples: Sequence[float], mean_tol: float = 1e-10) -> DecayReport:
    """Sup-norm of the free evolution against the K / sqrt(t) envelope."""
    fh0 = abs(transform_at(f, [0.0])[0])
    scale = max(f.norm_l2(), 1e-300)
    if fh0 > mean_tol * scale:
        raise PreconditionError(f"f_hat(0) = {fh0:.3e} is not zero; subtract the mean first")
    K, norms, c = decay_envelope_constant(f, mu)
    ts = np.asarray(t_samples, float)
    sup = np.array([np.max(np.abs(free_evolution(f, mu, t))) for t in ts])
    return DecayReport(ts, sup, K / np.sqrt(ts), K, norms, c)
