"""Periodic grids, discrete Fourier transforms and flat-strip Fourier multipliers.

Continuous transform convention used throughout the package::

    f_hat(xi) = int exp(-i X xi) f(X) dX,      f(X) = (1/2pi) int exp(i X xi) f_hat(xi) dxi

On a periodic grid the coefficients carried by :class:`SpectralField` are the raw
``numpy.fft.fft`` values; :func:`continuous_transform` rescales them to samples of
``f_hat``.  Symbols are always functions of the angular wavenumber ``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import DomainError, ParameterError, SingularSymbolError

# Below this |argument| the removable singularities switch to Taylor series.
SERIES_THRESHOLD = 1e-8
# Imaginary residue tolerated (relative to |f|_inf) when a real output is expected.
REAL_RESIDUE_TOL = 1e-10


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x_j = x_min + j*dx``, ``j = 0..n-1``, periodic of length ``x_max - x_min``."""

    x_min: float
    x_max: float
    n: int
    periodic: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ParameterError(f"grid needs n >= 4 points, got {self.n}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise ParameterError(f"need x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if not self.periodic:
            raise ParameterError("only periodic grids are supported")

    @classmethod
    def centered(cls, half_width: float, dx: float) -> "Grid1D":
        """Symmetric box [-half_width, half_width) with spacing as close to ``dx`` as an even n allows."""
        n = int(np.ceil(2 * half_width / dx))
        n += n % 2
        return cls(-half_width, -half_width + n * dx, n)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @cached_property
    def xi(self) -> np.ndarray:
        """Angular wavenumbers in FFT order: 2 pi k / L for k = 0..n/2-1, -n/2..-1."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def zeros(self) -> "Field1D":
        return Field1D(self, np.zeros(self.n))

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "Field1D":
        return Field1D(self, func(self.x))


@dataclass(frozen=True)
class Field1D:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ParameterError(f"field has shape {v.shape}, grid expects ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            raise ParameterError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def norm_l2(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.grid.dx))

    def inner(self, other: "Field1D") -> float:
        _same_grid(self.grid, other.grid)
        return float(np.dot(self.values, other.values) * self.grid.dx)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __add__(self, other):
        return Field1D(self.grid, self.values + _values(other))

    def __sub__(self, other):
        return Field1D(self.grid, self.values - _values(other))

    def __mul__(self, other):
        return Field1D(self.grid, self.values * _values(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field1D(self.grid, -self.values)


@dataclass(frozen=True)
class SpectralField:
    """Raw DFT coefficients (``numpy.fft.fft`` normalisation) on ``grid.xi``."""

    grid: Grid1D
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n,):
            raise ParameterError(f"coefficients have shape {c.shape}, grid expects ({self.grid.n},)")
        object.__setattr__(self, "coeffs", c)


def _values(other):
    return other.values if isinstance(other, Field1D) else other


def _same_grid(a: Grid1D, b: Grid1D):
    if a != b:
        raise ParameterError("fields live on different grids")


def forward(f: Field1D) -> SpectralField:
    return SpectralField(f.grid, np.fft.fft(f.values))


def inverse(s: SpectralField, scale: float = 1.0) -> Field1D:
    """Inverse DFT, asserting the result is real up to round-off."""
    return Field1D(s.grid, real_part_checked(np.fft.ifft(s.coeffs), scale))


def real_part_checked(z: np.ndarray, scale: float) -> np.ndarray:
    """Drop the imaginary part of ``z`` after checking it is round-off relative to ``scale``."""
    residue = float(np.max(np.abs(z.imag))) if z.size else 0.0
    ref = max(scale, float(np.max(np.abs(z.real))) if z.size else 0.0, np.finfo(float).tiny)
    if residue > REAL_RESIDUE_TOL * ref:
        raise SingularSymbolError(
            f"imaginary residue {residue:.3e} exceeds {REAL_RESIDUE_TOL:g} x {ref:.3e}; "
            "symbol is not Hermitian on this grid"
        )
    return np.ascontiguousarray(z.real)


def continuous_transform(f: Field1D) -> np.ndarray:
    """Samples of f_hat(xi) on ``grid.xi`` (trapezoid rule, spectrally accurate for decaying f)."""
    g = f.grid
    return g.dx * np.exp(-1j * g.xi * g.x_min) * np.fft.fft(f.values)


def transform_at(f: Field1D, xi, weight: Callable[[np.ndarray], np.ndarray] | None = None,
                 chunk: int = 2048) -> np.ndarray:
    """Direct-sum evaluation of f_hat at arbitrary wavenumbers.

    Only samples with |f| above 1e-17 |f|_inf contribute, so localized data stay cheap.
    ``weight`` multiplies f(X) first, e.g. ``lambda x: -1j * x`` gives f_hat'.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    x, v = f.grid.x, f.values.astype(complex)
    if weight is not None:
        v = v * weight(x)
    keep = np.abs(v) > 1e-17 * max(np.max(np.abs(v)), np.finfo(float).tiny)
    x, v = x[keep], v[keep] * f.grid.dx
    out = np.empty(xi.shape, dtype=complex)
    for start in range(0, xi.size, chunk):
        sl = slice(start, start + chunk)
        out[sl] = np.exp(-1j * np.outer(xi[sl], x)) @ v
    return out


def energy(f: Field1D) -> float:
    """Discrete L2 energy sum |f_j|^2 dx."""
    return float(np.sum(f.values**2) * f.grid.dx)


def spectral_energy(s: SpectralField) -> float:
    """Same energy computed from DFT coefficients (discrete Parseval)."""
    return float(np.sum(np.abs(s.coeffs) ** 2) * s.grid.dx / s.grid.n)


# ---------------------------------------------------------------------------
# Scalar symbols with removable singularities handled by series.


def tanhc(y):
    """tanh(y)/y, equal to 1 at y = 0."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, y)
    y2 = y * y
    return np.where(small, 1 - y2 / 3 + 2 * y2 * y2 / 15, np.tanh(safe) / safe)


def sech(y):
    """1/cosh(y) without overflow for large |y|."""
    a = np.abs(np.asarray(y, dtype=float))
    e = np.exp(-a)
    return 2 * e / (1 + e * e)


def sinh_ratio(a, y):
    """sinh(a*y)/sinh(y) for 0 <= a <= 1, equal to ``a`` at y = 0; overflow-free."""
    a = np.asarray(a, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    small = y < SERIES_THRESHOLD
    safe = np.where(small, 1.0, y)
    # exp((a-1)y) (1 - exp(-2ay)) / (1 - exp(-2y))
    big = np.exp((a - 1) * safe) * (-np.expm1(-2 * a * safe)) / (-np.expm1(-2 * safe))
    series = a * (1 + (a * a - 1) * y * y / 6)
    return np.where(small, series, big)


def omega(xi):
    """Phase-speed factor sqrt(tanh(xi)/xi); even, omega(0) = 1."""
    return np.sqrt(tanhc(np.abs(np.asarray(xi, dtype=float))))


def dispersion(xi, mu: float):
    """Linear water-wave frequency nu(xi) = xi * omega(sqrt(mu) xi) (odd in xi)."""
    xi = np.asarray(xi, dtype=float)
    return xi * omega(np.sqrt(mu) * xi)


# ---------------------------------------------------------------------------
# Multipliers


@dataclass(frozen=True)
class Multiplier:
    symbol: Callable[[np.ndarray], np.ndarray]
    name: str = "multiplier"

    def on(self, grid: Grid1D) -> np.ndarray:
        """Symbol values at the grid wavenumbers, rejecting non-finite entries."""
        s = np.asarray(self.symbol(grid.xi))
        s = np.broadcast_to(s, grid.xi.shape)
        bad = ~np.isfinite(s)
        if np.any(bad):
            xi_bad = float(grid.xi[np.argmax(bad)])
            raise SingularSymbolError(f"symbol '{self.name}' is not finite at xi = {xi_bad!r}")
        return s


FieldLike = Union[Field1D, SpectralField]


def apply_multiplier(f: FieldLike, m: Multiplier) -> FieldLike:
    """Apply ``m(D)``; a Field1D input yields a real Field1D (residue checked)."""
    if isinstance(f, SpectralField):
        return SpectralField(f.grid, m.on(f.grid) * f.coeffs)
    if not isinstance(f, Field1D):
        raise TypeError(f"expected Field1D or SpectralField, got {type(f).__name__}")
    out = np.fft.ifft(m.on(f.grid) * np.fft.fft(f.values))
    return Field1D(f.grid, real_part_checked(out, f.norm_inf()))


def _check_mu(mu: float):
    if not (np.isfinite(mu) and mu > 0):
        raise ParameterError(f"shallowness parameter mu must be > 0, got {mu}")


def dn_multiplier(mu: float) -> Multiplier:
    """(1/mu) G_mu[0,0]: symbol xi^2 tanh(sqrt(mu)|xi|)/(sqrt(mu)|xi|)."""
    _check_mu(mu)
    r = np.sqrt(mu)
    return Multiplier(lambda xi: xi * xi * tanhc(r * np.abs(xi)), f"flat_dn(mu={mu:g})")


def nn_multiplier(mu: float) -> Multiplier:
    """Neumann-to-Neumann map of the flat strip: sech(sqrt(mu)|xi|)."""
    _check_mu(mu)
    r = np.sqrt(mu)
    return Multiplier(lambda xi: sech(r * xi), f"flat_nn(mu={mu:g})")


def dd_multiplier(mu: float) -> Multiplier:
    """Bottom trace of the harmonic extension of surface data: sech(sqrt(mu)|xi|)."""
    _check_mu(mu)
    r = np.sqrt(mu)
    return Multiplier(lambda xi: sech(r * xi), f"flat_dd(mu={mu:g})")


def nd_multiplier(mu: float) -> Multiplier:
    """Bottom trace of the potential driven by a bottom flux: -tanh(sqrt(mu)|xi|)/(sqrt(mu)|xi|)."""
    _check_mu(mu)
    r = np.sqrt(mu)
    return Multiplier(lambda xi: -tanhc(r * np.abs(xi)), f"flat_nd(mu={mu:g})")


def extension_multiplier(z: float, mu: float) -> Multiplier:
    if not (-1.0 <= z <= 0.0):
        raise DomainError(f"level z must lie in [-1, 0], got {z}")
    _check_mu(mu)
    r = np.sqrt(mu)
    return Multiplier(lambda xi: sinh_ratio(z + 1.0, r * xi), f"extension(z={z:g}, mu={mu:g})")


def half_dn_multiplier(mu: float) -> Multiplier:
    """|xi| / sqrt(1 + sqrt(mu)|xi|), the square-root scale of the Dirichlet-Neumann map."""
    _check_mu(mu)
    r = np.sqrt(mu)
    return Multiplier(lambda xi: np.abs(xi) / np.sqrt(1 + r * np.abs(xi)), f"half_dn(mu={mu:g})")


def flat_dn(psi: Field1D, mu: float) -> Field1D:
    return apply_multiplier(psi, dn_multiplier(mu))


def flat_nn(B: Field1D, mu: float) -> Field1D:
    return apply_multiplier(B, nn_multiplier(mu))


def flat_dd(psi: Field1D, mu: float) -> Field1D:
    return apply_multiplier(psi, dd_multiplier(mu))


def flat_nd(B: Field1D, mu: float) -> Field1D:
    return apply_multiplier(B, nd_multiplier(mu))


def extension_kernel(phi: Field1D, z: float, mu: float) -> Field1D:
    """Harmonic extension sinh((z+1)sqrt(mu)|D|)/sinh(sqrt(mu)|D|) phi at level z."""
    return apply_multiplier(phi, extension_multiplier(z, mu))


def derivative(f: Field1D, order: int = 1) -> Field1D:
    """Spectral X-derivative; the unpaired Nyquist mode is dropped for odd orders."""
    xi = f.grid.xi.copy()
    if order % 2 and f.grid.n % 2 == 0:
        xi[f.grid.n // 2] = 0.0
    return apply_multiplier(f, Multiplier(lambda _: (1j * xi) ** order, f"d^{order}/dX^{order}"))


@dataclass(frozen=True)
class PhysicalParams:
    epsilon: float
    beta: float
    lam: float
    mu: float
    require_matched: bool = field(default=False)

    def __post_init__(self):
        for name in ("epsilon", "beta"):
            v = getattr(self, name)
            if not (0 < v <= 1):
                raise ParameterError(f"{name} must lie in (0, 1], got {v}")
        if not (0 < self.beta * self.lam <= 1):
            raise ParameterError(f"beta*lambda must lie in (0, 1], got {self.beta * self.lam}")
        _check_mu(self.mu)
        if self.require_matched and not np.isclose(self.beta * self.lam, self.epsilon, rtol=1e-12):
            raise ParameterError(
                f"beta*lambda = {self.beta * self.lam} must equal epsilon = {self.epsilon}"
            )

    @property
    def rho(self) -> float:
        """Ratio beta*lambda/epsilon weighting the moving-bottom terms."""
        return self.beta * self.lam / self.epsilon
