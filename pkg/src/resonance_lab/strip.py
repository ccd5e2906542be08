"""Elliptic problems on the flat strip S = (periodic X) x (-1, 0).

The fluid domain {-1 + beta b < z < eps zeta} is pulled back to S by
Sigma(X, z) = (X, z + sigma(X, z)),

    sigma = [theta(delta z |D|) eps zeta - theta(delta (z+1) |D|) beta b] z + eps theta(delta z |D|) zeta,

and the Laplacian becomes  div_mu (P grad_mu phi)  with grad_mu = (sqrt(mu) d_X, d_z) and

    P = [[1 + s_z,            -sqrt(mu) s_x          ],
         [-sqrt(mu) s_x,      (1 + mu s_x^2)/(1 + s_z)]].

Two problems are solved: the surface problem (phi = psi at z = 0, zero
conormal flux at z = -1) and the bottom problem (phi = 0 at z = 0, conormal
flux B at z = -1).  Their traces define

    G_dn psi = conormal flux of phi_S at z = 0      G_dd psi = phi_S at z = -1
    G_nn B   = conormal flux of phi_B at z = 0      G_nd B   = phi_B at z = -1

Backends
--------
``FEStrip``: bilinear (Q1) finite elements, 2x2 Gauss quadrature.  Fluxes are
reaction forces of the assembled matrix, so the discrete adjoint identities
hold to solver precision.

``SpectralStrip``: Fourier x Chebyshev collocation with dense LU; converges
spectrally and is used where the discretization error must be negligible
(shape derivatives).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DiffeoError, ParameterError, SolverError
from .spectral import Field1D, Grid1D, apply_multiplier, derivative

DIRECT_LIMIT = 1_000_000


# ---------------------------------------------------------------------------
# Grid, cutoff, shape parameters


@dataclass(frozen=True)
class StripGrid2D:
    """Periodic X grid times ``n_z`` uniform intervals on [-1, 0]."""

    x_grid: Grid1D
    n_z: int

    def __post_init__(self):
        if self.n_z < 8:
            raise ParameterError(f"need n_z >= 8 vertical intervals, got {self.n_z}")

    @property
    def dz(self) -> float:
        return 1.0 / self.n_z

    @property
    def z(self) -> np.ndarray:
        return np.linspace(-1.0, 0.0, self.n_z + 1)

    @property
    def shape(self):
        return (self.n_z + 1, self.x_grid.n)


def _smooth_step(s):
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def _smooth_step_prime(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    u = np.where(inside, s, 0.5)
    a, b = np.exp(-1 / u), np.exp(-1 / (1 - u))
    da, db = a / u**2, -b / (1 - u) ** 2
    return np.where(inside, (da * b - a * db) / (a + b) ** 2, 0.0)


def theta(r):
    """Even C-infinity cutoff: 1 for |r| <= 1/2, 0 for |r| >= 2."""
    return 1.0 - _smooth_step((np.abs(np.asarray(r, dtype=float)) - 0.5) / 1.5)


def theta_prime(r):
    r = np.asarray(r, dtype=float)
    return -np.sign(r) * _smooth_step_prime((np.abs(r) - 0.5) / 1.5) / 1.5


@dataclass(frozen=True)
class ShapeParams:
    """Amplitude ratios entering the strip problems; zero amplitudes are allowed here."""

    epsilon: float
    beta: float
    mu: float
    rho: float = 1.0

    def __post_init__(self):
        if self.epsilon < 0 or self.beta < 0:
            raise ParameterError("epsilon and beta must be non-negative")
        if not self.mu > 0:
            raise ParameterError(f"mu must be positive, got {self.mu}")

    @classmethod
    def of(cls, params) -> "ShapeParams":
        if isinstance(params, cls):
            return params
        rho = getattr(params, "rho", 1.0)
        return cls(params.epsilon, params.beta, params.mu, rho)


# ---------------------------------------------------------------------------
# Diffeomorphism and coefficients


def _band(f: Field1D) -> np.ndarray:
    c = np.fft.fft(f.values)
    if f.grid.n % 2 == 0:
        c[f.grid.n // 2] = 0.0
    return c


@dataclass(frozen=True)
class Diffeo:
    grid2d: StripGrid2D
    zeta_hat: np.ndarray
    b_hat: np.ndarray
    params: ShapeParams
    delta: float
    jacobian_min: float

    def fields(self, z, x_shift: float = 0.0):
        """(sigma, d_X sigma, d_z sigma) at levels ``z`` and nodes x_j + x_shift; shape (len(z), n_x)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))[:, None]
        g = self.grid2d.x_grid
        xi = g.xi[None, :]
        k = np.abs(xi)
        e, bt, d = self.params.epsilon, self.params.beta, self.delta
        zh, bh = e * self.zeta_hat[None, :], bt * self.b_hat[None, :]
        th_s, th_b = theta(d * z * k), theta(d * (z + 1) * k)
        dth_s, dth_b = d * k * theta_prime(d * z * k), d * k * theta_prime(d * (z + 1) * k)
        s_hat = (th_s * zh - th_b * bh) * z + th_s * zh
        sz_hat = (dth_s * zh - dth_b * bh) * z + (th_s * zh - th_b * bh) + dth_s * zh
        shift = np.exp(1j * xi * x_shift)
        inv = lambda c: np.fft.ifft(c * shift, axis=1).real
        return inv(s_hat), inv(1j * xi * s_hat), inv(sz_hat)


def build_diffeo(zeta: Field1D, b: Field1D, params, grid2d: StripGrid2D, delta: float = 0.1,
                 k0: float = 0.1, h_min: float = 0.05, max_halvings: int = 30) -> Diffeo:
    """Assemble sigma, halving ``delta`` until 1 + d_z sigma >= k0 on a fine z scan."""
    p = ShapeParams.of(params)
    if zeta.grid != grid2d.x_grid or b.grid != grid2d.x_grid:
        raise ParameterError("zeta and b must live on the strip's X grid")
    depth = 1 + p.epsilon * zeta.values - p.beta * b.values
    if depth.min() < h_min:
        raise DiffeoError(f"water depth {depth.min():.4g} is below h_min = {h_min:g}")
    zh, bh = _band(zeta), _band(b)
    z_scan = np.linspace(-1, 0, 4 * grid2d.n_z + 1)
    for _ in range(max_halvings + 1):
        trial = Diffeo(grid2d, zh, bh, p, delta, 0.0)
        jac = 1 + min(trial.fields(z_scan, s)[2].min() for s in (0.0, 0.5 * grid2d.x_grid.dx))
        if jac >= k0:
            return Diffeo(grid2d, zh, bh, p, delta, float(jac))
        delta *= 0.5
    raise DiffeoError(
        f"Jacobian 1 + d_z sigma = {jac:.3g} < {k0:g} even with delta = {delta:.3g}; "
        "reduce delta or the surface/bottom amplitudes"
    )


@dataclass(frozen=True)
class CoeffField:
    """Entries of the symmetric matrix P at a set of points (arrays of equal shape)."""

    p11: np.ndarray
    p12: np.ndarray
    p22: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        half_tr = 0.5 * (self.p11 + self.p22)
        rad = np.sqrt((0.5 * (self.p11 - self.p22)) ** 2 + self.p12**2)
        return float(np.min(half_tr - rad))


def coefficients(diffeo: Diffeo, z, x_shift: float = 0.0) -> CoeffField:
    _, sx, sz = diffeo.fields(z, x_shift)
    j = 1 + sz
    if j.min() <= 0:
        raise DiffeoError(f"Jacobian 1 + d_z sigma reaches {j.min():.3g}")
    rm = math.sqrt(diffeo.params.mu)
    return CoeffField(j, -rm * sx, (1 + diffeo.params.mu * sx * sx) / j)


def coercivity_constant(diffeo: Diffeo) -> float:
    """min over grid nodes and midpoints of the smallest eigenvalue of P."""
    g2 = diffeo.grid2d
    z = np.linspace(-1, 0, 2 * g2.n_z + 1)
    return min(coefficients(diffeo, z, s).min_eigenvalue for s in (0.0, 0.5 * g2.x_grid.dx))


# ---------------------------------------------------------------------------
# Solutions


@dataclass(frozen=True)
class StripSolution:
    phi: np.ndarray  # (n_levels, n_x), level 0 is z = -1
    which: str
    data: Field1D
    backend: object = field(repr=False, compare=False, default=None)
    residual: float = 0.0


# ---------------------------------------------------------------------------
# Q1 finite elements

_GP = np.array([0.5 - 0.5 / math.sqrt(3), 0.5 + 0.5 / math.sqrt(3)])


def _q1_gradients(s, r):
    """Reference-square shape-function derivatives (d/ds, d/dr) for nodes 00, 10, 01, 11."""
    ds = np.array([-(1 - r), 1 - r, -r, r])
    dr = np.array([-(1 - s), -s, 1 - s, s])
    return ds, dr


class FEStrip:
    """Q1 variational discretization; the stiffness matrix is symmetric by construction."""

    def __init__(self, diffeo: Diffeo):
        self.diffeo = diffeo
        g2 = diffeo.grid2d
        self.grid2d = g2
        nx, nz = g2.x_grid.n, g2.n_z
        dx, dz = g2.x_grid.dx, g2.dz
        rm = math.sqrt(diffeo.params.mu)
        n_nodes = (nz + 1) * nx
        jj, ii = np.meshgrid(np.arange(nz), np.arange(nx), indexing="ij")
        nodes = np.stack([jj * nx + ii, jj * nx + (ii + 1) % nx,
                          (jj + 1) * nx + ii, (jj + 1) * nx + (ii + 1) % nx], axis=-1).reshape(-1, 4)
        kloc = np.zeros((nz * nx, 4, 4))
        self.k_min = np.inf
        for s in _GP:
            for r in _GP:
                z_levels = -1.0 + (np.arange(nz) + r) * dz
                P = coefficients(diffeo, z_levels, s * dx)
                self.k_min = min(self.k_min, P.min_eigenvalue)
                ds, dr = _q1_gradients(s, r)
                gx, gz = rm * ds / dx, dr / dz
                w = 0.25 * dx * dz
                p11, p12, p22 = (a.reshape(-1)[:, None, None] for a in (P.p11, P.p12, P.p22))
                kloc += w * (p11 * np.outer(gx, gx) + p12 * (np.outer(gx, gz) + np.outer(gz, gx))
                             + p22 * np.outer(gz, gz))
        rows = np.repeat(nodes, 4, axis=1).ravel()
        cols = np.tile(nodes, (1, 4)).ravel()
        K = sp.csr_matrix((kloc.ravel(), (rows, cols)), shape=(n_nodes, n_nodes))
        self.K = K
        self.nx, self.nz, self.dx = nx, nz, dx
        top = np.arange(nz * nx, (nz + 1) * nx)
        self.interior = np.arange(nz * nx)
        self.top = top
        self.K_II = K[self.interior][:, self.interior].tocsc()
        self.K_IT = K[self.interior][:, top]
        self._lu = None
        if self.K_II.shape[0] < DIRECT_LIMIT:
            self._lu = spla.splu(self.K_II)

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is not None:
            return self._lu.solve(rhs)
        d = self.K_II.diagonal()
        M = spla.LinearOperator(self.K_II.shape, lambda v: v / d)
        x, info = spla.cg(self.K_II, rhs, rtol=1e-13, maxiter=20 * self.K_II.shape[0], M=M)
        if info != 0:
            raise SolverError(f"CG did not converge (info={info}); coercivity k = {self.k_min:.3g}")
        return x

    def solve(self, which: str, data: Field1D) -> StripSolution:
        if data.grid != self.grid2d.x_grid:
            raise ParameterError("data grid does not match the strip")
        full = np.zeros((self.nz + 1) * self.nx)
        if which == "surface":
            rhs = -(self.K_IT @ data.values)
            full[self.top] = data.values
        elif which == "bottom":
            rhs = np.zeros(self.nz * self.nx)
            rhs[: self.nx] = -self.dx * data.values
        else:
            raise ParameterError(f"unknown problem {which!r}")
        phi_i = self._solve(rhs)
        res = np.linalg.norm(self.K_II @ phi_i - rhs) / max(np.linalg.norm(rhs), 1e-300)
        full[self.interior] = phi_i
        return StripSolution(full.reshape(self.nz + 1, self.nx), which, data, self, float(res))

    def top_flux(self, sol: StripSolution) -> np.ndarray:
        """Reaction force at the Dirichlet nodes divided by dx."""
        return (self.K @ sol.phi.ravel())[self.top] / self.dx

    def bottom_trace(self, sol: StripSolution) -> np.ndarray:
        return sol.phi[0].copy()

    def energy(self, phi: np.ndarray) -> float:
        """int_S grad_mu phi . P grad_mu phi."""
        v = phi.ravel()
        return float(v @ (self.K @ v))


# ---------------------------------------------------------------------------
# Fourier x Chebyshev collocation


def _cheb(n: int):
    """Chebyshev-Gauss-Lobatto nodes on [-1, 0] (ascending) and the d/dz matrix."""
    k = np.arange(n + 1)
    s = np.cos(np.pi * k / n)  # 1 .. -1
    c = np.where((k == 0) | (k == n), 2.0, 1.0) * (-1.0) ** k
    S = s[:, None] - s[None, :]
    D = np.outer(c, 1 / c) / (S + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    z = (s - 1) / 2  # 0 .. -1
    D = 2 * D
    return z[::-1].copy(), D[::-1, ::-1].copy()


def _fourier_diff(g: Grid1D) -> np.ndarray:
    xi = g.xi.copy()
    if g.n % 2 == 0:
        xi[g.n // 2] = 0
    return np.fft.ifft(1j * xi[:, None] * np.fft.fft(np.eye(g.n), axis=0), axis=0).real


class SpectralStrip:
    """Strong-form collocation; ``n_cheb`` intervals in z."""

    def __init__(self, diffeo: Diffeo, n_cheb: int = 24):
        self.diffeo = diffeo
        g = diffeo.grid2d.x_grid
        self.x_grid = g
        z, Dz = _cheb(n_cheb)
        self.z, self.nzl, self.nx = z, n_cheb + 1, g.n
        Dx = _fourier_diff(g)
        self.Dx1 = Dx
        P = coefficients(diffeo, z)
        self.k_min = P.min_eigenvalue
        rm = math.sqrt(diffeo.params.mu)
        Ix, Iz = np.eye(g.n), np.eye(self.nzl)
        DX, DZ = np.kron(Iz, Dx), np.kron(Dz, Ix)
        p11, p12, p22 = (a.ravel()[:, None] for a in (P.p11, P.p12, P.p22))
        fx = p11 * (rm * DX) + p12 * DZ          # X-flux component
        fz = p12 * (rm * DX) + p22 * DZ          # z-flux component (conormal)
        A = rm * DX @ fx + DZ @ fz
        top = np.arange((self.nzl - 1) * g.n, self.nzl * g.n)
        bot = np.arange(g.n)
        A[top] = 0.0
        A[top, top] = 1.0
        A[bot] = fz[bot]
        self.flux = fz
        self.top, self.bot = top, bot
        self.lu = sla.lu_factor(A)
        self._A = A

    def solve(self, which: str, data: Field1D) -> StripSolution:
        rhs = np.zeros(self.nzl * self.nx)
        if which == "surface":
            rhs[self.top] = data.values
        elif which == "bottom":
            rhs[self.bot] = data.values
        else:
            raise ParameterError(f"unknown problem {which!r}")
        phi = sla.lu_solve(self.lu, rhs)
        res = np.linalg.norm(self._A @ phi - rhs) / max(np.linalg.norm(rhs), 1e-300)
        return StripSolution(phi.reshape(self.nzl, self.nx), which, data, self, float(res))

    def top_flux(self, sol: StripSolution) -> np.ndarray:
        return (self.flux @ sol.phi.ravel())[self.top]

    def bottom_trace(self, sol: StripSolution) -> np.ndarray:
        return sol.phi[0].copy()

    def energy(self, phi: np.ndarray) -> float:
        """Clenshaw-Curtis in z, trapezoid in X, of grad_mu phi . P grad_mu phi."""
        g = self.x_grid
        rm = math.sqrt(self.diffeo.params.mu)
        fz = (self.flux @ phi.ravel()).reshape(self.nzl, self.nx)
        px = rm * (phi @ self.Dx1.T)
        P = coefficients(self.diffeo, self.z)
        # recover d_z phi from the conormal flux fz = p12 px + p22 phi_z
        phi_z = (fz - P.p12 * px) / P.p22
        dens = px * (P.p11 * px + P.p12 * phi_z) + phi_z * fz
        return float(np.sum(_cc_weights(self.nzl - 1) @ dens) * g.dx)


def _cc_weights(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights for the ascending nodes on [-1, 0]."""
    theta_k = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2 * np.cos(2 * k * theta_k[1:-1]) / (4 * k * k - 1)
        v -= np.cos(n * theta_k[1:-1]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta_k[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2 * v / n
    return (w / 2)[::-1]


# ---------------------------------------------------------------------------
# Public operations


def make_backend(diffeo: Diffeo, backend: str = "fe", n_cheb: int = 24):
    if backend == "fe":
        return FEStrip(diffeo)
    if backend == "spectral":
        return SpectralStrip(diffeo, n_cheb)
    raise ParameterError(f"unknown backend {backend!r}")


def solve_strip(which: str, data: Field1D, backend) -> StripSolution:
    """Solve the surface ('surface') or bottom ('bottom') problem on a prepared backend."""
    if not np.all(np.isfinite(data.values)):
        raise ParameterError("data must be finite")
    return backend.solve(which, data)


def boundary_operators(sol_surface: StripSolution, sol_bottom: StripSolution) -> dict:
    """G_dn psi, G_nn B, G_dd psi, G_nd B from one surface and one bottom solution."""
    be = sol_surface.backend
    if sol_bottom.backend is not be or sol_surface.which != "surface" or sol_bottom.which != "bottom":
        raise ParameterError("need a surface and a bottom solution from the same backend")
    g = sol_surface.data.grid
    return {
        "G_dn": Field1D(g, be.top_flux(sol_surface)),
        "G_nn": Field1D(g, be.top_flux(sol_bottom)),
        "G_dd": Field1D(g, be.bottom_trace(sol_surface)),
        "G_nd": Field1D(g, be.bottom_trace(sol_bottom)),
    }


def apply_operators(backend, psi: Field1D, B: Field1D) -> dict:
    return boundary_operators(backend.solve("surface", psi), backend.solve("bottom", B))


def velocity_traces(ops: dict, zeta: Field1D, b: Field1D, B: Field1D, psi: Field1D, params,
                    rho: Optional[float] = None) -> dict:
    """Surface and bottom velocities from the boundary operators.

    w_surf = (G psi + mu rho G_nn B + eps mu zeta_x psi_x) / (1 + eps^2 mu zeta_x^2), V_surf = psi_x - eps w zeta_x,
    w_bott = (mu rho B + beta mu b_x Phi_x) / (1 + beta^2 mu b_x^2), V_bott = Phi_x - beta w_bott b_x,
    with Phi = G_dd psi + mu rho G_nd B.
    """
    p = ShapeParams.of(params)
    rho = p.rho if rho is None else rho
    e, bt, mu = p.epsilon, p.beta, p.mu
    zx, bx, px = derivative(zeta).values, derivative(b).values, derivative(psi).values
    den_s = 1 + e * e * mu * zx * zx
    den_b = 1 + bt * bt * mu * bx * bx
    assert den_s.min() >= 1.0 and den_b.min() >= 1.0
    w = (ops["G_dn"].values + mu * rho * ops["G_nn"].values + e * mu * zx * px) / den_s
    V = px - e * w * zx
    Phi = Field1D(zeta.grid, ops["G_dd"].values + mu * rho * ops["G_nd"].values)
    Phx = derivative(Phi).values
    wb = (mu * rho * B.values + bt * mu * bx * Phx) / den_b
    Vb = Phx - bt * wb * bx
    g = zeta.grid
    return {"w_surf": Field1D(g, w), "V_surf": Field1D(g, V), "w_bott": Field1D(g, wb), "V_bott": Field1D(g, Vb)}


@dataclass(frozen=True)
class ShapeDerivativeReport:
    taus: tuple
    errors: dict
    ratios: dict
    formula_norms: dict


def shape_derivative_check(psi: Field1D, B: Field1D, zeta: Field1D, b: Field1D, h: Field1D, k: Field1D,
                           params, grid2d: StripGrid2D, taus=(1e-2, 5e-3, 2.5e-3), backend: str = "spectral",
                           n_cheb: int = 24, delta: float = 0.1) -> ShapeDerivativeReport:
    """One-sided difference quotients of the boundary operators against the shape-derivative formulas.

    'surface':    d/dtau [G psi + mu G_nn B](zeta + tau h)   vs  -eps G(h w) - eps mu d_X(h V)
    'bottom':     d/dtau [G psi + mu G_nn B](b + tau k)      vs  beta mu G_nn(d_X(k V_bott))
    'bottom_dd':  d/dtau [G_dd psi + mu G_nd B](zeta + tau h) vs -eps G_dd(h w)
    Errors are relative L2 norms; ``ratios`` are successive error ratios.
    """
    p = ShapeParams.of(params)
    mu, e, bt = p.mu, p.epsilon, p.beta
    g = zeta.grid

    def ops_at(z_, b_):
        d = build_diffeo(z_, b_, p, grid2d, delta=delta)
        be = make_backend(d, backend, n_cheb)
        return be, apply_operators(be, psi, B)

    be0, ops0 = ops_at(zeta, b)
    tr = velocity_traces(ops0, zeta, b, B, psi, p, rho=1.0)
    top = lambda o: o["G_dn"].values + mu * o["G_nn"].values
    bottom = lambda o: o["G_dd"].values + mu * o["G_nd"].values
    hw = Field1D(g, h.values * tr["w_surf"].values)
    ops_hw = apply_operators(be0, hw, g.zeros())
    rhs_s = -e * ops_hw["G_dn"].values - e * mu * derivative(Field1D(g, h.values * tr["V_surf"].values)).values
    dkV = derivative(Field1D(g, k.values * tr["V_bott"].values))
    rhs_b = bt * mu * apply_operators(be0, g.zeros(), dkV)["G_nn"].values
    rhs_dd = -e * ops_hw["G_dd"].values
    formulas = {"surface": rhs_s, "bottom": rhs_b, "bottom_dd": rhs_dd}
    errors = {key: [] for key in formulas}
    for tau in taus:
        _, o_h = ops_at(zeta + tau * h, b)
        _, o_k = ops_at(zeta, b + tau * k)
        fd = {"surface": (top(o_h) - top(ops0)) / tau,
              "bottom": (top(o_k) - top(ops0)) / tau,
              "bottom_dd": (bottom(o_h) - bottom(ops0)) / tau}
        for key, rhs in formulas.items():
            scale = max(np.linalg.norm(rhs), 1e-300)
            errors[key].append(float(np.linalg.norm(fd[key] - rhs) / scale))
    ratios = {key: [v[i + 1] / v[i] for i in range(len(v) - 1)] for key, v in errors.items()}
    norms = {key: float(np.sqrt(np.sum(v * v) * g.dx)) for key, v in formulas.items()}
    return ShapeDerivativeReport(tuple(taus), errors, ratios, norms)


def kinetic_energy_check(backend, psi: Field1D, B: Field1D, params) -> tuple:
    """(volume form, boundary form) of the kinetic energy with moving bottom.

    volume   = 1/(2 mu) int_S |grad_mu Phi|_P^2 + int rho B (G_dd psi + rho mu G_nd B),  Phi = phi_S + rho mu phi_B
    boundary = 1/2 int psi (G psi / mu + rho G_nn B) + 1/2 int rho B (G_dd psi + rho mu G_nd B)
    """
    p = ShapeParams.of(params)
    mu, rho = p.mu, p.rho
    s, bsol = backend.solve("surface", psi), backend.solve("bottom", B)
    ops = boundary_operators(s, bsol)
    dx = psi.grid.dx
    Phi = s.phi + rho * mu * bsol.phi
    bottom_term = float(np.sum(rho * B.values * (ops["G_dd"].values + rho * mu * ops["G_nd"].values)) * dx)
    volume = backend.energy(Phi) / (2 * mu) + bottom_term
    boundary = 0.5 * float(np.sum(psi.values * (ops["G_dn"].values / mu + rho * ops["G_nn"].values)) * dx) \
        + 0.5 * bottom_term
    return volume, boundary


def trace_ratio(fe: FEStrip, phi: np.ndarray) -> float:
    """|sqrt(1 + sqrt(mu)|D|) phi(-1)|_L2 / |grad_mu phi|_L2(S) for phi vanishing at z = 0 (flat metric)."""
    if np.max(np.abs(phi[-1])) > 0:
        raise ParameterError("trace inequality applies to fields vanishing at z = 0")
    g = fe.grid2d.x_grid
    mu = fe.diffeo.params.mu
    c = np.fft.fft(phi[0]) * np.sqrt(1 + math.sqrt(mu) * np.abs(g.xi))
    num = math.sqrt(float(np.sum(np.abs(c) ** 2)) * g.dx / g.n)
    return num / math.sqrt(fe.energy(phi))


# ---------------------------------------------------------------------------
# Flat-case validation


def flat_oracles(psi: Field1D, B: Field1D, mu: float) -> dict:
    from .spectral import dn_multiplier, nn_multiplier, dd_multiplier, nd_multiplier

    return {
        "G_dn": mu * apply_multiplier(psi, dn_multiplier(mu)).values,
        "G_nn": apply_multiplier(B, nn_multiplier(mu)).values,
        "G_dd": apply_multiplier(psi, dd_multiplier(mu)).values,
        "G_nd": apply_multiplier(B, nd_multiplier(mu)).values,
    }


@dataclass(frozen=True)
class FlatValidation:
    resolutions: tuple
    errors: dict
    orders: dict


def flat_validation(psi_fn, B_fn, mu: float = 1.0, resolutions=((128, 16), (256, 32), (512, 64)),
                    x_min: float = 0.0, length: float = 2 * math.pi) -> FlatValidation:
    """Relative L2 error of the four FE operators against the flat multipliers at each resolution."""
    errors = {k: [] for k in ("G_dn", "G_nn", "G_dd", "G_nd")}
    for nx, nz in resolutions:
        g = Grid1D(x_min, x_min + length, nx)
        g2 = StripGrid2D(g, nz)
        zero = g.zeros()
        psi, B = g.sample(psi_fn), g.sample(B_fn)
        fe = FEStrip(build_diffeo(zero, zero, ShapeParams(0.0, 0.0, mu), g2))
        ops = apply_operators(fe, psi, B)
        ref = flat_oracles(psi, B, mu)
        for key in errors:
            errors[key].append(float(np.linalg.norm(ops[key].values - ref[key]) / np.linalg.norm(ref[key])))
    orders = {}
    for key, v in errors.items():
        orders[key] = [math.log2(v[i] / v[i + 1]) for i in range(len(v) - 1)]
    return FlatValidation(tuple(resolutions), errors, orders)
