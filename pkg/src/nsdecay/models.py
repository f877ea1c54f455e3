"""ICNS and FCNS perturbation systems around the equilibrium (rho, u, T) = (1, 0, 1).

Unknowns are a = rho - 1, u, and (FCNS only) theta = T - 1.  Each system is
split into a constant-coefficient linear part, diagonalized per Fourier mode
by the integrator, and a nonlinear tendency of at least quadratic order:

FCNS:
    d_t a     + div u                                  = S1
    d_t u     - mu*Lap u - (mu+lambda)*grad div u
              + grad a + grad theta                    = S2
    d_t theta - Lap theta + div u                      = S3

    S1 = -a div u - u.grad a
    S2 = -u.grad u - h(a)[mu*Lap u + (mu+lambda)*grad div u]
         + h(a)(grad a + grad theta) - g(a) grad(a*theta)
    S3 = -div(theta*u) + g(a)(2*mu*|Du|^2 + lambda*(div u)^2) - h(a)*Lap theta

    with h(a) = a/(1+a), g(a) = 1/(1+a) = 1 - h(a), and Du the symmetric
    gradient (|Du|^2 summed over all nine components).

ICNS (velocity form; pressure P = rho^gamma, P'(1) = gamma):
    d_t a + div u = -div(a*u)
    d_t u + gamma*grad a - mu*Lap u - (mu+lambda)*grad div u = N
    N = -u.grad u - h(a)[mu*Lap u + (mu+lambda)*grad div u]
        - [gamma*(1+a)^(gamma-1) - gamma]*grad a

Nonpolynomial factors (h, g, the pressure bracket) are evaluated pointwise in
physical space and the assembled tendencies are dealiased once; there is no
Taylor truncation of h or g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .errors import DensityNonpositive, TemperatureNonpositive
from .spectral import Field, SpectralGrid, VecField

MODEL_ICNS = "ICNS"
MODEL_FCNS = "FCNS"


@dataclass(frozen=True)
class ModelParams:
    """Viscosities and (ICNS) adiabatic exponent; model selects the system."""

    mu: float
    lambda_v: float
    gamma: float = 1.4
    model: str = MODEL_FCNS

    def __post_init__(self):
        if self.model not in (MODEL_ICNS, MODEL_FCNS):
            raise ValueError(f"model must be ICNS or FCNS, got {self.model!r}")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if 2 * self.mu + 3 * self.lambda_v < 0:
            raise ValueError(f"viscosity condition 2*mu+3*lambda >= 0 violated: {2 * self.mu + 3 * self.lambda_v}")
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")

    @property
    def p_prime1(self) -> float:
        """P'(1): the acoustic coupling coefficient (gamma for ICNS, 1 for FCNS)."""
        return self.gamma if self.model == MODEL_ICNS else 1.0

    @property
    def meets_decay_regime(self) -> bool:
        """mu > lambda/2 hypothesis of the decay theorems (report flag only)."""
        return self.mu > self.lambda_v / 2


@dataclass(frozen=True)
class State:
    """Perturbation tuple (a, u, theta) at time t; theta is None for ICNS."""

    a: Field
    u: VecField
    theta: Field | None
    t: float
    params: ModelParams

    def __post_init__(self):
        if self.params.model == MODEL_FCNS and self.theta is None:
            raise ValueError("FCNS state requires a theta field")
        if self.params.model == MODEL_ICNS and self.theta is not None:
            raise ValueError("ICNS state must not carry theta")

    @property
    def grid(self) -> SpectralGrid:
        return self.a.grid


@dataclass(frozen=True)
class Tendency:
    """Right-hand-side increment (da, du, dtheta) on the state's grid."""

    da: Field
    du: VecField
    dtheta: Field | None


def check_positivity(state: State) -> tuple[float, float | None]:
    """Return (min 1+a, min 1+theta); raise if either is nonpositive."""
    a = sp.to_physical(state.a).data
    min_rho = float(1.0 + a.min())
    if min_rho <= 0:
        raise DensityNonpositive(min_rho, state.t)
    min_temp = None
    if state.theta is not None:
        th = sp.to_physical(state.theta).data
        min_temp = float(1.0 + th.min())
        if min_temp <= 0:
            raise TemperatureNonpositive(min_temp, state.t)
    return min_rho, min_temp


def h_of_a(a: Field) -> Field:
    """h(a) = a/(1+a), pointwise in physical space."""
    ap = sp.to_physical(a).data
    rho_min = float(1.0 + ap.min())
    if rho_min <= 0:
        raise DensityNonpositive(rho_min)
    return Field(a.grid, ap / (1.0 + ap), sp.PHYSICAL)


def g_of_a(a: Field) -> Field:
    """g(a) = 1/(1+a) = 1 - h(a), pointwise in physical space."""
    ap = sp.to_physical(a).data
    rho_min = float(1.0 + ap.min())
    if rho_min <= 0:
        raise DensityNonpositive(rho_min)
    return Field(a.grid, 1.0 / (1.0 + ap), sp.PHYSICAL)


def _physical_parts(state: State):
    """Physical arrays and the spectral derivative stack shared by both systems."""
    grid = state.grid
    a_hat = sp.to_spectral(state.a)
    u_hat = sp.to_spectral(state.u)
    ap = sp.inverse(a_hat).data
    up = sp.inverse(u_hat).data
    div_u = sp.to_physical(sp.divergence(u_hat)).data
    grad_a = sp.to_physical(sp.gradient(a_hat)).data
    J = sp.jacobian(sp.VecField(grid, up, sp.PHYSICAL)).data  # J[i,j] = d_i u_j
    lap_u = sp.to_physical(sp.laplacian(u_hat)).data
    # grad div u assembled from the spectral divergence
    div_u_hat = sp.divergence(u_hat)
    grad_div_u = sp.to_physical(sp.gradient(div_u_hat)).data
    return grid, ap, up, div_u, grad_a, J, lap_u, grad_div_u


def _dealias_tendency(grid: SpectralGrid, da: np.ndarray, du: np.ndarray, dth: np.ndarray | None) -> Tendency:
    """Assemble physical tendency arrays into dealiased spectral fields."""
    da_f = sp.dealias(sp.forward(Field(grid, da, sp.PHYSICAL)))
    du_f = sp.dealias(sp.forward(VecField(grid, du, sp.PHYSICAL)))
    dth_f = None
    if dth is not None:
        dth_f = sp.dealias(sp.forward(Field(grid, dth, sp.PHYSICAL)))
    return Tendency(da_f, du_f, dth_f)


def nonlinear_fcns(state: State) -> Tendency:
    """Nonlinear terms S1, S2, S3 of the full system, dealiased, spectral."""
    if state.params.model != MODEL_FCNS:
        raise ValueError("nonlinear_fcns requires an FCNS state")
    mu, lam = state.params.mu, state.params.lambda_v
    grid, ap, up, div_u, grad_a, J, lap_u, grad_div_u = _physical_parts(state)
    rho_min = float(1.0 + ap.min())
    if rho_min <= 0:
        raise DensityNonpositive(rho_min, state.t)
    th_hat = sp.to_spectral(state.theta)
    thp = sp.inverse(th_hat).data
    grad_th = sp.to_physical(sp.gradient(th_hat)).data
    lap_th = sp.to_physical(sp.laplacian(th_hat)).data

    h = ap / (1.0 + ap)
    g = 1.0 / (1.0 + ap)

    s1 = -ap * div_u - np.einsum("i...,i...->...", up, grad_a)

    adv = np.einsum("i...,ij...->j...", up, J)  # (u.grad u)_j
    visc = mu * lap_u + (mu + lam) * grad_div_u
    grad_ath = sp.to_physical(sp.gradient(sp.forward(Field(grid, ap * thp, sp.PHYSICAL)))).data
    s2 = -adv - h * visc + h * (grad_a + grad_th) - g * grad_ath

    div_thu = sp.to_physical(sp.divergence(sp.forward(VecField(grid, thp * up, sp.PHYSICAL)))).data
    Du = 0.5 * (J + np.swapaxes(J, 0, 1))
    du_sq = np.sum(Du ** 2, axis=(0, 1))
    s3 = -div_thu + g * (2 * mu * du_sq + lam * div_u ** 2) - h * lap_th

    return _dealias_tendency(grid, s1, s2, s3)


def nonlinear_icns(state: State) -> Tendency:
    """Nonlinear terms of the isentropic system in velocity form, dealiased."""
    if state.params.model != MODEL_ICNS:
        raise ValueError("nonlinear_icns requires an ICNS state")
    mu, lam, gamma = state.params.mu, state.params.lambda_v, state.params.gamma
    grid, ap, up, div_u, grad_a, J, lap_u, grad_div_u = _physical_parts(state)
    rho_min = float(1.0 + ap.min())
    if rho_min <= 0:
        raise DensityNonpositive(rho_min, state.t)

    h = ap / (1.0 + ap)

    # continuity in divergence form: spectral divergence of the pointwise product a*u
    div_au = sp.divergence(sp.forward(VecField(grid, ap * up, sp.PHYSICAL)))
    da = sp.dealias(Field(grid, -div_au.data, sp.SPECTRAL))

    adv = np.einsum("i...,ij...->j...", up, J)
    visc = mu * lap_u + (mu + lam) * grad_div_u
    pressure = gamma * (1.0 + ap) ** (gamma - 1.0) - gamma  # vanishes identically at gamma=1
    du = -adv - h * visc - pressure * grad_a
    du_f = sp.dealias(sp.forward(VecField(grid, du, sp.PHYSICAL)))
    return Tendency(da, du_f, None)


def nonlinear_rhs(state: State) -> Tendency:
    return nonlinear_fcns(state) if state.params.model == MODEL_FCNS else nonlinear_icns(state)


def linear_rhs(state: State) -> Tendency:
    """Constant-coefficient part of the evolution, evaluated spectrally."""
    p = state.params
    a_hat = sp.to_spectral(state.a)
    u_hat = sp.to_spectral(state.u)
    div_u = sp.divergence(u_hat)
    grad_a = sp.gradient(a_hat)
    lap_u = sp.laplacian(u_hat)
    grad_div_u = sp.gradient(div_u)
    da = Field(state.grid, -div_u.data, sp.SPECTRAL)
    du_data = p.mu * lap_u.data + (p.mu + p.lambda_v) * grad_div_u.data - p.p_prime1 * grad_a.data
    dth = None
    if p.model == MODEL_FCNS:
        th_hat = sp.to_spectral(state.theta)
        du_data = du_data - sp.gradient(th_hat).data
        dth = Field(state.grid, sp.laplacian(th_hat).data - div_u.data, sp.SPECTRAL)
    return Tendency(da, VecField(state.grid, du_data, sp.SPECTRAL), dth)


def full_rhs(state: State) -> Tendency:
    """linear_rhs + nonlinear_rhs; the complete time derivative of the state."""
    lin = linear_rhs(state)
    non = nonlinear_rhs(state)
    da = Field(state.grid, lin.da.data + non.da.data, sp.SPECTRAL)
    du = VecField(state.grid, lin.du.data + non.du.data, sp.SPECTRAL)
    dth = None
    if lin.dtheta is not None:
        dth = Field(state.grid, lin.dtheta.data + non.dtheta.data, sp.SPECTRAL)
    return Tendency(da, du, dth)


def linear_symbol(xi, params: ModelParams, model: str | None = None) -> np.ndarray:
    """M(xi) with d/dt (a^, u^, th^) = M(xi) (a^, u^, th^) for the linear system.

    Row order: (a, u1, u2, u3) for ICNS, (a, u1, u2, u3, theta) for FCNS.
    Entries follow the 2-pi convention: derivative wavevector w = 2*pi*xi.
    """
    model = model or params.model
    xi = np.asarray(xi, dtype=float)
    w = sp.TWO_PI * xi
    q2 = float(w @ w)
    m = 5 if model == MODEL_FCNS else 4
    M = np.zeros((m, m), dtype=complex)
    pp1 = params.gamma if model == MODEL_ICNS else 1.0
    # continuity: d_t a = -i w . u
    M[0, 1:4] = -1j * w
    # momentum: d_t u = -mu q^2 u - (mu+lambda) w w^T u - i w * (pp1 * a + theta)
    for j in range(3):
        M[1 + j, 1 + j] = -params.mu * q2
        for l in range(3):
            M[1 + j, 1 + l] += -(params.mu + params.lambda_v) * w[j] * w[l]
        M[1 + j, 0] = -1j * w[j] * pp1
        if model == MODEL_FCNS:
            M[1 + j, 4] = -1j * w[j]
    if model == MODEL_FCNS:
        M[4, 1:4] = -1j * w
        M[4, 4] = -q2
    return M


def longitudinal_block(q: float, params: ModelParams, model: str | None = None) -> np.ndarray:
    """Acoustic-diffusive block on (a^, xihat.u^, th^) at |2 pi xi| = q.

    The transverse complement evolves by the scalar factor exp(-mu q^2 t).
    """
    model = model or params.model
    pp1 = params.gamma if model == MODEL_ICNS else 1.0
    nu = 2 * params.mu + params.lambda_v
    if model == MODEL_FCNS:
        return np.array(
            [
                [0.0, -1j * q, 0.0],
                [-1j * q * pp1, -nu * q ** 2, -1j * q],
                [0.0, -1j * q, -q ** 2],
            ],
            dtype=complex,
        )
    return np.array(
        [
            [0.0, -1j * q],
            [-1j * q * pp1, -nu * q ** 2],
        ],
        dtype=complex,
    )


def material_derivative(state: State, dudt: VecField) -> VecField:
    """u_dot = d_t u + u.grad u, with dudt the full time derivative of u."""
    up = sp.to_physical(state.u)
    J = sp.jacobian(up).data
    adv = np.einsum("i...,ij...->j...", up.data, J)
    dudt_p = sp.to_physical(dudt)
    return VecField(state.grid, dudt_p.data + adv, sp.PHYSICAL)


def relative_entropy(a: Field, gamma: float) -> float:
    """integral H(rho | 1) dx with rho = 1 + a; nonnegative by convexity.

    H = rho*ln(rho) - rho + 1 for gamma = 1 (|gamma-1| < 1e-12 selects the
    branch), else (rho^gamma - 1 - gamma*(rho-1)) / (gamma-1).
    """
    ap = sp.to_physical(a).data
    rho = 1.0 + ap
    rho_min = float(rho.min())
    if rho_min <= 0:
        raise DensityNonpositive(rho_min)
    if abs(gamma - 1.0) < 1e-12:
        H = rho * np.log(rho) - rho + 1.0
    else:
        H = (rho ** gamma - 1.0 - gamma * (rho - 1.0)) / (gamma - 1.0)
    return float(a.grid.cell_volume * H.sum())
