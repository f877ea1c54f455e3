"""Initial-data synthesis: spectrum-shaped random fields and manufactured states.

Spectrum kind: each component's Fourier coefficient at mode k is
amplitude * weight * |xi|^sigma * exp(-|xi|^2/cutoff^2) * (unit random phase),
xi = k/L, with the zero mode left at 0 (structural zero mean) and the result
dealiased.  Velocity is assembled as i*xihat*c_long + P_perp(v_trans) so the
longitudinal/transverse weights address the acoustic and shear branches
separately; the i factor keeps the longitudinal part Hermitian.

Phases come from counter-based Philox streams keyed (seed, component), so the
phase of a given mode depends only on (seed, component, mode index), never on
evaluation order.  Phase fields are antisymmetrized, chi(k) = phi(k)-phi(-k),
which preserves the prescribed modulus exactly, and the coefficient array is
re-symmetrized once at the end for bitwise Hermitian safety.

Positivity: the realized state must satisfy min(1+a) > 1/2 (and min(1+theta)
> 1/2 for FCNS) at t = 0.  Violations raise PositivityUnachievable carrying
the largest admissible amplitude, located by bisection on the amplitude
multiplier; there is no silent rescale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .errors import PositivityUnachievable
from .models import MODEL_FCNS, ModelParams, State
from .oracle import SpectrumProfile

POSITIVITY_MARGIN = 0.5
_STREAM = {"a": 0, "u_long": 1, "u_trans": 2, "theta": 3}


@dataclass(frozen=True)
class InitialDataSpec:
    """What to synthesize; the random seed is supplied by the caller per run."""

    kind: str = "spectrum"
    profile: SpectrumProfile = field(default_factory=lambda: SpectrumProfile(sigma=0.0))
    enforce_zero_mean: bool = True

    def __post_init__(self):
        if self.kind not in ("spectrum", "manufactured"):
            raise ValueError(f"unknown initial-data kind {self.kind!r}")
        if not self.enforce_zero_mean:
            raise ValueError("zero-mean enforcement is structural and cannot be disabled")

    def describe(self) -> dict:
        p = self.profile
        return {
            "kind": self.kind,
            "sigma": p.sigma,
            "cutoff": p.cutoff,
            "amplitude": p.amplitude,
            "weight_a": p.weight_a,
            "weight_u_long": p.weight_u_long,
            "weight_u_trans": p.weight_u_trans,
            "weight_theta": p.weight_theta,
            "enforce_zero_mean": self.enforce_zero_mean,
        }


def _phase_field(grid: sp.SpectralGrid, seed: int, component: str, count: int = 1) -> np.ndarray:
    """Antisymmetric phase angles chi with chi(-k) = -chi(k), shape (count, n, n, n)."""
    key = np.array([np.uint64(seed), np.uint64(_STREAM[component])], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    phi = gen.uniform(0.0, 2.0 * np.pi, size=(count, grid.n, grid.n, grid.n))
    phi_neg = np.flip(np.roll(phi, -1, axis=(1, 2, 3)), axis=(1, 2, 3))
    return phi - phi_neg


def _scalar_coefficients(grid: sp.SpectralGrid, envelope: np.ndarray, seed: int,
                         component: str) -> np.ndarray:
    chi = _phase_field(grid, seed, component)[0]
    c = envelope * np.exp(1j * chi)
    c_neg = np.flip(np.roll(c, -1, axis=(0, 1, 2)), axis=(0, 1, 2))
    return 0.5 * (c + np.conj(c_neg))


def _envelope(grid: sp.SpectralGrid, profile: SpectrumProfile, weight: float) -> np.ndarray:
    xi_mag = np.sqrt(grid.xi2)
    env = np.zeros_like(xi_mag)
    nz = xi_mag > 0
    env[nz] = profile.amplitude * weight * xi_mag[nz] ** profile.sigma \
        * np.exp(-grid.xi2[nz] / profile.cutoff ** 2)
    return env * grid.dealias_mask


def _spectrum_state(profile: SpectrumProfile, grid: sp.SpectralGrid, seed: int,
                    params: ModelParams) -> State:
    a_hat = _scalar_coefficients(grid, _envelope(grid, profile, profile.weight_a), seed, "a")

    xi_mag = np.sqrt(grid.xi2)
    xihat = np.divide(grid.xi, xi_mag, out=np.zeros_like(grid.xi), where=xi_mag > 0)
    c_long = _scalar_coefficients(grid, _envelope(grid, profile, profile.weight_u_long),
                                  seed, "u_long")
    u_hat = 1j * xihat * c_long

    env_t = _envelope(grid, profile, profile.weight_u_trans)
    chi = _phase_field(grid, seed, "u_trans", count=3)
    v = env_t * np.exp(1j * chi)
    v_neg = np.flip(np.roll(v, -1, axis=(1, 2, 3)), axis=(1, 2, 3))
    v = 0.5 * (v + np.conj(v_neg))
    u_hat = u_hat + v - xihat * np.einsum("i...,i...->...", xihat, v)

    th_hat = None
    if params.model == MODEL_FCNS:
        th_hat = _scalar_coefficients(grid, _envelope(grid, profile, profile.weight_theta),
                                      seed, "theta")

    a = sp.Field(grid, a_hat, sp.SPECTRAL)
    u = sp.VecField(grid, u_hat, sp.SPECTRAL)
    theta = sp.Field(grid, th_hat, sp.SPECTRAL) if th_hat is not None else None
    return State(a=a, u=u, theta=theta, t=0.0, params=params)


def _manufactured_state(profile: SpectrumProfile, grid: sp.SpectralGrid,
                        params: ModelParams) -> State:
    """Fixed single-mode trigonometric state scaled by amplitude and weights."""
    x = (np.arange(grid.n) + 0.0) * grid.dx
    X1 = x[:, None, None] * np.ones(grid.shape)
    X3 = x[None, None, :] * np.ones(grid.shape)
    amp = profile.amplitude
    w = 2.0 * np.pi / grid.box_length
    a = amp * profile.weight_a * np.cos(w * X1)
    u = np.zeros((3,) + grid.shape)
    u[0] = amp * profile.weight_u_long * np.sin(w * X1)
    u[1] = amp * profile.weight_u_trans * np.sin(w * X1)
    theta = None
    if params.model == MODEL_FCNS:
        theta = sp.Field(grid, amp * profile.weight_theta * np.cos(w * X3), sp.PHYSICAL)
    return State(a=sp.Field(grid, a, sp.PHYSICAL), u=sp.VecField(grid, u, sp.PHYSICAL),
                 theta=theta, t=0.0, params=params)


def _positivity_multiplier(min_a: float, min_theta: float | None) -> float:
    """Largest m in [0, 1] with 1 + m*min > margin for both components, by bisection."""
    def ok(m: float) -> bool:
        if 1.0 + m * min_a <= POSITIVITY_MARGIN:
            return False
        if min_theta is not None and 1.0 + m * min_theta <= POSITIVITY_MARGIN:
            return False
        return True

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def synthesize_initial_data(spec: InitialDataSpec, grid: sp.SpectralGrid, seed: int,
                            params: ModelParams) -> State:
    """Realize spec on grid at t=0; real, zero-mean, dealiased, positivity-checked."""
    if spec.kind == "spectrum":
        state = _spectrum_state(spec.profile, grid, seed, params)
    else:
        state = _manufactured_state(spec.profile, grid, params)

    a_min = float(sp.to_physical(state.a).data.min())
    th_min = None
    if state.theta is not None:
        th_min = float(sp.to_physical(state.theta).data.min())

    bad_a = 1.0 + a_min <= POSITIVITY_MARGIN
    bad_th = th_min is not None and 1.0 + th_min <= POSITIVITY_MARGIN
    if bad_a or bad_th:
        m = _positivity_multiplier(a_min, th_min)
        component = "a" if bad_a else "theta"
        raise PositivityUnachievable(component, spec.profile.amplitude,
                                     m * spec.profile.amplitude)
    return state
