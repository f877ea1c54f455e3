"""Norms, energy functionals, and Fourier-splitting quantities on state snapshots.

Conventions (see spectral module): Lambda^s multiplies by |xi|^s with
xi = k/L, while gradient norms carry the 2*pi factor, so
||grad f|| = 2*pi*||Lambda^1 f||.  All integrals are box integrals.

Negative norms along a trajectory are computed on the zero-mode-stripped
fluctuation, unconditionally: a is synthesized mean-free and its mean is
conserved, but viscous heating gives theta a persistent positive mean on the
torus (the heat that escapes to infinity on whole space stays in the box),
the ICNS momentum (1+a)u has a nonzero mean whenever a and u correlate, and
a mean component has no homogeneous negative norm on the torus at all.  Any
mean/fluctuation ratio guard would eventually abort a correct run once the
fluctuation has decayed past the heated mean, so the means are recorded as
their own diagnostics (mass, mean_theta) instead of being policed here; the
strict round-off-level zero-mean precondition applies to direct
sobolev_norm / lambda_pow calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models, spectral as sp
from .errors import NegativePowerOnNonzeroMean
from .models import MODEL_FCNS, MODEL_ICNS, State, Tendency
from .spectral import Field, VecField

DEFAULT_S_GRID = (0.25, 0.5, 1.0, 1.4)


def default_delta0(p_prime1: float) -> float:
    return 0.1 * min(1.0, p_prime1)


def sobolev_norm(f, s: float) -> float:
    """||Lambda^s f||_{L2}; s < 0 requires a zero-mean field (strict)."""
    c = sp.spectral_data(f)
    grid = f.grid
    if s == 0:
        return sp.l2_norm(f)
    if s < 0:
        norm = sp.l2_norm(f)
        mean = sp.zero_mode_magnitude(f)
        if mean > 1e-12 * norm:
            raise NegativePowerOnNonzeroMean(
                f"sobolev_norm with s={s} requires zero mean; |mean|={mean:.3e}"
            )
    mult = np.zeros_like(grid.xi2)
    nz = grid.xi2 > 0
    mult[nz] = grid.xi2[nz] ** s
    energy = np.sum(mult * np.abs(c) ** 2)
    return float(np.sqrt(grid.volume * energy))


def hk_norm(f, k: int) -> float:
    """||grad^k f||_{L2} via the (2 pi |xi|)^(2k) multiplier; k in {0,1,2,3}."""
    if k not in (0, 1, 2, 3):
        raise ValueError(f"hk_norm supports k in 0..3, got {k}")
    c = sp.spectral_data(f)
    grid = f.grid
    energy = np.sum(grid.q2 ** k * np.abs(c) ** 2)
    return float(np.sqrt(grid.volume * energy))


def h_s_full(f, k: int) -> float:
    """Full Sobolev norm ||f||_{H^k} = sqrt(sum_{j<=k} ||grad^j f||^2)."""
    if k not in (0, 1, 2, 3):
        raise ValueError(f"h_s_full supports k in 0..3, got {k}")
    return float(np.sqrt(sum(hk_norm(f, j) ** 2 for j in range(k + 1))))


def grad_h1_sq(f) -> float:
    """||grad f||_{H^1}^2 = ||grad f||^2 + ||grad^2 f||^2."""
    return hk_norm(f, 1) ** 2 + hk_norm(f, 2) ** 2


def cross_term(state: State) -> float:
    """integral grad u . grad^2 a dx (Frobenius pairing), via Parseval."""
    grid = state.grid
    u_hat = sp.spectral_data(state.u)
    a_hat = sp.spectral_data(state.a)
    w = sp.TWO_PI * grid.xi
    # G[i,j] = d_i u_j, H[i,j] = d_i d_j a
    G = 1j * w[:, None] * u_hat[None, :]
    H = -w[:, None] * w[None, :] * a_hat[None, None]
    val = np.sum(np.real(np.conj(G) * H))
    return float(grid.volume * val)


@dataclass(frozen=True)
class EnergyResult:
    """Energy functional value with its Cauchy-Schwarz equivalence envelope."""

    value: float
    lower: float
    upper: float

    @property
    def inside_envelope(self) -> bool:
        slack = 1e-12 * max(1.0, abs(self.upper))
        return self.lower - slack <= self.value <= self.upper + slack


def energy_E1(state: State, delta0: float, p_prime1: float) -> EnergyResult:
    """E1^2 = ||grad u||_{H1}^2 + P'(1)||grad a||_{H1}^2 + 2 delta0 integral grad u . grad^2 a."""
    if state.params.model != MODEL_ICNS:
        raise ValueError("energy_E1 is the ICNS functional")
    m = min(1.0, p_prime1)
    if not 0 < delta0 < m / 2:
        raise ValueError(f"delta0 must lie in (0, {m / 2:g}), got {delta0}")
    base = grad_h1_sq(state.u) + p_prime1 * grad_h1_sq(state.a)
    value = base + 2 * delta0 * cross_term(state)
    return EnergyResult(value=value, lower=(1 - delta0 / m) * base, upper=(1 + delta0 / m) * base)


def energy_E2(state: State, delta: float) -> EnergyResult:
    """E2^2 = ||grad a||_{H1}^2 + ||grad u||_{H1}^2 + ||grad theta||_{H1}^2 + delta * cross."""
    if state.params.model != MODEL_FCNS:
        raise ValueError("energy_E2 is the FCNS functional")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    base = grad_h1_sq(state.a) + grad_h1_sq(state.u) + grad_h1_sq(state.theta)
    value = base + delta * cross_term(state)
    return EnergyResult(value=value, lower=(1 - delta / 2) * base, upper=(1 + delta / 2) * base)


def functional_X1(state: State, udot: VecField) -> float:
    """Canonical representative ||u||_{H1}^2 + ||a||_{H1}^2 + ||u_dot||_{L2}^2.

    X1 is only pinned down up to norm equivalence; output always reports this
    fixed representative so runs are comparable.
    """
    return h_s_full(state.u, 1) ** 2 + h_s_full(state.a, 1) ** 2 + sp.l2_norm(udot) ** 2


def functional_X2(state: State, udot: VecField) -> float:
    """X1 representative plus ||theta||_{H1}^2 (FCNS)."""
    return functional_X1(state, udot) + h_s_full(state.theta, 1) ** 2


def _fluctuation_neg_norm(f, s: float) -> float:
    """||Lambda^{-s} f'||, f' the zero-mode-stripped fluctuation of f."""
    c = sp.spectral_data(f)
    grid = f.grid
    nz = grid.xi2 > 0
    mult = np.zeros_like(grid.xi2)
    mult[nz] = grid.xi2[nz] ** (-s)
    energy = np.sum(mult * np.abs(c) ** 2)
    return float(np.sqrt(grid.volume * energy))


@dataclass(frozen=True)
class NegEnergyRecord:
    """Negative-Sobolev energies at one s; `total` is the model combination."""

    s: float
    total: float
    a: float
    u: float
    theta: float | None
    udot: float | None
    momentum: float | None  # ICNS only: ||Lambda^{-s}((1+a) u)||


def neg_energy(state: State, s: float, udot: VecField | None = None) -> NegEnergyRecord:
    """Model negative-Sobolev energy at order -s (ICNS: gamma-weighted with momentum)."""
    if not 0 < s < 1.5:
        raise ValueError(f"s must lie in (0, 3/2), got {s}")
    neg_a = _fluctuation_neg_norm(state.a, s)
    neg_u = _fluctuation_neg_norm(state.u, s)
    neg_udot = _fluctuation_neg_norm(udot, s) if udot is not None else None
    if state.params.model == MODEL_ICNS:
        up = sp.to_physical(state.u)
        ap = sp.to_physical(state.a)
        mom = VecField(state.grid, (1.0 + ap.data) * up.data, sp.PHYSICAL)
        neg_mom = _fluctuation_neg_norm(mom, s)
        total = state.params.gamma * neg_a ** 2 + neg_mom ** 2
        return NegEnergyRecord(s=s, total=total, a=neg_a, u=neg_u, theta=None,
                               udot=neg_udot, momentum=neg_mom)
    neg_th = _fluctuation_neg_norm(state.theta, s)
    total = neg_a ** 2 + neg_u ** 2 + neg_th ** 2
    return NegEnergyRecord(s=s, total=total, a=neg_a, u=neg_u, theta=neg_th,
                           udot=neg_udot, momentum=None)


def fourier_split(f, R: float, t: float) -> tuple[float, float]:
    """Partition ||f||^2 at the time-dependent radius |2 pi xi|^2 <= R/(1+t)."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    c = sp.spectral_data(f)
    grid = f.grid
    low_mask = grid.q2 <= R / (1.0 + t)
    e = np.abs(c) ** 2
    low = float(grid.volume * np.sum(e * low_mask))
    high = float(grid.volume * np.sum(e * ~low_mask))
    return low, high


def splitting_residual(u: VecField, R: float, t: float) -> float:
    """||grad^3 u||^2 - r ||grad^2 u||^2 + r^2 ||grad u||^2 with r = R/(1+t).

    Nonnegative mode-by-mode: q^6 - r q^4 + r^2 q^2 = q^2((q^2 - r/2)^2 + 3r^2/4).
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    r = R / (1.0 + t)
    return hk_norm(u, 3) ** 2 - r * hk_norm(u, 2) ** 2 + r ** 2 * hk_norm(u, 1) ** 2


@dataclass(frozen=True)
class DiagRecord:
    """One time sample of every tracked quantity; the CSV row unit."""

    t: float
    values: dict[str, float]


def _s_label(s: float) -> str:
    return f"{s:g}"


def record_columns(model: str, s_values=DEFAULT_S_GRID) -> list[str]:
    """Fixed CSV column order for a model and s-grid; no run-dependent sets."""
    fcns = model == MODEL_FCNS
    cols = ["t", "mass", "min_density"]
    if fcns:
        cols += ["min_temperature", "mean_theta"]
    cols.append("rel_entropy")
    for stem in ("l2", "grad", "grad2", "h1"):
        cols += [f"{stem}_a", f"{stem}_u"] + ([f"{stem}_theta"] if fcns else [])
    cols.append("l2_udot")
    for s in s_values:
        lbl = _s_label(s)
        cols += [f"neg_a_s{lbl}", f"neg_u_s{lbl}"]
        if fcns:
            cols.append(f"neg_theta_s{lbl}")
        cols += [f"neg_udot_s{lbl}", f"neg_energy_s{lbl}"]
    cols += (["e2_sq", "x2"] if fcns else ["e1_sq", "x1"])
    cols += ["split_low", "split_high", "split_residual"]
    return cols


def snapshot(state: State, tendency: Tendency, s_values=DEFAULT_S_GRID,
             delta0: float | None = None, delta: float = 0.1,
             split_R: float = 1.0) -> DiagRecord:
    """Populate one DiagRecord; `tendency` must be the full right-hand side."""
    p = state.params
    fcns = p.model == MODEL_FCNS
    udot = models.material_derivative(state, tendency.du)
    ap = sp.to_physical(state.a).data
    vals: dict[str, float] = {}
    vals["t"] = state.t
    vals["mass"] = float(state.grid.volume * sp.mean_value(state.a))
    vals["min_density"] = float(1.0 + ap.min())
    if fcns:
        thp = sp.to_physical(state.theta).data
        vals["min_temperature"] = float(1.0 + thp.min())
        vals["mean_theta"] = float(thp.mean())
    vals["rel_entropy"] = models.relative_entropy(state.a, p.gamma if p.model == MODEL_ICNS else 1.0)
    fields = {"a": state.a, "u": state.u}
    if fcns:
        fields["theta"] = state.theta
    for stem, order in (("l2", 0), ("grad", 1), ("grad2", 2)):
        for name, f in fields.items():
            vals[f"{stem}_{name}"] = hk_norm(f, order)
    for name, f in fields.items():
        vals[f"h1_{name}"] = h_s_full(f, 1)
    vals["l2_udot"] = sp.l2_norm(udot)
    for s in s_values:
        rec = neg_energy(state, s, udot=udot)
        lbl = _s_label(s)
        vals[f"neg_a_s{lbl}"] = rec.a
        vals[f"neg_u_s{lbl}"] = rec.u
        if fcns:
            vals[f"neg_theta_s{lbl}"] = rec.theta
        vals[f"neg_udot_s{lbl}"] = rec.udot
        vals[f"neg_energy_s{lbl}"] = rec.total
    if fcns:
        vals["e2_sq"] = energy_E2(state, delta).value
        vals["x2"] = functional_X2(state, udot)
    else:
        d0 = default_delta0(p.p_prime1) if delta0 is None else delta0
        vals["e1_sq"] = energy_E1(state, d0, p.p_prime1).value
        vals["x1"] = functional_X1(state, udot)
    low = high = 0.0
    for f in fields.values():
        lo, hi = fourier_split(f, split_R, state.t)
        low += lo
        high += hi
    vals["split_low"] = low
    vals["split_high"] = high
    vals["split_residual"] = splitting_residual(state.u, split_R, state.t)
    cols = record_columns(p.model, s_values)
    assert list(vals.keys()) == cols, "snapshot populated keys out of schema order"
    return DiagRecord(t=state.t, values=vals)
