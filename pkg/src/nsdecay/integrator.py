"""Exponential time differencing (two-stage) for the perturbation systems.

The linear symbol is block-diagonalized per Fourier mode: velocity components
transverse to xi obey a scalar heat factor exp(-mu q^2 dt), while the
longitudinal triple (a^, xihat.u^, theta^) (pair for ICNS) carries the
acoustic-diffusive coupling and is exponentiated as a dense small matrix.
Matrices depend on the mode only through q = |2 pi xi|, so exponentials are
computed once per distinct integer |k|^2 and gathered onto the grid.

Scheme (ETD2RK):
    a_n     = E w_n + dt * phi1(M dt) N(w_n)
    w_{n+1} = a_n + dt * phi2(M dt) (N(a_n) - N(w_n))

which is exact on the pure linear system and second order in dt overall.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy
import scipy.linalg

from . import diagnostics, models, runio, spectral as sp
from .errors import CflViolation, DensityNonpositive, RunAborted, TemperatureNonpositive
from .initial_data import InitialDataSpec, synthesize_initial_data
from .models import MODEL_FCNS, ModelParams, State, Tendency
from .spectral import Field, SpectralGrid, VecField

# eigenvalue coalescence threshold below which the scaling-and-squaring
# fallback replaces the eigendecomposition route
EIG_GAP_RTOL = 1e-8


def _phi1_scalar(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z, series below |z| = 1e-2 to avoid cancellation."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    out[small] = 1 + zs / 2 + zs ** 2 / 6 + zs ** 3 / 24 + zs ** 4 / 120 + zs ** 5 / 720 + zs ** 6 / 5040
    zb = z[~small]
    out[~small] = (np.exp(zb) - 1.0) / zb
    return out


def _phi2_scalar(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z)/z^2, series below |z| = 1e-2."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    out[small] = 0.5 + zs / 6 + zs ** 2 / 24 + zs ** 3 / 120 + zs ** 4 / 720 + zs ** 5 / 5040 + zs ** 6 / 40320
    zb = z[~small]
    out[~small] = (np.exp(zb) - 1.0 - zb) / zb ** 2
    return out


def _phi_via_augmented_expm(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """exp(Z), phi1(Z), phi2(Z) from one scaling-and-squaring exponential.

    For B = [[Z, I, 0], [0, 0, I], [0, 0, 0]] the top block row of exp(B)
    is exactly [e^Z, phi1(Z), phi2(Z)] (power-series identity).
    """
    m = Z.shape[0]
    B = np.zeros((3 * m, 3 * m), dtype=complex)
    B[:m, :m] = Z
    B[:m, m:2 * m] = np.eye(m)
    B[m:2 * m, 2 * m:] = np.eye(m)
    EB = scipy.linalg.expm(B)
    return EB[:m, :m], EB[:m, m:2 * m], EB[:m, 2 * m:]


def _block_functions(blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched exp/phi1/phi2 of (G, m, m) blocks via eigendecomposition.

    Blocks whose eigenvalues come within EIG_GAP_RTOL of coalescing fall back
    to the augmented scaling-and-squaring route.
    """
    G, m, _ = blocks.shape
    lam, V = np.linalg.eig(blocks)
    gap = np.full(G, np.inf)
    for i in range(m):
        for j in range(i + 1, m):
            gap = np.minimum(gap, np.abs(lam[:, i] - lam[:, j]))
    scale = np.maximum(1.0, np.abs(lam).max(axis=1))
    degenerate = gap < EIG_GAP_RTOL * scale

    E = np.empty_like(blocks)
    P1 = np.empty_like(blocks)
    P2 = np.empty_like(blocks)
    ok = ~degenerate
    if np.any(ok):
        Vo = V[ok]
        Vinv = np.linalg.inv(Vo)
        for out, f in ((E, np.exp), (P1, _phi1_scalar), (P2, _phi2_scalar)):
            out[ok] = (Vo * f(lam[ok])[:, None, :]) @ Vinv
    for idx in np.nonzero(degenerate)[0]:
        E[idx], P1[idx], P2[idx] = _phi_via_augmented_expm(blocks[idx])
    return E, P1, P2


@dataclass
class PropagatorCache:
    """Per-mode exponential and phi-weight tables for one (grid, params, dt)."""

    grid: SpectralGrid
    params: ModelParams
    dt: float
    xihat: np.ndarray            # (3,n,n,n) unit wavevectors, zero at k=0
    trans_E: np.ndarray          # (n,n,n) real transverse factors
    trans_P1: np.ndarray
    trans_P2: np.ndarray
    long_E: np.ndarray           # (m,m,n,n,n) complex longitudinal tables
    long_P1: np.ndarray
    long_P2: np.ndarray
    q_unique: np.ndarray         # distinct q values (diagnostic/testing)
    block_E: np.ndarray          # (G,m,m) per distinct q (testing)

    @property
    def block_size(self) -> int:
        return self.long_E.shape[0]

    def matches(self, state: State) -> bool:
        return state.grid is self.grid and state.params == self.params


def build_propagator(grid: SpectralGrid, params: ModelParams, dt: float) -> PropagatorCache:
    """Exponentiate the linear symbol once per distinct |k|^2, gather to grid."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    m = 3 if params.model == MODEL_FCNS else 2
    k2_flat = grid.k2_int.ravel()
    k2_unique, inverse = np.unique(k2_flat, return_inverse=True)
    q_unique = sp.TWO_PI * np.sqrt(k2_unique.astype(float)) / grid.box_length

    blocks = np.zeros((len(q_unique), m, m), dtype=complex)
    for i, q in enumerate(q_unique):
        blocks[i] = models.longitudinal_block(float(q), params)
    E_b, P1_b, P2_b = _block_functions(blocks * dt)
    # q = 0: the symbol vanishes identically, so the propagator is exactly the
    # identity and the phi weights are their z=0 limits (mass conservation)
    zero = np.nonzero(k2_unique == 0)[0]
    if len(zero):
        i = zero[0]
        E_b[i] = np.eye(m)
        P1_b[i] = np.eye(m)
        P2_b[i] = 0.5 * np.eye(m)

    shape = grid.shape
    long_E = E_b[inverse].reshape(shape + (m, m)).transpose(3, 4, 0, 1, 2).copy()
    long_P1 = P1_b[inverse].reshape(shape + (m, m)).transpose(3, 4, 0, 1, 2).copy()
    long_P2 = P2_b[inverse].reshape(shape + (m, m)).transpose(3, 4, 0, 1, 2).copy()

    z_t = -params.mu * grid.q2 * dt
    trans_E = np.exp(z_t)
    trans_P1 = _phi1_scalar(z_t).real
    trans_P2 = _phi2_scalar(z_t).real

    with np.errstate(invalid="ignore", divide="ignore"):
        xihat = np.where(grid.xi2 > 0, grid.xi / np.sqrt(grid.xi2), 0.0)

    return PropagatorCache(
        grid=grid, params=params, dt=dt, xihat=xihat,
        trans_E=trans_E, trans_P1=trans_P1, trans_P2=trans_P2,
        long_E=long_E, long_P1=long_P1, long_P2=long_P2,
        q_unique=q_unique, block_E=E_b,
    )


def _apply_tables(cache: PropagatorCache, long_T: np.ndarray, trans_T: np.ndarray,
                  A: np.ndarray, U: np.ndarray, TH: np.ndarray | None):
    """Apply one per-mode block table to spectral arrays (A, U, TH)."""
    xh = cache.xihat
    v = np.einsum("i...,i...->...", xh, U)
    Ut = U - xh * v
    rows = [A, v] + ([TH] if TH is not None else [])
    out_rows = [
        sum(long_T[i, j] * rows[j] for j in range(len(rows)))
        for i in range(len(rows))
    ]
    U_new = xh * out_rows[1] + trans_T * Ut
    TH_new = out_rows[2] if TH is not None else None
    return out_rows[0], U_new, TH_new


def _spectral_arrays(state: State):
    A = sp.spectral_data(state.a)
    U = sp.spectral_data(state.u)
    TH = sp.spectral_data(state.theta) if state.theta is not None else None
    return A, U, TH


def _make_state(grid, params, A, U, TH, t) -> State:
    mask = grid.dealias_mask
    a = Field(grid, A * mask, sp.SPECTRAL)
    u = VecField(grid, U * mask, sp.SPECTRAL)
    th = Field(grid, TH * mask, sp.SPECTRAL) if TH is not None else None
    return State(a=a, u=u, theta=th, t=t, params=params)


def check_cfl(state: State, dt: float) -> float:
    """Advective bound dt <= 0.5 dx / max|u|; returns the bound."""
    up = sp.to_physical(state.u).data
    vmax = float(np.sqrt((up ** 2).sum(axis=0)).max())
    if vmax == 0:
        return np.inf
    bound = 0.5 * state.grid.dx / vmax
    if dt > bound:
        raise CflViolation(dt, bound, state.t)
    return bound


def linear_step(state: State, cache: PropagatorCache) -> State:
    """Pure propagator application (nonlinear terms zeroed)."""
    if not cache.matches(state):
        raise ValueError("propagator cache does not match the state's grid/params")
    A, U, TH = _spectral_arrays(state)
    A1, U1, TH1 = _apply_tables(cache, cache.long_E, cache.trans_E, A, U, TH)
    return _make_state(state.grid, state.params, A1, U1, TH1, state.t + cache.dt)


def step(state: State, cache: PropagatorCache) -> State:
    """One ETD2RK step; checks CFL before and positivity after."""
    if not cache.matches(state):
        raise ValueError("propagator cache does not match the state's grid/params")
    dt = cache.dt
    check_cfl(state, dt)
    A, U, TH = _spectral_arrays(state)
    n0 = models.nonlinear_rhs(state)
    N0a, N0u = n0.da.data, n0.du.data
    N0t = n0.dtheta.data if n0.dtheta is not None else None

    Ea, Eu, Et = _apply_tables(cache, cache.long_E, cache.trans_E, A, U, TH)
    Pa, Pu, Pt = _apply_tables(cache, cache.long_P1, cache.trans_P1, N0a, N0u, N0t)
    A_pred = Ea + dt * Pa
    U_pred = Eu + dt * Pu
    TH_pred = Et + dt * Pt if TH is not None else None
    pred = _make_state(state.grid, state.params, A_pred, U_pred, TH_pred, state.t + dt)

    n1 = models.nonlinear_rhs(pred)
    Da = n1.da.data - N0a
    Du = n1.du.data - N0u
    Dt = n1.dtheta.data - N0t if N0t is not None else None
    Ca, Cu, Ct = _apply_tables(cache, cache.long_P2, cache.trans_P2, Da, Du, Dt)
    A1 = A_pred + dt * Ca
    U1 = U_pred + dt * Cu
    TH1 = TH_pred + dt * Ct if TH is not None else None

    new = _make_state(state.grid, state.params, A1, U1, TH1, state.t + dt)
    models.check_positivity(new)
    return new


@dataclass(frozen=True)
class RunConfig:
    """Full description of one simulation run."""

    n: int
    box_length: float
    params: ModelParams
    init: InitialDataSpec
    dt: float
    t_end: float
    cadence: float
    s_values: tuple = diagnostics.DEFAULT_S_GRID
    delta0: float | None = None
    delta: float = 0.1
    split_R: float = 1.0
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.cadence <= 0:
            raise ValueError("cadence must be positive")
        for s in self.s_values:
            if not 0 < s < 1.5:
                raise ValueError(f"s values must lie in (0, 3/2), got {s}")
        n_steps = round(self.t_end / self.dt)
        if abs(n_steps * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError("t_end must be an integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def t_box(self) -> float:
        return (self.box_length / (2 * np.pi)) ** 2 / min(self.params.mu, 1.0)


@dataclass
class RunResult:
    """Records plus provenance; also what RunAborted carries as partial output."""

    records: list
    manifest: dict
    events: list[str]
    status: str
    out_dir: str | None


def _snapshot(state: State, config: RunConfig) -> diagnostics.DiagRecord:
    tendency = models.full_rhs(state)
    return diagnostics.snapshot(
        state, tendency, s_values=config.s_values,
        delta0=config.delta0, delta=config.delta, split_R=config.split_R,
    )


def _base_manifest(config: RunConfig, resolved_config: dict | None) -> dict:
    from . import __version__

    p = config.params
    return {
        "schema_version": runio.SCHEMA_VERSION,
        "kind": "run",
        "package": "nsdecay",
        "version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "fft_workers": sp.fft_workers(),
        "seed": config.seed,
        "grid": {"n": config.n, "box_length": config.box_length},
        "params": {
            "model": p.model, "mu": p.mu, "lambda": p.lambda_v, "gamma": p.gamma,
            "p_prime1": p.p_prime1, "meets_decay_regime": p.meets_decay_regime,
        },
        "init": config.init.describe(),
        "time": {"dt": config.dt, "t_end": config.t_end, "cadence": config.cadence},
        "diag": {
            "s_values": list(config.s_values),
            "delta0": diagnostics.default_delta0(p.p_prime1) if config.delta0 is None else config.delta0,
            "delta": config.delta,
            "split_R": config.split_R,
        },
        "t_box": config.t_box,
        "columns": diagnostics.record_columns(p.model, config.s_values),
        "resolved_config": resolved_config or {},
    }


def _write_artifacts(result: RunResult, config: RunConfig) -> None:
    if config.out_dir is None:
        return
    os.makedirs(config.out_dir, exist_ok=True)
    cols = result.manifest["columns"]
    runio.write_series_csv(os.path.join(config.out_dir, "series.csv"), cols, result.records)
    runio.write_json(os.path.join(config.out_dir, "manifest.json"), result.manifest)
    with open(os.path.join(config.out_dir, "events.log"), "w") as fh:
        fh.write("\n".join(result.events) + "\n")


def run(config: RunConfig, resolved_config: dict | None = None) -> RunResult:
    """Integrate to t_end, emitting DiagRecords at the configured cadence.

    Artifacts (series.csv, manifest.json, events.log) are written to
    config.out_dir when set, byte-reproducible from (config, seed, version).
    On positivity/CFL failure the partial artifacts are written and RunAborted
    is raised carrying them.
    """
    grid = sp.make_grid(config.n, config.box_length)
    state = synthesize_initial_data(config.init, grid, config.seed, config.params)
    cache = build_propagator(grid, config.params, config.dt)
    every = max(1, round(config.cadence / config.dt))

    manifest = _base_manifest(config, resolved_config)
    events = [f"t={0.0:.17g} run start (n={config.n}, model={config.params.model})"]
    records = [_snapshot(state, config)]
    status = "completed"
    abort_info = None
    try:
        for i in range(1, config.n_steps + 1):
            state = step(state, cache)
            if i % every == 0 or i == config.n_steps:
                records.append(_snapshot(state, config))
        events.append(f"t={state.t:.17g} run complete ({config.n_steps} steps)")
    except (DensityNonpositive, TemperatureNonpositive, CflViolation) as exc:
        status = "aborted"
        reason = type(exc).__name__
        t_abort = exc.t if exc.t is not None else state.t
        abort_info = {"reason": reason, "t": t_abort, "detail": str(exc)}
        events.append(f"t={t_abort:.17g} aborted: {exc}")
        manifest["status"] = status
        manifest["abort"] = abort_info
        result = RunResult(records, manifest, events, status, config.out_dir)
        _write_artifacts(result, config)
        raise RunAborted(reason, t_abort, cause=exc, artifacts=result) from exc

    manifest["status"] = status
    manifest["abort"] = None
    result = RunResult(records, manifest, events, status, config.out_dir)
    _write_artifacts(result, config)
    return result
