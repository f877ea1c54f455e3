"""Functional-inequality battery evaluated spectrally on sampled fields.

Four families: negative-positive interpolation (sharp constant 1), the
Gagliardo-Nirenberg family (empirical constants, recorded), fractional
integration of Hardy-Littlewood-Sobolev type (empirical), and Hausdorff-Young
(constant 1 at the p in {1, 2} endpoints, quadrature slack elsewhere).

Inside this module every frequency multiplier uses the single modulus
q = 2 pi |xi|, the one the gradient carries.  Mixing the gradient modulus on
one side with the bare |xi| of lambda_pow on the other would silently insert
powers of 2 pi and destroy the exact constant-1 statements; with one modulus
the interpolation inequality is a one-point Hoelder bound with constant
exactly 1, equality on single modes.

L^p norms use the equal-weight quadrature rule on the uniform grid.  Sample
fields are kept band-limited to |k| <= n/4 so quadrature error stays inside
the declared slacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .errors import NegativePowerOnNonzeroMean
from .spectral import Field, SpectralGrid

SAMPLE_BAND_FRACTION = 0.25
INTERP_SLACK = 1e-10
HY_ENDPOINT_SLACK = 1e-12
HY_QUADRATURE_SLACK = 0.05


@dataclass(frozen=True)
class InequalityReport:
    name: str
    ratios: tuple[float, ...]
    max_ratio: float
    count: int
    bound: float | None
    passed: bool

    def __post_init__(self):
        for r in self.ratios:
            if not (np.isfinite(r) and r > 0):
                raise ValueError(f"{self.name}: ratio {r} is not finite and positive")

    def as_dict(self) -> dict:
        return {"name": self.name, "max_ratio": self.max_ratio, "count": self.count,
                "bound": self.bound, "passed": self.passed}


def _single(name: str, ratio: float, bound: float | None) -> InequalityReport:
    passed = True if bound is None else ratio <= bound
    return InequalityReport(name=name, ratios=(float(ratio),), max_ratio=float(ratio),
                            count=1, bound=bound, passed=passed)


def merge_reports(reports: list[InequalityReport]) -> InequalityReport:
    if not reports:
        raise ValueError("cannot merge zero reports")
    name = reports[0].name
    bound = reports[0].bound
    ratios = tuple(r for rep in reports for r in rep.ratios)
    mx = max(ratios)
    passed = all(rep.passed for rep in reports)
    return InequalityReport(name=name, ratios=ratios, max_ratio=mx,
                            count=len(ratios), bound=bound, passed=passed)


def _require_zero_mean(f: Field) -> None:
    if sp.zero_mode_magnitude(f) > 1e-12 * max(sp.l2_norm(f), 1e-300):
        raise NegativePowerOnNonzeroMean("field must be zero-mean")


def _q_norm(f: Field, power: float) -> float:
    """||q^power f^|| with q = 2 pi |xi|; zero mode excluded for power < 0."""
    c = sp.spectral_data(sp.to_spectral(f))
    grid = f.grid
    mult = np.zeros(grid.shape)
    nz = grid.q2 > 0
    mult[nz] = grid.q2[nz] ** (0.5 * power)
    if power == 0:
        mult[~nz] = 1.0
    e = np.abs(c) ** 2 * mult ** 2
    if c.ndim == 4:
        e = e.sum(axis=0)
    return float(np.sqrt(grid.volume * e.sum()))


def _lp_norm(data: np.ndarray, p: float, cell_volume: float) -> float:
    mag = np.abs(data)
    if np.isinf(p):
        return float(mag.max())
    return float((np.sum(mag ** p) * cell_volume) ** (1.0 / p))


def _grad_magnitude(f: Field, order: int) -> np.ndarray:
    """Pointwise Euclidean magnitude of the order-th derivative tensor."""
    if order == 0:
        return np.abs(sp.to_physical(f).data)
    g = sp.gradient(f)
    if order == 1:
        gp = sp.to_physical(g).data
        return np.sqrt(np.sum(gp ** 2, axis=0))
    if order == 2:
        rows = [sp.to_physical(sp.gradient(sp.Field(f.grid, sp.spectral_data(sp.to_spectral(g))[i], sp.SPECTRAL))).data
                for i in range(3)]
        return np.sqrt(sum(np.sum(r ** 2, axis=0) for r in rows))
    raise ValueError(f"derivative order {order} not supported")


def check_interp(f: Field, l: int, s: float) -> InequalityReport:
    """||grad^l f|| <= ||grad^(l+1) f||^(1-alpha) ||q^-s f||^alpha, alpha = 1/(l+1+s)."""
    if l not in (0, 1, 2):
        raise ValueError(f"l must be in {{0,1,2}}, got {l}")
    if not 0 < s < 1.5:
        raise ValueError(f"s must lie in (0, 3/2), got {s}")
    _require_zero_mean(f)
    alpha = 1.0 / (l + 1 + s)
    lhs = _q_norm(f, l)
    rhs = _q_norm(f, l + 1) ** (1 - alpha) * _q_norm(f, -s) ** alpha
    if rhs == 0:
        raise ValueError("zero field is not an admissible sample")
    return _single(f"interp_l{l}_s{s:g}", lhs / rhs, 1.0 + INTERP_SLACK)


def gn_exponent(alpha: int, m: int, l: int, theta: float) -> float:
    """Lebesgue exponent p from 1/p - alpha/3 = (1/2 - m/3)(1-theta) + (1/2 - l/3)theta."""
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    inv_p = alpha / 3.0 + (0.5 - m / 3.0) * (1 - theta) + (0.5 - l / 3.0) * theta
    if inv_p <= 0:
        raise ValueError(f"exponent relation gives 1/p = {inv_p} <= 0; inadmissible combination")
    return 1.0 / inv_p


def check_gn(f: Field, alpha: int, m: int, l: int, theta: float) -> InequalityReport:
    """Ratio ||grad^alpha f||_Lp / (||grad^m f||^(1-theta) ||grad^l f||^theta), p from the relation."""
    if alpha not in (0, 1, 2) or m not in (0, 1, 2, 3) or l not in (0, 1, 2, 3):
        raise ValueError("derivative orders must be small nonnegative integers")
    p = gn_exponent(alpha, m, l, theta)
    if p < 1:
        raise ValueError(f"derived p = {p} < 1; inadmissible combination")
    lhs = _lp_norm(_grad_magnitude(f, alpha), p, f.grid.cell_volume)
    rhs = _q_norm(f, m) ** (1 - theta) * _q_norm(f, l) ** theta
    if rhs == 0:
        raise ValueError("zero field is not an admissible sample")
    return _single(f"gn_a{alpha}_m{m}_l{l}_th{theta:g}", lhs / rhs, None)


def check_hls(f: Field, s: float, p: float) -> InequalityReport:
    """Ratio ||q^-s f||_Lq / ||f||_Lp with 1/q = 1/p - s/3; empirical constant."""
    if not 0 < s < 3:
        raise ValueError(f"s must lie in (0, 3), got {s}")
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    inv_q = 1.0 / p - s / 3.0
    if inv_q <= 0:
        raise ValueError(f"exponent relation gives 1/q = {inv_q} <= 0; need q < infinity")
    q = 1.0 / inv_q
    if q <= p:
        raise ValueError(f"need p < q, got p={p}, q={q}")
    _require_zero_mean(f)
    grid = f.grid
    c = sp.spectral_data(sp.to_spectral(f)).copy()
    mult = np.zeros(grid.shape)
    nzm = grid.q2 > 0
    mult[nzm] = grid.q2[nzm] ** (-0.5 * s)
    smoothed = sp.inverse(sp.Field(grid, c * mult, sp.SPECTRAL)).data
    lhs = _lp_norm(smoothed, q, grid.cell_volume)
    rhs = _lp_norm(sp.to_physical(f).data, p, grid.cell_volume)
    if rhs == 0:
        raise ValueError("zero field is not an admissible sample")
    return _single(f"hls_s{s:g}_p{p:g}", lhs / rhs, None)


def check_hausdorff_young(f: Field, p: float) -> InequalityReport:
    """||f^||_Lp' <= ||f||_Lp with the lattice measure; constant 1 at p in {1,2}."""
    if not 1 <= p <= 2:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    grid = f.grid
    c = sp.spectral_data(sp.to_spectral(f))
    mag = np.abs(c)
    L = grid.box_length
    if p == 1:
        fhat_norm = L ** 3 * float(mag.max())
        bound = 1.0 + HY_ENDPOINT_SLACK
    else:
        pprime = p / (p - 1.0)
        # lattice cells have measure 1/L^3 and f^(xi) = L^3 c_k
        fhat_norm = float((L ** (3 * (pprime - 1)) * np.sum(mag ** pprime)) ** (1.0 / pprime))
        bound = 1.0 + HY_ENDPOINT_SLACK if p == 2 else 1.0 + HY_QUADRATURE_SLACK
    rhs = _lp_norm(sp.to_physical(f).data, p, grid.cell_volume)
    if rhs == 0:
        raise ValueError("zero field is not an admissible sample")
    return _single(f"hy_p{p:g}", fhat_norm / rhs, bound)


def sample_field(grid: SpectralGrid, rng: np.random.Generator,
                 band_fraction: float = SAMPLE_BAND_FRACTION) -> Field:
    """Random zero-mean real field band-limited to |k| <= band_fraction * n."""
    kmax = band_fraction * grid.n
    k = grid.axis_wavenumbers * grid.box_length  # integer mode indices
    within = ((np.abs(k)[:, None, None] <= kmax)
              & (np.abs(k)[None, :, None] <= kmax)
              & (np.abs(k)[None, None, :] <= kmax))
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c *= within
    c[0, 0, 0] = 0.0
    c_neg = np.flip(np.roll(c, -1, axis=(0, 1, 2)), axis=(0, 1, 2))
    return Field(grid, 0.5 * (c + np.conj(c_neg)), sp.SPECTRAL)


def frequency_bump(grid: SpectralGrid, width: float) -> Field:
    """Deterministic zero-mean bump: f^ = exp(-|2 pi xi|^2 / (2 width^2))."""
    c = np.exp(-grid.q2 / (2.0 * width ** 2))
    c[0, 0, 0] = 0.0
    return Field(grid, c.astype(complex), sp.SPECTRAL)


def run_battery(grid: SpectralGrid, seed: int, n_samples: int = 200) -> list[InequalityReport]:
    """The verify-subcommand sweep: every family on a shared sample population."""
    rng = np.random.default_rng(seed)
    samples = [sample_field(grid, rng) for _ in range(n_samples)]
    reports: list[InequalityReport] = []
    for l in (0, 1, 2):
        for s in (0.25, 0.5, 1.0, 1.4):
            reports.append(merge_reports([check_interp(f, l, s) for f in samples]))
    for alpha, m, l, theta in ((0, 0, 1, 0.5), (0, 0, 1, 0.75), (1, 1, 2, 0.5)):
        reports.append(merge_reports([check_gn(f, alpha, m, l, theta) for f in samples]))
    for s, p in ((1.0, 1.2), (0.5, 1.5)):
        reports.append(merge_reports([check_hls(f, s, p) for f in samples]))
    for p in (1.0, 4.0 / 3.0, 2.0):
        reports.append(merge_reports([check_hausdorff_young(f, p) for f in samples]))
    return reports
