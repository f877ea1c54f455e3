"""Periodic-box Fourier infrastructure: transforms, multipliers, dealiasing.

All frequency bookkeeping in the package uses one convention, fixed here:

    xi   = k / L            frequency of integer mode k on the box [0, L)^3,
                            matching the transform kernel exp(2*pi*1j*x.xi)
    c_k  = fftn(f) / n^3    stored spectral coefficient of f
    Lambda^s                multiplication by |xi|^s
    grad                    multiplication by 2*pi*1j*xi  (true derivative)

    ||f||_{L2}^2 = integral |f|^2 dx = (L/n)^3 sum_x |f(x)|^2
                 = L^3 sum_k |c_k|^2        (Parseval, this normalization)

The factor-2pi bookkeeping lives entirely in the grid tables ``xi2`` (for
Lambda) and ``q2 = |2 pi xi|^2`` (for derivatives); consequently
||grad f|| = 2*pi*||Lambda^1 f|| exactly.

Fields are stored on the full complex mode grid; Hermitian symmetry
(c(-k) = conj(c(k))) is the representation contract for real data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .errors import NegativePowerOnNonzeroMean, RepresentationMismatch

PHYSICAL = "physical"
SPECTRAL = "spectral"

TWO_PI = 2.0 * np.pi

# FFT worker count; settable once at process start (see cli), best-effort.
_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


def fft_workers() -> int:
    return _FFT_WORKERS


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic box descriptor: wavenumber tables and the dealias mask."""

    n: int
    box_length: float
    axis_wavenumbers: np.ndarray  # (n,) xi values along one axis, xi = k/L
    xi: np.ndarray                # (3, n, n, n) frequency vectors
    xi2: np.ndarray               # |xi|^2, the Lambda multiplier base
    q2: np.ndarray                # |2 pi xi|^2, the derivative multiplier base
    dealias_mask: np.ndarray      # bool, two-thirds rule, symmetric under k -> -k
    k2_int: np.ndarray            # integer k1^2+k2^2+k3^2 (exact radial grouping)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return (self.box_length / self.n) ** 3

    @property
    def volume(self) -> float:
        return self.box_length ** 3


def make_grid(n: int, box_length: float) -> SpectralGrid:
    """Build the grid tables for an n^3 periodic box of side box_length."""
    if n % 2 != 0 or n < 8:
        raise ValueError(f"n must be even and >= 8, got {n}")
    if box_length <= 0:
        raise ValueError(f"box_length must be positive, got {box_length}")
    L = float(box_length)
    k = np.fft.fftfreq(n, d=1.0 / n)  # integer mode indices 0..n/2-1, -n/2..-1
    axis = k / L
    kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
    xi = np.stack([kx, ky, kz]) / L
    xi2 = (xi ** 2).sum(axis=0)
    q2 = TWO_PI ** 2 * xi2
    # two-thirds rule: zero every mode with any |k_i| > n/3
    keep = np.abs(k) <= n / 3.0
    dealias_mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
    k2_int = (kx.astype(np.int64) ** 2 + ky.astype(np.int64) ** 2 + kz.astype(np.int64) ** 2)
    return SpectralGrid(
        n=n,
        box_length=L,
        axis_wavenumbers=axis,
        xi=xi,
        xi2=xi2,
        q2=q2,
        dealias_mask=dealias_mask,
        k2_int=k2_int,
    )


@dataclass(frozen=True)
class Field:
    """Scalar quantity on a grid, stored physically or spectrally."""

    grid: SpectralGrid
    data: np.ndarray
    representation: str

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise RepresentationMismatch(f"unknown representation {self.representation!r}")
        if self.data.shape != self.grid.shape:
            raise ValueError(f"field data shape {self.data.shape} does not match grid {self.grid.shape}")


@dataclass(frozen=True)
class VecField:
    """3-vector quantity; data has a leading component axis."""

    grid: SpectralGrid
    data: np.ndarray
    representation: str

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise RepresentationMismatch(f"unknown representation {self.representation!r}")
        if self.data.shape != (3,) + self.grid.shape:
            raise ValueError(f"vector data shape {self.data.shape} does not match grid {self.grid.shape}")

    def component(self, j: int) -> Field:
        return Field(self.grid, self.data[j], self.representation)


@dataclass(frozen=True)
class TensorField:
    """Rank-2 tensor (3x3 component grid), used for the symmetric gradient."""

    grid: SpectralGrid
    data: np.ndarray
    representation: str


def zero_field(grid: SpectralGrid, representation: str = PHYSICAL) -> Field:
    dtype = float if representation == PHYSICAL else complex
    return Field(grid, np.zeros(grid.shape, dtype=dtype), representation)


def zero_vecfield(grid: SpectralGrid, representation: str = PHYSICAL) -> VecField:
    dtype = float if representation == PHYSICAL else complex
    return VecField(grid, np.zeros((3,) + grid.shape, dtype=dtype), representation)


def _fftn(a: np.ndarray) -> np.ndarray:
    return _fft.fftn(a, axes=(-3, -2, -1), workers=_FFT_WORKERS)


def _ifftn(a: np.ndarray) -> np.ndarray:
    return _fft.ifftn(a, axes=(-3, -2, -1), workers=_FFT_WORKERS)


def forward(f):
    """Physical -> spectral. Coefficients are fftn(data)/n^3."""
    if f.representation != PHYSICAL:
        raise RepresentationMismatch("forward() expects a physical-representation field")
    c = _fftn(f.data) / f.grid.n ** 3
    return type(f)(f.grid, c, SPECTRAL)


def inverse(f):
    """Spectral -> physical. Imaginary round-off from Hermitian data is dropped."""
    if f.representation != SPECTRAL:
        raise RepresentationMismatch("inverse() expects a spectral-representation field")
    x = _ifftn(f.data * f.grid.n ** 3)
    return type(f)(f.grid, x.real, PHYSICAL)


def to_spectral(f):
    return f if f.representation == SPECTRAL else forward(f)


def to_physical(f):
    return f if f.representation == PHYSICAL else inverse(f)


def spectral_data(f) -> np.ndarray:
    """Spectral coefficients of f regardless of stored representation."""
    return to_spectral(f).data


def mean_value(f: Field) -> float:
    """Box average of a scalar field; equals the zero-mode coefficient."""
    if f.representation == PHYSICAL:
        return float(f.data.mean())
    return float(f.data[0, 0, 0].real)


def zero_mode_magnitude(f) -> float:
    """|c_0|, maximized over components for vector fields."""
    c0 = spectral_data(f)[..., 0, 0, 0]
    return float(np.max(np.abs(c0)))


def l2_norm(f) -> float:
    """||f||_{L2} on the box; vector fields sum component energies."""
    if f.representation == PHYSICAL:
        return float(np.sqrt(f.grid.cell_volume * np.sum(f.data ** 2)))
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.data) ** 2)))


def lambda_pow(f, s: float):
    """Apply Lambda^s, the Fourier multiplier |xi|^s.

    s > 0 sends the zero mode to 0; s = 0 is the identity; s < 0 requires the
    field mean to vanish (|mean| <= 1e-12 * ||f||_{L2}).
    """
    rep = f.representation
    c = spectral_data(f).copy()
    if s == 0:
        out = type(f)(f.grid, c, SPECTRAL)
        return out if rep == SPECTRAL else inverse(out)
    if s < 0:
        norm = l2_norm(f)
        mean = zero_mode_magnitude(f)
        if mean > 1e-12 * norm:
            raise NegativePowerOnNonzeroMean(
                f"Lambda^{s} requires zero mean; |mean|={mean:.3e} exceeds 1e-12*||f||={1e-12 * norm:.3e}"
            )
        mult = np.zeros_like(f.grid.xi2)
        nz = f.grid.xi2 > 0
        mult[nz] = f.grid.xi2[nz] ** (s / 2.0)
    else:
        mult = f.grid.xi2 ** (s / 2.0)
    c *= mult
    out = type(f)(f.grid, c, SPECTRAL)
    return out if rep == SPECTRAL else inverse(out)


def gradient(f: Field) -> VecField:
    """grad f via the 2*pi*1j*xi multiplier; preserves input representation."""
    rep = f.representation
    c = spectral_data(f)
    g = TWO_PI * 1j * f.grid.xi * c[None, ...]
    out = VecField(f.grid, g, SPECTRAL)
    return out if rep == SPECTRAL else inverse(out)


def divergence(v: VecField) -> Field:
    rep = v.representation
    c = spectral_data(v)
    d = (TWO_PI * 1j * v.grid.xi * c).sum(axis=0)
    out = Field(v.grid, d, SPECTRAL)
    return out if rep == SPECTRAL else inverse(out)


def laplacian(f):
    """Componentwise Laplacian, multiplier -|2 pi xi|^2."""
    rep = f.representation
    c = spectral_data(f)
    out = type(f)(f.grid, -f.grid.q2 * c, SPECTRAL)
    return out if rep == SPECTRAL else inverse(out)


def jacobian(v: VecField) -> TensorField:
    """J[i, j] = d_i v_j; preserves input representation."""
    rep = v.representation
    c = spectral_data(v)
    J = TWO_PI * 1j * v.grid.xi[:, None, ...] * c[None, :, ...]
    if rep == SPECTRAL:
        return TensorField(v.grid, J, SPECTRAL)
    x = _ifftn(J * v.grid.n ** 3).real
    return TensorField(v.grid, x, PHYSICAL)


def sym_gradient(v: VecField) -> TensorField:
    """Du = (grad v + (grad v)^T) / 2, the stress-tensor building block."""
    J = jacobian(v)
    sym = 0.5 * (J.data + np.swapaxes(J.data, 0, 1))
    return TensorField(v.grid, sym, J.representation)


def tensor_frobenius_sq(T: TensorField) -> Field:
    """Pointwise sum_ij T_ij^2 (physical representation required)."""
    if T.representation != PHYSICAL:
        raise RepresentationMismatch("tensor_frobenius_sq expects physical data")
    return Field(T.grid, np.sum(T.data ** 2, axis=(0, 1)), PHYSICAL)


def dealias(f):
    """Zero all modes outside the two-thirds mask; idempotent."""
    rep = f.representation
    c = spectral_data(f) * f.grid.dealias_mask
    out = type(f)(f.grid, c, SPECTRAL)
    return out if rep == SPECTRAL else inverse(out)


def is_hermitian(f, tol: float = 1e-12) -> bool:
    """Check c(-k) = conj(c(k)) up to tol relative to the largest coefficient."""
    c = spectral_data(f)
    flipped = np.conj(np.roll(c[..., ::-1, ::-1, ::-1], 1, axis=(-3, -2, -1)))
    scale = np.max(np.abs(c))
    if scale == 0:
        return True
    return bool(np.max(np.abs(c - flipped)) <= tol * scale)
