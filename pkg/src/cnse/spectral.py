"""Fourier discretisation of mean-free periodic vector fields on [0, 2pi)^3.

Spectral coefficients are stored in real-to-complex layout, shape
``(3, n, n, nz//2 + 1)``, and normalised so that plain Parseval sums give
continuum norms::

    ||u||^2 = sum_k w_k |c_k|^2,     c_k = (2 pi)^{3/2} / N * DFT(u)_k

where ``w_k`` is 1 on the self-conjugate kz planes and 2 elsewhere.
Two-dimensional runs use ``nz = 1``: a single z-plane of a z-independent
3D field, so every code path is shared.
"""
import functools
import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import kernels
from .errors import GridMismatchError

TWO_PI = 2.0 * np.pi
CHECKPOINT_MAGIC = b"CNSE"
CHECKPOINT_VERSION = 1


def workers():
    """Worker count for FFTs, capped by ``CNSE_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CNSE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    n: int
    dims: int = 3

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid.n must be an even integer >= 8, got {self.n!r}")
        if self.dims not in (2, 3):
            raise ValueError(f"grid.dims must be 2 or 3, got {self.dims!r}")

    @property
    def nz(self):
        return self.n if self.dims == 3 else 1

    @property
    def shape(self):
        return (self.n, self.n, self.nz)

    @property
    def kshape(self):
        return (self.n, self.n, self.nz // 2 + 1)

    @property
    def npoints(self):
        return self.n * self.n * self.nz

    @property
    def scale(self):
        return TWO_PI ** 1.5 / self.npoints

    @property
    def dx(self):
        return TWO_PI / self.n

    @property
    def lambda1(self):
        return 1.0

    @property
    def modes(self):
        return _modes(self.n, self.dims)

    def points(self):
        """Physical coordinates X, Y, Z broadcast to ``shape``."""
        x = TWO_PI * np.arange(self.n) / self.n
        z = TWO_PI * np.arange(self.nz) / self.nz
        return np.meshgrid(x, x, z, indexing="ij")


class _Modes:
    """Per-grid wavenumber tables (shared, read-only)."""

    def __init__(self, n, dims):
        nz = n if dims == 3 else 1
        k = np.fft.fftfreq(n, 1.0 / n)
        kz = np.fft.rfftfreq(nz, 1.0 / nz)
        self.kx1, self.ky1, self.kz1 = k.copy(), k.copy(), kz.copy()
        self.kx = k.reshape(n, 1, 1)
        self.ky = k.reshape(1, n, 1)
        self.kz = kz.reshape(1, 1, -1)
        self.k = (self.kx, self.ky, self.kz)
        self.k2 = self.kx ** 2 + self.ky ** 2 + self.kz ** 2
        self.inv_k2 = np.zeros_like(self.k2)
        nz_mask = self.k2 > 0
        self.inv_k2[nz_mask] = 1.0 / self.k2[nz_mask]
        w = np.full(kz.shape, 2.0)
        w[0] = 1.0
        if nz > 1 and nz % 2 == 0:
            w[-1] = 1.0
        self.weights = np.broadcast_to(w.reshape(1, 1, -1), self.k2.shape).copy()
        cut = n / 3.0
        self.dealias = (np.abs(self.kx) <= cut) & (np.abs(self.ky) <= cut) & (np.abs(self.kz) <= cut)
        self.self_conjugate = [0] + ([len(kz) - 1] if nz > 1 and nz % 2 == 0 else [])
        self.all_modes = np.ones(self.k2.shape, dtype=bool)
        for arr in (self.k2, self.inv_k2, self.weights, self.dealias, self.all_modes,
                    self.kx1, self.ky1, self.kz1):
            arr.setflags(write=False)


@functools.lru_cache(maxsize=None)
def _modes(n, dims):
    return _Modes(n, dims)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (3,) + self.grid.kshape:
            raise ValueError(f"coeffs shape {self.coeffs.shape} does not match grid {self.grid.kshape}")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((3,) + grid.kshape, dtype=np.complex128))

    def copy(self):
        return SpectralField(self.grid, self.coeffs.copy())

    def _other(self, other):
        _check_grids(self, other)
        return other.coeffs

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + self._other(other))

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - self._other(other))

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (3,) + self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")


def _check_grids(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


# -- transforms ---------------------------------------------------------------

def fft_forward(values, grid):
    """Real values (..., n, n, nz) -> normalised coefficients."""
    return scipy.fft.rfftn(values, axes=(-3, -2, -1), workers=workers()) * grid.scale


def fft_inverse(coeffs, grid):
    return scipy.fft.irfftn(coeffs, s=grid.shape, axes=(-3, -2, -1), workers=workers()) / grid.scale


def forward_transform(p):
    """Physical -> spectral. The mean (k = 0) is kept; see :func:`remove_mean`."""
    return SpectralField(p.grid, fft_forward(p.values, p.grid))


def inverse_transform(s):
    return PhysicalField(s.grid, fft_inverse(s.coeffs, s.grid))


def remove_mean(s):
    c = s.coeffs.copy()
    c[:, 0, 0, 0] = 0.0
    return SpectralField(s.grid, c)


def hermitian_coeffs(c, grid, inplace=False):
    """Symmetrise the self-conjugate kz planes: c(-k) = conj(c(k))."""
    if not inplace:
        c = c.copy()
    for l in grid.modes.self_conjugate:
        plane = c[..., l]
        mirrored = np.roll(np.flip(plane, axis=(-2, -1)), 1, axis=(-2, -1))
        c[..., l] = 0.5 * (plane + np.conj(mirrored))
    return c


def enforce_hermitian(s):
    return SpectralField(s.grid, hermitian_coeffs(s.coeffs, s.grid))


# -- operators ----------------------------------------------------------------

def project_coeffs(c, grid, mask=None):
    """Leray projection of ``c * mask``; also zeroes the k = 0 mode."""
    return kernels.project_masked(c, grid, grid.modes.all_modes if mask is None else mask)


def leray_project(s):
    """Leray projection onto divergence-free fields, mode by mode."""
    return SpectralField(s.grid, project_coeffs(s.coeffs, s.grid))


def stokes_apply(s):
    """Stokes operator A = -P Laplacian; diagonal |k|^2 on solenoidal fields."""
    return SpectralField(s.grid, s.coeffs * s.grid.modes.k2)


def galerkin_mask(grid, m_cutoff):
    if m_cutoff is None:
        return np.ones(grid.kshape, dtype=bool)
    return grid.modes.k2 <= m_cutoff


def galerkin_truncate(s, m_cutoff):
    """Zero every mode with |k|^2 > m_cutoff (spherical cutoff = span of Stokes eigenfunctions)."""
    return SpectralField(s.grid, s.coeffs * galerkin_mask(s.grid, m_cutoff))


def dealias(s):
    """2/3 rule: zero modes with any |k_i| > n/3."""
    return SpectralField(s.grid, s.coeffs * s.grid.modes.dealias)


def curl_coeffs(c, grid):
    return kernels.curl(c, grid)


def curl(s):
    return SpectralField(s.grid, curl_coeffs(s.coeffs, s.grid))


def gradient_coeffs(c, grid):
    """Coefficients of d_j u_i, shape (3, 3, ...)."""
    return kernels.gradient(c, grid)


# -- norms --------------------------------------------------------------------

def weighted_sum(c2, grid):
    """sum_k w_k * c2[k] with deterministic (numpy pairwise) accumulation."""
    return float(np.sum(c2 * grid.modes.weights))


def energy_coeffs(c, grid, power=0):
    """sum_k w_k |k|^(2 power) |c_k|^2."""
    a2 = (c.real ** 2 + c.imag ** 2).sum(axis=0)
    if power:
        a2 = a2 * grid.modes.k2 ** power
    return weighted_sum(a2, grid)


def inner_coeffs(a, b, grid):
    return weighted_sum((a.real * b.real + a.imag * b.imag).sum(axis=0), grid)


def norm_l2(s):
    return np.sqrt(energy_coeffs(s.coeffs, s.grid))


def norm_h1_semi(s):
    return np.sqrt(energy_coeffs(s.coeffs, s.grid, 1))


def norm_stokes(s):
    return np.sqrt(energy_coeffs(s.coeffs, s.grid, 2))


def inner_l2(s, t):
    _check_grids(s, t)
    return inner_coeffs(s.coeffs, t.coeffs, s.grid)


def divergence_residual(s):
    """max_k |k . c_k| / (|k| |c_k| + tiny)."""
    m = s.grid.modes
    kx, ky, kz = m.k
    c = s.coeffs
    num = np.abs(kx * c[0] + ky * c[1] + kz * c[2])
    den = np.sqrt(m.k2) * np.sqrt((np.abs(c) ** 2).sum(axis=0)) + np.finfo(float).tiny
    return float(np.max(num / den))


def resample(s, grid):
    """Copy the modes shared by ``s.grid`` and ``grid`` (zero-pad or truncate).

    Nyquist modes of either grid are dropped.
    """
    if grid.dims != s.grid.dims:
        raise GridMismatchError("cannot resample between 2D and 3D grids")
    out = SpectralField.zeros(grid)
    m = min(s.grid.n, grid.n) // 2
    src, dst = s.coeffs, out.coeffs
    lo = list(range(0, m)) + list(range(-m + 1, 0))
    idx_src = np.array(lo) % s.grid.n
    idx_dst = np.array(lo) % grid.n
    mz = m if grid.dims == 3 else 1
    block = src[:, idx_src][:, :, idx_src][..., :mz]
    dst[np.ix_(range(3), idx_dst, idx_dst, range(mz))] = block
    return out


# -- construction helpers -----------------------------------------------------

def single_mode(grid, k, amplitude):
    """Real field amplitude * sin(k . x), before any projection."""
    X, Y, Z = grid.points()
    phase = k[0] * X + k[1] * Y + k[2] * Z
    values = np.stack([a * np.sin(phase) for a in amplitude])
    return forward_transform(PhysicalField(grid, values))


# -- checkpoint I/O -----------------------------------------------------------

_HEADER = struct.Struct("<4sIIId")


def _lexicographic(c):
    """Reorder (3, n, n, nzh) -> (n, n, nzh, 3) with ascending kx, ky."""
    return np.ascontiguousarray(np.moveaxis(np.fft.fftshift(c, axes=(1, 2)), 0, -1))


def write_checkpoint(path, s, time):
    """Bit-exact binary dump: header, then (re, im) f64 triples in k order."""
    header = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, s.grid.dims, s.grid.n, float(time))
    body = _lexicographic(s.coeffs).astype("<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_checkpoint(path):
    """Return ``(SpectralField, time)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint header")
    magic, version, dims, n, time = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    grid = Grid(n, dims)
    count = 3 * n * n * grid.kshape[2]
    body = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if body.size != count:
        raise ValueError(f"{path}: expected {count} coefficients, found {body.size}")
    ordered = body.astype(np.complex128).reshape(n, n, grid.kshape[2], 3)
    c = np.fft.ifftshift(np.moveaxis(ordered, -1, 0), axes=(1, 2))
    return SpectralField(grid, np.ascontiguousarray(c)), time
