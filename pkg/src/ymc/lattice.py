"""Periodic cubic grid, spectral calculus, and the transverse projector.

All derivatives are Fourier multipliers.  Conventions (see docs/conventions.md):

* mode integers come from ``np.fft.fftfreq(N) * N``; momenta are ``2*pi*k/box``;
* first-order derivative multipliers zero the Nyquist plane so that real
  fields map to real fields and discrete integration by parts is exact;
* the Laplacian keeps the full ``-|p|^2`` including the Nyquist plane;
* the transverse projector is built from the same zeroed momentum vector as
  the first derivatives, is the identity on modes with vanishing momentum
  vector, and is therefore an exact orthogonal projector;
* the inverse FFT carries the 1/N^3 normalization (numpy default).

Fields are plain float64 arrays wrapped with their grid:
``LatticeField.data`` has shape (N, N, N, K, 3) indexed (x1, x2, x3, color,
direction); ``ColorScalarField.data`` has shape (N, N, N, K).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "Grid",
    "LatticeField",
    "ColorScalarField",
    "spectral_derivative",
    "spectral_gradient",
    "divergence",
    "curl",
    "laplacian",
    "transverse_project",
    "coulomb_residual",
    "l2_inner",
    "l2_norm",
    "dealias",
    "dealias_keep_modes",
]

FIELD_KINDS = ("potential", "momentum", "auxiliary")


@dataclass(frozen=True)
class Grid:
    """N^3 periodic grid over a cube of edge length ``box``."""

    n: int
    box: float

    def __post_init__(self):
        if self.n < 4 or self.n % 2 != 0:
            raise DomainError(f"N={self.n} must be even and >= 4", where="lattice.Grid")
        if not (np.isfinite(self.box) and self.box > 0):
            raise DomainError(f"box={self.box} must be positive", where="lattice.Grid")

    @property
    def spacing(self) -> float:
        return self.box / self.n

    @property
    def sites(self) -> int:
        return self.n**3

    def coordinates(self, axis: int) -> np.ndarray:
        """Physical coordinate along one axis, broadcastable over the grid."""
        x = np.arange(self.n) * self.spacing
        shape = [1, 1, 1]
        shape[axis] = self.n
        return x.reshape(shape)


@lru_cache(maxsize=16)
def _tables(n: int, box: float):
    """Cached multiplier tables for a grid size."""
    k = np.fft.fftfreq(n, d=1.0 / n)  # integers 0..n/2-1, -n/2..-1
    m = 2.0 * np.pi / box * k
    m_first = m.copy()
    m_first[n // 2] = 0.0  # Nyquist zeroed for odd-order derivatives
    mom = np.stack(np.meshgrid(m_first, m_first, m_first, indexing="ij"), axis=-1)
    mom2 = (mom**2).sum(axis=-1)
    p2_full = (
        m.reshape(-1, 1, 1) ** 2 + m.reshape(1, -1, 1) ** 2 + m.reshape(1, 1, -1) ** 2
    )
    # transverse projector matrices delta_ij - m_i m_j / |m|^2, identity at m=0
    safe = np.where(mom2 == 0.0, 1.0, mom2)
    proj = -mom[..., :, None] * mom[..., None, :] / safe[..., None, None]
    proj[..., 0, 0] += 1.0
    proj[..., 1, 1] += 1.0
    proj[..., 2, 2] += 1.0
    return {"m_first": m_first, "mom": mom, "mom2": mom2, "p2_full": p2_full, "proj": proj}


def _axis_multiplier(grid: Grid, axis: int, extra_dims: int) -> np.ndarray:
    m = _tables(grid.n, grid.box)["m_first"]
    shape = [1, 1, 1] + [1] * extra_dims
    shape[axis] = grid.n
    return (1j * m).reshape(shape)


def _fft(data: np.ndarray) -> np.ndarray:
    return np.fft.fftn(data, axes=(0, 1, 2))


def _ifft_real(spec: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(spec, axes=(0, 1, 2)).real


def _check_finite(data: np.ndarray, where: str):
    if not np.all(np.isfinite(data)):
        raise DomainError("field contains non-finite entries", where=where)


@dataclass
class LatticeField:
    """Real color-vector field, data shape (N, N, N, K, 3)."""

    grid: Grid
    data: np.ndarray
    kind: str = "potential"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        n = self.grid.n
        if self.data.ndim != 5 or self.data.shape[:3] != (n, n, n) or self.data.shape[4] != 3:
            raise DomainError(f"bad field shape {self.data.shape}", where="lattice.LatticeField")
        if self.kind not in FIELD_KINDS:
            raise DomainError(f"unknown kind {self.kind!r}", where="lattice.LatticeField")
        _check_finite(self.data, "lattice.LatticeField")

    @property
    def k(self) -> int:
        return self.data.shape[3]

    @classmethod
    def zeros(cls, grid: Grid, k: int, kind: str = "potential") -> "LatticeField":
        return cls(grid, np.zeros((grid.n, grid.n, grid.n, k, 3)), kind)

    def copy(self) -> "LatticeField":
        return LatticeField(self.grid, self.data.copy(), self.kind)


@dataclass
class ColorScalarField:
    """Real color-scalar field, data shape (N, N, N, K)."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        n = self.grid.n
        if self.data.ndim != 4 or self.data.shape[:3] != (n, n, n):
            raise DomainError(f"bad field shape {self.data.shape}",
                              where="lattice.ColorScalarField")
        _check_finite(self.data, "lattice.ColorScalarField")

    @property
    def k(self) -> int:
        return self.data.shape[3]

    @classmethod
    def zeros(cls, grid: Grid, k: int) -> "ColorScalarField":
        return cls(grid, np.zeros((grid.n, grid.n, grid.n, k)))

    def copy(self) -> "ColorScalarField":
        return ColorScalarField(self.grid, self.data.copy())


def _derivative_array(grid: Grid, data: np.ndarray, axis: int) -> np.ndarray:
    mult = _axis_multiplier(grid, axis, data.ndim - 3)
    return _ifft_real(mult * _fft(data))


def spectral_derivative(field, axis: int):
    """d/dx_axis via the Fourier multiplier; exact on band-limited fields."""
    if axis not in (0, 1, 2):
        raise DomainError(f"axis {axis} not in {{0,1,2}}", where="lattice.spectral_derivative")
    _check_finite(field.data, "lattice.spectral_derivative")
    out = _derivative_array(field.grid, field.data, axis)
    if isinstance(field, LatticeField):
        return LatticeField(field.grid, out, "auxiliary")
    return ColorScalarField(field.grid, out)


def spectral_gradient(f: ColorScalarField) -> np.ndarray:
    """All three derivatives of a color-scalar field, shape (N,N,N,K,3)."""
    spec = _fft(f.data)
    grid = f.grid
    return np.stack(
        [_ifft_real(_axis_multiplier(grid, j, 1) * spec) for j in range(3)], axis=-1
    )


def divergence(v: LatticeField) -> ColorScalarField:
    """sum_j d_j v_j as a color-scalar field."""
    spec = _fft(v.data)
    out = sum(
        _ifft_real(_axis_multiplier(v.grid, j, 1) * spec[..., j]) for j in range(3)
    )
    return ColorScalarField(v.grid, out)


def curl(v: LatticeField) -> LatticeField:
    """(curl v)_i = eps_ijk d_j v_k, per color."""
    spec = _fft(v.data)
    grid = v.grid
    d = [
        [_ifft_real(_axis_multiplier(grid, j, 1) * spec[..., kdir]) for kdir in range(3)]
        for j in range(3)
    ]
    out = np.empty_like(v.data)
    out[..., 0] = d[1][2] - d[2][1]
    out[..., 1] = d[2][0] - d[0][2]
    out[..., 2] = d[0][1] - d[1][0]
    return LatticeField(grid, out, "auxiliary")


def laplacian(f):
    """Full spectral Laplacian (Nyquist plane retained)."""
    p2 = _tables(f.grid.n, f.grid.box)["p2_full"]
    extra = f.data.ndim - 3
    mult = -p2.reshape(p2.shape + (1,) * extra)
    out = _ifft_real(mult * _fft(f.data))
    if isinstance(f, LatticeField):
        return LatticeField(f.grid, out, "auxiliary")
    return ColorScalarField(f.grid, out)


def transverse_project(v: LatticeField) -> LatticeField:
    """Remove the longitudinal part; identity on zero-momentum modes."""
    _check_finite(v.data, "lattice.transverse_project")
    proj = _tables(v.grid.n, v.grid.box)["proj"]
    spec = _fft(v.data)
    out_spec = np.einsum("xyzij,xyzaj->xyzai", proj, spec)
    return LatticeField(v.grid, _ifft_real(out_spec), v.kind)


def coulomb_residual(a: LatticeField) -> float:
    """max_x,a |sum_j d_j a_j|, the Coulomb-gauge violation."""
    return float(np.abs(divergence(a).data).max())


def _pair_check(u, v, where: str):
    if type(u) is not type(v):
        raise DomainError("mismatched field types", where=where)
    if u.grid != v.grid or u.data.shape != v.data.shape:
        raise DomainError("mismatched grids or shapes", where=where)


def l2_inner(u, v) -> float:
    """Discrete L2 pairing sum(u*v) * spacing^3 over every slot."""
    _pair_check(u, v, "lattice.l2_inner")
    return float(np.vdot(u.data, v.data).real * u.grid.spacing**3)


def l2_norm(u) -> float:
    return float(np.sqrt(max(l2_inner(u, u), 0.0)))


def dealias_keep_modes(n: int) -> int:
    """Largest |k| kept by the 2/3-rule truncation for an N-point grid."""
    return (n - 1) // 3


@lru_cache(maxsize=16)
def _dealias_mask(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n)
    keep = np.abs(k) <= dealias_keep_modes(n)
    return np.einsum("i,j,l->ijl", keep, keep, keep)


def dealias(grid: Grid, data: np.ndarray) -> np.ndarray:
    """Spectral truncation to |k|_inf <= (N-1)//3 along every axis.

    Products of two truncated fields then alias only onto discarded modes,
    which keeps quadratic operators exactly symmetric on the kept band.
    """
    mask = _dealias_mask(grid.n)
    mask = mask.reshape(mask.shape + (1,) * (data.ndim - 3))
    return _ifft_real(mask * _fft(data))
