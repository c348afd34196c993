"""Derived gauge quantities: curvature, chromomagnetic field, charge density.

Index conventions follow docs/conventions.md; the chromomagnetic field keeps
the 1/4 prefactor

    B_i^a = (1/4) eps_i^{jk} (d_j A_k^a - d_k A_j^a + g eps^a_{bc} A_j^b A_k^c)

so the free dispersion of the Hamiltonian flow is omega = |p|/2.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import StructureConstants, epsilon_tensor
from .errors import DomainError
from .lattice import ColorScalarField, LatticeField, _fft, _ifft_real, _axis_multiplier

__all__ = [
    "chromomagnetic",
    "charge_density",
    "curvature",
    "CurvatureField",
    "energy_density",
]

_EPS = epsilon_tensor()

# antisymmetric pair storage order for curvature components
CURVATURE_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _grad_all(field: LatticeField) -> np.ndarray:
    """d_j A_k for all j, k; shape (N,N,N,K,3,3) indexed [..., k, j]."""
    spec = _fft(field.data)
    grid = field.grid
    return np.stack(
        [_ifft_real(_axis_multiplier(grid, j, 2) * spec) for j in range(3)], axis=-1
    )


def chromomagnetic(sc: StructureConstants, a: LatticeField) -> LatticeField:
    """B_i^a per the displayed formula, with spectral derivatives."""
    if a.k != sc.k:
        raise DomainError("color count mismatch", where="fields.chromomagnetic")
    d = _grad_all(a)  # d[..., c, k, j] = d_j A_k^c
    # eps_i^{jk} (d_j A_k - d_k A_j) = 2 eps_i^{jk} d_j A_k
    lin = 2.0 * np.einsum("ijk,xyzakj->xyzai", _EPS, d)
    quad = sc.g * np.einsum("ijk,abc,xyzbj,xyzck->xyzai", _EPS, _EPS, a.data, a.data)
    return LatticeField(a.grid, 0.25 * (lin + quad), "auxiliary")


def charge_density(sc: StructureConstants, a: LatticeField,
                   e: LatticeField) -> ColorScalarField:
    """rho^a = g eps^{abc} E_i^b A_i^c, pointwise."""
    if a.grid != e.grid or a.data.shape != e.data.shape:
        raise DomainError("A and E shapes differ", where="fields.charge_density")
    if a.k != sc.k:
        raise DomainError("color count mismatch", where="fields.charge_density")
    rho = sc.g * np.einsum("abc,xyzbi,xyzci->xyza", _EPS, e.data, a.data)
    return ColorScalarField(a.grid, rho)


@dataclass
class CurvatureField:
    """Antisymmetric curvature components on the grid.

    ``data[..., a, p]`` stores F^a_{mu,nu} for the p-th pair in
    CURVATURE_PAIRS; the (nu, mu) component is minus that entry.
    When built without time inputs only the spatial pairs are available.
    """

    grid: object
    data: np.ndarray
    has_time: bool

    def component(self, mu: int, nu: int) -> np.ndarray:
        if mu == nu:
            return np.zeros(self.data.shape[:4])
        sign = 1.0
        if mu > nu:
            mu, nu, sign = nu, mu, -1.0
        if mu == 0 and not self.has_time:
            raise DomainError("time components were not built (no dA/dt input)",
                              where="fields.curvature")
        p = CURVATURE_PAIRS.index((mu, nu))
        return sign * self.data[..., p]


def curvature(sc: StructureConstants, a: LatticeField,
              a0: ColorScalarField = None, dt_a: LatticeField = None) -> CurvatureField:
    """All independent F^k_{mu,nu} = (1/2)(d_nu A_mu - d_mu A_nu - g eps A_mu A_nu).

    Time derivatives of the spatial potential are single-time-slice data and
    must be supplied by the caller; ``a0`` defaults to zero only when ``dt_a``
    is given (temporal components need both).
    """
    grid = a.grid
    k = a.k
    d = _grad_all(a)  # [..., c, i, j] = d_j A_i^c
    out = np.zeros(a.data.shape[:3] + (k, 6))
    has_time = dt_a is not None
    if has_time:
        if a0 is None:
            a0 = ColorScalarField.zeros(grid, k)
        if dt_a.grid != grid or (a0.grid != grid):
            raise DomainError("time inputs on a different grid", where="fields.curvature")
        spec0 = _fft(a0.data)
        d_a0 = np.stack(
            [_ifft_real(_axis_multiplier(grid, j, 1) * spec0) for j in range(3)], axis=-1
        )  # [..., a, i] = d_i A_0^a
        for p, (_, nu) in enumerate(CURVATURE_PAIRS[:3]):
            i = nu - 1
            # F_{0,i} = (1/2)(d_i A_0 - d_t A_i - g eps A_0 A_i)
            quad = sc.g * np.einsum("kab,xyza,xyzb->xyzk", _EPS, a0.data,
                                    a.data[..., i])
            out[..., p] = 0.5 * (d_a0[..., i] - dt_a.data[..., i] - quad)
    for p, (mu, nu) in enumerate(CURVATURE_PAIRS[3:], start=3):
        i, j = mu - 1, nu - 1
        quad = sc.g * np.einsum("kab,xyza,xyzb->xyzk", _EPS, a.data[..., i],
                                a.data[..., j])
        # F_{i,j} = (1/2)(d_j A_i - d_i A_j - g eps A_i A_j)
        out[..., p] = 0.5 * (d[..., i, j] - d[..., j, i] - quad)
    return CurvatureField(grid, out, has_time)


def energy_density(sc: StructureConstants, a: LatticeField,
                   e: LatticeField) -> np.ndarray:
    """Pointwise (1/2)(E^2 + B^2), shape (N, N, N)."""
    b = chromomagnetic(sc, a)
    return 0.5 * ((e.data**2).sum(axis=(3, 4)) + (b.data**2).sum(axis=(3, 4)))
