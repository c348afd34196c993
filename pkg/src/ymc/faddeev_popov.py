"""The gauge-fixing operator L^{ab} = delta^{ab} Lap + g eps^{acb} A_k^c d_k.

L is symmetric under the discrete L2 pairing exactly when A is transverse.
The multiplication by A inside the first-order term is spectrally dealiased
(2/3 rule, see lattice.dealias): without it, products of grid functions
alias across the Nyquist boundary and inject an O(g) asymmetry even for
perfectly transverse A.

The iterative spectrum path is shift-invert: eigenvalues nearest zero are
extracted with a small positive shift (L - sigma is then negative definite)
and conjugate-gradient inner solves preconditioned by the free inverse
Laplacian.  The dense path materializes L column by column and is meant as
the small-grid oracle.
"""

import inspect
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse.linalg as spla

from .algebra import StructureConstants, epsilon_tensor
from .errors import CapacityError, DomainError, GaugeError, NumericalError
from .lattice import (
    ColorScalarField,
    Grid,
    LatticeField,
    _axis_multiplier,
    _fft,
    _ifft_real,
    _tables,
    coulomb_residual,
    dealias,
    l2_inner,
)

__all__ = [
    "FaddeevPopovOperator",
    "assemble",
    "SpectralSlice",
    "low_spectrum",
    "kernel_basis",
    "DENSE_CAP",
    "GAUGE_TOL",
    "EIG_TOL",
]

_EPS = epsilon_tensor()

DENSE_CAP = 4096       # largest N^3*K materialized densely
GAUGE_TOL = 1e-8
EIG_TOL = 1e-8

_CG_TOL_KW = "rtol" if "rtol" in inspect.signature(spla.cg).parameters else "tol"


@dataclass
class FaddeevPopovOperator:
    """Matrix-free operator on color-scalar lattice functions."""

    sc: StructureConstants
    a: LatticeField
    gauge_tol: float = GAUGE_TOL
    _a_smooth: np.ndarray = dc_field(default=None, repr=False)

    def __post_init__(self):
        if self.a.k != self.sc.k:
            raise DomainError("color count mismatch", where="faddeev_popov.assemble")
        res = coulomb_residual(self.a)
        if res > self.gauge_tol:
            raise GaugeError(
                f"A is not transverse: residual {res:.3e} > {self.gauge_tol:.1e}",
                where="faddeev_popov.assemble",
            )
        self._a_smooth = dealias(self.a.grid, self.a.data)

    @property
    def grid(self) -> Grid:
        return self.a.grid

    @property
    def dim(self) -> int:
        return self.grid.sites * self.sc.k

    def apply_array(self, data: np.ndarray) -> np.ndarray:
        """L applied to raw (N,N,N,K) data."""
        grid = self.grid
        spec = _fft(data)
        p2 = _tables(grid.n, grid.box)["p2_full"]
        lap = _ifft_real(-p2[..., None] * spec)
        if self.sc.g == 0.0:
            return lap
        smooth = dealias(grid, data)
        spec_s = _fft(smooth)
        df = np.stack(
            [_ifft_real(_axis_multiplier(grid, j, 1) * spec_s) for j in range(3)],
            axis=-1,
        )
        pert = self.sc.g * np.einsum("acb,xyzck,xyzbk->xyza", _EPS, self._a_smooth, df)
        return lap + dealias(grid, pert)

    def apply(self, f: ColorScalarField) -> ColorScalarField:
        if f.grid != self.grid or f.k != self.sc.k:
            raise DomainError("field shape does not match operator",
                              where="faddeev_popov.apply")
        return ColorScalarField(self.grid, self.apply_array(f.data))

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        n, k = self.grid.n, self.sc.k
        return self.apply_array(vec.reshape(n, n, n, k)).reshape(-1)

    def dense(self) -> np.ndarray:
        """Column-by-column materialization; oracle for small grids."""
        if self.dim > DENSE_CAP:
            raise CapacityError(
                f"dense materialization needs N^3*K <= {DENSE_CAP}, got {self.dim}",
                where="faddeev_popov.dense",
            )
        out = np.empty((self.dim, self.dim))
        e = np.zeros(self.dim)
        for i in range(self.dim):
            e[i] = 1.0
            out[:, i] = self.matvec(e)
            e[i] = 0.0
        return out

    def norm_estimate(self) -> float:
        """Cheap upper bound on ||L||."""
        grid = self.grid
        p2max = float(_tables(grid.n, grid.box)["p2_full"].max())
        mmax = float(np.abs(_tables(grid.n, grid.box)["m_first"]).max())
        amax = float(np.abs(self._a_smooth).max())
        return p2max + 3.0 * self.sc.g * amax * mmax


def assemble(sc: StructureConstants, a: LatticeField,
             gauge_tol: float = GAUGE_TOL) -> FaddeevPopovOperator:
    """Build the operator after checking the Coulomb-gauge precondition."""
    return FaddeevPopovOperator(sc, a, gauge_tol)


@dataclass
class SpectralSlice:
    """Eigenpairs with per-pair residuals; vectors orthonormal under l2_inner."""

    eigenvalues: np.ndarray
    eigenvectors: list
    residuals: np.ndarray
    which: str


def _as_fields(op: FaddeevPopovOperator, vecs: np.ndarray) -> list:
    n, k = op.grid.n, op.sc.k
    h3 = op.grid.spacing**3
    out = []
    for col in vecs.T:
        data = col.reshape(n, n, n, k) / np.sqrt(h3)  # unit l2_inner norm
        out.append(ColorScalarField(op.grid, data))
    return out


def _residuals(op: FaddeevPopovOperator, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    res = np.empty(len(vals))
    for i, lam in enumerate(vals):
        v = vecs[:, i]
        res[i] = np.linalg.norm(op.matvec(v) - lam * v) / np.linalg.norm(v)
    return res


def low_spectrum(op: FaddeevPopovOperator, m: int, *, seed: int = 1234,
                 eig_tol: float = EIG_TOL, maxiter: int = 5000) -> SpectralSlice:
    """m eigenpairs of L nearest zero.

    Shift-invert with sigma slightly above the top of the spectrum; inner
    solves are CG on (sigma - L), which is positive definite, preconditioned
    with the free (sigma - Lap)^{-1} multiplier.
    """
    dim = op.dim
    if m < 1 or m > dim:
        raise DomainError(f"m={m} outside 1..{dim}", where="faddeev_popov.low_spectrum")
    if m > dim - 2:
        # ARPACK needs k < dim-1; fall back to the dense path
        dense = op.dense()
        vals, vecs = np.linalg.eigh(dense)
        order = np.argsort(np.abs(vals))[:m]
        order = order[np.argsort(vals[order])]
        vals, vecs = vals[order], vecs[:, order]
        res = _residuals(op, vals, vecs)
        return SpectralSlice(vals, _as_fields(op, vecs), res, "lowest-m")

    grid = op.grid
    sigma = 0.6 * (2.0 * np.pi / grid.box) ** 2
    p2 = _tables(grid.n, grid.box)["p2_full"]
    precond_mult = 1.0 / (sigma + p2)

    def shifted(vec):
        return sigma * vec - op.matvec(vec)  # positive definite

    def precond(vec):
        n, k = grid.n, op.sc.k
        spec = _fft(vec.reshape(n, n, n, k))
        return _ifft_real(precond_mult[..., None] * spec).reshape(-1)

    a_lin = spla.LinearOperator((dim, dim), matvec=op.matvec, dtype=float)
    shifted_lin = spla.LinearOperator((dim, dim), matvec=shifted, dtype=float)
    m_lin = spla.LinearOperator((dim, dim), matvec=precond, dtype=float)

    def opinv(vec):
        sol, info = spla.cg(shifted_lin, -np.asarray(vec, dtype=float),
                            M=m_lin, maxiter=maxiter, **{_CG_TOL_KW: 1e-12})
        if info != 0:
            raise NumericalError("inner CG solve did not converge",
                                 where="faddeev_popov.low_spectrum", residual=float(info))
        return sol  # (L - sigma)^{-1} vec

    opinv_lin = spla.LinearOperator((dim, dim), matvec=opinv, dtype=float)
    rng = np.random.Generator(np.random.Philox(seed))
    v0 = rng.standard_normal(dim)
    try:
        vals, vecs = spla.eigsh(a_lin, k=m, sigma=sigma, which="LM",
                                OPinv=opinv_lin, v0=v0, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise NumericalError(f"eigensolver stalled: {exc}",
                             where="faddeev_popov.low_spectrum") from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    res = _residuals(op, vals, vecs)
    if res.max() > eig_tol:
        raise NumericalError("eigenpair residual exceeds tolerance",
                             where="faddeev_popov.low_spectrum",
                             residual=float(res.max()))
    return SpectralSlice(vals, _as_fields(op, vecs), res, "lowest-m")


def kernel_basis(op: FaddeevPopovOperator, zero_tol: float = None, *,
                 extra: int = 4, seed: int = 1234) -> SpectralSlice:
    """Orthonormal basis of the near-kernel (|lambda| < zero_tol).

    On the torus the K constant fields are always present; ``extra`` more
    candidates are solved for to catch accidental zero modes.
    """
    if zero_tol is None:
        zero_tol = 1e-6 * op.norm_estimate()
    m = min(op.sc.k + extra, op.dim)
    sl = low_spectrum(op, m, seed=seed)
    mask = np.abs(sl.eigenvalues) < zero_tol
    vals = sl.eigenvalues[mask]
    fields = [f for f, keep in zip(sl.eigenvectors, mask) if keep]
    # safety re-orthonormalization under l2_inner
    ortho = []
    for f in fields:
        data = f.data.copy()
        for g in ortho:
            data -= l2_inner(ColorScalarField(op.grid, data), g) * g.data
        nrm = np.sqrt((data**2).sum() * op.grid.spacing**3)
        if nrm > 1e-12:
            ortho.append(ColorScalarField(op.grid, data / nrm))
    res = np.array([
        np.linalg.norm(op.apply_array(f.data)) / max(np.linalg.norm(f.data), 1e-300)
        for f in ortho
    ])
    return SpectralSlice(vals[: len(ortho)], ortho, res, "near-zero")
