"""Green's functions for the gauge-fixing operator.

Everything here inverts the positive operator M = -L = -Lap - g eps A.grad,
whose Green's function carries the conventional positive short-range kernel
(the periodic analogue of 1/(4 pi |x-y|)); at g = 0 it reduces exactly to
``free_green_apply``.  A modified Green's function satisfies

    M G = G M = I - P_ker

with P_ker the projector onto ker(M) = ker(L) (on the torus: the constant
field per color, plus any accidental zero modes).

Two methods:

* ``born``: partial sums of the iterated-kernel series
  sum_j (G0 P)^j G0 with P = g eps A.grad, realized by the operator
  recursion u_{m+1} = G0 f + G0 (P u_m).  Applying M to the m-th partial
  sum telescopes to (I - P_ker) - P (G0 P)^m G0, so the defect decays like
  g^{m+1} for g < 1.  The result is symmetrized (half sum with the
  adjoint-ordered composition) and sandwiched between kernel projectors.
* ``pseudoinverse``: dense eigendecomposition of M with the near-zero
  eigenvalues excluded; the small-grid oracle.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .algebra import StructureConstants
from .errors import CapacityError, DomainError
from .faddeev_popov import DENSE_CAP, FaddeevPopovOperator, assemble, kernel_basis
from .lattice import (
    ColorScalarField,
    LatticeField,
    _fft,
    _ifft_real,
    _tables,
)

__all__ = [
    "free_green_apply",
    "born_apply",
    "BornSeriesReport",
    "GreensOperator",
    "modified_green",
    "green_point_kernel",
    "modified_green_defect",
]


def _free_green_array(grid, data: np.ndarray) -> np.ndarray:
    p2 = _tables(grid.n, grid.box)["p2_full"]
    spec = _fft(data)
    safe = np.where(p2 == 0.0, 1.0, p2)
    out = spec / safe[..., None]
    out[0, 0, 0, ...] = 0.0  # zero-mean convention per color
    return _ifft_real(out)


def free_green_apply(f: ColorScalarField) -> ColorScalarField:
    """Solve Lap u = -f spectrally; the p = 0 mode of u is set to zero.

    Equivalently convolution with the periodic Laplacian Green's function.
    """
    return ColorScalarField(f.grid, _free_green_array(f.grid, f.data))


def _perturbation(op: FaddeevPopovOperator, data: np.ndarray) -> np.ndarray:
    """g eps^{acb} A_k^c d_k f^b with the dealiased product, as in L."""
    grid = op.grid
    p2 = _tables(grid.n, grid.box)["p2_full"]
    lap = _ifft_real(-p2[..., None] * _fft(data))
    return op.apply_array(data) - lap


def _constants_kernel(grid, k: int) -> list:
    fields = []
    for a in range(k):
        data = np.zeros((grid.n, grid.n, grid.n, k))
        data[..., a] = 1.0 / np.sqrt(grid.box**3)
        fields.append(data)
    return fields


def _project_out(grid, data: np.ndarray, kernel: list) -> np.ndarray:
    h3 = grid.spacing**3
    out = data
    for psi in kernel:
        out = out - (np.vdot(psi, out) * h3) * psi
    return out


@dataclass
class BornSeriesReport:
    """Per-order defect norms r_m = ||M K_m - (I - P_ker)||_probe."""

    n_terms: int
    g: float
    residuals: np.ndarray
    fitted_decay_rate: float

    def decay_ratio(self) -> float:
        """exp(fitted rate), the empirical geometric ratio."""
        return float(np.exp(self.fitted_decay_rate))


def _fit_decay(residuals: np.ndarray) -> float:
    # slope of log r_m over m >= 1; nan when the series has bottomed out
    usable = residuals[1:]
    if len(usable) < 2 or np.any(usable <= 1e-14 * max(residuals[0], 1e-300)):
        return float("nan")
    m = np.arange(1, len(residuals))
    return float(np.polyfit(m, np.log(usable), 1)[0])


def _born_partial_sums(op: FaddeevPopovOperator, data: np.ndarray, n_terms: int):
    """Forward recursion; yields the partial sums K_0 f .. K_n f."""
    grid = op.grid
    g0f = _free_green_array(grid, data)
    term = g0f
    acc = term.copy()
    yield acc.copy()
    for _ in range(n_terms):
        term = _free_green_array(grid, _perturbation(op, term))
        acc += term
        yield acc.copy()


def born_apply(sc: StructureConstants, a: LatticeField, f: ColorScalarField,
               n_terms: int, *, kernel: list = None):
    """Iterated-kernel solve K_n f with per-order defect tracking.

    Requires g < 1 (the series hypothesis) and transverse A.  Returns
    (ColorScalarField, BornSeriesReport).
    """
    if not (0.0 <= sc.g < 1.0):
        raise DomainError(f"series requires 0 <= g < 1, got g={sc.g}",
                          where="greens.born_apply")
    op = assemble(sc, a)
    if f.grid != a.grid or f.k != sc.k:
        raise DomainError("source shape does not match operator", where="greens.born_apply")
    if kernel is None:
        kernel = _constants_kernel(a.grid, sc.k)
    target = _project_out(a.grid, f.data, kernel)
    fnorm = max(np.linalg.norm(f.data), 1e-300)
    residuals = []
    final = None
    for acc in _born_partial_sums(op, f.data, n_terms):
        defect = -op.apply_array(acc) - target  # M K_m f - (I - P_ker) f
        residuals.append(np.linalg.norm(defect) / fnorm)
        final = acc
    residuals = np.array(residuals)
    report = BornSeriesReport(n_terms, sc.g, residuals, _fit_decay(residuals))
    return ColorScalarField(a.grid, final), report


@dataclass
class GreensOperator:
    """Applicable modified Green's function of M = -L."""

    method: str
    op: FaddeevPopovOperator
    n_terms: int
    kernel: list = dc_field(repr=False, default=None)
    _evals: np.ndarray = dc_field(default=None, repr=False)
    _evecs: np.ndarray = dc_field(default=None, repr=False)

    @property
    def grid(self):
        return self.op.grid

    @property
    def sc(self):
        return self.op.sc

    def apply_array(self, data: np.ndarray) -> np.ndarray:
        grid = self.grid
        if self.method == "pseudoinverse":
            vec = data.reshape(-1)
            coeff = self._evecs.T @ vec
            nonzero = self._evals != 0.0
            coeff = np.where(nonzero, coeff / np.where(nonzero, self._evals, 1.0), 0.0)
            return (self._evecs @ coeff).reshape(data.shape)
        src = _project_out(grid, data, self.kernel)
        fwd = None
        for fwd in _born_partial_sums(self.op, src, self.n_terms):
            pass
        adj = self._adjoint_sum(src)
        out = 0.5 * (fwd + adj)
        return _project_out(grid, out, self.kernel)

    def _adjoint_sum(self, data: np.ndarray) -> np.ndarray:
        # sum_j G0 (P G0)^j f, the adjoint-ordered composition
        grid = self.grid
        w = data
        acc = _free_green_array(grid, w)
        for _ in range(self.n_terms):
            w = _perturbation(self.op, _free_green_array(grid, w))
            acc += _free_green_array(grid, w)
        return acc

    def apply(self, f: ColorScalarField) -> ColorScalarField:
        if f.grid != self.grid or f.k != self.sc.k:
            raise DomainError("field shape does not match operator", where="greens.apply")
        return ColorScalarField(self.grid, self.apply_array(f.data))

    def kernel_projector_apply(self, data: np.ndarray) -> np.ndarray:
        return data - _project_out(self.grid, data, self.kernel)

    def point_kernel_columns(self, y0) -> np.ndarray:
        """G(x, y0) for all x; shape (N, N, N, K, K), last axis = source color."""
        grid = self.grid
        k = self.sc.k
        h3 = grid.spacing**3
        cols = np.empty((grid.n, grid.n, grid.n, k, k))
        for d in range(k):
            src = np.zeros((grid.n, grid.n, grid.n, k))
            src[y0[0], y0[1], y0[2], d] = 1.0 / h3  # lattice delta
            cols[..., d] = self.apply_array(src)
        return cols


def modified_green(sc: StructureConstants, a: LatticeField, method: str = "born",
                   *, n_terms: int = 6, kernel_mode: str = "constants",
                   zero_tol: float = None, gauge_tol: float = None) -> GreensOperator:
    """Construct a modified Green's function for M = -L.

    ``kernel_mode="constants"`` takes the torus kernel (constant fields);
    ``"detect"`` solves for near-zero modes to catch accidental kernel.
    """
    if gauge_tol is None:
        op = assemble(sc, a)
    else:
        op = assemble(sc, a, gauge_tol=gauge_tol)
    if method == "born" and not (0.0 <= sc.g < 1.0):
        raise DomainError(f"series requires 0 <= g < 1, got g={sc.g}",
                          where="greens.modified_green")
    if method == "pseudoinverse":
        if op.dim > DENSE_CAP:
            raise CapacityError(
                f"pseudoinverse needs N^3*K <= {DENSE_CAP}, got {op.dim}",
                where="greens.modified_green",
            )
        m_dense = -op.dense()
        m_dense = 0.5 * (m_dense + m_dense.T)
        vals, vecs = np.linalg.eigh(m_dense)
        if zero_tol is None:
            zero_tol = 1e-6 * op.norm_estimate()
        inv = np.where(np.abs(vals) < zero_tol, 0.0, vals)
        kernel = [
            vecs[:, i].reshape(a.grid.n, a.grid.n, a.grid.n, sc.k)
            / np.sqrt(a.grid.spacing**3)
            for i in np.nonzero(np.abs(vals) < zero_tol)[0]
        ]
        return GreensOperator("pseudoinverse", op, 0, kernel, inv, vecs)
    if method != "born":
        raise DomainError(f"unknown method {method!r}", where="greens.modified_green")
    if kernel_mode == "detect":
        basis = kernel_basis(op, zero_tol)
        kernel = [fld.data for fld in basis.eigenvectors]
    elif kernel_mode == "constants":
        kernel = _constants_kernel(a.grid, sc.k)
    else:
        raise DomainError(f"unknown kernel_mode {kernel_mode!r}",
                          where="greens.modified_green")
    return GreensOperator("born", op, n_terms, kernel)


def green_point_kernel(gop: GreensOperator, x0, y0) -> np.ndarray:
    """K x K matrix G^{ab}(x0, y0) extracted from delta sources at y0."""
    grid = gop.grid
    for site in (x0, y0):
        if len(site) != 3 or any(not (0 <= c < grid.n) for c in site):
            raise DomainError(f"site {site} outside the grid",
                              where="greens.green_point_kernel")
    cols = gop.point_kernel_columns(tuple(y0))
    return cols[x0[0], x0[1], x0[2], :, :].copy()


def modified_green_defect(gop: GreensOperator, *, n_probes: int = 5,
                          seed: int = 99) -> float:
    """max_f ||M G f - (I - P_ker) f|| / ||f|| over random probes."""
    rng = np.random.Generator(np.random.Philox(seed))
    grid, k = gop.grid, gop.sc.k
    worst = 0.0
    for _ in range(n_probes):
        f = rng.standard_normal((grid.n, grid.n, grid.n, k))
        target = _project_out(grid, f, gop.kernel)
        lhs = -gop.op.apply_array(gop.apply_array(f))
        worst = max(worst, np.linalg.norm(lhs - target) / np.linalg.norm(f))
    return float(worst)
