"""Color algebra: Levi-Civita symbol, structure constants, spinor map.

Structure constants are kept in the epsilon form ``C^c_{ab} = g eps(a,b,c)``
of a simple Lie algebra written in a basis where the coupling constant g
is the single free parameter.  The desk default is three colors.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError

__all__ = [
    "levi_civita",
    "epsilon_tensor",
    "StructureConstants",
    "spinor_map",
    "minkowski_matrix",
    "MINKOWSKI_METRIC",
]

MINKOWSKI_METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


def levi_civita(a: int, b: int, c: int) -> int:
    """Sign of the permutation (1,2,3) -> (a,b,c); 0 on a repeated index.

    Indices are 1-based, matching the usual symbol.
    """
    for idx in (a, b, c):
        if idx not in (1, 2, 3):
            raise DomainError(f"index {idx} not in {{1,2,3}}", where="algebra.levi_civita")
    if a == b or b == c or a == c:
        return 0
    # even permutations of (1,2,3)
    return 1 if (a, b, c) in ((1, 2, 3), (2, 3, 1), (3, 1, 2)) else -1


def epsilon_tensor() -> np.ndarray:
    """The rank-3 Levi-Civita tensor as a (3,3,3) integer array (0-based)."""
    eps = np.zeros((3, 3, 3))
    for a in range(3):
        for b in range(3):
            for c in range(3):
                eps[a, b, c] = levi_civita(a + 1, b + 1, c + 1)
    return eps


@dataclass(frozen=True)
class StructureConstants:
    """Structure tensor C^c_{ab} = g * eps(a,b,c) with coupling g.

    ``tensor[a, b, c]`` holds C^c_{ab}.  Antisymmetry in (a, b) and the
    Jacobi identity are checked at construction.
    """

    g: float
    k: int = 3
    tensor: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.k != 3:
            raise DomainError(
                "only the three-color epsilon form is supported",
                where="algebra.StructureConstants",
            )
        if not np.isfinite(self.g) or self.g < 0:
            raise DomainError(f"coupling g={self.g} must be finite and >= 0",
                              where="algebra.StructureConstants")
        if self.tensor is None:
            object.__setattr__(self, "tensor", self.g * epsilon_tensor())
        self._validate()

    def _validate(self):
        t = self.tensor
        if not np.allclose(t, -np.swapaxes(t, 0, 1), atol=1e-14):
            raise DomainError("structure tensor not antisymmetric in (a,b)",
                              where="algebra.StructureConstants")
        # Jacobi: sum_e C^e_ab C^d_ec + C^e_bc C^d_ea + C^e_ca C^d_eb = 0
        jac = (
            np.einsum("abe,ecd->abcd", t, t)
            + np.einsum("bce,ead->abcd", t, t)
            + np.einsum("cae,ebd->abcd", t, t)
        )
        if np.abs(jac).max() > 1e-14 * max(1.0, self.g**2):
            raise DomainError("Jacobi identity violated", where="algebra.StructureConstants")

    def commutator(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """w_c = sum_ab C^c_{ab} u_a v_b."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != (self.k,) or v.shape != (self.k,):
            raise DomainError(
                f"color vectors must have length {self.k}, got {u.shape} and {v.shape}",
                where="algebra.commutator",
            )
        return np.einsum("abc,a,b->c", self.tensor, u, v)


def commutator(sc: StructureConstants, u, v) -> np.ndarray:
    """Functional form of :meth:`StructureConstants.commutator`."""
    return sc.commutator(u, v)


def minkowski_matrix(x: np.ndarray) -> np.ndarray:
    """Map a real 4-vector to the Hermitian 2x2 matrix X(x)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise DomainError("expected a 4-vector", where="algebra.minkowski_matrix")
    x0, x1, x2, x3 = x
    return np.array(
        [[x0 + x3, x1 - 1j * x2],
         [x1 + 1j * x2, x0 - x3]],
        dtype=complex,
    )


def _matrix_to_vector(h: np.ndarray) -> np.ndarray:
    """Inverse of :func:`minkowski_matrix` on Hermitian matrices."""
    x0 = 0.5 * (h[0, 0] + h[1, 1]).real
    x3 = 0.5 * (h[0, 0] - h[1, 1]).real
    x1 = h[1, 0].real
    x2 = h[1, 0].imag
    return np.array([x0, x1, x2, x3])


def spinor_map(p: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """The proper orthochronous Lorentz matrix induced by P in SL(2,C).

    Defined by X(Lx) = P X(x) P* for every 4-vector x; evaluated column
    by column on the basis vectors.
    """
    p = np.asarray(p, dtype=complex)
    if p.shape != (2, 2):
        raise DomainError("expected a 2x2 complex matrix", where="algebra.spinor_map")
    det = np.linalg.det(p)
    if abs(det - 1.0) > tol:
        raise DomainError(f"det P = {det} differs from 1 beyond tol={tol}",
                          where="algebra.spinor_map")
    lam = np.empty((4, 4))
    for nu in range(4):
        e = np.zeros(4)
        e[nu] = 1.0
        lam[:, nu] = _matrix_to_vector(p @ minkowski_matrix(e) @ p.conj().T)
    # sanity: the image must be proper orthochronous
    defect = lam.T @ MINKOWSKI_METRIC @ lam - MINKOWSKI_METRIC
    if np.abs(defect).max() > 1e-10 or np.linalg.det(lam) < 0 or lam[0, 0] < 1 - 1e-12:
        raise NumericalError("image is not proper orthochronous",
                             where="algebra.spinor_map",
                             residual=float(np.abs(defect).max()))
    return lam
