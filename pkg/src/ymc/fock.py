"""Truncated bosonic Fock space over a finite one-particle space.

States live in the occupation-number basis: sector n enumerates the
multi-indices (n_1, ..., n_d) with sum n in ascending lexicographic order.
The one-particle inner product is sesquilinear with the conjugation on the
first slot, so the annihilator a(f) = sum_j conj(f_j) a_j is antilinear in
f while its adjoint a(f)* is linear, and

    [a(f), a(g)*] = (f, g) I,
    [Phi_S(f), Phi_S(g)] = i Im(f, g)   for the Segal field
    Phi_S(f) = (a(f) + a(f)*) / sqrt(2).

Truncation semantics: creating out of the top sector discards the overflow
and sets the ``truncated`` flag on the result; identity checks should stay
away from the top sectors.

Dense tensors (symmetrizer, tensor-power compressions) appear only at desk
scale and are guarded by a capacity cap.
"""

import itertools
import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError
from .lattice import Grid, LatticeField, transverse_project

__all__ = [
    "OneParticleSpace",
    "occupation_basis",
    "sector_dim",
    "FockVector",
    "annihilate",
    "create",
    "segal_field",
    "segal_matrix",
    "number_expectation",
    "symmetrize",
    "antisymmetrize",
    "symmetric_embedding",
    "SecondQuantizedOperator",
    "dgamma",
    "gamma",
    "dgamma_spectrum",
    "smeared_field_vector",
    "fock_check",
    "TENSOR_CAP",
]

TENSOR_CAP = 2_000_000  # largest dense d**n tensor size


@dataclass(frozen=True)
class OneParticleSpace:
    """d-dimensional complex one-particle space, conjugate-first pairing."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("dimension must be >= 1", where="fock.OneParticleSpace")

    def inner(self, f, g) -> complex:
        return complex(np.vdot(np.asarray(f), np.asarray(g)))


@lru_cache(maxsize=512)
def occupation_basis(d: int, n: int):
    """Occupation tuples of sector n in ascending lexicographic order."""
    if n == 0:
        return ((0,) * d,)
    out = []
    for combo in itertools.combinations_with_replacement(range(d), n):
        occ = [0] * d
        for j in combo:
            occ[j] += 1
        out.append(tuple(occ))
    return tuple(sorted(out))


@lru_cache(maxsize=512)
def _basis_index(d: int, n: int):
    return {occ: i for i, occ in enumerate(occupation_basis(d, n))}


def sector_dim(d: int, n: int) -> int:
    return math.comb(n + d - 1, d - 1)


@dataclass
class FockVector:
    """Coefficients over the occupation basis, sectors 0..n_max."""

    d: int
    n_max: int
    sectors: list
    truncated: bool = False

    def __post_init__(self):
        if len(self.sectors) != self.n_max + 1:
            raise DomainError("sector list length must be n_max + 1",
                              where="fock.FockVector")
        self.sectors = [np.asarray(s, dtype=complex) for s in self.sectors]
        for n, s in enumerate(self.sectors):
            if s.shape != (sector_dim(self.d, n),):
                raise DomainError(f"sector {n} has wrong dimension {s.shape}",
                                  where="fock.FockVector")

    @classmethod
    def zeros(cls, d: int, n_max: int) -> "FockVector":
        return cls(d, n_max, [np.zeros(sector_dim(d, n), dtype=complex)
                              for n in range(n_max + 1)])

    @classmethod
    def vacuum(cls, d: int, n_max: int) -> "FockVector":
        v = cls.zeros(d, n_max)
        v.sectors[0][0] = 1.0
        return v

    @classmethod
    def one_particle(cls, f, n_max: int) -> "FockVector":
        f = np.asarray(f, dtype=complex)
        v = cls.zeros(len(f), n_max)
        basis = occupation_basis(len(f), 1)
        for i, occ in enumerate(basis):
            v.sectors[1][i] = f[occ.index(1)]
        return v

    def copy(self) -> "FockVector":
        return FockVector(self.d, self.n_max, [s.copy() for s in self.sectors],
                          self.truncated)

    def inner(self, other: "FockVector") -> complex:
        self._compatible(other)
        return complex(sum(np.vdot(a, b) for a, b in zip(self.sectors, other.sectors)))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def _compatible(self, other):
        if self.d != other.d or self.n_max != other.n_max:
            raise DomainError("incompatible Fock vectors", where="fock.FockVector")

    def __add__(self, other):
        self._compatible(other)
        return FockVector(self.d, self.n_max,
                          [a + b for a, b in zip(self.sectors, other.sectors)],
                          self.truncated or other.truncated)

    def __sub__(self, other):
        self._compatible(other)
        return FockVector(self.d, self.n_max,
                          [a - b for a, b in zip(self.sectors, other.sectors)],
                          self.truncated or other.truncated)

    def __mul__(self, scalar):
        return FockVector(self.d, self.n_max,
                          [scalar * s for s in self.sectors], self.truncated)

    __rmul__ = __mul__

    def concat(self) -> np.ndarray:
        return np.concatenate(self.sectors)


@lru_cache(maxsize=2048)
def _ladder_down(d: int, n: int, j: int) -> np.ndarray:
    """Matrix of a_j from sector n to sector n-1."""
    src = occupation_basis(d, n)
    dst_index = _basis_index(d, n - 1)
    out = np.zeros((sector_dim(d, n - 1), sector_dim(d, n)))
    for col, occ in enumerate(src):
        if occ[j] == 0:
            continue
        lower = list(occ)
        lower[j] -= 1
        out[dst_index[tuple(lower)], col] = math.sqrt(occ[j])
    return out


def _annihilator_block(f: np.ndarray, n: int) -> np.ndarray:
    """a(f) = sum_j conj(f_j) a_j from sector n to n-1."""
    d = len(f)
    out = np.zeros((sector_dim(d, n - 1), sector_dim(d, n)), dtype=complex)
    for j in range(d):
        if f[j] != 0:
            out += np.conj(f[j]) * _ladder_down(d, n, j)
    return out


def annihilate(f, v: FockVector) -> FockVector:
    """Apply a(f); the vacuum sector maps to nothing."""
    f = np.asarray(f, dtype=complex)
    if len(f) != v.d:
        raise DomainError("one-particle vector has wrong dimension",
                          where="fock.annihilate")
    out = FockVector.zeros(v.d, v.n_max)
    out.truncated = v.truncated
    for n in range(1, v.n_max + 1):
        out.sectors[n - 1] += _annihilator_block(f, n) @ v.sectors[n]
    return out


def create(f, v: FockVector) -> FockVector:
    """Apply a(f)*; contributions past the top sector are dropped and flagged."""
    f = np.asarray(f, dtype=complex)
    if len(f) != v.d:
        raise DomainError("one-particle vector has wrong dimension", where="fock.create")
    out = FockVector.zeros(v.d, v.n_max)
    out.truncated = v.truncated
    for n in range(v.n_max):
        out.sectors[n + 1] += _annihilator_block(f, n + 1).conj().T @ v.sectors[n]
    if np.linalg.norm(v.sectors[v.n_max]) > 0:
        out.truncated = True
    return out


def segal_field(f, v: FockVector) -> FockVector:
    """Phi_S(f) v = (a(f) + a(f)*) v / sqrt(2); real-linear in f."""
    return (annihilate(f, v) + create(f, v)) * (1.0 / math.sqrt(2.0))


def number_expectation(v: FockVector) -> float:
    total = sum(n * np.vdot(s, s).real for n, s in enumerate(v.sectors))
    return float(total / max(v.norm() ** 2, 1e-300))


def segal_matrix(f, n_max: int) -> np.ndarray:
    """Dense matrix of Phi_S(f) over the concatenated sector basis."""
    f = np.asarray(f, dtype=complex)
    d = len(f)
    dims = [sector_dim(d, n) for n in range(n_max + 1)]
    offsets = np.concatenate([[0], np.cumsum(dims)])
    total = offsets[-1]
    out = np.zeros((total, total), dtype=complex)
    for n in range(1, n_max + 1):
        blk = _annihilator_block(f, n) / math.sqrt(2.0)
        r0, r1 = offsets[n - 1], offsets[n]
        c0, c1 = offsets[n], offsets[n + 1]
        out[r0:r1, c0:c1] += blk
        out[c0:c1, r0:r1] += blk.conj().T
    return out


def _check_tensor_capacity(d: int, n: int, where: str):
    if d**n > TENSOR_CAP:
        raise CapacityError(f"dense tensor of size {d}**{n} exceeds cap", where=where)


def symmetrize(tensor: np.ndarray) -> np.ndarray:
    """Average over all axis permutations; the projector S_n."""
    n = tensor.ndim
    d = tensor.shape[0]
    if any(s != d for s in tensor.shape):
        raise DomainError("tensor axes must have equal length", where="fock.symmetrize")
    _check_tensor_capacity(d, n, "fock.symmetrize")
    out = np.zeros_like(tensor, dtype=complex)
    for perm in itertools.permutations(range(n)):
        out += np.transpose(tensor, perm)
    return out / math.factorial(n)


def antisymmetrize(tensor: np.ndarray) -> np.ndarray:
    """Signed average over axis permutations; the projector A_n."""
    n = tensor.ndim
    d = tensor.shape[0]
    if any(s != d for s in tensor.shape):
        raise DomainError("tensor axes must have equal length",
                          where="fock.antisymmetrize")
    _check_tensor_capacity(d, n, "fock.antisymmetrize")
    out = np.zeros_like(tensor, dtype=complex)
    for perm in itertools.permutations(range(n)):
        sign = 1.0
        seen = list(perm)
        # parity via cycle count
        visited = [False] * n
        for i in range(n):
            if visited[i]:
                continue
            j, length = i, 0
            while not visited[j]:
                visited[j] = True
                j = seen[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
        out += sign * np.transpose(tensor, perm)
    return out / math.factorial(n)


@lru_cache(maxsize=64)
def symmetric_embedding(d: int, n: int) -> np.ndarray:
    """Isometry from sector n into the full tensor power, shape (d**n, dim).

    Column for occupation (n_1..n_d) is the normalized symmetrization of
    e_1^{n_1} x ... x e_d^{n_d}.
    """
    _check_tensor_capacity(d, n, "fock.symmetric_embedding")
    basis = occupation_basis(d, n)
    out = np.zeros((d**n, len(basis)))
    if n == 0:
        out[0, 0] = 1.0
        return out
    for col, occ in enumerate(basis):
        slots = []
        for j, cnt in enumerate(occ):
            slots.extend([j] * cnt)
        weight = math.sqrt(
            math.factorial(n) / np.prod([math.factorial(c) for c in occ])
        )
        seen = set()
        for perm in itertools.permutations(slots):
            if perm in seen:
                continue
            seen.add(perm)
            flat = 0
            for j in perm:
                flat = flat * d + j
            out[flat, col] = 1.0
        out[:, col] *= weight / len(seen)
        # normalization: sqrt(multinomial) * (1/multinomial) * count = 1/sqrt(mult)
    return out


@dataclass
class SecondQuantizedOperator:
    """Sector-wise dense matrices of a lifted one-particle operator."""

    kind: str
    d: int
    n_max: int
    sector_matrices: list = dc_field(repr=False, default=None)

    def apply(self, v: FockVector) -> FockVector:
        if v.d != self.d or v.n_max != self.n_max:
            raise DomainError("vector does not match operator",
                              where="fock.SecondQuantizedOperator")
        out = FockVector.zeros(self.d, self.n_max)
        out.truncated = v.truncated
        for n, mat in enumerate(self.sector_matrices):
            out.sectors[n] = mat @ v.sectors[n]
        return out


def dgamma(a: np.ndarray, n_max: int) -> SecondQuantizedOperator:
    """Particle-wise lift of a self-adjoint one-particle operator.

    Sector n carries sum_{j,k} a_{jk} adag_j a_k; with a = I this is the
    number operator.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    if a.shape != (d, d):
        raise DomainError("operator must be square", where="fock.dgamma")
    if np.abs(a - a.conj().T).max() > 1e-12:
        raise DomainError("operator is not self-adjoint", where="fock.dgamma")
    mats = [np.zeros((1, 1), dtype=complex)]
    for n in range(1, n_max + 1):
        blk = np.zeros((sector_dim(d, n), sector_dim(d, n)), dtype=complex)
        for j in range(d):
            down_j = _ladder_down(d, n, j)
            for k in range(d):
                if a[j, k] == 0:
                    continue
                blk += a[j, k] * (down_j.T @ _ladder_down(d, n, k))
        mats.append(blk)
    return SecondQuantizedOperator("dGamma", d, n_max, mats)


def gamma(u: np.ndarray, n_max: int) -> SecondQuantizedOperator:
    """Sector-wise tensor power of a unitary, compressed to symmetric states."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if u.shape != (d, d):
        raise DomainError("operator must be square", where="fock.gamma")
    if np.abs(u @ u.conj().T - np.eye(d)).max() > 1e-12:
        raise DomainError("operator is not unitary", where="fock.gamma")
    mats = [np.ones((1, 1), dtype=complex)]
    for n in range(1, n_max + 1):
        emb = symmetric_embedding(d, n).astype(complex)
        dim = emb.shape[1]
        moved = emb
        for axis in range(n):
            moved = moved.reshape(d**axis, d, d ** (n - 1 - axis), dim)
            moved = np.einsum("ab,xbyc->xayc", u, moved)
        moved = moved.reshape(d**n, dim)
        mats.append(emb.T @ moved)
    return SecondQuantizedOperator("Gamma", d, n_max, mats)


def dgamma_spectrum(a: np.ndarray, n: int) -> np.ndarray:
    """Sector-n spectrum: all n-fold multiset sums of the eigenvalues of a."""
    a = np.asarray(a, dtype=complex)
    if np.abs(a - a.conj().T).max() > 1e-12:
        raise DomainError("operator is not self-adjoint", where="fock.dgamma_spectrum")
    lam = np.linalg.eigvalsh(a)
    if n == 0:
        return np.array([0.0])
    sums = [sum(c) for c in itertools.combinations_with_replacement(lam, n)]
    return np.sort(np.array(sums))


def smeared_field_vector(grid: Grid, phi: np.ndarray, mu: int, a: int, k: int,
                         *, project: bool = True) -> np.ndarray:
    """Representing vector of the smeared-field functional on the lattice.

    The one-particle surrogate is C^(4*K*N^3) with layout (mu, color, site);
    the test function lands in slot (mu, a), spatial components are
    transversally projected unless ``project=False``, and the quadrature
    weight spacing^3 is folded in so plain vdot realizes the pairing.
    """
    phi = np.asarray(phi, dtype=complex)
    n = grid.n
    if phi.shape != (n, n, n):
        raise DomainError(f"test function must be sampled on the {n}^3 grid",
                          where="fock.smeared_field_vector")
    if mu not in (0, 1, 2, 3):
        raise DomainError("mu must be in 0..3", where="fock.smeared_field_vector")
    if not (0 <= a < k):
        raise DomainError("color index out of range", where="fock.smeared_field_vector")
    out = np.zeros((4, k, n, n, n), dtype=complex)
    if mu == 0 or not project:
        out[mu, a] = phi
    else:
        for part, phi_part in ((np.real, phi.real), (np.imag, phi.imag)):
            vec = np.zeros((n, n, n, k, 3))
            vec[..., a, mu - 1] = phi_part
            proj = transverse_project(LatticeField(grid, vec, "auxiliary"))
            coef = 1.0 if part is np.real else 1.0j
            for i in range(3):
                out[i + 1] += coef * np.moveaxis(proj.data[..., i], -1, 0)
    return (out * grid.spacing**3).reshape(-1)


def _random_unit(rng, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def fock_check(d: int, n_max: int, seed: int, *, grid_n: int = 8,
               tol_ccr: float = 1e-12, tol_weyl: float = 1e-8,
               tol_spec: float = 1e-10, tol_w7: float = 1e-12) -> dict:
    """Run the operator-identity suites; returns a JSON-friendly report."""
    from scipy.linalg import expm

    rng = np.random.Generator(np.random.Philox(seed))
    report = {"d": d, "n_max": n_max, "seed": seed, "suites": {}}

    # CCR on sectors below the top
    worst = 0.0
    for _ in range(4):
        f = _random_unit(rng, d)
        g = _random_unit(rng, d)
        v = FockVector.zeros(d, n_max)
        for n in range(n_max - 1):
            v.sectors[n] = rng.standard_normal(sector_dim(d, n)) \
                + 1j * rng.standard_normal(sector_dim(d, n))
        v = v * (1.0 / v.norm())
        lhs = annihilate(f, create(g, v)) - create(g, annihilate(f, v))
        rhs = complex(np.vdot(f, g)) * v
        worst = max(worst, (lhs - rhs).norm())
    report["suites"]["ccr"] = {"max_dev": worst, "tol": tol_ccr,
                               "pass": worst < tol_ccr}

    # Segal commutator identity away from the top two sectors
    worst = 0.0
    for _ in range(4):
        f = _random_unit(rng, d)
        g = _random_unit(rng, d)
        v = FockVector.zeros(d, n_max)
        for n in range(max(n_max - 1, 1)):
            v.sectors[n] = rng.standard_normal(sector_dim(d, n)) \
                + 1j * rng.standard_normal(sector_dim(d, n))
        v = v * (1.0 / v.norm())
        lhs = segal_field(f, segal_field(g, v)) - segal_field(g, segal_field(f, v))
        rhs = (1j * np.imag(complex(np.vdot(f, g)))) * v  # i Im(f, g) psi
        dev = lhs - rhs
        dev.sectors[n_max] *= 0.0  # commutator leaks into the top sector only
        worst = max(worst, dev.norm())
    report["suites"]["segal_commutator"] = {"max_dev": worst, "tol": tol_ccr,
                                            "pass": worst < tol_ccr}

    # Weyl relation via dense exponentials at small scale.  The phase is the
    # BCH partner of the commutator identity above: with [Phi(f), Phi(g)] =
    # i Im(f, g) (conjugate-first pairing), exp(i Phi(f+g)) picks up
    # exp(+i Im(f, g)/2) relative to exp(i Phi(f)) exp(i Phi(g)).
    wd, wn = min(d, 3), min(n_max, 5)
    f = 0.12 * _random_unit(rng, wd)
    g = 0.12 * _random_unit(rng, wd)
    pf, pg, pfg = (segal_matrix(x, wn) for x in (f, g, f + g))
    lhs = expm(1j * pfg)
    rhs = np.exp(0.5j * np.imag(complex(np.vdot(f, g)))) * (expm(1j * pf) @ expm(1j * pg))
    dims = [sector_dim(wd, n) for n in range(wn + 1)]
    low = sum(dims[: max(wn - 1, 1)])
    dev = np.abs(lhs[:low, :low] - rhs[:low, :low]).max()
    report["suites"]["weyl"] = {"max_dev": float(dev), "tol": tol_weyl,
                                "pass": dev < tol_weyl}

    # Gamma covariance: Gamma(U) Phi(f) Gamma(U)^-1 = Phi(Uf)
    herm = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    herm = 0.5 * (herm + herm.conj().T)
    u = expm(1j * herm)
    gop = gamma(u, n_max)
    ginv = gamma(u.conj().T, n_max)
    worst = 0.0
    for _ in range(3):
        f = _random_unit(rng, d)
        v = FockVector.zeros(d, n_max)
        for n in range(n_max - 1):
            v.sectors[n] = rng.standard_normal(sector_dim(d, n)) \
                + 1j * rng.standard_normal(sector_dim(d, n))
        v = v * (1.0 / v.norm())
        lhs = gop.apply(segal_field(f, ginv.apply(v)))
        rhs = segal_field(u @ f, v)
        dev = lhs - rhs
        dev.sectors[n_max] *= 0.0
        worst = max(worst, dev.norm())
    report["suites"]["gamma_covariance"] = {"max_dev": worst, "tol": tol_ccr,
                                            "pass": worst < tol_ccr}

    # dGamma spectra against the multiset-sum law
    worst = 0.0
    herm = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    herm = 0.5 * (herm + herm.conj().T)
    dg = dgamma(herm, min(n_max, 3))
    for n in range(1, min(n_max, 3) + 1):
        got = np.sort(np.linalg.eigvalsh(dg.sector_matrices[n]))
        want = dgamma_spectrum(herm, n)
        worst = max(worst, float(np.abs(got - want).max()))
    report["suites"]["dgamma_spectrum"] = {"max_dev": worst, "tol": tol_spec,
                                           "pass": worst < tol_spec}

    # W7 surrogate: disjoint bumps on a single slice commute
    grid = Grid(grid_n, 1.0)
    k = 3
    phi = np.zeros((grid_n,) * 3)
    chi = np.zeros((grid_n,) * 3)
    phi[0:2, 0:2, 0:2] = rng.standard_normal((2, 2, 2))
    chi[4:6, 4:6, 4:6] = rng.standard_normal((2, 2, 2))
    worst = 0.0
    overlap_projected = 0.0
    for mu, nu in ((0, 0), (1, 2), (2, 2), (3, 1)):
        wf = smeared_field_vector(grid, phi, mu, 0, k, project=False)
        wg = smeared_field_vector(grid, chi, nu, 1 if nu != mu else 0, k,
                                  project=False)
        im = np.imag(np.vdot(wf, wg))
        # reduce to the span and apply the Segal commutator there
        q1 = wf / np.linalg.norm(wf)
        r = wg - np.vdot(q1, wg) * q1
        if np.linalg.norm(r) > 1e-14:
            q2 = r / np.linalg.norm(r)
            fv = np.array([np.vdot(q1, wf), np.vdot(q2, wf)])
            gv = np.array([np.vdot(q1, wg), np.vdot(q2, wg)])
        else:
            fv = np.array([np.vdot(q1, wf), 0.0])
            gv = np.array([np.vdot(q1, wg), 0.0])
        scale = max(np.linalg.norm(fv) * np.linalg.norm(gv), 1e-300)
        fv, gv = fv / np.linalg.norm(fv), gv / np.linalg.norm(gv)
        v = FockVector.vacuum(2, 4)
        comm = segal_field(fv, segal_field(gv, v)) - segal_field(gv, segal_field(fv, v))
        worst = max(worst, comm.norm() * scale, abs(im))
        if mu > 0:
            wfp = smeared_field_vector(grid, phi, mu, 0, k)
            wgp = smeared_field_vector(grid, chi, mu, 0, k)
            denom = max(np.linalg.norm(wfp) * np.linalg.norm(wgp), 1e-300)
            overlap_projected = max(overlap_projected,
                                    abs(np.vdot(wfp, wgp)) / denom)
    report["suites"]["w7_disjoint"] = {"max_dev": worst, "tol": tol_w7,
                                       "pass": worst < tol_w7,
                                       "projected_overlap_info": overlap_projected}

    report["all_pass"] = all(s["pass"] for s in report["suites"].values())
    return report
