"""Classical Hamilton function and projected-leapfrog time evolution.

The energy is

    H(A, E) = 1/2 int d3x [ E^2 + B^2 + f Lap f + 2 rho A0 ]

with the chromomagnetic field B, the charge density rho = g eps E.A, the
Coulomb potential f = -g G rho and A0 = G Lap f, where G is a modified
Green's function rebuilt from the current A.  The Coulomb block can be
switched off, leaving the separable 1/2 int (E^2 + B^2).

Gradients come in two flavours:

* ``fd``: central finite differences on every lattice slot, divided by the
  quadrature weight so the flow is refinement-consistent, then transversally
  projected.  This is the general method; it captures the A-dependence of
  G by construction.  Probe fields leave the constraint surface by O(step),
  so the energy evaluations inside the stencil skip the gauge check.
* ``analytic``: closed form for the separable part (exact for any g since
  B is polynomial in A); rejected when the Coulomb block is enabled.

Evolution is kick-drift-kick leapfrog with transverse re-projection after
every substep, which enforces the Coulomb constraint along the flow.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import StructureConstants, epsilon_tensor
from .errors import DomainError, GaugeError, NumericalError
from .fields import charge_density, chromomagnetic
from .greens import modified_green
from .lattice import (
    ColorScalarField,
    LatticeField,
    coulomb_residual,
    curl,
    l2_inner,
    l2_norm,
    laplacian,
    transverse_project,
)

__all__ = [
    "HamiltonianConfig",
    "FlowState",
    "Trajectory",
    "solve_f_and_a0",
    "energy",
    "grad_a",
    "grad_e",
    "evolve",
]

_EPS = epsilon_tensor()


@dataclass
class HamiltonianConfig:
    sc: StructureConstants
    dt: float = 0.01
    coulomb: bool = True
    gradient_method: str = "fd"     # "fd" | "analytic"
    fd_step: float = 1e-5
    greens_method: str = "born"
    greens_n_terms: int = 6
    integrator: str = "leapfrog"
    gauge_tol: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError(f"dt={self.dt} must be positive",
                              where="hamiltonian.HamiltonianConfig")
        if self.fd_step <= 0:
            raise DomainError(f"fd_step={self.fd_step} must be positive",
                              where="hamiltonian.HamiltonianConfig")
        if self.gradient_method not in ("fd", "analytic"):
            raise DomainError(f"unknown gradient_method {self.gradient_method!r}",
                              where="hamiltonian.HamiltonianConfig")
        if self.integrator != "leapfrog":
            raise DomainError(f"unknown integrator {self.integrator!r}",
                              where="hamiltonian.HamiltonianConfig")
        if self.gradient_method == "analytic" and self.coulomb:
            raise DomainError(
                "analytic gradients cover only the separable part; "
                "use gradient_method='fd' with the Coulomb block enabled",
                where="hamiltonian.HamiltonianConfig",
            )


@dataclass
class FlowState:
    t: float
    a: LatticeField
    e: LatticeField
    energy: float


@dataclass
class Trajectory:
    steps: np.ndarray
    times: np.ndarray
    energies: np.ndarray
    gauge_residuals: np.ndarray
    f_norms: np.ndarray
    final: FlowState


def solve_f_and_a0(cfg: HamiltonianConfig, a: LatticeField, e: LatticeField):
    """Coulomb potential f = -g G rho and A0 = G Lap f."""
    _require_transverse(cfg, a, "hamiltonian.solve_f_and_a0")
    f, a0, _ = _solve_f_and_a0_raw(cfg, a, e, cfg.gauge_tol)
    return f, a0


def _solve_f_and_a0_raw(cfg, a, e, gauge_tol):
    sc = cfg.sc
    rho = charge_density(sc, a, e)
    if sc.g == 0.0:
        zero = ColorScalarField.zeros(a.grid, sc.k)
        return zero, zero.copy(), rho
    gop = modified_green(sc, a, method=cfg.greens_method,
                         n_terms=cfg.greens_n_terms, gauge_tol=gauge_tol)
    f = ColorScalarField(a.grid, -sc.g * gop.apply_array(rho.data))
    a0 = ColorScalarField(a.grid, gop.apply_array(laplacian(f).data))
    return f, a0, rho


def _require_transverse(cfg, a, where):
    res = coulomb_residual(a)
    if res > cfg.gauge_tol:
        raise GaugeError(f"A residual {res:.3e} exceeds {cfg.gauge_tol:.1e}", where=where)


def _energy_raw(cfg: HamiltonianConfig, a: LatticeField, e: LatticeField,
                gauge_tol: float) -> float:
    sc = cfg.sc
    b = chromomagnetic(sc, a)
    total = 0.5 * (l2_inner(e, e) + l2_inner(b, b))
    if cfg.coulomb and sc.g != 0.0:
        f, a0, rho = _solve_f_and_a0_raw(cfg, a, e, gauge_tol)
        total += 0.5 * l2_inner(f, laplacian(f)) + l2_inner(rho, a0)
    return total


def energy(cfg: HamiltonianConfig, a: LatticeField, e: LatticeField) -> float:
    """The four-term lattice energy; only E^2 + B^2 when coulomb is off."""
    _require_transverse(cfg, a, "hamiltonian.energy")
    return _energy_raw(cfg, a, e, cfg.gauge_tol)


def _analytic_grad_a(cfg, a: LatticeField) -> LatticeField:
    sc = cfg.sc
    b = chromomagnetic(sc, a)
    out = 0.5 * curl(b).data
    if sc.g != 0.0:
        out = out + 0.5 * sc.g * np.einsum(
            "ijk,abc,xyzai,xyzck->xyzbj", _EPS, _EPS, b.data, a.data
        )
    return transverse_project(LatticeField(a.grid, out, "auxiliary"))


def _fd_grad(cfg, a: LatticeField, e: LatticeField, wrt: str) -> LatticeField:
    """Central differences on every slot of A or E, weight-normalized."""
    h3 = a.grid.spacing**3
    base = a.data if wrt == "a" else e.data
    work = base.copy()
    grad = np.empty_like(base)
    it = np.nditer(base, flags=["multi_index"])
    probe_tol = np.inf  # FD probes step off the constraint surface
    for val in it:
        idx = it.multi_index
        step = cfg.fd_step * (1.0 + abs(float(val)))
        work[idx] = float(val) + step
        if wrt == "a":
            e_plus = _energy_raw(cfg, LatticeField(a.grid, work, a.kind), e, probe_tol)
        else:
            e_plus = _energy_raw(cfg, a, LatticeField(e.grid, work, e.kind), probe_tol)
        work[idx] = float(val) - step
        if wrt == "a":
            e_minus = _energy_raw(cfg, LatticeField(a.grid, work, a.kind), e, probe_tol)
        else:
            e_minus = _energy_raw(cfg, a, LatticeField(e.grid, work, e.kind), probe_tol)
        work[idx] = float(val)
        diff = (e_plus - e_minus) / (2.0 * step * h3)
        if not np.isfinite(diff):
            raise NumericalError(f"non-finite FD probe at slot {idx}",
                                 where="hamiltonian.grad")
        grad[idx] = diff
    return transverse_project(LatticeField(a.grid, grad, "auxiliary"))


def grad_a(cfg: HamiltonianConfig, a: LatticeField, e: LatticeField) -> LatticeField:
    """Functional gradient dH/dA, transversally projected."""
    _require_transverse(cfg, a, "hamiltonian.grad_a")
    if cfg.gradient_method == "analytic":
        return _analytic_grad_a(cfg, a)
    return _fd_grad(cfg, a, e, "a")


def grad_e(cfg: HamiltonianConfig, a: LatticeField, e: LatticeField) -> LatticeField:
    """Functional gradient dH/dE, transversally projected."""
    _require_transverse(cfg, a, "hamiltonian.grad_e")
    if cfg.gradient_method == "analytic" or not cfg.coulomb or cfg.sc.g == 0.0:
        # quadratic kinetic term only
        return transverse_project(LatticeField(e.grid, e.data.copy(), "auxiliary"))
    return _fd_grad(cfg, a, e, "e")


def evolve(cfg: HamiltonianConfig, state: FlowState, n_steps: int,
           *, record_every: int = 1) -> Trajectory:
    """Kick-drift-kick leapfrog with per-substep transverse projection."""
    if n_steps < 0:
        raise DomainError("n_steps must be >= 0", where="hamiltonian.evolve")
    a = transverse_project(state.a)
    e = transverse_project(state.e)
    t = state.t
    dt = cfg.dt
    steps, times, energies, residuals, f_norms = [], [], [], [], []

    def record(step):
        en = _energy_raw(cfg, a, e, cfg.gauge_tol)
        if not np.isfinite(en):
            raise NumericalError(f"energy non-finite at step {step}",
                                 where="hamiltonian.evolve")
        res = max(coulomb_residual(a), coulomb_residual(e))
        if cfg.coulomb and cfg.sc.g != 0.0:
            f, _, _ = _solve_f_and_a0_raw(cfg, a, e, cfg.gauge_tol)
            fn = l2_norm(f)
        else:
            fn = 0.0
        steps.append(step)
        times.append(t)
        energies.append(en)
        residuals.append(res)
        f_norms.append(fn)
        return en

    record(0)
    for step in range(1, n_steps + 1):
        kick = grad_a(cfg, a, e)
        e = LatticeField(e.grid, e.data - 0.5 * dt * kick.data, e.kind)
        e = transverse_project(e)
        drift = grad_e(cfg, a, e)
        a = LatticeField(a.grid, a.data + dt * drift.data, a.kind)
        a = transverse_project(a)
        kick = grad_a(cfg, a, e)
        e = LatticeField(e.grid, e.data - 0.5 * dt * kick.data, e.kind)
        e = transverse_project(e)
        t = state.t + step * dt
        if step % record_every == 0 or step == n_steps:
            record(step)

    final_energy = energies[-1]
    final = FlowState(t=t, a=a, e=e, energy=final_energy)
    return Trajectory(
        steps=np.array(steps),
        times=np.array(times),
        energies=np.array(energies),
        gauge_residuals=np.array(residuals),
        f_norms=np.array(f_norms),
        final=final,
    )
