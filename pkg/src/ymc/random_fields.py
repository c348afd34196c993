"""Seeded, reproducible random lattice fields.

The generator is Philox4x64-10 (numpy's counter-based ``Philox`` bit
generator), so identical seeds give bit-identical fields on any platform.
Draw order is fixed: one standard-normal block of shape (N, N, N, K, 3) in
C order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .lattice import Grid, LatticeField, _fft, _ifft_real, transverse_project

__all__ = ["RandomFieldSpec", "generate_field"]


@dataclass(frozen=True)
class RandomFieldSpec:
    seed: int
    shape: str = "white"          # "white" | "band"
    p_max: int = None             # required for shape="band"
    amplitude: float = 1.0
    transverse: bool = True
    kind: str = "potential"

    def __post_init__(self):
        if self.shape not in ("white", "band"):
            raise DomainError(f"unknown spectrum shape {self.shape!r}",
                              where="random_fields.RandomFieldSpec")
        if self.shape == "band" and (self.p_max is None or self.p_max < 0):
            raise DomainError("band-limited spec needs p_max >= 0",
                              where="random_fields.RandomFieldSpec")
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise DomainError(f"bad amplitude {self.amplitude}",
                              where="random_fields.RandomFieldSpec")


def generate_field(grid: Grid, k: int, spec: RandomFieldSpec) -> LatticeField:
    """Deterministic field for the spec; projected when transverse is set.

    The shaped noise is normalized to unit RMS before the amplitude is
    applied; transverse projection happens last.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    data = rng.standard_normal((grid.n, grid.n, grid.n, k, 3))
    if spec.shape == "band":
        kvec = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
        keep = np.abs(kvec) <= spec.p_max
        mask = np.einsum("i,j,l->ijl", keep, keep, keep)[..., None, None]
        data = _ifft_real(mask * _fft(data))
    rms = np.sqrt((data**2).mean())
    if rms > 0:
        data = data / rms
    data = spec.amplitude * data
    field = LatticeField(grid, data, spec.kind)
    if spec.transverse:
        field = transverse_project(field)
    return field
