"""Solution snapshots: density, velocity, optional pressure and force."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError
from .grid import Field, TorusGrid
from .spectral import divergence_defect

DIV_TOL = 1e-10


@dataclass
class SolutionState:
    """One (rho, u, p) snapshot with its time, viscosity, and force."""

    rho: Field
    u: Field
    p: Field | None = None
    f_ext: Field | None = None
    t: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        g = self.grid
        for name, fld in (("u", self.u), ("p", self.p), ("f_ext", self.f_ext)):
            if fld is not None and fld.grid != g:
                raise InvalidStateError(f"{name} grid differs from density grid")
        if not self.rho.is_scalar:
            raise InvalidStateError("density must be scalar")
        if self.u.comp_shape != (g.dim,):
            raise InvalidStateError("velocity must have one component per axis")
        if self.mu < 0:
            raise InvalidStateError("viscosity must be nonnegative")

    @property
    def grid(self) -> TorusGrid:
        return self.rho.grid

    @property
    def rho_lo(self) -> float:
        return float(self.rho.values.min())

    @property
    def rho_hi(self) -> float:
        return float(self.rho.values.max())

    @property
    def momentum(self) -> Field:
        return Field(self.grid, self.rho.values * self.u.values)

    def validate(self, div_tol: float = DIV_TOL) -> None:
        """Enforce density positivity and the divergence-free tolerance."""
        if self.rho_lo <= 0.0:
            raise InvalidStateError(
                f"density must satisfy 0 < rho_lo <= rho <= rho_hi everywhere; min rho = {self.rho_lo:.3e}"
            )
        defect = divergence_defect(self.u)
        if defect > div_tol:
            raise InvalidStateError(f"velocity divergence defect {defect:.3e} exceeds {div_tol:.1e}")

    def with_time(self, t: float) -> "SolutionState":
        return SolutionState(self.rho, self.u, self.p, self.f_ext, t, self.mu)


def total_energy(state: SolutionState) -> float:
    """E = (1/2) integral rho |u|^2."""
    g = state.grid
    return float(0.5 * g.cell_volume * np.sum(state.rho.values * state.u.magnitude() ** 2))


def total_momentum(state: SolutionState) -> np.ndarray:
    g = state.grid
    d = g.dim
    return np.array([g.cell_volume * np.sum(state.rho.values * state.u.values[i]) for i in range(d)])


def total_mass(state: SolutionState) -> float:
    return float(state.grid.cell_volume * np.sum(state.rho.values))
