"""Dyadic projections and spectral differential operators.

All projections act as radial Fourier multipliers on the integer lattice;
high-pass is the exact spectral complement of low-pass, so f_{<=Q} +
f_{>Q} reconstructs f bit-for-bit in coefficient space. Reductions use
numpy's pairwise summation, so repeated runs agree bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutoffs import CutoffProfile
from .errors import GridMismatchError, ValidationError
from .grid import Field, TorusGrid


def shell_multiplier(grid: TorusGrid, q: int, cutoff: CutoffProfile) -> np.ndarray:
    if not -1 <= q <= grid.q_max:
        raise ValidationError(f"shell index {q} outside [-1, {grid.q_max}]")
    return cutoff.shell_weight(grid.k_norm(), q)


def low_multiplier(grid: TorusGrid, q_cut: int, cutoff: CutoffProfile) -> np.ndarray:
    if q_cut < -1:
        raise ValidationError(f"cut index {q_cut} must be >= -1")
    return cutoff.low_weight(grid.k_norm(), q_cut)


def apply_multiplier(f: Field, mult: np.ndarray) -> Field:
    coeffs = f.coeffs * mult
    d = f.grid.dim
    vals = np.fft.ifftn(coeffs, axes=tuple(range(-d, 0))).real * f.grid.n ** d
    out = Field(f.grid, np.ascontiguousarray(vals))
    out._coeffs = coeffs
    return out


def project_shell(f: Field, q: int, cutoff: CutoffProfile) -> Field:
    """Dyadic shell f_q (spectral support lambda_{q-1}..lambda_{q+1})."""
    return apply_multiplier(f, shell_multiplier(f.grid, q, cutoff))


def project_low(f: Field, q_cut: int, cutoff: CutoffProfile) -> Field:
    """Low-pass f_{<=Q}, multiplier chi(|k| / lambda_{Q+1})."""
    return apply_multiplier(f, low_multiplier(f.grid, q_cut, cutoff))


def project_high(f: Field, q_cut: int, cutoff: CutoffProfile) -> Field:
    """High-pass f_{>Q} = f - f_{<=Q}, exact complement in spectral space."""
    low = f.coeffs * low_multiplier(f.grid, q_cut, cutoff)
    coeffs = f.coeffs - low  # subtraction, not a (1 - m) multiplier: complement is bit-exact
    d = f.grid.dim
    vals = np.fft.ifftn(coeffs, axes=tuple(range(-d, 0))).real * f.grid.n ** d
    out = Field(f.grid, np.ascontiguousarray(vals))
    out._coeffs = coeffs
    return out


def project_near(f: Field, q: int, cutoff: CutoffProfile) -> Field:
    """Band f_{~Q}: shells Q-2 .. Q+2 clipped to the stored range."""
    lo = max(q - 2, -1)
    hi = min(q + 2, f.grid.q_max)
    mult = sum(shell_multiplier(f.grid, j, cutoff) for j in range(lo, hi + 1))
    return apply_multiplier(f, mult)


@dataclass
class ShellDecomposition:
    """The family {f_q}, q = -1..q_max, of one field."""

    source: Field
    cutoff: CutoffProfile
    shells: list[Field]

    @property
    def qs(self) -> np.ndarray:
        return np.arange(-1, self.source.grid.q_max + 1)

    def reconstruction_error(self) -> float:
        total = sum(s.values for s in self.shells)
        ref = np.sqrt(np.sum(self.source.values ** 2))
        err = np.sqrt(np.sum((total - self.source.values) ** 2))
        return float(err / ref) if ref > 0 else float(err)


def decompose(f: Field, cutoff: CutoffProfile) -> ShellDecomposition:
    shells = [project_shell(f, q, cutoff) for q in range(-1, f.grid.q_max + 1)]
    return ShellDecomposition(f, cutoff, shells)


# -- differential operators ---------------------------------------------------

def _deriv_coeffs(f: Field, axis: int) -> np.ndarray:
    k = f.grid.wavenumbers_deriv()[axis]
    return f.coeffs * (2j * np.pi * k)


def gradient(f: Field) -> Field:
    """Spectral gradient; scalar -> vector, vector -> tensor G[i,j] = d_i u_j."""
    g = f.grid
    d = g.dim
    if f.is_scalar:
        out = np.empty((d,) + g.shape)
        for i in range(d):
            out[i] = np.fft.ifftn(_deriv_coeffs(f, i), axes=tuple(range(-d, 0))).real * g.n ** d
        return Field(g, out)
    if f.comp_shape == (d,):
        out = np.empty((d, d) + g.shape)
        for j in range(d):
            comp = Field(g, f.values[j])
            comp._coeffs = None if f._coeffs is None else f.coeffs[j]
            for i in range(d):
                out[i, j] = np.fft.ifftn(_deriv_coeffs(comp, i), axes=tuple(range(-d, 0))).real * g.n ** d
        return Field(g, out)
    raise ValidationError("gradient defined for scalar and vector fields")


def divergence(v: Field) -> Field:
    g = v.grid
    d = g.dim
    if v.comp_shape != (d,):
        raise ValidationError("divergence needs a vector field")
    acc = np.zeros(g.shape, dtype=np.complex128)
    kds = g.wavenumbers_deriv()
    for i in range(d):
        acc += v.coeffs[i] * (2j * np.pi * kds[i])
    vals = np.fft.ifftn(acc, axes=tuple(range(-d, 0))).real * g.n ** d
    return Field(g, vals)


def laplacian(f: Field) -> Field:
    g = f.grid
    d = g.dim
    k2 = sum(np.asarray(k) ** 2 for k in g.wavenumbers())
    mult = -((2.0 * np.pi) ** 2) * k2
    return apply_multiplier(f, mult)


def lp_norm(f: Field, p: float) -> float:
    """L^p norm by midpoint quadrature; vector/tensor use pointwise magnitude."""
    if not (p >= 1.0):
        raise ValidationError(f"p must be in [1, inf], got {p}")
    mag = f.magnitude()
    if np.isinf(p):
        return float(mag.max())
    return float((f.grid.cell_volume * np.sum(mag ** p)) ** (1.0 / p))


def l2_inner(f: Field, g: Field) -> float:
    f.same_grid(g)
    if f.comp_shape != g.comp_shape:
        raise ValidationError("inner product needs matching component shapes")
    return float(f.grid.cell_volume * np.sum(f.values * g.values))


def integral(f: Field) -> float:
    """Torus integral of a scalar field (== mean on the unit torus)."""
    return float(f.grid.cell_volume * np.sum(f.values))


# -- incompressibility helpers ------------------------------------------------

def leray_project(u: Field) -> Field:
    """Remove the gradient part: uhat <- uhat - k (k.uhat) / |k|^2.

    Uses the derivative wavenumber convention (Nyquist rows are signless
    and treated as zero), which keeps the projected field real.
    """
    g = u.grid
    d = g.dim
    if u.comp_shape != (d,):
        raise ValidationError("Leray projection needs a vector field")
    ks = g.wavenumbers_deriv()
    k2 = sum(np.asarray(k) ** 2 for k in ks)
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    c = u.coeffs
    kdotu = sum(ks[i] * c[i] for i in range(d))
    proj = np.empty_like(c)
    for i in range(d):
        proj[i] = c[i] - ks[i] * kdotu * inv
    return Field.from_coeffs(g, proj)


def divergence_defect(u: Field) -> float:
    """max_k |k . uhat(k)| relative to the l2 size of uhat.

    Same derivative wavenumber convention as leray_project, so projected
    fields certify at round-off.
    """
    g = u.grid
    d = g.dim
    ks = g.wavenumbers_deriv()
    c = u.coeffs
    kdotu = sum(ks[i] * c[i] for i in range(d))
    scale = np.sqrt(np.sum(np.abs(c) ** 2))
    if scale == 0.0:
        return 0.0
    return float(np.abs(kdotu).max() / scale)


def resample(f: Field, grid: TorusGrid) -> Field:
    """Re-sample on another grid by embedding/truncating the mode lattice.

    Exact for band-limited fields; Nyquist rows of the source are dropped
    (they are zero for all generated fields).
    """
    src_grid = f.grid
    if grid.dim != src_grid.dim:
        raise GridMismatchError("resample cannot change the dimension")
    if grid.n == src_grid.n:
        return f
    d = grid.dim
    kmax = min(grid.n, src_grid.n) // 2 - 1
    k1 = np.fft.fftfreq(src_grid.n) * src_grid.n
    keep = np.where(np.abs(k1) <= kmax)[0]
    target = (k1[keep].astype(int)) % grid.n
    out = np.zeros(f.comp_shape + grid.shape, dtype=np.complex128)
    src_idx = np.ix_(*([keep] * d))
    dst_idx = np.ix_(*([target] * d))
    out[(...,) + dst_idx] = f.coeffs[(...,) + src_idx]
    return Field.from_coeffs(grid, out)


def dealias_mask(grid: TorusGrid) -> np.ndarray:
    """2/3-rule mask: keep modes with |k_i| <= floor(N/3) on every axis."""
    keep = grid.n // 3
    mask = np.ones(grid.shape, dtype=bool)
    for k in grid.wavenumbers():
        mask &= np.abs(np.asarray(k)) <= keep
    return mask


def truncate(f: Field, mask: np.ndarray) -> Field:
    return Field.from_coeffs(f.grid, f.coeffs * mask)
