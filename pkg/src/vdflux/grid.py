"""Uniform periodic grids on the unit torus and sampled fields.

The domain is [0,1)^d with N equispaced points per axis. Fourier
coefficients follow the unit-torus convention

    fhat(k) = cell_volume * sum_x f(x) exp(-2*pi*i k.x),

so a mode ``cos(2*pi*k.x)`` carries coefficient 1/2 at +-k and Parseval
reads ``sum_k |fhat|^2 == cell_volume * sum_x |f|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GridMismatchError, ValidationError


@dataclass(frozen=True)
class TorusGrid:
    """Metadata for a uniform grid on [0,1)^d, d in {1,2,3}."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValidationError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValidationError(f"points per axis must be a power of two >= 8, got {self.n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return float(self.n) ** (-self.dim)

    @property
    def q_max(self) -> int:
        """Largest dyadic shell index with support on the lattice."""
        return int(np.log2(self.n // 2)) + 1

    def axes(self) -> list[np.ndarray]:
        x = np.arange(self.n) / self.n
        return [x] * self.dim

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes(), indexing="ij"))

    def wavenumbers(self) -> list[np.ndarray]:
        """Integer wavenumbers per axis, broadcastable to the grid shape."""
        return list(_lattice(self.dim, self.n)[0])

    def wavenumbers_deriv(self) -> list[np.ndarray]:
        """Wavenumbers for ik-multipliers, with the Nyquist row zeroed.

        The +-N/2 mode has no signed direction on the real lattice, so
        derivative multipliers treat it as zero.
        """
        return list(_lattice(self.dim, self.n)[1])

    def k_norm(self) -> np.ndarray:
        """|k| over the full lattice, shape == grid shape."""
        return _lattice(self.dim, self.n)[2]


@lru_cache(maxsize=32)
def _lattice(dim: int, n: int):
    ks, kds = [], []
    for axis in range(dim):
        k = np.fft.fftfreq(n) * n
        kd = k.copy()
        kd[np.abs(kd) == n // 2] = 0.0
        shape = [1] * dim
        shape[axis] = n
        ks.append(k.reshape(shape))
        kds.append(kd.reshape(shape))
    k2 = sum(k ** 2 for k in ks)
    knorm = np.sqrt(k2 + 0.0)
    knorm.flags.writeable = False
    for a in ks + kds:
        a.flags.writeable = False
    return tuple(ks), tuple(kds), knorm


class Field:
    """Real samples of a scalar, vector, or rank-2 tensor field on a grid.

    Component axes come first: values have shape ``comp_shape + grid.shape``
    with comp_shape one of (), (d,), (d,d). Fourier coefficients are
    computed lazily and cached; construction from coefficients checks that
    the inverse transform is real to round-off.
    """

    __slots__ = ("grid", "values", "_coeffs")

    def __init__(self, grid: TorusGrid, values: np.ndarray, _coeffs: np.ndarray | None = None):
        values = np.asarray(values, dtype=np.float64)
        d = grid.dim
        if values.shape[-d:] != grid.shape:
            raise GridMismatchError(f"values shape {values.shape} does not end in {grid.shape}")
        comp = values.shape[:-d]
        if comp not in ((), (d,), (d, d)):
            raise ValidationError(f"component shape {comp} must be one of (), ({d},), ({d},{d})")
        if not np.isfinite(values).all():
            raise ValidationError("field values must be finite")
        self.grid = grid
        self.values = values
        self.values.flags.writeable = False
        self._coeffs = _coeffs

    @classmethod
    def from_coeffs(cls, grid: TorusGrid, coeffs: np.ndarray, imag_tol: float = 1e-10) -> "Field":
        d = grid.dim
        axes = tuple(range(-d, 0))
        z = np.fft.ifftn(coeffs, axes=axes) * grid.n ** d
        scale = np.abs(z).max()
        if scale > 0 and np.abs(z.imag).max() > imag_tol * scale:
            raise ValidationError("coefficients are not conjugate-symmetric: inverse transform is complex")
        f = cls(grid, np.ascontiguousarray(z.real))
        f._coeffs = np.asarray(coeffs, dtype=np.complex128)
        return f

    @property
    def comp_shape(self) -> tuple[int, ...]:
        return self.values.shape[: -self.grid.dim]

    @property
    def components(self) -> int:
        return int(np.prod(self.comp_shape)) if self.comp_shape else 1

    @property
    def is_scalar(self) -> bool:
        return self.comp_shape == ()

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            d = self.grid.dim
            axes = tuple(range(-d, 0))
            self._coeffs = np.fft.fftn(self.values, axes=axes) / self.grid.n ** d
            self._coeffs.flags.writeable = False
        return self._coeffs

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude over component axes."""
        if self.is_scalar:
            return np.abs(self.values)
        d = self.grid.dim
        comp_axes = tuple(range(self.values.ndim - d))
        return np.sqrt(np.sum(self.values ** 2, axis=comp_axes))

    def component(self, *idx: int) -> "Field":
        return Field(self.grid, self.values[idx])

    def same_grid(self, other: "Field") -> None:
        if self.grid != other.grid:
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")

    # Small arithmetic surface for building diagnostics; results drop the
    # spectral cache except where linearity keeps it valid.
    def __add__(self, other):
        if isinstance(other, Field):
            self.same_grid(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self.same_grid(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self.same_grid(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        kind = {0: "scalar", 1: "vector", 2: "tensor"}[len(self.comp_shape)]
        return f"Field({kind}, d={self.grid.dim}, n={self.grid.n})"


def constant_field(grid: TorusGrid, value: float) -> Field:
    return Field(grid, np.full(grid.shape, float(value)))


def zero_vector(grid: TorusGrid) -> Field:
    return Field(grid, np.zeros((grid.dim,) + grid.shape))
