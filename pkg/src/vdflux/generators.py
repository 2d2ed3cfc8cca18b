"""Deterministic field generators for tests and experiments.

All randomness flows through numpy's Philox counter-based generator keyed
by an explicit 64-bit seed, so identical specs reproduce identical fields
bit-for-bit on any platform. Random spectra are shaped shell by shell
under the sharp cutoff, which makes the weighted shell norms d_q exact by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .cutoffs import SHARP, lambda_q, make_cutoff
from .errors import ValidationError
from .grid import Field, TorusGrid, constant_field
from .spectral import leray_project, lp_norm, project_shell
from .state import SolutionState

_SHARP = make_cutoff(SHARP)

KINDS = ("constant", "single_mode", "taylor_green", "random_besov", "density_profile")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


@dataclass(frozen=True)
class GeneratorSpec:
    """Serializable recipe for one generated field or state."""

    kind: str
    seed: int = 0
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown generator kind {self.kind!r}")


def taylor_green(grid: TorusGrid, mu: float, t: float = 0.0, amplitude: float = 1.0) -> SolutionState:
    """Exact decaying vortex pair: unit density, closed-form u and p.

    u = exp(-8 pi^2 mu t) * (sin(2pi x1) cos(2pi x2), -cos(2pi x1) sin(2pi x2))
    p = (amp^2/4) exp(-16 pi^2 mu t) * (cos(4pi x1) + cos(4pi x2))
    """
    if grid.dim != 2:
        raise ValidationError("taylor_green is a 2D solution")
    x, y = grid.meshgrid()
    decay = np.exp(-8.0 * np.pi ** 2 * mu * t) * amplitude
    u = np.stack([
        np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
        -np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y),
    ]) * decay
    p = 0.25 * decay ** 2 * (np.cos(4 * np.pi * x) + np.cos(4 * np.pi * y))
    return SolutionState(
        rho=constant_field(grid, 1.0),
        u=Field(grid, u),
        p=Field(grid, p),
        t=t,
        mu=mu,
    )


def single_mode_velocity(grid: TorusGrid, k, amplitude: float = 1.0, phase: float = 0.0) -> Field:
    """Divergence-free single mode: amplitude * dhat * cos(2pi k.x + phase)."""
    k = np.asarray(k, dtype=float)
    if k.shape != (grid.dim,) or np.all(k == 0):
        raise ValidationError("mode vector must be a nonzero lattice vector")
    # pick a unit direction orthogonal to k
    d = grid.dim
    if d == 1:
        raise ValidationError("no nonconstant divergence-free field in 1D")
    trial = np.zeros(d)
    trial[int(np.argmin(np.abs(k)))] = 1.0
    direction = trial - k * (trial @ k) / (k @ k)
    direction /= np.linalg.norm(direction)
    xs = grid.meshgrid()
    arg = 2 * np.pi * sum(k[i] * xs[i] for i in range(d)) + phase
    vals = np.stack([amplitude * direction[i] * np.cos(arg) for i in range(d)])
    return Field(grid, vals)


def single_mode_scalar(grid: TorusGrid, k, amplitude: float = 1.0, phase: float = 0.0) -> Field:
    k = np.asarray(k, dtype=float)
    xs = grid.meshgrid()
    arg = 2 * np.pi * sum(k[i] * xs[i] for i in range(grid.dim)) + phase
    return Field(grid, amplitude * np.cos(arg))


def _nyquist_free_noise(grid: TorusGrid, rng: np.random.Generator, components: int) -> Field:
    """White noise with the direction-ambiguous Nyquist rows zeroed."""
    shape = ((components,) if components > 1 else ()) + grid.shape
    w = rng.standard_normal(shape)
    f = Field(grid, w)
    mask = np.ones(grid.shape)
    for k in grid.wavenumbers():
        mask = mask * (np.abs(np.asarray(k)) != grid.n // 2)
    return Field.from_coeffs(grid, f.coeffs * mask)


def random_besov(
    grid: TorusGrid,
    s: float,
    p: float,
    sigma: float,
    seed: int,
    band: tuple[int, int | None] = (0, None),
    divergence_free: bool = False,
    components: int | None = None,
    amplitude: float = 1.0,
) -> Field:
    """Random-phase field with prescribed shell decay d_q ~ amplitude * lambda_q^-sigma.

    sigma = 0 saturates the sup norm uniformly across shells; sigma > 0
    gives tail-vanishing coefficients. Targets are exact under the sharp
    cutoff because each sharp shell is rescaled independently.
    """
    if sigma < 0:
        raise ValidationError("shell-decay exponent must be >= 0")
    comps = components if components is not None else (grid.dim if divergence_free else 1)
    rng = rng_for(seed)
    noise = _nyquist_free_noise(grid, rng, comps)
    if divergence_free:
        if comps != grid.dim:
            raise ValidationError("divergence-free output needs one component per axis")
        noise = leray_project(noise)
    lo, hi = band
    hi = grid.q_max if hi is None else min(hi, grid.q_max)
    total = np.zeros_like(noise.coeffs)
    for q in range(max(lo, 0), hi + 1):
        shell = project_shell(noise, q, _SHARP)
        norm = lp_norm(shell, p)
        if norm == 0.0:
            continue
        target = amplitude * lambda_q(q) ** (-sigma - s)
        total = total + (target / norm) * shell.coeffs
    return Field.from_coeffs(grid, total)


def density_profile(grid: TorusGrid, contrast: float, seed: int, decay: float = 2.0,
                    band_hi: int = 3) -> Field:
    """rho = 1 + contrast * g with band-limited g, sup-normalized to |g| <= 1."""
    if not 0.0 <= contrast < 1.0:
        raise ValidationError("density contrast must lie in [0, 1)")
    if contrast == 0.0:
        return constant_field(grid, 1.0)
    g = random_besov(grid, s=0.5, p=2.0, sigma=decay, seed=seed, band=(0, band_hi))
    sup = np.abs(g.values).max()
    return Field(grid, 1.0 + contrast * g.values / sup)


def from_spec(grid: TorusGrid, spec: GeneratorSpec) -> Field:
    """Materialize a scalar/vector field from a serializable spec."""
    p = dict(spec.params)
    if spec.kind == "constant":
        return constant_field(grid, p.get("value", 1.0))
    if spec.kind == "single_mode":
        if p.pop("vector", False):
            return single_mode_velocity(grid, p["k"], p.get("amplitude", 1.0), p.get("phase", 0.0))
        return single_mode_scalar(grid, p["k"], p.get("amplitude", 1.0), p.get("phase", 0.0))
    if spec.kind == "random_besov":
        return random_besov(
            grid,
            s=p.get("s", 1.0 / 3.0),
            p=p.get("p", 3.0),
            sigma=p.get("sigma", 0.0),
            seed=spec.seed,
            band=(p.get("band_lo", 0), p.get("band_hi", None)),
            divergence_free=p.get("divergence_free", False),
            components=p.get("components", None),
            amplitude=p.get("amplitude", 1.0),
        )
    if spec.kind == "density_profile":
        return density_profile(
            grid,
            contrast=p.get("contrast", 0.2),
            seed=spec.seed,
            decay=p.get("decay", 2.0),
            band_hi=p.get("band_hi", 3),
        )
    raise ValidationError(f"spec kind {spec.kind!r} does not produce a plain field")


def state_from_specs(grid: TorusGrid, rho_spec: GeneratorSpec, u_spec: GeneratorSpec,
                     mu: float = 0.0, t: float = 0.0) -> SolutionState:
    if rho_spec.kind == "taylor_green" or u_spec.kind == "taylor_green":
        return taylor_green(grid, mu=mu, t=t, amplitude=u_spec.params.get("amplitude", 1.0))
    rho = from_spec(grid, rho_spec)
    u = from_spec(grid, u_spec)
    if u.comp_shape != (grid.dim,):
        raise ValidationError("velocity spec must produce a vector field")
    return SolutionState(rho=rho, u=u, t=t, mu=mu)
