"""2D pseudo-spectral solver for variable-density incompressible flow.

Density is advanced in conservative form (d_t rho = -div(rho u)); velocity
in the non-conservative form

    d_t u = -(u . grad) u - grad(p)/rho + (mu/rho) lap(u) + f,

with the pressure chosen so the right side is divergence-free. The
variable-coefficient problem div(grad p / rho) = div(rhs) is solved by a
Richardson iteration preconditioned with the constant-coefficient inverse
Laplacian scaled by the midrange of 1/rho; it contracts for moderate
density contrast (roughly below 0.6). A final spectral projection pins
div u to round-off after every stage.

Quadratic products are dealiased with the 2/3 rule when enabled; time
stepping is classical RK4 under an advective CFL bound.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CFLViolation, ConfigError, GibbsOvershootWarning, PressureIterationError
from .generators import GeneratorSpec, state_from_specs
from .grid import Field, TorusGrid
from .spectral import dealias_mask
from .state import SolutionState


@dataclass(frozen=True)
class ForcingSpec:
    """Band-limited steady or time-periodic single-mode body force."""

    kind: str = "none"          # none | single_mode
    k: tuple[int, ...] = (1, 0)
    amplitude: float = 0.0
    omega: float = 0.0          # temporal factor cos(omega t); 0 = steady

    def __post_init__(self):
        if self.kind not in ("none", "single_mode"):
            raise ConfigError(f"forcing kind must be 'none' or 'single_mode', got {self.kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    grid: TorusGrid
    mu: float
    t_end: float
    dt: float
    dealias: bool = True
    pressure_tol: float = 1e-12
    pressure_maxiter: int = 400
    cfl_limit: float = 0.4
    snapshot_every: int = 1
    forcing: ForcingSpec = ForcingSpec()

    def __post_init__(self):
        if self.grid.dim != 2:
            raise ConfigError("solver supports d = 2 only")
        if self.dt <= 0 or self.t_end < 0:
            raise ConfigError("dt must be positive and t_end nonnegative")
        if not 0.0 < self.cfl_limit <= 0.5:
            raise ConfigError("cfl_limit must lie in (0, 0.5]")
        if self.pressure_tol > 1e-10:
            raise ConfigError("pressure_tol must be <= 1e-10")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")

    @property
    def n_steps(self) -> int:
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(self.t_end, self.dt):
            raise ConfigError("t_end must be an integer multiple of dt")
        return n


class _Workspace:
    """Per-grid transforms and masks reused across stages."""

    def __init__(self, grid: TorusGrid, dealias: bool):
        self.grid = grid
        d = grid.dim
        self.n = grid.n
        self.axes = tuple(range(-d, 0))
        ks = grid.wavenumbers_deriv()
        self.ik = [2j * np.pi * np.asarray(k) for k in ks]
        k2 = sum(np.asarray(k) ** 2 for k in grid.wavenumbers())
        self.inv_lap = np.zeros_like(k2)
        np.divide(1.0, -((2 * np.pi) ** 2) * k2, out=self.inv_lap, where=k2 > 0)
        self.lap = -((2 * np.pi) ** 2) * k2
        # projection uses the same signless-Nyquist convention as the derivatives
        self.kvec = [np.asarray(k) for k in ks]
        kd2 = sum(np.asarray(k) ** 2 for k in ks)
        inv_k2 = np.zeros_like(kd2)
        np.divide(1.0, kd2, out=inv_k2, where=kd2 > 0)
        self.inv_k2 = inv_k2
        self.mask = dealias_mask(grid) if dealias else None

    def fft(self, v):
        return np.fft.fftn(v, axes=self.axes)

    def ifft(self, c):
        return np.fft.ifftn(c, axes=self.axes).real

    def trunc(self, c):
        return c if self.mask is None else c * self.mask

    def grad_hat(self, c_hat):
        return [self.ik[i] * c_hat for i in range(self.grid.dim)]

    def leray_hat(self, u_hat):
        kdotu = sum(self.kvec[i] * u_hat[i] for i in range(self.grid.dim))
        return np.stack([u_hat[i] - self.kvec[i] * kdotu * self.inv_k2
                         for i in range(self.grid.dim)])


def _pressure_solve(ws: _Workspace, beta: np.ndarray, rhs_div_hat: np.ndarray,
                    p_hat0: np.ndarray, tol: float, maxiter: int):
    """Solve div(beta grad p) = div(rhs) for zero-mean p, spectral residuals.

    beta = 1/rho. Preconditioner: inverse Laplacian scaled by the midrange
    of beta. With dealiasing on, the problem is restricted to the kept
    band, where the truncated operator stays symmetric positive definite
    and the Richardson contraction is bounded by the relative spread of
    beta; aliased modes outside the band would otherwise stall the
    iteration near the round-off floor.
    """
    d = ws.grid.dim
    m = 0.5 * (beta.min() + beta.max())
    p_hat = ws.trunc(p_hat0.copy())
    rhs_div_hat = ws.trunc(rhs_div_hat)
    rhs_norm = np.sqrt(np.sum(np.abs(rhs_div_hat) ** 2))
    if rhs_norm == 0.0:
        return np.zeros_like(p_hat), 0, 0.0
    best = np.inf
    stalled = 0
    contraction = 0.0
    prev_res = np.inf
    for it in range(maxiter):
        grad_p = [ws.ifft(g) for g in ws.grad_hat(p_hat)]
        div_term = ws.trunc(sum(ws.ik[i] * ws.fft(beta * grad_p[i]) for i in range(d)))
        residual_hat = rhs_div_hat - div_term
        res = np.sqrt(np.sum(np.abs(residual_hat) ** 2))
        if res <= tol * rhs_norm:
            return p_hat, it, contraction
        if np.isfinite(prev_res) and prev_res > 0:
            contraction = res / prev_res
        stalled = stalled + 1 if res > 0.99 * best else 0
        best = min(best, res)
        if stalled >= 10:
            raise PressureIterationError(
                f"pressure iteration stalled at relative residual {res / rhs_norm:.3e} "
                f"(tol {tol:.1e}, contraction {contraction:.3f}); "
                "density contrast too large for the preconditioner")
        prev_res = res
        p_hat = p_hat + residual_hat * ws.inv_lap / m
        p_hat[(0,) * d] = 0.0
    raise PressureIterationError(
        f"pressure iteration did not reach tol {tol:.1e} in {maxiter} iterations "
        f"(last contraction {contraction:.3f})")


def _forcing_values(cfg: SolverConfig, t: float) -> np.ndarray | None:
    fs = cfg.forcing
    if fs.kind == "none" or fs.amplitude == 0.0:
        return None
    from .generators import single_mode_velocity
    f = single_mode_velocity(cfg.grid, fs.k, fs.amplitude)
    factor = np.cos(fs.omega * t) if fs.omega != 0.0 else 1.0
    return f.values * factor


class DensityFlowSolver:
    """RK4 time stepper producing snapshot series for the diagnostics."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.ws = _Workspace(cfg.grid, cfg.dealias)
        self._p_hat = np.zeros(cfg.grid.shape, dtype=np.complex128)
        self.pressure_iterations: list[int] = []

    def _rhs(self, rho: np.ndarray, u_hat: np.ndarray, t: float):
        """(d_t rho, d_t u_hat, p_hat) for the current fields."""
        ws = self.ws
        cfg = self.cfg
        d = 2
        u = np.stack([ws.ifft(u_hat[i]) for i in range(d)])
        # density transport, conservative form
        mom_hat = np.stack([ws.fft(rho * u[i]) for i in range(d)])
        drho_hat = -sum(ws.ik[i] * mom_hat[i] for i in range(d))
        drho = ws.ifft(ws.trunc(drho_hat))
        # advective term (u . grad) u
        adv = np.empty((d,) + ws.grid.shape)
        for j in range(d):
            dj = [ws.ifft(ws.ik[i] * u_hat[j]) for i in range(d)]
            adv[j] = sum(u[i] * dj[i] for i in range(d))
        rhs = -adv
        if cfg.mu > 0.0:
            lap_u = np.stack([ws.ifft(ws.lap * u_hat[i]) for i in range(d)])
            rhs += (cfg.mu / rho) * lap_u
        f_vals = _forcing_values(cfg, t)
        if f_vals is not None:
            rhs = rhs + f_vals
        # pressure closes the divergence of the right side
        rhs_hat = np.stack([ws.fft(rhs[i]) for i in range(d)])
        div_rhs_hat = sum(ws.ik[i] * rhs_hat[i] for i in range(d))
        beta = 1.0 / rho
        p_hat, iters, _ = _pressure_solve(ws, beta, div_rhs_hat, self._p_hat,
                                          cfg.pressure_tol, cfg.pressure_maxiter)
        self._p_hat = p_hat
        self.pressure_iterations.append(iters)
        grad_p = [ws.ifft(g) for g in ws.grad_hat(p_hat)]
        du = rhs - np.stack([beta * grad_p[i] for i in range(d)])
        du_hat = np.stack([ws.fft(du[i]) for i in range(d)])
        du_hat = ws.leray_hat(du_hat)  # clean residual divergence to round-off
        return drho, ws.trunc(du_hat), p_hat

    def _check_cfl(self, u: np.ndarray) -> None:
        umax = float(np.abs(u).max())
        if umax == 0.0:
            return
        dx = 1.0 / self.cfg.grid.n
        if self.cfg.dt > self.cfg.cfl_limit * dx / umax:
            raise CFLViolation(
                f"dt = {self.cfg.dt:.3e} exceeds CFL bound {self.cfg.cfl_limit * dx / umax:.3e} "
                f"(max |u| = {umax:.3e})")

    def step(self, state: SolutionState, with_pressure: bool = True) -> SolutionState:
        """One RK4 step; optionally attach the diagnostic pressure."""
        ws = self.ws
        cfg = self.cfg
        rho0 = state.rho.values
        u_hat0 = np.stack([ws.fft(state.u.values[i]) for i in range(2)])
        self._check_cfl(state.u.values)
        dt = cfg.dt

        k1r, k1u, _ = self._rhs(rho0, u_hat0, state.t)
        k2r, k2u, _ = self._rhs(rho0 + 0.5 * dt * k1r, u_hat0 + 0.5 * dt * k1u, state.t + 0.5 * dt)
        k3r, k3u, _ = self._rhs(rho0 + 0.5 * dt * k2r, u_hat0 + 0.5 * dt * k2u, state.t + 0.5 * dt)
        k4r, k4u, _ = self._rhs(rho0 + dt * k3r, u_hat0 + dt * k3u, state.t + dt)

        rho1 = rho0 + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
        u_hat1 = ws.leray_hat(u_hat0 + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u))
        u1 = np.stack([ws.ifft(u_hat1[i]) for i in range(2)])
        t1 = state.t + dt
        next_state = SolutionState(
            rho=Field(cfg.grid, rho1),
            u=Field(cfg.grid, u1),
            t=t1,
            mu=cfg.mu,
        )
        return self.attach_pressure(next_state) if with_pressure else next_state

    def attach_pressure(self, state: SolutionState) -> SolutionState:
        """Diagnostic pressure and force consistent with the given fields."""
        ws = self.ws
        u_hat = np.stack([ws.fft(state.u.values[i]) for i in range(2)])
        _, _, p_hat = self._rhs(state.rho.values, u_hat, state.t)
        f_vals = _forcing_values(self.cfg, state.t)
        return SolutionState(
            rho=state.rho,
            u=state.u,
            p=Field(self.cfg.grid, ws.ifft(p_hat)),
            f_ext=None if f_vals is None else Field(self.cfg.grid, f_vals),
            t=state.t,
            mu=state.mu,
        )


@dataclass
class RunResult:
    states: list[SolutionState]
    manifest: dict
    gibbs_overshoot: float = 0.0


def config_digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _manifest_payload(cfg: SolverConfig, rho_spec, u_spec) -> dict:
    return {
        "scheme": "rk4-pseudospectral",
        "grid": {"dim": cfg.grid.dim, "n": cfg.grid.n},
        "mu": cfg.mu,
        "t_end": cfg.t_end,
        "dt": cfg.dt,
        "dealias": cfg.dealias,
        "pressure_tol": cfg.pressure_tol,
        "cfl_limit": cfg.cfl_limit,
        "snapshot_every": cfg.snapshot_every,
        "forcing": {"kind": cfg.forcing.kind, "k": list(cfg.forcing.k),
                    "amplitude": cfg.forcing.amplitude, "omega": cfg.forcing.omega},
        "rho_spec": None if rho_spec is None else {"kind": rho_spec.kind, "seed": rho_spec.seed,
                                                   "params": rho_spec.params},
        "u_spec": None if u_spec is None else {"kind": u_spec.kind, "seed": u_spec.seed,
                                               "params": u_spec.params},
    }


def run(cfg: SolverConfig, initial: SolutionState | None = None,
        rho_spec: GeneratorSpec | None = None, u_spec: GeneratorSpec | None = None) -> RunResult:
    """Advance to t_end, collecting snapshots at the configured cadence."""
    if initial is None:
        if rho_spec is None or u_spec is None:
            raise ConfigError("run needs either an initial state or generator specs")
        initial = state_from_specs(cfg.grid, rho_spec, u_spec, mu=cfg.mu)
    solver = DensityFlowSolver(cfg)
    state = initial
    if state.p is None:
        state = solver.attach_pressure(state)
    rho_min0, rho_max0 = state.rho_lo, state.rho_hi
    states = [state]
    overshoot = 0.0
    for istep in range(cfg.n_steps):
        snapshot = (istep + 1) % cfg.snapshot_every == 0 or istep + 1 == cfg.n_steps
        state = solver.step(state, with_pressure=snapshot)
        overshoot = max(overshoot,
                        rho_min0 - state.rho_lo,
                        state.rho_hi - rho_max0)
        if snapshot:
            states.append(state)
    if overshoot > 1e-8:
        warnings.warn(
            f"density left its initial bounds by {overshoot:.3e} (spectral ringing; "
            "decays under grid refinement)", GibbsOvershootWarning, stacklevel=2)
    payload = _manifest_payload(cfg, rho_spec, u_spec)
    manifest = {
        "config": payload,
        "config_hash": config_digest(payload),
        "n_steps": cfg.n_steps,
        "snapshots": len(states),
        "gibbs_overshoot": overshoot,
        "max_pressure_iterations": max(solver.pressure_iterations, default=0),
    }
    return RunResult(states, manifest, overshoot)


# -- weak-form residuals -------------------------------------------------------

_BANK_MODES = ((1, 0), (0, 1), (1, 1), (2, 1), (0, 3), (3, 2), (4, 0))


def weak_test_bank(grid: TorusGrid) -> dict[str, list[Field]]:
    """Fixed bank of steady band-limited test functions (modes |k| <= 4)."""
    from .generators import single_mode_scalar
    scalars = [Field(grid, np.ones(grid.shape))]
    for k in _BANK_MODES:
        scalars.append(single_mode_scalar(grid, k, 1.0, 0.0))
        scalars.append(single_mode_scalar(grid, k, 1.0, 0.5 * np.pi))
    vectors = []
    for s in scalars:
        for axis in range(grid.dim):
            vals = np.zeros((grid.dim,) + grid.shape)
            vals[axis] = s.values
            vectors.append(Field(grid, vals))
    return {"scalar": scalars, "vector": vectors}


@dataclass
class WeakResiduals:
    momentum: np.ndarray
    density: np.ndarray
    incompressibility: np.ndarray

    @property
    def worst(self) -> float:
        return float(max(self.momentum.max(), self.density.max(), self.incompressibility.max()))


def weak_residuals(states: list[SolutionState], bank: dict[str, list[Field]] | None = None) -> WeakResiduals:
    """Residuals of the time-integrated weak identities on a snapshot series.

    Test functions are steady, so the d_t terms drop and each identity
    becomes boundary-terms-minus-trapezoid-integrals; residuals measure how
    nearly the discrete output is a weak solution.
    """
    from .spectral import gradient, laplacian

    if len(states) < 2:
        raise ConfigError("weak residuals need at least 2 snapshots")
    g = states[0].grid
    if bank is None:
        bank = weak_test_bank(g)
    times = np.array([s.t for s in states])
    vol = g.cell_volume
    mu = states[0].mu

    mom_res = []
    for psi in bank["vector"]:
        gpsi = gradient(psi).values        # gpsi[i, j] = d_i psi_j
        lpsi = laplacian(psi).values
        div_psi = np.trace(gpsi)
        boundary = []
        interior = []
        for s in states:
            rho_u = s.rho.values * s.u.values
            boundary.append(vol * np.sum(rho_u * psi.values))
            uu = s.u.values[:, None] * s.u.values[None, :]
            term = vol * np.sum(s.rho.values * uu * gpsi)
            if s.p is not None:
                term += vol * np.sum(s.p.values * div_psi)
            term += mu * vol * np.sum(s.u.values * lpsi)
            if s.f_ext is not None:
                term += vol * np.sum(s.rho.values * s.f_ext.values * psi.values)
            interior.append(term)
        lhs = boundary[-1] - boundary[0]
        rhs = float(np.trapezoid(np.array(interior), times))
        mom_res.append(abs(lhs - rhs))

    dens_res = []
    for eta in bank["scalar"]:
        geta = gradient(eta).values
        boundary = [vol * np.sum(s.rho.values * eta.values) for s in states]
        interior = [vol * np.sum(s.rho.values * np.sum(s.u.values * geta, axis=0)) for s in states]
        lhs = boundary[-1] - boundary[0]
        rhs = float(np.trapezoid(np.array(interior), times))
        dens_res.append(abs(lhs - rhs))

    inc_res = []
    for gamma in bank["scalar"]:
        ggam = gradient(gamma).values
        inc_res.append(max(abs(vol * np.sum(s.u.values * ggam)) for s in states))

    return WeakResiduals(np.array(mom_res), np.array(dens_res), np.array(inc_res))
