"""Scale-by-scale energy budget for density-weighted velocity fields.

The coarse-grained energy at cut Q is E_{<=Q} = (1/2) int |(rho u)_{<=Q}|^2
/ rho_{<=Q}, carried by the density-weighted (Favre-type) velocity
U = (rho u)_{<=Q} / rho_{<=Q}. Its evolution balances the nonlinear/pressure
flux Pi_Q, the viscous drain eps_Q, and the work of the force; the residual
of that balance on a snapshot series is the main diagnostic here.

The commutator tensor F_Q = (rho u x u)_{<=Q} - U x (rho u)_{<=Q} admits an
exact five-term decomposition built from the symmetric remainder r_Q; both
the decomposition and the remainder identities hold to round-off on the
lattice and are exposed as checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .besov import BesovParams, localized_sum, shell_coefficients
from .cutoffs import CutoffProfile
from .errors import MissingPressureWarning, NonPositiveCoarseDensity, ValidationError
from .grid import Field
from .spectral import apply_multiplier, gradient, low_multiplier, lp_norm
from .state import SolutionState, total_energy


def _low(f: Field, q_cut: int, cutoff: CutoffProfile) -> Field:
    return apply_multiplier(f, low_multiplier(f.grid, q_cut, cutoff))


def favre_velocity(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> tuple[Field, float]:
    """U = (rho u)_{<=Q} / rho_{<=Q}; also returns min rho_{<=Q}."""
    rho_low = _low(state.rho, q_cut, cutoff)
    min_rho = float(rho_low.values.min())
    if min_rho <= 0.0:
        raise NonPositiveCoarseDensity(
            f"min coarse density {min_rho:.3e} at cut {q_cut}; cut too small for this density contrast"
        )
    mom_low = _low(state.momentum, q_cut, cutoff)
    return Field(state.grid, mom_low.values / rho_low.values), min_rho


def coarse_energy(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> float:
    """E_{<=Q} = (1/2) int |(rho u)_{<=Q}|^2 / rho_{<=Q}."""
    g = state.grid
    rho_low = _low(state.rho, q_cut, cutoff)
    if rho_low.values.min() <= 0.0:
        raise NonPositiveCoarseDensity(f"coarse density nonpositive at cut {q_cut}")
    mom_low = _low(state.momentum, q_cut, cutoff)
    dens = np.sum(mom_low.values ** 2, axis=0) / rho_low.values
    return float(0.5 * g.cell_volume * np.sum(dens))


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[:, None] * b[None, :]


def flux_tensor(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> Field:
    """Commutator tensor F_Q = (rho u x u)_{<=Q} - U x (rho u)_{<=Q}."""
    g = state.grid
    rho, u = state.rho.values, state.u.values
    mom = rho * u
    mom_low = _low(Field(g, mom), q_cut, cutoff).values
    rho_low = _low(state.rho, q_cut, cutoff).values
    if rho_low.min() <= 0.0:
        raise NonPositiveCoarseDensity(f"coarse density nonpositive at cut {q_cut}")
    muu_low = _low(Field(g, _outer(mom, u)), q_cut, cutoff).values
    return Field(g, muu_low - _outer(mom_low / rho_low, mom_low))


def remainder(f: Field, g: Field, q_cut: int, cutoff: CutoffProfile) -> Field:
    """Symmetric remainder r_Q(f,g), expanded into multiplier applications.

    r_Q(f,g) = (fg)_{<=Q} - g f_{<=Q} - f g_{<=Q} + fg, the low-pass average
    of the increment product (f(.-y)-f)(g(.-y)-g).
    """
    f.same_grid(g)
    fg_low = _low(f * g, q_cut, cutoff)
    f_low = _low(f, q_cut, cutoff)
    g_low = _low(g, q_cut, cutoff)
    vals = fg_low.values - g.values * f_low.values - f.values * g_low.values + f.values * g.values
    return Field(f.grid, vals)


def remainder3(rho: Field, u: Field, q_cut: int, cutoff: CutoffProfile) -> Field:
    """Tensor remainder over one density and two velocity increments."""
    rho.same_grid(u)
    g = rho.grid
    d = g.dim
    r, uv = rho.values, u.values
    low = lambda arr: _low(Field(g, arr), q_cut, cutoff).values
    ru = r * uv
    uu = uv[:, None] * uv[None, :]
    ruu = r * uu
    u_low = low(uv)
    ru_low = low(ru)
    out = (
        low(ruu)
        - ru_low[:, None] * uv[None, :]
        - ru_low[None, :] * uv[:, None]
        + low(r) * uu
        - r * low(uu)
        + r * (u_low[:, None] * uv[None, :] + u_low[None, :] * uv[:, None])
        - r * uu
    )
    assert out.shape == (d, d) + g.shape
    return Field(g, out)


def remainder_quadrature(f: Field, g: Field, q_cut: int, cutoff: CutoffProfile) -> Field:
    """Direct y-quadrature oracle for r_Q(f,g); O(N^{2d}), test sizes only."""
    f.same_grid(g)
    gr = f.grid
    kernel = Field.from_coeffs(gr, low_multiplier(gr, q_cut, cutoff).astype(np.complex128)).values
    acc = np.zeros(gr.shape)
    fv, gv = f.values, g.values
    axes = tuple(range(gr.dim))
    for idx in np.ndindex(*gr.shape):
        w = kernel[idx]
        if w == 0.0:
            continue
        fs = np.roll(fv, idx, axis=axes)
        gs = np.roll(gv, idx, axis=axes)
        acc += w * (fs - fv) * (gs - gv)
    return Field(gr, acc * gr.cell_volume)


def decomposition_terms(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> dict[str, Field]:
    """The five tensors whose sum reproduces F_Q exactly."""
    g = state.grid
    rho, u = state.rho.values, state.u.values
    rho_low = _low(state.rho, q_cut, cutoff).values
    if rho_low.min() <= 0.0:
        raise NonPositiveCoarseDensity(f"coarse density nonpositive at cut {q_cut}")
    u_low = _low(state.u, q_cut, cutoff).values
    mom_low = _low(state.momentum, q_cut, cutoff).values
    ell = mom_low - rho_low * u_low
    u_high = u - u_low
    rho_high = rho - rho_low
    uu = u[:, None] * u[None, :]
    uu_low = _low(Field(g, uu), q_cut, cutoff).values
    return {
        "increment_remainder": remainder3(state.rho, state.u, q_cut, cutoff),
        "coarse_defect_square": Field(g, -_outer(ell, ell) / rho_low),
        "high_high": Field(g, rho_high * _outer(u_high, u_high)),
        "cross_sym": Field(g, _outer(ell, u_high) + _outer(u_high, ell)),
        "velocity_commutator": Field(g, rho * (uu_low - _outer(u_low, u_low))),
    }


def decomposition_check(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> float:
    """Relative L2 residual of the five-term identity for F_Q.

    Normalized by ||F_Q||_2; at cuts where the projection is the identity
    F_Q vanishes identically, so the residual falls back to the momentum
    flux scale ||(rho u x u)_{<=Q}||_2 to stay meaningful.
    """
    g = state.grid
    fq = flux_tensor(state, q_cut, cutoff)
    total = sum(t.values for t in decomposition_terms(state, q_cut, cutoff).values())
    ref = lp_norm(fq, 2.0)
    scale = lp_norm(_low(Field(g, _outer(state.momentum.values, state.u.values)), q_cut, cutoff), 2.0)
    resid = lp_norm(Field(g, fq.values - total), 2.0)
    denom = ref if ref > 1e-12 * scale else scale
    return resid / denom if denom > 0 else resid


@dataclass
class FluxParts:
    """Pi_Q split into its advective and pressure contributions."""

    advective: float
    pressure: float
    pressure_missing: bool

    @property
    def total(self) -> float:
        return self.advective + self.pressure


def flux(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> FluxParts:
    """Pi_Q = int F_Q : grad U + int p_{<=Q} div U."""
    g = state.grid
    U, _ = favre_velocity(state, q_cut, cutoff)
    grad_u = gradient(U)  # grad_u[i, j] = d_i U_j
    fq = flux_tensor(state, q_cut, cutoff)
    adv = float(g.cell_volume * np.sum(fq.values * grad_u.values))
    if state.p is None:
        warnings.warn("state has no pressure; Pi_Q reported without the pressure term",
                      MissingPressureWarning, stacklevel=2)
        return FluxParts(adv, 0.0, True)
    p_low = _low(state.p, q_cut, cutoff)
    div_u = np.trace(grad_u.values)  # sum_i d_i U_i
    pres = float(g.cell_volume * np.sum(p_low.values * div_u))
    return FluxParts(adv, pres, False)


def viscous_density(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> float:
    """Instantaneous mu * int grad u_{<=Q} : grad U."""
    if state.mu == 0.0:
        return 0.0
    U, _ = favre_velocity(state, q_cut, cutoff)
    u_low = _low(state.u, q_cut, cutoff)
    val = state.grid.cell_volume * np.sum(gradient(u_low).values * gradient(U).values)
    return float(state.mu * val)


def dissipation_density(state: SolutionState) -> float:
    """Instantaneous mu * ||grad u||_2^2."""
    if state.mu == 0.0:
        return 0.0
    val = state.grid.cell_volume * np.sum(gradient(state.u).values ** 2)
    return float(state.mu * val)


def force_density(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> float:
    """Instantaneous int (rho f)_{<=Q} . U."""
    if state.f_ext is None:
        return 0.0
    g = state.grid
    U, _ = favre_velocity(state, q_cut, cutoff)
    rf_low = _low(Field(g, state.rho.values * state.f_ext.values), q_cut, cutoff)
    return float(g.cell_volume * np.sum(rf_low.values * U.values))


def _trapezoid(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral from times[0]."""
    out = np.zeros_like(values)
    if len(times) > 1:
        increments = 0.5 * np.diff(times) * (values[1:] + values[:-1])
        out[1:] = np.cumsum(increments)
    return out


def _check_series(states: list[SolutionState]) -> np.ndarray:
    if len(states) < 2:
        raise ValidationError("time-integrated diagnostics need at least 2 snapshots")
    g = states[0].grid
    mu = states[0].mu
    for s in states[1:]:
        if s.grid != g:
            raise ValidationError("snapshots live on different grids")
        if s.mu != mu:
            raise ValidationError("snapshots carry inconsistent viscosity")
    times = np.array([s.t for s in states])
    if np.any(np.diff(times) <= 0):
        raise ValidationError("snapshot times must be strictly increasing")
    return times


def viscous_term(states: list[SolutionState], q_cut: int, cutoff: CutoffProfile) -> float:
    """eps_Q(t_end): trapezoid time integral of the coarse viscous drain."""
    times = _check_series(states)
    vals = np.array([viscous_density(s, q_cut, cutoff) for s in states])
    return float(_trapezoid(times, vals)[-1])


def viscous_total(states: list[SolutionState]) -> float:
    """eps(t_end) = mu int_0^t ||grad u||_2^2."""
    times = _check_series(states)
    vals = np.array([dissipation_density(s) for s in states])
    return float(_trapezoid(times, vals)[-1])


def budget_residual(states: list[SolutionState], q_cut: int, cutoff: CutoffProfile) -> float:
    """|E_{<=Q}(t) - E_{<=Q}(0) - int Pi_Q + eps_Q - force work| at t_end."""
    times = _check_series(states)
    pi = np.array([flux(s, q_cut, cutoff).total for s in states])
    visc = np.array([viscous_density(s, q_cut, cutoff) for s in states])
    forc = np.array([force_density(s, q_cut, cutoff) for s in states])
    lhs = coarse_energy(states[-1], q_cut, cutoff) - coarse_energy(states[0], q_cut, cutoff)
    rhs = _trapezoid(times, pi)[-1] - _trapezoid(times, visc)[-1] + _trapezoid(times, forc)[-1]
    return abs(lhs - rhs)


@dataclass
class FluxRow:
    """One (t, Q) record of the budget table."""

    t: float
    q_cut: int
    energy_low: float
    flux: float
    flux_pressure: float
    viscous: float
    force: float
    residual: float


@dataclass
class FluxSpectrum:
    """Budget table over snapshots and cuts, plus the global quantities."""

    rows: list[FluxRow]
    energy: dict[float, float]        # t -> E(t)
    dissipation: dict[float, float]   # t -> eps(t)

    def at(self, t: float, q_cut: int) -> FluxRow:
        for r in self.rows:
            if r.t == t and r.q_cut == q_cut:
                return r
        raise KeyError((t, q_cut))


def instantaneous_budget(state: SolutionState, cutoff: CutoffProfile, q_cuts: list[int]) -> dict:
    """Per-cut instantaneous budget quantities for one snapshot.

    Pure per-snapshot work; snapshot series assemble cumulative integrals
    from these, so snapshots can be evaluated in parallel and reduced in
    order deterministically. Fuses the shared projections (the per-state
    Fourier coefficients of rho, rho*u, u x u, ... are cut-independent)
    instead of composing the one-quantity functions.
    """
    g = state.grid
    d = g.dim
    vol = g.cell_volume
    rho, u = state.rho.values, state.u.values
    mom_f = Field(g, rho * u)
    uu_f = Field(g, _outer(rho * u, u))
    rf_f = None if state.f_ext is None else Field(g, rho * state.f_ext.values)
    grad_u_coeffs = None
    if state.mu > 0.0:
        grad_u_coeffs = gradient(state.u).coeffs

    def ifft(c):
        return np.fft.ifftn(c, axes=tuple(range(-d, 0))).real * g.n ** d

    e_low, pi, pi_pres, visc, forc = [], [], [], [], []
    for q_cut in q_cuts:
        mult = low_multiplier(g, q_cut, cutoff)
        rho_low = ifft(state.rho.coeffs * mult)
        if rho_low.min() <= 0.0:
            raise NonPositiveCoarseDensity(f"coarse density nonpositive at cut {q_cut}")
        mom_low = ifft(mom_f.coeffs * mult)
        e_low.append(0.5 * vol * np.sum(np.sum(mom_low ** 2, axis=0) / rho_low))
        U = Field(g, mom_low / rho_low)
        grad_U = gradient(U).values
        fq = ifft(uu_f.coeffs * mult) - _outer(mom_low / rho_low, mom_low)
        adv = vol * np.sum(fq * grad_U)
        pres = 0.0
        if state.p is not None:
            p_low = ifft(state.p.coeffs * mult)
            pres = vol * np.sum(p_low * np.trace(grad_U))
        pi.append(adv + pres)
        pi_pres.append(pres)
        if grad_u_coeffs is not None:
            grad_u_low = ifft(grad_u_coeffs * mult)
            visc.append(state.mu * vol * np.sum(grad_u_low * grad_U))
        else:
            visc.append(0.0)
        forc.append(vol * np.sum(ifft(rf_f.coeffs * mult) * U.values) if rf_f is not None else 0.0)
    return {
        "t": state.t,
        "q_cuts": list(q_cuts),
        "energy_low": np.array(e_low),
        "flux": np.array(pi),
        "flux_pressure": np.array(pi_pres),
        "viscous_density": np.array(visc),
        "force_density": np.array(forc),
        "energy": total_energy(state),
        "dissipation_density": dissipation_density(state),
    }


def flux_spectrum(states: list[SolutionState], cutoff: CutoffProfile,
                  q_cuts: list[int] | None = None, instants: list[dict] | None = None) -> FluxSpectrum:
    """Per-snapshot, per-cut budget table with cumulative time integrals."""
    if len(states) > 1:
        _check_series(states)
    times = np.array([s.t for s in states])
    g = states[0].grid
    qs = list(range(-1, g.q_max + 1)) if q_cuts is None else list(q_cuts)
    if instants is None:
        instants = [instantaneous_budget(s, cutoff, qs) for s in states]
    eps_global = _trapezoid(times, np.array([inst["dissipation_density"] for inst in instants]))
    rows: list[FluxRow] = []
    for iq, q_cut in enumerate(qs):
        e_low = np.array([inst["energy_low"][iq] for inst in instants])
        pi = np.array([inst["flux"][iq] for inst in instants])
        pi_pres = np.array([inst["flux_pressure"][iq] for inst in instants])
        visc = _trapezoid(times, np.array([inst["viscous_density"][iq] for inst in instants]))
        forc = _trapezoid(times, np.array([inst["force_density"][iq] for inst in instants]))
        int_pi = _trapezoid(times, pi)
        for i, s in enumerate(states):
            resid = abs(e_low[i] - e_low[0] - int_pi[i] + visc[i] - forc[i])
            rows.append(FluxRow(float(s.t), int(q_cut), float(e_low[i]), float(pi[i]),
                                float(pi_pres[i]), float(visc[i]), float(forc[i]), float(resid)))
    energy = {inst["t"]: inst["energy"] for inst in instants}
    dissip = {s.t: float(eps_global[i]) for i, s in enumerate(states)}
    return FluxSpectrum(rows, energy, dissip)


@dataclass
class BalanceReport:
    """Global balance residual and the tail values behind it."""

    energy_change: float
    dissipation: float
    force_work: float
    residual: float
    tail_cut: int
    tail_energy_gap: float      # |E_{<=Q}(t) - E(t)| at the tail cut
    tail_flux_integral: float   # int Pi_Q at the tail cut
    tail_viscous_gap: float     # |eps_Q - eps| at the tail cut
    tail_force_gap: float       # |force_Q - force| at the tail cut


def energy_balance_check(states: list[SolutionState], cutoff: CutoffProfile) -> BalanceReport:
    """Global balance E(t)-E(0) = -eps(t) + force work, with tail diagnostics."""
    times = _check_series(states)
    e0, e1 = total_energy(states[0]), total_energy(states[-1])
    eps = viscous_total(states)
    force_vals = []
    for s in states:
        if s.f_ext is None:
            force_vals.append(0.0)
        else:
            force_vals.append(float(s.grid.cell_volume * np.sum(s.rho.values * s.u.values * s.f_ext.values)))
    force = float(_trapezoid(times, np.array(force_vals))[-1])
    residual = abs(e1 - e0 + eps - force)

    q_tail = states[0].grid.q_max - 2
    pi = np.array([flux(s, q_tail, cutoff).total if s.p is not None else
                   flux_tensor_contract(s, q_tail, cutoff) for s in states])
    tail_flux = float(_trapezoid(times, pi)[-1])
    eps_q = viscous_term(states, q_tail, cutoff) if states[0].mu > 0 else 0.0
    force_q = float(_trapezoid(times, np.array([force_density(s, q_tail, cutoff) for s in states]))[-1])
    e_low = coarse_energy(states[-1], q_tail, cutoff)
    return BalanceReport(
        energy_change=e1 - e0,
        dissipation=eps,
        force_work=force,
        residual=residual,
        tail_cut=q_tail,
        tail_energy_gap=abs(e_low - e1),
        tail_flux_integral=tail_flux,
        tail_viscous_gap=abs(eps_q - eps),
        tail_force_gap=abs(force_q - force),
    )


def flux_tensor_contract(state: SolutionState, q_cut: int, cutoff: CutoffProfile) -> float:
    """Advective part of Pi_Q only (used when pressure is absent)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MissingPressureWarning)
        return flux(state, q_cut, cutoff).advective


@dataclass
class FluxBoundRow:
    q_cut: int
    flux_abs: float
    bound: float

    @property
    def ratio(self) -> float:
        if self.bound == 0.0:
            return 0.0 if self.flux_abs == 0.0 else math.inf
        return self.flux_abs / self.bound


def flux_bound_report(state: SolutionState, a: float, b: float, q_cuts,
                      cutoff: CutoffProfile) -> list[FluxBoundRow]:
    """Measure |Pi_Q| against the kernel-sum bound D_u * [bracket].

    bracket = D_u (D_rho ||u||_b + D_u) + D_rho D_p, with every D at
    smoothness 1/3; the pressure term drops out when p is absent.
    """
    third = 1.0 / 3.0
    du = localized_sum(shell_coefficients(state.u, BesovParams(third, b), cutoff)).values
    drho = localized_sum(shell_coefficients(state.rho, BesovParams(third, a), cutoff)).values
    dp = None
    if state.p is not None:
        dp = localized_sum(shell_coefficients(state.p, BesovParams(third, b / 2.0), cutoff)).values
    u_b = lp_norm(state.u, b)
    rows = []
    for q_cut in q_cuts:
        iq = int(q_cut) + 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MissingPressureWarning)
            pi = flux(state, q_cut, cutoff).total
        bracket = du[iq] * (drho[iq] * u_b + du[iq])
        if dp is not None:
            bracket += drho[iq] * dp[iq]
        rows.append(FluxBoundRow(int(q_cut), abs(pi), du[iq] * bracket))
    return rows


def reconstruct_pressure(state: SolutionState) -> Field:
    """Zero-mean pressure for unit density: solve lap p = -div(u . grad u) + div f."""
    if abs(state.rho_hi - 1.0) > 1e-12 or abs(state.rho_lo - 1.0) > 1e-12:
        raise ValidationError("pressure reconstruction implemented for unit density only")
    g = state.grid
    d = g.dim
    gu = gradient(state.u).values  # gu[i, j] = d_i u_j
    adv = np.stack([np.sum(state.u.values * gu[:, j], axis=0) for j in range(d)])
    rhs = -adv
    if state.f_ext is not None:
        rhs = rhs + state.f_ext.values
    div_rhs = np.asarray(np.sum(
        [gradient(Field(g, rhs[i])).values[i] for i in range(d)], axis=0))
    k2 = sum(np.asarray(k) ** 2 for k in g.wavenumbers())
    inv = np.zeros_like(k2)
    np.divide(1.0, -((2 * np.pi) ** 2) * k2, out=inv, where=k2 > 0)
    return Field.from_coeffs(g, Field(g, div_rhs).coeffs * inv)
