"""Shell-coefficient diagnostics: graded norms and the localization kernel.

The basic object is the sequence d_q = lambda_q^s * ||f_q||_{L^p} over the
stored shells q = -1..q_max. Graded norms take an l^r norm of that
sequence; the kernel-weighted sums D_Q concentrate the sequence near Q and
control commutator and tail estimates with Q-independent constants, which
``verify_kernel_estimates`` measures directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .cutoffs import CutoffProfile, lambda_q
from .errors import ValidationError
from .grid import Field
from .spectral import decompose, gradient, lp_norm, project_high, project_low

C0 = "c0"


@dataclass(frozen=True)
class BesovParams:
    """Smoothness s in (0,1], integrability p, summation exponent r (or 'c0')."""

    s: float
    p: float
    r: Union[float, str] = math.inf

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise ValidationError(f"smoothness s must lie in (0,1], got {self.s}")
        if not self.p >= 1.0:
            raise ValidationError(f"integrability p must lie in [1,inf], got {self.p}")
        if self.r != C0 and not (isinstance(self.r, (int, float)) and self.r >= 1.0):
            raise ValidationError(f"summation exponent r must lie in [1,inf] or be 'c0', got {self.r}")


@dataclass
class ShellCoefficients:
    """Weighted shell norms d_q, q = -1..q_max."""

    params: BesovParams
    qs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValidationError("shell coefficients must be nonnegative")


@dataclass
class LocalizedSum:
    """Kernel-weighted sums D_Q = sum_q K_{Q-q} d_q, Q = -1..q_max."""

    params: BesovParams
    qs: np.ndarray
    values: np.ndarray


@dataclass
class C0Norm:
    """sup_q d_q together with the tail sup (decay diagnostic)."""

    norm: float
    tail_sup: float
    tail_start: int


def shell_coefficients(f: Field, params: BesovParams, cutoff: CutoffProfile) -> ShellCoefficients:
    dec = decompose(f, cutoff)
    qs = dec.qs
    vals = np.array([lambda_q(int(q)) ** params.s * lp_norm(s, params.p) for q, s in zip(qs, dec.shells)])
    return ShellCoefficients(params, qs, vals)


def besov_norm(f: Field, params: BesovParams, cutoff: CutoffProfile):
    """l^r norm of the d_q sequence; r == 'c0' reports sup and tail sup."""
    coeffs = shell_coefficients(f, params, cutoff)
    d = coeffs.values
    if params.r == C0:
        tail_start = int(coeffs.qs[-1]) - 2
        tail = d[coeffs.qs >= tail_start]
        return C0Norm(float(d.max()), float(tail.max()), tail_start)
    if np.isinf(params.r):
        return float(d.max())
    return float(np.sum(d ** params.r) ** (1.0 / params.r))


def kernel_weight(s: float, m) -> np.ndarray:
    """K_m: lambda_m^{s-1} for m >= 0, lambda_m^s for m < 0."""
    m = np.asarray(m)
    return np.where(m >= 0, lambda_q(m) ** (s - 1.0), lambda_q(m) ** s)


def kernel_sum(s: float) -> float:
    """Closed form of sum_{m in Z} K_m (two geometric series)."""
    if not 0.0 < s < 1.0:
        raise ValidationError("kernel is summable only for s in (0,1)")
    return 1.0 / (1.0 - 2.0 ** (s - 1.0)) + 1.0 / (2.0 ** s - 1.0)


def localized_sum(coeffs: ShellCoefficients) -> LocalizedSum:
    qs = coeffs.qs
    K = kernel_weight(coeffs.params.s, qs[:, None] - qs[None, :])
    return LocalizedSum(coeffs.params, qs, K @ coeffs.values)


def tail_decay_slope(coeffs: ShellCoefficients, q_lo: int, q_hi: int | None = None) -> float:
    """Least-squares slope of log2 d_q vs q over [q_lo, q_hi] (zeros skipped)."""
    qs = coeffs.qs
    hi = int(qs[-1]) if q_hi is None else q_hi
    sel = (qs >= q_lo) & (qs <= hi) & (coeffs.values > 0)
    if sel.sum() < 2:
        raise ValidationError("need at least two positive coefficients to fit a slope")
    x = qs[sel].astype(float)
    y = np.log2(coeffs.values[sel])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


# -- measured-constant verification of the kernel estimates -------------------

ESTIMATE_IDS = ("commutator", "endpoint", "gradient_low", "tail", "product_gradient")


@dataclass
class EstimateRow:
    q_cut: int
    estimate: str
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs


@dataclass
class EstimateReport:
    rows: list[EstimateRow] = field(default_factory=list)

    def ratios(self, estimate: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.estimate == estimate]
        return (np.array([r.q_cut for r in rows]), np.array([r.ratio for r in rows]))

    def max_ratio(self, estimate: str) -> float:
        return float(self.ratios(estimate)[1].max())

    def growth_slope(self, estimate: str, ratio_floor: float = 1e-10) -> float:
        """Slope of log2(ratio) vs Q; bounded constants give slope <= 0 + noise.

        Ratios at or below ratio_floor are round-off dust (e.g. the high-pass
        of a band-limited field is exactly zero) and are excluded from the fit.
        """
        qs, ratios = self.ratios(estimate)
        pos = ratios > ratio_floor
        if pos.sum() < 2:
            return 0.0
        return float(np.polyfit(qs[pos].astype(float), np.log2(ratios[pos]), 1)[0])

    def growing(self, estimate: str, slope_tol: float = 0.25) -> bool:
        return self.growth_slope(estimate) > slope_tol

    @property
    def failures(self) -> list[str]:
        return [e for e in ESTIMATE_IDS if self.growing(e)]


def holder_conjugate(a: float, b: float) -> float:
    """c with 1/c = 1/a + 1/b, treating 1/inf = 0."""
    inv = (0.0 if np.isinf(a) else 1.0 / a) + (0.0 if np.isinf(b) else 1.0 / b)
    if inv == 0.0:
        return math.inf
    c = 1.0 / inv
    if c < 1.0:
        raise ValidationError(f"exponent relation gives c = {c} < 1")
    return c


def verify_kernel_estimates(
    f: Field,
    g: Field,
    s: float,
    t: float,
    a: float,
    b: float,
    q_cuts,
    cutoff: CutoffProfile,
) -> EstimateReport:
    """Measure LHS/RHS ratios of the five localization estimates per cut.

    The right-hand sides carry no constants; a bounded ratio sequence over
    the cut range is the numerical content of each estimate.
    """
    if not (0.0 < s < 1.0 and 0.0 < t < 1.0):
        raise ValidationError("smoothness exponents must lie in (0,1)")
    c = holder_conjugate(a, b)
    df = localized_sum(shell_coefficients(f, BesovParams(s, a), cutoff)).values
    dg_t = localized_sum(shell_coefficients(g, BesovParams(t, b), cutoff)).values
    dg_s = localized_sum(shell_coefficients(g, BesovParams(s, b), cutoff)).values
    g_inf = lp_norm(g, math.inf)
    g_b = lp_norm(g, b)
    f_a = lp_norm(f, a)
    fg = f * g

    report = EstimateReport()
    for q_cut in q_cuts:
        lam = lambda_q(int(q_cut))
        iq = int(q_cut) + 1  # index of Q in the -1-based arrays
        f_low = project_low(f, q_cut, cutoff)
        g_low = project_low(g, q_cut, cutoff)
        comm = project_low(fg, q_cut, cutoff) - f_low * g_low
        report.rows.append(EstimateRow(q_cut, "commutator", lp_norm(comm, c),
                                       lam ** (-s - t) * df[iq] * dg_t[iq]))
        report.rows.append(EstimateRow(q_cut, "endpoint", lp_norm(comm, a),
                                       lam ** (-s) * df[iq] * g_inf))
        report.rows.append(EstimateRow(q_cut, "gradient_low", lp_norm(gradient(f_low), a),
                                       lam ** (1.0 - s) * df[iq]))
        report.rows.append(EstimateRow(q_cut, "tail", lp_norm(project_high(f, q_cut, cutoff), a),
                                       lam ** (-s) * df[iq]))
        report.rows.append(EstimateRow(q_cut, "product_gradient",
                                       lp_norm(gradient(project_low(fg, q_cut, cutoff)), c),
                                       lam ** (1.0 - s) * (df[iq] * g_b + dg_s[iq] * f_a)))
    return report
