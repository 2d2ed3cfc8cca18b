"""Radial cutoff profiles generating the dyadic shell family.

A profile is a radial function chi with chi == 1 for |xi| <= 1/2 and
support inside the unit ball. The band function is phi(xi) = chi(xi/2) -
chi(xi); shell multipliers are phi_q(xi) = phi(xi / lambda_q) with
lambda_q = 2**q and phi_{-1} = chi. Because every shell is a difference of
two chi evaluations, the shell sum telescopes and the partition of unity
holds to the last bit on any lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ValidationError

SMOOTH = "smooth"
SHARP = "sharp"


def lambda_q(q) -> np.ndarray | float:
    """Dyadic scale 2**q (q = -1 gives 1/2)."""
    return np.ldexp(1.0, q) if np.isscalar(q) else np.ldexp(1.0, np.asarray(q))


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t<=0, 1 for t>=1, exp-blend between."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    if np.any(mid):
        tm = t[mid]
        g = np.exp(-1.0 / tm)
        gc = np.exp(-1.0 / (1.0 - tm))
        out = out.astype(np.float64)
        out[mid] = g / (g + gc)
    return out


def _chi_smooth(r: np.ndarray) -> np.ndarray:
    return _smoothstep(2.0 - 2.0 * np.asarray(r, dtype=np.float64))


def _chi_sharp(r: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(r, dtype=np.float64) <= 0.5, 1.0, 0.0)


@dataclass(frozen=True)
class CutoffProfile:
    """Radial low-pass profile chi and the shell family derived from it."""

    kind: str
    chi: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    def phi(self, r) -> np.ndarray:
        return self.chi(np.asarray(r) / 2.0) - self.chi(r)

    def shell_weight(self, r, q: int) -> np.ndarray:
        """Multiplier phi_q evaluated at radius r (phi_{-1} = chi)."""
        if q == -1:
            return self.chi(r)
        return self.phi(np.asarray(r) / lambda_q(q))

    def low_weight(self, r, q_cut: int) -> np.ndarray:
        """Multiplier chi(r / lambda_{q_cut+1}) for the low-pass f_{<=Q}."""
        return self.chi(np.asarray(r) / lambda_q(q_cut + 1))


def make_cutoff(kind: str = SMOOTH) -> CutoffProfile:
    """Build a cutoff profile and validate its defining constraints."""
    if kind == SMOOTH:
        profile = CutoffProfile(SMOOTH, _chi_smooth)
    elif kind == SHARP:
        profile = CutoffProfile(SHARP, _chi_sharp)
    else:
        raise ValidationError(f"cutoff kind must be 'smooth' or 'sharp', got {kind!r}")
    _validate(profile)
    return profile


def _validate(profile: CutoffProfile, samples: int = 4096) -> None:
    r = np.linspace(0.0, 2.0, samples)
    c = profile.chi(r)
    if not np.all((c >= 0.0) & (c <= 1.0)):
        raise ValidationError("chi must take values in [0, 1]")
    if not np.all(c[r <= 0.5] == 1.0):
        raise ValidationError("chi must equal 1 on |xi| <= 1/2")
    if not np.all(c[r >= 1.0] == 0.0):
        raise ValidationError("chi must vanish outside the unit ball")
    if np.any(np.diff(c) > 1e-12):
        raise ValidationError("chi must be nonincreasing in |xi|")
