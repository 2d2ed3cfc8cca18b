import numpy as np
import pytest

import vdflux as vf
from vdflux.errors import ValidationError


def test_sharp_flat_region(sharp):
    assert sharp.chi(np.array(0.4)) == 1.0
    assert sharp.chi(np.array(0.5)) == 1.0
    assert sharp.chi(np.array(0.51)) == 0.0


def test_smooth_telescoping_value(smooth):
    # phi(0.75) + chi(0.75) telescopes to chi(0.375) = 1
    val = smooth.phi(np.array(0.75)) + smooth.chi(np.array(0.75))
    assert val == pytest.approx(1.0, abs=1e-15)
    # the blend is exactly 1/2 at the midpoint of the transition
    assert smooth.chi(np.array(0.75)) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("kind", ["smooth", "sharp"])
@pytest.mark.parametrize("n", [32, 64])
def test_partition_of_unity_on_lattice(kind, n):
    g = vf.TorusGrid(2, n)
    cut = vf.make_cutoff(kind)
    total = sum(cut.shell_weight(g.k_norm(), q) for q in range(-1, g.q_max + 1))
    assert np.abs(total - 1.0).max() <= 1e-12


def test_profile_bounds_and_monotonicity(cutoff):
    r = np.linspace(0, 1.5, 700)
    c = cutoff.chi(r)
    assert np.all((0.0 <= c) & (c <= 1.0))
    assert np.all(np.diff(c) <= 1e-12)
    assert np.all(c[r >= 1.0] == 0.0)
    assert np.all(c[r <= 0.5] == 1.0)


def test_make_cutoff_rejects_unknown_kind():
    with pytest.raises(ValidationError):
        vf.make_cutoff("boxcar")


def test_lambda_q_values():
    assert vf.lambda_q(-1) == 0.5
    assert vf.lambda_q(0) == 1.0
    assert vf.lambda_q(5) == 32.0


@pytest.mark.parametrize("dim,n", [(1, 32), (3, 16)])
def test_partition_of_unity_other_dimensions(dim, n):
    g = vf.TorusGrid(dim, n)
    for kind in ("smooth", "sharp"):
        cut = vf.make_cutoff(kind)
        total = sum(cut.shell_weight(g.k_norm(), q) for q in range(-1, g.q_max + 1))
        assert np.abs(total - 1.0).max() <= 1e-12
