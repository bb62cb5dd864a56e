import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lwrnet.experiments import QUARTIC_MASS, quartic_graph_distance, quartic_pair
from lwrnet.reference import LineDensity, l1_discrete, w1_line
from lwrnet.transport import GridMismatchError, MassMismatchError


def bump(center, width, mass=1.0):
    def rho(x):
        return np.where(np.abs(x - center) <= width / 2, mass / width, 0.0)
    return LineDensity(0.0, 1.0, rho, mass=mass)


def test_quartic_pair_value():
    s, d = quartic_pair()
    assert s.total_mass == pytest.approx(92 / 15)
    assert w1_line(s, d) == pytest.approx(3.2, abs=1e-6)


def test_identity_and_symmetry():
    s, d = quartic_pair()
    assert w1_line(s, s, 10_000) == 0.0
    assert w1_line(s, d, 10_000) == pytest.approx(w1_line(d, s, 10_000))


def test_narrow_bumps_act_like_point_masses():
    # bumps of width dx/10 at 0.2 and 0.7: unit mass moved 0.5
    assert w1_line(bump(0.2, 0.001), bump(0.7, 0.001), 200_000) == pytest.approx(0.5, abs=1e-4)


def test_cell_values_representation():
    a = LineDensity(0.0, 1.0, np.array([2.0, 0.0]))
    b = LineDensity(0.0, 1.0, np.array([0.0, 2.0]))
    assert a.total_mass == pytest.approx(1.0)
    assert w1_line(a, b, 1000) == pytest.approx(0.5)


def test_mass_mismatch_and_domain_errors():
    with pytest.raises(MassMismatchError):
        w1_line(bump(0.5, 0.1, 1.0), bump(0.5, 0.1, 2.0))
    with pytest.raises(ValueError):
        LineDensity(1.0, 0.0, np.ones(3))
    with pytest.raises(ValueError):
        w1_line(LineDensity(0, 1, np.ones(2)), LineDensity(0, 2, np.ones(2) / 2))


def test_graph_distance_converges_to_closed_form():
    errs = [abs(quartic_graph_distance(dx) - 3.2) for dx in (0.2, 0.1, 0.05)]
    assert all(e <= QUARTIC_MASS * dx for e, dx in zip(errs, (0.2, 0.1, 0.05)))
    assert errs[0] / errs[1] >= 1.5 and errs[1] / errs[2] >= 1.5


def test_l1_discrete():
    a = np.array([1.0, 1.0, 0.0, 0.0])
    b = np.array([0.0, 0.0, 1.0, 1.0])
    assert l1_discrete(a, b, 0.1) == pytest.approx(2.0)
    assert l1_discrete(a, a, 0.1) == 0.0
    with pytest.raises(GridMismatchError):
        l1_discrete(a, b[:3], 0.1)
    with pytest.raises(ValueError):
        l1_discrete(np.zeros(2), np.zeros(2), 0.1)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_point_mass_distance_is_gap(x, y):
    w = 0.002
    assert w1_line(bump(x, w), bump(y, w), 100_000) == pytest.approx(abs(x - y), abs=1e-3)
