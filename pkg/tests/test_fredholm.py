from __future__ import annotations

import numpy as np
import pytest

from nibm_lab.errors import CutoffError, DomainError
from nibm_lab.fredholm import (
    GapSpec,
    airy2_joint_cdf,
    fredholm_det,
    tracy_widom_cdf,
    tracy_widom_interpolant,
    tracy_widom_quantile,
    tracy_widom_table,
)


def test_tracy_widom_tails():
    assert tracy_widom_cdf(8.0) == pytest.approx(1.0, abs=1e-10)
    assert tracy_widom_cdf(-8.0) < 1e-4
    with pytest.raises(DomainError):
        tracy_widom_cdf(10.5)


def test_tracy_widom_reference_value():
    assert tracy_widom_cdf(0.0) == pytest.approx(0.9694, abs=1e-3)


@pytest.mark.parametrize("s", [-4.0, -2.0, 0.0, 2.0])
def test_tracy_widom_order_convergence(s):
    assert abs(tracy_widom_cdf(s, 48) - tracy_widom_cdf(s, 96)) <= 1e-6


def test_tracy_widom_table_is_monotone():
    values = tracy_widom_table([-4.0, -3.0, -2.0, -1.0, 0.0, 1.0])
    assert all(b > a for a, b in zip(values[:-1], values[1:]))


def test_tracy_widom_monotone_over_plotting_range():
    values = tracy_widom_table(list(np.arange(-6.0, 4.25, 0.25)))
    assert all(b >= a - 1e-12 for a, b in zip(values[:-1], values[1:]))
    assert abs(values[0]) < 1e-4
    assert values[-1] > 0.999


def test_tracy_widom_quantile_inverts_cdf():
    p = tracy_widom_cdf(-1.5)
    assert tracy_widom_quantile(p) == pytest.approx(-1.5, abs=1e-8)
    with pytest.raises(DomainError):
        tracy_widom_quantile(1.0)


def test_interpolant_clamps():
    cdf = tracy_widom_interpolant(points=57)
    assert cdf(-20.0) == 0.0
    assert cdf(20.0) == 1.0
    assert cdf(0.0) == pytest.approx(tracy_widom_cdf(0.0), abs=1e-3)


def test_gap_spec_validation():
    with pytest.raises(DomainError):
        GapSpec(())
    with pytest.raises(DomainError):
        GapSpec(((0.5, 0.0), (0.0, 0.0)))
    with pytest.raises(DomainError):
        GapSpec(((0.0, 0.0),), quad_order=15)
    with pytest.raises(DomainError):
        GapSpec(((0.0, 0.0),), cutoff=0.0)
    assert GapSpec(((0.0, 1.0), (1.0, 2.0))).taus == [0.0, 1.0]


def test_short_cutoff_is_rejected():
    with pytest.raises(CutoffError):
        fredholm_det(GapSpec(((0.0, -20.0),), cutoff=5.0))


def test_single_time_joint_cdf_is_tracy_widom():
    assert airy2_joint_cdf([0.0], [-1.0]) == pytest.approx(tracy_widom_cdf(-1.0), abs=1e-12)
    assert airy2_joint_cdf([0.7], [-1.0]) == pytest.approx(tracy_widom_cdf(-1.0), abs=1e-10)
    with pytest.raises(DomainError):
        airy2_joint_cdf([0.0, 1.0], [0.0])


def test_two_time_joint_cdf_bounds():
    a = -1.0
    marginal = tracy_widom_cdf(a)
    joint = airy2_joint_cdf([0.0, 1.0], [a, a])
    assert marginal**2 - 1e-8 <= joint <= marginal + 1e-8


def test_joint_cdf_ignores_input_order():
    forward = airy2_joint_cdf([0.0, 0.5], [-1.0, 0.0])
    backward = airy2_joint_cdf([0.5, 0.0], [0.0, -1.0])
    assert forward == pytest.approx(backward, abs=1e-12)
