from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import airy

from nibm_lab.errors import DomainError
from nibm_lab.kernels import (
    PEARCEY_DEFORMED,
    HeatConvention,
    KernelPoint,
    airy_ext,
    airy_ext_block,
    airy_function,
    airy_static,
    conn_rhs,
    conn_shift,
    heat_term,
    pearcey_ext,
    rescaled_transition,
    transition,
)


def test_heat_term_conventions():
    assert heat_term(KernelPoint(0.0, 0.0, 1.0, 1.0), "Quarter") == 0.0
    assert heat_term(KernelPoint(1 / (4 * math.pi), 0.0, 0.3, 0.3), HeatConvention.QUARTER) == pytest.approx(1.0)
    assert heat_term(KernelPoint(1 / (2 * math.pi), 0.0, 0.3, 0.3), HeatConvention.HALF) == pytest.approx(1.0)


def test_kernel_point_rejects_nan():
    with pytest.raises(DomainError):
        KernelPoint(0.0, math.nan, 0.0, 0.0)


def test_airy_function_at_zero():
    ai, aip = airy_function(0.0)
    assert ai == pytest.approx(0.3550280539, abs=1e-10)
    assert aip == pytest.approx(-0.2588194038, abs=1e-10)


@pytest.mark.parametrize("x", [-3.5, -1.0, 0.7, 2.0])
def test_airy_series_matches_scipy(x):
    ai, aip, _, _ = airy(x)
    assert airy_function(x, "series") == (pytest.approx(ai, abs=1e-12), pytest.approx(aip, abs=1e-12))


def test_airy_methods_agree():
    series = airy_function(3.0, "series")
    contour = airy_function(3.0, "contour")
    assert contour[0] == pytest.approx(series[0], abs=1e-10)
    assert contour[1] == pytest.approx(series[1], abs=1e-10)
    assert airy_function(-6.0)[0] == pytest.approx(airy(-6.0)[0], abs=1e-10)
    with pytest.raises(DomainError):
        airy_function(16.0)
    with pytest.raises(DomainError):
        airy_function(1.0, "bessel")


def test_airy_static_diagonal_limit():
    x = np.array([-1.0, 0.0, 2.0])
    assert np.allclose(airy_static(x, x + 1e-7), airy_static(x, x), rtol=1e-5)
    assert float(airy_static(0.0, 0.0)) == pytest.approx(0.0669873, abs=1e-7)


def test_airy_ext_static_values():
    assert airy_ext(KernelPoint(0.0, 0.0, 0.0, 0.0)).real == pytest.approx(0.0669873, abs=1e-8)
    left = airy_ext(KernelPoint(0.0, 0.0, 0.0, 1.0)).real
    right = airy_ext(KernelPoint(0.0, 0.0, 1.0, 0.0)).real
    assert left == pytest.approx(right, abs=1e-9)
    assert left == pytest.approx(float(airy_static(0.0, 1.0)), abs=1e-8)
    assert abs(airy_ext(KernelPoint(0.0, 0.0, 8.0, 8.0)).real) < 1e-6


def test_airy_ext_is_real_at_equal_times():
    kv = airy_ext(KernelPoint(0.5, 0.5, -0.5, 0.25))
    assert abs(kv.imag) < 10 * kv.err_estimate + 1e-12


def test_airy_ext_block_matches_static_kernel():
    us = np.array([-1.0, 0.0, 1.5])
    block = airy_ext_block(0.0, 0.0, us, us)
    assert np.allclose(block, airy_static(us[:, None], us[None, :]), atol=1e-10)


def test_airy_ext_block_at_equal_nonzero_times():
    tau, u, v = 0.4, 0.3, -0.2
    block = airy_ext_block(tau, tau, [u], [v])[0, 0]
    expected = math.exp(tau * (u - v)) * float(airy_static(u + tau**2, v + tau**2))
    assert block == pytest.approx(expected, abs=1e-10)
    assert block == pytest.approx(airy_ext(KernelPoint(tau, tau, u, v)).real, abs=1e-8)


def test_pearcey_symmetry_and_positivity():
    assert pearcey_ext(KernelPoint(0.0, 0.0, 0.0, 0.0)).real > 0
    plus = pearcey_ext(KernelPoint(0.0, 0.0, 0.5, -0.3)).real
    minus = pearcey_ext(KernelPoint(0.0, 0.0, -0.5, 0.3)).real
    assert plus == pytest.approx(minus, abs=1e-9)


def test_pearcey_contour_deformation():
    p = KernelPoint(0.3, -0.2, 0.4, 0.1)
    standard = pearcey_ext(p)
    deformed = pearcey_ext(p, shape=PEARCEY_DEFORMED)
    assert standard.real == pytest.approx(deformed.real, abs=1e-9 + standard.err_estimate + deformed.err_estimate)


def test_transition_at_zero_is_pearcey():
    rng = np.random.default_rng(7)
    for tau1, tau2, u, v in rng.uniform(-1.0, 1.0, size=(4, 4)):
        p = KernelPoint(tau1, tau2, u, v)
        t = transition(0.0, p)
        ref = pearcey_ext(p)
        assert t.real == pytest.approx(ref.real, abs=1e-10 + t.err_estimate + ref.err_estimate)
    with pytest.raises(DomainError):
        transition(-1.0, KernelPoint(0.0, 0.0, 0.0, 0.0))


def test_conn_shift_vanishes_at_zero():
    p = KernelPoint(0.3, -0.1, 0.2, 0.5)
    log_prefactor, shifted = conn_shift(0.0, p)
    assert log_prefactor == 0.0
    assert shifted == p


@pytest.mark.parametrize(
    "a, p",
    [(1.0, KernelPoint(0.0, 0.0, 0.0, 0.0)), (2.0, KernelPoint(0.5, -0.5, 1.0, -1.0))],
)
def test_conn_identity(a, p):
    assert transition(a, p).real == pytest.approx(conn_rhs(a, p).real, abs=1e-8)


@pytest.mark.slow
def test_rescaled_transition_approaches_airy():
    a_values = (5.0, 10.0, 20.0)
    grid = [(u, v) for u in (-1.0, 0.0, 1.0) for v in (-1.0, 0.0, 1.0)]
    errors = []
    for a in a_values:
        errors.append(
            max(abs(rescaled_transition(a, 0.0, 0.0, u, v).real - airy_ext(KernelPoint(0.0, 0.0, u, v)).real) for u, v in grid)
        )
    assert errors[0] > errors[1] > errors[2]
    assert errors[-1] <= 5e-2
