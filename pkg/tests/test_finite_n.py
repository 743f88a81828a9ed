from __future__ import annotations

import json
import math

import numpy as np
import pytest
from scipy.stats import norm

from nibm_lab.errors import DomainError, PlanError, RegimeError
from nibm_lab.finite_n import (
    PlanStyle,
    RescaledRequest,
    build_plan,
    correlation,
    export_plan,
    gauged_kernel,
    raw_kernel,
    rescaled_kernel,
)
from nibm_lab.kernels import KernelPoint, airy_ext
from nibm_lab.measure import gauge, scaling_frame, time_scaling


def phi(s, x):
    return norm.pdf(x, scale=math.sqrt(s))


@pytest.fixture
def single_particle(delta0):
    frame = scaling_frame(delta0, 1.0, 1)
    return delta0, frame, build_plan(delta0, frame, PlanStyle.GENERIC)


def test_generic_plan_encloses_atoms(symmetric_pair):
    frame = scaling_frame(symmetric_pair, 0.0, 4)
    plan = build_plan(symmetric_pair, frame, "Generic")
    assert plan.style is PlanStyle.GENERIC
    for atom in (-1.0, 1.0):
        assert plan.gamma.winding_number(atom) == pytest.approx(1.0)
    assert plan.meta["x0"] == 0.0


@pytest.mark.parametrize("s, x, t, y", [(1.0, 0.0, 1.0, 0.0), (1.0, 1.0, 1.0, 1.0), (1.0, 0.3, 2.0, -0.2)])
def test_single_particle_kernel(single_particle, s, x, t, y):
    mu, _, plan = single_particle
    kv = raw_kernel(1, mu, s, t, x, y, plan)
    assert kv.real == pytest.approx(phi(s, x), abs=1e-8)
    assert abs(kv.imag) < 1e-8


def test_single_particle_oracle_values(single_particle):
    mu, _, plan = single_particle
    assert raw_kernel(1, mu, 1.0, 1.0, 0.0, 0.0, plan).real == pytest.approx(0.3989423, abs=1e-7)
    assert raw_kernel(1, mu, 1.0, 1.0, 1.0, 1.0, plan).real == pytest.approx(0.2419707, abs=1e-7)


def test_single_particle_heat_term(single_particle):
    mu, _, plan = single_particle
    kv = raw_kernel(1, mu, 2.0, 1.0, 0.3, -0.2, plan)
    assert kv.real == pytest.approx(phi(2.0, 0.3) - phi(1.0, 0.5), abs=1e-8)


def test_two_time_correlation_is_transition_density(single_particle):
    mu, _, plan = single_particle
    x, y = 0.3, -0.2

    def kernel(s, a, t, b):
        return raw_kernel(1, mu, s, t, a, b, plan)

    value = correlation([(1.0, x), (2.0, y)], kernel)
    assert value == pytest.approx(phi(1.0, x) * phi(1.0, y - x), abs=1e-7)


def test_gauge_is_a_pure_factor(single_particle):
    mu, frame, plan = single_particle
    raw = raw_kernel(1, mu, 1.0, 1.5, 0.2, 0.4, plan)
    gauged = gauged_kernel(1, mu, frame, 1.0, 1.5, 0.2, 0.4, plan)
    factor = math.exp(gauge(1, frame, 1.5, 0.4) - gauge(1, frame, 1.0, 0.2))
    assert gauged.real == pytest.approx(raw.real * factor, rel=1e-7)


def test_kernel_needs_integer_masses(asymmetric_pair):
    frame = scaling_frame(asymmetric_pair, 0.0, 4)
    plan = build_plan(asymmetric_pair, frame, PlanStyle.GENERIC)
    with pytest.raises(DomainError):
        raw_kernel(4, asymmetric_pair, 1.0, 1.0, 0.0, 0.0, plan)
    with pytest.raises(DomainError):
        raw_kernel(3, asymmetric_pair, 0.0, 1.0, 0.0, 0.0, plan)


def test_merging_plan_angles(symmetric_pair):
    frame = scaling_frame(symmetric_pair, 0.0, 64)
    plan = build_plan(symmetric_pair, frame, PlanStyle.MERGING)
    assert plan.meta["entry_angle"] == pytest.approx(math.pi / 3, abs=0.2)
    assert plan.meta["exit_angle"] == pytest.approx(2 * math.pi / 3, abs=0.2)
    for atom in (-1.0, 1.0):
        assert plan.gamma.winding_number(atom) == pytest.approx(1.0)


def test_airy_plan_needs_positive_curvature(symmetric_pair, delta0):
    with pytest.raises(RegimeError):
        build_plan(symmetric_pair, scaling_frame(symmetric_pair, 0.0, 64), PlanStyle.AIRY_FAST)
    frame = scaling_frame(delta0, 1.0, 4096)
    plan = build_plan(delta0, frame, PlanStyle.AIRY_FAST)
    assert plan.meta["r_n"] < plan.meta["disk_radius"]
    assert plan.gamma.winding_number(0.0) == pytest.approx(1.0)


def test_plan_rejects_bad_epsilon(symmetric_pair):
    frame = scaling_frame(symmetric_pair, 0.0, 64)
    with pytest.raises(DomainError):
        build_plan(symmetric_pair, frame, PlanStyle.MERGING, epsilon=0.1)


def test_export_plan_is_json(symmetric_pair):
    frame = scaling_frame(symmetric_pair, 0.0, 64)
    exported = export_plan(build_plan(symmetric_pair, frame, PlanStyle.MERGING))
    decoded = json.loads(json.dumps(exported))
    assert decoded["style"] == "Merging"
    assert decoded["gamma"]["closed"] is True
    assert len(decoded["meta"]["w1"]) == 2


def test_rescaled_request_validation(symmetric_pair):
    frame = scaling_frame(symmetric_pair, 0.0, 16)
    with pytest.raises(RegimeError):
        RescaledRequest(symmetric_pair, frame, "E", 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        RescaledRequest(symmetric_pair, frame, "X", 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        RescaledRequest(symmetric_pair, frame, "M", 0.0, 0.0, math.inf, 0.0)


@pytest.mark.slow
def test_generic_and_merging_plans_agree(symmetric_pair):
    frame = scaling_frame(symmetric_pair, 0.0, 16)
    req = RescaledRequest(symmetric_pair, frame, "M", 0.0, 0.0, 0.2, -0.1)
    descent = rescaled_kernel(req, PlanStyle.MERGING)
    generic = rescaled_kernel(req, PlanStyle.GENERIC)
    assert descent.real == pytest.approx(generic.real, abs=1e-6)


@pytest.mark.slow
def test_lower_edge_uses_reflection(delta0):
    upper = RescaledRequest(delta0, scaling_frame(delta0, 1.0, 64), "E", 0.0, 0.0, 0.3, -0.4)
    lower = RescaledRequest(delta0, scaling_frame(delta0, -1.0, 64), "E", 0.0, 0.0, 0.3, -0.4)
    assert rescaled_kernel(lower).real == pytest.approx(rescaled_kernel(upper).real, abs=1e-6)


@pytest.mark.parametrize("n", [128, 256])
def test_airy_plan_where_the_edge_touches_the_base_point(delta0, n):
    frame = scaling_frame(delta0, 1.0, n)
    plan = build_plan(delta0, frame, PlanStyle.AIRY_FAST)
    assert plan.gamma.winding_number(0.0) == pytest.approx(1.0)
    assert "w1" not in plan.meta
    # past the critical time the graph may rise above the disk; that must surface as PlanError
    try:
        later = build_plan(delta0, frame, PlanStyle.AIRY_FAST, time=time_scaling(frame, 0.5, "E"))
    except PlanError:
        return
    assert later.gamma.winding_number(0.0) == pytest.approx(1.0)


@pytest.mark.slow
@pytest.mark.parametrize("n", [128, 256])
@pytest.mark.parametrize("tau", [0.0, 0.5])
def test_point_mass_edge_kernel_is_close_to_airy(delta0, n, tau):
    frame = scaling_frame(delta0, 1.0, n)
    value = rescaled_kernel(RescaledRequest(delta0, frame, "E", tau, tau, 0.0, 0.0))
    assert math.isfinite(value.real)
    assert abs(value.imag) < 1e-6
    assert value.real == pytest.approx(airy_ext(KernelPoint(tau, tau, 0.0, 0.0)).real, abs=5e-2)
