from __future__ import annotations

import math

import numpy as np
import pytest

from nibm_lab.errors import DomainError, RegimeError
from nibm_lab.measure import (
    EmpiricalMeasure,
    Regime,
    check_assumption1,
    check_assumption2,
    classify_index,
    critical_time,
    evolve,
    gauge,
    integer_masses,
    jet_at,
    load_measure,
    log_transform,
    mirror,
    quantile_measure,
    scaling_frame,
    stieltjes,
    time_scaling,
)


def test_measure_sorts_atoms_and_checks_mass():
    mu = EmpiricalMeasure.from_atoms([2.0, -1.0], [0.25, 0.75])
    assert mu.positions.tolist() == [-1.0, 2.0]
    assert mu.weights.tolist() == [0.75, 0.25]
    with pytest.raises(DomainError):
        EmpiricalMeasure.from_atoms([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(DomainError):
        EmpiricalMeasure.from_atoms([0.0, 1.0], [1.5, -0.5])
    with pytest.raises(DomainError):
        EmpiricalMeasure.from_atoms([])


def test_uniform_weights_and_gaps():
    mu = EmpiricalMeasure.from_atoms([0.0, 1.0, 1.0, 3.0])
    assert np.allclose(mu.weights, 0.25)
    assert mu.gaps() == [(0.0, 1.0), (1.0, 3.0)]
    assert mu.is_atom(1.0)
    assert not mu.is_atom(0.5)


def test_stieltjes_values(delta0):
    assert stieltjes(delta0, 1j) == pytest.approx(-1j)
    assert stieltjes(delta0, 2.0) == pytest.approx(0.5)
    values = stieltjes(delta0, np.array([2.0, 4.0]))
    assert np.allclose(values, [0.5, 0.25])
    with pytest.raises(DomainError):
        stieltjes(delta0, 0.0)


def test_stieltjes_reflection_and_sign(asymmetric_pair):
    z = np.array([0.3 + 0.2j, -2.0 + 1e-3j, 5.0 + 4.0j, 1j])
    values = stieltjes(asymmetric_pair, z)
    assert np.allclose(stieltjes(asymmetric_pair, z.conj()), values.conj(), rtol=0, atol=1e-14)
    assert np.all(values.imag < 0)


def test_array_sums_are_compensated():
    mu = EmpiricalMeasure.from_atoms([-1e8, 1e8, 1.0], [0.5, 0.5 - 1e-12, 1e-12])
    z = np.array([2.0 + 1e-3j, 3.0 + 0.5j])
    assert list(stieltjes(mu, z)) == [stieltjes(mu, complex(v)) for v in z]
    assert list(log_transform(mu, z)) == [log_transform(mu, complex(v)) for v in z]


def test_jet_at_examples(delta0, symmetric_pair, asymmetric_pair):
    assert jet_at(delta0, 1.0).as_tuple() == pytest.approx((1.0, -1.0, 2.0, -6.0))
    assert jet_at(symmetric_pair, 0.0).as_tuple() == pytest.approx((0.0, -1.0, 0.0, -6.0))
    assert jet_at(asymmetric_pair, 0.0).as_tuple() == pytest.approx((1 / 3, -1.0, 2 / 3, -6.0))


def test_jet_matches_finite_differences(asymmetric_pair):
    x, h = 0.3, 1e-4
    jet = jet_at(asymmetric_pair, x)
    g = lambda z: stieltjes(asymmetric_pair, z).real
    assert jet.g1 == pytest.approx((g(x + h) - g(x - h)) / (2 * h), rel=1e-6)
    assert jet.g2 == pytest.approx((g(x + h) - 2 * g(x) + g(x - h)) / h**2, rel=1e-4)


def test_log_transform(delta0):
    assert log_transform(delta0, 1.0) == pytest.approx(0.0)
    assert log_transform(delta0, 1j) == pytest.approx(1j * math.pi / 2)


def test_assumptions(delta0):
    assert check_assumption2(delta0, 1.0, 2.0) == (True, pytest.approx(1.0))
    passed, moment = check_assumption2(delta0, 0.5, 2.0)
    assert not passed
    assert moment == pytest.approx(32.0)
    assert check_assumption2(delta0, 0.0, 2.0) == (False, math.inf)
    assert check_assumption1(EmpiricalMeasure.from_atoms([-3.0, 1.0]), 2.0) == (False, 3.0)


def test_critical_time_and_evolution(delta0, asymmetric_pair):
    assert critical_time(delta0, 2.0) == pytest.approx(4.0)
    assert evolve(delta0, 1.0, 1.0) == pytest.approx(2.0)
    assert evolve(asymmetric_pair, 0.0, 3.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        evolve(delta0, 1.0, -0.1)


@pytest.mark.parametrize("shift", [-3.5, 0.25, 10.0])
def test_critical_time_is_translation_invariant(asymmetric_pair, shift):
    moved = EmpiricalMeasure(asymmetric_pair.positions + shift, asymmetric_pair.weights)
    assert critical_time(moved, 0.4 + shift) == pytest.approx(critical_time(asymmetric_pair, 0.4), rel=1e-12)


def test_classify_index_thresholds():
    assert classify_index(0.1, (0.2, 5.0)) is Regime.PEARCEY_MERGING
    assert classify_index(-6.0, (0.2, 5.0)) is Regime.AIRY_EDGE
    assert classify_index(1.0, (0.2, 5.0)) is Regime.TRANSITION


def test_scaling_frame_examples(delta0, symmetric_pair, asymmetric_pair):
    frame = scaling_frame(delta0, 1.0, 16)
    assert frame.index_I == pytest.approx(2.0)
    assert frame.c2 == pytest.approx(1.0)
    assert frame.c3 == pytest.approx(1.0)
    assert frame.position == pytest.approx(2.0)
    assert frame.regime is Regime.TRANSITION
    assert not frame.mirrored

    merging = scaling_frame(symmetric_pair, 0.0, 100)
    assert merging.regime is Regime.PEARCEY_MERGING
    assert merging.a == pytest.approx(0.0)
    assert merging.c2 is None

    assert scaling_frame(asymmetric_pair, 0.0, 81).index_I == pytest.approx(1.0)


def test_scaling_frame_enforces_assumption2(delta0):
    with pytest.raises(DomainError):
        scaling_frame(delta0, 0.5, 16, bound_C=2.0)
    with pytest.raises(DomainError):
        scaling_frame(delta0, 1.0, 0)


def test_mirror_negates_signed_quantities(asymmetric_pair):
    frame = scaling_frame(asymmetric_pair, 0.2, 64)
    flipped = scaling_frame(mirror(asymmetric_pair), -0.2, 64)
    assert flipped.index_I == pytest.approx(-frame.index_I)
    assert flipped.jet.g0 == pytest.approx(-frame.jet.g0)
    assert flipped.jet.g2 == pytest.approx(-frame.jet.g2)
    assert flipped.t_cr == pytest.approx(frame.t_cr)
    assert flipped.c3 == pytest.approx(frame.c3)
    assert flipped.mirrored != frame.mirrored


def test_time_scaling(delta0, symmetric_pair):
    assert time_scaling(scaling_frame(delta0, 1.0, 8), 1.0, "E") == pytest.approx(2.0)
    assert time_scaling(scaling_frame(symmetric_pair, 0.0, 16), 2.0, "M") == pytest.approx(1.5)
    with pytest.raises(RegimeError):
        time_scaling(scaling_frame(symmetric_pair, 0.0, 16), 0.0, "E")
    with pytest.raises(DomainError):
        time_scaling(scaling_frame(symmetric_pair, 0.0, 16), -10.0, "M")


def test_gauge(delta0):
    assert gauge(2, scaling_frame(delta0, 1.0, 2), 1.0, 1.0) == pytest.approx(-1.0)
    assert gauge(1, scaling_frame(delta0, 2.0, 1), 0.0, 3.0) == pytest.approx(-1.5)


def test_integer_masses(symmetric_pair, asymmetric_pair):
    assert integer_masses(symmetric_pair, 4).tolist() == [2, 2]
    assert integer_masses(asymmetric_pair, 3).tolist() == [2, 1]
    with pytest.raises(DomainError):
        integer_masses(asymmetric_pair, 4)


def test_quantile_measure_is_uniform():
    mu = quantile_measure(lambda q: 2 * q - 1, 4)
    assert mu.positions.tolist() == pytest.approx([-0.75, -0.25, 0.25, 0.75])
    assert np.allclose(mu.weights, 0.25)


def test_load_measure(measure_dir, tmp_path):
    mu = load_measure(measure_dir / "asymmetric_pair.json")
    assert mu.atoms == [(-1.0, pytest.approx(2 / 3)), (1.0, pytest.approx(1 / 3))]

    uniform = tmp_path / "uniform.json"
    uniform.write_text('{"atoms": [{"x": 0}, {"x": 2}]}')
    assert load_measure(uniform).weights.tolist() == [0.5, 0.5]

    partial = tmp_path / "partial.json"
    partial.write_text('{"atoms": [{"x": 0, "w": 0.5}, {"x": 2}]}')
    with pytest.raises(DomainError):
        load_measure(partial)
    with pytest.raises(DomainError):
        load_measure(tmp_path / "missing.json")
