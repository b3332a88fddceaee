"""Drive records, square-wave series and Fourier Hamiltonians."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dutfloquet.model import (DriveSpec2L, DriveSpec3L, FourierHamiltonian, build_hamiltonian_2l,
                              build_hamiltonian_3l, evaluate_at_time, hamiltonian_3l_exact,
                              square_wave_harmonics, square_wave_on)


def test_square_wave_single_harmonic():
    assert square_wave_harmonics(math.pi, 1, "control") == [(1, 1.0)]
    assert square_wave_harmonics(math.pi, 1, "probe") == [(1, -1.0)]


def test_square_wave_zero_amplitude():
    assert all(c == 0 for _, c in square_wave_harmonics(0.0, 3))


def test_square_wave_magnitudes_and_signs():
    probe = square_wave_harmonics(1.0, 4, "probe")
    control = square_wave_harmonics(1.0, 4, "control")
    assert [k for k, _ in probe] == [1, 3, 5, 7]
    for n, ((k, cp), (_, cc)) in enumerate(zip(probe, control), start=1):
        assert abs(cp) == pytest.approx(1 / (k * math.pi), rel=1e-15)
        assert cp == pytest.approx((-1) ** n / (k * math.pi))
        assert cc == -cp


@pytest.mark.parametrize("q_max", [0, -1, 2.5])
def test_square_wave_rejects_bad_q(q_max):
    with pytest.raises(ValueError):
        square_wave_harmonics(1.0, q_max)


def test_square_wave_partial_sums_converge_to_waveform():
    """dc -1/4 plus the series reconstructs a 0 / -1/2 square wave; error shrinks with q."""
    tau = 2 * math.pi
    t = np.arange(1024) * tau / 1024
    exact = -0.5 * square_wave_on(t, tau, "probe")
    # stay clear of the jumps where the Gibbs overshoot never decays
    phase = np.mod(t / tau, 1.0)
    away = np.minimum(np.abs(phase - 0.25), np.abs(phase - 0.75)) > 0.05
    errors = []
    for q in (4, 16, 64, 256):
        series = -0.25 + sum(c * np.cos(k * t) for k, c in square_wave_harmonics(1.0, q, "probe"))
        errors.append(np.max(np.abs(series - exact)[away]))
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 0.01
    # the control field is on for the complementary half period
    series_c = -0.25 + sum(c * np.cos(k * t) for k, c in square_wave_harmonics(1.0, 256, "control"))
    exact_c = -0.5 * square_wave_on(t, tau, "control")
    assert np.max(np.abs(series_c - exact_c)[away]) < 0.01


@pytest.mark.parametrize("kwargs", [
    dict(omega_p=-0.1, omega_c=1.0, delta=0.0),
    dict(omega_p=0.1, omega_c=-1.0, delta=0.0),
    dict(omega_p=0.1, omega_c=1.0, delta=0.0, tau=0.0),
    dict(omega_p=0.1, omega_c=1.0, delta=0.0, q_max=0),
    dict(omega_p=0.1, omega_c=1.0, delta=math.inf),
])
def test_drive_spec_3l_validation(kwargs):
    with pytest.raises(ValueError):
        DriveSpec3L(**kwargs)


def test_drive_spec_2l_validation():
    with pytest.raises(ValueError):
        DriveSpec2L(0.0, 1.0, omega=0.0)
    assert DriveSpec2L(0.0, 1.0, omega=2.0).tau == pytest.approx(math.pi)


def test_from_ratios_scales_frequencies():
    spec = DriveSpec3L.from_ratios(0.12, 3.0, 0.5, omega=2.0)
    assert spec.omega == pytest.approx(2.0)
    assert (spec.omega_p, spec.omega_c, spec.delta) == pytest.approx((0.24, 6.0, 1.0))


def test_three_level_undriven():
    fh = build_hamiltonian_3l(DriveSpec3L(0.0, 0.0, 0.4))
    assert list(fh.harmonics) == [0]
    np.testing.assert_array_equal(fh.block(0), np.diag([-0.2, 0.2, 0.2]))


def test_three_level_blocks():
    spec = DriveSpec3L.from_ratios(0.12, 3.0, 0.3)
    fh = build_hamiltonian_3l(spec)
    h0 = fh.block(0)
    assert np.allclose(np.diag(h0), [-0.15, 0.15, 0.15])
    assert h0[0, 1] == -0.03 and h0[1, 2] == -0.75 and h0[0, 2] == 0
    h1 = fh.block(1)
    assert h1[1, 2] == pytest.approx(3.0 / (2 * math.pi))
    assert h1[0, 1] == pytest.approx(-0.12 / (2 * math.pi))
    assert all(k % 2 for k in fh.harmonics if k != 0)
    assert fh.max_harmonic == 2 * spec.q_max - 1


def test_harmonic_pairs_are_exact_conjugates():
    for fh in (build_hamiltonian_3l(DriveSpec3L.from_ratios(0.5, 7.0, -1.2, q_max=9)),
               build_hamiltonian_2l(DriveSpec2L(1.0, 5.0, 1.0, 0.1))):
        for k, blk in fh.harmonics.items():
            np.testing.assert_array_equal(fh.block(-k), blk.conj().T)


def test_three_level_time_reconstruction_at_origin():
    """Direct summation of the truncated series at t = 0."""
    spec = DriveSpec3L.from_ratios(0.12, 3.0, 0.5, q_max=20)
    expected = np.zeros((3, 3))
    expected[0, 0], expected[1, 1], expected[2, 2] = -0.25, 0.25, 0.25
    p_t = sum(c for _, c in square_wave_harmonics(spec.omega_p, 20, "probe"))
    c_t = sum(c for _, c in square_wave_harmonics(spec.omega_c, 20, "control"))
    expected[0, 1] = expected[1, 0] = -spec.omega_p / 4 + p_t
    expected[1, 2] = expected[2, 1] = -spec.omega_c / 4 + c_t
    np.testing.assert_allclose(evaluate_at_time(build_hamiltonian_3l(spec), 0.0), expected,
                               atol=1e-12)


def test_probe_coupling_at_quarter_period_is_dc_value():
    """Every odd cosine vanishes at t = tau/4, leaving the dc coupling -Omega_p/4."""
    spec = DriveSpec3L.from_ratios(0.12, 3.0, 0.5)
    h = evaluate_at_time(build_hamiltonian_3l(spec), spec.tau / 4)
    assert h[0, 1].real == pytest.approx(-spec.omega_p / 4, abs=1e-12)
    assert h[1, 2].real == pytest.approx(-spec.omega_c / 4, abs=1e-12)


def test_truncated_series_approaches_exact_waveform_mid_segment():
    spec = DriveSpec3L.from_ratios(0.12, 3.0, 0.5, q_max=200)
    fh = build_hamiltonian_3l(spec)
    for t in (0.0, 0.5 * spec.tau, 0.1 * spec.tau, 0.6 * spec.tau):
        diff = evaluate_at_time(fh, t) - hamiltonian_3l_exact(spec, t)
        assert np.max(np.abs(diff)) < 0.01 * spec.omega_c


def test_two_level_time_reconstruction():
    spec = DriveSpec2L(1.0, 5.0, 1.0, 0.1)
    fh = build_hamiltonian_2l(spec)
    t = np.linspace(0, 2 * spec.tau, 256)
    eps = spec.epsilon_0 + spec.amplitude * np.cos(spec.omega * t)
    expected = np.empty((t.size, 2, 2))
    expected[:, 0, 0] = spec.delta / 2
    expected[:, 1, 1] = -spec.delta / 2
    expected[:, 0, 1] = expected[:, 1, 0] = -eps / 2
    np.testing.assert_allclose(fh(t), expected, atol=1e-12)


def test_two_level_limits():
    assert list(build_hamiltonian_2l(DriveSpec2L(0.3, 0.0)).harmonics) == [0]
    fh = build_hamiltonian_2l(DriveSpec2L(0.0, 2.0, 1.0, 0.0))
    assert not np.any(fh.block(0))
    assert fh.block(1)[0, 1] == -0.5


def test_fourier_hamiltonian_validation():
    with pytest.raises(ValueError):
        FourierHamiltonian(2, 1.0, {1: np.ones((2, 2))})
    with pytest.raises(ValueError):
        FourierHamiltonian(2, 1.0, {1: np.ones((2, 2)), -1: 2 * np.ones((2, 2))})
    with pytest.raises(ValueError):
        FourierHamiltonian(2, 1.0, {0: np.ones((3, 3))})
    with pytest.raises(ValueError):
        FourierHamiltonian.from_nonnegative(2, 1.0, {-1: np.ones((2, 2))})
    fh = FourierHamiltonian(2, 1.0, {})
    assert 0 in fh.harmonics
    with pytest.raises(ValueError):
        fh.block(0)[0, 0] = 1.0


def test_constant_hamiltonian_is_time_independent():
    h0 = np.array([[1.0, 0.5j], [-0.5j, -1.0]])
    fh = FourierHamiltonian(2, 1.0, {0: h0})
    t = np.linspace(0, 10, 7)
    np.testing.assert_allclose(fh(t), np.broadcast_to(h0, (7, 2, 2)))


def _random_fourier_hamiltonian(seed: int) -> FourierHamiltonian:
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 5))
    blocks = {}
    for k in range(int(rng.integers(1, 6))):
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        blocks[k] = m + m.conj().T if k == 0 else m
    return FourierHamiltonian.from_nonnegative(dim, float(rng.uniform(0.5, 3.0)), blocks)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(-50, 50))
def test_evaluation_is_hermitian_and_periodic(seed, t):
    fh = _random_fourier_hamiltonian(seed)
    h = evaluate_at_time(fh, t)
    assert np.max(np.abs(h - h.conj().T)) < 1e-12
    h_next = evaluate_at_time(fh, t + fh.period)
    assert np.max(np.abs(h - h_next)) < 1e-12 * max(1.0, abs(t))
