"""Independent time-domain and FFT references.

These routines share no code path with the Floquet solver beyond the
parameter records, so agreement between the two is a genuine check.

Long-time averages are taken over the trailing 80% of the run *and* over
``n_phases`` equally spaced initial drive phases.  The Floquet transition
probability with the initial state in photon sector 0 is the average over
the drive phase at which the system is prepared; a single fixed phase
differs from it by up to ~1e-2 in the populations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericFailure
from .model import DriveSpec3L, FourierHamiltonian

AVERAGE_FRACTION = 0.8


@dataclass(frozen=True)
class PropagationResult:
    """Trajectory of the first initial phase plus the phase-averaged long-time populations."""

    times: np.ndarray
    populations: np.ndarray  # (len(times), dim)
    long_time_average: np.ndarray
    final_state: np.ndarray | None = None
    n_phases: int = 1


def _static_propagator(h: np.ndarray):
    evals, evecs = np.linalg.eigh(h)

    def prop(dt: float) -> np.ndarray:
        return (evecs * np.exp(-1j * evals * dt)) @ evecs.conj().T

    return prop


def square_wave_segments(spec: DriveSpec3L) -> tuple[np.ndarray, np.ndarray]:
    """The two static lab-frame Hamiltonians: probe half-period and control half-period."""
    d = spec.delta
    hp = np.array([[-d / 2, -spec.omega_p / 2, 0.0],
                   [-spec.omega_p / 2, d / 2, 0.0],
                   [0.0, 0.0, d / 2]])
    hc = np.array([[-d / 2, 0.0, 0.0],
                   [0.0, d / 2, -spec.omega_c / 2],
                   [0.0, -spec.omega_c / 2, d / 2]])
    return hp, hc


class _SquareWavePropagator:
    """Exact propagator of the piecewise-constant drive between arbitrary times."""

    def __init__(self, spec: DriveSpec3L):
        self.tau = spec.tau
        hp, hc = square_wave_segments(spec)
        self._probe = _static_propagator(hp)
        self._control = _static_propagator(hc)

    def __call__(self, t0: float, t1: float) -> np.ndarray:
        tau = self.tau
        u = np.eye(3, dtype=complex)
        t = t0
        eps = 1e-13 * tau
        while t < t1 - eps:
            # switching instants are tau/4 + k tau/2
            k = math.floor((t - tau / 4) / (tau / 2) + 1e-12) + 1
            t_end = min(tau / 4 + k * tau / 2, t1)
            phase = ((t + t_end) / 2 / tau) % 1.0
            seg = self._probe if (phase < 0.25 or phase >= 0.75) else self._control
            u = seg(t_end - t) @ u
            t = t_end
        return u


def _polar_unitary(u: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def _stroboscopic_run(u_period: np.ndarray, u_samples: np.ndarray, psi0: np.ndarray,
                      n_periods: int) -> tuple[np.ndarray, np.ndarray]:
    """Populations at every sample of every period, plus the final state."""
    dim = psi0.shape[0]
    states = np.empty((n_periods, dim), dtype=complex)
    psi = psi0.astype(complex)
    for k in range(n_periods):
        states[k] = psi
        psi = u_period @ psi
    # (period, sample, state)
    amps = np.einsum("sij,pj->psi", u_samples, states)
    return np.abs(amps) ** 2, psi


def _window_average(pops: np.ndarray) -> np.ndarray:
    n_periods = pops.shape[0]
    start = int(math.floor((1.0 - AVERAGE_FRACTION) * n_periods))
    return pops[start:].mean(axis=(0, 1))


def propagate_square_wave(spec: DriveSpec3L, n_periods: int = 2000, samples_per_period: int = 32,
                          n_phases: int = 16, initial_state: int = 0) -> PropagationResult:
    """Propagate the exact complementary square-wave drive in the lab frame.

    Each period is composed from exact exponentials of the two static segment
    Hamiltonians; the run starting at drive phase ``t0 = p tau / n_phases`` is
    repeated for every ``p`` and the long-time averages are combined.
    """
    if n_periods < 1:
        raise ValueError(f"n_periods must be >= 1, got {n_periods}")
    if samples_per_period < 1 or n_phases < 1:
        raise ValueError("samples_per_period and n_phases must be >= 1")
    prop = _SquareWavePropagator(spec)
    tau = spec.tau
    psi0 = np.zeros(3, dtype=complex)
    psi0[initial_state] = 1.0
    offsets = np.arange(samples_per_period) * tau / samples_per_period
    average = np.zeros(3)
    first = None
    for p in range(n_phases):
        t0 = p * tau / n_phases
        u_period = prop(t0, t0 + tau)
        u_samples = np.stack([prop(t0, t0 + s) for s in offsets])
        pops, psi = _stroboscopic_run(u_period, u_samples, psi0, n_periods)
        average += _window_average(pops)
        if first is None:
            first = (pops, psi)
    pops, psi = first
    times = (np.arange(n_periods)[:, None] * tau + offsets[None, :]).ravel()
    return PropagationResult(times, pops.reshape(-1, 3), average / n_phases, psi, n_phases)


def _integrate_unitary(fh: FourierHamiltonian, t0: float, t1: float, t_eval: np.ndarray | None,
                       rtol: float, atol: float):
    d = fh.dim

    def rhs(t, y):
        u = y.reshape(d, d)
        return (-1j * (fh(t) @ u)).ravel()

    y0 = np.eye(d, dtype=complex).ravel()
    if t1 <= t0:
        return np.eye(d, dtype=complex), (np.eye(d, dtype=complex)[None] if t_eval is not None else None)
    # t1 is always evaluated so the last column is the full propagator
    points = np.array([t1]) if t_eval is None else np.append(t_eval[t_eval < t1], t1)
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol, t_eval=points)
    if not sol.success:
        raise NumericFailure(f"time integration failed: {sol.message}", t0=t0, t1=t1,
                             rtol=rtol, atol=atol)
    u_end = sol.y[:, -1].reshape(d, d)
    samples = None
    if t_eval is not None:
        keep = sol.y[:, :-1] if t_eval[-1] < t1 else sol.y
        samples = keep.T.reshape(-1, d, d)
    return u_end, samples


def propagate_fourier(fh: FourierHamiltonian, t_final: float, rtol: float = 1e-12,
                      atol: float = 1e-12, samples_per_period: int = 32, n_phases: int = 1,
                      initial_state: int = 0) -> PropagationResult:
    """Time-ordered propagation of ``i d/dt psi = H(t) psi`` for a Fourier Hamiltonian.

    One period's propagator is integrated with an adaptive 8th-order
    Runge-Kutta scheme, projected back onto the unitary group by polar
    decomposition, and then applied stroboscopically.  Any remainder
    ``t_final mod period`` is integrated directly for ``final_state``.
    """
    if not (t_final > 0 and math.isfinite(t_final)):
        raise ValueError(f"t_final must be finite and > 0, got {t_final}")
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    d = fh.dim
    period = fh.period
    n_periods = int(math.floor(t_final / period + 1e-12))
    remainder = t_final - n_periods * period
    psi0 = np.zeros(d, dtype=complex)
    psi0[initial_state] = 1.0
    offsets = np.arange(samples_per_period) * period / samples_per_period

    if n_periods == 0:
        t_eval = np.linspace(0.0, t_final, samples_per_period + 1)
        u_end, samples = _integrate_unitary(fh, 0.0, t_final, t_eval, rtol, atol)
        pops = np.abs(samples @ psi0) ** 2
        return PropagationResult(t_eval, pops, pops.mean(axis=0), u_end @ psi0, 1)

    average = np.zeros(d)
    first = None
    for p in range(n_phases):
        t0 = p * period / n_phases
        u_period, samples = _integrate_unitary(fh, t0, t0 + period, t0 + offsets, rtol, atol)
        u_period = _polar_unitary(u_period)
        pops, psi = _stroboscopic_run(u_period, samples, psi0, n_periods)
        average += _window_average(pops)
        if first is None:
            first = (pops, psi)
    pops, psi = first
    if remainder > 1e-12 * period:
        u_rem, _ = _integrate_unitary(fh, 0.0, remainder, None, rtol, atol)
        psi = u_rem @ psi
    times = (np.arange(n_periods)[:, None] * period + offsets[None, :]).ravel()
    return PropagationResult(times, pops.reshape(-1, d), average / n_phases, psi, n_phases)


def fourier_coefficients(samples, n_max: int) -> np.ndarray:
    """Coefficients ``c_n = (1/tau) int f(t) exp(-i n w t) dt`` for ``n = -n_max..n_max``.

    ``samples`` holds one period on the uniform grid ``t_j = j tau / M``.
    """
    f = np.asarray(samples, dtype=complex)
    m = f.shape[-1]
    if m < 4 or m & (m - 1):
        raise ValueError(f"grid size must be a power of two >= 4, got {m}")
    if 2 * n_max + 1 > m:
        raise ValueError(f"n_max={n_max} needs a grid larger than {m}")
    c = np.fft.fft(f, axis=-1) / m
    idx = np.arange(-n_max, n_max + 1) % m
    return c[..., idx]


def sample_grid(m: int, tau: float) -> np.ndarray:
    return np.arange(m) * tau / m


def grid_size_for(n_needed: int, minimum: int = 4096) -> int:
    """Smallest power of two >= ``minimum`` and >= 8 ``n_needed``."""
    m = minimum
    while m < 8 * n_needed:
        m *= 2
    return m
