"""Double unitary transformation (DUT).

Step one is a constant rotation ``U1`` that moves the strong drive onto the
diagonal.  Step two is the diagonal interaction-picture transformation
``U2(t) = diag(exp(-i theta_a(t)))`` with ``theta_a' = `` the time-dependent
diagonal drive, which removes that drive exactly::

    H2(t) = U2(t)^dagger H1(t) U2(t) - i U2(t)^dagger dU2/dt

What is left on the off-diagonals are weak couplings dressed by the phase
factors, whose Fourier coefficients are Bessel-function series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import jv

from .model import (DriveSpec2L, DriveSpec3L, FourierHamiltonian, build_hamiltonian_2l,
                    build_hamiltonian_3l, square_wave_harmonics)
from .oracle import fourier_coefficients, grid_size_for, sample_grid

SQRT2 = math.sqrt(2.0)

# rows |0>, |1>, |2>; columns |0~>, |P>, |Q>
U1_THREE_LEVEL = np.array([[1.0, 0.0, 0.0],
                           [0.0, 1 / SQRT2, -1 / SQRT2],
                           [0.0, 1 / SQRT2, 1 / SQRT2]])

# exp(-i pi/4 sigma_y)
U1_TWO_LEVEL = np.array([[1.0, -1.0],
                         [1.0, 1.0]]) / SQRT2


@dataclass(frozen=True)
class DutResult:
    """Outcome of the two transformations.

    ``u2_diagonal(t)`` returns the diagonal of ``U2(t)`` (shape ``t.shape + (d,)``).
    """

    u1: np.ndarray
    transformed_h1: FourierHamiltonian
    transformed_h2: FourierHamiltonian
    diagonal_drive: FourierHamiltonian
    u2_diagonal: Callable[[np.ndarray], np.ndarray]


def rotate(fh: FourierHamiltonian, u: np.ndarray) -> FourierHamiltonian:
    """``U^dagger H^[k] U`` for every stored harmonic."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (fh.dim, fh.dim):
        raise ValueError(f"rotation has shape {u.shape}, expected {(fh.dim, fh.dim)}")
    if not np.allclose(u.conj().T @ u, np.eye(fh.dim), rtol=0, atol=1e-12):
        raise ValueError("rotation is not unitary")
    blocks = {k: u.conj().T @ v @ u for k, v in fh.harmonics.items()}
    # round-off can spoil exact conjugate pairing; rebuild negatives from positives
    nonneg = {k: v for k, v in blocks.items() if k > 0}
    nonneg[0] = 0.5 * (blocks[0] + blocks[0].conj().T)
    return FourierHamiltonian.from_nonnegative(fh.dim, fh.omega, nonneg)


def control_phase(spec: DriveSpec3L, t) -> np.ndarray:
    """Closed-form integral ``int_0^t Omega_c(t') dt'`` of the modulated control term."""
    t = np.asarray(t, dtype=float)
    w = spec.omega
    out = np.zeros_like(t)
    for k, c in square_wave_harmonics(spec.omega_c, spec.q_max, "control"):
        out = out + c * np.sin(k * w * t) / (k * w)
    return out


def u2_phase_functions(spec: DriveSpec3L, t) -> tuple[np.ndarray, np.ndarray]:
    """``(U_P(t), U_Q(t)) = (exp(-i phi), exp(+i phi))`` with ``phi`` from :func:`control_phase`."""
    phi = control_phase(spec, t)
    return np.exp(-1j * phi), np.exp(1j * phi)


def probe_envelope(spec: DriveSpec3L, t) -> np.ndarray:
    """``B(t)``: the |0~>-|P> element of the rotated Hamiltonian (dc part included)."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, -spec.omega_p / (4 * SQRT2))
    for k, c in square_wave_harmonics(spec.omega_p, spec.q_max, "probe"):
        out = out + c * np.cos(k * spec.omega * t) / SQRT2
    return out


def default_n_out(spec: DriveSpec3L) -> int:
    return 4 * math.ceil(spec.omega_c / (math.pi * spec.omega)) + 8 * spec.q_max


def _drive_phase_harmonics(drive: FourierHamiltonian) -> dict[int, np.ndarray]:
    """Fourier blocks of ``theta(t) = int_0^t diag(drive)``, constant of integration included."""
    out = {}
    const = np.zeros(drive.dim, dtype=complex)
    for k, blk in drive.harmonics.items():
        if k == 0:
            continue
        d = np.diag(blk)
        # int_0^t exp(-i k w s) ds = (exp(-i k w t) - 1) / (-i k w)
        coef = d / (-1j * k * drive.omega)
        out[k] = coef
        const -= coef
    out[0] = const
    return out


def _phase_function(drive: FourierHamiltonian) -> Callable[[np.ndarray], np.ndarray]:
    harm = _drive_phase_harmonics(drive)
    ks = np.array(list(harm), dtype=float)
    coefs = np.stack(list(harm.values()))

    def u2_diag(t):
        t = np.asarray(t, dtype=float)
        phases = np.exp(-1j * np.multiply.outer(t, ks) * drive.omega)
        theta = (phases @ coefs).real
        return np.exp(-1j * theta)

    return u2_diag


def check_commuting(drive: FourierHamiltonian, n_pairs: int = 10, tol: float = 1e-10,
                    seed: int = 0) -> float:
    """Largest ``||[V(t), V(t')]||`` over random time pairs; raises if above ``tol``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t1, t2 in rng.uniform(0.0, drive.period, size=(n_pairs, 2)):
        a, b = drive(t1), drive(t2)
        worst = max(worst, float(np.linalg.norm(a @ b - b @ a)))
    if worst > tol:
        raise ValueError(f"strong drive does not commute with itself at different times "
                         f"(max commutator norm {worst:.3e})")
    return worst


def double_unitary_transform(fh: FourierHamiltonian, u1: np.ndarray, strong: FourierHamiltonian,
                             n_out: int, grid: int | None = None) -> DutResult:
    """Generic DUT with FFT-evaluated couplings.

    ``strong`` is the large drive in the original basis.  It must commute
    with itself at all times, and ``u1`` must make it diagonal; its harmonic-0
    part stays in the Hamiltonian, the oscillating part is removed by ``U2``.
    """
    if strong.dim != fh.dim or strong.omega != fh.omega:
        raise ValueError("strong drive must share dimension and frequency with the Hamiltonian")
    check_commuting(strong)
    h1 = rotate(fh, u1)
    strong1 = rotate(strong, u1)
    drive_blocks = {}
    for k, blk in strong1.harmonics.items():
        off = blk - np.diag(np.diag(blk))
        if np.max(np.abs(off), initial=0.0) > 1e-10:
            raise ValueError(f"u1 leaves harmonic {k} of the strong drive off-diagonal")
        if k != 0:
            drive_blocks[k] = np.diag(np.diag(blk))
    drive = FourierHamiltonian(fh.dim, fh.omega, drive_blocks)
    u2_diag = _phase_function(drive)

    m = grid or grid_size_for(n_out + h1.max_harmonic + 4 * _phase_bandwidth(drive))
    t = sample_grid(m, h1.period)
    h_rest = h1(t) - drive(t)
    u = u2_diag(t)
    # U2^dagger H U2 for diagonal U2; the -i U2^dagger dU2/dt term cancels the drive
    h2_t = u.conj()[:, :, None] * h_rest * u[:, None, :]
    # Fourier coefficient of exp(-i k w t) is c_{-k} in the standard convention
    coeffs = fourier_coefficients(np.moveaxis(h2_t, 0, -1), n_out)
    blocks = {}
    for k in range(0, n_out + 1):
        blocks[k] = coeffs[..., n_out - k]
    h2 = FourierHamiltonian.from_nonnegative(fh.dim, fh.omega, _clean(blocks))
    return DutResult(np.asarray(u1), h1, h2, drive, u2_diag)


def _phase_bandwidth(drive: FourierHamiltonian) -> int:
    """Rough harmonic content of ``exp(i theta)``: the Bessel width of the largest phase amplitude."""
    amp = 0.0
    for k, blk in drive.harmonics.items():
        if k:
            amp += float(np.max(np.abs(np.diag(blk)))) / (abs(k) * drive.omega)
    return int(math.ceil(2 * amp)) + 16


def _clean(blocks: dict[int, np.ndarray], tol: float = 1e-15) -> dict[int, np.ndarray]:
    out = {}
    for k, v in blocks.items():
        v = np.where(np.abs(v) < tol, 0.0, v)
        if k == 0:
            v = 0.5 * (v + v.conj().T)
        out[k] = v
    return out


def dut_two_level(spec: DriveSpec2L, bessel_cutoff: int = 40) -> DutResult:
    """Closed-form DUT of the cosine-driven two-level system.

    After ``U1 = exp(-i pi/4 sigma_y)`` the drive sits on the diagonal as
    ``diag(-A/2, A/2) cos(w t)``; ``U2`` turns the remaining ``-Delta/2``
    coupling into ``-(Delta/2) sum_n J_n(A/w) exp(-i n w t)``.
    """
    if int(bessel_cutoff) != bessel_cutoff or bessel_cutoff < 1:
        raise ValueError(f"bessel_cutoff must be an integer >= 1, got {bessel_cutoff}")
    h = build_hamiltonian_2l(spec)
    h1 = rotate(h, U1_TWO_LEVEL)
    a, w = spec.amplitude, spec.omega
    drive = FourierHamiltonian.from_nonnegative(
        2, w, {1: np.diag([-a / 4, a / 4])} if a != 0 else {})
    x = a / w
    blocks = {0: np.array([[-spec.epsilon_0 / 2, -spec.delta / 2 * jv(0, x)],
                           [-spec.delta / 2 * jv(0, x), spec.epsilon_0 / 2]], dtype=complex)}
    for n in range(1, int(bessel_cutoff) + 1):
        blk = np.zeros((2, 2), dtype=complex)
        blk[0, 1] = -spec.delta / 2 * jv(n, x)
        blk[1, 0] = -spec.delta / 2 * jv(-n, x)
        blocks[n] = blk
    h2 = FourierHamiltonian.from_nonnegative(2, w, blocks)

    def u2_diag(t):
        phi = a * np.sin(w * np.asarray(t, dtype=float)) / (2 * w)
        return np.stack([np.exp(1j * phi), np.exp(-1j * phi)], axis=-1)

    return DutResult(U1_TWO_LEVEL.copy(), h1, h2, drive, u2_diag)


def dut_three_level(spec: DriveSpec3L, n_out: int | None = None,
                    method: str = "fft_oracle") -> DutResult:
    """DUT of the square-wave three-level system.

    ``transformed_h2`` carries ``Omega_n^P`` on the (0, P) element and
    ``Omega_n^Q`` on the (0, Q) element at harmonic ``n`` (coefficient of
    ``exp(-i n w t)``), the dressed energies on the diagonal and no P-Q
    coupling at any harmonic.
    """
    from .gvv import coupling_table  # gvv builds on the phase functions defined here

    n_out = default_n_out(spec) if n_out is None else int(n_out)
    if n_out < 1:
        raise ValueError(f"n_out must be >= 1, got {n_out}")
    h = build_hamiltonian_3l(spec)
    h1 = rotate(h, U1_THREE_LEVEL)
    drive_blocks = {}
    for k, c in square_wave_harmonics(spec.omega_c, spec.q_max, "control"):
        drive_blocks[k] = np.diag([0.0, c / 2, -c / 2])
    drive = FourierHamiltonian.from_nonnegative(3, spec.omega, drive_blocks)
    table = coupling_table(spec, n_out, method=method)
    d, wc = spec.delta, spec.omega_c
    blocks = {}
    for k in range(0, n_out + 1):
        blk = np.zeros((3, 3), dtype=complex)
        blk[0, 1] = table.p(k)
        blk[0, 2] = table.q(k)
        blk[1, 0] = table.p(-k)
        blk[2, 0] = table.q(-k)
        blocks[k] = blk
    blocks[0] = blocks[0] + np.diag([-d / 2, d / 2 - wc / 4, d / 2 + wc / 4])
    h2 = FourierHamiltonian.from_nonnegative(3, spec.omega, blocks)

    def u2_diag(t):
        up, uq = u2_phase_functions(spec, t)
        return np.stack([np.ones_like(up), up, uq], axis=-1)

    return DutResult(U1_THREE_LEVEL.copy(), h1, h2, drive, u2_diag)


def transform_in_time(result: DutResult, t) -> np.ndarray:
    """Direct evaluation of ``U2^dagger H1 U2 - i U2^dagger dU2/dt`` at times ``t``."""
    t = np.asarray(t, dtype=float)
    u = result.u2_diagonal(t)
    h1 = result.transformed_h1(t)
    rotated = u.conj()[..., :, None] * h1 * u[..., None, :]
    # -i U2^dagger dU2/dt = -theta'(t) = -drive(t) on the diagonal
    return rotated - result.diagonal_drive(t)
