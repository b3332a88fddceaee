"""Drive parameters and Fourier decompositions of the driven Hamiltonians.

Two systems are covered:

* a three-level ladder whose probe (0-1) and control (1-2) couplings are
  switched on and off in complementary square waves, and
* a two-level system with a cosine-modulated transverse bias.

Square-wave convention: the probe is on for ``|t| < tau/4`` (mod ``tau``) with
coupling ``-omega_p/2`` and the control is on for the other half period with
coupling ``-omega_c/2``.  This is the waveform reconstructed by the series
``-Omega/4 + sum_n s_n Omega/((2n-1) pi) cos((2n-1) w t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DriveSpec3L:
    """Square-wave modulated three-level ladder.

    All frequencies are angular frequencies in the same units; ``tau`` is the
    modulation period and ``q_max`` the number of retained odd harmonics.
    """

    omega_p: float
    omega_c: float
    delta: float
    tau: float = TWO_PI
    q_max: int = 20

    def __post_init__(self):
        if not (self.omega_p >= 0 and math.isfinite(self.omega_p)):
            raise ValueError(f"omega_p must be finite and >= 0, got {self.omega_p}")
        if not (self.omega_c >= 0 and math.isfinite(self.omega_c)):
            raise ValueError(f"omega_c must be finite and >= 0, got {self.omega_c}")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if int(self.q_max) != self.q_max or self.q_max < 1:
            raise ValueError(f"q_max must be an integer >= 1, got {self.q_max}")

    @property
    def omega(self) -> float:
        return TWO_PI / self.tau

    @classmethod
    def from_ratios(cls, omega_p: float, omega_c: float, delta: float, omega: float = 1.0,
                    q_max: int = 20) -> "DriveSpec3L":
        """Build from dimensionless ratios Omega/omega, Delta/omega."""
        return cls(omega_p * omega, omega_c * omega, delta * omega, TWO_PI / omega, q_max)


@dataclass(frozen=True)
class DriveSpec2L:
    """Two-level system ``H = -1/2 [[-delta, eps(t)], [eps(t), delta]]``, ``eps = eps0 + A cos(w t)``."""

    epsilon_0: float
    amplitude: float
    omega: float = 1.0
    delta: float = 0.1

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be > 0, got {self.omega}")
        for name in ("epsilon_0", "amplitude", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def tau(self) -> float:
        return TWO_PI / self.omega


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FourierHamiltonian:
    """Time-periodic Hamiltonian ``H(t) = sum_k H[k] exp(-i k omega t)``.

    ``harmonics`` is sparse: absent keys are zero blocks.  Blocks must satisfy
    ``H[-k] == H[k]^dagger`` so that ``H(t)`` is Hermitian.
    """

    dim: int
    omega: float
    harmonics: Mapping[int, np.ndarray] = field(repr=False)

    def __post_init__(self):
        blocks = {int(k): _frozen(v) for k, v in self.harmonics.items()}
        if 0 not in blocks:
            blocks[0] = _frozen(np.zeros((self.dim, self.dim)))
        for k, v in blocks.items():
            if v.shape != (self.dim, self.dim):
                raise ValueError(f"harmonic {k} has shape {v.shape}, expected {(self.dim, self.dim)}")
            partner = blocks.get(-k)
            if partner is None:
                if np.any(v != 0):
                    raise ValueError(f"harmonic {k} stored without its partner {-k}")
                continue
            if not np.allclose(partner, v.conj().T, rtol=0, atol=1e-12):
                raise ValueError(f"harmonics {k} and {-k} are not Hermitian conjugates")
        object.__setattr__(self, "harmonics", dict(sorted(blocks.items())))

    @classmethod
    def from_nonnegative(cls, dim: int, omega: float, blocks: Mapping[int, np.ndarray]
                         ) -> "FourierHamiltonian":
        """Fill negative harmonics as conjugate transposes of the given k >= 0 blocks."""
        full = {}
        for k, v in blocks.items():
            if k < 0:
                raise ValueError("pass only k >= 0; negative harmonics are generated")
            v = np.asarray(v, dtype=complex)
            if k == 0:
                full[0] = v
            else:
                full[k] = v
                full[-k] = v.conj().T
        return cls(dim, omega, full)

    @property
    def max_harmonic(self) -> int:
        return max(abs(k) for k in self.harmonics)

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    def block(self, k: int) -> np.ndarray:
        """Harmonic ``k`` (a zero block if not stored)."""
        blk = self.harmonics.get(k)
        if blk is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return blk

    def is_real(self) -> bool:
        return all(not np.any(v.imag) for v in self.harmonics.values())

    def __call__(self, t):
        return evaluate_at_time(self, t)


def evaluate_at_time(fh: FourierHamiltonian, t) -> np.ndarray:
    """Sum the Fourier series at time ``t`` (scalar or array; arrays add a leading axis)."""
    t_arr = np.asarray(t, dtype=float)
    ks = np.array(list(fh.harmonics), dtype=float)
    blocks = np.stack(list(fh.harmonics.values()))
    phases = np.exp(-1j * np.multiply.outer(t_arr, ks) * fh.omega)
    return np.tensordot(phases, blocks, axes=([-1], [0]))


def square_wave_harmonics(amplitude: float, q_max: int,
                          sign: Literal["probe", "control"] = "control"
                          ) -> list[tuple[int, float]]:
    """Odd-harmonic cosine series of the modulated part of a square-wave coupling.

    Returns ``[(2n-1, c_n)]`` for ``n = 1..q_max`` with
    ``|c_n| = amplitude / ((2n-1) pi)``; the probe series carries ``(-1)**n``,
    the control series ``(-1)**(n+1)``.
    """
    if int(q_max) != q_max or q_max < 1:
        raise ValueError(f"q_max must be an integer >= 1, got {q_max}")
    if sign not in ("probe", "control"):
        raise ValueError(f"sign must be 'probe' or 'control', got {sign!r}")
    offset = 0 if sign == "probe" else 1
    out = []
    for n in range(1, int(q_max) + 1):
        k = 2 * n - 1
        out.append((k, (-1) ** (n + offset) * amplitude / (k * math.pi)))
    return out


def square_wave_on(t, tau: float, which: Literal["probe", "control"] = "probe"):
    """Exact on/off envelope (1.0 or 0.0) of the probe or control square wave."""
    phase = np.mod(np.asarray(t, dtype=float) / tau, 1.0)
    probe = (phase < 0.25) | (phase >= 0.75)
    env = probe if which == "probe" else ~probe
    return env.astype(float)


def build_hamiltonian_3l(spec: DriveSpec3L) -> FourierHamiltonian:
    """Fourier blocks of the truncated square-wave three-level Hamiltonian."""
    d, wp, wc = spec.delta, spec.omega_p, spec.omega_c
    h0 = np.array([[-d / 2, -wp / 4, 0.0],
                   [-wp / 4, d / 2, -wc / 4],
                   [0.0, -wc / 4, d / 2]], dtype=complex)
    blocks = {0: h0}
    probe = square_wave_harmonics(wp, spec.q_max, "probe")
    control = square_wave_harmonics(wc, spec.q_max, "control")
    for (k, cp), (_, cc) in zip(probe, control):
        if cp == 0 and cc == 0:
            continue
        hk = np.zeros((3, 3), dtype=complex)
        # a cosine splits evenly between harmonics +k and -k
        hk[0, 1] = hk[1, 0] = cp / 2
        hk[1, 2] = hk[2, 1] = cc / 2
        blocks[k] = hk
    return FourierHamiltonian.from_nonnegative(3, spec.omega, blocks)


def build_hamiltonian_2l(spec: DriveSpec2L) -> FourierHamiltonian:
    """Fourier blocks of ``-1/2 [[-delta, eps(t)], [eps(t), delta]]``."""
    e0, d = spec.epsilon_0, spec.delta
    blocks = {0: -0.5 * np.array([[-d, e0], [e0, d]], dtype=complex)}
    if spec.amplitude != 0:
        a = spec.amplitude
        blocks[1] = np.array([[0.0, -a / 4], [-a / 4, 0.0]], dtype=complex)
    return FourierHamiltonian.from_nonnegative(2, spec.omega, blocks)


def hamiltonian_3l_exact(spec: DriveSpec3L, t) -> np.ndarray:
    """Lab-frame three-level Hamiltonian with the exact (untruncated) square waves."""
    t = np.asarray(t, dtype=float)
    on_p = square_wave_on(t, spec.tau, "probe")
    on_c = 1.0 - on_p
    h = np.zeros(t.shape + (3, 3))
    h[..., 0, 0] = -spec.delta / 2
    h[..., 1, 1] = h[..., 2, 2] = spec.delta / 2
    h[..., 0, 1] = h[..., 1, 0] = -spec.omega_p / 2 * on_p
    h[..., 1, 2] = h[..., 2, 1] = -spec.omega_c / 2 * on_c
    return h
