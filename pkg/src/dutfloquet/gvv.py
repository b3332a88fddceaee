"""Effective couplings, second-order Van Vleck shifts and closed-form populations.

Index conventions
-----------------
``Omega_n^P`` is the coefficient of ``exp(-i n w t)`` in the |0~>-|P> element
``B(t) U_P(t)`` of the interaction-picture Hamiltonian, and ``Omega_m^Q`` the
one of ``-B(t) U_Q(t)``.  With this labelling ``|0~,0>`` is resonant with
``|P~,n>`` at ``Delta = Omega_c/4 - n w`` and with ``|Q~,m>`` at
``Delta = -Omega_c/4 - m w``, and ``Omega_n^P(x) = Omega_0^P(x - 4n)``.

Nested-Bessel route: with ``a_j = (-1)^(j+1) Omega_c / ((2j-1)^2 pi w)``,
``U_P = prod_j sum_k J_k(a_j) exp(-i k (2j-1) w t)`` and ``U_Q`` the same with
``a_j -> -a_j``.  The probe envelope couples neighbouring photon orders
``N +- (2j-1)``; odd orders ``2j-1`` (not ``2n+-1``) reproduce the FFT route.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .errors import ConsistencyError, DegenerateChannelError
from .model import DriveSpec2L, DriveSpec3L
from .oracle import fourier_coefficients, grid_size_for, sample_grid

SQRT2 = math.sqrt(2.0)
DEFAULT_WINDOW = 12
AGREEMENT_TOL = 1e-6
PRUNE_TOL = 1e-17
THREE_LEVEL_FACTOR = 5.0


class Provenance(str, enum.Enum):
    NESTED_BESSEL = "nested_bessel"
    FFT_ORACLE = "fft_oracle"
    SQUARE_WAVE = "square_wave"  # untruncated square wave, closed form


class Kind(str, enum.Enum):
    GRWA = "GRWA"
    GVV = "GVV"


@dataclass(frozen=True)
class CouplingTable:
    """``omega_P[i]`` and ``omega_Q[i]`` hold the couplings at photon index ``i - n_max``."""

    n_max: int
    omega_P: np.ndarray
    omega_Q: np.ndarray
    provenance: Provenance
    omega_p: float
    omega_c: float
    omega: float
    q_max: int

    @property
    def n_range(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def p(self, n: int) -> float:
        return float(self.omega_P[n + self.n_max]) if abs(n) <= self.n_max else 0.0

    def q(self, m: int) -> float:
        return float(self.omega_Q[m + self.n_max]) if abs(m) <= self.n_max else 0.0


@dataclass(frozen=True)
class GvvShifts:
    delta_0: float
    delta_P: float
    delta_Q: float
    delta_PQ: float


@dataclass(frozen=True)
class EffectiveModel:
    """3x3 effective matrix on ``(|0~,0>, |P~,n>, |Q~,m>)``."""

    kind: Kind
    matrix: np.ndarray
    n: int
    m: int
    shifts: GvvShifts
    labels: tuple[str, str, str] = ("|0~,0>", "|P~,n>", "|Q~,m>")


# ---------------------------------------------------------------------------
# couplings


def _probe_weights(omega_p: float, q_max: int) -> tuple[float, np.ndarray]:
    """dc value of ``B`` and the ``exp(+-i(2j-1)wt)`` weights of its cosine series."""
    j = np.arange(1, q_max + 1)
    b0 = -omega_p / (4 * SQRT2)
    bj = (-1.0) ** j * omega_p / (2 * SQRT2 * (2 * j - 1) * math.pi)
    return b0, bj


def _phase_series(omega_c: float, omega: float, q_max: int, sign: int, n_needed: int
                  ) -> tuple[int, np.ndarray]:
    """Coefficients of ``exp(-i sign phi(t))`` on ``exp(-i N w t)`` as ``(offset, array)``.

    ``array[i]`` is the coefficient for ``N = i - offset``.  Built as a chain of
    convolutions, one per square-wave harmonic, with negligible Bessel terms
    pruned and entries that can no longer reach ``|N| <= n_needed`` dropped.
    """
    steps = [2 * j - 1 for j in range(1, q_max + 1)]
    args = [sign * (-1) ** (j + 1) * omega_c / (s * s * math.pi * omega)
            for j, s in zip(range(1, q_max + 1), steps)]
    kernels = []
    for x in args:
        kmax = max(4, math.ceil(abs(x)) + 10)
        ks = np.arange(-kmax, kmax + 1)
        vals = jv(ks, x)
        keep = np.abs(vals) >= PRUNE_TOL
        kernels.append((ks[keep], vals[keep]))
    reach = [int(s * np.max(np.abs(ks), initial=0)) for s, (ks, _) in zip(steps, kernels)]
    remaining = np.cumsum(reach[::-1])[::-1].tolist() + [0]

    lo, coef = 0, np.ones(1)
    for idx, (step, (ks, vals)) in enumerate(zip(steps, kernels)):
        kmin, kmax = int(ks.min()), int(ks.max())
        new_lo = lo + kmin * step
        out = np.zeros(coef.size + (kmax - kmin) * step)
        for k, v in zip(ks, vals):
            start = (int(k) - kmin) * step
            out[start:start + coef.size] += v * coef
        lo, coef = new_lo, out
        # drop indices that later factors cannot bring back into range
        limit = n_needed + remaining[idx + 1]
        n_idx = lo + np.arange(coef.size)
        mask = (np.abs(n_idx) <= limit) & (np.abs(coef) >= PRUNE_TOL * 1e-3)
        if not mask.any():
            return 0, np.zeros(1)
        first, last = np.nonzero(mask)[0][[0, -1]]
        coef = np.where(mask, coef, 0.0)[first:last + 1]
        lo = int(n_idx[first])
    return -lo, coef


def _nested_bessel(omega_p: float, omega_c: float, omega: float, q_max: int, n_max: int
                   ) -> tuple[np.ndarray, np.ndarray]:
    b0, bj = _probe_weights(omega_p, q_max)
    steps = 2 * np.arange(1, q_max + 1) - 1
    n = np.arange(-n_max, n_max + 1)
    result = []
    for sign, overall in ((1, 1.0), (-1, -1.0)):
        offset, p = _phase_series(omega_c, omega, q_max, sign, n_max + int(steps[-1]))

        def at(idx):
            i = idx + offset
            ok = (i >= 0) & (i < p.size)
            return np.where(ok, p[np.clip(i, 0, p.size - 1)], 0.0)

        val = b0 * at(n)
        for b, s in zip(bj, steps):
            val = val + b * (at(n - s) + at(n + s))
        result.append(overall * val)
    return result[0], result[1]


def _control_phase_raw(omega_c: float, omega: float, q_max: int, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    for j in range(1, q_max + 1):
        k = 2 * j - 1
        out += (-1) ** (j + 1) * omega_c * np.sin(k * omega * t) / (k * k * math.pi * omega)
    return out


def _probe_envelope_raw(omega_p: float, omega: float, q_max: int, t: np.ndarray) -> np.ndarray:
    out = np.full(t.shape, -omega_p / (4 * SQRT2))
    for j in range(1, q_max + 1):
        k = 2 * j - 1
        out += (-1) ** j * omega_p * np.cos(k * omega * t) / (k * math.pi * SQRT2)
    return out


def _fft_oracle(omega_p: float, omega_c: float, omega: float, q_max: int, n_max: int,
                grid: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    bandwidth = n_max + 2 * q_max + int(abs(omega_c) / (math.pi * omega)) + 32
    m = grid or grid_size_for(bandwidth)
    t = sample_grid(m, 2 * math.pi / omega)
    b = _probe_envelope_raw(omega_p, omega, q_max, t)
    phi = _control_phase_raw(omega_c, omega, q_max, t)
    # Omega_n is the exp(-i n w t) coefficient, i.e. standard coefficient -n
    cp = fourier_coefficients(b * np.exp(-1j * phi), n_max)[::-1]
    cq = fourier_coefficients(-b * np.exp(1j * phi), n_max)[::-1]
    return cp.real, cq.real


def _square_wave(omega_p: float, omega_c: float, omega: float, n_max: int
                 ) -> tuple[np.ndarray, np.ndarray]:
    x = omega_c / omega
    n = np.arange(-n_max, n_max + 1)
    amp = omega_p / (4 * SQRT2)
    # np.sinc(z) = sin(pi z) / (pi z)
    return -amp * np.sinc((x - 4 * n) / 8), amp * np.sinc((x + 4 * n) / 8)


@functools.lru_cache(maxsize=256)
def _couplings_cached(omega_p, omega_c, omega, q_max, n_max, provenance):
    if provenance is Provenance.NESTED_BESSEL:
        p, q = _nested_bessel(omega_p, omega_c, omega, q_max, n_max)
    elif provenance is Provenance.FFT_ORACLE:
        p, q = _fft_oracle(omega_p, omega_c, omega, q_max, n_max)
    else:
        p, q = _square_wave(omega_p, omega_c, omega, n_max)
    p.setflags(write=False)
    q.setflags(write=False)
    return p, q


def couplings(omega_p: float, omega_c: float, n_max: int, q_max: int = 20, omega: float = 1.0,
              method: Provenance | str = Provenance.NESTED_BESSEL,
              cross_check: bool = False) -> CouplingTable:
    """Coupling table for arbitrary real ``omega_c`` (negative values allowed).

    With ``cross_check`` the FFT route is also evaluated and a disagreement
    above ``1e-6`` raises :class:`ConsistencyError`.
    """
    method = Provenance(method)
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"N must be an integer >= 1, got {n_max}")
    if int(q_max) != q_max or q_max < 1:
        raise ValueError(f"q_max must be an integer >= 1, got {q_max}")
    if not (omega > 0):
        raise ValueError("omega must be > 0")
    key = (float(omega_p), float(omega_c), float(omega), int(q_max), int(n_max))
    p, q = _couplings_cached(*key, method)
    if cross_check:
        other = Provenance.FFT_ORACLE if method is not Provenance.FFT_ORACLE else Provenance.NESTED_BESSEL
        p2, q2 = _couplings_cached(*key, other)
        worst = max(float(np.max(np.abs(p - p2))), float(np.max(np.abs(q - q2))))
        if worst > AGREEMENT_TOL:
            raise ConsistencyError(f"{method.value} and {other.value} couplings disagree by "
                                   f"{worst:.3e} (omega_c={omega_c}, q_max={q_max})")
    return CouplingTable(int(n_max), p, q, method, float(omega_p), float(omega_c), float(omega),
                         int(q_max))


def coupling_table(spec: DriveSpec3L, N: int, method: Provenance | str = Provenance.NESTED_BESSEL,
                   cross_check: bool = False) -> CouplingTable:
    return couplings(spec.omega_p, spec.omega_c, N, spec.q_max, spec.omega, method, cross_check)


def diffraction_function(alpha):
    """``sin(alpha)^2 / alpha^2`` with the limit 1 at ``alpha = 0``."""
    a = np.asarray(alpha, dtype=float)
    out = np.sinc(a / math.pi) ** 2
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# resonances and shifts


def p_detuning(spec: DriveSpec3L, k) -> np.ndarray:
    """``Delta - Omega_c/4 + k w``: energy of ``|P~,k>`` above ``|0~,0>``."""
    return spec.delta - spec.omega_c / 4 + np.asarray(k) * spec.omega


def q_detuning(spec: DriveSpec3L, k) -> np.ndarray:
    return spec.delta + spec.omega_c / 4 + np.asarray(k) * spec.omega


def nearest_resonances(spec: DriveSpec3L) -> tuple[int, int]:
    """Photon indices ``(n, m)`` of the P and Q levels closest to ``|0~,0>``."""
    w = spec.omega
    n = int(math.floor((spec.omega_c / 4 - spec.delta) / w + 0.5))
    m = int(math.floor((-spec.omega_c / 4 - spec.delta) / w + 0.5))
    return n, m


def table_size(spec: DriveSpec3L, n: int, m: int, n_window: int = DEFAULT_WINDOW) -> int:
    """Photon range wide enough for the resonant labels, the window and the shift sums."""
    return max(abs(n), abs(m)) + n_window + 2 * spec.q_max + 40


def _checked_denominators(den: np.ndarray, ks: np.ndarray, skip: int, omega: float, branch: str):
    mask = ks != skip
    bad = mask & (np.abs(den) < 1e-6 * omega)
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        raise DegenerateChannelError(branch, int(ks[i]), float(den[i]))
    return mask


def gvv_shifts(table: CouplingTable, spec: DriveSpec3L, n: int, m: int) -> GvvShifts:
    """Second-order shifts of ``|0~,0>``, ``|P~,n>``, ``|Q~,m>`` and the induced P-Q coupling.

    Sums run over the whole table; intermediate states are the ``|0~,j>``
    with ``j != 0`` (P and Q levels only couple through the ground ladder).
    """
    if max(abs(n), abs(m)) > table.n_max:
        raise ValueError(f"resonance indices ({n}, {m}) outside table range +-{table.n_max}")
    ks = table.n_range
    P, Q = table.omega_P, table.omega_Q
    den_p = p_detuning(spec, ks)
    den_q = q_detuning(spec, ks)
    mask_p = _checked_denominators(den_p, ks, n, spec.omega, "P")
    mask_q = _checked_denominators(den_q, ks, m, spec.omega, "Q")
    delta_p = float(np.sum(P[mask_p] ** 2 / den_p[mask_p]))
    delta_q = float(np.sum(Q[mask_q] ** 2 / den_q[mask_q]))
    # partner couplings share the intermediate |0~, j>: P index n-j, Q index m-j
    q_partner = np.array([table.q(m - n + k) for k in ks])
    p_partner = np.array([table.p(n - m + k) for k in ks])
    delta_pq = 0.5 * float(np.sum(Q[mask_q] * p_partner[mask_q] / den_q[mask_q])) \
        + 0.5 * float(np.sum(P[mask_p] * q_partner[mask_p] / den_p[mask_p]))
    return GvvShifts(-delta_p - delta_q, delta_p, delta_q, delta_pq)


ZERO_SHIFTS = GvvShifts(0.0, 0.0, 0.0, 0.0)


def effective_matrix(table: CouplingTable, shifts: GvvShifts | None, spec: DriveSpec3L, n: int,
                     m: int, kind: Kind | str = Kind.GVV) -> EffectiveModel:
    kind = Kind(kind)
    if kind is Kind.GRWA or shifts is None:
        if kind is Kind.GVV:
            raise ValueError("GVV effective matrix needs shifts")
        shifts = ZERO_SHIFTS
    d, wc, w = spec.delta, spec.omega_c, spec.omega
    mat = np.array([
        [-d / 2 + shifts.delta_0, table.p(n), table.q(m)],
        [table.p(n), d / 2 - wc / 4 + n * w + shifts.delta_P, shifts.delta_PQ],
        [table.q(m), shifts.delta_PQ, d / 2 + wc / 4 + m * w + shifts.delta_Q],
    ])
    return EffectiveModel(kind, mat, n, m, shifts)


# ---------------------------------------------------------------------------
# populations


def lorentzian(coupling, detuning):
    """Time-averaged upper-level population of a two-level crossing, halved onto state |1>."""
    g2 = (2 * np.asarray(coupling)) ** 2
    den = np.asarray(detuning) ** 2 + g2
    return 0.25 * np.divide(g2, den, out=np.zeros_like(den, dtype=float), where=den > 0)


@functools.lru_cache(maxsize=64)
def _phase_cross_coefficients(omega_c: float, omega: float, q_max: int, n_max: int) -> np.ndarray:
    """Coefficients of ``U_P U_Q^* = exp(-2 i phi)`` on ``exp(-i s w t)``, ``s = -n_max..n_max``."""
    m = grid_size_for(n_max + 4 * int(abs(omega_c) / (math.pi * omega)) + 32)
    t = sample_grid(m, 2 * math.pi / omega)
    phi = _control_phase_raw(omega_c, omega, q_max, t)
    c = fourier_coefficients(np.exp(-2j * phi), n_max)[::-1].real
    c.setflags(write=False)
    return c


def three_level_populations(model: EffectiveModel, spec: DriveSpec3L) -> np.ndarray:
    """Time-averaged ``(rho00, rho11, rho22)`` from the eigenvectors of a 3x3 effective model.

    The lab-frame |1> and |2> amplitudes mix the P and Q components through
    ``U_P U_Q^*``; its harmonic ``n - m`` survives the time average and adds
    a coherent P-Q term.
    """
    _, vecs = np.linalg.eigh(model.matrix)
    w0 = np.abs(vecs[0]) ** 2
    s = model.n - model.m
    kappa = _phase_cross_coefficients(spec.omega_c, spec.omega, spec.q_max, abs(s) + 1)[s + abs(s) + 1]
    mixed = kappa * vecs[1] * vecs[2]
    inc = 0.5 * (np.abs(vecs[1]) ** 2 + np.abs(vecs[2]) ** 2)
    rho0 = float(np.sum(w0 ** 2))
    rho1 = float(np.sum(w0 * (inc - mixed)))
    rho2 = float(np.sum(w0 * (inc + mixed)))
    return np.array([rho0, rho1, rho2])


def is_three_level_resonance(table: CouplingTable, spec: DriveSpec3L, n: int, m: int) -> bool:
    gap = abs(-spec.omega_c / 2 + (n - m) * spec.omega)
    return gap < THREE_LEVEL_FACTOR * max(abs(table.p(n)), abs(table.q(m)))


def rho11_analytic(spec: DriveSpec3L, kind: Kind | str = Kind.GVV, n_window: int = DEFAULT_WINDOW,
                   method: Provenance | str = Provenance.NESTED_BESSEL) -> float:
    """Closed-form time-averaged population of |1>.

    Sum of Lorentzians over ``n`` and ``m`` within ``n_window`` of the nearest
    resonant labels.  Shifts are evaluated once at the nearest-resonance pair.
    At a three-level resonance the pair is replaced by the populations of the
    full 3x3 effective model and only the remaining Lorentzian tails are added.
    """
    kind = Kind(kind)
    if int(n_window) != n_window or n_window < 0:
        raise ValueError(f"n_window must be an integer >= 0, got {n_window}")
    n0, m0 = nearest_resonances(spec)
    table = coupling_table(spec, table_size(spec, n0, m0, n_window), method)
    shifts = gvv_shifts(table, spec, n0, m0) if kind is Kind.GVV else ZERO_SHIFTS

    ns = np.arange(n0 - n_window, n0 + n_window + 1)
    ms = np.arange(m0 - n_window, m0 + n_window + 1)
    gp = np.array([table.p(k) for k in ns])
    gq = np.array([table.q(k) for k in ms])
    det_p = p_detuning(spec, ns) + shifts.delta_P - shifts.delta_0
    det_q = q_detuning(spec, ms) + shifts.delta_Q - shifts.delta_0
    lp = lorentzian(gp, det_p)
    lq = lorentzian(gq, det_q)

    if is_three_level_resonance(table, spec, n0, m0):
        model = effective_matrix(table, shifts, spec, n0, m0, kind)
        core = three_level_populations(model, spec)[1]
        return float(core + lp[ns != n0].sum() + lq[ms != m0].sum())
    return float(lp.sum() + lq.sum())


def rho11_two_level(spec: DriveSpec2L, n_window: int = DEFAULT_WINDOW) -> float:
    """Sum over photon resonances ``|n| <= n_window`` of ``(1/2)(D J_n)^2 / ((D J_n)^2 + (n w - eps0)^2)``."""
    if int(n_window) != n_window or n_window < 0:
        raise ValueError(f"n_window must be an integer >= 0, got {n_window}")
    n = np.arange(-n_window, n_window + 1)
    g2 = (spec.delta * jv(n, spec.amplitude / spec.omega)) ** 2
    den = g2 + (n * spec.omega - spec.epsilon_0) ** 2
    terms = np.divide(0.5 * g2, den, out=np.zeros_like(den), where=den > 0)
    # exact degeneracy with zero coupling: the resonance has no width, contributes nothing
    return float(terms.sum())


def first_order_corrections(table: CouplingTable, spec: DriveSpec3L, n: int, m: int
                            ) -> dict[str, dict[tuple[str, int], float]]:
    """First-order admixtures of the three model states, keyed by ``(state, photon index)``.

    ``|0~,0>`` picks up ``|P~,k>`` (k != n) and ``|Q~,k>`` (k != m);
    ``|P~,n>`` and ``|Q~,m>`` pick up ``|0~,j>`` with ``j != 0``.
    """
    ks = table.n_range
    den_p = p_detuning(spec, ks)
    den_q = q_detuning(spec, ks)
    _checked_denominators(den_p, ks, n, spec.omega, "P")
    _checked_denominators(den_q, ks, m, spec.omega, "Q")
    ground: dict[tuple[str, int], float] = {}
    p_state: dict[tuple[str, int], float] = {}
    q_state: dict[tuple[str, int], float] = {}
    for i, k in enumerate(ks):
        k = int(k)
        if k != n:
            ground[("P", k)] = -table.omega_P[i] / den_p[i]
            p_state[("0", n - k)] = table.omega_P[i] / den_p[i]
        if k != m:
            ground[("Q", k)] = -table.omega_Q[i] / den_q[i]
            q_state[("0", m - k)] = table.omega_Q[i] / den_q[i]
    return {"0": ground, "P": p_state, "Q": q_state}
