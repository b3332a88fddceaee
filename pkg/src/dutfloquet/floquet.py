"""Truncated Floquet matrices, quasienergy spectra and time-averaged transitions.

Basis ordering: rows are ``(alpha, n)`` with the photon index ``n`` running
``-n_c..n_c`` slowest and the state index ``alpha`` fastest, so row
``(n + n_c) * dim + alpha`` is ``|alpha, n>``.

With ``H(t) = sum_k H[k] exp(-i k w t)`` the Floquet states are
``exp(-i q t) sum_n phi_n exp(+i n w t)`` and the matrix elements are::

    <alpha n| H_F |beta m> = H[m - n]_{alpha beta} + n w delta_{alpha beta} delta_{nm}

For the real, cosine-driven lab-frame Hamiltonians ``H[k] == H[-k]`` and the
ordering of ``m - n`` is immaterial; it matters for complex harmonics such as
the interaction-picture Hamiltonian produced by :mod:`dutfloquet.dut`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import NumericFailure
from .model import DriveSpec3L, FourierHamiltonian, build_hamiltonian_3l

DEFAULT_NC = 40


@dataclass(frozen=True)
class FloquetOptions:
    n_c: int = DEFAULT_NC

    def __post_init__(self):
        if int(self.n_c) != self.n_c or self.n_c < 1:
            raise ValueError(f"n_c must be an integer >= 1, got {self.n_c}")


def recommended_nc(omega_c_ratio: float, floor: int = DEFAULT_NC) -> int:
    """Photon-block cutoff that keeps rho11 converged to ~1e-6 up to Omega_c/w = 12.

    The square-wave harmonics decay only as 1/k, so Floquet states carry long
    tails in photon space that grow with the control strength.
    """
    return max(int(floor), int(math.ceil(5.0 * abs(omega_c_ratio))) + 20)


def options_for(spec: DriveSpec3L, n_c: int | None = None) -> FloquetOptions:
    """Explicit ``n_c`` if given, otherwise :func:`recommended_nc` for ``spec``."""
    if n_c is not None:
        return FloquetOptions(n_c)
    return FloquetOptions(recommended_nc(spec.omega_c / spec.omega))


@dataclass(frozen=True)
class FloquetMatrix:
    matrix: np.ndarray
    basis_labels: np.ndarray  # (N, 2) int array of (alpha, n)
    dim: int
    n_c: int
    omega: float

    def index(self, alpha: int, n: int) -> int:
        return _index(self.dim, self.n_c, alpha, n)


@dataclass(frozen=True)
class QuasiSpectrum:
    """Eigen-decomposition of a truncated Floquet matrix; column j of ``eigenvectors`` pairs with ``eigenvalues[j]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis_labels: np.ndarray
    dim: int
    n_c: int
    omega: float

    def index(self, alpha: int, n: int) -> int:
        return _index(self.dim, self.n_c, alpha, n)

    def zone(self, k: int = 0) -> np.ndarray:
        """Quasienergies in ``[(k - 1/2) w, (k + 1/2) w)``."""
        lo = (k - 0.5) * self.omega
        e = self.eigenvalues
        return e[(e >= lo) & (e < lo + self.omega)]

    def photon_centroid(self) -> np.ndarray:
        """Mean photon index of each eigenvector."""
        weights = np.abs(self.eigenvectors) ** 2
        return self.basis_labels[:, 1] @ weights


def _index(dim: int, n_c: int, alpha: int, n: int) -> int:
    if not 0 <= alpha < dim:
        raise IndexError(f"state index {alpha} out of range for dim={dim}")
    if abs(n) > n_c:
        raise IndexError(f"photon index {n} outside [-{n_c}, {n_c}]")
    return (n + n_c) * dim + alpha


def basis_labels(dim: int, n_c: int) -> np.ndarray:
    ns = np.repeat(np.arange(-n_c, n_c + 1), dim)
    alphas = np.tile(np.arange(dim), 2 * n_c + 1)
    return np.column_stack([alphas, ns])


def build_floquet_matrix(fh: FourierHamiltonian, opts: FloquetOptions | None = None) -> FloquetMatrix:
    opts = opts or FloquetOptions()
    n_c, d = opts.n_c, fh.dim
    nblocks = 2 * n_c + 1
    real = fh.is_real()
    dtype = float if real else complex
    mat = np.zeros((nblocks * d, nblocks * d), dtype=dtype)
    for k, blk in fh.harmonics.items():
        if abs(k) >= nblocks or not np.any(blk):
            continue
        b = blk.real if real else blk
        # block (n, m) with m - n = k
        for i in range(max(0, -k), min(nblocks, nblocks - k)):
            j = i + k
            mat[i * d:(i + 1) * d, j * d:(j + 1) * d] += b
    photon = np.repeat(np.arange(-n_c, n_c + 1) * fh.omega, d)
    mat[np.diag_indices_from(mat)] += photon
    return FloquetMatrix(mat, basis_labels(d, n_c), d, n_c, fh.omega)


def diagonalize(fm: FloquetMatrix) -> QuasiSpectrum:
    """Dense Hermitian eigensolve, eigenvalues ascending."""
    m = fm.matrix
    if not np.all(np.isfinite(m)):
        raise NumericFailure("Floquet matrix has non-finite entries", shape=m.shape, n_c=fm.n_c)
    try:
        evals, evecs = scipy.linalg.eigh(m, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericFailure(f"eigensolver failed: {exc}", shape=m.shape, n_c=fm.n_c,
                             dtype=str(m.dtype)) from exc
    return QuasiSpectrum(evals, evecs, fm.basis_labels, fm.dim, fm.n_c, fm.omega)


def _cluster_starts(evals: np.ndarray, tol: float) -> np.ndarray:
    gaps = np.diff(evals)
    return np.concatenate([[0], np.nonzero(gaps >= tol)[0] + 1])


def populations(spectrum: QuasiSpectrum, from_state: int, degeneracy_tol: float = 1e-10) -> np.ndarray:
    """Time-averaged occupation of every state, starting from ``|from_state, 0>``.

    Eigenvectors inside an exactly degenerate cluster (gap below
    ``degeneracy_tol * omega``) are combined through the cluster projector so
    the result does not depend on the eigensolver's choice of basis there.
    """
    d = spectrum.dim
    v = spectrum.eigenvectors
    i0 = spectrum.index(from_state, 0)
    # amplitude <alpha', n| gamma> <gamma | alpha, 0>
    amp = v * v[i0].conj()
    starts = _cluster_starts(spectrum.eigenvalues, degeneracy_tol * spectrum.omega)
    if len(starts) < v.shape[1]:
        amp = np.add.reduceat(amp, starts, axis=1)
    weight = np.sum(np.abs(amp) ** 2, axis=1)
    return weight.reshape(-1, d).sum(axis=0)


def transition_probability(spectrum: QuasiSpectrum, from_state: int, to_state: int,
                           degeneracy_tol: float = 1e-10) -> float:
    """Time-averaged probability of ``from_state -> to_state`` (initial photon index 0)."""
    if not 0 <= to_state < spectrum.dim:
        raise IndexError(f"state index {to_state} out of range for dim={spectrum.dim}")
    return float(populations(spectrum, from_state, degeneracy_tol)[to_state])


def solve(fh: FourierHamiltonian, opts: FloquetOptions | None = None) -> QuasiSpectrum:
    return diagonalize(build_floquet_matrix(fh, opts))


def rho_3l(spec: DriveSpec3L, n_c: int | None = None, from_state: int = 0) -> np.ndarray:
    """Floquet populations ``(rho00, rho11, rho22)`` of the three-level model."""
    spectrum = solve(build_hamiltonian_3l(spec), options_for(spec, n_c))
    return populations(spectrum, from_state)


def folded_quasienergies(spectrum: QuasiSpectrum, zones: int = 0) -> np.ndarray:
    """The ``dim * (2 zones + 1)`` quasienergies closest to zero, i.e. zones ``-zones..zones``."""
    lo = -(zones + 0.5) * spectrum.omega
    hi = (zones + 0.5) * spectrum.omega
    e = spectrum.eigenvalues
    return e[(e >= lo) & (e < hi)]


def brillouin_mismatch(spectrum: QuasiSpectrum, zones: Iterable[int]) -> float:
    """Largest deviation between zone ``k`` and zone ``k+1`` shifted down by ``w``."""
    worst = 0.0
    for k in zones:
        a = spectrum.zone(k)
        b = spectrum.zone(k + 1) - spectrum.omega
        if len(a) != len(b):
            return math.inf
        if len(a):
            worst = max(worst, float(np.max(np.abs(np.sort(a) - np.sort(b)))))
    return worst


def _sweep_point(args):
    spec, n_c = args
    try:
        spectrum = solve(build_hamiltonian_3l(spec), options_for(spec, n_c))
    except NumericFailure as exc:
        raise NumericFailure(str(exc), delta=spec.delta, omega_c=spec.omega_c,
                             omega_p=spec.omega_p) from exc
    return spectrum.eigenvalues


def quasienergy_sweep(specs: Sequence[DriveSpec3L], n_c: int | None = None,
                      jobs: int = 1) -> list[tuple[DriveSpec3L, np.ndarray]]:
    """Diagonalize each spec; output order always matches input order."""
    work = [(s, n_c) for s in specs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            evals = list(pool.map(_sweep_point, work))
    else:
        evals = [_sweep_point(w) for w in work]
    return list(zip(specs, evals))
