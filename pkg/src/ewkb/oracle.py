"""Band-matrix diagonalization of H = -(hbar^2/2) d^2/dx^2 + 1 - cos(Nx) on the circle.

Basis functions are twisted plane waves e^{i(m + theta/2pi) x}, so that
psi(x + 2pi) = e^{i theta} psi(x).  cos(Nx) couples m to m +- N, which makes
the matrix Hermitian with bandwidth N.  Translation by 2pi/N multiplies
basis function m by e^{i(theta + 2 pi m)/N}; the Bloch label p of a state is
read off from that eigenvalue, p = m mod N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig_banded

from .records import ORACLE, SpectralRecord

CONVERGENCE_TOL = 1e-10
MAX_CUTOFF = 4096


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class BlochProblem:
    N: int
    hbar: float
    theta: float
    cutoff: int = 0
    amplitude: float = 1.0  # test hook: 0 gives the free particle

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def basis_size(self) -> int:
        return 2 * self.cutoff + 1


def momenta(problem: BlochProblem, cutoff: int) -> np.ndarray:
    m = np.arange(-cutoff, cutoff + 1)
    return m + problem.theta / (2 * np.pi)


def banded_hamiltonian(problem: BlochProblem, cutoff: int) -> np.ndarray:
    """Upper band storage (row N holds the diagonal) for eig_banded."""
    q = momenta(problem, cutoff)
    n = q.size
    N = problem.N
    ab = np.zeros((N + 1, n), dtype=float)
    ab[N, :] = 0.5 * problem.hbar**2 * q**2 + problem.amplitude
    ab[0, N:] = -0.5 * problem.amplitude
    return ab


def dense_hamiltonian(problem: BlochProblem, cutoff: int) -> np.ndarray:
    ab = banded_hamiltonian(problem, cutoff)
    N = problem.N
    n = ab.shape[1]
    H = np.diag(ab[N])
    for i in range(n - N):
        H[i, i + N] = H[i + N, i] = ab[0, i + N]
    return H


def _default_cutoff(problem: BlochProblem, num_levels: int) -> int:
    # levels reach momentum ~ sqrt(2E)/hbar; keep a generous margin
    e_top = 2.0 + problem.hbar * problem.N * (num_levels + 1)
    k = int(np.ceil(np.sqrt(2 * e_top) / problem.hbar))
    return max(2 * (num_levels + problem.N) + 8, 2 * k + 16, problem.cutoff)


def _solve(problem: BlochProblem, cutoff: int, num_levels: int, vectors: bool):
    ab = banded_hamiltonian(problem, cutoff)
    hi = min(num_levels, ab.shape[1]) - 1
    if vectors:
        w, v = eig_banded(ab, lower=False, select="i", select_range=(0, hi))
        return w, v
    w = eig_banded(ab, lower=False, eigvals_only=True, select="i", select_range=(0, hi))
    return w, None


def converged_levels(problem: BlochProblem, num_levels: int, vectors: bool = False):
    cutoff = _default_cutoff(problem, num_levels)
    w, v = _solve(problem, cutoff, num_levels, vectors)
    while True:
        cutoff2 = 2 * cutoff
        w2, v2 = _solve(problem, cutoff2, num_levels, vectors)
        err = float(np.max(np.abs(w2 - w) / np.maximum(1.0, np.abs(w2))))
        if err < CONVERGENCE_TOL:
            return w2, v2, cutoff2
        if cutoff2 >= MAX_CUTOFF:
            raise OracleError(f"levels not converged under doubling, residual {err:.3e}")
        cutoff, w, v = cutoff2, w2, v2


def band_spectrum(problem: BlochProblem, num_levels: int) -> list[SpectralRecord]:
    """Lowest levels with their Bloch labels."""
    return bloch_decompose(problem, num_levels)


def translation_phases(problem: BlochProblem, cutoff: int) -> np.ndarray:
    q = momenta(problem, cutoff)
    return np.exp(2j * np.pi * q / problem.N)


def _label(phase: complex, problem: BlochProblem):
    N = problem.N
    x = (np.angle(phase) * N - problem.theta) / (2 * np.pi)
    p = int(np.round(x)) % N
    target = np.exp(1j * (problem.theta + 2 * np.pi * p) / N)
    ambiguous = abs(phase - target) > 1e-6
    return p, ambiguous


def bloch_decompose(problem: BlochProblem, num_levels: int, degeneracy_tol: float = 1e-8):
    """Eigenvalues labelled by the translation eigenvalue e^{i(theta + 2 pi p)/N}.

    Inside a degenerate eigenspace the translation operator is diagonalized
    on that subspace before labelling.
    """
    w, v, cutoff = converged_levels(problem, num_levels, vectors=True)
    phases = translation_phases(problem, cutoff)
    labels = []
    flags = []
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) < degeneracy_tol * max(1.0, abs(w[i])):
            j += 1
        block = v[:, i:j]
        Ub = block.conj().T @ (phases[:, None] * block)
        evals = np.linalg.eigvals(Ub) if j - i > 1 else np.array([Ub[0, 0]])
        evals = sorted(evals, key=lambda z: _label(z, problem)[0])
        for z in evals:
            p, bad = _label(z, problem)
            labels.append(p)
            flags.append(bad)
        i = j
    counters: dict[int, int] = {}
    out = []
    for e, p, bad in zip(w, labels, flags):
        n = counters.get(p, 0)
        counters[p] = n + 1
        out.append(SpectralRecord(problem.N, problem.hbar, problem.theta, p, n,
                                  complex(e), ORACLE, bool(bad)))
    return out


def sector_levels(problem: BlochProblem, p: int, num_levels: int) -> np.ndarray:
    """Levels of a single Bloch sector from its own block (m = p mod N).

    The block is an ordinary Mathieu problem with twist (theta + 2 pi p)/N
    in the rescaled coordinate, so it is tridiagonal.
    """
    N = problem.N
    sub = BlochProblem(1, problem.hbar * N, (problem.theta + 2 * np.pi * p) / N,
                       amplitude=problem.amplitude)
    # H_N(x) with x = y/N equals H_1(y) at hbar' = N hbar
    w, _, _ = converged_levels(sub, num_levels)
    return w


def projector(problem: BlochProblem, p: int, cutoff: int) -> np.ndarray:
    """Pi_p = (1/N) sum_l (e^{-i(theta + 2 pi p)/N} U)^l as a diagonal in the basis."""
    N = problem.N
    ph = translation_phases(problem, cutoff)
    w = np.exp(-1j * (problem.theta + 2 * np.pi * p) / N)
    return sum((w * ph) ** l for l in range(N)) / N


def band_splitting(N: int, hbar: float, band: int = 0, p: int = 0) -> float:
    """E_n(theta=pi) - E_n(theta=0) for Bloch sector p of the N = 1 style band.

    For N > 1 the band edges at theta = 0 belong to sectors with different p,
    so the returned quantity is the gap between the top and bottom of the
    ground band at theta = 0 (the theta-edge gap).
    """
    if N == 1:
        lo = converged_levels(BlochProblem(1, hbar, 0.0), band + 1)[0][band]
        hi = converged_levels(BlochProblem(1, hbar, np.pi), band + 1)[0][band]
        return float(hi - lo)
    recs = bloch_decompose(BlochProblem(N, hbar, 0.0), N * (band + 1))
    es = sorted(r.energy.real for r in recs)[N * band:N * (band + 1)]
    return float(es[-1] - es[0])


def free_levels(problem: BlochProblem, num_levels: int) -> np.ndarray:
    q = momenta(problem, _default_cutoff(problem, num_levels))
    return np.sort(0.5 * problem.hbar**2 * q**2)[:num_levels]
