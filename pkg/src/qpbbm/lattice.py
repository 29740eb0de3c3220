"""Frequency lattice Z^nu: multi-indices, the wave vector and the BBM multiplier.

All norms on the lattice are l1 norms, |n| = sum_j |n_j|. Lattice points are
always enumerated in lexicographic order so that field layouts (and anything
serialized from them) are reproducible.
"""
from __future__ import annotations

import functools
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]

RESONANCE_TOL = 1e-12


def l1(n: Sequence[int]) -> int:
    return sum(abs(int(c)) for c in n)


def ball_size(nu: int, radius: int) -> int:
    """Number of points of Z^nu with l1 norm <= radius (closed form)."""
    return sum(
        2**k * math.comb(nu, k) * math.comb(radius, k) for k in range(min(nu, radius) + 1)
    )


def shell_size(nu: int, m: int) -> int:
    """Number of points of Z^nu with l1 norm exactly m."""
    if m == 0:
        return 1
    return sum(2**k * math.comb(nu, k) * math.comb(m - 1, k - 1) for k in range(1, min(nu, m) + 1))


def frequency_vector(omega: Iterable[float]) -> np.ndarray:
    """Validate a wave vector and return it as a read-only float array.

    Rational independence cannot be checked numerically; see
    :func:`check_resonances` for the heuristic used instead.
    """
    w = np.array([float(v) for v in omega], dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("wave vector must have at least one entry (nu >= 1)")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"wave vector entries must be finite, got {w.tolist()}")
    if not np.any(w != 0.0):
        raise ValueError("wave vector must be nonzero")
    w.flags.writeable = False
    return w


def default_omega(nu: int) -> np.ndarray:
    """(1,) for nu=1, (1, sqrt 2) for nu=2; further entries use sqrt of primes."""
    roots = [1.0, math.sqrt(2.0), math.sqrt(3.0), math.sqrt(5.0), math.sqrt(7.0), math.sqrt(11.0)]
    if nu > len(roots):
        raise ValueError(f"no default wave vector for nu={nu}; pass omega explicitly")
    return frequency_vector(roots[:nu])


def inner(n: Sequence[int], omega: Sequence[float]) -> float:
    """<n> = <n, omega>."""
    if len(n) != len(omega):
        raise ValueError(f"dimension mismatch: index has {len(n)} entries, omega has {len(omega)}")
    return float(np.dot(np.asarray(n, dtype=float), np.asarray(omega, dtype=float)))


def multiplier(n: Sequence[int], omega: Sequence[float]) -> complex:
    """lambda(n) = -i<n> / (1 + <n>^2); purely imaginary with modulus <= 1/2."""
    s = inner(n, omega)
    return complex(0.0, -s / (1.0 + s * s))


def multipliers(points: np.ndarray, omega: Sequence[float]) -> np.ndarray:
    """Vectorised :func:`multiplier` over the rows of ``points``."""
    points = np.asarray(points)
    w = np.asarray(omega, dtype=float)
    if points.shape[-1] != w.size:
        raise ValueError(
            f"dimension mismatch: indices have {points.shape[-1]} entries, omega has {w.size}"
        )
    s = points.astype(float) @ w
    return 0.0 - 1j * (s / (1.0 + s * s))


@functools.lru_cache(maxsize=None)
def _ball_points(nu: int, radius: int) -> tuple[MultiIndex, ...]:
    def rec(dim: int, r: int):
        if dim == 1:
            return [(c,) for c in range(-r, r + 1)]
        out = []
        for c in range(-r, r + 1):
            out.extend((c,) + rest for rest in rec(dim - 1, r - abs(c)))
        return out

    return tuple(rec(nu, radius))


@dataclass(frozen=True)
class Truncation:
    """The l1 ball {n in Z^nu : |n| <= radius}."""

    nu: int
    radius: int

    def __post_init__(self):
        if self.nu < 1:
            raise ValueError(f"nu must be >= 1, got {self.nu}")
        if self.radius < 0:
            raise ValueError(f"truncation radius must be >= 0, got {self.radius}")

    @functools.cached_property
    def indices(self) -> tuple[MultiIndex, ...]:
        return _ball_points(self.nu, self.radius)

    @functools.cached_property
    def points(self) -> np.ndarray:
        pts = np.array(self.indices, dtype=np.int64).reshape(-1, self.nu)
        pts.flags.writeable = False
        return pts

    @functools.cached_property
    def position(self) -> dict[MultiIndex, int]:
        return {n: i for i, n in enumerate(self.indices)}

    @functools.cached_property
    def norms(self) -> np.ndarray:
        return np.abs(self.points).sum(axis=1)

    @functools.cached_property
    def negation(self) -> np.ndarray:
        """Position of -n for each position of n."""
        pos = self.position
        return np.array([pos[tuple(-c for c in n)] for n in self.indices], dtype=np.int64)

    @property
    def origin(self) -> int:
        return self.position[(0,) * self.nu]

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, n) -> bool:
        return len(n) == self.nu and l1(n) <= self.radius


def enumerate_lattice(trunc: Truncation) -> list[MultiIndex]:
    """All n with |n| <= N, each once, lexicographically ordered."""
    return list(trunc.indices)


def check_resonances(trunc: Truncation, omega: Sequence[float], tol: float = RESONANCE_TOL) -> list[MultiIndex]:
    """Return nonzero n in the ball with |<n>| <= tol, warning if there are any."""
    s = trunc.points.astype(float) @ np.asarray(omega, dtype=float)
    hits = [trunc.indices[i] for i in np.flatnonzero(np.abs(s) <= tol) if trunc.norms[i] > 0]
    if hits:
        warnings.warn(
            f"wave vector looks resonant on the truncation: <n> vanishes for n = {hits[0]}"
            f" ({len(hits)} point(s))",
            RuntimeWarning,
            stacklevel=2,
        )
    return hits
