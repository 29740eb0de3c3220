"""Analytic constants: zeta partial sums, lattice sums, decay constants, horizons.

Everything here is a pure function of its arguments. Zeta values are computed
from partial sums with a two-sided tail bracket rather than a special-function
library, so the accuracy claim of each value is checkable.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, DomainError
from .lattice import shell_size
from .spectral import DecayKind, DecayProfile

ZETA_TOL = 1e-12
ZETA_MAX_TERMS = 20_000_000


def zeta_bracket(s: float, tol: float = ZETA_TOL) -> tuple[float, float]:
    """Two-sided enclosure of zeta(s) for s > 1.

    For the convex decreasing f(x) = x^-s the tail sum over n > M lies between
    int_M^inf f - f(M)/2 (trapezoid over-estimates) and int_{M+1/2}^inf f
    (midpoint under-estimates). M is grown until the bracket is narrower than
    ``tol``.
    """
    s = float(s)
    if not s > 1:
        raise DomainError(f"zeta(s) requires s > 1, got s = {s}")
    M = 16
    while True:
        # width ~ s M^(-s-1) / 8
        if s * M ** (-s - 1) / 8 < tol or M >= ZETA_MAX_TERMS:
            break
        M *= 2
    n = np.arange(1, M + 1, dtype=float)
    head = math.fsum((n ** -s)[::-1])
    lo = M ** (1 - s) / (s - 1) - 0.5 * M ** (-s)
    hi = (M + 0.5) ** (1 - s) / (s - 1)
    return head + min(lo, hi), head + max(lo, hi)


def zeta_partial(s: float, tol: float = ZETA_TOL) -> float:
    """zeta(s) from partial sums plus the midpoint of the tail bracket."""
    lo, hi = zeta_bracket(s, tol)
    return 0.5 * (lo + hi)


def zeta_upper(s: float) -> float:
    """1 + 1/(s-1), the integral-test upper bound for zeta(s)."""
    if not s > 1:
        raise DomainError(f"zeta bound requires s > 1, got s = {s}")
    return 1.0 + 1.0 / (s - 1.0)


def b_frak(s: float, nu: int) -> float:
    """1 + sum_{j=1}^{nu} C(nu, j) 2^j j^-s zeta(s/j)^j."""
    for j in range(1, nu + 1):
        if not s / j > 1:
            raise DomainError(
                f"b(s; nu) needs zeta(s/j) with s/j > 1; fails at j = {j} (s = {s}, nu = {nu})"
            )
    total = 1.0
    for j in range(1, nu + 1):
        total += math.comb(nu, j) * 2.0**j * j ** (-s) * zeta_partial(s / j) ** j
    return total


def H_partial(s: float, nu: int, N: int) -> float:
    """sum_{|n| <= N} (1 + |n|)^-s over the l1 ball of Z^nu.

    Exact shell counts are used, so no lattice points are materialised.
    """
    terms = [shell_size(nu, m) * (1.0 + m) ** (-s) for m in range(N + 1)]
    return math.fsum(terms)


def H_bound(s: float, nu: int) -> float:
    """Closed upper bound for the full lattice sum: 1 + 2 zeta(s) if nu == 1, else b(s; nu)."""
    if nu == 1:
        return 1.0 + 2.0 * zeta_partial(s)
    return b_frak(s, nu)


def exp_sum_1d(rho: float) -> float:
    """sum_{n in Z} exp(-rho |n|) = (e^rho + 1)/(e^rho - 1), for 0 < rho <= 1."""
    if not (0 < rho <= 1):
        raise DomainError(f"exp_sum_1d requires 0 < rho <= 1, got rho = {rho}")
    em1 = math.expm1(rho)
    value = (em1 + 2.0) / em1
    assert value <= 3.0 / rho * (1 + 1e-15), (rho, value)
    return value


@dataclass(frozen=True)
class HorizonReport:
    p: int
    profile: DecayProfile
    nu: int
    horizon: float
    constant_B: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["profile"] = {"kind": self.profile.kind.value, "amp": self.profile.amp, "rate": self.profile.rate}
        return d


def _exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in xs)


def exp_horizon_bbm(amp, rho, nu: int):
    """rho^nu / (2 A 6^nu): the p = 2 horizon in its own closed form."""
    val = Fraction(rho) ** nu / (2 * Fraction(amp) * 6**nu)
    return val if _exact(amp, rho) else float(val)


def exp_horizon(p: int, amp, rho, nu: int):
    """(1 - 1/p)^(p-1) rho^((p-1) nu) / (A 6^((p-1) nu)).

    Exact when ``amp`` and ``rho`` are ints or Fractions; float inputs are
    evaluated exactly and rounded once.
    """
    val = (1 - Fraction(1, p)) ** (p - 1) * Fraction(rho) ** ((p - 1) * nu) / (Fraction(amp) * 6 ** ((p - 1) * nu))
    return val if _exact(amp, rho) else float(val)


def exp_constant(p: int, amp, rho, nu: int):
    """Decay amplitude p/(p-1) A (6/rho)^nu of every Picard iterate."""
    val = Fraction(p, p - 1) * Fraction(amp) * (6 / Fraction(rho)) ** nu
    return val if _exact(amp, rho) else float(val)


def poly_horizon(p: int, amp: float, r: float, nu: int) -> float:
    """(1 - 1/p)^(p-1) / (A b(r/2; nu)); equals 1/(2 A b(r/2; nu)) for p = 2."""
    return (1.0 - 1.0 / p) ** (p - 1) / (amp * b_frak(r / 2.0, nu))


def poly_constant(p: int, amp: float, r: float, nu: int) -> float:
    """p/(p-1) A b(r/2; nu); the p = 2 value is 2 A b(r/2; nu)."""
    return p / (p - 1) * amp * b_frak(r / 2.0, nu)


def horizon(p: int, profile: DecayProfile, nu: int) -> HorizonReport:
    """Guaranteed existence time and decay amplitude for the given data class."""
    if p < 2:
        raise ConfigurationError(f"nonlinearity exponent must satisfy p >= 2, got {p}")
    profile.validate_for(nu)
    if profile.kind is DecayKind.EXPONENTIAL:
        if p == 2:
            T = exp_horizon_bbm(profile.amp, profile.rate, nu)
        else:
            T = exp_horizon(p, profile.amp, profile.rate, nu)
        B = exp_constant(p, profile.amp, profile.rate, nu)
    else:
        T = poly_horizon(p, profile.amp, profile.rate, nu)
        B = poly_constant(p, profile.amp, profile.rate, nu)
    return HorizonReport(p, profile, nu, float(T), float(B))


def max_amplitude(p: int, kind, rate: float, nu: int, target_T: float) -> float:
    """Largest decay amplitude whose horizon still reaches ``target_T``."""
    if not target_T > 0:
        raise ConfigurationError(f"target time must be positive, got {target_T}")
    factor = (1.0 - 1.0 / p) ** (p - 1)
    if DecayKind(kind) is DecayKind.EXPONENTIAL:
        return factor * rate ** ((p - 1) * nu) / (6.0 ** ((p - 1) * nu) * target_T)
    DecayProfile(DecayKind.POLYNOMIAL, 1.0, rate).validate_for(nu)
    return factor / (b_frak(rate / 2.0, nu) * target_T)


def exp_difference_bound(p: int, amp: float, rho: float, nu: int, k: int, t, norms):
    """Factorial bound on |c_k(t,n) - c_{k-1}(t,n)| for exponential data.

    (B (12/rho)^nu / p) (B^(p-1) (12/rho)^((p-1) nu) t / 2)^k / k! exp(-rho |n| / 4)
    with B the exponential decay constant; for p = 2 this is the BBM estimate.
    """
    B = float(exp_constant(p, amp, rho, nu))
    g = (12.0 / rho) ** nu
    t = np.asarray(t, dtype=float)
    rate = 0.5 * B ** (p - 1) * g ** (p - 1) * t
    pref = B * g / p
    return np.multiply.outer(pref * rate**k / math.factorial(k), np.exp(-rho * np.asarray(norms) / 4.0))


def poly_difference_bound(amp: float, r: float, nu: int, k: int, t, norms):
    """(B b / 2) (B b t / 2)^k / k! (1 + |n|)^(-r/4), B = 2 A b(r/2; nu), b = b(r/4; nu); p = 2."""
    B = poly_constant(2, amp, r, nu)
    b = b_frak(r / 4.0, nu)
    t = np.asarray(t, dtype=float)
    pref = B * b / 2.0
    return np.multiply.outer(pref * (0.5 * B * b * t) ** k / math.factorial(k),
                             (1.0 + np.asarray(norms, dtype=float)) ** (-r / 4.0))


@dataclass(frozen=True)
class ProbeReport:
    samples: int
    seed: int
    mean_value_max_violation: float
    bernoulli_max_violation: float

    @property
    def passed(self) -> bool:
        return self.mean_value_max_violation <= 1e-12 and self.bernoulli_max_violation <= 1e-12

    def as_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def inequality_probes(samples: int, seed: int, max_terms: int = 12) -> ProbeReport:
    """Randomised checks of AM-GM and the generalised Bernoulli inequality.

    AM-GM draws positive a_j; Bernoulli draws x_j > -1 all of one sign,
    which is the range where prod(1 + x_j) >= 1 + sum x_j holds. Violations
    are reported relative to the larger side; <= 0 means the inequality held
    on every draw.
    """
    rng = np.random.default_rng(seed)
    worst_mie = -np.inf
    worst_gbi = -np.inf
    sizes = rng.integers(1, max_terms + 1, size=samples)
    for m in range(1, max_terms + 1):
        count = int(np.sum(sizes == m))
        if not count:
            continue
        a = np.exp(rng.normal(0.0, 2.0, size=(count, m)))
        prod = np.prod(a, axis=1)
        amgm = np.mean(a, axis=1) ** m
        worst_mie = max(worst_mie, float(np.max((prod - amgm) / amgm)))

        # same-sign draws: with mixed signs the product inequality is false
        # (x = (-0.9, 3) gives 0.4 < 3.1)
        mag = rng.uniform(0.0, 1.0, size=(count, m))
        negative = rng.random(count) < 0.5
        x = np.where(negative[:, None], -mag, 3.0 * mag)
        lhs = np.prod(1.0 + x, axis=1)
        rhs = 1.0 + np.sum(x, axis=1)
        scale = np.maximum.reduce([np.abs(lhs), np.abs(rhs), np.ones_like(lhs)])
        worst_gbi = max(worst_gbi, float(np.max((rhs - lhs) / scale)))
    return ProbeReport(samples, seed, worst_mie, worst_gbi)
