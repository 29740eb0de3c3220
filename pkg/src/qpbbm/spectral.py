"""Fourier-coefficient fields on a truncated lattice.

A :class:`CoeffField` stores one complex amplitude per point of an l1 ball,
aligned with the ball's lexicographic enumeration. Points outside the ball are
implicitly zero, so the field is finitely supported.
"""
from __future__ import annotations

import enum
import functools
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy import integrate, sparse, special

from .errors import ConfigurationError
from .lattice import MultiIndex, Truncation, l1, shell_size

logger = logging.getLogger(__name__)

ENVELOPE_TOL = 1e-9


class CoeffField:
    """Finitely supported map n -> complex amplitude, n in a truncation ball."""

    __slots__ = ("trunc", "values")

    def __init__(self, trunc: Truncation, values):
        arr = np.array(values, dtype=complex)
        if arr.shape != (len(trunc),):
            raise ValueError(f"expected {len(trunc)} values for {trunc}, got shape {arr.shape}")
        arr.flags.writeable = False
        self.trunc = trunc
        self.values = arr

    @classmethod
    def zeros(cls, trunc: Truncation) -> "CoeffField":
        return cls(trunc, np.zeros(len(trunc), dtype=complex))

    @classmethod
    def delta(cls, trunc: Truncation, n: MultiIndex | None = None, value: complex = 1.0) -> "CoeffField":
        vals = np.zeros(len(trunc), dtype=complex)
        vals[trunc.position[tuple(n) if n is not None else (0,) * trunc.nu]] = value
        return cls(trunc, vals)

    @classmethod
    def from_mapping(cls, trunc: Truncation, mapping: Mapping[MultiIndex, complex]) -> "CoeffField":
        vals = np.zeros(len(trunc), dtype=complex)
        for n, v in mapping.items():
            n = tuple(int(c) for c in n)
            if n not in trunc:
                raise ValueError(f"index {n} lies outside {trunc}")
            vals[trunc.position[n]] = v
        return cls(trunc, vals)

    @property
    def nu(self) -> int:
        return self.trunc.nu

    def __getitem__(self, n) -> complex:
        n = tuple(int(c) for c in n)
        if len(n) != self.nu:
            raise ValueError(f"dimension mismatch: index {n} for nu={self.nu}")
        i = self.trunc.position.get(n)
        return 0j if i is None else complex(self.values[i])

    def items(self) -> Iterator[tuple[MultiIndex, complex]]:
        """Nonzero entries in lexicographic order."""
        for i in np.flatnonzero(self.values):
            yield self.trunc.indices[i], complex(self.values[i])

    def support(self) -> list[MultiIndex]:
        return [n for n, _ in self.items()]

    def mass(self) -> float:
        return float(np.abs(self.values).sum())

    def reality_defect(self) -> float:
        """max_n |c(-n) - conj(c(n))|."""
        return float(np.max(np.abs(self.values[self.trunc.negation] - np.conj(self.values))))

    def is_real(self, tol: float = 1e-14) -> bool:
        return self.reality_defect() <= tol

    def resize(self, trunc: Truncation) -> tuple["CoeffField", float]:
        """Move to another ball of the same nu; returns the l1 mass dropped."""
        if trunc.nu != self.nu:
            raise ValueError(f"dimension mismatch: nu={self.nu} vs nu={trunc.nu}")
        vals, dropped = resize_values(self.values, self.trunc, trunc)
        return CoeffField(trunc, vals), dropped

    def restrict(self, trunc: Truncation) -> "CoeffField":
        field, dropped = self.resize(trunc)
        if dropped:
            logger.debug("restriction to %s dropped l1 mass %.3e", trunc, dropped)
        return field

    def __repr__(self) -> str:
        return f"CoeffField(nu={self.nu}, radius={self.trunc.radius}, support={len(self.support())})"


def _codes(points: np.ndarray, radius: int) -> np.ndarray:
    # base-(2R+1) encoding; numeric order equals lexicographic order
    base = 2 * radius + 1
    codes = np.zeros(points.shape[:-1], dtype=np.int64)
    for j in range(points.shape[-1]):
        codes = codes * base + (points[..., j] + radius)
    return codes


@functools.lru_cache(maxsize=128)
def _embedding(nu: int, small: int, big: int) -> np.ndarray:
    """Positions of the radius-``small`` ball inside the radius-``big`` ball."""
    B = Truncation(nu, big)
    return np.searchsorted(_codes(B.points, big), _codes(Truncation(nu, small).points, big))


def resize_values(values: np.ndarray, src: Truncation, dst: Truncation) -> tuple[np.ndarray, float]:
    """Re-layout values (last axis on ``src``) onto ``dst``; returns (values, dropped l1 mass)."""
    values = np.asarray(values)
    if dst.radius >= src.radius:
        out = np.zeros(values.shape[:-1] + (len(dst),), dtype=complex)
        out[..., _embedding(src.nu, src.radius, dst.radius)] = values
        return out, 0.0
    idx = _embedding(src.nu, dst.radius, src.radius)
    out = values[..., idx].astype(complex)
    dropped = float(np.abs(values).sum() - np.abs(out).sum())
    return out, max(dropped, 0.0)


@functools.lru_cache(maxsize=128)
def _pair_operator(nu: int, ra: int, rb: int) -> sparse.csc_matrix:
    """0/1 matrix S with (f (x) g) @ S = f * g on the radius ra+rb ball."""
    A, B = Truncation(nu, ra), Truncation(nu, rb)
    R = ra + rb
    sums = A.points[:, None, :] + B.points[None, :, :]
    out = np.searchsorted(_codes(Truncation(nu, R).points, R), _codes(sums, R)).ravel()
    rows = np.arange(len(A) * len(B))
    S = sparse.csr_matrix(
        (np.ones(rows.size), (rows, out)), shape=(rows.size, len(Truncation(nu, R)))
    )
    return S.T.tocsr()


def convolve_values(fa: np.ndarray, ta: Truncation, fb: np.ndarray, tb: Truncation) -> tuple[np.ndarray, Truncation]:
    """Exact discrete convolution of two (batched) value arrays on l1 balls.

    The result lives on the ball of radius ``ta.radius + tb.radius``, which is
    exactly the Minkowski sum of the two supports' balls.
    """
    if ta.nu != tb.nu:
        raise ValueError(f"dimension mismatch: nu={ta.nu} vs nu={tb.nu}")
    fa, fb = np.asarray(fa), np.asarray(fb)
    batch = np.broadcast_shapes(fa.shape[:-1], fb.shape[:-1])
    prod = (fa[..., :, None] * fb[..., None, :]).reshape(-1, len(ta) * len(tb))
    ST = _pair_operator(ta.nu, ta.radius, tb.radius)
    out = (ST @ prod.T).T
    tout = Truncation(ta.nu, ta.radius + tb.radius)
    return np.asarray(out).reshape(batch + (len(tout),)), tout


def power_values(values: np.ndarray, trunc: Truncation, p: int, out_trunc: Truncation) -> tuple[np.ndarray, float]:
    """p-fold self-convolution of batched values, restricted to ``out_trunc``.

    Returns the restricted values and the l1 mass (summed over the batch) that
    fell outside ``out_trunc``.
    """
    cur, tcur = values, trunc
    for _ in range(p - 1):
        cur, tcur = convolve_values(cur, tcur, values, trunc)
    return resize_values(cur, tcur, out_trunc)


def convolve_full(fields: Sequence[CoeffField]) -> CoeffField:
    """Untruncated convolution f_1 * ... * f_p by iterated pairwise products."""
    if len(fields) < 1:
        raise ValueError("need at least one field")
    cur, tcur = fields[0].values, fields[0].trunc
    for f in fields[1:]:
        cur, tcur = convolve_values(cur, tcur, f.values, f.trunc)
    return CoeffField(tcur, cur)


def convolve_p(fields: Sequence[CoeffField], out_trunc: Truncation) -> CoeffField:
    """n -> sum over q_1+...+q_p = n of prod_j f_j(q_j), restricted to ``out_trunc``."""
    nus = {f.nu for f in fields} | {out_trunc.nu}
    if len(nus) != 1:
        raise ValueError(f"dimension mismatch among fields: nu values {sorted(nus)}")
    full = convolve_full(fields)
    out, dropped = full.resize(out_trunc)
    if dropped:
        logger.debug("convolution truncated to %s: dropped l1 mass %.3e", out_trunc, dropped)
    return out


def convolve_naive(fields: Sequence[CoeffField], out_trunc: Truncation) -> CoeffField:
    """Nested-loop reference for :func:`convolve_p` (testing only)."""
    nus = {f.nu for f in fields} | {out_trunc.nu}
    if len(nus) != 1:
        raise ValueError(f"dimension mismatch among fields: nu values {sorted(nus)}")
    supports = [list(f.items()) for f in fields]
    acc: dict[MultiIndex, complex] = {}
    for combo in itertools.product(*supports):
        n = tuple(sum(q[j] for q, _ in combo) for j in range(out_trunc.nu))
        if l1(n) > out_trunc.radius:
            continue
        prod = 1.0 + 0j
        for _, v in combo:
            prod *= v
        acc[n] = acc.get(n, 0j) + prod
    return CoeffField.from_mapping(out_trunc, acc)


class DecayKind(str, enum.Enum):
    EXPONENTIAL = "exp"
    POLYNOMIAL = "poly"


@dataclass(frozen=True)
class DecayProfile:
    """Decay class of initial data.

    Exponential: |c(n)| <= amp^(1/(p-1)) exp(-rate |n|), 0 < rate <= 1.
    Polynomial:  |c(n)| <= amp^(1/(p-1)) (1 + |n|)^(-rate), rate > 4(nu + 2).
    """

    kind: DecayKind
    amp: float
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "kind", DecayKind(self.kind))
        if not (self.amp > 0 and math.isfinite(self.amp)):
            raise ConfigurationError(f"decay amplitude must be positive and finite, got {self.amp}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ConfigurationError(f"decay rate must be positive and finite, got {self.rate}")
        if self.kind is DecayKind.EXPONENTIAL and self.rate > 1:
            raise ConfigurationError(
                f"exponential decay requires 0 < rho <= 1, got rho = {self.rate}"
            )

    @classmethod
    def exponential(cls, amp: float, rate: float) -> "DecayProfile":
        return cls(DecayKind.EXPONENTIAL, amp, rate)

    @classmethod
    def polynomial(cls, amp: float, rate: float) -> "DecayProfile":
        return cls(DecayKind.POLYNOMIAL, amp, rate)

    def validate_for(self, nu: int) -> None:
        """Check the dimension-dependent hypothesis (polynomial data only)."""
        if self.kind is DecayKind.POLYNOMIAL and not (1 <= nu < self.rate / 4 - 2):
            raise ConfigurationError(
                f"polynomial decay requires 1 <= nu < r/4 - 2; got nu = {nu}, "
                f"r/4 - 2 = {self.rate / 4 - 2:g}"
            )

    def envelope(self, norms, p: int) -> np.ndarray:
        return envelope(self.kind, self.amp ** (1.0 / (p - 1)), self.rate, norms)


def envelope(kind, amp: float, rate: float, norms) -> np.ndarray:
    norms = np.asarray(norms, dtype=float)
    if DecayKind(kind) is DecayKind.EXPONENTIAL:
        return amp * np.exp(-rate * norms)
    return amp * (1.0 + norms) ** (-rate)


def make_initial(profile: DecayProfile, p: int, trunc: Truncation, phase_seed: int = 0) -> CoeffField:
    """Initial data saturating the decay envelope, with conjugate-symmetric phases.

    c(n) = envelope(n) exp(i theta_n) where theta_{-n} = -theta_n and
    theta_0 = 0, so u(0, x) is real. Phases come from ``numpy`` 's default
    generator seeded with ``phase_seed`` and are drawn for the lexicographically
    positive half of the ball in enumeration order.
    """
    if p < 2:
        raise ConfigurationError(f"nonlinearity exponent must satisfy p >= 2, got {p}")
    profile.validate_for(trunc.nu)
    env = profile.envelope(trunc.norms, p)
    o = trunc.origin
    rng = np.random.default_rng(phase_seed)
    theta = np.zeros(len(trunc))
    theta[o + 1:] = rng.uniform(-np.pi, np.pi, size=len(trunc) - o - 1)
    theta[:o] = -theta[trunc.negation[:o]]
    return CoeffField(trunc, env * np.exp(1j * theta))


@dataclass(frozen=True)
class EnvelopeReport:
    ratio: float
    worst_index: MultiIndex | None
    passed: bool
    tol: float

    def as_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "worst_index": list(self.worst_index) if self.worst_index is not None else None,
            "passed": self.passed,
            "tol": self.tol,
        }


def envelope_ratio(values: np.ndarray, trunc: Truncation, bound_amp: float, bound_rate: float, kind) -> tuple[float, tuple]:
    """max |values| / envelope over all leading axes; returns (ratio, argmax multi-position)."""
    env = envelope(kind, bound_amp, bound_rate, trunc.norms)
    r = np.abs(np.asarray(values)) / env
    pos = np.unravel_index(int(np.argmax(r)), r.shape)
    return float(r[pos]), pos


def check_envelope(field: CoeffField, bound_amp: float, bound_rate: float, kind, tol: float = ENVELOPE_TOL) -> EnvelopeReport:
    ratio, (i,) = envelope_ratio(field.values, field.trunc, bound_amp, bound_rate, kind)
    worst = field.trunc.indices[i] if ratio > 0 else None
    return EnvelopeReport(ratio, worst, ratio <= 1.0 + tol, tol)


def evaluate_u(field: CoeffField, omega: Sequence[float], x):
    """u(x) = sum_n c(n) exp(i <n> x); scalar or array ``x``."""
    w = np.asarray(omega, dtype=float)
    if w.size != field.nu:
        raise ValueError(f"dimension mismatch: omega has {w.size} entries, field has nu={field.nu}")
    s = field.trunc.points.astype(float) @ w
    xs = np.asarray(x, dtype=float)
    u = np.exp(1j * np.multiply.outer(xs, s)) @ field.values
    return complex(u) if xs.ndim == 0 else u


def _exp_tail(nu: int, rate: float, N: int) -> float:
    q = math.exp(-rate)
    acc, m = 0.0, N + 1
    term = shell_size(nu, m) * q**m
    while True:
        acc += term
        nxt = shell_size(nu, m + 1) * q ** (m + 1)
        ratio = nxt / term if term > 0 else 0.0
        if ratio < 1 and term * ratio / (1 - ratio) <= 1e-17 * acc:
            return acc
        term, m = nxt, m + 1


def _shell_poly(nu: int, x):
    # shell_size(nu, m) as a polynomial in real m >= 1
    x = np.asarray(x, dtype=float)
    return sum(2**k * math.comb(nu, k) * special.binom(x - 1, k - 1) for k in range(1, nu + 1))


def _poly_tail(nu: int, rate: float, N: int, rel_tol: float = 1e-15) -> float:
    f = lambda x: float(_shell_poly(nu, x)) * (1.0 + x) ** (-rate)
    M = max(N + 1, 64)
    while True:
        m = np.arange(N + 1, M + 1)
        partial = float(np.sum(_shell_poly(nu, m) * (1.0 + m) ** (-rate)))
        # f decreases on [M, inf) once M exceeds (nu-1)/(rate-nu+1); M >= 64 is ample here
        upper = integrate.quad(f, M, np.inf, epsabs=0, epsrel=1e-12)[0]
        lower = integrate.quad(f, M + 1, np.inf, epsabs=0, epsrel=1e-12)[0]
        if upper - lower <= rel_tol * (partial + lower) or M > 10**6:
            return partial + 0.5 * (upper + lower)
        M *= 4


def tail_mass(profile: DecayProfile, p: int, nu: int, N: int) -> float:
    """Sum of the decay envelope over |n| > N (truncation-error budget)."""
    scale = profile.amp ** (1.0 / (p - 1))
    if profile.kind is DecayKind.EXPONENTIAL:
        return scale * _exp_tail(nu, profile.rate, N)
    if profile.rate <= nu:
        raise ConfigurationError(f"polynomial envelope is not summable for r = {profile.rate} <= nu = {nu}")
    return scale * _poly_tail(nu, profile.rate, N)


def radius_for_tail(profile: DecayProfile, p: int, nu: int, tol: float, max_radius: int = 1000) -> int:
    """Smallest N whose envelope tail mass is below ``tol``."""
    for N in range(max_radius + 1):
        if tail_mass(profile, p, nu, N) < tol:
            return N
    raise ValueError(f"tail mass stays above {tol} up to radius {max_radius}")
