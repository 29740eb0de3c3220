"""Combinatorial trees behind the Picard expansion.

A tree of depth k is one of
  * ``0``  - the free term, c(n) exp(lambda(n) t);
  * ``1``  - depth 1 only: one Duhamel integral of a product of p free terms;
  * a p-tuple of depth k-1 trees - one Duhamel integral of the product of
    the children.

The set of depth-k trees has N_k elements with N_1 = 2, N_k = 1 + N_{k-1}^p.
Summing every tree's contribution gives the k-th Picard iterate exactly,
which makes :func:`tree_expansion` an integration-free reference for the
numerical solver.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import TreeTooLargeError
from .lattice import Truncation, multipliers
from .spectral import CoeffField

Shape = Union[int, tuple]

DEFAULT_BUDGET = 1_000_000
RATE_TOL = 1e-12
SERIES_SWITCH = 0.5


def node_count(k: int, p: int) -> int:
    if k < 1 or p < 2:
        raise ValueError(f"need k >= 1 and p >= 2, got k={k}, p={p}")
    n = 2
    for _ in range(k - 1):
        n = 1 + n**p
    return n


@dataclass(frozen=True)
class TreeNode:
    shape: Shape
    depth: int

    @property
    def children(self) -> tuple["TreeNode", ...]:
        if isinstance(self.shape, tuple):
            return tuple(TreeNode(c, self.depth - 1) for c in self.shape)
        return ()


@dataclass(frozen=True)
class TreeStats:
    """alpha (sigma for p=2), beta (ell) and the factorial-type denominator D."""

    sigma: Fraction
    ell: int
    D: int


def _check_budget(k: int, p: int, budget: int) -> int:
    count = node_count(k, p)
    if count > budget:
        raise TreeTooLargeError(k, p, count, budget)
    return count


def _shapes(k: int, p: int) -> list[Shape]:
    level: list[Shape] = [0, 1]
    for _ in range(k - 1):
        level = [0] + list(itertools.product(level, repeat=p))
    return level


def enumerate_tree(k: int, p: int, budget: int = DEFAULT_BUDGET) -> list[TreeNode]:
    """Every depth-k tree exactly once, in a fixed order."""
    _check_budget(k, p, budget)
    return [TreeNode(s, k) for s in _shapes(k, p)]


@functools.lru_cache(maxsize=None)
def _stats(shape: Shape, p: int) -> TreeStats:
    if shape == 0:
        return TreeStats(Fraction(1, p - 1), 0, 1)
    if shape == 1:
        return TreeStats(Fraction(p, p - 1), 1, 1)
    kids = [_stats(c, p) for c in shape]
    ell = 1 + sum(s.ell for s in kids)
    return TreeStats(sum((s.sigma for s in kids), Fraction(0)), ell, ell * math.prod(s.D for s in kids))


def stats(node: TreeNode | Shape, p: int) -> TreeStats:
    return _stats(node.shape if isinstance(node, TreeNode) else node, p)


@functools.lru_cache(maxsize=None)
def index_dim(shape: Shape, p: int) -> int:
    """Number of lattice indices a tree consumes, counted structurally."""
    if shape == 0:
        return 1
    if shape == 1:
        return p
    return sum(index_dim(c, p) for c in shape)


def optimal_flat(p: int) -> Fraction:
    """(p-1)^(p-1) / p^p: the largest parameter for which the tree sums stay bounded by p/(p-1)."""
    return Fraction((p - 1) ** (p - 1), p**p)


def diamond_sum(k: int, p: int, flat: float, budget: int = DEFAULT_BUDGET) -> float:
    """sum over depth-k trees of flat^ell / D, by full enumeration."""
    if flat < 0:
        raise ValueError(f"flat must be nonnegative, got {flat}")
    total = 0.0
    for node in enumerate_tree(k, p, budget):
        s = _stats(node.shape, p)
        total += flat**s.ell / s.D
    return total


def diamond_polynomial(k: int, p: int, max_degree: int | None = None) -> np.ndarray:
    """Coefficients w[l] = sum over depth-k trees with ell = l of 1/D.

    Uses w_1 = (1, 1) and w_k[l] = [l == 0] + (w_{k-1}^{*p})[l-1] / l, which
    follows from ell = 1 + sum ell_j and D = ell prod D_j. Lets the tree sums
    be evaluated at depths where enumeration is impossible. The degree grows
    like p^k; ``max_degree`` keeps only the (exact) low-order coefficients.
    """
    w = np.array([1.0, 1.0])
    for _ in range(k - 1):
        conv = w
        for _ in range(p - 1):
            conv = np.convolve(conv, w)
            if max_degree is not None:
                conv = conv[:max_degree]
        nxt = np.zeros(conv.size + 1)
        nxt[0] = 1.0
        nxt[1:] += conv / np.arange(1, conv.size + 1)
        w = nxt if max_degree is None else nxt[: max_degree + 1]
    return w


def diamond_value(k: int, p: int, flat: float, max_degree: int | None = None) -> float:
    """Tree sum via :func:`diamond_polynomial`; truncation gives a lower bound."""
    return float(np.polynomial.polynomial.polyval(flat, diamond_polynomial(k, p, max_degree)))


def induction_bound_sequence(flat: float, p: int, kmax: int) -> list[float]:
    """M_1 = 1 + flat, M_k = 1 + flat M_{k-1}^p: the bound carried by the induction.

    Bounded (by p/(p-1)) exactly when flat <= (p-1)^(p-1)/p^p; beyond that the
    sequence diverges.
    """
    seq = [1.0 + flat]
    for _ in range(kmax - 1):
        prev = seq[-1]
        seq.append(1.0 + flat * prev**p if math.isfinite(prev) and prev < 1e150 else math.inf)
    return seq


class ExpPoly:
    """Finite sum of coeff * t**power * exp(rate * t).

    Terms whose rates agree within ``RATE_TOL`` (and share a power) are merged.
    """

    __slots__ = ("powers", "rates", "coeffs")

    def __init__(self, powers, rates, coeffs, merge: bool = True):
        powers = np.asarray(powers, dtype=np.int64).ravel()
        rates = np.asarray(rates, dtype=complex).ravel()
        coeffs = np.asarray(coeffs, dtype=complex).ravel()
        if merge and powers.size > 1:
            powers, rates, coeffs = self._merge(powers, rates, coeffs)
        keep = coeffs != 0
        self.powers, self.rates, self.coeffs = powers[keep], rates[keep], coeffs[keep]

    @staticmethod
    def _merge(powers, rates, coeffs):
        keys = np.stack(
            [powers, np.round(rates.real / RATE_TOL).astype(np.int64),
             np.round(rates.imag / RATE_TOL).astype(np.int64)],
            axis=1,
        )
        uniq, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        summed = np.bincount(inv, coeffs.real, len(uniq)) + 1j * np.bincount(inv, coeffs.imag, len(uniq))
        return powers[first], rates[first], summed

    @classmethod
    def zero(cls) -> "ExpPoly":
        return cls([], [], [], merge=False)

    @classmethod
    def exp(cls, rate: complex, coeff: complex = 1.0) -> "ExpPoly":
        return cls([0], [rate], [coeff], merge=False)

    def __len__(self) -> int:
        return self.coeffs.size

    def __bool__(self) -> bool:
        return self.coeffs.size > 0

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        return ExpPoly(
            np.concatenate([self.powers, other.powers]),
            np.concatenate([self.rates, other.rates]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __mul__(self, other):
        if not isinstance(other, ExpPoly):
            return ExpPoly(self.powers, self.rates, self.coeffs * other, merge=False)
        return ExpPoly(
            np.add.outer(self.powers, other.powers),
            np.add.outer(self.rates, other.rates),
            np.multiply.outer(self.coeffs, other.coeffs),
        )

    __rmul__ = __mul__

    @staticmethod
    def sum(items: Sequence["ExpPoly"]) -> "ExpPoly":
        items = [e for e in items if e]
        if not items:
            return ExpPoly.zero()
        return ExpPoly(
            np.concatenate([e.powers for e in items]),
            np.concatenate([e.rates for e in items]),
            np.concatenate([e.coeffs for e in items]),
        )

    def duhamel(self, lam: complex, t_max: float = 1.0) -> "ExpPoly":
        """t -> int_0^t exp(lam (t - tau)) self(tau) dtau, in closed form.

        A term c tau^m e^{a tau} with b = a - lam integrates to
          * c e^{lam t} t^{m+1}/(m+1) when |b| <= RATE_TOL (resonance);
          * c e^{lam t} sum_q b^q t^{m+q+1} / (q! (m+q+1)) when |b| t_max <= 1/2,
            truncated once (|b| t_max)^q / q! drops below 1e-18;
          * c sum_j (-1)^j m!/(m-j)! t^{m-j} e^{a t} / b^{j+1} - c (-1)^m m! e^{lam t} / b^{m+1}
            otherwise.
        The series replaces the antiderivative where dividing by b^{m+1}
        would cancel catastrophically; it is accurate for 0 <= t <= t_max.
        """
        P, R, C = [], [], []
        b = self.rates - lam
        absb = np.abs(b)
        res = absb <= RATE_TOL
        near = ~res & (absb * t_max <= SERIES_SWITCH)
        far = ~res & ~near
        if np.any(res):
            P.append(self.powers[res] + 1)
            R.append(np.full(int(res.sum()), lam, dtype=complex))
            C.append(self.coeffs[res] / (self.powers[res] + 1))
        if np.any(near):
            x = float(absb[near].max()) * t_max
            m, c, bb = self.powers[near], self.coeffs[near], b[near]
            q, term = 0, 1.0
            bq = np.ones_like(bb)
            while True:
                P.append(m + q + 1)
                R.append(np.full(m.size, lam, dtype=complex))
                C.append(c * bq / (math.factorial(q) * (m + q + 1)))
                q += 1
                term *= x / q
                bq = bq * bb
                if term < 1e-18:
                    break
        for m in np.unique(self.powers[far]):
            sel = far & (self.powers == m)
            a, c, bb = self.rates[sel], self.coeffs[sel], b[sel]
            fall = 1.0
            for j in range(m + 1):
                P.append(np.full(a.size, m - j))
                R.append(a)
                C.append((-1) ** j * fall * c / bb ** (j + 1))
                fall *= m - j
            P.append(np.zeros(a.size, dtype=np.int64))
            R.append(np.full(a.size, lam, dtype=complex))
            C.append(-((-1) ** m) * math.factorial(m) * c / bb ** (m + 1))
        if not P:
            return ExpPoly.zero()
        return ExpPoly(np.concatenate(P), np.concatenate(R), np.concatenate(C))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tt = t[..., None]
        return np.sum(self.coeffs * tt**self.powers * np.exp(self.rates * tt), axis=-1)


def _compositions(trunc: Truncation, p: int) -> dict[int, list[tuple[int, ...]]]:
    """For each target position, the p-tuples of ball positions summing to it."""
    pos, pts = trunc.position, trunc.points
    out: dict[int, list[tuple[int, ...]]] = {i: [] for i in range(len(trunc))}
    for head in itertools.product(range(len(trunc)), repeat=p - 1):
        partial = pts[list(head)].sum(axis=0)
        for target in range(len(trunc)):
            last = pos.get(tuple(int(v) for v in pts[target] - partial))
            if last is not None:
                out[target].append(head + (last,))
    return out


def tree_expansion(
    k: int,
    init: CoeffField,
    omega: Sequence[float],
    p: int,
    trunc: Truncation | None = None,
    budget: int = DEFAULT_BUDGET,
    t_max: float = 1.0,
) -> list[ExpPoly]:
    """c_k(., n) for every n of ``trunc`` as closed-form functions of t.

    Each tree contributes the sum, over index tuples whose subtree sums stay
    inside ``trunc``, of (coefficient product) x (nested Duhamel integral) x
    (lambda/p factors). Requiring every subtree sum to lie in the ball makes
    the expansion match the truncated Picard iteration term for term.
    The result is accurate for 0 <= t <= ``t_max`` (see :meth:`ExpPoly.duhamel`).
    """
    trunc = trunc or init.trunc
    init = init.restrict(trunc)
    nodes = enumerate_tree(k, p, budget)
    lam = multipliers(trunc.points, omega)
    comps = _compositions(trunc, p)
    memo: dict[tuple, ExpPoly] = {}

    def term(shape: Shape, m: int) -> ExpPoly:
        key = (shape, m)
        if key in memo:
            return memo[key]
        if shape == 0:
            val = ExpPoly.exp(lam[m], init.values[m]) if init.values[m] != 0 else ExpPoly.zero()
        elif lam[m] == 0:
            val = ExpPoly.zero()
        else:
            kids = (0,) * p if shape == 1 else shape
            parts = []
            for combo in comps[m]:
                prod = term(kids[0], combo[0])
                for kid, j in zip(kids[1:], combo[1:]):
                    if not prod:
                        break
                    prod = prod * term(kid, j)
                if prod:
                    parts.append(prod)
            val = ExpPoly.sum(parts).duhamel(lam[m], t_max) * (lam[m] / p)
        memo[key] = val
        return val

    return [ExpPoly.sum([term(node.shape, m) for node in nodes]) for m in range(len(trunc))]


def tree_eval(k: int, n, t, init: CoeffField, omega: Sequence[float], p: int,
              trunc: Truncation | None = None, budget: int = DEFAULT_BUDGET):
    """c_k(t, n) from the tree expansion."""
    trunc = trunc or init.trunc
    n = tuple(int(c) for c in n)
    if n not in trunc:
        return 0j if np.ndim(t) == 0 else np.zeros(np.shape(t), dtype=complex)
    expansion = tree_expansion(k, init, omega, p, trunc, budget, t_max=max(1.0, float(np.max(t))))
    val = expansion[trunc.position[n]](t)
    return complex(val) if np.ndim(t) == 0 else val


def iter_identity_checks(k: int, p: int, budget: int = DEFAULT_BUDGET) -> Iterator[tuple[TreeNode, bool, bool]]:
    """(node, alpha == beta + 1/(p-1), index_dim == (p-1) alpha) for every tree."""
    for node in enumerate_tree(k, p, budget):
        s = stats(node, p)
        yield node, s.sigma == s.ell + Fraction(1, p - 1), index_dim(node.shape, p) == (p - 1) * s.sigma
