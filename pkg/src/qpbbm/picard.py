"""Picard iteration for the truncated Duhamel system on a uniform time grid.

Each iterate is

    c_k(t, n) = e^{lam(n) t} c(n) + (lam(n)/p) int_0^t e^{lam(n)(t - tau)} (c_{k-1}^{*p})(tau, n) dtau

with the time integral replaced by a composite rule on the grid nodes. The
kernel is handled by re-weighting: the integrand e^{-lam tau} f(tau) is
integrated cumulatively once per n, then multiplied by e^{lam t_m}.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import bounds
from .errors import ConfigurationError, ConvergenceError, EnvelopeViolationError
from .lattice import Truncation, default_omega, frequency_vector, multipliers
from .spectral import ENVELOPE_TOL, CoeffField, DecayKind, DecayProfile, envelope_ratio, power_values

logger = logging.getLogger(__name__)

QUAD_RULES = ("trapezoid", "simpson")


class TimeGridField:
    """Coefficient fields sampled at uniform times t_0 = 0 < ... < t_M = T."""

    __slots__ = ("times", "trunc", "values")

    def __init__(self, times, trunc: Truncation, values):
        times = np.array(times, dtype=float)
        values = np.array(values, dtype=complex)
        if values.shape != (times.size, len(trunc)):
            raise ValueError(f"values must have shape {(times.size, len(trunc))}, got {values.shape}")
        times.flags.writeable = False
        values.flags.writeable = False
        self.times, self.trunc, self.values = times, trunc, values

    @property
    def steps(self) -> int:
        return self.times.size - 1

    def frame(self, m: int) -> CoeffField:
        return CoeffField(self.trunc, self.values[m])

    @property
    def frames(self) -> list[CoeffField]:
        return [self.frame(m) for m in range(self.times.size)]

    def at(self, n) -> np.ndarray:
        """Time series of one lattice mode."""
        return self.values[:, self.trunc.position[tuple(int(c) for c in n)]]


@dataclass(frozen=True)
class SolverConfig:
    p: int = 2
    nu: int = 1
    radius: int = 3
    omega: Optional[Sequence[float]] = None
    T: Optional[float] = None
    steps: int = 512
    max_iters: int = 25
    quad: str = "trapezoid"
    tol: float = 1e-10
    profile: DecayProfile = field(default_factory=lambda: DecayProfile.exponential(1.0, 1.0))
    override_horizon: bool = False
    seed: int = 0
    min_iters: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise ConfigurationError(f"nonlinearity exponent must satisfy p >= 2, got p = {self.p}")
        if self.nu < 1:
            raise ConfigurationError(f"dimension must satisfy nu >= 1, got nu = {self.nu}")
        if self.radius < 0:
            raise ConfigurationError(f"truncation radius must be >= 0, got {self.radius}")
        omega = default_omega(self.nu) if self.omega is None else frequency_vector(self.omega)
        if omega.size != self.nu:
            raise ConfigurationError(f"omega has {omega.size} entries but nu = {self.nu}")
        object.__setattr__(self, "omega", tuple(float(w) for w in omega))
        if self.steps < 1:
            raise ConfigurationError(f"time steps must be >= 1, got {self.steps}")
        if self.quad not in QUAD_RULES:
            raise ConfigurationError(f"quadrature rule must be one of {QUAD_RULES}, got {self.quad!r}")
        if self.quad == "simpson" and self.steps % 2:
            raise ConfigurationError(f"simpson rule requires an even number of steps, got M = {self.steps}")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ConfigurationError(f"fixed-point tolerance must be positive, got {self.tol}")
        try:
            report = bounds.horizon(self.p, self.profile, self.nu)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        if self.T is None:
            object.__setattr__(self, "T", report.horizon)
        if not self.T > 0:
            raise ConfigurationError(f"time horizon must be positive, got T = {self.T}")
        if self.T > report.horizon * (1 + 1e-15) and not self.override_horizon:
            raise ConfigurationError(
                f"T = {self.T!r} exceeds the guaranteed horizon {report.horizon!r};"
                " pass override_horizon to explore beyond it"
            )

    @property
    def trunc(self) -> Truncation:
        return Truncation(self.nu, self.radius)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)

    @property
    def horizon(self) -> bounds.HorizonReport:
        return bounds.horizon(self.p, self.profile, self.nu)

    def as_dict(self) -> dict:
        return {
            "p": self.p, "nu": self.nu, "radius": self.radius, "omega": list(self.omega),
            "T": self.T, "steps": self.steps, "max_iters": self.max_iters, "quad": self.quad,
            "tol": self.tol,
            "profile": {"kind": self.profile.kind.value, "amp": self.profile.amp, "rate": self.profile.rate},
            "override_horizon": self.override_horizon, "seed": self.seed, "min_iters": self.min_iters,
        }


def cumulative_quadrature(f: np.ndarray, h: float, rule: str = "trapezoid") -> np.ndarray:
    """Integrals of f over [0, t_m] for every grid node m (axis 0 is time).

    Trapezoid is the composite rule. Simpson uses the composite 1/3 rule for
    even m and, for odd m >= 3, the 1/3 rule up to t_{m-3} followed by the 3/8
    rule on the last three intervals; m = 1 uses the quadratic through t_0..t_2.
    Both are exact at order 2 / 4 uniformly in m.
    """
    f = np.asarray(f)
    M = f.shape[0] - 1
    if rule == "trapezoid":
        out = np.zeros_like(f)
        out[1:] = cumulative_trapezoid(f, dx=h, axis=0)
        return out
    if rule != "simpson":
        raise ConfigurationError(f"unknown quadrature rule {rule!r}")
    if M < 2:
        raise ConfigurationError("simpson rule needs at least two steps")
    out = np.zeros_like(f)
    pair = h / 3.0 * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(pair, axis=0)
    out[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
    if M >= 3:
        odd = np.arange(3, M + 1, 2)
        tail = 3.0 * h / 8.0 * (f[odd - 3] + 3.0 * f[odd - 2] + 3.0 * f[odd - 1] + f[odd])
        out[odd] = out[odd - 3] + tail
    return out


def free_flow(init: CoeffField, times, omega) -> np.ndarray:
    """c_0(t, n) = e^{lam(n) t} c(n) on the grid."""
    lam = multipliers(init.trunc.points, omega)
    return np.exp(np.multiply.outer(times, lam)) * init.values


def _duhamel(prev: np.ndarray, init: CoeffField, cfg: SolverConfig) -> tuple[np.ndarray, float]:
    trunc = init.trunc
    times = cfg.times
    lam = multipliers(trunc.points, cfg.omega)
    conv, dropped = power_values(prev, trunc, cfg.p, trunc)
    kernel = np.exp(-np.multiply.outer(times, lam))
    Q = cumulative_quadrature(kernel * conv, cfg.T / cfg.steps, cfg.quad)
    new = np.exp(np.multiply.outer(times, lam)) * (init.values + (lam / cfg.p) * Q)
    # lam(0) = 0: the mean mode is the initial value, bit for bit
    zero = lam == 0
    new[:, zero] = init.values[zero]
    return new, dropped / times.size


def picard_step(prev: TimeGridField, init: CoeffField, cfg: SolverConfig) -> TimeGridField:
    """One application of the discretised Duhamel operator."""
    if prev.trunc != init.trunc or prev.times.size != cfg.steps + 1:
        raise ValueError("previous iterate does not live on the configured grid/truncation")
    new, _ = _duhamel(prev.values, init, cfg)
    return TimeGridField(prev.times, prev.trunc, new)


def _envelope_bound(cfg: SolverConfig) -> tuple[float, float, DecayKind]:
    # B e^{-rho|n|/2} or B (1+|n|)^{-r/2}
    prof = cfg.profile
    return cfg.horizon.constant_B, prof.rate / 2.0, prof.kind


def difference_bound(cfg: SolverConfig, k: int, times, norms) -> np.ndarray:
    """Theoretical bound on |c_k - c_{k-1}| over (t, n)."""
    prof = cfg.profile
    if prof.kind is DecayKind.EXPONENTIAL:
        return bounds.exp_difference_bound(cfg.p, prof.amp, prof.rate, cfg.nu, k, times, norms)
    if cfg.p != 2:
        return np.full((np.size(times), np.size(norms)), np.nan)
    return bounds.poly_difference_bound(prof.amp, prof.rate, cfg.nu, k, times, norms)


@dataclass
class IterateRecord:
    k: int
    sup_difference: float
    bound_sup: float
    bound_ratio: float
    envelope_ratio: float
    envelope_worst: tuple
    truncation_mass: float

    def as_dict(self) -> dict:
        return {
            "k": self.k, "sup_difference": self.sup_difference, "bound_sup": self.bound_sup,
            "bound_ratio": self.bound_ratio, "envelope_ratio": self.envelope_ratio,
            "envelope_worst": {"t": self.envelope_worst[0], "n": list(self.envelope_worst[1])},
            "truncation_mass": self.truncation_mass,
        }


@dataclass
class Diagnostics:
    config: dict
    horizon: float
    constant_B: float
    initial_envelope_ratio: float
    iterates: list[IterateRecord] = field(default_factory=list)
    converged: bool = False
    first_envelope_failure: Optional[dict] = None
    residual: Optional[float] = None

    @property
    def sup_differences(self) -> list[float]:
        return [r.sup_difference for r in self.iterates]

    @property
    def envelope_ratios(self) -> list[float]:
        return [r.envelope_ratio for r in self.iterates]

    @property
    def bound_ratios(self) -> list[float]:
        return [r.bound_ratio for r in self.iterates]

    def as_dict(self) -> dict:
        return {
            "config": self.config, "horizon": self.horizon, "constant_B": self.constant_B,
            "initial_envelope_ratio": self.initial_envelope_ratio,
            "iterates": [r.as_dict() for r in self.iterates], "converged": self.converged,
            "first_envelope_failure": self.first_envelope_failure, "residual": self.residual,
        }


@dataclass
class SolveResult:
    solution: TimeGridField
    diagnostics: Diagnostics
    iterates: Optional[list[TimeGridField]] = None


def solve(cfg: SolverConfig, init: CoeffField, keep_iterates: bool = False) -> SolveResult:
    """Iterate until sup |c_k - c_{k-1}| <= cfg.tol (and k >= cfg.min_iters).

    Every iterate, c_0 included, is checked against the decay envelope
    B |n|-profile; inside the horizon a violation raises, beyond it (override)
    the first failure is recorded.
    """
    trunc = cfg.trunc
    if init.trunc != trunc:
        raise ConfigurationError(f"initial field lives on {init.trunc}, solver expects {trunc}")
    times = cfg.times
    prof = cfg.profile
    init_ratio, _ = envelope_ratio(init.values, trunc, prof.amp ** (1.0 / (cfg.p - 1)), prof.rate, prof.kind)
    if init_ratio > 1.0 + ENVELOPE_TOL:
        warnings.warn(f"initial data exceeds its decay envelope by a factor {init_ratio:.6g}", RuntimeWarning, stacklevel=2)
    rep = cfg.horizon
    diag = Diagnostics(cfg.as_dict(), rep.horizon, rep.constant_B, init_ratio)
    B, rate, kind = _envelope_bound(cfg)

    def envelope_check(k: int, values: np.ndarray) -> tuple[float, tuple]:
        ratio, (m, i) = envelope_ratio(values, trunc, B, rate, kind)
        worst = (float(times[m]), trunc.indices[i])
        if ratio > 1.0 + ENVELOPE_TOL:
            msg = f"iterate {k} exceeds the decay envelope by {ratio:.6g} at t = {worst[0]:.6g}, n = {worst[1]}"
            if not cfg.override_horizon:
                raise EnvelopeViolationError(msg)
            if diag.first_envelope_failure is None:
                bad = np.abs(values) > (1.0 + ENVELOPE_TOL) * B * (
                    np.exp(-rate * trunc.norms) if kind is DecayKind.EXPONENTIAL else (1.0 + trunc.norms) ** (-rate)
                )
                m0 = int(np.argmax(bad.any(axis=1)))
                i0 = int(np.argmax(bad[m0]))
                diag.first_envelope_failure = {"k": k, "t": float(times[m0]), "n": list(trunc.indices[i0]), "ratio": ratio}
        return ratio, worst

    cur = free_flow(init, times, cfg.omega)
    envelope_check(0, cur)
    kept = [TimeGridField(times, trunc, cur)] if keep_iterates else None
    for k in range(1, cfg.max_iters + 1):
        new, dropped = _duhamel(cur, init, cfg)
        diff = np.abs(new - cur)
        bound = difference_bound(cfg, k, times, trunc.norms)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(bound > 0, diff / bound, np.where(diff > 0, np.inf, 0.0))
        env_ratio, worst = envelope_check(k, new)
        rec = IterateRecord(k, float(diff.max()), float(np.nanmax(bound)), float(np.nanmax(ratios)),
                            env_ratio, worst, float(dropped))
        diag.iterates.append(rec)
        logger.debug("iterate %d: sup diff %.3e (bound %.3e), envelope %.6f", k, rec.sup_difference, rec.bound_sup, env_ratio)
        cur = new
        if keep_iterates:
            kept.append(TimeGridField(times, trunc, cur))
        if rec.sup_difference <= cfg.tol and k >= cfg.min_iters:
            diag.converged = True
            break
    solution = TimeGridField(times, trunc, cur)
    if not diag.converged:
        raise ConvergenceError(f"no fixed point within tol {cfg.tol:g} after {cfg.max_iters} iterations",
                               diag.sup_differences)
    diag.residual = residual(solution, init, cfg)
    return SolveResult(solution, diag, kept)


def residual(solution: TimeGridField, init: CoeffField, cfg: SolverConfig) -> float:
    """sup |c - Duhamel(c)| over the grid and the lattice."""
    new, _ = _duhamel(solution.values, init, cfg)
    return float(np.max(np.abs(new - solution.values), initial=0.0))


def uniqueness_probe(cfg: SolverConfig, init: CoeffField, rk_steps: Optional[int] = None) -> float:
    """sup distance between the Picard solution and an RK4 solution of the ODE system."""
    from .oracle import rk4_integrate

    pic = solve(cfg, init).solution
    rk = rk4_integrate(init, cfg.T, rk_steps or cfg.steps, cfg.omega, cfg.p, cfg.trunc)
    return _grid_distance(pic, rk)


def _grid_distance(a: TimeGridField, b: TimeGridField) -> float:
    """sup distance over the times the two grids share (the coarser grid)."""
    ma, mb = a.steps, b.steps
    if ma % mb and mb % ma:
        raise ValueError(f"grids with {ma} and {mb} steps share no common refinement")
    if ma >= mb:
        a_vals, b_vals = a.values[:: ma // mb], b.values
    else:
        a_vals, b_vals = a.values, b.values[:: mb // ma]
    return float(np.max(np.abs(a_vals - b_vals), initial=0.0))


@dataclass(frozen=True)
class RefinementStudy:
    steps: list[int]
    distances: list[float]

    @property
    def ratios(self) -> list[float]:
        d = self.distances
        return [d[i] / d[i + 1] if d[i + 1] > 0 else math.inf for i in range(len(d) - 1)]

    def as_dict(self) -> dict:
        return {"steps": self.steps, "distances": self.distances, "ratios": self.ratios}


def refinement_study(cfg: SolverConfig, init: CoeffField, levels: int = 2) -> RefinementStudy:
    """Picard-vs-RK4 distance with both grids doubled ``levels - 1`` times."""
    steps, dists = [], []
    for j in range(levels):
        c = replace(cfg, steps=cfg.steps * 2**j)
        steps.append(c.steps)
        dists.append(uniqueness_probe(c, init))
    return RefinementStudy(steps, dists)
