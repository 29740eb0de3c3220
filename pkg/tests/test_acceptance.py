"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL summary (printed at the end of the
pytest run by conftest.py). Reference values are computed here from
independent formulas or from mpmath, not read back from the solver's own
diagnostics. Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time
from dataclasses import replace
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from acceptance_log import record
from qpbbm import bounds, combinatorics
from qpbbm.lattice import Truncation
from qpbbm.oracle import rk4_integrate
from qpbbm.picard import SolverConfig, _grid_distance, solve, uniqueness_probe
from qpbbm.spectral import CoeffField, DecayProfile, convolve_naive, convolve_p, make_initial

mpmath.mp.dps = 30
ENV_TOL = 1e-9
ROUNDOFF = 1e-15


def mp_bfrak(s, nu):
    return float(1 + sum(math.comb(nu, j) * 2**j * mpmath.mpf(j) ** (-s) * mpmath.zeta(mpmath.mpf(s) / j) ** j
                         for j in range(1, nu + 1)))


def exp_B(p, amp, rho, nu):
    return p / (p - 1) * amp * (6 / rho) ** nu


def exp_diff_bound(p, amp, rho, nu, k, t, norms):
    B = exp_B(p, amp, rho, nu)
    g = (12 / rho) ** nu
    return (B * g / p) * np.multiply.outer((0.5 * B ** (p - 1) * g ** (p - 1) * t) ** k / math.factorial(k),
                                           np.exp(-rho * norms / 4))


class Run:
    def __init__(self, cfg, seed=0):
        self.cfg = cfg
        self.init = make_initial(cfg.profile, cfg.p, cfg.trunc, seed)
        t0 = time.perf_counter()
        self.result = solve(cfg, self.init, keep_iterates=True)
        self.seconds = time.perf_counter() - t0
        self.iterates = [it.values for it in self.result.iterates]


@pytest.fixture(scope="module")
def run2():
    # p=2, nu=1, N=3, A=rho=1, T=1/12, M=512; iterated to k=10 for the bound checks
    return Run(SolverConfig(p=2, nu=1, radius=3, T=1 / 12, steps=512, min_iters=10))


@pytest.fixture(scope="module")
def run3():
    return Run(SolverConfig(p=3, nu=1, radius=2, steps=512, min_iters=10))


@pytest.fixture(scope="module")
def run_poly():
    prof = DecayProfile.polynomial(1.0, 16.0)
    T = 1 / (2 * mp_bfrak(8, 1))
    return Run(SolverConfig(p=2, nu=1, radius=3, T=T, steps=512, min_iters=10, profile=prof))


def test_criterion_1_horizon_constants():
    exact = (bounds.exp_horizon_bbm(1, 1, 1) == Fraction(1, 12)
             and bounds.exp_horizon(2, 1, 1, 1) == Fraction(1, 12)
             and bounds.exp_constant(2, 1, 1, 1) == 12
             and bounds.exp_horizon(3, 1, 1, 1) == Fraction(1, 81))
    r2 = bounds.horizon(2, DecayProfile.exponential(1.0, 1.0), 1)
    r3 = bounds.horizon(3, DecayProfile.exponential(1.0, 1.0), 1)
    floats = (abs(r2.horizon - 1 / 12) <= math.ulp(1 / 12) and r2.constant_B == 12.0
              and abs(r3.horizon - 1 / 81) <= math.ulp(1 / 81))
    ok = exact and floats
    record(1, "horizon constants", ok,
           f"L_2={bounds.exp_horizon_bbm(1, 1, 1)}, B={bounds.exp_constant(2, 1, 1, 1)}, "
           f"L_3={bounds.exp_horizon(3, 1, 1, 1)}, floats {r2.horizon!r}, {r3.horizon!r}")
    assert ok


def test_criterion_2_tree_picard(run2):
    cfg = run2.cfg
    budget = max(1e-9, (cfg.T / cfg.steps) ** 2)
    t0 = time.perf_counter()
    devs = []
    for k in (1, 2, 3):
        ex = combinatorics.tree_expansion(k, run2.init, cfg.omega, 2, cfg.trunc, t_max=cfg.T)
        tree = np.stack([e(cfg.times) for e in ex], axis=1)
        devs.append(float(np.max(np.abs(tree - run2.iterates[k]))))
    seconds = run2.seconds + time.perf_counter() - t0
    ok = max(devs) <= budget and seconds < 120
    record(2, "tree vs Picard", ok,
           f"max deviation k=1..3 {', '.join(f'{d:.2e}' for d in devs)} (budget {budget:.2e}), {seconds:.1f}s")
    assert ok


def _envelope_ratio(run):
    cfg = run.cfg
    B = exp_B(cfg.p, cfg.profile.amp, cfg.profile.rate, cfg.nu)
    env = B * np.exp(-cfg.profile.rate * cfg.trunc.norms / 2)
    return max(float(np.max(np.abs(v) / env)) for v in run.iterates)


def test_criterion_3_uniform_decay(run2, run3):
    r2, r3 = _envelope_ratio(run2), _envelope_ratio(run3)
    ok = r2 <= 1 + ENV_TOL and r3 <= 1 + ENV_TOL
    record(3, "uniform decay envelope", ok,
           f"max |c_k|/(B_p e^(-rho|n|/2)) over all iterates and frames: p=2 {r2:.4f}, p=3 {r3:.4f}")
    assert ok


def _contraction(run):
    cfg = run.cfg
    worst_sup, worst_pt = 0.0, 0.0
    for k in range(1, 11):
        diff = np.abs(run.iterates[k] - run.iterates[k - 1])
        b = exp_diff_bound(cfg.p, cfg.profile.amp, cfg.profile.rate, cfg.nu, k, cfg.times, cfg.trunc.norms)
        worst_sup = max(worst_sup, diff.max() / b.max())
        excess = diff - (b * (1 + ENV_TOL) + ROUNDOFF)
        worst_pt = max(worst_pt, float(excess.max()))
    return worst_sup, worst_pt


def test_criterion_4_contraction(run2, run3):
    s2, p2 = _contraction(run2)
    s3, p3 = _contraction(run3)
    iters = []
    for run in (run2, run3):
        res = solve(replace(run.cfg, min_iters=0, max_iters=25, tol=1e-10), run.init)
        iters.append(res.diagnostics.iterates[-1].k)
    ok = s2 <= 1 and s3 <= 1 and p2 <= 0 and p3 <= 0 and max(iters) <= 25
    record(4, "contraction bound", ok,
           f"sup-ratio k<=10: p=2 {s2:.2e}, p=3 {s3:.2e}; pointwise excess <= 0: {p2 <= 0 and p3 <= 0}; "
           f"iterations to tol 1e-10: {iters[0]} (p=2), {iters[1]} (p=3)")
    assert ok


def test_criterion_5_polynomial(run_poly):
    cfg = run_poly.cfg
    b8, b4 = mp_bfrak(8, 1), mp_bfrak(4, 1)
    B = 2 * b8
    norms = cfg.trunc.norms
    env = B * (1 + norms) ** -8.0
    env_ratio = max(float(np.max(np.abs(v) / env)) for v in run_poly.iterates)
    worst = -np.inf
    for k in range(1, 11):
        diff = np.abs(run_poly.iterates[k] - run_poly.iterates[k - 1])
        bound = (B * b4 / 2) * np.multiply.outer((B * b4 * cfg.times / 2) ** k / math.factorial(k),
                                                 (1 + norms) ** -4.0)
        worst = max(worst, float((diff - (bound * (1 + ENV_TOL) + ROUNDOFF)).max()))
    ok = env_ratio <= 1 + ENV_TOL and worst <= 0 and abs(cfg.T - 1 / (2 * b8)) <= 1e-15
    record(5, "polynomial decay", ok,
           f"T={cfg.T:.6f}, envelope ratio {env_ratio:.4f}, difference bound held pointwise k<=10: {worst <= 0}")
    assert ok


def test_criterion_6_combinatorics():
    checks = {}
    for p, kmax in ((2, 4), (3, 3)):
        for k in range(1, kmax + 1):
            nodes = combinatorics.enumerate_tree(k, p)
            checks[f"count p={p} k={k}"] = len(nodes) == combinatorics.node_count(k, p)
            ok_id = True
            for node in nodes:
                s = combinatorics.stats(node, p)
                ok_id &= s.sigma == s.ell + Fraction(1, p - 1)
                if p == 2:
                    ok_id &= s.sigma == s.ell + 1
            checks[f"identity p={p} k={k}"] = ok_id
    checks["N_4 = 677"] = len(combinatorics.enumerate_tree(4, 2)) == 677
    diamonds = [combinatorics.diamond_sum(k, 2, 0.25) for k in range(1, 5)]
    checks["diamond(1/4) <= 2"] = max(diamonds) <= 2
    flat3 = float(combinatorics.optimal_flat(3))
    spades = [combinatorics.diamond_sum(k, 3, flat3) for k in range(1, 4)]
    checks["spade(4/27) <= 3/2"] = max(spades) <= 1.5
    # optimality probe: k = 1..4 by enumeration, 5..8 by the generating polynomial
    probe = [combinatorics.diamond_sum(k, 2, 0.30) for k in range(1, 5)]
    probe += [combinatorics.diamond_value(k, 2, 0.30) for k in range(5, 9)]
    checks["diamond(0.30) > 2 for some k <= 8"] = max(probe) > 2
    ok = all(checks.values())
    failed = [name for name, v in checks.items() if not v]
    record(6, "combinatorial identities", ok,
           f"{sum(checks.values())}/{len(checks)} checks; diamond_4(1/4)={diamonds[-1]:.6f}, "
           f"spade_3(4/27)={spades[-1]:.6f}, max diamond_k(0.30), k<=8 = {max(probe):.6f}"
           + (f"; failed: {failed}" if failed else ""))
    assert ok, failed


def test_criterion_7_analytic_bounds():
    s_grid = np.linspace(1.01, 50.0, 100)
    zeta_ok = all(bounds.zeta_partial(s) <= 1 + 1 / (s - 1) for s in s_grid)
    zeta_acc = max(abs(bounds.zeta_partial(s) - float(mpmath.zeta(s))) for s in s_grid)
    rho = np.linspace(0.001, 1.0, 1000)
    exp_ok = all(bounds.exp_sum_1d(r) * r <= 3 for r in rho)
    h_ok = True
    for nu in (1, 2, 3):
        for s in (8, 12, 16):
            cap = mp_bfrak(s, nu)
            vals = [bounds.H_partial(s, nu, N) for N in range(61)]
            h_ok &= all(b >= a for a, b in zip(vals, vals[1:])) and vals[-1] <= cap
    probes = bounds.inequality_probes(100_000, seed=2024)
    ok = zeta_ok and zeta_acc <= 1e-11 and exp_ok and h_ok and probes.passed
    record(7, "analytic bounds", ok,
           f"zeta bound {zeta_ok} (max error vs mpmath {zeta_acc:.1e}), rho*sum<=3 {exp_ok}, H<=b {h_ok}, "
           f"probes max violation mie {probes.mean_value_max_violation:.1e} gbi {probes.bernoulli_max_violation:.1e}")
    assert ok


def test_criterion_8_oracle_agreement(run2):
    cfg = replace(run2.cfg, min_iters=0)
    d1 = uniqueness_probe(cfg, run2.init)
    d2 = uniqueness_probe(replace(cfg, steps=2 * cfg.steps), run2.init)
    ratio = d1 / d2
    # the same study with every Picard run iterated to round-off, for context
    full = [_grid_distance(solve(replace(cfg, steps=M, min_iters=12), run2.init).solution,
                           rk4_integrate(run2.init, cfg.T, M, cfg.omega, 2, cfg.trunc)) for M in (512, 1024)]
    ok = d1 <= 1e-6 and ratio >= 4
    record(8, "Picard vs RK4", ok,
           f"sup distance {d1:.3e} at M=512, {d2:.3e} at M=1024, ratio {ratio:.4f} "
           f"(ratio with iterates run to round-off: {full[0] / full[1]:.6f})")
    assert ok


def test_criterion_9_structural(run2):
    init = run2.init
    o = run2.cfg.trunc.origin
    mean_ok = all(np.all(v[:, o] == init.values[o]) for v in run2.iterates)
    neg = run2.cfg.trunc.negation
    reality = max(float(np.max(np.abs(v[:, neg] - np.conj(v)))) for v in run2.iterates)
    cfg2 = SolverConfig(nu=2, radius=3, steps=128)
    sol2 = solve(cfg2, make_initial(cfg2.profile, 2, cfg2.trunc, 1)).solution
    reality = max(reality, float(np.max(np.abs(sol2.values[:, cfg2.trunc.negation] - np.conj(sol2.values)))))
    rng = np.random.default_rng(9)
    worst = 0.0
    for nu in (1, 2):
        for N in range(0, 5):
            t = Truncation(nu, N)
            for p in (2, 3, 4):
                fields = [CoeffField(t, rng.normal(size=len(t)) + 1j * rng.normal(size=len(t))) for _ in range(p)]
                fast = convolve_p(fields, t).values
                slow = convolve_naive(fields, t).values
                worst = max(worst, float(np.max(np.abs(fast - slow)) / max(np.max(np.abs(slow)), 1e-300)))
    ok = mean_ok and reality <= 1e-12 and worst <= 1e-13
    record(9, "structural invariants", ok,
           f"mean mode bitwise {mean_ok}, reality defect {reality:.1e}, pairwise vs naive rel {worst:.1e}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
