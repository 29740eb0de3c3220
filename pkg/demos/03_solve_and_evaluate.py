"""Solve once, look at the diagnostics, and sample u(t, x) on a line."""
import numpy as np

from qpbbm.picard import SolverConfig, solve
from qpbbm.spectral import evaluate_u, make_initial

cfg = SolverConfig(p=2, nu=1, radius=4, steps=256)
init = make_initial(cfg.profile, cfg.p, cfg.trunc, phase_seed=3)
res = solve(cfg, init)
diag = res.diagnostics

print(f"horizon T = {cfg.T:.6f}, decay constant B = {diag.constant_B}")
print(f"converged after {diag.iterates[-1].k} iterations, residual {diag.residual:.2e}")
for rec in diag.iterates:
    print(f"  k={rec.k:2d}  sup|c_k - c_(k-1)| = {rec.sup_difference:.3e}   "
          f"bound ratio {rec.bound_ratio:.2e}   envelope ratio {rec.envelope_ratio:.3f}")

xs = np.linspace(0, 2 * np.pi, 9, endpoint=False)
u = evaluate_u(res.solution.frame(-1), cfg.omega, xs)
print("\nu(T, x):")
for x, v in zip(xs, u):
    print(f"  x={x:6.3f}  {v.real:+.6f}  (imag {abs(v.imag):.1e})")
