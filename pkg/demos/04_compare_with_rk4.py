"""Cross-check the Picard solution against classical RK4 on the same modes.

Both schemes are run on the same truncated system. Trapezoid quadrature is
second order, so doubling the grid should cut the distance by about four.
"""
from qpbbm.picard import SolverConfig, refinement_study
from qpbbm.spectral import make_initial

cfg = SolverConfig(p=2, nu=1, radius=3, steps=64)
init = make_initial(cfg.profile, cfg.p, cfg.trunc, 0)
study = refinement_study(cfg, init, levels=5)
ratios = [""] + [f"  ratio {r:.3f}" for r in study.ratios]
for M, d, r in zip(study.steps, study.distances, ratios):
    print(f"M={M:5d}  sup distance {d:.3e}{r}")
