"""Command-line front end.

Exit codes: 0 pass, 1 validation failure (bad input or a failed check),
2 runtime failure (non-convergence, envelope violation, blow-up).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, bounds, combinatorics
from .errors import BlowUpError, ConfigurationError, ConvergenceError, EnvelopeViolationError, TreeTooLargeError
from .io import ParseError, json_text, read_field_csv, read_solution_csv, write_json, write_solution_csv
from .lattice import check_resonances, default_omega
from .oracle import rk4_integrate
from .picard import SolverConfig, _grid_distance, solve
from .spectral import DecayKind, DecayProfile, evaluate_u, make_initial

logger = logging.getLogger("qpbbm")

DEFAULTS = {
    "p": 2, "nu": 1, "radius": 3, "omega": None, "T": None, "steps": 512, "max_iters": 25,
    "quad": "trapezoid", "tol": 1e-10, "profile": "exp", "amp": 1.0, "rate": 1.0,
    "seed": 0, "override_horizon": False, "min_iters": 0,
}

_TOKEN = re.compile(r"^(-?)(?:sqrt(\d+(?:\.\d+)?)|piOver(\d+(?:\.\d+)?)|pi)$")


def parse_omega_token(tok: str) -> float:
    """Literal float, 'sqrtK', 'piOverK' or 'pi', optionally negated."""
    tok = tok.strip()
    m = _TOKEN.match(tok)
    if m:
        sign = -1.0 if m.group(1) else 1.0
        if m.group(2) is not None:
            return sign * math.sqrt(float(m.group(2)))
        if m.group(3) is not None:
            den = float(m.group(3))
            if den == 0:
                raise ConfigurationError(f"omega token {tok!r} divides by zero")
            return sign * math.pi / den
        return sign * math.pi
    try:
        return float(tok)
    except ValueError:
        raise ConfigurationError(
            f"cannot parse omega token {tok!r}: expected a number, sqrtK or piOverK"
        ) from None


def parse_omega(value) -> Optional[list[float]]:
    if value is None:
        return None
    if isinstance(value, str):
        return [parse_omega_token(t) for t in value.split(",") if t.strip()]
    return [parse_omega_token(v) if isinstance(v, str) else float(v) for v in value]


def thread_cap() -> Optional[int]:
    raw = os.environ.get("QPBBM_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigurationError(f"QPBBM_THREADS must be a positive integer, got {raw!r}")
    return n


def parse_config(args: argparse.Namespace) -> SolverConfig:
    """defaults < JSON config file < command-line flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
        if isinstance(data.get("profile"), dict):
            prof = data.pop("profile")
            data.update({"profile": prof.get("kind", "exp"), "amp": prof.get("amp", 1.0), "rate": prof.get("rate", 1.0)})
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            merged[key] = val
    try:
        kind = DecayKind(merged["profile"])
    except ValueError:
        raise ConfigurationError(f"profile must be 'exp' or 'poly', got {merged['profile']!r}") from None
    profile = DecayProfile(kind, float(merged["amp"]), float(merged["rate"]))
    nu = int(merged["nu"])
    if kind is DecayKind.POLYNOMIAL and not (1 <= nu < profile.rate / 4 - 2):
        raise ConfigurationError(
            f"polynomial decay requires nu < r/4 - 2: got nu = {nu}, r/4 - 2 = {profile.rate / 4 - 2:g}"
        )
    return SolverConfig(
        p=int(merged["p"]), nu=nu, radius=int(merged["radius"]), omega=parse_omega(merged["omega"]),
        T=None if merged["T"] is None else float(merged["T"]), steps=int(merged["steps"]),
        max_iters=int(merged["max_iters"]), quad=str(merged["quad"]), tol=float(merged["tol"]),
        profile=profile, override_horizon=bool(merged["override_horizon"]), seed=int(merged["seed"]),
        min_iters=int(merged["min_iters"]),
    )


@dataclass
class RunManifest:
    config: dict
    version: str
    seed: int
    started: str
    finished: str = ""
    threads: Optional[int] = None
    outputs: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _initial(cfg: SolverConfig, args):
    if getattr(args, "init", None):
        return read_field_csv(args.init, cfg.trunc)
    return make_initial(cfg.profile, cfg.p, cfg.trunc, cfg.seed)


def _emit(obj) -> None:
    sys.stdout.write(json_text(obj))


def cmd_solve(args) -> int:
    cfg = parse_config(args)
    manifest = RunManifest(cfg.as_dict(), __version__, cfg.seed, _now(), threads=thread_cap())
    check_resonances(cfg.trunc, cfg.omega)
    init = _initial(cfg, args)
    result = solve(cfg, init)
    diag = result.diagnostics.as_dict()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    diag_path = stem.with_name(stem.name + ".diagnostics.json")
    manifest.outputs[str(out)] = write_solution_csv(out, result.solution)
    manifest.outputs[str(diag_path)] = write_json(diag_path, diag)
    manifest.finished = _now()
    write_json(stem.with_name(stem.name + ".manifest.json"), manifest.as_dict())
    last = result.diagnostics.iterates[-1]
    _emit({"converged": True, "iterations": last.k, "sup_difference": last.sup_difference,
           "residual": result.diagnostics.residual, "solution": str(out), "diagnostics": str(diag_path)})
    return 0


def cmd_verify_tree(args) -> int:
    k = args.k
    p = args.p = args.p or 2
    report: dict = {"k": k, "p": p}
    count = combinatorics.node_count(k, p)
    report["node_count"] = count
    nodes = combinatorics.enumerate_tree(k, p, args.budget)
    ident = [c for c in combinatorics.iter_identity_checks(k, p, args.budget)]
    report["identity_checks"] = {
        "alpha_equals_beta_plus_inverse": all(a for _, a, _ in ident),
        "index_dim_equals_scaled_alpha": all(b for _, _, b in ident),
        "count_matches_recurrence": len(nodes) == count,
    }
    flat = args.flat if args.flat is not None else float(combinatorics.optimal_flat(p))
    report["flat"] = flat
    report["diamond_value"] = combinatorics.diamond_sum(k, p, flat, args.budget)
    limit = p / (p - 1)
    report["diamond_limit"] = limit
    ok = all(report["identity_checks"].values())
    if flat <= float(combinatorics.optimal_flat(p)):
        ok &= report["diamond_value"] <= limit
    dev = None
    if not args.skip_picard:
        cfg = parse_config(args)
        cfg = replace(cfg, min_iters=max(cfg.min_iters, k))
        init = make_initial(cfg.profile, p, cfg.trunc, cfg.seed)
        res = solve(cfg, init, keep_iterates=True)
        ex = combinatorics.tree_expansion(k, init, cfg.omega, p, cfg.trunc, args.budget)
        tree_vals = np.stack([e(cfg.times) for e in ex], axis=1)
        dev = float(np.max(np.abs(tree_vals - res.iterates[k].values)))
        report["quadrature_budget"] = max(1e-9, (cfg.T / cfg.steps) ** 2)
        ok &= dev <= report["quadrature_budget"]
    report["max_abs_deviation_vs_picard"] = dev
    report["passed"] = bool(ok)
    _emit(report)
    return 0 if ok else 1


def cmd_verify_bounds(args) -> int:
    rng = np.random.default_rng(args.seed)
    s_grid = np.sort(rng.uniform(1.01, 50.0, size=100))
    zeta_ok = all(bounds.zeta_partial(s) <= bounds.zeta_upper(s) for s in s_grid)
    rho = np.linspace(1e-3, 1.0, 1000)
    exp_ok = all(bounds.exp_sum_1d(r) * r <= 3.0 for r in rho)
    h_rows = []
    for nu in (1, 2, 3):
        for s in (8, 12, 16):
            cap = bounds.H_bound(s, nu)
            vals = [bounds.H_partial(s, nu, N) for N in range(0, 61)]
            h_rows.append({"nu": nu, "s": s, "H_60": vals[-1], "bound": cap,
                           "ok": vals[-1] <= cap and all(np.diff(vals) >= 0)})
    probes = bounds.inequality_probes(args.samples, args.seed)
    h2 = bounds.horizon(2, DecayProfile.exponential(1, 1), 1)
    h3 = bounds.horizon(3, DecayProfile.exponential(1, 1), 1)
    constants_ok = (bounds.exp_horizon_bbm(1, 1, 1) == Fraction(1, 12) and bounds.exp_constant(2, 1, 1, 1) == 12
                    and bounds.exp_horizon(3, 1, 1, 1) == Fraction(1, 81))
    report = {
        "zeta_bound": zeta_ok, "exp_sum_1d": exp_ok, "lattice_sums": h_rows,
        "probes": probes.as_dict(),
        "horizons": {"p2": h2.as_dict(), "p3": h3.as_dict(), "exact_constants": constants_ok},
    }
    ok = zeta_ok and exp_ok and all(r["ok"] for r in h_rows) and probes.passed and constants_ok
    report["passed"] = bool(ok)
    _emit(report)
    return 0 if ok else 1


def cmd_horizon(args) -> int:
    profile = DecayProfile(DecayKind(args.profile), args.amp, args.rate)
    if profile.kind is DecayKind.POLYNOMIAL and not (1 <= args.nu < args.rate / 4 - 2):
        raise ConfigurationError(
            f"polynomial decay requires nu < r/4 - 2: got nu = {args.nu}, r/4 - 2 = {args.rate / 4 - 2:g}"
        )
    rep = bounds.horizon(args.p, profile, args.nu).as_dict()
    if args.target_T is not None:
        rep["target_T"] = args.target_T
        rep["max_amplitude"] = bounds.max_amplitude(args.p, profile.kind, args.rate, args.nu, args.target_T)
    _emit(rep)
    return 0


def cmd_compare_oracle(args) -> int:
    cfg = parse_config(args)
    init = _initial(cfg, args)
    res = solve(cfg, init)
    rk_steps = args.rk_steps or cfg.steps
    rk = rk4_integrate(init, cfg.T, rk_steps, cfg.omega, cfg.p, cfg.trunc)
    rk2 = rk4_integrate(init, cfg.T, 2 * rk_steps, cfg.omega, cfg.p, cfg.trunc)
    sol = res.solution
    if sol.steps % rk_steps and rk_steps % sol.steps:
        raise ConfigurationError(f"RK steps {rk_steps} and Picard steps {sol.steps} share no common grid")
    stride_p = max(1, sol.steps // rk_steps)
    stride_r = max(1, rk_steps // sol.steps)
    per_time = np.max(np.abs(sol.values[::stride_p] - rk.values[::stride_r]), axis=1)
    _emit({
        "sup_distance": float(per_time.max()),
        "per_time_distance": [float(d) for d in per_time],
        "rk_self_refinement": _grid_distance(rk, rk2),
        "picard_residual": res.diagnostics.residual,
    })
    return 0


def cmd_evaluate(args) -> int:
    sol = read_solution_csv(args.solution)
    M = sol.steps
    if not -(M + 1) <= args.t_index <= M:
        raise ConfigurationError(f"t-index {args.t_index} out of range for {M + 1} time frames")
    omega = parse_omega(args.omega) if args.omega else list(default_omega(sol.trunc.nu))
    if len(omega) != sol.trunc.nu:
        raise ConfigurationError(f"omega has {len(omega)} entries, solution has nu = {sol.trunc.nu}")
    if args.x_samples < 1:
        raise ConfigurationError(f"x-samples must be >= 1, got {args.x_samples}")
    xs = np.linspace(0.0, args.x_max, args.x_samples, endpoint=False)
    u = evaluate_u(sol.frame(args.t_index), omega, xs)
    lines = ["x,re,im"] + [f"{x:.17g},{v.real:.17g},{v.imag:.17g}" for x, v in zip(xs, np.atleast_1d(u))]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _solver_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON file with solver settings")
    sp.add_argument("--p", type=int)
    sp.add_argument("--nu", type=int)
    sp.add_argument("--radius", type=int)
    sp.add_argument("--omega", help="comma list; tokens may be numbers, sqrtK or piOverK")
    sp.add_argument("--profile", choices=["exp", "poly"])
    sp.add_argument("--amp", type=float)
    sp.add_argument("--rate", type=float)
    sp.add_argument("--T", type=float, help="final time (default: guaranteed horizon)")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--max-iters", dest="max_iters", type=int)
    sp.add_argument("--min-iters", dest="min_iters", type=int)
    sp.add_argument("--quad", choices=["trapezoid", "simpson"])
    sp.add_argument("--tol", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--override-horizon", dest="override_horizon", action="store_true")
    sp.add_argument("--init", help="CSV field (n_1..n_nu,re,im) used instead of generated data")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpbbm", description="gBBM spectral solver and verification suite")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="Picard solve; writes solution CSV, diagnostics and manifest")
    _solver_flags(sp)
    sp.add_argument("--out", required=True, help="solution CSV path")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify-tree", help="tree identities, diamond sums, tree vs Picard")
    _solver_flags(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--flat", type=float)
    sp.add_argument("--budget", type=int, default=combinatorics.DEFAULT_BUDGET)
    sp.add_argument("--skip-picard", action="store_true")
    sp.set_defaults(func=cmd_verify_tree)

    for name in ("verify-bounds", "bounds"):
        sp = sub.add_parser(name, help="zeta, lattice-sum and inequality checks")
        sp.add_argument("--samples", type=int, default=100_000)
        sp.add_argument("--seed", type=int, default=0)
        sp.set_defaults(func=cmd_verify_bounds)

    sp = sub.add_parser("horizon", help="existence horizon and decay constant")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--nu", type=int, default=1)
    sp.add_argument("--profile", choices=["exp", "poly"], default="exp")
    sp.add_argument("--amp", type=float, default=1.0)
    sp.add_argument("--rate", type=float, default=1.0)
    sp.add_argument("--target-T", dest="target_T", type=float)
    sp.set_defaults(func=cmd_horizon)

    sp = sub.add_parser("compare-oracle", help="Picard vs RK4 on one configuration")
    _solver_flags(sp)
    sp.add_argument("--rk-steps", type=int)
    sp.set_defaults(func=cmd_compare_oracle)

    sp = sub.add_parser("evaluate", help="sample u(t, x) from a solution CSV")
    sp.add_argument("solution")
    sp.add_argument("--t-index", type=int, default=-1)
    sp.add_argument("--x-samples", type=int, default=64)
    sp.add_argument("--x-max", type=float, default=2 * math.pi)
    sp.add_argument("--omega")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_evaluate)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        thread_cap()
        return args.func(args)
    except (ConfigurationError, ParseError, TreeTooLargeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, EnvelopeViolationError, BlowUpError, RuntimeError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
