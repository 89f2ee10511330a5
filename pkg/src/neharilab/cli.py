"""Command-line frontend.

Subcommands: validate | fibering | lambda-star | solve | sweep | cross-check
| invariants.  Configuration is a sectioned key/value (INI) file; flags
override file values.  Exit codes: 0 success, 1 domain error (validation
failure, no convergence, failed invariant, engine disagreement), 2 usage
error.  All numeric output is deterministic given config + seed.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import fibering, sweep as sweep_mod
from .errors import ConfigError, NehariLabError, NoSignChange
from .extremal import (
    DEFAULT_FAMILIES,
    DEFAULT_SIGMAS,
    DescentOptions,
    estimate_lambda_star,
    r_sensitivity,
)
from .fibering import Branch, nehari_roots, lambda_n, lambda_e, t_max_n, t_max_e
from .functionals import (
    ReducedTriple,
    reduced_triple,
    steinweiss_B_direct,
    steinweiss_B_radial,
)
from .grid import build_cartesian_grid, build_radial_grid, sample_profile, save_snapshot
from .params import ProblemParams, critical_exponents, fibering_constants, gamma3_window, validate
from .solver import SolverOptions, solution_distance, solve_pair


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    params: ProblemParams = field(default_factory=ProblemParams)
    grid_kind: str = "radial"
    R: float = 20.0
    M: int = 256
    grading: float = 2.0
    box_L: float = 3.0
    box_m: int = 16
    solver: SolverOptions = field(default_factory=SolverOptions)
    sweep_points: int = 9
    sweep_frac_min: float = 0.15
    sweep_frac_max: float = 0.85
    sweep_spacing: str = "auto"
    families: tuple = DEFAULT_FAMILIES
    sigmas: tuple = DEFAULT_SIGMAS
    descent: DescentOptions = field(default_factory=DescentOptions)
    output_dir: str = "out"
    seed: int = 12345

    def build_grid(self):
        if self.grid_kind == "radial":
            return build_radial_grid(self.R, self.M, self.grading, self.params.N)
        if self.grid_kind == "cartesian":
            return build_cartesian_grid(self.box_L, self.box_m)
        raise ConfigError(f"unknown grid kind {self.grid_kind!r}")


def _parse_families(text: str):
    fams = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            name, beta = item.split(":", 1)
            fams.append((name.strip(), float(beta)))
        else:
            fams.append((item, None))
    return tuple(fams)


def load_config(path: str | None) -> RunConfig:
    """Read the INI config; missing file fields keep their defaults."""
    cfg = RunConfig()
    if path is None:
        return cfg
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    ini = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        ini.read(path)
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from err

    try:
        if ini.has_section("problem"):
            s = ini["problem"]
            cfg.params = ProblemParams(
                N=s.getint("n", cfg.params.N),
                alpha=s.getfloat("alpha", cfg.params.alpha),
                mu=s.getfloat("mu", cfg.params.mu),
                p=s.getfloat("p", cfg.params.p),
                q=s.getfloat("q", cfg.params.q),
                gamma3=s.getfloat("gamma3", cfg.params.gamma3),
                gamma4=s.getfloat("gamma4", cfg.params.gamma4),
                v_form=s.get("v_form", cfg.params.v_form),
                b_form=s.get("b_form", cfg.params.b_form),
                lam=s.getfloat("lambda") if s.get("lambda", "") not in ("", None) else None,
                choquard=s.getboolean("choquard", False),
            )
        if ini.has_section("grid"):
            s = ini["grid"]
            cfg.grid_kind = s.get("kind", cfg.grid_kind)
            cfg.R = s.getfloat("r", cfg.R)
            cfg.M = s.getint("m", cfg.M)
            cfg.grading = s.getfloat("grading", cfg.grading)
            cfg.box_L = s.getfloat("l", cfg.box_L)
            cfg.box_m = s.getint("m_axis", cfg.box_m)
        if ini.has_section("solver"):
            s = ini["solver"]
            cfg.solver = SolverOptions(
                tol=s.getfloat("tol", cfg.solver.tol),
                max_iters=s.getint("max_iters", cfg.solver.max_iters),
                step0=s.getfloat("step0", cfg.solver.step0),
                floor_factor=s.getfloat("floor_factor", cfg.solver.floor_factor),
                reinit_budget=s.getint("reinit_budget", cfg.solver.reinit_budget),
            )
            if cfg.solver.tol <= 0 or cfg.solver.floor_factor <= 0:
                raise ConfigError("solver tolerances must be positive")
        if ini.has_section("sweep"):
            s = ini["sweep"]
            cfg.sweep_points = s.getint("points", cfg.sweep_points)
            cfg.sweep_frac_min = s.getfloat("frac_min", cfg.sweep_frac_min)
            cfg.sweep_frac_max = s.getfloat("frac_max", cfg.sweep_frac_max)
            cfg.sweep_spacing = s.get("spacing", cfg.sweep_spacing)
        if ini.has_section("extremal"):
            s = ini["extremal"]
            if s.get("families"):
                cfg.families = _parse_families(s.get("families"))
            if s.get("sigmas"):
                cfg.sigmas = tuple(float(x) for x in s.get("sigmas").split(","))
            cfg.descent = DescentOptions(max_iters=s.getint("descent_iters", cfg.descent.max_iters))
        if ini.has_section("output"):
            cfg.output_dir = ini["output"].get("dir", cfg.output_dir)
        if ini.has_section("run"):
            cfg.seed = ini["run"].getint("seed", cfg.seed)
    except ValueError as err:
        raise ConfigError(f"bad config value: {err}") from err
    return cfg


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    prm = validate(cfg.params)
    lo, hi = critical_exponents(prm.N, prm.alpha, prm.mu)
    g3 = gamma3_window(prm.N, prm.q)
    print(f"valid: p window ({_fmt(lo)}, {_fmt(hi)}), p = {_fmt(prm.p)}")
    print(f"valid: gamma3 window ({_fmt(g3[0])}, {_fmt(g3[1])}), gamma3 = {_fmt(prm.gamma3)}")
    consts = fibering_constants(prm.p, prm.q)
    print(f"constants: C_pq = {_fmt(consts.c_pq)}, ratio = {_fmt(consts.ratio)}")
    return 0


def cmd_fibering(args) -> int:
    try:
        E, A, B = (float(x) for x in args.triple.split(","))
    except ValueError as err:
        raise ConfigError(f"--triple expects E,A,B, got {args.triple!r}") from err
    triple = ReducedTriple(E=E, A=A, B=B)
    p, q = args.p, args.q
    print(f"t_n = {_fmt(t_max_n(triple, p, q))}")
    print(f"t_e = {_fmt(t_max_e(triple, p, q))}")
    print(f"Lambda_n = {_fmt(lambda_n(triple, p, q))}")
    print(f"Lambda_e = {_fmt(lambda_e(triple, p, q))}")
    if args.lam is not None:
        roots = nehari_roots(triple, args.lam, p, q)
        if isinstance(roots, fibering.TwoRoots):
            print(f"roots: t_plus = {_fmt(roots.t_plus)}, t_minus = {_fmt(roots.t_minus)}")
        elif isinstance(roots, fibering.DoubleRoot):
            print(f"roots: double root at t_n = {_fmt(roots.t_n)}")
        else:
            print("roots: none (lambda above Lambda_n)")
        print(f"branch of t=1: {fibering.classify(triple, args.lam, p, q).value}")
    return 0


def _estimate(cfg: RunConfig):
    grid = cfg.build_grid()
    prm = validate(cfg.params)
    est = estimate_lambda_star(prm, grid, families=cfg.families, sigmas=cfg.sigmas,
                               opts=cfg.descent)
    return grid, prm, est


def cmd_lambda_star(args) -> int:
    cfg = load_config(args.config)
    grid, prm, est = _estimate(cfg)
    print(f"lambda_star = {_fmt(est.lambda_star)}")
    print(f"lambda_sub  = {_fmt(est.lambda_sub)}")
    best = min(est.sweep_trace, key=lambda e: e.value)
    print(f"sweep winner: {best.family} sigma={_fmt(best.sigma)} value={_fmt(best.value)}")
    print(f"descent iterations: {len(est.descent_values) - 1}")
    if args.r_sweep:
        try:
            radii = [float(x) for x in args.r_sweep.split(",")]
        except ValueError as err:
            raise ConfigError(f"--r-sweep expects comma-separated radii: {err}") from err
        rows = r_sensitivity(prm, radii, cfg.M, cfg.grading,
                             families=cfg.families, sigmas=cfg.sigmas, opts=cfg.descent)
        prev = None
        for R, val in rows:
            delta = "" if prev is None else f"  delta = {_fmt(abs(val - prev))}"
            print(f"R = {_fmt(R)}: lambda_star = {_fmt(val)}{delta}")
            prev = val
    if args.trace_csv:
        est.write_trace_csv(args.trace_csv)
        print(f"trace written: {args.trace_csv}")
    if args.snapshot:
        save_snapshot(args.snapshot, est.minimizer, params=prm,
                      extra={"lambda_star": est.lambda_star})
        print(f"minimizer snapshot written: {args.snapshot}")
    return 0


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    grid, prm, est = _estimate(cfg)
    # precedence: --lambda flag, config [problem] lambda, --lambda-frac of lambda*
    if args.lam is not None:
        lam = args.lam
    elif prm.lam is not None:
        lam = prm.lam
    else:
        lam = args.lam_frac * est.lambda_star
    if not (0.0 < lam):
        raise ConfigError(f"lambda must be positive, got {lam}")
    plus, minus = solve_pair(lam, prm, grid, init=est.minimizer, opts=cfg.solver)
    print(f"lambda = {_fmt(lam)} (lambda_star_est = {_fmt(est.lambda_star)})")
    for tag, res in (("N+", plus), ("N-", minus)):
        print(
            f"{tag}: energy = {_fmt(res.energy)}, residual = {_fmt(res.weak_residual)}, "
            f"iterations = {res.iterations}, converged = {'yes' if res.converged else 'no'}, "
            f"floored_mass = {_fmt(res.floored_mass)}"
        )
    print(f"distance = {_fmt(solution_distance(plus, minus, prm))}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for tag, res in (("plus", plus), ("minus", minus)):
            path = os.path.join(args.out, f"solution_{tag}.json")
            save_snapshot(path, res.solution, params=prm, extra={
                "lambda": res.lam,
                "branch": res.branch.value,
                "energy": res.energy,
                "residual": res.weak_residual,
                "iterations": res.iterations,
            })
        print(f"snapshots written: {args.out}")
    if not (plus.converged and minus.converged):
        print("error: NoConvergence")
        return 1
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    grid, prm, est = _estimate(cfg)
    lams = sweep_mod.default_lambda_grid(
        est.lambda_star,
        points=args.points or cfg.sweep_points,
        frac_min=args.frac_min or cfg.sweep_frac_min,
        frac_max=args.frac_max or cfg.sweep_frac_max,
        spacing=args.spacing or cfg.sweep_spacing,
    )
    ref = reduced_triple(est.minimizer, prm)
    result = sweep_mod.run_sweep(lams, prm, grid, ref, init=est.minimizer, opts=cfg.solver)
    out = args.out or os.path.join(cfg.output_dir, "sweep.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    sweep_mod.write_rows(result.rows, out)
    n_conv = len(result.converged_rows())
    print(f"rows: {len(result.rows)}, converged: {n_conv}")
    print(f"csv written: {out}")
    try:
        rep = sweep_mod.sign_change_locator(result.rows, est.lambda_star, prm)
        print(
            f"bound-state sign change at lambda = {_fmt(rep.crossing)} "
            f"(target ratio*lambda_star = {_fmt(rep.target)}, "
            f"within one cell: {'yes' if rep.within_one_cell else 'no'})"
        )
    except NoSignChange:
        print("bound-state sign change: not bracketed by this window")
    return 0


def cmd_cross_check(args) -> int:
    cfg = load_config(args.config)
    prm = validate(cfg.params)
    if prm.N != 3:
        raise ConfigError("cross-check requires N = 3")
    rgrid = cfg.build_grid() if cfg.grid_kind == "radial" else build_radial_grid(
        cfg.R, cfg.M, cfg.grading, 3)
    sigma = args.sigma
    u_rad = sample_profile("gaussian", sigma, rgrid)
    B_rad = steinweiss_B_radial(u_rad, prm)
    # box sized to the profile: cfg.box_L is the half-width per unit scale
    L = args.box_l if args.box_l is not None else cfg.box_L * sigma
    m = args.box_m if args.box_m is not None else cfg.box_m
    cgrid = build_cartesian_grid(L, m)
    u_cart = sample_profile("gaussian", sigma, cgrid)
    B_dir = steinweiss_B_direct(u_cart, prm)
    gap = abs(B_rad - B_dir) / B_rad
    print(f"B radial  (M={rgrid.M}) = {_fmt(B_rad)}")
    print(f"B direct  (m={m}, L={_fmt(L)}) = {_fmt(B_dir)}")
    print(f"relative gap = {_fmt(gap)}")
    if gap > args.tolerance:
        print(f"error: engine gap above tolerance {_fmt(args.tolerance)}")
        return 1
    return 0


# --------------------------------------------------------------------------
# invariants harness
# --------------------------------------------------------------------------

def _random_triples(rng, n):
    return ReducedTriple(
        E=10.0 ** rng.uniform(-3, 3, n),
        A=10.0 ** rng.uniform(-3, 3, n),
        B=10.0 ** rng.uniform(-3, 3, n),
    )


def run_invariants(cfg: RunConfig, corrupt_cpq: bool = False):
    """Run the quick invariant battery; returns [(name, ok, detail)]."""
    rng = np.random.default_rng(cfg.seed)
    prm = validate(cfg.params)
    checks = []

    # 1. constants window over random (p, q)
    ps = rng.uniform(1.05, 4.8, 10_000)
    qs = rng.uniform(0.02, 0.98, 10_000)
    ratios = qs * ps ** ((2 - qs) / (2 * ps - 2)) / 2.0
    ok = bool(np.all((ratios > 0.0) & (ratios < 1.0) & np.isfinite(ratios)))
    checks.append(("constants_ratio_window", ok, f"max ratio {ratios.max():.6f}"))

    # 2. closed-form C_pq against golden-section maximization of Q_n
    c_ref = fibering_constants(prm.p, prm.q).c_pq
    if corrupt_cpq:
        c_ref *= 1.01  # test hook: intentionally corrupted constant
    unit = ReducedTriple(E=1.0, A=1.0, B=1.0)
    lo_t, hi_t = 1e-6, 1e6
    inv_phi_g = (np.sqrt(5) - 1) / 2
    a_t, b_t = lo_t, hi_t
    # golden-section in log space on -Q_n
    la, lb = np.log(a_t), np.log(b_t)
    for _ in range(200):
        m1 = lb - inv_phi_g * (lb - la)
        m2 = la + inv_phi_g * (lb - la)
        if fibering.q_n(np.exp(m1), unit, prm.p, prm.q) >= fibering.q_n(np.exp(m2), unit, prm.p, prm.q):
            lb = m2
        else:
            la = m1
    qn_max = float(fibering.q_n(np.exp(0.5 * (la + lb)), unit, prm.p, prm.q))
    ok = abs(qn_max - c_ref) <= 1e-8 * abs(c_ref)
    checks.append(("c_pq_matches_qn_maximum", ok,
                   f"closed form {c_ref:.12g} vs maximized {qn_max:.12g}"))

    # 3. ratio identity Lambda_e / Lambda_n on random triples
    tr = _random_triples(rng, 1000)
    le = lambda_e(tr, prm.p, prm.q)
    ln = lambda_n(tr, prm.p, prm.q)
    ratio = fibering_constants(prm.p, prm.q).ratio
    ok = bool(np.all(np.abs(le / ln - ratio) <= 1e-12 * ratio))
    checks.append(("lambda_e_ratio_identity", ok, f"ratio {ratio:.12g}"))

    # 4. Q_n - Q_e = (t/q) Q_e' over random samples
    n = 100_000
    tr = _random_triples(rng, n)
    ts = 10.0 ** rng.uniform(-2, 2, n)
    qn_v = fibering.q_n(ts, tr, prm.p, prm.q)
    qe_v = fibering.q_e(ts, tr, prm.p, prm.q)
    qe_p = fibering.q_e_prime(ts, tr, prm.p, prm.q)
    scale = (ts ** (2 - prm.q) * tr.E + ts ** (2 * prm.p - prm.q) * tr.B) / tr.A
    resid = np.abs(qn_v - qe_v - ts / prm.q * qe_p) / scale
    ok = bool(np.max(resid) <= 1e-10)
    checks.append(("qn_qe_identity", ok, f"max residual {np.max(resid):.2e}"))

    # 5. 0-homogeneity of Lambda_n
    tr = _random_triples(rng, 1000)
    s = 10.0 ** rng.uniform(-2, 2, 1000)
    scaled = fibering.scale_triple(tr, s, prm.p, prm.q)
    ok = bool(np.all(np.abs(lambda_n(scaled, prm.p, prm.q) / lambda_n(tr, prm.p, prm.q) - 1.0)
                     <= 1e-12))
    checks.append(("lambda_n_zero_homogeneous", ok, "scaling leaves Lambda_n fixed"))

    # 6. quadrature exactness r^k, k <= 2
    grid = build_radial_grid(cfg.R, max(cfg.M, 64), cfg.grading, prm.N)
    errs = []
    for k in range(3):
        exact = grid.R ** (k + prm.N) / (k + prm.N)
        errs.append(abs(float(grid.weights @ grid.nodes**k) - exact) / exact)
    ok = max(errs) <= 1e-9
    checks.append(("quadrature_exactness", ok, f"max rel err {max(errs):.2e}"))

    # 7. constructed branch classification
    tr1 = ReducedTriple(E=1.3, A=0.7, B=2.1)
    lam = 0.5 * float(lambda_n(tr1, prm.p, prm.q))
    roots = nehari_roots(tr1, lam, prm.p, prm.q)
    plus = fibering.classify(fibering.scale_triple(tr1, roots.t_plus, prm.p, prm.q),
                             lam, prm.p, prm.q)
    minus = fibering.classify(fibering.scale_triple(tr1, roots.t_minus, prm.p, prm.q),
                              lam, prm.p, prm.q)
    ok = plus == Branch.NPLUS and minus == Branch.NMINUS
    checks.append(("projection_classification", ok, f"{plus.value}/{minus.value}"))

    # 8. degenerate-point identities after normalization
    norm = fibering.normalize_degenerate(tr1, prm.p, prm.q)
    rep = fibering.degenerate_relations_check(norm, prm.p, prm.q)
    ok = rep.residual_A <= 1e-10 and rep.residual_B <= 1e-10
    checks.append(("degenerate_identities", ok,
                   f"residuals {rep.residual_A:.2e}, {rep.residual_B:.2e}"))

    # 9. fixed-profile root monotonicity in lambda
    Ln = float(lambda_n(tr1, prm.p, prm.q))
    lams = np.linspace(0.1, 0.9, 16) * Ln
    tps, tms = [], []
    for lam_i in lams:
        rts = nehari_roots(tr1, float(lam_i), prm.p, prm.q)
        tps.append(rts.t_plus)
        tms.append(rts.t_minus)
    ok = bool(np.all(np.diff(tps) > 0) and np.all(np.diff(tms) < 0))
    checks.append(("root_monotonicity", ok, "t+ up, t- down"))

    return checks


def cmd_invariants(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    checks = run_invariants(cfg, corrupt_cpq=args.corrupt_cpq)
    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if failed:
        print(f"error: failed invariants: {', '.join(failed)}")
        return 1
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neharilab",
        description="Nehari-manifold / Rayleigh-quotient numerics for the "
                    "singular nonlocal problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("validate", help="validate a problem configuration")
    pv.add_argument("--config", required=True)
    pv.set_defaults(func=cmd_validate)

    pf = sub.add_parser("fibering", help="fibering structure of one reduced triple")
    pf.add_argument("--triple", required=True, help="E,A,B")
    pf.add_argument("--p", type=float, required=True)
    pf.add_argument("--q", type=float, required=True)
    pf.add_argument("--lambda", dest="lam", type=float, default=None)
    pf.set_defaults(func=cmd_fibering)

    pl = sub.add_parser("lambda-star", help="estimate the extremal parameters")
    pl.add_argument("--config", default=None)
    pl.add_argument("--trace-csv", default=None)
    pl.add_argument("--snapshot", default=None)
    pl.add_argument("--r-sweep", default=None,
                    help="comma-separated truncation radii for a sensitivity report")
    pl.set_defaults(func=cmd_lambda_star)

    ps = sub.add_parser("solve", help="solve both Nehari branches at one lambda")
    ps.add_argument("--config", default=None)
    ps.add_argument("--lambda", dest="lam", type=float, default=None)
    ps.add_argument("--lambda-frac", dest="lam_frac", type=float, default=0.5)
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_solve)

    pw = sub.add_parser("sweep", help="lambda sweep with CSV output")
    pw.add_argument("--config", default=None)
    pw.add_argument("--out", default=None)
    pw.add_argument("--points", type=int, default=None)
    pw.add_argument("--frac-min", type=float, default=None)
    pw.add_argument("--frac-max", type=float, default=None)
    pw.add_argument("--spacing", default=None)
    pw.set_defaults(func=cmd_sweep)

    pc = sub.add_parser("cross-check", help="radial vs direct nonlocal engine")
    pc.add_argument("--config", default=None)
    pc.add_argument("--sigma", type=float, default=1.0)
    pc.add_argument("--box-l", type=float, default=None)
    pc.add_argument("--box-m", type=int, default=None)
    pc.add_argument("--tolerance", type=float, default=0.02)
    pc.set_defaults(func=cmd_cross_check)

    pi = sub.add_parser("invariants", help="run the invariant battery")
    pi.add_argument("--config", default=None)
    pi.add_argument("--seed", type=int, default=None)
    pi.add_argument("--corrupt-cpq", action="store_true", help=argparse.SUPPRESS)
    pi.set_defaults(func=cmd_invariants)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except NehariLabError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
