"""Command-line front end.

Every subcommand writes a versioned JSON run report (``--json-out``) and
exits with 0 when all checks pass, 1 when a checked inequality fails, and 2
on I/O or usage errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _rng
from .anticonc import (
    SignConfiguration,
    arcsin_coeff,
    exact_second_moment,
    hadamard_rank_check,
    mc_second_moment,
    power_sum,
    random_admissible,
    theorem_lower_bound_report,
)
from .embedding import (
    ConvergenceWarning,
    EmbeddingError,
    SolverConfig,
    UnitEmbedding,
    check_feasibility,
    gram_rank,
    load_embedding,
    save_embedding,
    sdp_objective,
    solve_low_rank,
)
from .graph import BRUTE_FORCE_MAX_N, GraphFormatError, brute_force_maxcut, parse_graph
from .rounding import RoundingConfig, alpha_gw, rho_star, rounding_trials

SCHEMA = 1
TOOL = "lowdim-maxcut"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def run_report(command, parameters, seed, results, passed, elapsed):
    return {
        "schema": SCHEMA,
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "parameters": _jsonable(parameters),
        "seed": seed,
        "timings": {"total_seconds": elapsed},
        "results": _jsonable(results),
        "passed": bool(passed),
    }


def _read_text(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_graph(path):
    try:
        return parse_graph(_read_text(path))
    except GraphFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_embedding(path):
    try:
        return load_embedding(_read_text(path))
    except EmbeddingError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _solver_config(args):
    return SolverConfig(
        max_iters=args.max_iters, triangle=not args.no_triangle, seed=args.seed
    )


def _solve(G, d, args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        sol = solve_low_rank(G, d, _solver_config(args))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return sol


# -- subcommands -------------------------------------------------------------


def cmd_solve(args):
    G = _load_graph(args.graph)
    sol = _solve(G, args.d, args)
    feas = check_feasibility(sol.embedding, tol=args.feas_tol)
    results = {
        "n": G.n,
        "m": G.m,
        "d": args.d,
        "triangle": not args.no_triangle,
        "solver": sol.to_dict(),
        "objective": sdp_objective(G, sol.embedding),
        "gram_rank": gram_rank(sol.embedding),
        "feasibility": feas.to_dict(),
    }
    if G.n <= min(BRUTE_FORCE_MAX_N, args.brute_force_max_n):
        results["brute_force_maxcut"] = brute_force_maxcut(G)[0]
    if args.embedding_out:
        _write(args.embedding_out, save_embedding(sol.embedding))
    passed = feas.worst_triangle_violation <= args.feas_tol if not args.no_triangle else True
    params = {"graph": args.graph, "d": args.d, "max_iters": args.max_iters,
              "triangle": not args.no_triangle, "feas_tol": args.feas_tol}
    summary = (f"objective {results['objective']:.6f}  worst violation "
               f"{feas.worst_triangle_violation:.2e}  converged {sol.converged}")
    return params, results, passed, summary


def cmd_round(args):
    G = _load_graph(args.graph)
    if args.embedding:
        V = _load_embedding(args.embedding)
        if V.n != G.n:
            raise UsageError(f"embedding has {V.n} vectors, graph has {G.n} vertices")
        solved = None
    else:
        sol = _solve(G, args.d, args)
        V, solved = sol.embedding, sol.to_dict()
    cfg = RoundingConfig(epsilon=args.epsilon, trials=args.trials, seed=args.seed)
    stats = rounding_trials(G, V, cfg)
    sdp = sdp_objective(G, V)
    results = {
        "n": G.n,
        "d": V.d,
        "sdp_objective": sdp,
        "alpha_gw": alpha_gw(),
        "statistics": stats.to_dict(per_trial=not args.no_per_trial),
        "mean_final_ge_mean_initial": stats.mean_final >= stats.mean_initial,
    }
    if sdp > 0:
        results["initial_ratio"] = stats.mean_initial / sdp
        results["initial_ratio_stderr"] = stats.stderr_initial / sdp
        results["final_ratio"] = stats.mean_final / sdp
    if solved is not None:
        results["solver"] = solved
    passed = bool(np.all(stats.final_values >= stats.initial_values))
    params = {"graph": args.graph, "embedding": args.embedding, "d": V.d,
              "epsilon": stats.epsilon, "trials": args.trials}
    summary = (f"mean initial {stats.mean_initial:.4f}  mean final {stats.mean_final:.4f}  "
               f"best {stats.best_value:g}  (SDP {sdp:.4f})")
    return params, results, passed, summary


def _parse_weights(spec, n):
    if spec is None:
        return None
    text = _read_text(spec) if Path(spec).is_file() else spec
    try:
        w = [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError("weights must be numbers") from None
    if len(w) != n:
        raise UsageError(f"expected {n} weights, got {len(w)}")
    return w


def _geom_config(args):
    if args.embedding and args.random:
        raise UsageError("give either --embedding or --random, not both")
    if args.embedding:
        V = _load_embedding(args.embedding)
    elif args.random:
        n, d = args.random
        if n < 1 or d < 1:
            raise UsageError("--random needs positive N and D")
        rng = _rng.substream(args.seed, _rng.CONFIG)
        V = random_admissible(n, d, rng, min_rho=args.min_rho)
    else:
        raise UsageError("one of --embedding or --random is required")
    try:
        return SignConfiguration(V, _parse_weights(args.weights, V.n))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_verify_geom(args):
    cfg = _geom_config(args)
    report = theorem_lower_bound_report(cfg, args.p_max)
    results = {"n": cfg.n, "d": cfg.d, "total_weight": cfg.total_weight,
                "lower_bounds": report.to_dict()}
    passed = report.passed
    if args.samples > 0:
        mc = mc_second_moment(cfg, args.samples, args.seed)
        z = (mc.estimate - report.exact) / mc.stderr if mc.stderr > 0 else 0.0
        agree = abs(mc.estimate - report.exact) <= 4 * mc.stderr + 1e-9 * max(1.0, report.exact)
        results["monte_carlo"] = {**mc.to_dict(), "z_score": z, "agrees": agree}
        passed = passed and agree
    if cfg.d >= 1 and cfg.n <= 500:
        results["hadamard_rank"] = {
            str(p): hadamard_rank_check(cfg.embedding, p).to_dict() for p in (1, 3, 5)
        }
        passed = passed and all(r["holds"] for r in results["hadamard_rank"].values())
    if cfg.admissible:
        from .gegenbauer import gegenbauer_moment_bound

        gb = gegenbauer_moment_bound(max(cfg.d, 3), cfg.total_weight)
        results["gegenbauer_bound"] = {"bound": gb, "holds": report.exact >= gb}
        passed = passed and report.exact >= gb
    params = {"embedding": args.embedding, "random": args.random, "min_rho": args.min_rho,
              "weights": args.weights, "samples": args.samples, "p_max": args.p_max}
    summary = (f"E[X^2] = {report.exact:.6g}  best termwise {report.best_termwise:.6g} "
               f"(p={report.best_p})  admissible {report.admissible}")
    return params, results, passed, summary


def cmd_powerseries(args):
    cfg = _geom_config(args)
    report = theorem_lower_bound_report(cfg, args.p_max)
    rows = [
        {"p": p, "c": arcsin_coeff((p - 1) // 2), "S_p": power_sum(cfg, p), "bound": b}
        for p, b in report.termwise.items()
    ]
    results = {"n": cfg.n, "d": cfg.d, "exact_second_moment": exact_second_moment(cfg),
               "terms": rows, "certificates": report.to_dict()}
    params = {"embedding": args.embedding, "random": args.random, "min_rho": args.min_rho,
              "weights": args.weights, "p_max": args.p_max}
    summary = f"{len(rows)} odd terms, best p={report.best_p}, dominated {report.dominated}"
    return params, results, report.passed, summary


def cmd_gegenbauer(args):
    from . import gegenbauer as gg

    d = args.d
    if d < 3:
        raise UsageError("--d must be at least 3")
    A = gg.penalty_degree(d)
    kmax = A + 5 if args.kmax is None else args.kmax
    table = gg.coefficient_table(d, kmax)
    ratios = gg.ratio_table(d)
    d0 = gg.delta0_bound(d)
    Q = gg.construct_Q(d)
    results = {
        "d": d,
        "A": A,
        "coefficients": table.to_dict(),
        "ratios": ratios.to_dict(),
        "delta0": d0.to_dict(),
        "Q": Q.to_dict(),
    }
    passed = table.sign_pattern_ok and ratios.passed and d0.holds and Q.passed
    if args.quadrature:
        basis = gg.GegenbauerBasis(d)
        km = min(kmax, args.quadrature_kmax)
        checks = {}
        for AA in (5, A):
            k_top = min(AA + 3, km)
            quad = gg.I_quadrature_table(basis, k_top, AA)
            closed = np.array([gg.I_closed(basis, k, AA) for k in range(k_top + 1)])
            rel = np.abs(closed - quad) / np.maximum(np.abs(closed), 1e-30)
            checks[str(AA)] = {"kmax": k_top, "max_relative_error": float(rel.max())}
            passed = passed and rel.max() <= 1e-8
        results["quadrature_check"] = checks
    params = {"d": d, "kmax": kmax, "quadrature": args.quadrature}
    summary = (f"sign pattern {'ok' if table.sign_pattern_ok else 'BROKEN'}  ratio min "
               f"{ratios.minimum:.6f}  |delta0| {d0.abs_delta0:.4g} >= {d0.bound:.4g}  "
               f"C {Q.C:.4g}  q0 {Q.q0:.4g}")
    return params, results, passed, summary


def cmd_extremal(args):
    from . import extremal as ex

    if args.d < 2 or args.n < 1:
        raise UsageError("need --d >= 2 and --n >= 1")
    ident = ex.mean_second_moment_identity(args.d, args.n, args.configs, args.samples, args.seed)
    caps = [ex.cap_tail_empirical(a, args.d, args.pairs, args.seed) for a in args.cap_a]
    V, flat = ex.find_flat_configuration(
        ex.ExtremalSearchConfig(args.d, args.n, args.seed, args.max_retries, args.samples)
    )
    results = {
        "identity": ident.to_dict(),
        "cap_tail": [c.to_dict() for c in caps],
        "flat_configuration": flat.to_dict(),
    }
    if flat.success:
        rep = theorem_lower_bound_report(SignConfiguration(V))
        results["flat_configuration"]["certificates_dominated"] = rep.dominated
    passed = ident.holds and all(c.holds for c in caps)
    params = {"d": args.d, "n": args.n, "configs": args.configs, "samples": args.samples,
              "pairs": args.pairs, "cap_a": args.cap_a, "max_retries": args.max_retries}
    summary = (f"mean E[X^2] {ident.mean:.4f} +- {ident.stderr:.4f} (n={args.n})  "
               f"cap tails {'ok' if all(c.holds for c in caps) else 'FAIL'}  "
               f"flat config {'found' if flat.success else 'not found'}")
    return params, results, passed, summary


def cmd_report(args):
    root = Path(args.run_dir)
    if not root.is_dir():
        raise UsageError(f"{root} is not a directory")
    rows, versions = [], set()
    for path in sorted(root.glob("*.json")):
        try:
            data = json.loads(path.read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"{path}: unreadable report ({exc})") from None
        if not isinstance(data, dict) or data.get("schema") != SCHEMA:
            raise UsageError(f"{path}: schema mismatch (expected schema {SCHEMA})")
        versions.add(data.get("version"))
        rows.append({
            "file": path.name,
            "command": data.get("command"),
            "seed": data.get("seed"),
            "version": data.get("version"),
            "passed": data.get("passed"),
            "seconds": data.get("timings", {}).get("total_seconds"),
        })
    rows.sort(key=lambda r: (str(r["command"]), r["file"]))
    if len(versions) > 1:
        print(f"warning: reports come from several versions: {sorted(map(str, versions))}",
              file=sys.stderr)
    lines = [f"{'command':<12} {'passed':<7} {'seed':>10}  file"]
    for r in rows:
        lines.append(f"{str(r['command']):<12} {str(r['passed']):<7} {str(r['seed']):>10}  "
                     f"{r['file']}")
    results = {"rows": rows, "versions": sorted(map(str, versions)), "table": "\n".join(lines)}
    passed = all(r["passed"] for r in rows)
    return {"run_dir": args.run_dir}, results, passed, "\n".join(lines)


# -- parser ------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--seed", type=int, default=_rng.DEFAULT_SEED, help="random seed")
    p.add_argument("--json-out", metavar="PATH", help="write the JSON run report ('-' for stdout)")


def _add_solver(p):
    p.add_argument("--max-iters", type=int, default=SolverConfig.max_iters)
    p.add_argument("--no-triangle", action="store_true",
                   help="solve the plain SDP without triangle inequalities")


def _add_geom_input(p):
    p.add_argument("--embedding", metavar="PATH", help="embedding JSON")
    p.add_argument("--random", nargs=2, type=int, metavar=("N", "D"),
                   help="draw N random unit vectors in R^D with pairwise rho >= --min-rho")
    p.add_argument("--min-rho", type=float, default=-0.9)
    p.add_argument("--weights", help="comma/space separated weights, or a file holding them")
    p.add_argument("--p-max", type=int, default=None, help="largest odd degree for termwise bounds")


def build_parser():
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="low-rank SDP solve with triangle inequalities")
    p.add_argument("--graph", required=True)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--feas-tol", type=float, default=1e-6)
    p.add_argument("--embedding-out", metavar="PATH")
    p.add_argument("--brute-force-max-n", type=int, default=20)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("round", help="hyperplane rounding with local improvement")
    p.add_argument("--graph", required=True)
    p.add_argument("--embedding", metavar="PATH", help="embedding JSON; solved when omitted")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=None, help="candidate threshold (2^-3d)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--no-per-trial", action="store_true", help="omit per-trial values")
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("verify-geom", help="second moment, Monte Carlo, and certificates")
    _add_geom_input(p)
    p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples (0 skips)")
    _add_common(p)
    p.set_defaults(func=cmd_verify_geom)

    p = sub.add_parser("powerseries", help="termwise power-series bounds")
    _add_geom_input(p)
    _add_common(p)
    p.set_defaults(func=cmd_powerseries)

    p = sub.add_parser("gegenbauer", help="Gegenbauer coefficient table and Q construction")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--quadrature", action="store_true",
                   help="cross-check closed forms against high-precision quadrature")
    p.add_argument("--quadrature-kmax", type=int, default=40)
    _add_common(p)
    p.set_defaults(func=cmd_gegenbauer)

    p = sub.add_parser("extremal", help="random sphere configurations and cap tails")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--configs", type=int, default=200)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--pairs", type=int, default=200_000)
    p.add_argument("--cap-a", type=float, nargs="+", default=[0.5, 0.7, 0.9])
    p.add_argument("--max-retries", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_extremal)

    p = sub.add_parser("report", help="summarize a directory of JSON run reports")
    p.add_argument("run_dir")
    _add_common(p)
    p.set_defaults(func=cmd_report)
    return parser


def _write(path, text):
    if path == "-":
        sys.stdout.write(text + "\n")
        return
    try:
        Path(path).write_text(text + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        params, results, passed, summary = args.func(args)
        report = run_report(args.command, params, args.seed, results, passed,
                            time.perf_counter() - start)
        if args.json_out:
            _write(args.json_out, json.dumps(report, indent=2, sort_keys=True))
    except UsageError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json_out != "-":
        print(summary)
        print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
