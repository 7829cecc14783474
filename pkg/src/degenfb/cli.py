"""Command line entry point.

``degenfb run --config c.json --out DIR`` executes the subcommand named in
the config; ``degenfb validate --config c.json`` checks it without solving.
``degenfb solve|sweep|barrier|oned|geometry --config ...`` overrides the
config's subcommand.  Exit codes: 0 success, 1 invalid input, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import SUBCOMMANDS, ConfigError, RunConfig, build_geometry_config, build_problem, build_solve_config, \
    load_config, validate_config
from .io import dumps, read_field_csv, read_json, write_field_csv, write_json

__all__ = ["main", "run", "validate"]

log = logging.getLogger("degenfb")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}


def _setup_logging():
    name = os.environ.get("DEGENFB_LOG", "info").strip().lower()
    level = _LOG_LEVELS.get(name, logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    if name not in _LOG_LEVELS:
        log.warning("DEGENFB_LOG=%r not in %s; using info", name, sorted(_LOG_LEVELS))


def _set_threads(n):
    if n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def _run_solve(rc: RunConfig, out: Path):
    from .geometry import measure
    from .solver import solve_peps

    spec = build_problem(rc.raw)
    res = solve_peps(spec, build_solve_config(rc.raw))
    write_field_csv(out / "u.csv", res.u)
    write_json(out / "result.json", {"eps": spec.reaction.eps, "result": res.to_dict(),
                                     "solve": build_solve_config(rc.raw).to_dict()})
    if "geometry" in rc.raw:
        rep = measure(res.u, spec.reaction.eps, build_geometry_config(rc.raw, rc.seed))
        write_json(out / "geometry.json", rep.to_dict())


def _run_sweep(rc: RunConfig, out: Path):
    from .solver import eps_sweep

    spec = build_problem(rc.raw, eps=rc.raw["sweep"]["eps"][0])
    sw = eps_sweep(spec, build_solve_config(rc.raw), rc.raw["sweep"]["eps"],
                   build_geometry_config(rc.raw, rc.seed), c1=float(rc.raw["sweep"].get("c1", 1.5)))
    for k, e in enumerate(sw.entries):
        d = out / f"eps_{k:02d}"
        d.mkdir(parents=True, exist_ok=True)
        write_field_csv(d / "u.csv", e.result.u)
        write_json(d / "result.json", {"eps": e.eps, "result": e.result.to_dict()})
        write_json(d / "geometry.json", e.report.to_dict())
    summary = sw.to_dict()
    for entry in summary["entries"]:
        entry.pop("geometry")
    write_json(out / "result.json", summary)


def _run_barrier(rc: RunConfig, out: Path):
    from .barrier import growth_check, select_params, verify_supersolution
    from .operators import DegeneracyParams
    from .reaction import ReactionParams, certify

    b = rc.raw["barrier"]
    report = {}
    if "I_star" in b:
        I_star = float(b["I_star"])
    else:
        consts = certify(ReactionParams(float(b["eps"]), float(b.get("Q", 1.0)), float(b.get("f", 0.0))),
                         float(b["t0"]), float(b["T0"]))
        I_star = consts.I
        report["reaction"] = consts.to_dict()
    N, lam, Lam = int(b.get("N", 2)), float(b.get("lambda", 1.0)), float(b.get("Lambda", 1.0))
    a_sup = float(b.get("a_sup", 0.0))
    deg = DegeneracyParams(float(b["p"]), float(b["q"]), a_sup, float(b.get("L1", 1.0)), float(b.get("L2", 1.0)))
    bp = select_params(N, lam, Lam, deg.L1, deg.L2, deg.p, deg.q, a_sup, float(b["t0"]), float(b["T0"]), I_star,
                       L=b.get("L"))
    samples = int(b.get("samples", 1000))
    sup = verify_supersolution(bp, deg, lam, Lam, I_star, samples=samples)
    gpass, gmargin = growth_check(bp)
    report.update(I_star=I_star, params=bp.to_dict(), supersolution=sup.to_dict(),
                  growth={"passed": gpass, "margin": gmargin})
    write_json(out / "barrier.json", report)
    if not (sup.passed and gpass):
        raise ArithmeticError(f"barrier checks failed (supersolution margin {sup.worst_margin:.3e}, "
                              f"growth margin {gmargin:.3e})")


def _run_oned(rc: RunConfig, out: Path):
    from .oned import SlopeLaw, cross_validate, integrate_profile, slope_from_law
    from .reaction import ReactionParams

    o = rc.raw["oned"]
    p, q, kappa, eps = float(o["p"]), float(o["q"]), float(o.get("kappa", 0.0)), float(o["eps"])
    h = float(o.get("h", eps / 8.0))
    length = float(o.get("length", 0.25))
    law = slope_from_law(SlopeLaw(p, q, kappa, 1.0))
    prof = integrate_profile(p, q, kappa, ReactionParams(eps))
    cvs = [cross_validate(p, q, kappa, eps, h, length).to_dict()]
    if o.get("refine", False):
        cvs.append(cross_validate(p, q, kappa, eps, h / 2.0, length).to_dict())
    write_json(out / "oned.json", {"law_slope": law, "integrated_slope": prof.slope,
                                   "identity_residual": prof.identity_residual, "cross_validation": cvs})


def _run_geometry(rc: RunConfig, out: Path):
    from .geometry import measure

    gm = rc.raw["geometry"]
    path = Path(gm["u_csv"])
    if not path.is_absolute():
        path = rc.base_dir / path
    u = read_field_csv(path)
    rep = measure(u, float(gm["eps"]), build_geometry_config(rc.raw, rc.seed))
    write_json(out / "geometry.json", rep.to_dict())


_RUNNERS = {"solve": _run_solve, "sweep": _run_sweep, "barrier": _run_barrier, "oned": _run_oned,
            "geometry": _run_geometry}


def run(config_path, out_dir=".", seed=None, threads=None, subcommand=None) -> int:
    """Execute a config; returns the process exit code."""
    from .geometry import GeometryError
    from .reaction import CertificationError
    from .solver import ResolutionError, SolverError

    try:
        rc = load_config(config_path, seed, subcommand)
    except ConfigError as e:
        for msg in e.errors:
            log.error("invalid config: %s", msg)
        return EXIT_INVALID
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        log.error("output directory %s is not writable: %s", out, e)
        return EXIT_INVALID
    _set_threads(threads)
    try:
        _RUNNERS[rc.subcommand](rc, out)
    except (ResolutionError, CertificationError) as e:
        log.error("invalid input: %s", e)
        return EXIT_INVALID
    except SolverError as e:
        log.error("numerical failure: %s", e)
        write_json(out / "residual_trace.json", {"error": str(e), "trace": [list(t) for t in e.trace]})
        return EXIT_NUMERIC
    except (GeometryError, ArithmeticError, RuntimeError) as e:
        log.error("numerical failure: %s", e)
        return EXIT_NUMERIC
    log.info("%s finished; outputs in %s", rc.subcommand, out)
    return EXIT_OK


def validate(config_path, seed=None, subcommand=None) -> tuple[int, dict]:
    """Dry run: schema, invariants, reaction certification and barrier selection."""
    report = {"config": str(config_path), "errors": [], "checks": {}}
    try:
        raw = read_json(config_path)
    except Exception as e:  # unreadable or not JSON
        report["errors"].append(f"<file>: cannot read {config_path}: {e}")
        return EXIT_INVALID, report
    if subcommand is not None and isinstance(raw, dict):
        raw = {**raw, "subcommand": subcommand}
    report["errors"] = validate_config(raw)
    if not report["errors"] and raw["subcommand"] in ("solve", "sweep"):
        try:
            build_problem(raw, eps=raw.get("sweep", {}).get("eps", [None])[0] if raw["subcommand"] == "sweep" else None)
            build_solve_config(raw)
            report["checks"]["problem"] = "ok"
        except ValueError as e:
            report["errors"].append(f"problem: {e}")
    if not report["errors"] and raw["subcommand"] == "barrier":
        from .barrier import select_params
        from .reaction import CertificationError, ReactionParams, certify

        b = raw["barrier"]
        try:
            if "I_star" in b:
                I_star = float(b["I_star"])
            else:
                c = certify(ReactionParams(float(b["eps"]), float(b.get("Q", 1.0)), float(b.get("f", 0.0))),
                            float(b["t0"]), float(b["T0"]))
                I_star = c.I
                report["checks"]["reaction"] = c.to_dict()
            bp = select_params(int(b.get("N", 2)), float(b.get("lambda", 1.0)), float(b.get("Lambda", 1.0)),
                               float(b.get("L1", 1.0)), float(b.get("L2", 1.0)), float(b["p"]), float(b["q"]),
                               float(b.get("a_sup", 0.0)), float(b["t0"]), float(b["T0"]), I_star, L=b.get("L"))
            report["checks"]["barrier"] = bp.to_dict()
        except (CertificationError, ValueError) as e:
            report["errors"].append(f"barrier: {e}")
    return (EXIT_INVALID if report["errors"] else EXIT_OK), report


def _parser():
    ap = argparse.ArgumentParser(prog="degenfb", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "validate") + SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="seed for sampled centres (overrides config)")
        if name != "validate":
            p.add_argument("--out", default=".", help="output directory")
            p.add_argument("--threads", type=int, default=None, help="worker threads (speed only)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _setup_logging()
    if args.command == "validate":
        code, report = validate(args.config, args.seed)
        sys.stdout.write(dumps(report))
        for msg in report["errors"]:
            log.error("invalid config: %s", msg)
        return code
    subcommand = None if args.command == "run" else args.command
    return run(args.config, args.out, args.seed, args.threads, subcommand)


if __name__ == "__main__":
    sys.exit(main())
