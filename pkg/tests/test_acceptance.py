"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from degenfb.barrier import growth_check, select_params, verify_supersolution
from degenfb.cli import main
from degenfb.grid import Grid, ScalarField, SymMatrix
from degenfb.oned import SlopeLaw, cross_validate, integrate_profile, slope_from_law
from degenfb.operators import DegeneracyParams, HessianFm, Laplacian, PucciMinus, PucciPlus, acp_check, recession
from degenfb.reaction import ReactionParams
from degenfb.solver import ProblemSpec, SolveConfig, comparison_check, cutting_check, solve_peps

from conftest import MODEL_EPS

MARGIN_TOL = 1e-10
PUCCI_TOL = 1e-12
SUP_REP_TOL = 1e-10
ACP_TOL = 1e-12
RECESSION_TOL = 1e-3
CLOSED_FORM_TOL = 1e-12
IDENTITY_TOL = 1e-10
CROSS_TOL = 0.05
CUT_FACTOR = 10.0
STABILITY_FACTOR = 2.0
DENSITY_FLOOR = 0.02
HARNACK_CEIL = 100.0
POROSITY_FLOOR = 0.05


def report(n, ok, detail):
    print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def test_criterion_1_barrier_suite():
    rng = np.random.default_rng(2024)
    pq = [(p, q) for p in (0.5, 1.0, 2.0) for q in (0.5, 1.0, 2.0) if p <= q]
    worst, failures = -np.inf, []
    for k in range(20):
        p, q = pq[rng.integers(len(pq))]
        Lam = float(rng.choice([1.0, 2.0, 4.0]))
        a_sup = float(rng.choice([0.0, 1.0]))
        I_star = float(rng.choice([0.1, 1.0, 10.0]))
        deg = DegeneracyParams(p, q, a_sup)
        bp = select_params(2, 1.0, Lam, deg.L1, deg.L2, p, q, a_sup, 0.2, 0.8, I_star)
        sup = verify_supersolution(bp, deg, 1.0, Lam, I_star, samples=1000, tol=MARGIN_TOL)
        gpass, gmargin = growth_check(bp)
        worst = max(worst, sup.worst_margin)
        if not (sup.passed and gpass and sup.worst_margin <= MARGIN_TOL):
            failures.append((k, p, q, Lam, a_sup, I_star))
    ok = report(1, not failures, f"20 tuples, worst margin {worst:.3e}, failures {failures}")
    assert ok


def test_criterion_2_operator_algebra():
    rng = np.random.default_rng(7)
    n = 100_000
    e = rng.normal(size=(n, 3)) * 10
    X = SymMatrix(e[:, 0], e[:, 1], e[:, 2])
    e = rng.normal(size=(n, 3)) * 10
    Y = SymMatrix(e[:, 0], e[:, 1], e[:, 2])
    c = rng.uniform(0, 5, n)
    errs = {}
    for lam, Lam in [(1.0, 1.0), (1.0, 2.0), (1.0, 4.0)]:
        Mp, Mm = PucciPlus(lam, Lam), PucciMinus(lam, Lam)
        scale = 1 + np.abs(Mp(X))
        errs.setdefault("homogeneity", 0.0)
        errs["homogeneity"] = max(errs["homogeneity"], float((np.abs(Mp(X.scale(c)) - c * Mp(X)) / (1 + c * scale)).max()))
        errs["duality"] = max(errs.get("duality", 0.0), float(np.abs(Mp(-X) + Mm(X)).max()))
        for F in (Mp, Mm, Laplacian()):
            d = F(X + Y) - F(X)
            viol = np.maximum(d - Mp(Y), Mm(Y) - d) / (1 + np.abs(d))
            errs["sandwich"] = max(errs.get("sandwich", 0.0), float(viol.max()))
        # Sup representation over sampled admissible coefficient matrices.
        th = rng.uniform(0, np.pi, 64)
        arr = X.to_array()[:2000]
        for t in th:
            R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
            A = R @ np.diag(rng.uniform(lam, Lam, 2)) @ R.T
            tr = np.einsum("ij,nji->n", A, arr)
            over = max(float((tr - Mp(X)[:2000]).max()), float((Mm(X)[:2000] - tr).max()))
            errs["sup_representation"] = max(errs.get("sup_representation", -np.inf), over)
        w = np.linalg.eigvalsh(arr)
        best = np.where(w > 0, Lam * w, lam * w).sum(axis=1)
        errs["sup_attained"] = max(errs.get("sup_attained", 0.0), float(np.abs(best - Mp(X)[:2000]).max()))
    acp = acp_check(HessianFm(3), n, seed=3, bound=3.0)
    rec = abs(float(recession(HessianFm(3), SymMatrix.diag(1.0, 2.0), 1e-4)) - 3.0)
    ok = (errs["homogeneity"] <= PUCCI_TOL and errs["duality"] <= PUCCI_TOL and errs["sandwich"] <= PUCCI_TOL
          and errs["sup_representation"] <= SUP_REP_TOL and errs["sup_attained"] <= SUP_REP_TOL
          and acp.passed and acp.margin <= ACP_TOL and rec <= RECESSION_TOL)
    detail = ", ".join(f"{k} {v:.2e}" for k, v in errs.items())
    report(2, ok, f"{detail}, acp margin {acp.margin:.2e}, recession {rec:.2e}")
    assert ok


def test_criterion_3_slope_law():
    s1 = slope_from_law(SlopeLaw(0, 0, 0, 1))
    s2 = slope_from_law(SlopeLaw(1, 1, 0, 1))
    closed = max(abs(s1 - np.sqrt(2)), abs(s2 - 3 ** (1 / 3)))
    ident = max(integrate_profile(p, q, k, ReactionParams(1e-2)).identity_residual
                for p, q, k in [(1, 1, 0), (1, 2, 1), (2, 2, 0.5)])
    prof = integrate_profile(1, 2, 1, ReactionParams(1e-2))
    law_gap = abs(prof.slope - slope_from_law(SlopeLaw(1, 2, 1, 1)))
    eps = 1e-2
    a = cross_validate(1, 1, 0, eps, eps / 8)
    b = cross_validate(1, 1, 0, eps, eps / 16)
    ok = (closed <= CLOSED_FORM_TOL and ident <= IDENTITY_TOL and law_gap <= IDENTITY_TOL
          and a.discrepancy <= CROSS_TOL and b.discrepancy < a.discrepancy)
    report(3, ok, f"closed-form err {closed:.1e}, identity {ident:.1e}, cross-validation "
                  f"{a.discrepancy:.2e} at h=eps/8 -> {b.discrepancy:.2e} at h=eps/16")
    assert ok


def test_criterion_4_cutting_and_comparison():
    grid = Grid.unit(65)
    deg = DegeneracyParams(1.0, 2.0, 1.0)
    cfg = SolveConfig(scheme="implicit")
    data = {"linear": lambda x, y: x + 0.5 * y, "smooth": lambda x, y: 1.0 + 0.5 * np.sin(np.pi * x) * np.cos(2 * y)}
    worst_cut, maxp, lines = 0.0, -np.inf, []
    for op in (Laplacian(), PucciMinus(1.0, 2.0)):
        for name, fn in data.items():
            g = ScalarField.from_function(grid, fn)
            spec = ProblemSpec(grid, deg, op, ReactionParams(0.5, 0.0, 0.0), g)
            rep = cutting_check(spec, cfg)
            worst_cut = max(worst_cut, rep.sup_difference / (CUT_FACTOR * cfg.tol))
            for r in (rep.pure, rep.degenerate):
                maxp = max(maxp, r.u.sup() - g.sup() - cfg.tol)
            lines.append(rep.passed)
    g = ScalarField.from_function(grid, data["smooth"])
    solved = {}
    for f in (0.0, 1.0, 4.0):
        spec = ProblemSpec(grid, deg, PucciMinus(1.0, 2.0), ReactionParams(0.5, 0.0, f), g)
        solved[f] = solve_peps(spec, cfg).u
        maxp = max(maxp, solved[f].sup() - g.sup() - cfg.tol)
    order = all(comparison_check(spec, solved[b], solved[a])[0] for a, b in [(0.0, 1.0), (1.0, 4.0)])
    ok = all(lines) and worst_cut <= 1.0 and order and maxp <= 0.0
    report(4, ok, f"cutting diff/(10 tol) max {worst_cut:.2e}, comparison ordered {order}, "
                  f"max principle excess {maxp:.2e}")
    assert ok


def _ratio(a, b):
    lo, hi = sorted((abs(a), abs(b)))
    return np.inf if lo == 0 else hi / lo


@pytest.mark.slow
def test_criterion_5_eps_uniformity(model_sweep):
    scal = [e.report.scalars() for e in model_sweep.entries]
    worst = {k: max(_ratio(s[k], t[k]) for s, t in zip(scal, scal[1:])) for k in scal[0]}
    growth = min(s["growth_min"] for s in scal)
    dens = min(s["density_min"] for s in scal)
    harn = max(s["harnack_max"] for s in scal)
    res = max(e.result.final_residual for e in model_sweep.entries)
    ok = (all(v <= STABILITY_FACTOR for v in worst.values()) and growth > 0 and dens > DENSITY_FLOOR
          and harn < HARNACK_CEIL and res <= 1e-8)
    detail = ", ".join(f"{k} x{v:.3f}" for k, v in worst.items())
    report(5, ok, f"eps {list(MODEL_EPS)}: {detail}; growth_min {growth:.3f}, density_min {dens:.3f}, "
                  f"harnack_max {harn:.2f}")
    assert ok


@pytest.mark.slow
def test_criterion_6_limit_behaviour(model_sweep):
    d = model_sweep.successive_differences
    hd = model_sweep.hausdorff_distances
    por = [e.report.porosity for e in model_sweep.entries]
    first = model_sweep.entries[0].result
    maxp = max(e.result.u.sup() for e in model_sweep.entries) - 1.0
    ok = (all(b <= a for a, b in zip(d, d[1:])) and all(b <= a for a, b in zip(hd, hd[1:]))
          and min(por) >= POROSITY_FLOOR and first.monotone_violations == 0 and maxp <= 1e-8)
    report(6, ok, f"sup differences {[round(x, 5) for x in d]}, Hausdorff distances {[round(x, 5) for x in hd]}, "
                  f"porosity {por}, monotone violations from init {first.monotone_violations}")
    assert ok


REPRO_SWEEP = {
    "subcommand": "sweep",
    "seed": 0,
    "grid": {"lo": [0, 0], "hi": [1, 1], "n": [65, 65]},
    "reflect_axes": [1],
    "degeneracy": {"p": 1, "q": 2, "a": 1},
    "operator": {"kind": "laplacian"},
    "reaction": {"Q": 1, "f": 0},
    "g": {"preset": "strip", "left": 1, "right": 0},
    "solve": {"scheme": "implicit"},
    "sweep": {"eps": [0.2, 0.1]},
    "geometry": {"growth_threshold": 2, "margin": 4},
}
REPRO_OTHERS = [
    {"subcommand": "barrier", "barrier": {"p": 1, "q": 2, "a_sup": 1, "t0": 0.2, "T0": 0.8, "eps": 0.1,
                                          "lambda": 1, "Lambda": 2}},
    {"subcommand": "oned", "oned": {"p": 1, "q": 1, "kappa": 0, "eps": 0.01}},
]


def _tree(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(Path(d).rglob("*")) if p.is_file()}


def test_criterion_7_reproducibility(tmp_path):
    same = True
    for k, cfg in enumerate([REPRO_SWEEP] + REPRO_OTHERS):
        c = tmp_path / f"c{k}.json"
        c.write_text(json.dumps(cfg))
        runs = []
        for tag, extra in [("a", []), ("b", []), ("t1", ["--threads", "1"]), ("t4", ["--threads", "4"])]:
            out = tmp_path / f"o{k}{tag}"
            assert main(["run", "--config", str(c), "--out", str(out), "--seed", "11"] + extra) == 0
            runs.append(_tree(out))
        same &= all(r == runs[0] for r in runs[1:])
    ok = report(7, same, "sweep, barrier and oned reports byte-identical across reruns and --threads 1/4")
    assert ok
