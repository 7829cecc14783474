import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from degenfb.cli import main, validate

SMALL_SOLVE = {
    "subcommand": "solve",
    "seed": 0,
    "grid": {"lo": [0, 0], "hi": [1, 1], "n": [33, 33]},
    "reflect_axes": [1],
    "degeneracy": {"p": 1, "q": 2, "a": 1},
    "operator": {"kind": "laplacian"},
    "reaction": {"eps": 0.2, "Q": 1, "f": 0},
    "g": {"preset": "strip", "left": 1, "right": 0},
    "solve": {"scheme": "implicit"},
    "geometry": {"growth_threshold": 2, "margin": 2, "n_centers": 20, "nondeg_radii": [0.1], "density_rho": 0.1,
                 "hausdorff_rhos": [0.1], "porosity_radii": [0.125]},
}


def write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(Path(d).rglob("*")) if p.is_file()}


def test_solve_outputs_and_reproducible(tmp_path):
    c = write(tmp_path, SMALL_SOLVE)
    assert main(["run", "--config", str(c), "--out", str(tmp_path / "a")]) == 0
    assert main(["solve", "--config", str(c), "--out", str(tmp_path / "b"), "--threads", "1"]) == 0
    fa, fb = files(tmp_path / "a"), files(tmp_path / "b")
    assert set(fa) == {"u.csv", "result.json", "geometry.json"}
    assert fa == fb
    res = json.loads(fa["result.json"])
    assert res["schema_version"] == "1" and res["result"]["final_residual"] <= 1e-8


def test_seed_changes_only_sampled_centres(tmp_path):
    c = write(tmp_path, SMALL_SOLVE)
    main(["run", "--config", str(c), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(c), "--out", str(tmp_path / "b"), "--seed", "5"])
    fa, fb = files(tmp_path / "a"), files(tmp_path / "b")
    assert fa["u.csv"] == fb["u.csv"]


def test_invalid_config_exit_code(tmp_path, capsys):
    bad = dict(SMALL_SOLVE, degeneracy={"p": 2, "q": 1, "a": -1}, reaction={"eps": 0.05})
    c = write(tmp_path, bad)
    assert main(["run", "--config", str(c), "--out", str(tmp_path / "o")]) == 1
    msgs = capsys.readouterr().err
    assert "degeneracy" in msgs and "degeneracy.a" in msgs and "layer resolvability rule" in msgs


def test_validate_agrees_with_run(tmp_path):
    good = write(tmp_path, SMALL_SOLVE, "good.json")
    assert validate(good)[0] == 0
    cases = [
        {"degeneracy": {"p": 2, "q": 1, "a": 1}},
        {"g": -1},
        {"reaction": {"eps": 0.05}},
        {"grid": {"lo": [0, 0], "hi": [1, 1], "n": [1, 33]}},
    ]
    for k, patch in enumerate(cases):
        c = write(tmp_path, {**SMALL_SOLVE, **patch}, f"bad{k}.json")
        code, report = validate(c)
        assert code == 1 and report["errors"]
        assert main(["run", "--config", str(c), "--out", str(tmp_path / f"o{k}")]) == 1


def test_validate_barrier_levels(tmp_path):
    c = write(tmp_path, {"subcommand": "barrier", "barrier": {"p": 1, "q": 2, "t0": 0.8, "T0": 0.2, "eps": 0.1}})
    code, report = validate(c)
    assert code == 1 and any("t0 < T0" in e for e in report["errors"])
    assert validate(tmp_path / "missing.json")[0] == 1


def test_barrier_and_oned(tmp_path):
    b = write(tmp_path, {"subcommand": "barrier", "barrier": {"p": 1, "q": 2, "a_sup": 1, "t0": 0.2, "T0": 0.8,
                                                              "eps": 0.1, "lambda": 1, "Lambda": 2}}, "b.json")
    assert main(["run", "--config", str(b), "--out", str(tmp_path / "b")]) == 0
    rep = json.loads((tmp_path / "b" / "barrier.json").read_text())
    assert rep["supersolution"]["passed"]
    o = write(tmp_path, {"subcommand": "oned", "oned": {"p": 1, "q": 1, "kappa": 0, "eps": 0.01}}, "o.json")
    assert main(["run", "--config", str(o), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "oned.json").read_text())
    assert rep["cross_validation"][0]["discrepancy"] <= 0.05


def test_geometry_from_csv(tmp_path):
    c = write(tmp_path, {k: v for k, v in SMALL_SOLVE.items() if k != "geometry"})
    assert main(["run", "--config", str(c), "--out", str(tmp_path / "s")]) == 0
    geo = {"subcommand": "geometry", "geometry": {**SMALL_SOLVE["geometry"], "u_csv": "s/u.csv", "eps": 0.2}}
    g = write(tmp_path, geo, "g.json")
    assert main(["run", "--config", str(g), "--out", str(tmp_path / "g")]) == 0
    assert "lipschitz" in json.loads((tmp_path / "g" / "geometry.json").read_text())


def test_numerical_failure_writes_trace(tmp_path):
    cfg = {**SMALL_SOLVE, "solve": {"scheme": "explicit", "max_iter": 3}}
    c = write(tmp_path, cfg)
    assert main(["run", "--config", str(c), "--out", str(tmp_path / "o")]) == 2
    trace = json.loads((tmp_path / "o" / "residual_trace.json").read_text())
    assert trace["trace"]


def test_console_script_quiet(tmp_path):
    c = write(tmp_path, {"subcommand": "oned", "oned": {"p": 1, "q": 1, "kappa": 0, "eps": 0.01}})
    env = dict(os.environ, DEGENFB_LOG="quiet")
    r = subprocess.run([sys.executable, "-m", "degenfb.cli", "validate", "--config", str(c)],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0 and r.stderr == ""
    assert json.loads(r.stdout)["errors"] == []
