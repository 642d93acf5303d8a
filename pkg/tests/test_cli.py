import json

import numpy as np
import pytest

from restrictlab import cli
from restrictlab.config import build_config, load_config, parse_grid, parse_surface
from restrictlab.errors import ValidationError
from restrictlab.experiments import run_experiment


def _write(tmp_path, name, obj):
    f = tmp_path / name
    f.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return f


def test_custom_surface_config():
    S = parse_surface({"n": 3, "weights": [2, 4], "monomials": [[2, 0, 1.0], [0, 4, 1.0]],
                       "remainder": "cubic_perturbation", "offset": 0.5,
                       "domain_halfwidth": 1.0, "cutoff": [0.4, 0.8]})
    assert S.d == 2 and S.c == 0.5 and S.cutoff == (0.4, 0.8) and not S.R.is_zero


@pytest.mark.parametrize("entry,key", [
    ({"n": 3, "monomials": [[2, 0, 1.0]]}, "weights"),
    ({"n": 3, "weights": [2, 4], "monomials": [[2, 0, 1.0]], "colour": 1}, "colour"),
    ({"n": 3, "weights": [2, 4], "monomials": [[2, 0]]}, "monomials[0]"),
    ({"n": 3, "weights": [2, 4], "monomials": [[2, 0, 1.0], [0, 2, 1.0]]}, "monomials"),
    ({"n": 2, "weights": [2], "monomials": [[2, 1.0]], "remainder": "wobble"}, "remainder"),
])
def test_surface_config_errors_name_key(entry, key):
    with pytest.raises(ValidationError, match=f"'{key.replace('[', '.').replace(']', '.')}'"):
        parse_surface(entry)


def test_grid_rules():
    np.testing.assert_allclose(parse_grid("c", "deltas", {"start": 1, "stop": 1e-3, "num": 4}),
                               [1, 0.1, 0.01, 0.001])
    with pytest.raises(ValidationError, match="at least 4"):
        parse_grid("c", "deltas", [1, 0.1, 0.01])
    with pytest.raises(ValidationError, match="geometric"):
        parse_grid("c", "deltas", [1, 0.5, 0.1, 0.01])
    with pytest.raises(ValidationError):
        parse_grid("c", "deltas", {"start": 1, "stop": 0.1, "num": 5, "step": 2})


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError, match="'delats'"):
        build_config("volume-growth", {"delats": [1, 0.1, 0.01, 0.001]})
    with pytest.raises(ValidationError, match="'experiment'"):
        build_config("knapp", {"experiment": "decay"})
    with pytest.raises(ValidationError, match="budget"):
        build_config("decay", budget="huge")


def test_json_syntax_error_reports_line(tmp_path):
    f = _write(tmp_path, "c.json", '{\n  "k": 4,\n  "deltas": [0.1,]\n}\n')
    with pytest.raises(ValidationError, match="line 3"):
        load_config("hyperbola-demo", f)


def test_config_digest_stable():
    a = build_config("decay", {"surface": "mixed"}, seed=3)
    b = build_config("decay", {"surface": "mixed"}, seed=3)
    c = build_config("decay", {"surface": "mixed"}, seed=4)
    assert a.digest() == b.digest() != c.digest()


def test_list_builtins(capsys):
    assert cli.main(["list-builtins"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 7 and "no-fpt" in out[-1]
    assert cli.main(["list-builtins", "--json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 6


def test_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, "bad.json", {"surface": {"n": 3, "monomials": [[2, 0, 1.0]]}})
    assert cli.main(["volume-growth", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "weights" in capsys.readouterr().err
    big = _write(tmp_path, "big.json", {"samples": 10 ** 7})
    assert cli.main(["volume-growth", "--config", str(big), "--budget", "small",
                     "--out", str(tmp_path / "o")]) == 3
    far = _write(tmp_path, "far.json", {"surface": "paraboloid", "lambda_max": 4096})
    assert cli.main(["decay", "--config", str(far), "--out", str(tmp_path / "o")]) == 3
    with pytest.raises(SystemExit):
        cli.main(["volume-growth", "--threads", "0"])


def _run(tmp_path, name, argv):
    out = tmp_path / name
    assert cli.main(argv + ["--out", str(out)]) == 0
    return out


def _read_all(out):
    man = json.loads((out / "manifest.json").read_text())
    return man, {f["name"]: (out / f["name"]).read_bytes() for f in man["files"]}


def test_volume_growth_outputs_and_manifest(tmp_path):
    cfg = _write(tmp_path, "c.json", {"samples": 200000,
                                      "deltas": {"start": 0.25, "stop": 2 ** -10, "num": 5}})
    out = _run(tmp_path, "a", ["volume-growth", "--config", str(cfg), "--seed", "7"])
    man, files = _read_all(out)
    on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert on_disk == set(files)
    assert man["seeds"] == [7] and man["version"] and len(man["config_sha256"]) == 64
    fit = json.loads(files["fit.json"])
    assert fit["slope"] == pytest.approx(0.5, abs=0.01)
    assert {"slope", "intercept", "r2", "n_points"} <= set(fit)
    assert files["volumes.csv"].startswith(b"delta,volume,err_low,err_high,method,seed\n")


def test_rerun_byte_identical_and_thread_invariant(tmp_path):
    cfg = _write(tmp_path, "c.json", {"surface": "mixed", "samples": 300000,
                                      "deltas": {"start": 0.25, "stop": 2 ** -10, "num": 5}})
    base = ["volume-growth", "--config", str(cfg), "--seed", "42"]
    m1, f1 = _read_all(_run(tmp_path, "r1", base))
    m2, f2 = _read_all(_run(tmp_path, "r2", base))
    m3, f3 = _read_all(_run(tmp_path, "r3", base + ["--threads", "4"]))
    assert f1 == f2 == f3
    for m in (m1, m2, m3):
        m.pop("wall_time_s")
    assert m1 == m2 == m3


def test_triangle_report_json_shape(tmp_path):
    cfg = _write(tmp_path, "t.json", {"surface": "parabola", "samples": 100000})
    out = _run(tmp_path, "t", ["triangle-report", "--config", str(cfg)])
    rep = json.loads((out / "triangle_report.json").read_text())
    for k in ("volume_slope", "decay_r_hat", "knapp_critical_p", "p_star_r_hat", "deltas"):
        assert k in rep
    assert rep["volume_slope"] == pytest.approx(0.5, abs=0.01)
    assert abs(rep["deltas"]["decay_minus_volume"]) <= 0.07
    assert rep["knapp_critical_p"] == pytest.approx(1.2, abs=0.02)


@pytest.mark.parametrize("kind,params,expect", [
    ("hyperbola-demo", {}, "hyperbola.csv"),
    ("polytope-norm", {"polytope": [[0, 0], [2, 0], [1, 1.5]], "lambda_factor": 20.0,
                       "affine": [[1, 0.3], [0, 2]], "xi_samples": 10}, "fourier.csv"),
    ("knapp", {"surface": "paraboloid", "p": 1.2,
               "deltas": {"start": 0.0625, "stop": 2 ** -12, "num": 5}}, "knapp.csv"),
    ("scan", {"surface": "parabola", "directions": 8, "lambda_probe": 64}, "scan.csv"),
    ("decay", {"surface": "quartic_curve"}, "profile.csv"),
])
def test_every_experiment_runs(kind, params, expect):
    files, summary = run_experiment(build_config(kind, params))
    assert expect in files and summary


def test_polytope_norm_affine_scaling():
    cfg = build_config("polytope-norm", {"polytope": "unit_triangle", "lambda_factor": 40.0,
                                         "affine": [[2, 0.5], [0.3, 1]], "xi_samples": 10})
    files, _ = run_experiment(cfg)
    rep = json.loads(files["norm.json"])
    assert rep["affine"]["max_rel_error"] < 1e-10
    assert rep["affine"]["norm_rel_diff"] < 0.01
