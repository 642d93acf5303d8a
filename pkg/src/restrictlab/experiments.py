"""Experiment runners used by the command-line driver.

Each runner takes an :class:`ExperimentConfig` and returns ``(files, summary)``
where ``files`` maps output file names to their text. Nothing here touches the
file system, so reruns can be compared byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from . import oscillatory as osc
from .config import ExperimentConfig, parse_grid, parse_surface
from .errors import ResourceBudgetError, ValidationError
from .knapp import (KnappFamily, exponent_algebra, fit_knapp_exponents, knapp_csv, p_star,
                    scan_critical_p)
from .polytope import (UNIT_SQUARE, UNIT_TRIANGLE, Polytope, affine_image, read_vertex_file,
                       regular_polygon)
from .polytope_ft import check_affine_covariance, fourier_csv, lp_norm_ft, sample_ft
from .sublevel import (consistent, fit_growth_exponent, hyperbola_demo, volume_csv, volume_grid,
                       volume_mc, volume_polar_exact)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_plain, allow_nan=True) + "\n"


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if hasattr(x, "numerator"):
        return float(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _fit_dict(fit):
    return {k: v for k, v in fit.as_dict().items() if k in ("slope", "intercept", "r2", "n_points")}


# ------------------------------------------------------------ volume growth

def default_resolution(d: int, cap: int) -> int | None:
    if d not in (1, 2):
        return None
    return min(1 << 16, int(math.floor(cap ** (1.0 / d) + 1e-9)))


def volume_table(S, deltas, samples, seed, resolution, angular_nodes, threads, caps):
    if samples > caps["mc_samples"]:
        raise ResourceBudgetError(f"{samples} Monte Carlo samples exceed the budget "
                                  f"{caps['mc_samples']}", at=samples)
    if resolution is None:
        resolution = default_resolution(S.d, caps["grid_cells"])
    elif resolution ** S.d > caps["grid_cells"]:
        raise ResourceBudgetError(f"{resolution}^{S.d} grid cells exceed the budget "
                                  f"{caps['grid_cells']}", at=resolution)
    rows = {"monte_carlo": [], "grid_bracket": [], "polar_exact": []}
    for dl in deltas:
        rows["monte_carlo"].append((dl, volume_mc(S, dl, samples, seed, threads=threads)))
        if resolution is not None:
            rows["grid_bracket"].append((dl, volume_grid(S, dl, resolution)))
        if S.R.is_zero and S.d <= 3:
            rows["polar_exact"].append((dl, volume_polar_exact(S.Q, None, dl, angular_nodes)))
    return {k: v for k, v in rows.items() if v}


def run_volume_growth(cfg: ExperimentConfig):
    p = cfg.params
    S = parse_surface(p["surface"], cfg.source)
    deltas = parse_grid(cfg.source, "deltas", p["deltas"])
    table = volume_table(S, deltas, p["samples"], cfg.seed, p["resolution"], p["angular_nodes"],
                         cfg.threads, cfg.caps)
    fits = {m: _fit_dict(fit_growth_exponent(r)) for m, r in table.items()}
    methods = list(table)
    pairs = {}
    for i, a in enumerate(methods):
        for b in methods[i + 1:]:
            pairs[f"{a}~{b}"] = all(consistent(x[1], y[1]) for x, y in zip(table[a], table[b]))
    primary = dict(fits["monte_carlo"])
    primary.update({"surface": S.name, "predicted": float(S.weights.r_vol), "fits": fits,
                    "consistent_3sigma": pairs})
    rows = [r for m in methods for r in table[m]]
    files = {"volumes.csv": volume_csv(rows), "fit.json": dumps(primary)}
    for m in methods:
        files[f"volumes_{m}.dat"] = osc.gnuplot_columns([d for d, _ in table[m]],
                                                        [e.value for _, e in table[m]],
                                                        f"delta volume ({m})")
    return files, {"slope": primary["slope"], "predicted": primary["predicted"]}


# ------------------------------------------------------------------ knapp

def run_knapp(cfg: ExperimentConfig):
    p = cfg.params
    S = parse_surface(p["surface"], cfg.source)
    deltas = parse_grid(cfg.source, "deltas", p["deltas"], min_points=5)
    pv = float(p_star(S.weights.r_vol)) if p["p"] is None else float(p["p"])
    fam = KnappFamily(S, tuple(deltas), pv, p["margin"], p["scale"])
    verdict = fit_knapp_exponents(fam, cfg.threads)
    files = {"knapp.csv": knapp_csv(verdict.rows), "verdict.json": dumps(verdict.as_dict())}
    summary = verdict.as_dict()
    if p["p_scan"] is not None:
        ps = p["p_scan"]
        grid = np.linspace(ps["start"], ps["stop"], int(ps["num"]))
        scan = scan_critical_p(S, deltas, grid, p["margin"], p["scale"], cfg.threads)
        files["p_scan.json"] = dumps({"p_grid": scan.p_grid, "rho2": scan.rho2,
                                      "rhop": scan.rhop, "p_critical": scan.p_critical})
        summary["p_critical"] = scan.p_critical
    return files, summary


# ---------------------------------------------------------- polytope norm

NAMED_POLYTOPES = {
    "unit_triangle": lambda: Polytope.from_vertices(UNIT_TRIANGLE),
    "unit_square": lambda: Polytope.from_vertices(UNIT_SQUARE),
    "hexagon": lambda: regular_polygon(6),
}


def parse_polytope(entry, src):
    if isinstance(entry, str):
        if entry in NAMED_POLYTOPES:
            return NAMED_POLYTOPES[entry]()
        return read_vertex_file(entry)
    if isinstance(entry, list):
        try:
            return Polytope.from_vertices(np.array(entry, dtype=float))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{src}: key 'polytope': {exc}") from None
    raise ValidationError(f"{src}: key 'polytope': must be a name, a vertex file or a vertex list")


def run_polytope_norm(cfg: ExperimentConfig):
    p = cfg.params
    P = parse_polytope(p["polytope"], cfg.source)
    pv = float(p["p"])
    res = lp_norm_ft(P, pv, lambda_factor=p["lambda_factor"], max_nodes=cfg.caps["ft_nodes"],
                     threads=cfg.threads)
    out = {"polytope": {"d": P.d, "vertices": P.vertices, "n_simplices": P.n_simplices,
                        "volume": P.volume}, "norm": res.as_dict()}
    if P.d == 2:
        out["bound_ratio"] = res.total / (P.n_simplices * P.volume ** ((pv - 1) / pv))
    rng = np.random.default_rng(cfg.seed)
    xis = rng.uniform(-1, 1, (p["xi_samples"], P.d))
    xis *= (50 * rng.random(p["xi_samples"]) / np.maximum(np.linalg.norm(xis, axis=1), 1e-300))[:, None]
    files = {"fourier.csv": fourier_csv(sample_ft(P, xis))}
    if p["affine"] is not None:
        T = np.array(p["affine"], dtype=float)
        if T.shape != (P.d, P.d):
            raise ValidationError(f"{cfg.source}: key 'affine': must be a {P.d}x{P.d} matrix")
        rep = check_affine_covariance(P, T, xis)
        TP = affine_image(P, T)
        res_t = lp_norm_ft(TP, pv, lambda_factor=p["lambda_factor"], max_nodes=cfg.caps["ft_nodes"],
                           threads=cfg.threads)
        pd = pv / (pv - 1)
        pred = abs(np.linalg.det(T)) ** (1 / pd) * res.total
        out["affine"] = {"max_rel_error": rep.max_rel_error, "norm_image": res_t.total,
                         "norm_predicted": pred, "norm_rel_diff": abs(res_t.total - pred) / pred}
    files["norm.json"] = dumps(out)
    return files, {"total": res.total, "tail_bound": res.tail_bound}


# ------------------------------------------------------------------ decay

def _normal(n):
    e = np.zeros(n)
    e[-1] = 1.0
    return e


def decay_run(S, params, caps, threads):
    lam_min = 32.0 if params.get("lambda_min") is None else float(params["lambda_min"])
    lam_max = osc.LAMBDA_BUDGET[S.d] if params.get("lambda_max") is None else float(params["lambda_max"])
    th = _normal(S.n) if params.get("direction") is None else np.asarray(params["direction"], float)
    cap = caps["panels_1d" if S.d == 1 else "panels_2d"]
    need = osc.panel_count(S, lam_max * th)
    if need > cap:
        raise ResourceBudgetError(f"lambda_max = {lam_max:g} needs {need} panels per axis, "
                                  f"over the budget {cap}", at=lam_max)
    prof = osc.decay_profile(S, th, lam_min, lam_max, params.get("per_octave", 4),
                             params.get("refine", 1), threads)
    return prof, osc.fit_decay_exponent(prof)


def run_decay(cfg: ExperimentConfig):
    S = parse_surface(cfg.params["surface"], cfg.source)
    prof, fit = decay_run(S, cfg.params, cfg.caps, cfg.threads)
    lam, env = prof.envelope
    d = _fit_dict(fit)
    d.update({"surface": S.name, "direction": list(prof.direction), "r_hat": fit.slope,
              "predicted": float(S.weights.r_vol), "f0": prof.f0})
    files = {"profile.csv": osc.profile_csv(prof),
             "envelope.dat": osc.gnuplot_columns(lam, env, "lambda envelope"),
             "fit.json": dumps(d)}
    return files, {"r_hat": fit.slope, "predicted": d["predicted"]}


def run_scan(cfg: ExperimentConfig):
    p = cfg.params
    S = parse_surface(p["surface"], cfg.source)
    cap = cfg.caps["panels_1d" if S.d == 1 else "panels_2d"]
    lam_hi = p["lambda_probe"] * 2 ** 0.25
    dirs = osc.hemisphere_directions(S.n, p["directions"])
    need = max(osc.panel_count(S, lam_hi * th) for th in dirs)
    if need > cap:
        raise ResourceBudgetError(f"probe lambda {lam_hi:g} needs {need} panels per axis, "
                                  f"over the budget {cap}", at=lam_hi)
    rep = osc.isotropic_decay_scan(S, p["directions"], p["lambda_probe"], p["refine"], cfg.threads)
    summary = {"surface": S.name, "lambda_probe": rep.lam_probe, "normal_value": rep.normal_value,
               "worst_index": rep.worst_index, "worst_value": rep.worst_value,
               "worst_direction": rep.worst_direction.tolist(), "worst_over_normal":
               rep.worst_value / rep.normal_value}
    return {"scan.csv": osc.scan_csv(rep), "scan.json": dumps(summary)}, summary


# ------------------------------------------------------------ hyperbola

def run_hyperbola(cfg: ExperimentConfig):
    rows = hyperbola_demo(cfg.params["deltas"], cfg.params["k"])
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    keys = ["delta", "k", "region_area", "region_area_quad", "cover_area", "cover_area_numeric",
            "ratio"]
    wr.writerow(keys)
    for r in rows:
        wr.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
    ratios = [r["ratio"] for r in rows]
    summary = {"k": cfg.params["k"], "ratios": ratios,
               "strictly_increasing": bool(all(b > a for a, b in zip(ratios, ratios[1:])))}
    return {"hyperbola.csv": buf.getvalue(), "hyperbola.json": dumps(summary)}, summary


# ------------------------------------------------------- triangle report

def run_triangle_report(cfg: ExperimentConfig):
    p = cfg.params
    S = parse_surface(p["surface"], cfg.source)
    deltas = parse_grid(cfg.source, "deltas", p["deltas"])
    table = volume_table(S, deltas, p["samples"], cfg.seed, None, 512, cfg.threads, cfg.caps)
    vfit = fit_growth_exponent(table["monte_carlo"])
    _, dfit = decay_run(S, p, cfg.caps, cfg.threads)
    r_hat = dfit.slope
    ps_hat = float(p_star(r_hat))
    kd = parse_grid(cfg.source, "knapp_deltas", p["knapp_deltas"], min_points=5)
    grid = np.linspace(ps_hat - 0.1, ps_hat + 0.1, 11)
    grid = grid[(grid > 1) & (grid < 2)]
    scan = scan_critical_p(S, kd, grid, threads=cfg.threads)
    report = {
        "surface": S.name,
        "predicted_r": float(S.weights.r_vol),
        "volume_slope": vfit.slope,
        "decay_r_hat": r_hat,
        "knapp_critical_p": scan.p_critical,
        "p_star_r_hat": ps_hat,
        "exponents": exponent_algebra(r=r_hat),
        "deltas": {
            "decay_minus_volume": r_hat - vfit.slope,
            "knapp_p_minus_p_star": scan.p_critical - ps_hat,
            "volume_minus_predicted": vfit.slope - float(S.weights.r_vol),
        },
    }
    return {"triangle_report.json": dumps(report)}, report


RUNNERS = {
    "volume-growth": run_volume_growth,
    "knapp": run_knapp,
    "polytope-norm": run_polytope_norm,
    "decay": run_decay,
    "scan": run_scan,
    "hyperbola-demo": run_hyperbola,
    "triangle-report": run_triangle_report,
}


def run_experiment(cfg: ExperimentConfig):
    return RUNNERS[cfg.kind](cfg)
