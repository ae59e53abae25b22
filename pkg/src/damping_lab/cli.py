"""Command line front end: scenario configs in TOML or JSON drive the
library pipelines, emitting CSV curves, JSON reports, and figures."""
from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import click
import numpy as np

from . import analysis, bfun, damping, linear, modes, phasespace, reporting
from . import semilinear as sl
from .errors import ConfigInvalid, DampingLabError

TARGETS = ("hypotheses", "bfun-properties", "zones", "multiplier-bounds",
           "linear-decay", "semilinear", "dichotomy-sweep", "picard", "gn")

CSV_SCHEMAS = {
    "hypotheses": "(no CSV; JSON report only)",
    "bfun-properties": "property_id,r_min,r_max,bounded,one_sided,worst_slack,n_points",
    "zones": "t,xi,label,m,h",
    "multiplier-bounds": "bound_id,t,s,xi,t_xi,log_lhs",
    "linear-decay": "t,B,norm,bound_shape",
    "semilinear": "t,B,l2,grad_l2,ut_l2,weighted_E,W,M",
    "dichotomy-sweep": "name,p,amplitude,verdict,slope,blowup_time",
    "picard": "iterate,X_norm,contraction_factor",
    "gn": "variant,sample,lhs,rhs,constant,holds",
}


def _threads() -> int:
    raw = os.environ.get("DAMPING_LAB_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, os.cpu_count() or 1)


def load_config(path: str) -> dict:
    try:
        if path.endswith(".json"):
            with open(path) as fh:
                return json.load(fh)
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}", field=path)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigInvalid(f"cannot parse {path}: {exc}", field=path)


def _need(cfg: dict, key: str, where: str = ""):
    if key not in cfg:
        path = f"{where}.{key}" if where else key
        raise ConfigInvalid(f"missing required field '{path}'", field=path)
    return cfg[key]


def _term(cfg: dict) -> damping.DampingTerm:
    dcfg = _need(cfg, "damping")
    if isinstance(dcfg, str):
        cat = damping.catalog()
        if dcfg not in cat:
            raise ConfigInvalid(f"unknown catalog term '{dcfg}'", field="damping")
        return cat[dcfg]
    try:
        return damping.term_from_config(dict(dcfg))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad damping config: {exc}", field="damping")


def _outdir(cfg: dict, fallback: str) -> str:
    out = cfg.get("output", {}).get("dir", fallback)
    os.makedirs(out, exist_ok=True)
    return out


# -- per-target pipelines -------------------------------------------------------


def _run_hypotheses(cfg: dict, out: str, name: str) -> dict:
    term = _term(cfg)
    t_max = float(cfg.get("t_max", 1e6))
    rep = damping.check_hypotheses(term, grid=damping.default_grid(t_max))
    payload = json.loads(rep.to_json())
    reporting.write_json(os.path.join(out, f"{name}_hypotheses.json"), payload)
    ok = rep.hyp_b_ok and rep.hyp_further.ok
    return {"passed": bool(ok), "recorded": {"fitted_m": rep.fitted_m}}


def _run_bfun(cfg: dict, out: str, name: str) -> dict:
    term = _term(cfg)
    profile = bfun.make_profile(term)
    grid = bfun.default_pair_grid(float(cfg.get("t_lo", 1.0)),
                                  float(cfg.get("t_hi", 1e4)),
                                  int(cfg.get("n_points", 60)))
    alpha = float(cfg.get("alpha", 0.5))
    rows, passed = [], True
    report = {}
    for prop in bfun.EquivalenceProperty:
        rep = bfun.verify_equivalence(profile, prop, grid=grid, alpha=alpha)
        ok = (rep.worst_slack >= 0.0) if rep.one_sided else rep.bounded
        passed = passed and ok
        rows.append([rep.property_id.value, rep.r_min, rep.r_max,
                     int(rep.bounded), int(rep.one_sided),
                     rep.worst_slack if rep.worst_slack is not None else float("nan"),
                     rep.n_points])
        report[rep.property_id.value] = {
            "r_min": rep.r_min, "r_max": rep.r_max, "bounded": rep.bounded,
            "one_sided": rep.one_sided, "worst_slack": rep.worst_slack,
            "holds": ok,
        }
    reporting.write_csv(os.path.join(out, f"{name}_bfun.csv"),
                        CSV_SCHEMAS["bfun-properties"].split(","), rows)
    reporting.write_json(os.path.join(out, f"{name}_bfun.json"), report)
    return {"passed": passed, "recorded": {}}


def _run_zones(cfg: dict, out: str, name: str) -> dict:
    term = _term(cfg)
    zc = phasespace.ZoneConfig(eps=float(cfg.get("eps", 0.1)),
                               N=float(cfg.get("N", 4.0)))
    ts = np.geomspace(float(cfg.get("t_lo", 0.01)), float(cfg.get("t_hi", 1e4)),
                      int(cfg.get("n_t", 120)))
    xis = np.geomspace(float(cfg.get("xi_lo", 1e-3)), float(cfg.get("xi_hi", 10.0)),
                       int(cfg.get("n_xi", 120)))
    csv_path = os.path.join(out, f"{name}_zones.csv")
    phasespace.zone_map_csv(term, zc, ts, xis, csv_path)
    pts = [(t, x, phasespace.classify(term, zc, float(t), float(x)).label.value)
           for t in ts[:: max(1, ts.size // 60)] for x in xis[:: max(1, xis.size // 60)]]
    colors = {"hyperbolic": "tab:blue", "pseudodifferential": "tab:orange",
              "reduced": "tab:red", "elliptic": "tab:green"}
    curves = []
    for lab, col in colors.items():
        sel = [(t, x) for t, x, z in pts if z == lab]
        if sel:
            curves.append({"x": [p[0] for p in sel], "y": [p[1] for p in sel],
                           "label": lab, "color": col})
    reporting.render_curves(os.path.join(out, f"{name}_zones.png"), curves,
                            "t", "|xi|", title="zone map", logx=True, logy=True,
                            scatter=True)
    return {"passed": True, "recorded": {"csv": csv_path}}


def _run_bounds(cfg: dict, out: str, name: str) -> dict:
    term = _term(cfg)
    profile = bfun.make_profile(term)
    zc = phasespace.ZoneConfig(eps=float(cfg.get("eps", 0.1)),
                               N=float(cfg.get("N", 4.0)))
    ids = cfg.get("bound_ids") or [b.value for b in modes.BoundId]
    delta = float(cfg.get("delta", 0.25))
    refine = int(cfg.get("refine", 1))
    report, rows, passed = {}, [], True
    for bid in ids:
        rep = modes.check_bound(term, profile, bid, zc, delta=delta,
                                refine=refine, t_max=float(cfg.get("t_max", 1e3)))
        finite = np.isfinite(rep.sup_ratio)
        passed = passed and finite
        report[bid] = {"sup_ratio": rep.sup_ratio, "fitted_C": rep.fitted_C,
                       "fitted_C_prime": rep.fitted_C_prime,
                       "n_samples": rep.n_samples, "finite": bool(finite)}
        for smp in rep.samples:
            rows.append([bid, smp.t, smp.s, smp.xi,
                         smp.t_xi if smp.t_xi is not None else float("nan"),
                         smp.log_lhs])
    reporting.write_csv(os.path.join(out, f"{name}_bounds.csv"),
                        CSV_SCHEMAS["multiplier-bounds"].split(","), rows)
    reporting.write_json(os.path.join(out, f"{name}_bounds.json"), report)
    return {"passed": passed, "recorded": report}


def _run_linear(cfg: dict, out: str, name: str) -> dict:
    term = _term(cfg)
    profile = bfun.make_profile(term)
    n = int(cfg.get("dimension", 1))
    m = float(cfg.get("m_index", 1.0))
    s = float(cfg.get("s", 0.0))
    deriv = tuple(cfg.get("deriv", (0, 0)))
    window = tuple(cfg.get("t_window", (1e2, 1e4)))
    datum = (linear.gaussian_datum(n) if m == 1.0
             else linear.m_adapted_datum(n, m))
    fit = linear.verify_matsumura(term, profile, datum, s, deriv, t_window=window)
    cps = np.geomspace(window[0], window[1], 25)
    run = linear.decay_run(term, profile, s, cps)
    csv_path = os.path.join(out, f"{name}_decay.csv")
    linear.decay_curve_csv(run, datum, deriv, csv_path)
    norms = [linear.norm_from_run(run, datum, deriv, i) for i in range(cps.size)]
    Bs = [1.0 + float(bfun.B(profile, t, s)) for t in cps]
    shape = [fit.prefactor * b**fit.expected_slope for b in Bs]
    reporting.render_curves(
        os.path.join(out, f"{name}_decay.png"),
        [{"x": Bs, "y": norms, "label": "norm"},
         {"x": Bs, "y": shape, "label": "expected shape"}],
        "1+B(t,s)", "norm", title=f"decay fit slope={fit.slope:.4f}",
        logx=True, logy=True)
    ok = abs(fit.slope - fit.expected_slope) <= float(cfg.get("slope_tol", 0.05))
    payload = {k: v for k, v in dataclasses.asdict(fit).items()}
    reporting.write_json(os.path.join(out, f"{name}_decay.json"),
                         {"fit": payload, "passed": ok})
    return {"passed": bool(ok), "recorded": {"slope": fit.slope,
                                             "expected": fit.expected_slope}}


def _scenario_field(cfg: dict) -> tuple:
    data = _need(cfg, "data")
    spec = {"shape": data.get("shape", "gaussian_bump"),
            "amplitude": float(data.get("amplitude", 1.0)),
            "radius": float(data.get("radius", 2.0)),
            "u1_amplitude": float(data.get("u1_amplitude", 0.0))}
    return spec


def _run_semilinear(cfg: dict, out: str, name: str) -> dict:
    term = _term(cfg)
    profile = bfun.make_profile(term)
    n = int(_need(cfg, "dimension"))
    spec = _scenario_field(cfg)
    res = sl.run_dichotomy(
        term, profile, n, float(_need(cfg, "p")), spec,
        amplitude=spec["amplitude"], T_final=float(_need(cfg, "T_final")),
        f_sign=cfg.get("f_sign", "abs_power"), alpha=float(cfg.get("alpha", 0.25)),
        points=cfg.get("grid"), dt=cfg.get("dt"),
        box_half_width=cfg.get("box"))
    led = res["ledger"]
    csv_path = os.path.join(out, f"{name}_ledger.csv")
    sl.ledger_csv(led, csv_path)
    clock = [1.0 + b for b in led.B_vals]
    reporting.render_curves(
        os.path.join(out, f"{name}_ledger.png"),
        [{"x": clock, "y": led.l2, "label": "L2"},
         {"x": clock, "y": led.grad_l2, "label": "grad L2"},
         {"x": clock, "y": [max(v, 1e-300) for v in led.ut_l2], "label": "ut L2"}],
        "1+B(t,0)", "norm", title=f"verdict: {res['verdict']}",
        logx=True, logy=True)
    payload = {"verdict": res["verdict"], "blowup_time": res["blowup_time"],
               "slope": None if res["fit"] is None else res["fit"].slope,
               "I_alpha": led.I_alpha,
               "M_ratio": led.M_running[-1] / led.M_running[0],
               "weightfund_max": max(led.weightfund_max)}
    reporting.write_json(os.path.join(out, f"{name}_semilinear.json"), payload)
    expected = cfg.get("expect_verdict")
    ok = (res["verdict"] == expected) if expected else res["verdict"] != "Inconclusive"
    return {"passed": bool(ok), "recorded": payload}


def _run_dichotomy_sweep(cfg: dict, out: str, name: str) -> dict:
    runs = _need(cfg, "runs")
    rows, passed, report = [], True, {}
    for i, rc in enumerate(runs):
        merged = {**{k: v for k, v in cfg.items() if k != "runs"}, **rc}
        sub = _run_semilinear(merged, out, f"{name}_run{i}")
        rec = sub["recorded"]
        rows.append([rc.get("name", f"run{i}"), merged.get("p"),
                     merged["data"].get("amplitude"), rec["verdict"],
                     rec["slope"] if rec["slope"] is not None else float("nan"),
                     rec["blowup_time"] if rec["blowup_time"] is not None else float("nan")])
        report[rc.get("name", f"run{i}")] = rec
        passed = passed and sub["passed"]
    reporting.write_csv(os.path.join(out, f"{name}_sweep.csv"),
                        CSV_SCHEMAS["dichotomy-sweep"].split(","), rows)
    reporting.write_json(os.path.join(out, f"{name}_sweep.json"), report)
    return {"passed": passed, "recorded": report}


def _run_picard(cfg: dict, out: str, name: str) -> dict:
    term = _term(cfg)
    profile = bfun.make_profile(term)
    spec = _scenario_field(cfg)
    fld = sl.make_field(int(cfg.get("dimension", 1)),
                        float(cfg.get("box", 32.0)),
                        int(cfg.get("grid", 1024)), spec)
    res = sl.picard_iterate(term, profile, fld, float(_need(cfg, "p")),
                            iterations=int(cfg.get("iterations", 5)),
                            f_sign=cfg.get("f_sign", "signed_power"),
                            t_final=float(cfg.get("T_final", 20.0)),
                            n_nodes=int(cfg.get("n_nodes", 257)))
    rows = [[j, res["X_norms"][j],
             res["contraction_factors"][j - 1] if j >= 1 else float("nan")]
            for j in range(len(res["X_norms"]))]
    reporting.write_csv(os.path.join(out, f"{name}_picard.csv"),
                        CSV_SCHEMAS["picard"].split(","), rows)
    factors = res["contraction_factors"]
    ok = all(f < 1.0 for f in factors[1:]) if factors else False
    reporting.write_json(os.path.join(out, f"{name}_picard.json"),
                         {"X_norms": res["X_norms"],
                          "contraction_factors": factors, "passed": ok})
    return {"passed": bool(ok), "recorded": {"factors": factors}}


def _run_gn(cfg: dict, out: str, name: str) -> dict:
    n_dim = int(cfg.get("dimension", 1))
    count = int(cfg.get("count", 100))
    seed = int(cfg.get("seed", 0))
    variants = cfg.get("variants", ["i", "ii", "iii", "iv"])
    funcs, dx, r2 = analysis.bump_ensemble(n_dim, count, seed)
    rows, passed, recorded = [], True, {}
    for variant in variants:
        ratios = []
        for i, v in enumerate(funcs):
            psi = 0.25 * r2
            kw = {"c_t": 2.0 * n_dim * 0.25} if variant == "iv" else {}
            res = analysis.gn_check(v, psi, dx, sigma=1.0, variant=variant, **kw)
            const = res["constant"]
            rows.append([variant, i, res["lhs"], res["rhs"],
                         const if const is not None else float("nan"),
                         -1 if res["holds"] is None else int(res["holds"])])
            ratios.append(const if const is not None
                          else (res["lhs"] / res["rhs"] if res["rhs"] > 0 else 0.0))
            if res["holds"] is False:
                passed = False
        recorded[variant] = {"max_ratio": max(ratios)}
    reporting.write_csv(os.path.join(out, f"{name}_gn.csv"),
                        CSV_SCHEMAS["gn"].split(","), rows)
    reporting.write_json(os.path.join(out, f"{name}_gn.json"),
                         {"recorded": recorded, "passed": passed})
    return {"passed": passed, "recorded": recorded}


_HANDLERS = {
    "hypotheses": _run_hypotheses,
    "bfun-properties": _run_bfun,
    "zones": _run_zones,
    "multiplier-bounds": _run_bounds,
    "linear-decay": _run_linear,
    "semilinear": _run_semilinear,
    "dichotomy-sweep": _run_dichotomy_sweep,
    "picard": _run_picard,
    "gn": _run_gn,
}


def run_scenario(cfg: dict, out_fallback: str = "artifacts") -> dict:
    target = _need(cfg, "target")
    if target not in _HANDLERS:
        raise ConfigInvalid(f"unknown target '{target}' (expected one of "
                            f"{', '.join(TARGETS)})", field="target")
    name = cfg.get("name", target)
    if "seed" in cfg:
        np.random.seed(int(cfg["seed"]))
    out = _outdir(cfg, out_fallback)
    result = _HANDLERS[target](cfg, out, name)
    result["passed"] = bool(result["passed"])
    result.update({"name": name, "target": target, "output_dir": out})
    return result


# -- click group ------------------------------------------------------------------


@click.group()
def main():
    """Numerical laboratory for damped wave decay and blow-up experiments."""


@main.command("run")
@click.argument("config", type=click.Path())
@click.option("--out", default="artifacts", help="artifact directory fallback")
def cmd_run(config, out):
    """Run one scenario config (TOML or JSON)."""
    try:
        result = run_scenario(load_config(config), out)
    except ConfigInvalid as exc:
        click.echo(f"config error at '{exc.field}': {exc}", err=True)
        sys.exit(2)
    except DampingLabError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps({k: v for k, v in result.items() if k != "recorded"}))
    sys.exit(0 if result["passed"] else 1)


@main.command("suite")
@click.argument("config", type=click.Path())
@click.option("--out", default="artifacts", help="artifact directory fallback")
def cmd_suite(config, out):
    """Run every scenario listed in a suite config and summarize."""
    try:
        suite_cfg = load_config(config)
        paths = suite_cfg.get("scenarios", [])
        base = os.path.dirname(os.path.abspath(config))
        cfgs = [load_config(os.path.join(base, p)) for p in paths]
    except ConfigInvalid as exc:
        click.echo(f"config error at '{exc.field}': {exc}", err=True)
        sys.exit(2)
    rows = []
    if cfgs:
        with concurrent.futures.ThreadPoolExecutor(max_workers=_threads()) as ex:
            futs = [ex.submit(run_scenario, c, out) for c in cfgs]
            for c, fut in zip(cfgs, futs):
                try:
                    rows.append(fut.result())
                except DampingLabError as exc:
                    rows.append({"name": c.get("name", "?"), "target": c.get("target"),
                                 "passed": False, "error": f"{type(exc).__name__}: {exc}"})
    summary = {"results": rows, "passed": all(r.get("passed") for r in rows)}
    reporting.write_json(os.path.join(out, "suite_summary.json"), summary)
    width = max([len(str(r.get("name"))) for r in rows] + [8])
    for r in rows:
        status = "PASS" if r.get("passed") else "FAIL"
        click.echo(f"{str(r.get('name')):<{width}}  {str(r.get('target')):<18}  {status}")
    click.echo(f"total: {len(rows)}  "
               f"failed: {sum(1 for r in rows if not r.get('passed'))}")
    sys.exit(0 if summary["passed"] else 1)


@main.command("list-catalog")
def cmd_list_catalog():
    """Print the built-in damping catalog with parameters."""
    for name, term in damping.catalog().items():
        click.echo(f"{name:<16} kind={term.kind.value:<14} mu={term.mu} "
                   f"kappa={term.kappa} gammas={list(term.gamma_powers)}")


@main.command("print-schema")
def cmd_print_schema():
    """Document scenario config fields and fixed CSV column schemas."""
    click.echo("scenario config (TOML primary, JSON accepted):")
    click.echo("  name: string               unique scenario name")
    click.echo("  target: one of " + ", ".join(TARGETS))
    click.echo("  damping: catalog name or table {kind, mu, kappa, gammas, cs}")
    click.echo("  seed: int                  fixes randomized ensembles")
    click.echo("  output.dir: string         artifact directory")
    click.echo("  target-specific: dimension, m_index, s, deriv, t_window,")
    click.echo("    p, f_sign, data {shape, amplitude, radius, u1_amplitude},")
    click.echo("    alpha, T_final, dt, box, grid, bound_ids, delta, refine,")
    click.echo("    iterations, n_nodes, count, variants, expect_verdict, runs")
    click.echo("")
    click.echo("CSV column schemas (floats printed with 17 significant digits):")
    for target, schema in CSV_SCHEMAS.items():
        click.echo(f"  {target:<18} {schema}")


if __name__ == "__main__":
    main()
