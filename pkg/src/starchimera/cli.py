"""Command-line front end: ``starchimera <subcommand> [--config FILE] [overrides]``.

Configuration precedence, lowest to highest: built-in defaults, the YAML
file given by ``--config``, generic ``--set section.key=value`` overrides
(applied in order), then the dedicated flags (``--seed``, ``--threads``,
``--out-dir`` and the per-subcommand parameter flags).

Exit status: 0 success, 1 self-test failure, 2 invalid configuration,
3 integration failure, 4 sweep finished only partially.  On failure a JSON
object ``{"error": kind, "message": ..., "field": ...}`` is written to
``error.json`` in the output directory (when it can be created) and to
standard error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .core import ContractError, CouplingSpec, StarParams
from .integrate import IntegrationError, IntegratorConfig

SCHEMA_VERSION = 1
EXPERIMENTS = ("simulate", "diagram", "lifetime", "ws-check", "averaging-check", "ba")

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "threads": None,
    "out_dir": "results",
    "integrator": {"rel_tol": 1e-8, "abs_tol": 1e-10, "max_step": None},
    "simulate": {"beta": 200.0, "sigma": 1.2, "delta": 0.3, "n_leaves": 64, "family": "general",
                 "c1": 1.0, "offset": 0.0, "pattern": "full", "indices": [], "epsilon": 0.02,
                 "eta": 0.25, "jitter": 0.01, "horizon_cycles": 200, "samples_per_cycle": 10},
    "diagram": {"beta": 10.0, "delta": 0.3, "n_leaves": 200, "sigma_max": 3.0, "dsigma": 0.02,
                "settle": 100.0, "measure": 50.0, "jitter": 0.01},
    "lifetime": {"beta": 200.0, "sigma": 1.2, "delta": 0.3, "n_leaves": 64, "family": "general",
                 "c1": 1.0, "offset": 0.0, "eps_min": 0.01, "eps_max": 0.1, "n_eps": 5, "seeds": 10,
                 "eta": 0.25, "jitter": 0.01, "horizon_cycles": 1000, "samples_per_cycle": 10},
    "ws_check": {"n_values": [8, 16, 64], "draws": 5, "t_end": 10.0, "beta": 10.0, "sigma": 1.5,
                 "delta": 0.3, "r_disk": 0.5, "z_alpha_n": list(range(4, 33)), "z_alpha_samples": 400},
    "averaging_check": {"betas": [50.0, 100.0, 200.0], "sigma": 0.5, "delta": 0.3, "r0": 0.3,
                        "horizon_slow": 10.0, "delta0": 0.05},
    "ba": {"n_nodes": 1000, "m": 3, "graph_seed": 0, "sigma": 1.5, "epsilon": 0.0, "delta": 0.03,
           "horizon": 50.0, "dt_obs": 0.1},
}

FAMILY_ALIASES = {"general": "general", "sinusoidal": "sinusoidal", "kuramoto-sakaguchi": "kuramoto-sakaguchi",
                  "ks": "kuramoto-sakaguchi"}


class ConfigError(ContractError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class PartialSweep(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration

def _section_name(experiment: str) -> str:
    return experiment.replace("-", "_")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", "config") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}", "config") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", "config")
    if "schema_version" not in data:
        raise ConfigError("missing required field 'schema_version'", "schema_version")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {data['schema_version']!r} (expected {SCHEMA_VERSION})",
                          "schema_version")
    return data


def _merge(base: dict, over: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        name = f"{prefix}{k}"
        if k == "experiment":
            out[k] = v
            continue
        if k not in base:
            raise ConfigError(f"unknown field '{name}'", name)
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"field '{name}' must be a mapping", name)
            out[k] = _merge(base[k], v, name + ".")
        else:
            out[k] = v
    return out


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            raise ConfigError(f"unknown field '{dotted}'", dotted)
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError(f"unknown field '{dotted}'", dotted)
    node[keys[-1]] = value


def build_config(experiment: str, args: argparse.Namespace) -> dict:
    cfg = _merge(DEFAULTS, load_config(args.config))
    if cfg.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for experiment {cfg['experiment']!r}, not {experiment!r}", "experiment")
    cfg["experiment"] = experiment
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}", item)
        k, v = item.split("=", 1)
        _set_path(cfg, k.strip(), yaml.safe_load(v))
    for k in ("seed", "threads", "out_dir"):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    sec = cfg.get(_section_name(experiment))
    for k, v in vars(args).items():
        if k.startswith("p_") and v is not None:
            sec[k[2:]] = v
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    return cfg


def _require(sec: dict, name: str, key: str, cond, msg: str):
    if not cond(sec[key]):
        raise ConfigError(f"{name}.{key}: {msg}", f"{name}.{key}")


def integrator_config(cfg: dict) -> IntegratorConfig:
    ic = cfg["integrator"]
    try:
        return IntegratorConfig(rel_tol=float(ic["rel_tol"]), abs_tol=float(ic["abs_tol"]),
                                max_step=math.inf if ic["max_step"] is None else float(ic["max_step"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}", "integrator") from exc


def _coupling(sec: dict, name: str, delta: float) -> CouplingSpec:
    from .experiments import general_h

    fam = FAMILY_ALIASES.get(sec["family"])
    if fam is None:
        raise ConfigError(f"{name}.family must be one of {sorted(FAMILY_ALIASES)}", f"{name}.family")
    pattern = sec.get("pattern", "full")
    kw = {"indices": tuple(sec.get("indices") or ())}
    if fam == "general":
        return CouplingSpec.general(0.0, general_h, pattern, **kw)
    if fam == "sinusoidal":
        return CouplingSpec.sinusoidal(0.0, float(sec["c1"]), float(sec["offset"]), pattern, **kw)
    return CouplingSpec.kuramoto_sakaguchi(0.0, delta, pattern, **kw)


def _star(sec: dict, name: str) -> StarParams:
    try:
        return StarParams(float(sec["beta"]), float(sec["sigma"]), float(sec["delta"]), int(sec["n_leaves"]))
    except ContractError as exc:
        raise ConfigError(f"{name}: {exc}", name) from exc


# ---------------------------------------------------------------------------
# experiments

def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def run_simulate(cfg: dict, out: Path) -> list[str]:
    from .experiments import ChimeraCriterion, cycles, measure_lifetime, prepare_chimera_initial

    sec = cfg["simulate"]
    p = _star(sec, "simulate")
    _require(sec, "simulate", "epsilon", lambda v: v >= 0, "must be >= 0")
    cs = _coupling(sec, "simulate", p.delta).with_strength(float(sec["epsilon"]))
    init = prepare_chimera_initial(p, p, float(sec["jitter"]), int(cfg["seed"]))
    crit = ChimeraCriterion.for_params(float(sec["eta"]), p)
    res = measure_lifetime(init, p, p, cs, crit, cycles(float(sec["horizon_cycles"])), integrator_config(cfg),
                           samples_per_cycle=int(sec["samples_per_cycle"]), keep_record=True)
    res.record.to_csv(out / "simulate.csv")
    summary = {"tau": res.tau if not res.censored else None, "censored": res.censored, "side": res.side,
               "horizon": res.horizon}
    (out / "simulate_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _progress(f"simulate: tau={res.tau:.6g} side={res.side}")
    return ["simulate.csv", "simulate_summary.json"]


def run_diagram(cfg: dict, out: Path) -> list[str]:
    from .experiments import sync_diagram
    from .experiments.io import plot_svg, write_csv
    from .ws import NonexistenceError, critical_couplings, fixed_point_sync

    sec = cfg["diagram"]
    _require(sec, "diagram", "dsigma", lambda v: v > 0, "must be > 0")
    _require(sec, "diagram", "n_leaves", lambda v: int(v) >= 1, "must be >= 1")
    sb, sf = critical_couplings(float(sec["beta"]), float(sec["delta"]))
    try:
        fixed_point_sync(StarParams(float(sec["beta"]), float(sec["sigma_max"]), float(sec["delta"]), 1))
    except NonexistenceError as exc:
        raise ConfigError(f"diagram.sigma_max: backward branch needs a locked state ({exc})",
                          "diagram.sigma_max") from exc
    series = []
    files = []
    for direction in ("forward", "backward"):
        pts = sync_diagram(float(sec["beta"]), float(sec["delta"]), int(sec["n_leaves"]), direction,
                           sigma_max=float(sec["sigma_max"]), dsigma=float(sec["dsigma"]),
                           settle=float(sec["settle"]), measure=float(sec["measure"]), seed=int(cfg["seed"]),
                           jitter=float(sec["jitter"]), config=integrator_config(cfg))
        name = f"diagram_{direction}.csv"
        write_csv(out / name, [{"sigma": q.sigma, "r": q.r} for q in pts], ["sigma", "r"])
        files.append(name)
        series.append({"x": [q.sigma for q in pts], "y": [q.r for q in pts], "label": direction,
                       "style": "o-" if direction == "forward" else "s--"})
        _progress(f"diagram: {direction} done ({len(pts)} points)")
    plot_svg(out / "diagram.svg", series, xlabel="sigma", ylabel="r", vlines=(sb, sf),
             title=f"beta={sec['beta']}, delta={sec['delta']}, N={sec['n_leaves']}")
    return files + ["diagram.svg"]


def run_lifetime(cfg: dict, out: Path) -> list[str]:
    from .experiments import SweepResult, cycles, lifetime_sweep
    from .experiments.io import plot_svg, write_csv

    sec = cfg["lifetime"]
    p = _star(sec, "lifetime")
    _require(sec, "lifetime", "n_eps", lambda v: int(v) >= 2, "must be >= 2")
    _require(sec, "lifetime", "eps_min", lambda v: v > 0, "must be > 0")
    _require(sec, "lifetime", "eps_max", lambda v: v > sec["eps_min"], "must exceed eps_min")
    _require(sec, "lifetime", "seeds", lambda v: int(v) >= 1, "must be >= 1")
    eps = np.geomspace(float(sec["eps_min"]), float(sec["eps_max"]), int(sec["n_eps"]))
    cs = _coupling(sec, "lifetime", p.delta)
    horizon = cycles(float(sec["horizon_cycles"]))
    done: list[np.ndarray] = []

    def on_point(i, e, samples):
        done.append(np.array(samples))
        _progress(f"lifetime: eps={e:.6g} mean_tau={np.mean(np.where(np.isfinite(samples), samples, horizon)):.6g}"
                  f" censored={int(np.sum(~np.isfinite(samples)))}/{samples.size}")

    partial = None
    try:
        res = lifetime_sweep(p, p, cs, eps, int(sec["seeds"]), float(sec["eta"]), horizon, integrator_config(cfg),
                             seed=int(cfg["seed"]), jitter=float(sec["jitter"]), threads=int(cfg["threads"]),
                             samples_per_cycle=int(sec["samples_per_cycle"]), on_point=on_point)
    except IntegrationError as exc:
        if len(done) < 2:
            raise
        partial = exc
        res = SweepResult(eps[:len(done)], np.array(done), [[None] * int(sec["seeds"])] * len(done), horizon,
                          cs.family)
    rows = res.rows()
    write_csv(out / "lifetime.csv", rows, list(rows[0]))
    ok = ~res.flagged
    series = [{"x": res.epsilons, "y": res.mean, "yerr": res.std, "label": f"{res.family} (slope {res.slope:.3g})"}]
    anchor = (float(res.epsilons[ok][0]), float(res.mean[ok][0])) if ok.any() else None
    plot_svg(out / "lifetime.svg", series, xlabel="epsilon", ylabel="mean lifetime", logx=True, logy=True,
             guides=(-1.0, -2.0), guide_anchor=anchor)
    if partial is not None:
        raise PartialSweep(f"sweep stopped after {len(done)} of {eps.size} points: {partial}")
    return ["lifetime.csv", "lifetime.svg"]


def run_ws_check(cfg: dict, out: Path) -> list[str]:
    from .experiments import verify_z_alpha
    from .experiments.checks import ws_equivalence
    from .experiments.io import write_csv

    sec = cfg["ws_check"]
    rows = []
    for n in sec["n_values"]:
        p = StarParams(float(sec["beta"]), float(sec["sigma"]), float(sec["delta"]), int(n))
        for d in range(int(sec["draws"])):
            r = ws_equivalence(int(n), d, params=p, t_end=float(sec["t_end"]), seed=int(cfg["seed"]))
            rows.append({"n_leaves": n, "draw": d, "sup_error": r.sup_error})
        _progress(f"ws-check: N={n} worst={max(x['sup_error'] for x in rows if x['n_leaves'] == n):.3g}")
    write_csv(out / "ws_equivalence.csv", rows, ["n_leaves", "draw", "sup_error"])
    tab = verify_z_alpha(sec["z_alpha_n"], float(sec["r_disk"]), int(sec["z_alpha_samples"]), int(cfg["seed"]))
    write_csv(out / "z_alpha.csv", tab.rows(), ["n", "sup_deviation", "bound", "log_slope"])
    return ["ws_equivalence.csv", "z_alpha.csv"]


def run_averaging_check(cfg: dict, out: Path) -> list[str]:
    from .averaging import compare_averaged, fit_series_coefficients, p_function, q_function
    from .experiments.io import write_csv

    sec = cfg["averaging_check"]
    rows = []
    for b in sec["betas"]:
        p = StarParams(float(b), float(sec["sigma"]), float(sec["delta"]), 1)
        err, c = compare_averaged(p, float(sec["r0"]), float(sec["horizon_slow"]) * float(b))
        rows.append({"beta": b, "sup_error": err, "c_estimate": c})
        _progress(f"averaging-check: beta={b} c={c:.4g}")
    write_csv(out / "averaging.csv", rows, ["beta", "sup_error", "c_estimate"])
    xs = np.linspace(-0.9, 0.9, 181)
    ident = [{"x": x, "identity_residual": q_function(x) - 1 - 0.5 * x * p_function(x)} for x in xs]
    write_csv(out / "pq_identity.csv", ident, ["x", "identity_residual"])
    coef = fit_series_coefficients()
    write_csv(out / "series.csv", [{"k": i + 1, "coefficient": c} for i, c in enumerate(coef)], ["k", "coefficient"])
    return ["averaging.csv", "pq_identity.csv", "series.csv"]


def run_ba(cfg: dict, out: Path) -> list[str]:
    from .experiments import ba_chimera_run, generate_ba
    from .experiments.io import plot_svg

    sec = cfg["ba"]
    _require(sec, "ba", "m", lambda v: int(v) >= 1, "must be >= 1")
    _require(sec, "ba", "n_nodes", lambda v: int(v) > int(sec["m"]), "must exceed m")
    g = generate_ba(int(sec["n_nodes"]), int(sec["m"]), int(sec["graph_seed"]))
    rec = ba_chimera_run(g, g, float(sec["sigma"]), float(sec["epsilon"]), float(sec["delta"]),
                         float(sec["horizon"]), seed=int(cfg["seed"]), dt_obs=float(sec["dt_obs"]),
                         config=integrator_config(cfg))
    rec.to_csv(out / "ba.csv")
    plot_svg(out / "ba.svg", [{"x": rec.times, "y": rec.observables["r_plus"], "label": "r+", "style": "-"},
                              {"x": rec.times, "y": rec.observables["r_minus"], "label": "r-", "style": "-"}],
             xlabel="t", ylabel="r", title=f"sigma={sec['sigma']}, epsilon={sec['epsilon']}")
    _progress(f"ba: mean degree {g.mean_degree:.4g}, final r+={rec.observables['r_plus'][-1]:.3g}")
    return ["ba.csv", "ba.svg"]


RUNNERS = {"simulate": run_simulate, "diagram": run_diagram, "lifetime": run_lifetime,
           "ws-check": run_ws_check, "averaging-check": run_averaging_check, "ba": run_ba}


# ---------------------------------------------------------------------------
# self-test

def selftest() -> int:
    from .averaging import fit_series_coefficients
    from .core import StarParams as SP
    from .experiments import checks
    from .ws import closed_alpha_rhs, fixed_point_async

    rows = []

    def record(name, value, limit):
        rows.append((name, value, limit, bool(value < limit)))

    t0 = time.time()
    res = checks.fixed_point_residuals()
    record("sync fixed-point residual", res["sync"], 1e-10)
    record("async fixed-point residual", res["async"], 1e-10)
    p = SP(10.0, 1.0, 0.3, 8)
    record("closed alpha-equation at alpha^I", abs(closed_alpha_rhs(p, fixed_point_async(p).alpha_I)), 1e-10)
    record("Mobius group composition", checks.mobius_group_error(), 1e-10)
    record("Q = 1 + (x/2) P identity", checks.pq_identity_error(), 1e-10)
    coef = fit_series_coefficients()
    record("series coefficients 1, 3/4, 5/8", float(np.max(np.abs(coef - [1, 0.75, 0.625]))), 1e-6)
    record("WS equivalence, N=8", checks.ws_equivalence(8, 0).sup_error, 1e-6)
    elapsed = time.time() - t0
    print(f"starchimera self-test (config schema_version {SCHEMA_VERSION})")
    width = max(len(r[0]) for r in rows)
    for name, value, limit, ok in rows:
        print(f"  {'PASS' if ok else 'FAIL'}  {name:<{width}}  {value:.3e}  (< {limit:g})")
    print(f"  {sum(r[3] for r in rows)}/{len(rows)} passed in {elapsed:.1f} s")
    return 0 if all(r[3] for r in rows) else 1


# ---------------------------------------------------------------------------
# entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starchimera", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file (needs schema_version)")
    common.add_argument("--out-dir", dest="out_dir", help="directory for result files")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (default: available CPUs)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config field, e.g. --set lifetime.seeds=20")
    specific = {
        "simulate": ["beta", "sigma", "delta", ("n_leaves", int), "epsilon", "family", "horizon_cycles"],
        "diagram": ["beta", "delta", ("n_leaves", int), "sigma_max", "dsigma"],
        "lifetime": ["beta", "sigma", "delta", ("n_leaves", int), "family", "eps_min", "eps_max", ("n_eps", int),
                     ("seeds", int), "eta", "horizon_cycles"],
        "ws-check": [("draws", int), "t_end"],
        "averaging-check": ["sigma", "delta", "r0", "horizon_slow"],
        "ba": [("n_nodes", int), ("m", int), "sigma", "epsilon", "delta", "horizon"],
    }
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
        for item in specific[name]:
            key, typ = (item, float) if isinstance(item, str) else item
            if key == "family":
                typ = str
            sp.add_argument("--" + key.replace("_", "-"), dest="p_" + key, type=typ)
    sub.add_parser("selftest", help="fast invariant suite")
    return ap


def _fail(kind: str, exc: BaseException, out: Path | None, code: int) -> int:
    err = {"error": kind, "message": str(exc), "field": getattr(exc, "field", None), "exit_code": code}
    text = json.dumps(err, sort_keys=True)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n")
        except OSError:
            pass
    print(text, file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "selftest":
        return selftest()
    out = None
    try:
        cfg = build_config(args.command, args)
        out = Path(cfg["out_dir"])
        try:
            out.mkdir(parents=True, exist_ok=True)
            probe = out / ".write_probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output directory not writable: {exc}", "out_dir") from exc
        t0 = time.time()
        files = RUNNERS[args.command](cfg, out)
    except (ConfigError, ContractError, ValueError, TypeError) as exc:
        return _fail("validation", exc, out, 2)
    except IntegrationError as exc:
        return _fail("integration", exc, out, 3)
    except PartialSweep as exc:
        from .experiments.io import write_manifest

        write_manifest(out / "manifest.json", cfg, cfg["seed"], 0.0, ["lifetime.csv", "lifetime.svg"],
                       {"partial": True})
        return _fail("partial", exc, out, 4)
    from .experiments.io import write_manifest

    write_manifest(out / "manifest.json", cfg, cfg["seed"], time.time() - t0, files)
    return 0


if __name__ == "__main__":
    sys.exit(main())
