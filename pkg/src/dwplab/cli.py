"""Command-line entry point: ``dwplab <subcommand> [options]``.

Exit codes: 0 pass, 1 verification failure, 2 usage or config error,
3 infeasible ODE parameters.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import atlas as atlas_mod
from . import dwp as dwp_mod
from . import einstein, obata, ode
from .flows import MODEL_IDS, get_model, model_catalog
from .report import SamplingGrid, aggregate, to_csv, to_json, write_text

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

SEED_ENV = "DWP_LAB_SEED"


class ConfigError(ValueError):
    pass


# -- configuration ---------------------------------------------------------------------

DEFAULTS = {
    "models": {},
    "verify-connection": {"model": "hopf-s3", "profile": "sinh-cosh", "coeffs": None, "points": 100, "tol": 1e-7, "seed": 0},
    "verify-kaehler": {"model": "hopf-s3", "profile": "sinh-cosh", "coeffs": None, "t_count": 5, "x_count": 20, "tol": 1e-7, "seed": 0},
    "ricci-report": {"model": "hopf-s3", "profile": "sinh-cosh", "coeffs": None, "points": 20, "tol": 1e-6, "seed": 0},
    "einstein-scan": {"model": "hopf-s3", "profile": "sinh-cosh", "coeffs": None, "C": -6.0, "t_min": 0.1, "t_max": 3.0, "t_count": 30, "x": None, "tol": 1e-7, "seed": 0},
    "ode-classify": {"n": 2, "eps": -1, "c": 0.0, "D": 0.0, "rho0": 1.0},
    "ode-integrate": {"n": 2, "eps": -1, "c": 0.0, "D": 0.0, "rho0": 1.0, "t_min": -5.0, "t_max": 5.0, "samples": 201},
    "ode-atlas": {"n": list(atlas_mod.DEFAULT_N), "eps": list(atlas_mod.DEFAULT_EPS), "c": list(atlas_mod.DEFAULT_C), "D": list(atlas_mod.DEFAULT_D), "horizon": 5.0, "jobs": None},
    "obata-check": {"model": "hopf-s3", "profile": "sinh-cosh", "coeffs": None, "potential": "rho2", "points": 20, "shear": None, "tol": 1e-7, "seed": 0},
    "flow-reconstruct": {"model": "hopf-s3", "profile": "sinh-cosh", "coeffs": None, "level": None, "s_min": -0.5, "s_max": 0.5, "seeds": 4, "samples": 11, "shear": None, "tol": 1e-5, "seed": 0},
}


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list:
    return [int(v) for v in _floats(text)]


def effective_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the JSON config file, then the seed env var, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    if "seed" in cfg and os.environ.get(SEED_ENV):
        try:
            cfg["seed"] = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _profile(cfg: dict) -> dwp_mod.WarpProfile:
    try:
        return dwp_mod.preset(cfg["profile"], cfg.get("coeffs"))
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def _model(cfg: dict):
    try:
        return get_model(cfg["model"])
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def _product(cfg: dict):
    return dwp_mod.build(_model(cfg), _profile(cfg))


def _grid(cfg: dict) -> SamplingGrid:
    return SamplingGrid((1,), seed=int(cfg.get("seed", 0)))


def _emit(out: Optional[str], text: str) -> None:
    if out:
        write_text(out, text)


def _verdict_exit(reports) -> int:
    summary = aggregate(reports)
    for line in summary.lines():
        print(line)
    print(("PASS" if summary.verdict else "FAIL") + f" worst={summary.worst} ratio={summary.worst_ratio:.3e}")
    return EXIT_OK if summary.verdict else EXIT_FAIL


# -- subcommands ------------------------------------------------------------------------


def cmd_models(cfg: dict, args) -> int:
    cat = [{"id": mid, "dim": fl.dim, "n": fl.n, "label": fl.label} for mid, fl in zip(MODEL_IDS, model_catalog())]
    for entry in cat:
        print(f"{entry['id']}: dim={entry['dim']} n={entry['n']}")
    _emit(args.out, to_json({"config": cfg, "models": cat}))
    return EXIT_OK


def cmd_verify_connection(cfg: dict, args) -> int:
    prod = _product(cfg)
    reps = dwp_mod.verify_connection_identities(prod, count=int(cfg["points"]), seed=int(cfg["seed"]), tol=float(cfg["tol"]))
    _emit(args.out, to_json({"config": cfg, "reports": reps}))
    return _verdict_exit(reps)


def cmd_verify_kaehler(cfg: dict, args) -> int:
    prod = _product(cfg)
    rng = _grid(cfg).rng(0)
    pts = prod.sample(int(cfg["t_count"]), int(cfg["x_count"]), rng)
    defects = [dwp_mod.kaehler_defect(prod, P) for P in pts]
    cond = dwp_mod.kaehler_conditions(prod, points=pts, seed=int(cfg["seed"]), tol=float(cfg["tol"]))
    from .report import VerificationReport

    rep = VerificationReport.from_residuals("kaehler_defect", defects, float(cfg["tol"]), f"nabla J on {prod.ambient_chart.label}", int(cfg["seed"]))
    _emit(args.out, to_json({"config": cfg, "defect": rep, "conditions": cond}))
    return _verdict_exit([rep])


def cmd_ricci_report(cfg: dict, args) -> int:
    from .report import VerificationReport

    prod = _product(cfg)
    pts = prod.random_points(int(cfg["points"]), _grid(cfg).rng(0))
    rows = {"vertical": [], "reeb": [], "transverse": [], "mixed": []}
    for P in pts:
        b = einstein.ricci_blocks(prod, P)
        rows["vertical"].append(b.vertical_rel_error)
        rows["reeb"].append(b.reeb_rel_error)
        rows["transverse"].append(b.transverse_rel_error)
        rows["mixed"].append(b.mixed_max)
    tol = float(cfg["tol"])
    prov = f"Ricci blocks on {prod.ambient_chart.label}"
    reps = [VerificationReport.from_residuals(f"ricci_{k}", v, 1e-8 if k == "mixed" else tol, prov, int(cfg["seed"])) for k, v in rows.items()]
    _emit(args.out, to_json({"config": cfg, "reports": reps}))
    return _verdict_exit(reps)


def cmd_einstein_scan(cfg: dict, args) -> int:
    from .report import VerificationReport

    prod = _product(cfg)
    x = cfg["x"]
    if x is None:
        x = [0.5 * (a + b) for a, b in prod.base.chart.bounds]
        cfg["x"] = x
    ts = np.linspace(float(cfg["t_min"]), float(cfg["t_max"]), int(cfg["t_count"]))
    rows = einstein.einstein_scan(prod, float(cfg["C"]), ts, x)
    _emit(args.out, to_csv(("t", "eq1", "eq2", "c"), rows))
    tol = float(cfg["tol"])
    cs = [r[3] for r in rows]
    reps = [
        VerificationReport.from_residuals("eq1", [abs(r[1]) for r in rows], tol, "Einstein system", int(cfg["seed"])),
        VerificationReport.from_residuals("eq2", [r[2] for r in rows], tol, "Einstein system", int(cfg["seed"])),
        VerificationReport("c_drift", max(cs) - min(cs), max(cs) - min(cs), 1e-9, len(cs), "Einstein system", int(cfg["seed"])),
    ]
    return _verdict_exit(reps)


def _ode_params(cfg: dict) -> ode.OdeParams:
    try:
        return ode.OdeParams(int(cfg["n"]), int(cfg["eps"]), float(cfg["c"]), float(cfg["D"]), float(cfg["rho0"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_ode_classify(cfg: dict, args) -> int:
    p = _ode_params(cfg)
    reg = ode.classify(p)
    print(f"regime={reg.kind.value} closed_form={reg.closed_form.value} interval=({reg.interval[0] if reg.interval else ''}, {reg.interval[1] if reg.interval else ''}) source={reg.source}")
    text = to_json({"config": cfg, "regime": reg})
    _emit(args.out, text)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_ode_integrate(cfg: dict, args) -> int:
    p = _ode_params(cfg)
    span = (float(cfg["t_min"]), float(cfg["t_max"]))
    tr = ode.integrate(p, span)
    ts, rho, rhop = tr.resample(int(cfg["samples"]))
    with np.errstate(over="ignore"):
        drift = np.abs(p.z(rho, rhop) - p.c / p.n - p.D * rho ** (-2 * p.n))
    _emit(args.out, to_csv(("t", "rho", "rho_prime", "z_drift"), zip(ts, rho, rhop, drift)))
    print(f"left={tr.left.kind.value}@{tr.left.t:.12g} ({tr.left_reason}) right={tr.right.kind.value}@{tr.right.t:.12g} ({tr.right_reason}) z_drift={tr.z_drift():.3e} samples={tr.t.size}")
    return EXIT_OK


def cmd_ode_atlas(cfg: dict, args) -> int:
    configs = atlas_mod.default_grid(cfg["n"], cfg["eps"], cfg["c"], cfg["D"])
    jobs = cfg["jobs"] if cfg["jobs"] is not None else (os.cpu_count() or 1)
    entries = atlas_mod.run_atlas(configs, float(cfg["horizon"]), int(jobs))
    bad = [e for e in entries if not e.agree]
    _emit(args.out, to_json({"config": {**cfg, "jobs": jobs}, "entries": entries, "disagreements": len(bad)}))
    print(f"configs={len(entries)} disagreements={len(bad)} max_z_drift={max(e.z_drift for e in entries):.3e}")
    for e in bad:
        print(f"  n={e.n} eps={e.eps} c={e.c} D={e.D} rho0={e.rho0}: {'; '.join(e.notes)}")
    return EXIT_OK if not bad else EXIT_FAIL


def _obata_target(cfg: dict, prod):
    if cfg.get("shear"):
        return obata.sheared(prod, cfg["shear"])
    return prod


def _potential(name: str, prod):
    if name == "rho2":
        return obata.rho_squared(prod)
    if name == "rho":
        return obata.rho_potential(prod)
    if name == "t":
        return obata.t_potential()
    raise ConfigError(f"unknown potential {name!r} (rho2, rho, t)")


def cmd_obata_check(cfg: dict, args) -> int:
    prod = _product(cfg)
    target = _obata_target(cfg, prod)
    u = _potential(cfg["potential"], target)
    pts = prod.random_points(int(cfg["points"]), _grid(cfg).rng(0))
    if target is not prod:
        pts = np.array([target.chart_point(P) for P in pts])
    reps = obata.obata_reports(target, u, pts, float(cfg["tol"]), expect_rho_squared=cfg["potential"] == "rho2", seed=int(cfg["seed"]))
    extra = {}
    if cfg["profile"] == "exp" and cfg["potential"] == "rho2" and not cfg.get("shear"):
        extra["exponential_case"] = obata.exponential_case_check(prod, pts)
    levels = [obata.oneill_from_mu(target, u, P) for P in pts[: min(5, len(pts))]]
    _emit(args.out, to_json({"config": cfg, "reports": reps, "level_flow": levels, **extra}))
    return _verdict_exit(reps)


def cmd_flow_reconstruct(cfg: dict, args) -> int:
    prod = _product(cfg)
    target = _obata_target(cfg, prod)
    u = obata.rho_squared(target)
    level = cfg["level"]
    if level is None:
        lo, hi = prod.profile.grid_interval()
        level = float(prod.profile.rho.value(0.5 * (lo + hi)) ** 2)
        cfg["level"] = level
    rec = obata.flow_reconstruct(
        target, u, float(level), (float(cfg["s_min"]), float(cfg["s_max"])),
        n_seeds=int(cfg["seeds"]), n_samples=int(cfg["samples"]), rng_seed=int(cfg["seed"]),
    )
    _emit(args.out, to_csv(rec.HEADER, rec.rows()))
    return _verdict_exit(rec.reports(tol_metric=float(cfg["tol"])))


COMMANDS = {
    "models": cmd_models,
    "verify-connection": cmd_verify_connection,
    "verify-kaehler": cmd_verify_kaehler,
    "ricci-report": cmd_ricci_report,
    "einstein-scan": cmd_einstein_scan,
    "ode-classify": cmd_ode_classify,
    "ode-integrate": cmd_ode_integrate,
    "ode-atlas": cmd_ode_atlas,
    "obata-check": cmd_obata_check,
    "flow-reconstruct": cmd_flow_reconstruct,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dwplab", description="Kaehler doubly-warped products: verification and ODE tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON file with option values (flags take precedence)")
        p.add_argument("--out", help="write the JSON/CSV output here")
        if seed:
            p.add_argument("--seed", type=int, help=f"sampling seed (also via {SEED_ENV})")
        return p

    def geometry(p):
        p.add_argument("--model", choices=MODEL_IDS)
        p.add_argument("--profile", choices=dwp_mod.PRESETS)
        p.add_argument("--coeffs", type=_floats, help="a,b,c,d for custom-poly-exp")
        p.add_argument("--tol", type=float)

    common(sub.add_parser("models", help="list the model flows"), seed=False)

    p = common(sub.add_parser("verify-connection", help="check the connection identities on random points"))
    geometry(p)
    p.add_argument("--points", type=int)

    p = common(sub.add_parser("verify-kaehler", help="Kaehler defect and the three algebraic conditions"))
    geometry(p)
    p.add_argument("--t-count", dest="t_count", type=int)
    p.add_argument("--x-count", dest="x_count", type=int)

    p = common(sub.add_parser("ricci-report", help="numeric ambient Ricci vs its block closed form"))
    geometry(p)
    p.add_argument("--points", type=int)

    p = common(sub.add_parser("einstein-scan", help="CSV of (t, eq1, eq2, c) at a base point"))
    geometry(p)
    p.add_argument("--C", type=float)
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-count", dest="t_count", type=int)
    p.add_argument("--x", type=_floats, help="base point, comma separated")

    for name, helptext in (("ode-classify", "regime of the warping ODE"), ("ode-integrate", "integrate the warping ODE")):
        p = common(sub.add_parser(name, help=helptext), seed=False)
        p.add_argument("--n", type=int)
        p.add_argument("--eps", type=int, choices=(-1, 0, 1))
        p.add_argument("--c", type=float)
        p.add_argument("--D", type=float)
        p.add_argument("--rho0", type=float)
        if name == "ode-integrate":
            p.add_argument("--t-min", dest="t_min", type=float)
            p.add_argument("--t-max", dest="t_max", type=float)
            p.add_argument("--samples", type=int)

    p = common(sub.add_parser("ode-atlas", help="classify a parameter grid and cross-check by integration"), seed=False)
    p.add_argument("--n", type=_ints)
    p.add_argument("--eps", type=_ints)
    p.add_argument("--c", type=_floats)
    p.add_argument("--D", type=_floats)
    p.add_argument("--horizon", type=float)
    p.add_argument("--jobs", type=int)

    p = common(sub.add_parser("obata-check", help="Hessian eigenstructure of a potential"))
    geometry(p)
    p.add_argument("--potential", choices=("rho2", "rho", "t"))
    p.add_argument("--points", type=int)
    p.add_argument("--shear", type=_floats, help="use coordinates x = y + b t^2 with this b")

    p = common(sub.add_parser("flow-reconstruct", help="rebuild the metric from the normal flow of a level set"))
    geometry(p)
    p.add_argument("--level", type=float)
    p.add_argument("--s-min", dest="s_min", type=float)
    p.add_argument("--s-max", dest="s_max", type=float)
    p.add_argument("--seeds", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--shear", type=_floats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args.command, args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ode.InfeasibleInitialCondition, ode.NoSolution) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (obata.LevelSetEmpty, obata.CriticalPointError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
