"""Command-line front end.

Subcommands: classify, minimise, flow, certify, bounds, sweep. Options
come from an optional JSON config file plus flags; flags override file
values and the merged configuration is echoed into every report for
provenance. Reports are JSON (timestamps live in a separate "meta"
field so reruns are byte-comparable); particle and trace data are CSV.

Exit codes: 0 success, 2 invalid configuration, 3 computational failure
(e.g. no instability witness), 4 certification ran but some check
failed. Diagnostics go to stderr as JSON lines.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io as iomod
from .certify import CertifyOptions, WitnessOptions, certify_all, theoretical_bound
from .energy import ParticleConfiguration, discrete_energy
from .errors import (
    ComputationError,
    ConfigurationError,
    IntminError,
    NoInstabilityWitnessError,
    PotentialValidationError,
)
from .minimise import Backtracking, FixedStep, MinimiseOptions, flow_simulate, minimise_discrete
from .potential import PotentialSpec, build_profile, validate_hypotheses
from .stability import (
    QuadratureOptions,
    WitnessScanOptions,
    classify,
    minimiser_existence,
    morse_criterion,
)

_POTENTIAL_KEYS = {"family", "params", "dimension"}
_POWER_PARAMS = {"a", "b"}
_MORSE_PARAMS = {"cr", "ca", "lr", "la"}
_MINIMISE_KEYS = {
    "n", "restarts", "max_iters", "grad_tol", "ball_radius", "recentre",
    "seed", "init_radius", "step", "armijo_c", "shrink",
}
_FLOW_KEYS = {"dt", "t_final", "n", "init_radius", "seed", "particles"}
_QUAD_KEYS = {"abs_tol", "rel_tol", "limit"}
_WITNESS_KEYS = {"steps", "base_radius", "tolerance", "refine"}
_CERTIFY_KEYS = {"el_tolerance", "weight_floor", "gap_slack", "diameter_slack", "particles"}
_SWEEP_KEYS = {"family", "dimension", "cr", "ca", "lr", "la"}
_TOP_KEYS = {
    "potential", "minimise", "flow", "quadrature", "witness", "certify",
    "sweep", "output_dir", "formats",
}

_SECTION_KEYS = {
    "potential": _POTENTIAL_KEYS,
    "minimise": _MINIMISE_KEYS,
    "flow": _FLOW_KEYS,
    "quadrature": _QUAD_KEYS,
    "witness": _WITNESS_KEYS,
    "certify": _CERTIFY_KEYS,
    "sweep": _SWEEP_KEYS,
    "formats": {"json", "csv"},
}


def _diag(level: str, message: str, **extra) -> None:
    print(json.dumps({"level": level, "message": message, **extra}), file=sys.stderr)


def _validate_config(config: dict) -> None:
    unknown = set(config) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    for section, keys in _SECTION_KEYS.items():
        if section not in config:
            continue
        sub = config[section]
        if not isinstance(sub, dict):
            raise ConfigurationError(f"section {section!r} must be an object")
        bad = set(sub) - keys
        if bad:
            raise ConfigurationError(
                f"unknown keys in section {section!r}: {sorted(bad)}"
            )
    pot = config.get("potential")
    if pot is not None and "params" in pot:
        fam = pot.get("family")
        allowed = {"power_law": _POWER_PARAMS, "morse": _MORSE_PARAMS,
                   "gaussian_bump": set()}.get(fam)
        if allowed is not None:
            bad = set(pot["params"]) - allowed
            if bad:
                raise ConfigurationError(
                    f"unknown parameters for {fam}: {sorted(bad)}"
                )


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        elif value is not None:
            out[key] = value
    return out


def _load_config(args) -> dict:
    config: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    flags: dict = {}
    pot: dict = {}
    params: dict = {}
    for key in ("a", "b", "cr", "ca", "lr", "la"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if getattr(args, "potential", None):
        pot["family"] = args.potential
    if params:
        pot["params"] = params
    if getattr(args, "dim", None):
        pot["dimension"] = args.dim
    if pot:
        flags["potential"] = pot
    for section, names in (
        ("minimise", ("n", "restarts", "max_iters", "grad_tol", "ball_radius",
                      "seed", "init_radius")),
        ("flow", ("dt", "t_final", "particles")),
        ("certify", ("el_tolerance", "particles")),
        ("witness", ("steps",)),
    ):
        sub = {}
        for name in names:
            value = getattr(args, name, None)
            if value is not None:
                sub[name] = value
        if sub:
            flags[section] = sub
    if getattr(args, "output_dir", None):
        flags["output_dir"] = args.output_dir
    merged = _merge(config, flags)
    # flow shares the sampling knobs with minimise when given as flags
    if merged.get("flow") is not None:
        for name in ("n", "init_radius", "seed"):
            value = getattr(args, name, None)
            if value is not None:
                merged["flow"][name] = value
    _validate_config(merged)
    return merged


def _potential_from_config(config: dict) -> PotentialSpec:
    pot = config.get("potential")
    if not pot:
        raise ConfigurationError("no potential specified (--potential or config file)")
    missing = {"family", "dimension"} - set(pot)
    if missing:
        raise ConfigurationError(f"potential section missing {sorted(missing)}")
    return PotentialSpec(pot["family"], int(pot["dimension"]), dict(pot.get("params", {})))


def _quad_options(config: dict) -> QuadratureOptions:
    sub = config.get("quadrature", {})
    return QuadratureOptions(
        abs_tol=float(sub.get("abs_tol", 1e-9)),
        rel_tol=float(sub.get("rel_tol", 1e-9)),
        limit=int(sub.get("limit", 200)),
    )


def _witness_options(config: dict) -> WitnessOptions:
    sub = config.get("witness", {})
    scan = WitnessScanOptions(
        steps=int(sub.get("steps", 20)),
        base_radius=sub.get("base_radius"),
        tolerance=float(sub.get("tolerance", 1e-9)),
    )
    return WitnessOptions(
        scan=scan,
        quadrature=_quad_options(config),
        refine=bool(sub.get("refine", True)),
    )


def _minimise_options(config: dict) -> MinimiseOptions:
    sub = config.get("minimise", {})
    if "step" in sub:
        rule = FixedStep(float(sub["step"]))
    else:
        rule = Backtracking(
            c=float(sub.get("armijo_c", 1e-4)),
            shrink=float(sub.get("shrink", 0.5)),
        )
    return MinimiseOptions(
        n=int(sub.get("n", 64)),
        restarts=int(sub.get("restarts", 8)),
        max_iters=int(sub.get("max_iters", 2000)),
        grad_tol=float(sub.get("grad_tol", 1e-8)),
        step_rule=rule,
        ball_radius=sub.get("ball_radius"),
        recentre=bool(sub.get("recentre", True)),
        seed=int(sub.get("seed", 0)),
        init_radius=sub.get("init_radius"),
    )


def _out_dir(config: dict) -> Path:
    return Path(config.get("output_dir", "."))


def _report_payload(config: dict, body: dict) -> dict:
    return {
        "config": config,
        "meta": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "tool": "intmin"},
        **body,
    }


def _cmd_classify(args) -> int:
    config = _load_config(args)
    spec = _potential_from_config(config)
    profile = build_profile(spec)
    report = classify(profile, _quad_options(config))
    if report.verdict == "undetermined":
        report = minimiser_existence(
            profile, report, _witness_options(config).scan, _quad_options(config)
        )
    payload = _report_payload(
        config,
        {
            "report": report.as_dict(),
            "admissibility": validate_hypotheses(profile).as_dict(),
        },
    )
    iomod.write_json_report(_out_dir(config) / "classify.json", payload)
    ival = report.integral_value
    istr = "n/a" if ival is None else f"{ival:.6g}"
    print(
        f"classify: {spec.family} d={spec.dimension} -> {report.verdict} "
        f"({report.reason}), integral={istr}, existence={report.existence_verdict}"
    )
    return 0


def _write_minimisation(config, result, out_dir: Path) -> None:
    iomod.write_particles_csv(out_dir / "particles.csv", result.config)
    iomod.write_trace_csv(out_dir / "trace.csv", result.trace)
    body = {
        "result": {
            "energy": result.energy,
            "grad_norm": result.grad_norm,
            "converged": result.converged,
            "iterations": result.iterations,
            "diameter": result.diameter,
            "restarts_summary": result.restarts_summary,
            "n": result.config.n,
            "dimension": result.config.dimension,
        }
    }
    iomod.write_json_report(out_dir / "minimise.json", _report_payload(config, body))


def _cmd_minimise(args) -> int:
    config = _load_config(args)
    spec = _potential_from_config(config)
    profile = build_profile(spec)
    options = _minimise_options(config)
    result = minimise_discrete(profile, options)
    out = _out_dir(config)
    _write_minimisation(config, result, out)
    print(
        f"minimise: {spec.family} d={spec.dimension} n={options.n} -> "
        f"energy={result.energy:.8g}, diameter={result.diameter:.6g}, "
        f"converged={result.converged}"
    )
    return 0


def _cmd_flow(args) -> int:
    config = _load_config(args)
    spec = _potential_from_config(config)
    profile = build_profile(spec)
    sub = config.get("flow", {})
    if "dt" not in sub or "t_final" not in sub:
        raise ConfigurationError("flow needs 'dt' and 't_final'")
    if sub.get("particles"):
        config0 = iomod.read_particles_csv(sub["particles"])
    else:
        n = int(sub.get("n", 64))
        radius = float(sub.get("init_radius", max(4.0 * (profile.monotone_radius or 0.0), 4.0)))
        rng = np.random.default_rng(int(sub.get("seed", 0)))
        g = rng.standard_normal((n, profile.dimension))
        g /= np.maximum(np.linalg.norm(g, axis=1), 1e-300)[:, None]
        points = g * (radius * rng.random(n) ** (1.0 / profile.dimension))[:, None]
        config0 = ParticleConfiguration.uniform(points)
    flow = flow_simulate(profile, config0, float(sub["dt"]), float(sub["t_final"]))
    out = _out_dir(config)
    iomod.write_particles_csv(out / "particles.csv", flow.result.config)
    iomod.write_trace_csv(out / "trace.csv", flow.result.trace)
    body = {
        "result": {
            "energy": flow.result.energy,
            "grad_norm": flow.result.grad_norm,
            "steps": flow.result.iterations,
            "diameter": flow.result.diameter,
            "com_drift": flow.com_drift,
            "rejected_steps": flow.rejected_steps,
        },
        "config": config,
        "meta": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "tool": "intmin"},
    }
    iomod.write_json_report(out / "flow.json", body)
    print(
        f"flow: {spec.family} d={spec.dimension} -> energy={flow.result.energy:.8g}, "
        f"diameter={flow.result.diameter:.6g}, com_drift={flow.com_drift:.3g}"
    )
    return 0


def _cmd_bounds(args) -> int:
    config = _load_config(args)
    spec = _potential_from_config(config)
    profile = build_profile(spec)
    bounds = theoretical_bound(profile, _witness_options(config))
    payload = _report_payload(config, {"bounds": bounds.as_dict()})
    iomod.write_json_report(_out_dir(config) / "bounds.json", payload)
    print(
        f"bounds: {spec.family} d={spec.dimension} -> "
        f"diameter_bound={bounds.diameter_bound:.6g}, "
        f"mass_floor={bounds.mass_floor:.6g}, mass_radius={bounds.mass_radius:.6g}"
    )
    return 0


def _cmd_certify(args) -> int:
    config = _load_config(args)
    spec = _potential_from_config(config)
    profile = build_profile(spec)
    sub = config.get("certify", {})
    path = sub.get("particles")
    if not path:
        raise ConfigurationError("certify needs 'particles' (CSV path)")
    particle_config = iomod.read_particles_csv(path)
    if particle_config.dimension != profile.dimension:
        raise ConfigurationError(
            f"particle dimension {particle_config.dimension} does not match "
            f"potential dimension {profile.dimension}"
        )
    options = CertifyOptions(
        el_tolerance=float(sub.get("el_tolerance", 1e-3)),
        weight_floor=float(sub.get("weight_floor", 0.0)),
        gap_slack=float(sub.get("gap_slack", 1e-9)),
        diameter_slack=float(sub.get("diameter_slack", 1e-9)),
        witness=_witness_options(config),
    )
    report = certify_all(particle_config, profile, options)
    payload = _report_payload(config, {"certificate": report.as_dict()})
    iomod.write_json_report(_out_dir(config) / "certify.json", payload)
    status = "all checks passed" if report.all_passed else "FAILED: " + "; ".join(
        name for name, ok in report.passes.items() if not ok
    )
    print(f"certify: {spec.family} d={spec.dimension} n={particle_config.n} -> {status}")
    if not report.all_passed:
        for v in report.violations:
            _diag("warning", v)
        return 4
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    sub = config.get("sweep")
    if not sub:
        raise ConfigurationError("sweep needs a 'sweep' section or flags")
    family = sub.get("family", "morse")
    if family != "morse":
        raise ConfigurationError("sweep currently supports only the morse family")
    dimension = int(sub.get("dimension", 2))
    grids = {}
    for key in ("cr", "ca", "lr", "la"):
        raw = sub.get(key, [1.0])
        if isinstance(raw, (int, float)):
            raw = [raw]
        grids[key] = [float(v) for v in raw]
    cells = math.prod(len(v) for v in grids.values())
    if cells > 10**4:
        raise ConfigurationError(f"sweep grid has {cells} cells; limit is 10^4")
    quad = _quad_options(config)
    lines = ["cr,ca,lr,la,dimension,integral,verdict,criterion,agree"]
    for cr, ca, lr, la in itertools.product(
        grids["cr"], grids["ca"], grids["lr"], grids["la"]
    ):
        spec = PotentialSpec("morse", dimension, {"cr": cr, "ca": ca, "lr": lr, "la": la})
        profile = build_profile(spec)
        report = classify(profile, quad)
        criterion = morse_criterion(cr, ca, lr, la, dimension)
        agree = criterion == (report.verdict == "unstable")
        ival = report.integral_value
        lines.append(
            f"{cr!r},{ca!r},{lr!r},{la!r},{dimension},"
            f"{'' if ival is None else repr(ival)},{report.verdict},"
            f"{str(criterion).lower()},{str(agree).lower()}"
        )
    out = _out_dir(config) / "sweep.csv"
    iomod.atomic_write_text(out, "\n".join(lines) + "\n")
    print(f"sweep: morse d={dimension}, {cells} cells -> {out}")
    return 0


_COMMANDS = {
    "classify": _cmd_classify,
    "minimise": _cmd_minimise,
    "flow": _cmd_flow,
    "certify": _cmd_certify,
    "bounds": _cmd_bounds,
    "sweep": _cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intmin",
        description="Minimise and certify nonlocal pairwise interaction energies",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--potential", choices=["power_law", "morse", "gaussian_bump"])
        p.add_argument("--dim", type=int)
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--cr", type=float)
        p.add_argument("--ca", type=float)
        p.add_argument("--lr", type=float)
        p.add_argument("--la", type=float)
        if name in ("minimise",):
            p.add_argument("--n", type=int)
            p.add_argument("--restarts", type=int)
            p.add_argument("--max-iters", dest="max_iters", type=int)
            p.add_argument("--grad-tol", dest="grad_tol", type=float)
            p.add_argument("--ball-radius", dest="ball_radius", type=float)
            p.add_argument("--seed", type=int)
            p.add_argument("--init-radius", dest="init_radius", type=float)
        if name == "flow":
            p.add_argument("--dt", type=float)
            p.add_argument("--t-final", dest="t_final", type=float)
            p.add_argument("--n", type=int)
            p.add_argument("--init-radius", dest="init_radius", type=float)
            p.add_argument("--seed", type=int)
            p.add_argument("--particles")
        if name == "certify":
            p.add_argument("--particles")
            p.add_argument("--el-tolerance", dest="el_tolerance", type=float)
        if name == "bounds":
            p.add_argument("--steps", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except (ConfigurationError, PotentialValidationError, json.JSONDecodeError) as exc:
        _diag("error", str(exc), kind=type(exc).__name__)
        return 2
    except FileNotFoundError as exc:
        _diag("error", str(exc), kind="FileNotFoundError")
        return 2
    except NoInstabilityWitnessError as exc:
        _diag("error", str(exc), kind="NoInstabilityWitnessError")
        return 3
    except (ComputationError, ValueError) as exc:
        _diag("error", str(exc), kind=type(exc).__name__)
        return 3
    except IntminError as exc:
        _diag("error", str(exc), kind=type(exc).__name__)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
