"""Command-line front end.

Subcommands:
    theta solve        run the constrained minimizer, write an OptimizerReport
    theta bruteforce   grid oracle for the first-order case
    theta closed-form  print the known exact value when one exists
    certify            frame / unitarity certificate for a measure JSON file
    const sobolev      sharp gradient constant
    const biharmonic   sharp second-order constant (n >= 5)
    const improved     moment-constrained improvement of the gradient constant
    bubble sweep       Rayleigh-quotient sweep, CSV + optional JSON/figure
    bubble identity-check   closed-form limit identity over an (n, p) grid
    config print-schema     JSON description of accepted configuration keys

Exit codes: 0 success, 1 numerical non-convergence, 2 usage/config error.

Every option can also come from a JSON config file (--config FILE, keys named
after the long flags with dashes replaced by underscores); explicit flags win
on conflict.  Reports embed the effective config, seed, library version and
wall clock.  theta-solve sweep tables use the CSV row form
    n,m,theta,support,energy,residual,converged,closed_form,gap
with '.' decimals, ',' separators and '\\n' line ends.  Output files are
written atomically (temp file + rename).  THETA_EXTREMAL_THREADS caps solver
parallelism.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import time
from pathlib import Path


from . import __version__
from .measures import DiscreteMeasure, circle_certificate, gram_certificate_m2, is_feasible
from .bubbles import (
    DEFAULT_DELTA,
    limit_identity_check,
    rayleigh_sweep,
    sweep_rows_to_csv,
)
from .sobolev import SobolevParams, improved_constant, sharp_biharmonic, sharp_sobolev
from .solver import (
    OptimizerReport,
    SolverConfig,
    bruteforce_theta_m1,
    closed_form_theta,
    minimal_support,
    minimize_theta,
)


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2 without partial output."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write_text(path: Path, data: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        raise ConfigError(f"output directory does not exist: {path.parent}")
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data)
    os.replace(tmp, path)


def _atomic_render(render, payload, path: Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp" + path.suffix)
    render(payload, tmp)
    os.replace(tmp, path)


def _report_envelope(command: str, config: dict, result: dict, started: float) -> dict:
    return {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "library_version": __version__,
        "wall_clock_seconds": time.time() - started,
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "result": result,
    }


def _dump_report(envelope: dict) -> str:
    return json.dumps(envelope, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# config-file handling: flags win, then file values, then declared defaults

_SCHEMA: dict[str, dict[str, dict]] = {}


def _declare_options(command: str, **options):
    _SCHEMA[command] = options
    return options


def _resolve(args: argparse.Namespace, command: str) -> dict:
    options = _SCHEMA[command]
    file_values = {}
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_values) - set(options)
        if unknown:
            raise ConfigError(f"unknown config keys for '{command}': {sorted(unknown)}")
    resolved = {}
    for name, meta in options.items():
        value = getattr(args, name, None)
        if value is None and name in file_values:
            value = file_values[name]
        if value is None:
            value = meta.get("default")
        if value is None and meta.get("required"):
            raise ConfigError(f"missing required option --{name.replace('_', '-')}")
        if value is not None:
            caster = meta.get("type", str)
            try:
                value = caster(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for --{name.replace('_', '-')}: {exc}")
        resolved[name] = value
    return resolved


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    vals = [float(v) for v in str(text).split(",") if v.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


# ---------------------------------------------------------------------------
# theta subcommands

_declare_options(
    "theta_solve",
    n=dict(type=int, required=True, help="sphere dimension"),
    m=dict(type=int, required=True, help="moment degree"),
    theta=dict(type=float, required=True, help="energy exponent in (0,1)"),
    support=dict(type=int, help="support size N (omit to sweep the standard range)"),
    restarts=dict(type=int, default=20),
    seed=dict(type=int, default=0),
    max_outer_iters=dict(type=int, default=12),
    penalty_init=dict(type=float, default=10.0),
    penalty_growth=dict(type=float, default=10.0),
    step_size=dict(type=float, default=0.05),
    grad_tol=dict(type=float, default=1e-9),
    residual_tol=dict(type=float, default=1e-8),
    merge_tol=dict(type=float, default=1e-6),
    out=dict(type=str, help="report JSON path"),
    csv=dict(type=str, help="per-support CSV table path (sweep mode)"),
    plot=dict(type=str, help="figure path (PNG)"),
)


def _config_for(values: dict, support: int) -> SolverConfig:
    return SolverConfig(
        support_size=support,
        restarts=values["restarts"],
        max_outer_iters=values["max_outer_iters"],
        penalty_init=values["penalty_init"],
        penalty_growth=values["penalty_growth"],
        step_size=values["step_size"],
        grad_tol=values["grad_tol"],
        residual_tol=values["residual_tol"],
        seed=values["seed"],
        merge_tol=values["merge_tol"],
    )


def cmd_theta_solve(args) -> int:
    started = time.time()
    values = _resolve(args, "theta_solve")
    n, m, theta = values["n"], values["m"], values["theta"]
    if not 0.0 < theta < 1.0:
        raise ConfigError(f"theta must lie in (0,1), got {theta}")
    if n < 1 or m < 1:
        raise ConfigError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    lower = minimal_support(n, m)
    if values["support"] is not None and values["support"] < lower:
        raise ConfigError(
            f"support {values['support']} below the dimension-forced minimum {lower}"
        )

    if values["support"] is not None:
        supports = [values["support"]]
    else:
        supports = list(range(lower, 2 * (n + 2) + 1))

    reports: list[OptimizerReport] = []
    for support in supports:
        reports.append(minimize_theta(n, m, theta, _config_for(values, support)))
    best = reports[0]
    for rep in reports[1:]:
        better = (rep.converged and not best.converged) or (
            rep.converged == best.converged and rep.energy < best.energy
        )
        if better:
            best = rep

    if values["csv"]:
        lines = [OptimizerReport.csv_header()]
        lines += [r.csv_row() for r in reports]
        _atomic_write_text(Path(values["csv"]), "\n".join(lines) + "\n")
    if values["out"]:
        envelope = _report_envelope("theta solve", values, best.to_json_dict(), started)
        _atomic_write_text(Path(values["out"]), _dump_report(envelope))
    if values["plot"]:
        from .plots import render_solve_report

        _atomic_render(render_solve_report, best, Path(values["plot"]))

    cf = "unknown" if best.closed_form is None else _fmt(best.closed_form)
    gap = "n/a (conjectural upper bound)" if best.gap is None else _fmt(best.gap)
    print(
        f"theta({m},{theta:g},{n}) <= {_fmt(best.energy)} "
        f"(closed form {cf}, gap {gap}, residual {_fmt(best.residual_norm)})"
    )
    return 0 if best.converged else 1


_declare_options(
    "theta_bruteforce",
    theta=dict(type=float, required=True),
    max_support=dict(type=int, default=3),
    grid_steps=dict(type=int, default=100),
    out=dict(type=str),
)


def cmd_theta_bruteforce(args) -> int:
    started = time.time()
    values = _resolve(args, "theta_bruteforce")
    try:
        value = bruteforce_theta_m1(values["theta"], values["max_support"], values["grid_steps"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    result = {"value": value, "closed_form": closed_form_theta(1, values["theta"], 1)}
    if values["out"]:
        _atomic_write_text(Path(values["out"]),
                           _dump_report(_report_envelope("theta bruteforce", values, result, started)))
    print(f"bruteforce theta(1,{values['theta']:g},*) = {_fmt(value)} "
          f"(closed form {_fmt(result['closed_form'])})")
    return 0


_declare_options(
    "theta_closed_form",
    n=dict(type=int, required=True),
    m=dict(type=int, required=True),
    theta=dict(type=float, required=True),
)


def cmd_theta_closed_form(args) -> int:
    values = _resolve(args, "theta_closed_form")
    try:
        value = closed_form_theta(values["m"], values["theta"], values["n"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    if value is None:
        print(f"theta({values['m']},{values['theta']:g},{values['n']}): unknown "
              "(no closed form; use 'theta solve' for a conjectural upper bound)")
    else:
        print(f"theta({values['m']},{values['theta']:g},{values['n']}) = {_fmt(value)}")
    return 0


# ---------------------------------------------------------------------------
# certify

_declare_options(
    "certify",
    measure=dict(type=str, required=True, help="measure JSON file"),
    m=dict(type=int, required=True),
    theta=dict(type=float, default=0.5),
    tol=dict(type=float, default=1e-8),
    out=dict(type=str),
)


def cmd_certify(args) -> int:
    started = time.time()
    values = _resolve(args, "certify")
    try:
        measure = DiscreteMeasure.from_json(Path(values["measure"]).read_text())
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed measure file {values['measure']}: {exc}")
    m, theta, tol = values["m"], values["theta"], values["tol"]
    if not 0.0 < theta < 1.0:
        raise ConfigError(f"theta must lie in (0,1), got {theta}")

    feasible, residual = is_feasible(measure, m, tol)
    if measure.n == 1:
        cert = circle_certificate(measure, m, tolerance=tol)
        deviation = cert.max_unitarity_deviation
        parseval = ((m + 1) * measure.weights).tolist()
    elif m == 2:
        cert = gram_certificate_m2(measure, tolerance=tol)
        deviation = cert.max_orthonormality_deviation
        parseval = cert.parseval_sums.tolist()
    else:
        raise ConfigError(
            f"no certificate available for m={m} on S^{measure.n} (only m=2, or any m on S^1)"
        )

    result = {
        "n": measure.n,
        "m": m,
        "support_size": measure.support_size,
        "deviation": deviation,
        "parseval_sums": parseval,
        "residual_norm": residual,
        "feasible": feasible,
        "applicable": cert.applicable,
        "lower_bound": cert.lower_bound(theta) if cert.applicable else None,
        "theta": theta,
    }
    if values["out"]:
        _atomic_write_text(Path(values["out"]),
                           _dump_report(_report_envelope("certify", values, result, started)))

    print(f"deviation {_fmt(deviation)}; residual {_fmt(residual)}")
    print("parseval sums:", " ".join(_fmt(v) for v in parseval))
    if cert.applicable:
        print(f"certified lower bound at theta={theta:g}: {_fmt(cert.lower_bound(theta))}")
    else:
        print("certificate refused (deviation above tolerance or support too small); "
              "no lower bound claimed")
    return 0


# ---------------------------------------------------------------------------
# constants

_declare_options("const_sobolev", n=dict(type=int, required=True), p=dict(type=float, required=True))


def cmd_const_sobolev(args) -> int:
    values = _resolve(args, "const_sobolev")
    try:
        params = SobolevParams(n=values["n"], p=values["p"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    s = sharp_sobolev(params)
    print(f"S({params.n},{params.p:g}) = {_fmt(s)}")
    if params.p == 2.0:
        import math

        from .sphere import surface_area

        oracle = math.sqrt(4.0 / (params.n * (params.n - 2)) * surface_area(params.n) ** (-2.0 / params.n))
        print(f"p=2 reduction cross-check delta = {_fmt(abs(s - oracle))}")
    return 0


_declare_options("const_biharmonic", n=dict(type=int, required=True))


def cmd_const_biharmonic(args) -> int:
    values = _resolve(args, "const_biharmonic")
    try:
        value = sharp_biharmonic(values["n"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    print(f"S2({values['n']},2,2) = {_fmt(value)}")
    return 0


_declare_options(
    "const_improved",
    n=dict(type=int, required=True),
    p=dict(type=float, required=True),
    m=dict(type=int, required=True),
)


def cmd_const_improved(args) -> int:
    values = _resolve(args, "const_improved")
    try:
        params = SobolevParams(n=values["n"], p=values["p"])
        value = improved_constant(params, values["m"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    print(f"improved constant (n={values['n']}, p={values['p']:g}, m={values['m']}) = {_fmt(value)}")
    return 0


# ---------------------------------------------------------------------------
# bubble subcommands

_declare_options(
    "bubble_sweep",
    n=dict(type=int, required=True),
    p=dict(type=float, required=True),
    eps=dict(type=_float_list, required=True, help="comma-separated eps list"),
    delta=dict(type=float, default=DEFAULT_DELTA),
    tau=dict(type=float),
    seed=dict(type=int, default=0),
    out=dict(type=str, required=True, help="CSV output path"),
    report=dict(type=str, help="JSON report path"),
    plot=dict(type=str, help="figure path (PNG)"),
)


def cmd_bubble_sweep(args) -> int:
    started = time.time()
    values = _resolve(args, "bubble_sweep")
    try:
        params = SobolevParams(n=values["n"], p=values["p"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    eps_list = values["eps"]
    for e in eps_list:
        if not 0.0 < e < values["delta"]:
            raise ConfigError(f"eps values must lie in (0, delta), got {e}")

    rows = rayleigh_sweep(params, eps_list, delta=values["delta"], tau=values["tau"])
    _atomic_write_text(Path(values["out"]), sweep_rows_to_csv(rows))
    if values["report"]:
        result = {
            "rows": [
                {
                    "eps": r.eps, "I_pstar": r.I_pstar, "I_p": r.I_p, "I_grad": r.I_grad,
                    "moment_residual": r.moment_residual, "R": r.R, "target": r.target,
                    "rel_err": r.rel_err,
                    "uncorrected_moment_residual": r.uncorrected_moment_residual,
                    "corrected_I_pstar": r.corrected_I_pstar,
                    "corrected_I_p": r.corrected_I_p,
                    "corrected_I_grad": r.corrected_I_grad,
                    "corrected_R": r.corrected_R,
                    "beta_max": r.beta_max, "c1": r.c1,
                    "floor_margin": r.floor_margin, "tau": r.tau, "delta": r.delta,
                }
                for r in rows
            ],
        }
        _atomic_write_text(Path(values["report"]),
                           _dump_report(_report_envelope("bubble sweep", values, result, started)))
    if values["plot"]:
        from .plots import render_sweep

        _atomic_render(render_sweep, rows, Path(values["plot"]))

    final = rows[-1]
    print(f"sweep complete: rel_err at eps={final.eps:g} is {_fmt(final.rel_err)} "
          f"(target {_fmt(final.target)})")
    return 0


_declare_options(
    "bubble_identity_check",
    n=dict(type=_int_list, default="2,3,4,5,6"),
    p=dict(type=_float_list, default="1.2,1.5,2"),
    tol=dict(type=float, default=1e-10),
)


def cmd_bubble_identity_check(args) -> int:
    values = _resolve(args, "bubble_identity_check")
    worst = 0.0
    count = 0
    for n in values["n"]:
        for p in values["p"]:
            if not 1.0 < p < n:
                continue
            disc = limit_identity_check(SobolevParams(n=n, p=p))
            worst = max(worst, disc)
            count += 1
            print(f"n={n} p={p:g}: discrepancy {_fmt(disc)}")
    if count == 0:
        raise ConfigError("no valid (n, p) pairs in the requested grid")
    print(f"max discrepancy {_fmt(worst)} over {count} pairs "
          f"({'OK' if worst < values['tol'] else 'ABOVE TOLERANCE'})")
    return 0 if worst < values["tol"] else 1


# ---------------------------------------------------------------------------
# config schema

def cmd_config_print_schema(_args) -> int:
    schema = {}
    for command, options in sorted(_SCHEMA.items()):
        schema[command] = {
            name: {
                "type": meta.get("type", str).__name__,
                "required": bool(meta.get("required")),
                "default": meta.get("default"),
                **({"help": meta["help"]} if "help" in meta else {}),
            }
            for name, meta in options.items()
        }
    print(json.dumps(schema, indent=2, sort_keys=True, default=str))
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def _add_common(parser: argparse.ArgumentParser, command: str) -> None:
    parser.add_argument("--config", help="JSON config file (flags win on conflict)")
    for name, meta in _SCHEMA[command].items():
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, dest=name, default=None, help=meta.get("help"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="theta-extremal",
        description="Extremal discrete measures on spheres and sharp constants",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="group", required=True)

    theta = sub.add_parser("theta", help="constrained energy minimization")
    theta_sub = theta.add_subparsers(dest="action", required=True)
    for action, handler in (
        ("solve", cmd_theta_solve),
        ("bruteforce", cmd_theta_bruteforce),
        ("closed-form", cmd_theta_closed_form),
    ):
        sp = theta_sub.add_parser(action)
        _add_common(sp, f"theta_{action.replace('-', '_')}")
        sp.set_defaults(handler=handler)

    certify = sub.add_parser("certify", help="certificates for measure files")
    _add_common(certify, "certify")
    certify.set_defaults(handler=cmd_certify)

    const = sub.add_parser("const", help="sharp constants")
    const_sub = const.add_subparsers(dest="action", required=True)
    for action, handler in (
        ("sobolev", cmd_const_sobolev),
        ("biharmonic", cmd_const_biharmonic),
        ("improved", cmd_const_improved),
    ):
        sp = const_sub.add_parser(action)
        _add_common(sp, f"const_{action}")
        sp.set_defaults(handler=handler)

    bubble = sub.add_parser("bubble", help="test-family asymptotics")
    bubble_sub = bubble.add_subparsers(dest="action", required=True)
    for action, handler in (
        ("sweep", cmd_bubble_sweep),
        ("identity-check", cmd_bubble_identity_check),
    ):
        sp = bubble_sub.add_parser(action)
        _add_common(sp, f"bubble_{action.replace('-', '_')}")
        sp.set_defaults(handler=handler)

    config = sub.add_parser("config", help="configuration helpers")
    config_sub = config.add_subparsers(dest="action", required=True)
    sp = config_sub.add_parser("print-schema")
    sp.set_defaults(handler=cmd_config_print_schema)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
