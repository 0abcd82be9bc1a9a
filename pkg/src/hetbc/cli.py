"""Command-line front end: ``hetbc <subcommand> [options]``.

Subcommands
-----------
rate      normal-approximation rate over a grid of blocklengths and SNRs
ed-bound  received-symbol counts with and without early decoding, per h2
region    one rate pair for a given error split and power allocation
sweep     weighted sum-rate solver over an n2, h2 or omega grid
simulate  Monte-Carlo decoder or cross-term simulation

Parameters come from, in increasing priority: built-in defaults, a
``--config`` file, ``HETBC_<NAME>`` environment variables, and command-line
flags. A config file is either a JSON object or ``key = value`` lines (``#``
starts a comment). Unknown keys are rejected.

Numeric lists accept ``a,b,c`` or the inclusive range ``start:stop:step``.

Exit codes: 0 success, 1 infeasible everywhere, 2 invalid input,
3 simulation size guard.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

from .core import capacity, db_to_linear, dispersion, second_order_rate
from .ed import ChannelConfig, latency_table
from .montecarlo import GuardError, simulate_cross_term, simulate_ed
from .optimize import SolveSpec, SweepResult, solution_row, solve, trace_rate_region
from .region import (
    ErrorBudget,
    PowerAllocation,
    ed_region_ipc,
    ed_region_spc,
    ed_tin_snr_gain_db,
    hnoma_point,
    tin_rate_user2,
)

ENV_PREFIX = "HETBC_"

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_GUARD = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid user input; maps to exit code 2."""


# --------------------------------------------------------------------------
# parameter schema
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # "float", "int", "str", "floats", "ints", "bool"
    default: object = None
    help: str = ""
    choices: tuple | None = None
    db: bool = False  # converted from dB when --db is given


_CHANNEL = [
    Param("h1", "float", 1.0, "weak user's channel gain", db=True),
    Param("h2", "float", 10.0, "strong user's channel gain", db=True),
    Param("n1", "int", 1024, "weak user's blocklength"),
    Param("n2", "int", 1024, "strong user's blocklength"),
    Param("eps", "float", 2e-6, "system error target"),
    Param("p1", "float", 8.0, "weak user's power (individual constraint)", db=True),
    Param("p2", "float", 0.2, "strong user's power (individual constraint)", db=True),
    Param("pt", "float", None, "total power (sum constraint)", db=True),
]
_BUDGET = [
    Param("eps1", "float", None, "weak user's error probability"),
    Param("eps_sic1", "float", None, "first SIC step error probability"),
    Param("eps_sic2", "float", None, "second SIC step error probability"),
    Param("eps_h11", "float", None, "HNOMA first sub-block error probability"),
    Param("eps_h12", "float", None, "HNOMA second sub-block error probability"),
    Param("eps2", "float", None, "TIN error probability"),
]
_COMMON = [
    Param("format", "str", "csv", "output format", ("csv", "json")),
    Param("out", "str", None, "output path (default stdout)"),
    Param("seed", "int", 0, "random seed"),
    Param("db", "bool", False, "read gains, powers and SNRs in dB"),
]

SCHEMA = {
    "rate": _COMMON + [
        Param("n", "ints", [1024], "blocklength(s)"),
        Param("snr", "floats", [8.0], "SNR value(s)", db=True),
        Param("eps", "float", 1e-5, "target error probability"),
    ],
    "ed-bound": _COMMON + [p for p in _CHANNEL if p.name not in ("n2", "pt")] + [
        Param("h2", "floats", [10.0], "strong user's gain(s)", db=True),
        Param("n1", "int", 2048, "weak user's blocklength"),
        Param("backoff", "float", 0.0, "power backoff"),
        Param("eps1", "float", None, "weak user's error probability (default eps/3)"),
        Param("eps_sic1", "float", None, "first SIC step error probability (default eps/3)"),
        Param("tin_axis", "str", None, "add the TIN comparison along this axis", ("p2", "h2")),
    ],
    "region": _COMMON + _CHANNEL + _BUDGET + [
        Param("scheme", "str", "ED", "coding scheme", ("ED", "HNOMA", "TIN")),
        Param("power_mode", "str", "IPC", "power constraint", ("IPC", "SPC")),
        Param("backoff", "float", 0.0, "power backoff (individual constraint)"),
        Param("p11_bar", "float", None, "overlap-segment power (sum constraint)", db=True),
        Param("p12_bar", "float", None, "tail-segment power (sum constraint)", db=True),
        Param("p2_bar", "float", None, "strong user's power (sum constraint)", db=True),
    ],
    "sweep": _COMMON + _CHANNEL + [
        Param("problem", "str", "p2-ipc", "solver", ("p1-ipc", "p2-ipc", "p1-spc", "p2-spc")),
        Param("omega", "float", 0.5, "weight on the weak user's rate"),
        Param("n2", "ints", None, "strong user's blocklength grid"),
        Param("h2", "floats", None, "strong user's gain grid", db=True),
        Param("omega_count", "int", None, "trace a rate region with this many weights"),
        Param("pareto", "bool", True, "keep only non-dominated points when tracing"),
        Param("eps_step", "float", None, "error-split grid step (default eps/100)"),
        Param("power_grid", "int", 32, "levels per power axis (sum constraint)"),
        Param("backoff", "float", None, "power backoff (default 1% of the smallest power)"),
        Param("budget_mode", "str", "equality", "error-budget handling", ("equality", "inequality")),
        Param("n_jobs", "int", 1, "worker threads"),
    ],
    "simulate": _COMMON + [p for p in _CHANNEL if p.name != "pt"] + [
        Param("mode", "str", "ed", "what to simulate", ("ed", "cross-term")),
        Param("m1", "int", 16, "weak user's codebook size"),
        Param("m2", "int", 16, "strong user's codebook size"),
        Param("n2_used", "int", None, "symbols used for the early decode (default n2)"),
        Param("trials", "int", 1000, "number of trials"),
        Param("backoff", "float", 0.0, "power backoff for both users"),
        Param("backoff2", "float", None, "strong user's backoff, if different"),
        Param("delta", "float", 0.5, "cross-term threshold per symbol"),
        Param("p11_bar", "float", 8.0, "weak user's power for the cross term"),
        Param("p2_bar", "float", 0.2, "strong user's power for the cross term"),
    ],
}


def _schema(cmd) -> dict:
    out = {}
    for p in SCHEMA[cmd]:
        out[p.name] = p  # later entries override earlier ones
    return out


def parse_list(text, cast):
    """``"a,b,c"`` or inclusive ``"start:stop:step"`` into a list."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"range needs step > 0 and stop >= start, got {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + i * step for i in range(count)]
    else:
        vals = [float(x) for x in text.split(",") if x.strip()]
    if cast is int:
        if any(v != int(v) for v in vals):
            raise ConfigError(f"expected integers, got {text!r}")
        return [int(v) for v in vals]
    return vals


def _convert(p: Param, raw, where: str):
    try:
        if p.kind == "bool":
            if isinstance(raw, bool):
                return raw
            s = str(raw).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if p.kind == "str":
            v = str(raw)
            if p.choices and v not in p.choices:
                raise ConfigError(f"{where}: {p.name} must be one of {', '.join(p.choices)}, got {v!r}")
            return v
        if p.kind in ("floats", "ints"):
            cast = int if p.kind == "ints" else float
            if isinstance(raw, (list, tuple)):
                return [_convert(Param(p.name, p.kind[:-1]), v, where) for v in raw]
            return parse_list(raw, cast)
        if p.kind == "int":
            f = float(raw)
            if f != int(f):
                raise ValueError(raw)
            return int(f)
        return float(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: cannot read {p.name}={raw!r} as {p.kind}") from None


def read_config_file(path, cmd) -> dict:
    """Parse a JSON or ``key = value`` config file, validating every key."""
    schema = _schema(cmd)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out = {}
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        lines = text.splitlines()
        for key, raw in data.items():
            lineno = next((i + 1 for i, ln in enumerate(lines) if f'"{key}"' in ln), 1)
            where = f"{path}:{lineno}"
            if key not in schema:
                raise ConfigError(f"{where}: unknown key {key!r} for '{cmd}'")
            out[key] = _convert(schema[key], raw, where)
        return out
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{i}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in schema:
            raise ConfigError(f"{where}: unknown key {key!r} for '{cmd}'")
        out[key] = _convert(schema[key], raw, where)
    return out


def resolve(cmd, args: argparse.Namespace, environ=None) -> dict:
    """Merge defaults, config file, environment and flags into one dict."""
    environ = os.environ if environ is None else environ
    schema = _schema(cmd)
    vals = {name: p.default for name, p in schema.items()}
    given = set()
    if getattr(args, "config", None):
        from_file = read_config_file(args.config, cmd)
        vals.update(from_file)
        given.update(from_file)
    for name, p in schema.items():
        env = ENV_PREFIX + name.upper()
        if env in environ:
            vals[name] = _convert(p, environ[env], f"environment {env}")
            given.add(name)
    for name, p in schema.items():
        raw = getattr(args, name, None)
        if raw is not None:
            vals[name] = _convert(p, raw, f"--{name.replace('_', '-')}")
            given.add(name)
    if vals.get("db"):
        # built-in defaults are linear; only user-supplied values are in dB
        for name, p in schema.items():
            if p.db and name in given and vals[name] is not None:
                v = vals[name]
                vals[name] = [float(db_to_linear(x)) for x in v] if isinstance(v, list) else float(db_to_linear(v))
    return vals


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _channel(vals, **over) -> ChannelConfig:
    keys = ("h1", "h2", "n1", "n2", "eps", "p1", "p2", "pt")
    kw = {k: vals.get(k) for k in keys}
    kw.update(over)
    if kw["n2"] is None:
        kw["n2"] = kw["n1"]
    try:
        return ChannelConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_rate(vals) -> tuple[SweepResult, bool]:
    eps = vals["eps"]
    if not (0.0 < eps < 1.0):
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    rows = []
    for n in vals["n"]:
        if n < 1:
            raise ConfigError("blocklength must be >= 1")
        for snr in vals["snr"]:
            if snr < 0:
                raise ConfigError("snr must be nonnegative")
            rows.append({
                "n": n, "snr": snr, "eps": eps,
                "capacity": capacity(snr), "dispersion": dispersion(snr),
                "rate": second_order_rate(n, snr, eps),
            })
    return SweepResult(rows, {"command": "rate"}), True


def cmd_ed_bound(vals) -> tuple[SweepResult, bool]:
    eps = vals["eps"]
    if not (0.0 < eps < 1.0):
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    eps1 = eps / 3.0 if vals["eps1"] is None else vals["eps1"]
    sic1 = eps / 3.0 if vals["eps_sic1"] is None else vals["eps_sic1"]
    if not (0 < eps1 and 0 < sic1 and eps1 + sic1 < eps):
        raise ConfigError("need eps1, eps_sic1 > 0 with eps1 + eps_sic1 < eps")
    p1, p2, bo = vals["p1"], vals["p2"], vals["backoff"]
    if not (0.0 <= bo < min(p1, p2)):
        raise ConfigError("backoff must lie in [0, min(p1, p2))")
    for h2 in vals["h2"]:
        if not h2 >= vals["h1"] > 0:
            raise ConfigError(f"need h2 >= h1 > 0, got h2={h2}")
    rows = []
    for r in latency_table(vals["h1"], vals["h2"], p1, p2, eps, vals["n1"], bo, (eps1, sic1)):
        row = {"h1": vals["h1"], "h2": r["h2"], "p1": p1, "p2": p2, "eps": eps, "n1": vals["n1"],
               "backoff": bo, "eps1": eps1, "eps_sic1": sic1}
        row.update({k: v for k, v in r.items() if k != "h2"})
        if vals["tin_axis"]:
            g = ed_tin_snr_gain_db(vals["h1"], r["h2"], p1, p2, eps, vals["n1"], vals["tin_axis"], bo, (eps1, sic1))
            row.update({"r2_ed": g["r_ed"], "r2_tin": g["r_tin"], "tin_gain_db": g["gain_db"]})
        rows.append(row)
    return SweepResult(rows, {"command": "ed-bound"}), any(r["feasible"] for r in rows)


def cmd_region(vals) -> tuple[SweepResult, bool]:
    cfg = _channel(vals)
    scheme, mode = vals["scheme"], vals["power_mode"]
    b = {k: vals[k] for k in ("eps1", "eps_sic1", "eps_sic2", "eps_h11", "eps_h12", "eps2")}
    try:
        if scheme == "ED" and all(b[k] is None for k in ("eps1", "eps_sic1", "eps_sic2")):
            eq = ErrorBudget.equal_ed(cfg.eps)
            b.update(eps1=eq.eps1, eps_sic1=eq.eps_sic1, eps_sic2=eq.eps_sic2)
        if scheme == "HNOMA" and all(b[k] is None for k in ("eps_h11", "eps_h12", "eps_sic1", "eps_sic2")):
            # a quarter each for the two sub-blocks and the two SIC steps,
            # so both products in the budget give eps / 2
            q = 1.0 - math.sqrt(1.0 - cfg.eps / 2.0)
            b.update(eps_h11=q, eps_h12=q, eps_sic1=q, eps_sic2=q)
        if scheme == "TIN" and b["eps2"] is None:
            b["eps2"] = cfg.eps
        budget = ErrorBudget(**b)
        if mode == "SPC":
            if cfg.pt is None or None in (vals["p11_bar"], vals["p12_bar"], vals["p2_bar"]):
                raise ConfigError("sum-power mode needs pt, p11_bar, p12_bar and p2_bar")
            alloc = PowerAllocation(vals["p11_bar"], vals["p12_bar"], vals["p2_bar"])
        else:
            if cfg.p1 is None or cfg.p2 is None:
                raise ConfigError("individual-power mode needs p1 and p2")
            alloc = PowerAllocation.from_ipc(cfg, vals["backoff"])
        if scheme == "ED":
            point = ed_region_spc(cfg, budget, alloc) if mode == "SPC" else ed_region_ipc(cfg, budget, vals["backoff"])
            r1, r2, feasible, raw1, raw2 = point.r1, point.r2, point.feasible, point.r1_raw, point.r2_raw
        elif scheme == "HNOMA":
            hcfg = cfg if mode == "SPC" else cfg.replace(pt=None)
            point = hnoma_point(hcfg, budget, alloc)
            r1, r2, feasible, raw1, raw2 = point.r1, point.r2, point.feasible, point.r1_raw, point.r2_raw
        else:
            raw2 = tin_rate_user2(cfg.n2, cfg.h2, alloc.p11_bar, alloc.p2_bar, budget.eps2)
            r1, raw1, r2, feasible = math.nan, math.nan, max(raw2, 0.0), True
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    row = {k: vals[k] for k in ("h1", "h2", "n1", "n2", "eps", "p1", "p2", "pt")}
    row["n2"] = cfg.n2
    row.update({"scheme": scheme, "power_mode": mode, "backoff": vals["backoff"]})
    row.update(budget.as_dict())
    row.update({"p11_bar": alloc.p11_bar, "p12_bar": alloc.p12_bar, "p2_bar": alloc.p2_bar})
    row.update({"r1": r1, "r2": r2, "r1_raw": raw1, "r2_raw": raw2, "feasible": feasible})
    return SweepResult([row], {"command": "region"}), bool(feasible)


def cmd_sweep(vals) -> tuple[SweepResult, bool]:
    scheme = "HNOMA" if vals["problem"].startswith("p1") else "ED"
    mode = vals["problem"].split("-")[1].upper()
    n2_grid, h2_grid = vals["n2"], vals["h2"]
    if n2_grid is not None and h2_grid is not None and len(n2_grid) > 1 and len(h2_grid) > 1:
        raise ConfigError("sweep over either n2 or h2, not both")
    base = _channel(vals, n2=(n2_grid or [vals["n1"]])[0], h2=(h2_grid or [10.0])[0])
    try:
        template = SolveSpec(
            cfg=base, omega=vals["omega"], scheme=scheme, power_mode=mode,
            eps_step=vals["eps_step"], power_grid=vals["power_grid"],
            backoff_delta=vals["backoff"], budget_mode=vals["budget_mode"], n_jobs=vals["n_jobs"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if vals["omega_count"] is not None:
        if vals["omega_count"] < 2:
            raise ConfigError("omega_count must be >= 2")
        result = trace_rate_region(template, vals["omega_count"], pareto=vals["pareto"])
        return result, bool(result.rows)

    rows = []
    for n2 in (n2_grid or [base.n2]):
        for h2 in (h2_grid or [base.h2]):
            try:
                spec = SolveSpec(
                    cfg=base.replace(n2=n2, h2=h2), omega=template.omega, scheme=scheme, power_mode=mode,
                    eps_step=template.eps_step, power_grid=template.power_grid,
                    backoff_delta=template.backoff_delta, budget_mode=template.budget_mode, n_jobs=template.n_jobs,
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            rows.append(solution_row(spec, solve(spec)))
    return SweepResult(rows, {"command": "sweep"}), any(r["feasible"] for r in rows)


def cmd_simulate(vals) -> tuple[SweepResult, bool]:
    if vals["mode"] == "cross-term":
        try:
            rep = simulate_cross_term(vals["n2"], vals["p11_bar"], vals["p2_bar"], vals["delta"],
                                      vals["trials"], vals["seed"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        row = {"mode": "cross-term", "n2": vals["n2"], "p11_bar": vals["p11_bar"], "p2_bar": vals["p2_bar"],
               "delta": vals["delta"], "trials": vals["trials"], "seed": vals["seed"],
               "probability": rep.probability, "low": rep.low, "high": rep.high, "bound": rep.bound,
               "within_bound": rep.within_bound}
        return SweepResult([row], {"command": "simulate"}), True
    cfg = _channel(vals)
    bo2 = vals["backoff"] if vals["backoff2"] is None else vals["backoff2"]
    try:
        rep = simulate_ed(cfg, vals["m1"], vals["m2"], vals["n2_used"], vals["trials"], vals["seed"],
                          (vals["backoff"], bo2))
    except GuardError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    row = {"mode": "ed", "h1": cfg.h1, "h2": cfg.h2, "n1": cfg.n1, "n2": cfg.n2, "p1": cfg.p1, "p2": cfg.p2,
           "m1": vals["m1"], "m2": vals["m2"], "n2_used": vals["n2_used"] or cfg.n2,
           "backoff": vals["backoff"], "backoff2": bo2, "seed": vals["seed"]}
    row.update(rep.as_dict())
    return SweepResult([row], {"command": "simulate"}), True


HELP = {
    "rate": "normal-approximation rate over blocklength and SNR grids",
    "ed-bound": "received symbols needed with and without early decoding",
    "region": "rate pair of one scheme at a fixed error split and allocation",
    "sweep": "weighted sum-rate solver over n2, h2 or weight grids",
    "simulate": "Monte-Carlo decoder or cross-term simulation",
}

COMMANDS = {
    "rate": cmd_rate,
    "ed-bound": cmd_ed_bound,
    "region": cmd_region,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetbc",
        description="Finite-blocklength rates and early decoding for a two-user Gaussian broadcast channel.",
        epilog=f"Environment variables {ENV_PREFIX}<NAME> (e.g. {ENV_PREFIX}N1=2048) override config files.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, params in SCHEMA.items():
        sp = sub.add_parser(cmd, help=HELP[cmd])
        sp.add_argument("--config", help="JSON or key = value file")
        seen = set()
        for p in reversed(params):
            if p.name in seen:
                continue
            seen.add(p.name)
            flag = "--" + p.name.replace("_", "-")
            if p.kind == "bool":
                sp.add_argument(flag, dest=p.name, nargs="?", const="true", default=None,
                                metavar="BOOL", help=p.help)
            else:
                sp.add_argument(flag, dest=p.name, default=None, help=f"{p.help} (default {p.default})")
    return parser


def _emit(result: SweepResult, fmt: str, out: str | None):
    text = result.to_json() if fmt == "json" else result.to_csv()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        vals = resolve(args.command, args)
        result, any_feasible = COMMANDS[args.command](vals)
    except ConfigError as exc:
        print(f"hetbc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except GuardError as exc:
        print(f"hetbc {args.command}: refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    _emit(result, vals["format"], vals["out"])
    if not any_feasible:
        print(f"hetbc {args.command}: no feasible point", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
