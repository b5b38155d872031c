"""sigaccess command line: design, simulate/sweep, decode-demo.

Exit codes: 0 success, 2 bad configuration, 3 infeasible design,
4 a simulation run failed.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import fields

from sigaccess import designer
from sigaccess.designer import InfeasibleDesignError
from sigaccess.report import demo_text, record, run_demo, write_csv
from sigaccess.simulator.config import ScenarioConfig
from sigaccess.simulator.sweep import SweepError, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 4

# config-file and flag name -> ScenarioConfig field
_ALIASES = {"lambda": "lam"}
# keys that accept comma-separated lists (cross product)
_LIST_KEYS = ("protocol", "lam")
_OPTIONAL_INT = ("L", "confirm")


class ConfigError(ValueError):
    pass


def _field_types() -> dict[str, type]:
    defaults = ScenarioConfig()
    return {f.name: type(getattr(defaults, f.name)) for f in fields(ScenarioConfig)}


def _convert(key: str, text: str):
    text = text.strip()
    if key in _OPTIONAL_INT:
        return None if text.lower() in ("", "none") else int(text)
    kind = _field_types()[key]
    if kind is int:
        return int(text, 0) if text.lower().startswith("0x") else int(text)
    if kind is float:
        return float(text)
    return text


def _parse_values(key: str, text: str) -> list:
    parts = text.split(",") if key in _LIST_KEYS else [text]
    if any(not p.strip() for p in parts):
        raise ValueError("empty value")
    return [_convert(key, p) for p in parts]


def read_config(path: str) -> dict[str, list]:
    """Flat ``key = value`` file; '#' starts a comment. Keys are config field names."""
    out: dict[str, list] = {}
    names = set(ScenarioConfig.field_names())
    try:
        fh = open(path, encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from e
    with fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = _ALIASES.get(key, key)
            if key not in names:
                raise ConfigError(f"{path}:{n}: unknown key {key!r}")
            try:
                out[key] = _parse_values(key, value)
            except ValueError as e:
                raise ConfigError(f"{path}:{n}: bad value for {key}: {value!r} ({e})") from e
    return out


def build_configs(settings: dict[str, list]) -> list[ScenarioConfig]:
    """Cross product over the list-valued keys, protocol outermost."""
    base = {k: v[0] for k, v in settings.items() if k not in _LIST_KEYS}
    protocols = settings.get("protocol", [ScenarioConfig.protocol])
    lams = settings.get("lam", [ScenarioConfig.lam])
    out = []
    for proto, lam in itertools.product(protocols, lams):
        try:
            out.append(ScenarioConfig(protocol=proto, lam=lam, **base))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid scenario (protocol={proto}, lambda={lam}): {e}") from e
    return out


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    for name in ScenarioConfig.field_names():
        flag = "lambda" if name == "lam" else name
        p.add_argument(f"--{flag}", dest=f"cfg_{name}", metavar="VALUE", default=None)


def _flag_settings(args) -> dict[str, list]:
    out = {}
    for name in ScenarioConfig.field_names():
        v = getattr(args, f"cfg_{name}", None)
        if v is not None:
            try:
                out[name] = _parse_values(name, v)
            except ValueError as e:
                flag = "lambda" if name == "lam" else name
                raise ConfigError(f"--{flag}: bad value {v!r} ({e})") from e
    return out


def cmd_simulate(args) -> int:
    settings = read_config(args.config) if args.config else {}
    settings.update(_flag_settings(args))
    configs = build_configs(settings)
    for c in configs:
        if c.protocol == "signature":
            c.frame_length()  # surfaces an infeasible design before any run
    if args.replications < 1:
        raise ConfigError("--replications must be >= 1")

    runnable = [c for c in configs if c.n_frames > 0]
    try:
        results = sweep(runnable, args.replications, args.workers)
    except SweepError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    records = [record(r) for r in results]

    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="") as fp:
            write_csv(records, fp)
    else:
        write_csv(records, sys.stdout)
    return EXIT_OK


def cmd_design(args) -> int:
    T, lam, K, M = args.T, args.lam, args.K, args.M
    d = designer.frame_length(T, lam, K, M, args.p_d, args.p_f, args.G_target)
    info = d.as_dict()
    info["replay_probability"] = designer.REPLAY_PROBABILITY
    if args.attacker_n is not None:
        info["attacker_n"] = args.attacker_n
        info["attacker_candidates"] = designer.attacker_candidates(args.attacker_n, K)
    if args.json:
        print(json.dumps(info, sort_keys=True))
        return EXIT_OK
    print(f"frame length L       {d.L}  (raw {d.L_raw:.4f}{', clamped' if d.clamped else ''})")
    print(f"p_i                  {d.p_i:.6g}")
    print(f"p_fa                 {d.p_fa:.6g}")
    print(f"expected goodput     {d.E_G:.6g}")
    print(f"p_c1                 {d.p_c1:.6g}")
    print(f"p_c2                 {d.p_c2:.6g}")
    print(f"p_c                  {d.p_c:.6g}")
    print("replay probability   2^-128")
    if args.attacker_n is not None:
        print(f"attacker candidates  {info['attacker_candidates']}  (N={args.attacker_n}, K={K})")
    return EXIT_OK


def cmd_decode_demo(args) -> int:
    sys.stdout.write(demo_text(run_demo()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sigaccess", description="Signature-based access: design, simulation, decoding demo.")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="frame length and security figures for a load")
    d.add_argument("--T", type=int, default=5000)
    d.add_argument("--lambda", dest="lam", type=float, default=1.0)
    d.add_argument("--K", type=int, default=4)
    d.add_argument("--M", type=int, default=54)
    d.add_argument("--p_d", type=float, default=0.99)
    d.add_argument("--p_f", type=float, default=1e-3)
    d.add_argument("--G_target", type=float, default=0.99)
    d.add_argument("--attacker-n", dest="attacker_n", type=int, default=None,
                   help="active devices an eavesdropper observes")
    d.add_argument("--json", action="store_true", help="machine-readable output")
    d.set_defaults(func=cmd_design)

    for name in ("simulate", "sweep"):
        s = sub.add_parser(name, help="run scenarios and write CSV" + (" (alias of simulate)" if name == "sweep" else ""))
        s.add_argument("--config", help="flat key = value file with scenario fields")
        s.add_argument("--replications", type=int, default=1)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--output", "-o", help="CSV path (default stdout)")
        _add_scenario_flags(s)
        s.set_defaults(func=cmd_simulate)

    demo = sub.add_parser("decode-demo", help="print the worked iterative decoding example")
    demo.set_defaults(func=cmd_decode_demo)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except InfeasibleDesignError as e:
        print(f"infeasible design: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
