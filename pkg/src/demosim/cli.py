"""Command-line front end: flat key=value config files, data loading, run
orchestration, and report emission.

Exit codes: 0 clean, 1 invalid config or data, 2 assumption failure during a
run, 64 usage error, 74 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace

from .engine import RunConfig, resolve_seed, run, run_batch
from .events import DEFAULT_EVENT_ORDER
from .model import (AssumptionFailure, ConfigError, DataFormatError,
                    ModelData, ModelParams, SimulationParams)
from .rates import (DEFAULT_DIVORCE_MODIFIERS, DEFAULT_MARRIAGE_MODIFIERS,
                    default_fertility, load_fertility_text)
from .space import DensityMap

_SIM_KEYS = ("t0", "t_final", "delta_t", "seed")
_MODEL_KEYS = {f.name: f.type for f in fields(ModelParams)}
_OTHER_KEYS = ("fertility_path", "density_path", "divorce_modifiers",
               "marriage_modifiers", "event_order", "verification_mode",
               "out_dir")
KNOWN_KEYS = frozenset(_SIM_KEYS) | set(_MODEL_KEYS) | frozenset(_OTHER_KEYS)


def parse_config_lines(text: str) -> dict[str, str]:
    """key = value lines; blank lines and # comments ignored; later keys
    override earlier ones."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, "
                              f"got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_vector(key: str, value: str) -> tuple[float, ...]:
    return tuple(_parse_float(key, v.strip()) for v in value.split(","))


def build_config(pairs: dict[str, str]) -> RunConfig:
    """Resolve a parsed key/value map into a full RunConfig; missing keys
    fall back to the embedded defaults."""
    sim_kwargs: dict = {}
    if "t0" in pairs:
        sim_kwargs["t0"] = _parse_int("t0", pairs["t0"])
    if "t_final" in pairs:
        sim_kwargs["t_final"] = _parse_int("t_final", pairs["t_final"])
    if "delta_t" in pairs:
        v = pairs["delta_t"]
        sim_kwargs["delta_t"] = int(v) if v.isdigit() else v.lower()
    if "seed" in pairs:
        v = pairs["seed"]
        sim_kwargs["seed"] = "random" if v == "random" else _parse_int("seed", v)
    sim = SimulationParams(**sim_kwargs)

    model_kwargs: dict = {}
    for key, typ in _MODEL_KEYS.items():
        if key in pairs:
            parse = _parse_int if typ in (int, "int") else _parse_float
            model_kwargs[key] = parse(key, pairs[key])
    model = ModelParams(**model_kwargs)

    if "fertility_path" in pairs:
        with open(pairs["fertility_path"], encoding="utf-8") as fh:
            fertility = load_fertility_text(fh.read())
    else:
        fertility = default_fertility()
    if "density_path" in pairs:
        with open(pairs["density_path"], encoding="utf-8") as fh:
            density = DensityMap.from_text(fh.read())
    else:
        density = DensityMap.default()
    divorce_mod = (_parse_vector("divorce_modifiers", pairs["divorce_modifiers"])
                   if "divorce_modifiers" in pairs
                   else DEFAULT_DIVORCE_MODIFIERS)
    marriage_mod = (_parse_vector("marriage_modifiers",
                                  pairs["marriage_modifiers"])
                    if "marriage_modifiers" in pairs
                    else DEFAULT_MARRIAGE_MODIFIERS)
    data = ModelData(fertility=fertility,
                     divorce_modifier_by_decade=divorce_mod,
                     male_marriage_modifier_by_decade=marriage_mod)

    event_order = (tuple(v.strip() for v in pairs["event_order"].split(","))
                   if "event_order" in pairs else DEFAULT_EVENT_ORDER)
    mode = pairs.get("verification_mode", "fail")
    out_dir = pairs.get("out_dir")

    echo = {
        "t0": sim.t0, "t_final": sim.t_final, "delta_t": sim.delta_t,
        "seed": sim.seed,
        **{k: getattr(model, k) for k in _MODEL_KEYS},
        "fertility_path": pairs.get("fertility_path", ""),
        "density_path": pairs.get("density_path", ""),
        "divorce_modifiers": ",".join(repr(v) for v in divorce_mod),
        "marriage_modifiers": ",".join(repr(v) for v in marriage_mod),
        "event_order": ",".join(event_order),
        "verification_mode": mode,
        "out_dir": out_dir or "",
    }
    try:
        return RunConfig(sim=sim, model=model, data=data, density=density,
                         event_order=event_order, verification_mode=mode,
                         out_dir=out_dir, config_echo=echo)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path: str | None) -> RunConfig:
    """Load a config file (or the full defaults when path is None)."""
    if path is None:
        return build_config({})
    with open(path, encoding="utf-8") as fh:
        return build_config(parse_config_lines(fh.read()))


def _print_defaults() -> None:
    print("# simulation defaults (embedded)")
    sim = SimulationParams()
    for key in _SIM_KEYS:
        print(f"{key} = {getattr(sim, key)}")
    print()
    print("# model parameter defaults (embedded)")
    model = ModelParams()
    for key in sorted(_MODEL_KEYS):
        print(f"{key} = {getattr(model, key)}")
    print()
    print("# divorce rate modifier by decade of age (embedded, 16 entries)")
    print("divorce_modifiers = " + ",".join(repr(v) for v
                                            in DEFAULT_DIVORCE_MODIFIERS))
    print("# male marriage rate modifier by decade of age (embedded, 16 entries)")
    print("marriage_modifiers = " + ",".join(repr(v) for v
                                             in DEFAULT_MARRIAGE_MODIFIERS))
    print()
    fert = default_fertility()
    print(f"# fertility table (embedded): ages {fert.age_offset}.."
          f"{fert.age_offset + len(fert.rows) - 1}, "
          f"constant across years, base year {fert.year_offset}")
    print()
    density = DensityMap.default()
    nonzero = sum(1 for row in density.rows for v in row if v > 0)
    print(f"# population density grid (embedded): "
          f"{len(density.rows)}x{len(density.rows[0])}, {nonzero} towns")
    for row in density.rows:
        print(" ".join(f"{v:g}" for v in row))
    print()
    print("# event order (default)")
    print("event_order = " + ",".join(DEFAULT_EVENT_ORDER))


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = parse_config(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 74
    except (ConfigError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out is not None:
        config.out_dir = args.out
        config.config_echo["out_dir"] = args.out
    if args.seed is not None:
        seed = "random" if args.seed == "random" else int(args.seed)
        config.sim = replace(config.sim, seed=seed)
        config.config_echo["seed"] = seed
    try:
        if args.replicates > 1:
            base = resolve_seed(config.sim.seed)
            results = run_batch(config, args.replicates, base)
            for r, res in enumerate(results):
                print(f"replicate {r}: seed={res.seed} "
                      f"alive={res.summary['final_alive']} "
                      f"violations={len(res.violations)} digest={res.digest}")
            return 0
        result = run(config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 74
    except AssumptionFailure as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return 2
    print(f"steps={result.summary['steps_completed']} "
          f"seed={result.seed} alive={result.summary['final_alive']} "
          f"houses={result.summary['final_houses']} "
          f"violations={len(result.violations)} digest={result.digest}")
    if config.out_dir:
        print(f"artifacts written to {config.out_dir}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = parse_config(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 74
    except (ConfigError, DataFormatError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    for key in sorted(config.config_echo):
        print(f"{key} = {config.config_echo[key]}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="demosim",
        description="Discrete-time demographic simulation with runtime "
                    "assumption verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a simulation run")
    run_p.add_argument("--config", help="key = value config file")
    run_p.add_argument("--out", help="artifact output directory")
    run_p.add_argument("--seed", help="override the seed (integer or random)")
    run_p.add_argument("--replicates", type=int, default=1,
                       help="independent replicates, seeds base+0..base+R-1")

    val_p = sub.add_parser("validate",
                           help="check config and data, print effective config")
    val_p.add_argument("--config", help="key = value config file")

    sub.add_parser("defaults", help="print embedded defaults")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 64
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    _print_defaults()
    return 0


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
