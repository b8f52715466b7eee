"""Command-line front end: ``run``, ``scan``, ``presets`` and ``analyze``.

Configuration is layered: defaults, then the preset, then a ``key = value``
config file, then command-line flags. Every output table starts with a
``# key = value`` header echoing the configuration, so a table can be fed
back with ``--config`` to regenerate it.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import EFFECTS, KNOBS, apply_knob, classify, evaluate, threshold_scan
from .exceptions import ConfigError, EffectAbsentError, NumericalError
from .liouville import find_E_sat
from .params import DEPHASING_MODES, EMISSION_MODES, SystemParams
from .presets import PRESETS, get_preset
from .series import read_table, write_table
from .trajectory import g2_from_records, read_record, write_record
from .validation import default_tau_grid

log = logging.getLogger(__name__)

METHODS = ("regression", "trajectory", "conditioned")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


@dataclass
class ScenarioConfig:
    preset: str = None
    g: float = 1.0
    g2: float = None
    kappa: float = 1.0
    drive: float = 0.0
    gamma_ph: float = 0.0
    dephasing: str = "none"
    emission: str = "independent"
    method: str = "regression"
    tau_max: float = 10.0
    tau_points: int = 501
    bin_width: float = 0.1
    trajectories: int = 1
    total_time: float = 1e5
    seed: int = 0
    burn_in: float = None
    jobs: int = 1
    estimator: str = "all_pairs"
    knob: str = None
    values: list = None
    effect: str = None
    relative: bool = False

    def params(self):
        couplings = (self.g,) if self.g2 is None else (self.g, self.g2)
        return SystemParams(couplings=couplings, kappa=self.kappa, drive=self.drive,
                            gamma_ph=self.gamma_ph, dephasing_mode=self.dephasing,
                            emission_mode=self.emission)

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}", "method")
        params = self.params()
        if self.method != "trajectory":
            if self.dephasing == "transit":
                raise ConfigError("transit dephasing requires method = trajectory", "method")
            if self.emission == "dicke":
                raise ConfigError("dicke emission requires method = trajectory", "method")
        if self.method == "conditioned" and self.dephasing != "none":
            raise ConfigError("conditioned evolution is defined without dephasing", "dephasing")
        if self.knob is not None and self.knob not in KNOBS:
            raise ConfigError(f"knob must be one of {KNOBS}", "knob")
        if self.effect is not None and self.effect not in EFFECTS:
            raise ConfigError(f"effect must be one of {EFFECTS}", "effect")
        if self.tau_max <= 0 or self.tau_points < 10:
            raise ConfigError("need tau_max > 0 and tau_points >= 10", "tau_points")
        if self.method == "trajectory" and not 0 < self.bin_width < self.tau_max:
            raise ConfigError("need 0 < bin_width < tau_max", "bin_width")
        return params

    def settings(self):
        """Keyword arguments for the correlator of ``self.method``."""
        if self.method == "trajectory":
            return dict(tau_max=self.tau_max, bin_width=self.bin_width,
                        n_trajectories=self.trajectories, total_time=self.total_time,
                        seed=self.seed, n_jobs=self.jobs, burn_in=self.burn_in,
                        estimator=self.estimator)
        return dict(tau_max=self.tau_max, tau_points=self.tau_points)

    def echo(self):
        """Configuration as header metadata (output paths excluded)."""
        skip = _GRID_ONLY if self.method == "trajectory" else _TRAJECTORY_ONLY
        return {f.name: getattr(self, f.name) for f in fields(self)
                if getattr(self, f.name) is not None and f.name not in skip}


_TRAJECTORY_ONLY = ("bin_width", "trajectories", "total_time", "seed", "burn_in", "estimator")
_GRID_ONLY = ("tau_points",)


_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(key, value):
    if key not in _TYPES:
        raise ConfigError(f"unknown configuration key {key!r}", key)
    kind = _TYPES[key]
    if value is None:
        return None
    try:
        if kind is bool:
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes")
            return bool(value)
        if kind is list:
            if isinstance(value, str):
                text = value.strip()
                value = json.loads(text) if text.startswith("[") else text.split(",")
            return [float(v) for v in value]
        if kind is int:
            return int(float(value))
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {value!r} for {key}", key) from None


def read_config(path):
    """Parse ``key = value`` lines.

    Lines starting with ``#`` are the header of an output table: unknown keys
    there (``n_ss``, ``version``, ...) are skipped so a table can serve as a
    config file. Plain lines must use known keys.
    """
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", "config") from None
    for line in text.splitlines():
        header = line.startswith("#")
        body = line.lstrip("#").strip()
        if not body or "=" not in body:
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            if header:
                continue
            raise ConfigError(f"unknown configuration key {key!r} in {path}", key)
        if value.startswith('"') or value in ("null", "true", "false"):
            value = json.loads(value)
        out[key] = value
    return out


def preset_layer(name):
    p = get_preset(name)
    params = p.params
    layer = dict(
        g=params.g, g2=params.couplings[1] if params.n_atoms == 2 else None,
        kappa=params.kappa, drive=params.drive, gamma_ph=params.gamma_ph,
        dephasing=params.dephasing_mode, emission=params.emission_mode, method=p.method,
        knob=p.knob, values=list(p.values) if p.values else None, effect=p.effect,
    )
    layer.update(p.settings)
    return layer


def build_config(args):
    """Merge defaults, preset, config file and flags (later layers win)."""
    file_layer = read_config(args.config) if getattr(args, "config", None) else {}
    flag_layer = {k: v for k, v in vars(args).items() if k in _TYPES and v is not None}
    preset = flag_layer.get("preset") or file_layer.get("preset")
    merged = {}
    if preset:
        merged.update(preset_layer(preset))
    merged.update(file_layer)
    merged.update(flag_layer)
    # Setting the curve quantity explicitly selects that single curve.
    knob = merged.get("knob")
    explicit = {**file_layer, **flag_layer}
    key = {"drive": "drive", "gamma_ph": "gamma_ph", "spectator_g2": "g2"}.get(knob)
    if key and key in explicit and "values" not in explicit:
        merged["values"] = None
    cfg = ScenarioConfig(**{k: _coerce(k, v) for k, v in merged.items()})
    cfg.preset = preset
    return cfg


def _curves(cfg, params):
    if cfg.knob is None or not cfg.values:
        return [(None, params)]
    return [(v, apply_knob(params, cfg.knob, v)) for v in cfg.values]


def _e_sat(params):
    if params.n_atoms != 1:
        return None
    base = params.replace(drive=0.0, gamma_ph=0.0, dephasing_mode="none")
    return find_E_sat(base)


def _curve_path(out, knob, value, many):
    out = Path(out)
    if not many:
        return out
    return out.with_name(f"{out.stem}_{knob}={value:g}{out.suffix}")


def _tau_grid(cfg):
    return default_tau_grid(cfg.tau_max, cfg.tau_points)


def _curve_header(cfg, params, knob, value, series, e_sat):
    echo = cfg.echo()
    if knob is not None:
        echo.pop("values", None)
        echo.update(drive=params.drive, gamma_ph=params.gamma_ph)
        if params.n_atoms == 2:
            echo["g2"] = params.couplings[1]
    header = {"version": __version__, **echo}
    if e_sat is not None:
        header["E_sat"] = e_sat
        header["E/E_sat"] = params.drive / e_sat
    report = classify(series) if len(series) >= 10 else None
    if report is not None:
        header["flags"] = ",".join(report.flags) or "none"
    return header


def _save_records(est, out):
    folder = Path(out).with_suffix(".records")
    folder.mkdir(parents=True, exist_ok=True)
    for r in est.records_:
        write_record(r, folder / f"trajectory_{r.trajectory_id:04d}.txt")


def cmd_run(args):
    cfg = build_config(args)
    params = cfg.validate()
    out = args.out or f"{cfg.preset or 'g2'}.tsv"
    e_sat = _e_sat(params)
    curves = _curves(cfg, params)
    written = []
    for value, p in curves:
        path = _curve_path(out, cfg.knob, value, len(curves) > 1)
        series = _evaluate(cfg, p, args, path)
        write_table(series, path, _curve_header(cfg, p, cfg.knob, value, series, e_sat))
        written.append(path)
    for path in written:
        print(path)
    return EXIT_OK


def _evaluate(cfg, params, args, path):
    if cfg.method == "trajectory" and getattr(args, "save_records", False):
        from .estimators import correlator_for

        est = correlator_for(params, "trajectory", **cfg.settings()).fit()
        _save_records(est, path)
        return est.correlation()
    return evaluate(params, cfg.method, _tau_grid(cfg), **cfg.settings())


def _write_summary(result, cfg, path):
    cols = ["value"] + (["E/E_sat"] if result.e_sat else []) + ["g2_0", "margin", "error"]
    cols += [f"{name}_margin" for name in EFFECTS] + ["flags", "threshold"]
    lines = [f"# version = {__version__}"]
    for k, v in cfg.echo().items():
        lines.append(f"# {k} = {json.dumps(v) if not isinstance(v, str) else v}")
    for k in ("threshold", "bracket", "monotone", "e_sat"):
        lines.append(f"# scan_{k} = {json.dumps(getattr(result, k))}")
    lines.append("# columns: " + "\t".join(cols))
    for v, m, e, r in zip(result.values, result.margins, result.errors, result.reports):
        row = [f"{v:.10g}"]
        if result.e_sat:
            row.append(f"{v / result.e_sat:.6g}")
        row += [f"{r.g2_0:.10g}", f"{m:.6g}", f"{e:.6g}"]
        row += [f"{r[name].margin:.6g}" for name in EFFECTS]
        row.append(",".join(r.flags) or "none")
        row.append("1" if result.threshold is not None and v == result.threshold else "0")
        lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_scan(args):
    cfg = build_config(args)
    params = cfg.validate()
    if cfg.knob is None or not cfg.values:
        raise ConfigError("scan needs --knob and --values (or a preset with curves)", "knob")
    out = Path(args.out or f"{cfg.preset or 'scan'}.tsv")
    jobs = cfg.jobs if cfg.method != "trajectory" else 1
    status = EXIT_OK
    try:
        result = threshold_scan(params, cfg.knob, cfg.values, cfg.effect, cfg.method,
                                tau_grid=_tau_grid(cfg), n_jobs=jobs,
                                relative_drive=cfg.relative, **cfg.settings())
    except EffectAbsentError as exc:
        print(f"error: effect: {exc}", file=sys.stderr)
        result = exc.result
        status = EXIT_CONFIG
    e_sat = result.e_sat
    for value, series in zip(result.values, result.series):
        p = apply_knob(params, cfg.knob, value)
        path = _curve_path(out, cfg.knob, value, True)
        write_table(series, path, _curve_header(cfg, p, cfg.knob, value, series, e_sat))
        print(path)
    summary = out.with_name(f"{out.stem}_summary{out.suffix}")
    _write_summary(result, cfg, summary)
    print(summary)
    if result.threshold is not None:
        rel = f" (E/E_sat = {result.threshold / e_sat:.4g})" if e_sat and cfg.knob == "drive" else ""
        print(f"threshold: {cfg.knob} = {result.threshold:.6g}{rel}, "
              f"bracket {result.bracket}, monotone {result.monotone}")
    return status


def cmd_presets(args):
    for name, p in PRESETS.items():
        params = p.params
        desc = (f"g={','.join(f'{g:g}' for g in params.couplings)} kappa={params.kappa:g} "
                f"E={params.drive:g} dephasing={params.dephasing_mode} "
                f"emission={params.emission_mode} method={p.method}")
        if p.knob:
            desc += f" {p.knob}={','.join(f'{v:g}' for v in p.values)}"
        print(f"{name:18s} {desc}\n{'':18s} {p.description}")
    return EXIT_OK


def cmd_analyze(args):
    if args.records:
        records = []
        for path in args.records:
            try:
                records.append(read_record(path))
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read record {path}: {exc}", "records") from None
        series = g2_from_records(records, args.tau_max, args.bin_width, args.estimator)
        print(classify(series).to_text(), end="")
        return EXIT_OK
    if not args.tables:
        raise ConfigError("give at least one table or --records", "tables")
    for path in args.tables:
        try:
            series, _ = read_table(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read table {path}: {exc}", "tables") from None
        if len(args.tables) > 1:
            print(f"# table = {path}")
        print(classify(series).to_text(), end="")
    return EXIT_OK


def _add_scenario_flags(p):
    p.add_argument("--config", help="key = value configuration file (flags override it)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--g", type=float, help="coupling of atom 1 (units of gamma)")
    p.add_argument("--g2", type=float, help="coupling of a second atom")
    p.add_argument("--kappa", type=float, help="cavity field decay rate")
    p.add_argument("--drive", type=float, help="driving field E")
    p.add_argument("--gamma-ph", dest="gamma_ph", type=float, help="dephasing rate")
    p.add_argument("--dephasing", choices=DEPHASING_MODES)
    p.add_argument("--emission", choices=EMISSION_MODES)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    p.add_argument("--tau-points", dest="tau_points", type=int)
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--total-time", dest="total_time", type=float,
                   help="recorded time per trajectory")
    p.add_argument("--burn-in", dest="burn_in", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker threads")
    p.add_argument("--estimator", choices=("all_pairs", "successive"))
    p.add_argument("--out", help="output table (multi-curve runs add a suffix per curve)")


def build_parser():
    parser = argparse.ArgumentParser(prog="cavityqed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compute g2 (or the conditioned photon number)")
    _add_scenario_flags(run)
    run.add_argument("--save-records", action="store_true",
                     help="archive trajectory detection records next to the table")
    run.set_defaults(func=cmd_run)

    scan = sub.add_parser("scan", help="scan drive, dephasing or spectator coupling")
    _add_scenario_flags(scan)
    scan.add_argument("--knob", choices=KNOBS)
    scan.add_argument("--values", help="comma-separated scan values")
    scan.add_argument("--effect", choices=EFFECTS)
    scan.add_argument("--relative", action="store_const", const=True, default=None,
                      help="drive values are E/E_sat")
    scan.set_defaults(func=cmd_scan)

    presets = sub.add_parser("presets", help="list figure presets")
    presets.set_defaults(func=cmd_presets)

    analyze = sub.add_parser("analyze", help="classify existing tables or detection records")
    analyze.add_argument("tables", nargs="*")
    analyze.add_argument("--records", nargs="+", help="detection record files")
    analyze.add_argument("--tau-max", dest="tau_max", type=float, default=10.0)
    analyze.add_argument("--bin-width", dest="bin_width", type=float, default=0.1)
    analyze.add_argument("--estimator", choices=("all_pairs", "successive"), default="all_pairs")
    analyze.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        field = f"{exc.field}: " if exc.field else ""
        print(f"error: {field}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
