"""``rql`` command line: simulate, spectrum, mitigate, calibrate, lightcone, sweep.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
resource error (for example a system size above the exact-backend limit).
"""
from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import observables as obs
from .analyze import (
    DEFAULT_THRESHOLD,
    EmptyFrontError,
    FitError,
    extract_front,
    fit_power_law,
    front_speed,
)
from .calibrate import CalibrationError, ConvergenceError, ResonanceScan, fit_resonance
from .disorder import SiteDetuningProfile, derive_seed, disorder_strength
from .evolve import (
    EnsembleSpec,
    SizeLimitError,
    check_size,
    exact_spectrum,
    hamiltonian_at,
    run_quench,
)
from .evolve.model import SPECTRUM_MAX_L
from .evolve.run import ALL_OBSERVABLES, SCALAR_OBSERVABLES
from .geometry import GeometryError, ring_rectangle, straight_chain
from .hamiltonian import QuenchProtocol, critical_field, delta_ising, nn_coupling
from .measure import (
    MeasurementError,
    ReadoutModel,
    ShotFormatError,
    ShotRecord,
    apply_readout_errors,
    postselect,
    sample_bitstrings,
    shot_estimates,
)

log = logging.getLogger("rql")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


CONFIG_SCHEMA = _obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "geometry": _obj({
        "kind": {"enum": ["uniform_chain", "ring_rectangle", "straight_chain"]},
        "n_sites": {"type": "integer", "minimum": 1},
        "lattice_constant_um": _pos,
        "aspect": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2, "maxItems": 2},
        "boundary": {"enum": ["periodic", "open"]},
    }, ["n_sites", "lattice_constant_um"]),
    "protocol": _obj({
        "omega_target_rad_per_us": _nonneg,
        "delta_hold_rad_per_us": {"type": ["number", "null"]},
        "delta_initial_rad_per_us": _num,
        "ramp_duration_us": _pos,
        "total_time_us": _pos,
        "dt_us": _pos,
    }, ["omega_target_rad_per_us"]),
    "variant": _obj({
        "tag": {"enum": ["ideal", "motion", "minimal", "minimal_decohering"]},
        "delta_r_um": _nonneg,
        "temperature_k": _nonneg,
        "sigma_gamma_rad_per_us": _nonneg,
        "white_noise": {"type": "boolean"},
        "nnn": {"type": "boolean"},
        "shot_sigma_omega_rad_per_us": _nonneg,
        "shot_sigma_detuning_rad_per_us": _nonneg,
        "detuning_profile": {"oneOf": [{"type": "null"}, _obj({
            "amplitude_rad_per_us": _num,
            "period_sites": _pos,
            "phase_rad": _num,
        }, ["amplitude_rad_per_us", "period_sites"])]},
    }),
    "measurement": _obj({
        "n_shots_per_realization": {"type": "integer", "minimum": 0},
        "prep_failure_per_atom": _prob,
        "readout": _obj({"p01": _prob, "p10": _prob}),
    }),
    "ensemble": _obj({"n_realizations": {"type": "integer", "minimum": 1}}),
    "observables": {"type": "array", "items": {"enum": list(ALL_OBSERVABLES)}, "uniqueItems": True},
    "stride": {"type": "integer", "minimum": 1},
    "master_seed": {"type": "integer", "minimum": 0},
    "output_dir": {"type": "string"},
    "analysis": _obj({
        "threshold": _pos,
        "average_window_us": {"oneOf": [{"type": "null"}, {"type": "array", "items": _nonneg,
                                                           "minItems": 2, "maxItems": 2}]},
        "entropy_cut_offset": {"type": "integer", "minimum": 0},
    }),
    "spectrum": _obj({"n_bins": {"type": "integer", "minimum": 1}, "fraction": {"type": "number",
                                                                              "exclusiveMinimum": 0,
                                                                              "maximum": 1}}),
    "sweep": _obj({
        "axis": {"enum": ["omega_target_rad_per_us", "lattice_constant_um"]},
        "values": {"type": "array", "items": _pos, "minItems": 1},
    }, ["axis", "values"]),
}, ["schema_version", "geometry", "protocol"])

DEFAULTS = {
    "geometry": {"kind": "uniform_chain", "boundary": "periodic"},
    "protocol": {"delta_hold_rad_per_us": None, "delta_initial_rad_per_us": -125.0,
                 "ramp_duration_us": 0.05, "total_time_us": 4.0, "dt_us": 0.01},
    "variant": {"tag": "ideal", "delta_r_um": 0.1, "temperature_k": 15e-6, "sigma_gamma_rad_per_us": 0.6,
                "white_noise": False, "nnn": True, "shot_sigma_omega_rad_per_us": 0.0,
                "shot_sigma_detuning_rad_per_us": 0.0, "detuning_profile": None},
    "measurement": {"n_shots_per_realization": 0, "prep_failure_per_atom": 0.0,
                    "readout": {"p01": 0.01, "p10": 0.05}},
    "ensemble": {"n_realizations": 1},
    "observables": list(SCALAR_OBSERVABLES) + ["correlators"],
    "stride": 1,
    "master_seed": 0,
    "output_dir": "rql_out",
    "analysis": {"threshold": DEFAULT_THRESHOLD, "average_window_us": None, "entropy_cut_offset": 0},
    "spectrum": {"n_bins": 50, "fraction": 1.0},
}


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path) -> dict:
    """Read, validate and complete a run config.

    A manifest written by an earlier run is accepted too; its resolved config
    is used unchanged.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if isinstance(raw, dict) and "resolved_config" in raw:
        raw = raw["resolved_config"]
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    cfg = _merge({k: v for k, v in DEFAULTS.items()}, raw)
    g = cfg["geometry"]
    if g["kind"] == "ring_rectangle" and "aspect" not in g:
        raise ConfigError("ring_rectangle geometry needs an aspect")
    if g["kind"] == "straight_chain" and g["boundary"] != "open":
        raise ConfigError("a straight chain has open boundaries")
    if cfg["variant"]["tag"] == "motion" and g["kind"] == "uniform_chain":
        raise ConfigError("the motion model needs an explicit geometry (ring_rectangle or straight_chain)")
    return cfg


def apply_overrides(cfg: dict, args) -> dict:
    cfg = copy.deepcopy(cfg)
    if getattr(args, "seed", None) is not None:
        cfg["master_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        cfg["output_dir"] = args.out
    if getattr(args, "stride", None) is not None:
        cfg["stride"] = args.stride
    if getattr(args, "observables", None):
        cfg["observables"] = [s.strip() for s in args.observables.split(",") if s.strip()]
    return resolve_config({k: v for k, v in cfg.items()})


# building blocks from a resolved config

def build_geometry(cfg):
    g = cfg["geometry"]
    a, n = g["lattice_constant_um"], g["n_sites"]
    if g["kind"] == "ring_rectangle":
        return ring_rectangle(n, a, tuple(g["aspect"]))
    if g["kind"] == "straight_chain":
        return straight_chain(n, a)
    return None


def build_protocol(cfg) -> QuenchProtocol:
    p = cfg["protocol"]
    a = cfg["geometry"]["lattice_constant_um"]
    hold = p["delta_hold_rad_per_us"]
    try:
        return QuenchProtocol(
            omega_target=p["omega_target_rad_per_us"],
            delta_hold=delta_ising(a) if hold is None else hold,
            ramp_duration=p["ramp_duration_us"], delta_initial=p["delta_initial_rad_per_us"],
            total_time=p["total_time_us"], dt=p["dt_us"])
    except ValueError as exc:
        raise ConfigError(f"protocol: {exc}") from None


def build_spec(cfg) -> EnsembleSpec:
    g, v = cfg["geometry"], cfg["variant"]
    prof = v["detuning_profile"]
    profile = None if prof is None else SiteDetuningProfile(
        prof["amplitude_rad_per_us"], prof["period_sites"], prof.get("phase_rad", 0.0))
    try:
        geom = build_geometry(cfg)
    except GeometryError as exc:
        raise ConfigError(f"geometry: {exc}") from None
    boundary = g["boundary"] if geom is None else geom.boundary
    return EnsembleSpec(
        tag=v["tag"], n_sites=g["n_sites"], a=g["lattice_constant_um"], boundary=boundary, geometry=geom,
        delta_r=v["delta_r_um"], temperature=v["temperature_k"], sigma_gamma=v["sigma_gamma_rad_per_us"],
        white_noise=v["white_noise"], detuning_profile=profile,
        shot_sigma_omega=v["shot_sigma_omega_rad_per_us"],
        shot_sigma_detuning=v["shot_sigma_detuning_rad_per_us"], nnn=v["nnn"])


def derived_quantities(cfg) -> dict:
    a = cfg["geometry"]["lattice_constant_um"]
    omega = cfg["protocol"]["omega_target_rad_per_us"]
    j = nn_coupling(a)
    return {
        "j_nn_rad_per_us": j,
        "delta_ising_rad_per_us": delta_ising(a),
        "h_x_rad_per_us": omega / 2,
        "h_x_over_j": omega / 2 / j,
        "disorder_strength_w": disorder_strength(a, cfg["variant"]["delta_r_um"]),
        "v_c_um_per_us": 2 * omega * a,
        "omega_qcp_rad_per_us": 2 * critical_field(j),
    }


def _manifest(cfg, command, seeds, extra=None) -> dict:
    m = {
        "artifact": "rql",
        "artifact_version": __version__,
        "command": command,
        "resolved_config": cfg,
        "derived": derived_quantities(cfg),
        "units": {"time": "us", "frequency": "rad/us", "length": "um", "entropy": "nats"},
        "realization_seeds": [int(s) for s in seeds],
    }
    if extra:
        m.update(extra)
    return m


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _threads(args) -> int:
    n = getattr(args, "threads", None)
    return n if n else (os.cpu_count() or 1)


# commands

def run_simulation(cfg, out: Path, threads: int = 1) -> tuple[dict, object]:
    """Run the configured ensemble and write every output file into ``out``."""
    check_size(cfg["geometry"]["n_sites"])
    protocol = build_protocol(cfg)
    spec = build_spec(cfg)
    names = list(cfg["observables"])
    meas = cfg["measurement"]
    n_shots = meas["n_shots_per_realization"]
    L = spec.n_sites
    cut = obs.default_cut(L, cfg["analysis"]["entropy_cut_offset"]) if "entropy" in names else None
    store = (protocol.n_steps,) if n_shots else ()
    res = run_quench(protocol, spec, cfg["ensemble"]["n_realizations"], names, cfg["master_seed"],
                     cfg["stride"], entropy_cut=cut, store_at_steps=store, threads=threads)
    files = []
    for name in names:
        if name in res.series:
            _write(out / f"{name}.csv", res.series_csv(name))
            files.append(f"{name}.csv")
    if res.correlators is not None:
        _write(out / "correlators.csv", res.correlators.to_csv())
        sem = obs.CorrelatorMatrix(res.times, res.correlators_sem)
        _write(out / "correlators_sem.csv", sem.to_csv())
        files += ["correlators.csv", "correlators_sem.csv"]
    extra = {"files": files}
    if n_shots:
        model = ReadoutModel(**meas["readout"])
        records = []
        for k, psi in enumerate(res.states[protocol.n_steps]):
            seed = derive_seed(res.seeds[k], 5)
            rec = sample_bitstrings(psi, n_shots, seed, meas["prep_failure_per_atom"])
            records.append(apply_readout_errors(rec, model, derive_seed(seed, 1)))
        bits = np.concatenate([r.bits for r in records])
        ok = np.concatenate([r.prep_ok for r in records])
        shots = ShotRecord(bits, ok, cfg["master_seed"])
        _write(out / "shots.csv", shots.to_csv(include_prep=True))
        _write(out / "mitigation.json", _dump(mitigation_report(shots, model, spec.boundary == "periodic")))
        extra["files"] = files + ["shots.csv", "mitigation.json"]
    manifest = _manifest(cfg, "simulate", res.seeds, extra)
    _write(out / "manifest.json", _dump(manifest))
    return manifest, res


def mitigation_report(record: ShotRecord, model: ReadoutModel, periodic: bool = True,
                      use_prep_flags: bool = True) -> dict:
    kept, retention = postselect(record) if use_prep_flags else (record, 1.0)
    raw = shot_estimates(kept, None, periodic)
    mit = shot_estimates(kept, model, periodic)
    return {
        "n_shots": record.n_shots,
        "n_retained": kept.n_shots,
        "retention_rate": retention,
        "readout_model": model.to_dict(),
        "raw": raw.to_dict(),
        "mitigated": mit.to_dict(),
        "mitigated_outside_unit_interval": mit.overshoot(),
    }


def cmd_simulate(args) -> int:
    cfg = apply_overrides(load_config(args.config), args)
    out = Path(cfg["output_dir"])
    t0 = time.perf_counter()
    run_simulation(cfg, out, _threads(args))
    _write(out / "timing.json", _dump({"wall_clock_s": time.perf_counter() - t0}))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = apply_overrides(load_config(args.config), args)
    L = cfg["geometry"]["n_sites"]
    check_size(L, SPECTRUM_MAX_L)
    protocol = build_protocol(cfg)
    spec = build_spec(cfg)
    # the spectrum belongs to the unitary model held after the ramp
    if spec.tag == "minimal_decohering":
        spec = dataclasses.replace(spec, tag="minimal")
    n = cfg["ensemble"]["n_realizations"]
    seeds, ratios, spectra = [], [], []
    t0 = time.perf_counter()
    for k in range(n):
        variant = spec.realization(k, cfg["master_seed"], protocol)
        terms = hamiltonian_at(protocol.total_time, protocol, variant, spec.geometry, step=protocol.n_steps - 1)
        e = exact_spectrum(terms)
        seeds.append(derive_seed(cfg["master_seed"], k))
        ratios.append(obs.level_spacing_ratio(e, fraction=cfg["spectrum"]["fraction"]))
        spectra.append(e)
    pooled = np.concatenate(spectra)
    density, edges = obs.density_of_states(pooled, cfg["spectrum"]["n_bins"])
    out = Path(cfg["output_dir"])
    lines = ["energy_lo_rad_per_us,energy_hi_rad_per_us,density_per_rad_per_us"]
    lines += [f"{obs.fmt(lo)},{obs.fmt(hi)},{obs.fmt(d)}" for lo, hi, d in zip(edges[:-1], edges[1:], density)]
    _write(out / "dos.csv", "\n".join(lines) + "\n")
    r = np.array(ratios)
    summary = {
        "boundary": spec.boundary,
        "n_realizations": n,
        "mean_gap_ratio": float(r.mean()),
        "mean_gap_ratio_sem": float(r.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        "excess_kurtosis": obs.excess_kurtosis(pooled),
        "miniband_count": obs.count_minibands(density),
    }
    _write(out / "spectrum.json", _dump(summary))
    _write(out / "manifest.json", _dump(_manifest(cfg, "spectrum", seeds, {"files": ["dos.csv", "spectrum.json"]})))
    _write(out / "timing.json", _dump({"wall_clock_s": time.perf_counter() - t0}))
    print(f"<r> = {summary['mean_gap_ratio']:.4f} ± {summary['mean_gap_ratio_sem']:.4f}")
    return EXIT_OK


def cmd_mitigate(args) -> int:
    try:
        text = Path(args.shots).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read shots: {exc}") from None
    record = ShotRecord.from_csv(text)
    model = ReadoutModel(args.p01, args.p10)
    report = mitigation_report(record, model, not args.open, not args.no_postselect)
    text = _dump(report)
    if args.out:
        _write(Path(args.out) / "mitigation.json", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    try:
        scan = ResonanceScan.from_csv(Path(args.scan).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read scan: {exc}") from None
    fit = fit_resonance(scan, args.omega_guess, args.shift_guess, n_bootstrap=args.bootstrap,
                        seed=args.seed or 0, weighted=args.weighted)
    text = _dump(fit.to_dict())
    if args.out:
        _write(Path(args.out) / "calibration.json", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def lightcone_report(corr: obs.CorrelatorMatrix, a: float, threshold: float, v_c: float | None = None):
    front = extract_front(corr, threshold, a)
    power = fit_power_law(front)
    speed = front_speed(front)
    report = {
        "threshold": threshold,
        "n_points": int(len(front.times)),
        "monotone_violations": front.violations,
        "power_law": {"amplitude_um": power.amplitude, "exponent": power.exponent, "r2": power.r2},
        "linear_front_speed_um_per_us": speed,
    }
    if v_c is not None:
        report["v_c_um_per_us"] = v_c
        report["speed_over_v_c"] = speed / v_c
    return front, report


def cmd_lightcone(args) -> int:
    run = Path(args.run_dir)
    try:
        manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
        corr = obs.CorrelatorMatrix.from_csv((run / "correlators.csv").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read run directory: {exc}") from None
    a = manifest["resolved_config"]["geometry"]["lattice_constant_um"]
    threshold = args.threshold if args.threshold is not None else manifest["resolved_config"]["analysis"]["threshold"]
    front, report = lightcone_report(corr, a, threshold, manifest["derived"]["v_c_um_per_us"])
    out = Path(args.out) if args.out else run
    _write(out / "front.csv", front.to_csv())
    _write(out / "lightcone.json", _dump(report))
    print(f"front exponent {report['power_law']['exponent']:.3f}, speed {report['linear_front_speed_um_per_us']:.2f} um/us")
    return EXIT_OK


SWEEP_COLUMNS = ("j_nn_rad_per_us", "delta_ising_rad_per_us", "h_x_over_j", "disorder_strength_w", "v_c_um_per_us")


def cmd_sweep(args) -> int:
    base = apply_overrides(load_config(args.config), args)
    sweep = base.get("sweep")
    if args.axis:
        sweep = {"axis": args.axis, "values": [float(v) for v in args.values.split(",")]}
    if not sweep:
        raise ConfigError("no sweep axis: give a 'sweep' block or --axis/--values")
    out = Path(base["output_dir"])
    # null window: the whole run
    window = base["analysis"]["average_window_us"]
    window = tuple(window) if window else None
    axis = sweep["axis"]
    header = [axis] + list(SWEEP_COLUMNS) + ["tavg_abs_magnetization", "tavg_domain_wall",
                                               "max_qfi_density", "final_magnetization"]
    rows = [",".join(header)]
    t0 = time.perf_counter()
    need = {"magnetization", "domain_wall", "qfi_density"}
    for value in sweep["values"]:
        cfg = copy.deepcopy(base)
        cfg.pop("sweep", None)
        cfg["observables"] = sorted(set(cfg["observables"]) | need, key=ALL_OBSERVABLES.index)
        if axis == "omega_target_rad_per_us":
            cfg["protocol"][axis] = value
        else:
            cfg["geometry"][axis] = value
        cfg = resolve_config(cfg)
        sub = out / f"{axis}={obs.fmt(value)}"
        cfg["output_dir"] = str(sub)
        manifest, res = run_simulation(cfg, sub, _threads(args))
        m, g, f = res["magnetization"], res["domain_wall"], res["qfi_density"]
        vals = [value] + [manifest["derived"][c] for c in SWEEP_COLUMNS] + [
            m.time_average(window, absolute=True), g.time_average(window), float(f.mean.max()), float(m.mean[-1])]
        rows.append(",".join(obs.fmt(float(v)) for v in vals))
    _write(out / "sweep.csv", "\n".join(rows) + "\n")
    _write(out / "timing.json", _dump({"wall_clock_s": time.perf_counter() - t0}))
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _run_opts(p, config=True):
    if config:
        p.add_argument("--config", required=True, help="JSON run config (or a previous manifest.json)")
    p.add_argument("--seed", type=int, help="master seed, overrides the config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads (default: available CPUs)")
    p.add_argument("--observables", help="comma-separated observable list")
    p.add_argument("--stride", type=int, help="record every N-th step")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rql", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rql {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a quench ensemble")
    _run_opts(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="level statistics and density of states")
    _run_opts(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("mitigate", help="raw and readout-mitigated estimators from a shot CSV")
    p.add_argument("shots")
    p.add_argument("--p01", type=float, default=0.01)
    p.add_argument("--p10", type=float, default=0.05)
    p.add_argument("--no-postselect", action="store_true", help="ignore a prep_ok column")
    p.add_argument("--open", action="store_true", help="open chain: no wrap-around bond")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("calibrate", help="fit a two-photon resonance scan")
    p.add_argument("scan")
    p.add_argument("--omega-guess", type=float, required=True)
    p.add_argument("--shift-guess", type=float, default=0.0)
    p.add_argument("--bootstrap", type=int, default=200)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("lightcone", help="front extraction and fits for a finished run")
    p.add_argument("run_dir")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lightcone)

    p = sub.add_parser("sweep", help="repeat a run along Ω or a")
    _run_opts(p)
    p.add_argument("--axis", choices=["omega_target_rad_per_us", "lattice_constant_um"])
    p.add_argument("--values", help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SizeLimitError as exc:
        print(f"rql: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ShotFormatError as exc:
        print(f"rql: malformed shot file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EmptyFrontError, ConvergenceError) as exc:
        print(f"rql: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, CalibrationError, MeasurementError, FitError, ValueError) as exc:
        print(f"rql: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MemoryError, RuntimeError, ArithmeticError) as exc:
        print(f"rql: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
