"""Reproducible experiment runner.

Subcommands mirror the workflow: ``simulate`` produces ensemble-averaged
zero-momentum traces, ``contrast`` extracts interference-peak contrasts
(either against the drive phase or against time), ``beta`` measures the
one-parameter scaling function, ``map-check`` reports the structural
gauge analysis, and ``merge`` consolidates finished runs.

Configs are flat ``key = value`` text files with units spelled out in
the key names.  Every run directory receives a manifest echoing the
fully resolved configuration, its checksum, and a checksum per output
file; reruns with the same config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .engine import (EnsembleSpec, LatticeSpec, fixed_sequence_family,
                     random_phase_family, run_ensemble)
from .lattice_map import build_nanotube, flux_report
from .modulation import (build_amplitude_modulation,
                         build_experimental_sequence, classify_symmetry,
                         predict_peak_times)
from .observables import (beta_theory, estimate_beta_of_g, extract_contrasts,
                          fit_cbs_decay, fit_cfs_contrast)

PRESETS = ("pi0-trace", "contrast-sweep", "contrast-dynamics", "beta-g",
           "map-check", "custom")
FAMILIES = ("experimental", "amplitude", "random-phase")


@dataclass
class ExperimentConfig:
    """Fully resolved parameters of one run."""

    preset: str = "custom"
    family: str = "experimental"
    kick_strength: float = 4.0
    period: int = 10
    control_phase_rad: float = 0.0
    phase_offset_rad: float = 0.21 * 2.0 * math.pi
    antisymmetric: bool = False
    lattice_size: int = 1024
    kbar: float = 1.0
    n_disorder: int = 100
    n_beta: int = 1
    beta_sigma: float = 0.0
    decoherence_per_kick: float = 0.0
    kinetic_disorder: bool = True
    horizon_kicks: int = 200
    seed: int = 0
    workers: int = 0
    bins_per_site: int = 1
    hist_stride: int = 0
    sweep_phases_rad: tuple = ()
    scaling_class: str = "orthogonal"
    quasi_energy_rad: float = 0.0
    hop_range: int = 3
    map_extent: int = 16

    def validate(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown sequence family {self.family!r}")
        if self.scaling_class not in ("orthogonal", "unitary"):
            raise ValueError("scaling_class must be orthogonal or unitary")
        return self


_PRESET_DEFAULTS = {
    # strong kicking develops the full backscattering contrast quickly
    "pi0-trace": dict(family="experimental", kick_strength=16.0,
                      lattice_size=4096, horizon_kicks=100, n_disorder=400),
    "contrast-sweep": dict(family="experimental", kick_strength=16.0,
                           lattice_size=4096, horizon_kicks=100,
                           n_disorder=400,
                           sweep_phases_rad=tuple(
                               -math.pi + 2 * math.pi * k / 8
                               for k in range(9))),
    # weak kicking localizes early enough to watch the forward peak grow
    "contrast-dynamics": dict(family="experimental", kick_strength=4.0,
                              lattice_size=1024, horizon_kicks=1000,
                              n_disorder=1000),
    "beta-g": dict(family="random-phase", kick_strength=4.0, period=3,
                   lattice_size=2048, horizon_kicks=1500, n_disorder=100,
                   n_beta=5, beta_sigma=0.25, kinetic_disorder=False,
                   antisymmetric=True),
    "map-check": dict(family="amplitude", kick_strength=0.5, period=5,
                      control_phase_rad=0.3),
    "custom": {},
}


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


def _coerce(name: str, value, target):
    if isinstance(target, bool):
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {value!r}")
    if isinstance(target, int):
        return int(value)
    if isinstance(target, float):
        return float(value)
    if isinstance(target, tuple):
        if isinstance(value, (tuple, list)):
            return tuple(float(v) for v in value)
        return tuple(float(v) for v in str(value).split(",") if v.strip())
    return str(value)


def resolve_config(preset: str, file_values: dict,
                   overrides: dict) -> ExperimentConfig:
    """Defaults < preset < config file < command line."""
    cfg = ExperimentConfig()
    cfg.preset = preset
    for k, v in _PRESET_DEFAULTS[preset].items():
        setattr(cfg, k, v)
    known = asdict(ExperimentConfig())
    for k, v in file_values.items():
        if k == "preset":
            cfg.preset = str(v)
            continue
        if k not in known:
            raise ValueError(f"unknown config key {k!r}")
        setattr(cfg, k, _coerce(k, v, known[k]))
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if cfg.hist_stride == 0:
        cfg.hist_stride = cfg.horizon_kicks
    return cfg.validate()


def build_sequence(cfg: ExperimentConfig):
    if cfg.family == "experimental":
        return build_experimental_sequence(cfg.kick_strength,
                                           cfg.control_phase_rad,
                                           cfg.phase_offset_rad)
    if cfg.family == "amplitude":
        return build_amplitude_modulation(cfg.kick_strength, cfg.period,
                                          cfg.control_phase_rad)
    raise ValueError("random-phase family has no single sequence; it is "
                     "drawn per disorder realization")


def _ensemble_spec(cfg: ExperimentConfig) -> EnsembleSpec:
    return EnsembleSpec(n_disorder=cfg.n_disorder, n_beta=cfg.n_beta,
                        beta_sigma=cfg.beta_sigma,
                        decoherence_rate=cfg.decoherence_per_kick,
                        rng_seed=cfg.seed, horizon=cfg.horizon_kicks,
                        kinetic_disorder=cfg.kinetic_disorder,
                        bins_per_site=cfg.bins_per_site,
                        hist_stride=cfg.hist_stride)


def _family(cfg: ExperimentConfig, control_phase=None):
    if cfg.family == "random-phase":
        return random_phase_family(cfg.kick_strength, cfg.period,
                                   antisymmetric=cfg.antisymmetric)
    if control_phase is None:
        return fixed_sequence_family(build_sequence(cfg))
    alt = ExperimentConfig(**{**asdict(cfg), "control_phase_rad": control_phase})
    return fixed_sequence_family(build_sequence(alt))


# ---------------------------------------------------------------------------
# output plumbing

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_run(out_dir: str, cfg: ExperimentConfig, files: dict):
    """Write data files plus a manifest with config and file checksums."""
    os.makedirs(out_dir, exist_ok=True)
    entries = {}
    for name, text in files.items():
        data = text.encode()
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
        entries[name] = _sha256(data)
    resolved = {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in sorted(asdict(cfg).items())}
    config_blob = json.dumps(resolved, sort_keys=True).encode()
    manifest = {
        "format": "gaugerotor-run/1",
        "version": __version__,
        "config": resolved,
        "config_sha256": _sha256(config_blob),
        "outputs": entries,
    }
    blob = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(blob)


def read_manifest(run_dir: str) -> dict:
    path = os.path.join(run_dir, "manifest.json")
    with open(path) as fh:
        manifest = json.load(fh)
    for name, digest in manifest["outputs"].items():
        with open(os.path.join(run_dir, name), "rb") as fh:
            if _sha256(fh.read()) != digest:
                raise ValueError(f"checksum mismatch for {name} in {run_dir}")
    return manifest


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(cfg: ExperimentConfig, out_dir: str, workers: int) -> int:
    seq = build_sequence(cfg) if cfg.family != "random-phase" else None
    fam = _family(cfg)
    result = run_ensemble(fam, LatticeSpec(cfg.lattice_size, cfg.kbar),
                          _ensemble_spec(cfg), workers=workers)
    files = {"series.csv": result.series_csv(),
             "histogram.csv": result.histogram_csv()}
    if seq is not None:
        cbs, cfs = predict_peak_times(seq, cfg.horizon_kicks)
        cls = classify_symmetry(seq)
        files["peaks.txt"] = (
            f"symmetry_class {cls.tag}\n"
            f"cbs_kicks {','.join(map(str, cbs))}\n"
            f"cfs_kicks {','.join(map(str, cfs))}\n")
        files["sequence.txt"] = seq.to_table()
    write_run(out_dir, cfg, files)
    return 0


def _contrast_csv(series) -> str:
    lines = ["kind,t,contrast,se"]
    for t, c, s in zip(series.cbs_times, series.cbs, series.cbs_se):
        lines.append(f"backward,{int(t)},{c:.12g},{s:.12g}")
    for t, c, s in zip(series.cfs_times, series.cfs, series.cfs_se):
        lines.append(f"forward,{int(t)},{c:.12g},{s:.12g}")
    return "\n".join(lines) + "\n"


def cmd_contrast(cfg: ExperimentConfig, out_dir: str, workers: int) -> int:
    lattice = LatticeSpec(cfg.lattice_size, cfg.kbar)
    if cfg.preset == "contrast-sweep":
        rows = ["control_phase_rad,cbs_contrast,cbs_se,cfs_contrast,cfs_se"]
        for phi in cfg.sweep_phases_rad:
            seq = build_experimental_sequence(cfg.kick_strength, phi,
                                              cfg.phase_offset_rad)
            result = run_ensemble(fixed_sequence_family(seq), lattice,
                                  _ensemble_spec(cfg), workers=workers)
            # probe at the kicks where the symmetric drive has its peaks,
            # averaged over the horizon for stable statistics
            ref = build_experimental_sequence(cfg.kick_strength, 0.0,
                                              cfg.phase_offset_rad)
            series = extract_contrasts(result, ref)
            cut = cfg.horizon_kicks // 2
            sel_b = series.cbs_times >= cut
            sel_f = series.cfs_times >= cut
            cb = float(series.cbs[sel_b].mean())
            cb_se = float(np.sqrt(np.mean(series.cbs_se[sel_b] ** 2)
                                  / sel_b.sum()))
            cf = float(series.cfs[sel_f].mean())
            cf_se = float(np.sqrt(np.mean(series.cfs_se[sel_f] ** 2)
                                  / sel_f.sum()))
            rows.append(f"{phi:.12g},{cb:.12g},{cb_se:.12g},"
                        f"{cf:.12g},{cf_se:.12g}")
        write_run(out_dir, cfg, {"sweep.csv": "\n".join(rows) + "\n"})
        return 0

    seq = build_sequence(cfg)
    result = run_ensemble(fixed_sequence_family(seq), lattice,
                          _ensemble_spec(cfg), workers=workers)
    series = extract_contrasts(result, seq)
    files = {"contrast.csv": _contrast_csv(series)}
    summary = [f"symmetry_class {classify_symmetry(seq).tag}"]
    if series.cbs_times.size:
        try:
            t_dec, c0 = fit_cbs_decay(series)
            summary.append(f"cbs_decay_kicks {t_dec!r}")
            summary.append(f"cbs_amplitude {c0!r}")
        except ValueError as err:
            summary.append(f"cbs_fit_skipped {err}")
    try:
        fit = fit_cfs_contrast(series, seq.period)
        summary += [f"cfs_amplitude {fit.c0!r}",
                    f"cfs_t_loc_kicks {fit.t_loc!r}",
                    f"cfs_fit_r_squared {fit.r_squared!r}"]
    except ValueError as err:
        summary.append(f"cfs_fit_skipped {err}")
    files["fits.txt"] = "\n".join(summary) + "\n"
    write_run(out_dir, cfg, files)
    return 0


def cmd_beta(cfg: ExperimentConfig, out_dir: str, workers: int) -> int:
    anti = cfg.scaling_class == "orthogonal"
    fam = random_phase_family(cfg.kick_strength, cfg.period,
                              antisymmetric=anti)
    result = run_ensemble(fam, LatticeSpec(cfg.lattice_size, cfg.kbar),
                          _ensemble_spec(cfg), workers=workers)
    curve = estimate_beta_of_g(result.times, result.p2, cfg.period, cfg.kbar)
    theory = beta_theory(curve.inv_g, anti)
    rows = ["inv_g,beta,beta_theory,ln_l,ln_g"]
    for i in range(curve.beta.size):
        rows.append(f"{curve.inv_g[i]:.12g},{curve.beta[i]:.12g},"
                    f"{theory[i]:.12g},{curve.ln_l[i]:.12g},"
                    f"{curve.ln_g[i]:.12g}")
    write_run(out_dir, cfg, {"beta.csv": "\n".join(rows) + "\n"})
    return 0


def cmd_map_check(cfg: ExperimentConfig, out_dir: str, workers: int) -> int:
    seq = build_amplitude_modulation(cfg.kick_strength, cfg.period,
                                     cfg.control_phase_rad)
    cls = classify_symmetry(seq)
    lattice = build_nanotube(cfg.kick_strength, cfg.period,
                             cfg.control_phase_rad,
                             m1_extent=cfg.map_extent,
                             omega=cfg.quasi_energy_rad, kbar=cfg.kbar,
                             hop_range=cfg.hop_range)
    report = (f"symmetry_class {cls.tag}\n" + flux_report(lattice))
    files = {"report.txt": report, "lattice.txt": lattice.to_triplets()}
    write_run(out_dir, cfg, files)
    return 0


def cmd_merge(run_dirs: list, out_path: str) -> int:
    """Concatenate one CSV per run with provenance columns."""
    manifests = [(d, read_manifest(d)) for d in run_dirs]
    ref = manifests[0][1]["config"]
    for d, m in manifests[1:]:
        for key in ("kbar", "bins_per_site"):
            if m["config"][key] != ref[key]:
                raise ValueError(f"refusing to merge {d}: {key} "
                                 f"{m['config'][key]} != {ref[key]}")
    rows = []
    header = None
    for d, m in manifests:
        csvs = [n for n in m["outputs"] if n.endswith(".csv")]
        if len(csvs) != 1:
            raise ValueError(f"{d}: expected exactly one CSV, found {csvs}")
        with open(os.path.join(d, csvs[0])) as fh:
            lines = fh.read().splitlines()
        if header is None:
            header = "run," + lines[0]
        elif "run," + lines[0] != header:
            raise ValueError(f"{d}: CSV header mismatch")
        tag = os.path.basename(os.path.normpath(d))
        rows += [f"{tag},{ln}" for ln in lines[1:]]
    with open(out_path, "w") as fh:
        fh.write(header + "\n" + "\n".join(rows) + "\n")
    return 0


# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=0,
                   help="0 = all available cores")
    p.add_argument("--out", required=True, help="run output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gaugerotor",
        description="driven-rotor gauge-field experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "contrast", "beta", "map-check"):
        _add_common(sub.add_parser(name))
    mp = sub.add_parser("merge")
    mp.add_argument("runs", nargs="+", help="finished run directories")
    mp.add_argument("--out", required=True, help="merged CSV path")
    return ap


_DEFAULT_PRESET = {"simulate": "pi0-trace", "contrast": "contrast-dynamics",
                   "beta": "beta-g", "map-check": "map-check"}

_RUNNERS = {"simulate": cmd_simulate, "contrast": cmd_contrast,
            "beta": cmd_beta, "map-check": cmd_map_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "merge":
            return cmd_merge(args.runs, args.out)
        file_values = {}
        if args.config:
            with open(args.config) as fh:
                file_values = parse_config_text(fh.read())
        preset = args.preset or file_values.get("preset") \
            or _DEFAULT_PRESET[args.command]
        cfg = resolve_config(preset, file_values, {"seed": args.seed})
        workers = args.workers or (os.cpu_count() or 1)
        return _RUNNERS[args.command](cfg, args.out, workers)
    except Exception as err:  # noqa: BLE001 - single CLI error funnel
        record = {"error": str(err), "type": type(err).__name__}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
