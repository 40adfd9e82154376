"""Workflows behind the ``grin-rydberg`` subcommands.

Every workflow writes into ``out_dir`` and returns the list of files it
produced. Outputs depend only on the config and seed.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from . import focal, ingest, lens, raytrace, rydberg
from .config import RunConfig
from .errors import ConfigurationError

log = logging.getLogger(__name__)


def _report(pairs) -> str:
    lines = []
    for key, value in pairs:
        if isinstance(value, float):
            value = f"{value:.2f}" if key.endswith("_db") else f"{value:.9g}"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def _write(out_dir: Path, name: str, data) -> Path:
    path = out_dir / name
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def run_design(cfg: RunConfig, out_dir: Path) -> List[Path]:
    spec = cfg.lens_spec()
    lattice = lens.discretize_lens(spec)
    out = [_write(out_dir, "lattice.csv", lens.lattice_csv(lattice))]
    triangles = 0
    for seg, data in lens.iter_segments(lattice):
        out.append(_write(out_dir, f"lens_segment_{seg}.stl", data))
        triangles += len(lens.read_stl(data))
    solid = int(lattice.solid_mask.sum())
    out.append(_write(out_dir, "design_report.txt", _report([
        ("cells_per_axis", lattice.shape[0]),
        ("candidate_cells", len(lattice)),
        ("solid_cells", solid),
        ("triangles", triangles),
        ("max_fill_fraction", float(lattice.fill_fraction.max())),
        ("max_b_mm", float(lattice.fill_b.max() * 1e3)),
        ("center_index", float(lattice.target_index[np.argmin(lattice.radial_r)])),
    ])))
    return out


def run_trace(cfg: RunConfig, out_dir: Path) -> List[Path]:
    spec = cfg.lens_spec()
    R = spec.radius_R
    step = cfg["trace.step_fraction"] * R
    direction = np.array([0.0, 0.0, 1.0])
    out = []
    offsets = cfg["trace.offsets"]
    for k, frac in enumerate(offsets):
        traj = raytrace.trace_ray(raytrace.parallel_ray(frac * R, direction, spec),
                                  spec, step)
        out.append(_write(out_dir, f"trajectory_{k:02d}.csv", traj.to_csv()))
    pairs = [("rays", len(offsets))]
    if len(offsets) >= 3:
        bundle = raytrace.focus_parallel_bundle(direction, [f * R for f in offsets], spec, step)
        antipode = spec.origin + R * direction
        pairs += [
            ("focus_x_m", float(bundle.focus_point[0])),
            ("focus_y_m", float(bundle.focus_point[1])),
            ("focus_z_m", float(bundle.focus_point[2])),
            ("rms_spread_m", bundle.rms_spread),
            ("rms_from_antipode_m", float(np.sqrt(np.mean(
                np.sum((bundle.crossings - antipode) ** 2, axis=1))))),
            ("focused", str(bundle.focused).lower()),
        ]
    out.append(_write(out_dir, "focus_report.txt", _report(pairs)))
    return out


def _simulate_focus(cfg: RunConfig):
    spec = cfg.lens_spec()
    wavelength = lens.C0 / cfg["scan.freq_hz"]
    pitch = wavelength / cfg["scan.pitch_fraction"]
    patches = focal.lens_aperture(spec, pitch)
    nominal = focal.focal_point(spec, offset=cfg["scan.offset_mm"] * 1e-3)
    return spec, wavelength, patches, nominal


def simulated_gain(cfg: RunConfig) -> focal.GainEstimate:
    override = cfg["sensitivity.gamma_simulated"]
    if override is not None:
        return focal.GainEstimate(override, focal.SIMULATED)
    _, wavelength, patches, nominal = _simulate_focus(cfg)
    peak = focal.locate_focus(patches, wavelength, nominal)
    e = abs(focal.huygens_field(patches, peak, wavelength))
    return focal.focusing_gain(e, focal.incident_reference(wavelength))


def run_fieldmap(cfg: RunConfig, out_dir: Path) -> List[Path]:
    spec, wavelength, patches, nominal = _simulate_focus(cfg)
    ref = focal.incident_reference(wavelength)
    out = []
    for axis, key in (("x", "scan.x_range_mm"), ("z", "scan.z_range_mm")):
        lo, hi, st = (v * 1e-3 for v in cfg.range3(key))
        samples = focal.field_scan(patches, axis, (lo, hi, st), wavelength,
                                   through=nominal, reference=ref)
        out.append(_write(out_dir, f"scan_{axis}.csv",
                          focal.scan_csv(samples, axis, through=nominal)))
    peak = focal.locate_focus(patches, wavelength, nominal)
    waist, _ = focal.beam_waist(patches, wavelength, peak)
    e_nominal = abs(focal.huygens_field(patches, nominal, wavelength))
    e_peak = abs(focal.huygens_field(patches, peak, wavelength))
    cell = focal.focal_point(spec, offset=cfg["setup.lens_cell_offset_mm"] * 1e-3)
    e_cell = abs(focal.huygens_field(patches, cell, wavelength))
    g_nom = focal.focusing_gain(e_nominal, ref)
    g_peak = focal.focusing_gain(e_peak, ref)
    g_cell = focal.focusing_gain(e_cell, ref)
    pairs = [
        ("wavelength_mm", wavelength * 1e3),
        ("patches", len(patches)),
        ("peak_z_mm", float((peak - spec.origin)[2] * 1e3)),
        ("fwhm_x_mm", waist * 1e3),
        ("airy_fwhm_mm", focal.airy_fwhm(wavelength, 0.5) * 1e3),
        ("gamma_nominal", g_nom.gamma_linear),
        ("gamma_nominal_db", g_nom.gamma_db),
        ("gamma_peak", g_peak.gamma_linear),
        ("gamma_peak_db", g_peak.gamma_db),
        ("gamma_peak_power_db", g_peak.gamma_db_power),
        ("gamma_cell", g_cell.gamma_linear),
        ("gamma_cell_db", g_cell.gamma_db),
        ("chamber_distance_m", cfg["setup.chamber_distance_m"]),
        ("eit_distance_m", cfg["setup.eit_distance_m"]),
    ]
    scan_path = cfg["io.scan"]
    if scan_path is not None:
        records = ingest.load_scan(cfg.require_path("io.scan"), cfg.columns("scan"))
        measured, rec = ingest.peak_gain(records)
        out.append(_write(out_dir, "measured_z_cut.csv", ingest.scan_csv(ingest.z_cut(records))))
        out.append(_write(out_dir, "measured_x_cut.csv", ingest.scan_csv(ingest.x_cut(records))))
        pairs += [("measured_gamma", measured.gamma_linear),
                  ("measured_gamma_db", measured.gamma_db),
                  ("measured_peak_x_mm", rec.x), ("measured_peak_y_mm", rec.y),
                  ("measured_peak_z_mm", rec.z)]
    out.append(_write(out_dir, "fieldmap_report.txt", _report(pairs)))
    return out


def _fitted_gain(cfg: RunConfig):
    if cfg["io.with_lens"] is None or cfg["io.without_lens"] is None:
        return None
    cols = cfg.columns("trace")
    w = ingest.load_trace(cfg.require_path("io.with_lens"), cols)
    wo = ingest.load_trace(cfg.require_path("io.without_lens"), cols)
    return rydberg.gain_from_spectra(w, wo, prominence=cfg["eit.prominence"])


def run_sensitivity(cfg: RunConfig, out_dir: Path) -> List[Path]:
    tr = cfg.transition()
    mc = cfg.measurement()
    rows = [("bare", focal.GainEstimate(1.0, "none"))]
    fitted = _fitted_gain(cfg)
    if fitted is not None:
        rows.append(("fitted", fitted))
    rows.append(("simulated", simulated_gain(cfg)))
    lines = ["label,source,gamma,gamma_db,e_min_v_per_m"]
    for label, g in rows:
        e = rydberg.enhanced_min_field(tr, mc, g.gamma_linear)
        lines.append(f"{label},{g.source},{g.gamma_linear:.9g},{g.gamma_db:.2f},{e:.9g}")
    return [_write(out_dir, "sensitivity.csv", "\n".join(lines) + "\n")]


def run_eit_synth(cfg: RunConfig, out_dir: Path) -> List[Path]:
    rng = np.random.default_rng(cfg["seed"])
    grid = cfg.range3("eit.grid_hz")
    df, lw = cfg["eit.delta_f_hz"], cfg["eit.linewidth_hz"]
    amp, noise = cfg["eit.amplitude"], cfg["eit.noise_rms"]
    without = rydberg.synth_eit_spectrum(df, lw, amp, noise, grid, rng=rng,
                                         meta={"lens": False})
    with_ = rydberg.synth_eit_spectrum(df * cfg["eit.gamma"], lw, amp, noise, grid, rng=rng,
                                       meta={"lens": True})
    return [_write(out_dir, "eit_without_lens.csv", without.to_csv()),
            _write(out_dir, "eit_with_lens.csv", with_.to_csv())]


def run_eit_fit(cfg: RunConfig, out_dir: Path) -> List[Path]:
    spectrum = ingest.load_trace(cfg.require_path("io.trace"), cfg.columns("trace"))
    fit = rydberg.fit_splitting(spectrum, prominence=cfg["eit.prominence"])
    text = fit.report()
    if cfg["transition.dipole_moment_cm"] is not None:
        e = rydberg.field_from_splitting(fit, cfg.transition())
        text += _report([("field_v_per_m", e)])
    return [_write(out_dir, "eit_fit.txt", text)]


def run_gain(cfg: RunConfig, out_dir: Path) -> List[Path]:
    cols = cfg.columns("trace")
    w = ingest.load_trace(cfg.require_path("io.with_lens"), cols)
    wo = ingest.load_trace(cfg.require_path("io.without_lens"), cols)
    prom = cfg["eit.prominence"]
    fw = rydberg.fit_splitting(w, prominence=prom)
    fo = rydberg.fit_splitting(wo, prominence=prom)
    g = focal.GainEstimate(fw.delta_f_hz / fo.delta_f_hz, focal.MEASURED)
    return [_write(out_dir, "gain_report.txt", _report([
        ("delta_f_with_hz", fw.delta_f_hz),
        ("delta_f_without_hz", fo.delta_f_hz),
        ("gamma", g.gamma_linear),
        ("gamma_db", g.gamma_db),
        ("gamma_power_db", g.gamma_db_power),
        ("source", g.source),
    ]))]


SUBCOMMANDS: Dict[str, Callable[[RunConfig, Path], List[Path]]] = {
    "design": run_design,
    "trace": run_trace,
    "fieldmap": run_fieldmap,
    "sensitivity": run_sensitivity,
    "eit-synth": run_eit_synth,
    "eit-fit": run_eit_fit,
    "gain": run_gain,
}


def run(subcommand: str, cfg: RunConfig, out_dir) -> List[Path]:
    if subcommand not in SUBCOMMANDS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return SUBCOMMANDS[subcommand](cfg, out_dir)
