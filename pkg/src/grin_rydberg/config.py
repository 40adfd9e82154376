"""Run configuration: flat ``section.key = value`` text files.

Lines starting with ``#`` and trailing `` #`` text are comments. Unknown keys are rejected so typos
do not silently fall back to defaults. Relative paths resolve against the
directory holding the config file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from .errors import ConfigurationError
from .lens import LensSpec
from .rydberg import AtomicTransition, MeasurementConfig

# key -> (type, default); None default means "unset"
DEFAULTS: Dict[str, tuple] = {
    "lens.radius_mm": (float, 196.0),
    "lens.cell_mm": (float, 14.0),
    "lens.design_freq_hz": (float, 3.5e9),
    "lens.wavelength_mm": (float, 84.0),
    "lens.material_index": (float, 2.99),
    "transition.dipole_moment_cm": (float, None),
    "transition.rf_frequency_hz": (float, 3.6e9),
    "transition.label": (str, ""),
    "measurement.time_s": (float, 1.0),
    "measurement.count": (int, 1),
    "setup.chamber_distance_m": (float, 3.2),
    "setup.eit_distance_m": (float, 2.2),
    "setup.lens_cell_offset_mm": (float, 24.0),
    "trace.offsets": ("floats", (-0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5)),
    "trace.step_fraction": (float, 1e-3),
    "scan.freq_hz": (float, 3.6e9),
    "scan.pitch_fraction": (float, 8.0),
    "scan.x_range_mm": ("floats", (-100.0, 100.0, 1.0)),
    "scan.z_range_mm": ("floats", (-50.0, 50.0, 1.0)),
    "scan.offset_mm": (float, 0.0),
    "eit.delta_f_hz": (float, 10e6),
    "eit.linewidth_hz": (float, 2e6),
    "eit.amplitude": (float, 1.0),
    "eit.noise_rms": (float, 0.01),
    "eit.gamma": (float, 2.0),
    "eit.grid_hz": ("floats", (-40e6, 40e6, 0.1e6)),
    "eit.prominence": (float, 0.25),
    "io.out_dir": ("path", None),
    "io.trace": ("path", None),
    "io.with_lens": ("path", None),
    "io.without_lens": ("path", None),
    "io.scan": ("path", None),
    "io.trace_column.detuning_hz": (str, None),
    "io.trace_column.transmission": (str, None),
    "io.scan_column.x_mm": (str, None),
    "io.scan_column.y_mm": (str, None),
    "io.scan_column.z_mm": (str, None),
    "io.scan_column.amplitude_db": (str, None),
    "sensitivity.gamma_simulated": (float, None),
    "seed": (int, 0),
}


def _convert(key, kind, raw: str, base: Path):
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is str:
            return raw
        if kind == "floats":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if kind == "path":
            p = Path(raw)
            return p if p.is_absolute() else base / p
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r}") from None
    raise AssertionError(kind)


def parse_config_text(text: str, base: Path = Path(".")) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        # a '#' preceded by whitespace starts a trailing comment
        stripped = re.split(r"\s#", line, maxsplit=1)[0].strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, DEFAULTS[key][0], raw, base)
    return values


@dataclass
class RunConfig:
    values: Dict[str, object] = field(default_factory=dict)
    source: Optional[Path] = None

    @classmethod
    def load(cls, path=None, overrides: Optional[Dict[str, object]] = None) -> "RunConfig":
        vals = {k: default for k, (_, default) in DEFAULTS.items()}
        src = None
        if path is not None:
            src = Path(path)
            try:
                text = src.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigurationError(f"cannot read config {src}: {exc}") from None
            vals.update(parse_config_text(text, src.parent))
        vals.update({k: v for k, v in (overrides or {}).items() if v is not None})
        cfg = cls(vals, src)
        cfg.lens_spec()  # validate early
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def lens_spec(self) -> LensSpec:
        wl = self["lens.wavelength_mm"]
        return LensSpec(radius_R=self["lens.radius_mm"] * 1e-3,
                        design_freq=self["lens.design_freq_hz"],
                        cell_size_c=self["lens.cell_mm"] * 1e-3,
                        material_index_n=self["lens.material_index"],
                        wavelength=None if wl is None else wl * 1e-3)

    def transition(self) -> AtomicTransition:
        mu = self["transition.dipole_moment_cm"]
        if mu is None:
            raise ConfigurationError("transition.dipole_moment_cm is required (no default)")
        return AtomicTransition(mu, self["transition.rf_frequency_hz"],
                                self["transition.label"])

    def measurement(self) -> MeasurementConfig:
        return MeasurementConfig(self["measurement.time_s"], self["measurement.count"])

    def columns(self, prefix: str) -> Dict[str, str]:
        head = f"io.{prefix}_column."
        return {k[len(head):]: v for k, v in self.values.items()
                if k.startswith(head) and v is not None}

    def range3(self, key) -> Tuple[float, float, float]:
        vals = self[key]
        if len(vals) != 3:
            raise ConfigurationError(f"{key} needs 'start, stop, step'")
        return tuple(vals)

    def require_path(self, key) -> Path:
        p = self[key]
        if p is None:
            raise ConfigurationError(f"{key} is required for this subcommand")
        if not Path(p).exists():
            raise ConfigurationError(f"{key}: file not found: {p}")
        return Path(p)
