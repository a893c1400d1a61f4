"""Run configuration read from TOML files.

Every key is checked before any computation starts; unknown keys are errors
so that typos do not silently fall back to defaults.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .coupler import DEFAULT_RELATIVE_WEIGHTS, CouplerGeometry, calibrated_geometry
from .errors import ConfigError, QuafeError
from .waveguide import POLARIZATIONS, WaveguideSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "load_config", "default_config", "parse_sweep", "DEFAULT_CONFIG_TEXT"]

_SECTIONS = {
    "waveguide": {"epsilon", "width_nm", "height_nm", "max_modes", "polarization"},
    "coupler": {"b_nm", "E_DC_V_per_mm", "relative_weights", "calibration_energy_keV"},
    "run": {"energy_keV", "energy_sweep", "threads", "format", "out", "beam_current_per_s",
            "grating_factor", "seed"},
}
FORMATS = ("csv", "json")


def _default_text() -> str:
    return resources.files("quafe").joinpath("data/default.toml").read_text(encoding="utf-8")


DEFAULT_CONFIG_TEXT = _default_text()


def parse_sweep(text: str, integer: bool = False):
    """``lo:hi:steps`` (or ``lo:hi`` for integer ranges) to a list of values."""
    parts = text.split(":")
    try:
        if integer:
            if len(parts) != 2:
                raise ValueError
            lo, hi = int(parts[0]), int(parts[1])
            if lo > hi:
                raise ConfigError(f"range {text!r}: lower bound exceeds upper bound")
            return list(range(lo, hi + 1))
        if len(parts) != 3:
            raise ValueError
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        form = "lo:hi" if integer else "lo:hi:steps"
        raise ConfigError(f"expected {form}, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ConfigError(f"sweep {text!r}: bounds must be finite and ordered")
    if steps < 0:
        raise ConfigError(f"sweep {text!r}: step count must be non-negative")
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


@dataclass(frozen=True)
class RunConfig:
    waveguide: WaveguideSpec
    geometry: CouplerGeometry  # uncalibrated; see calibrated()
    relative_weights: tuple = DEFAULT_RELATIVE_WEIGHTS
    calibration_energy_keV: float = 200.0
    energies_keV: tuple = (200.0,)
    output_format: str = "csv"
    out: Optional[str] = None
    threads: int = 1
    beam_current_per_s: float = 1e9
    grating_factor: float = 1.0
    seed: int = 0  # reserved; every computation is deterministic
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.output_format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.threads < 1:
            raise ConfigError("thread count must be at least 1")
        if any(not e > 0 for e in self.energies_keV):
            raise ConfigError("beam energies must be positive")
        if not self.beam_current_per_s >= 0 or not self.grating_factor > 0:
            raise ConfigError("beam current must be non-negative and grating factor positive")

    def calibrated(self) -> CouplerGeometry:
        """Geometry with base rates fitted to the anchors (computed once)."""
        if "geometry" not in self._cache:
            self._cache["geometry"] = calibrated_geometry(
                self.waveguide, self.geometry, self.relative_weights, self.calibration_energy_keV * 1e3
            )
        return self._cache["geometry"]

    def with_overrides(self, **changes) -> "RunConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "_cache"}
        data.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig(**data)


def _get(table, key, kind, section):
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"[{section}] {key}: expected {kind.__name__}, got {value!r}")
    return value


def _from_dict(data: dict) -> RunConfig:
    for section, table in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        unknown = set(table) - _SECTIONS[section]
        if unknown:
            raise ConfigError(f"[{section}]: unknown keys {sorted(unknown)}")
    defaults = tomllib.loads(DEFAULT_CONFIG_TEXT)
    merged = {s: {**defaults.get(s, {}), **data.get(s, {})} for s in _SECTIONS}
    wg, cp, run = merged["waveguide"], merged["coupler"], merged["run"]
    try:
        polarization = _get(wg, "polarization", str, "waveguide")
        if polarization not in POLARIZATIONS:
            raise ConfigError(f"[waveguide] polarization must be one of {POLARIZATIONS}")
        spec = WaveguideSpec(
            _get(wg, "epsilon", float, "waveguide"),
            _get(wg, "width_nm", float, "waveguide"),
            _get(wg, "height_nm", float, "waveguide"),
            _get(wg, "max_modes", int, "waveguide"),
            polarization,
        )
        geometry = CouplerGeometry.from_lab_units(
            _get(cp, "b_nm", float, "coupler"), _get(cp, "E_DC_V_per_mm", float, "coupler")
        )
        weights = cp["relative_weights"]
        if not isinstance(weights, list) or not all(isinstance(w, (int, float)) for w in weights):
            raise ConfigError("[coupler] relative_weights must be a list of numbers")
        if len(weights) < spec.max_modes - 1:
            raise ConfigError(f"[coupler] relative_weights needs {spec.max_modes - 1} entries")
        if "energy_sweep" in run:
            energies = parse_sweep(_get(run, "energy_sweep", str, "run"))
        else:
            energies = [_get(run, "energy_keV", float, "run")]
        return RunConfig(
            waveguide=spec,
            geometry=geometry,
            relative_weights=tuple(float(w) for w in weights),
            calibration_energy_keV=_get(cp, "calibration_energy_keV", float, "coupler"),
            energies_keV=tuple(energies),
            output_format=_get(run, "format", str, "run"),
            out=run.get("out"),
            threads=_get(run, "threads", int, "run"),
            beam_current_per_s=_get(run, "beam_current_per_s", float, "run"),
            grating_factor=_get(run, "grating_factor", float, "run"),
            seed=_get(run, "seed", int, "run"),
        )
    except ConfigError:
        raise
    except QuafeError as exc:
        raise ConfigError(str(exc)) from exc


def default_config() -> RunConfig:
    return _from_dict({})


def load_config(path=None, text: Optional[str] = None) -> RunConfig:
    """Read a TOML file (or ``text``); missing keys take the shipped defaults."""
    if path is None and text is None:
        return default_config()
    try:
        if text is None:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        else:
            data = tomllib.loads(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path or '<config>'}: {exc}") from exc
    return _from_dict(data)
