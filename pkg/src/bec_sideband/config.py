"""Flat ``key = value`` run configuration with unit-suffixed key names."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .core import InteractionSpec, PulseSpec, TrapSpec

MODELS = ("ground", "modes", "spectrum_zero_t", "spectrum_thermal", "spectrum_high_t", "sweep")
REQUIRED = object()

# Unit token accepted after a value, keyed by the key-name suffix.
_SUFFIX_UNITS = {"_hz": "hz", "_um": "um", "_nk": "nk", "_ms": "ms", "_us": "us", "_a0": "a0",
                 "_hz_per_um": "hz/um"}


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = f"line {line}: " if line is not None else ""
        prefix = f"{key}: " if key is not None else ""
        super().__init__(f"{where}{prefix}{message}")
        self.key = key
        self.line = line


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _pow2(v):
    return v >= 8 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class Key:
    kind: type
    default: object
    check: object = None
    rule: str = ""


KEYS = {
    "model": Key(str, "ground", lambda v: v in MODELS, f"one of {', '.join(MODELS)}"),
    "trap.fx_hz": Key(float, REQUIRED, _positive, "> 0"),
    "trap.fy_hz": Key(float, REQUIRED, _positive, "> 0"),
    "trap.fz_hz": Key(float, REQUIRED, _positive, "> 0"),
    "trap.delta_x_um": Key(float, 0.0, _nonneg, ">= 0"),
    "trap.gamma_hz_per_um": Key(float, 0.0, _nonneg, ">= 0"),
    "trap.bottom_offset_hz": Key(float, 0.0),
    "atoms.n": Key(float, REQUIRED, lambda v: v >= 1, ">= 1"),
    "scattering.a11_a0": Key(float, 100.4, _nonneg, ">= 0"),
    "scattering.a12_a0": Key(float, 98.01, _nonneg, ">= 0"),
    "scattering.a22_a0": Key(float, 95.44, _nonneg, ">= 0"),
    "pulse.rabi_hz": Key(float, 3.5, _nonneg, ">= 0"),
    "pulse.duration_ms": Key(float, 140.0, _positive, "> 0"),
    "sweep.delta_min_hz": Key(float, -250.0),
    "sweep.delta_max_hz": Key(float, 150.0),
    "sweep.points": Key(int, 81, _positive, ">= 1"),
    "sweep.detunings_hz": Key(list, None),
    "grid.dim": Key(int, 3, lambda v: v in (1, 3), "1 or 3"),
    "grid.nx": Key(int, 64, _pow2, "a power of two >= 8"),
    "grid.ny": Key(int, 32, _pow2, "a power of two >= 8"),
    "grid.nz": Key(int, 32, _pow2, "a power of two >= 8"),
    "grid.extent_factor": Key(float, 6.0, _positive, "> 0"),
    "grid.strict": Key(bool, False),
    "solver.dt_imag_factor": Key(float, 0.1, _positive, "> 0"),
    "solver.tol": Key(float, 1e-10, _positive, "> 0"),
    "solver.dt_real_us": Key(float, 5.0, _positive, "> 0"),
    "modes.k": Key(int, 10, lambda v: 1 <= v <= 64, "between 1 and 64"),
    "thermal.temperature_nk": Key(float, 0.0, _nonneg, ">= 0"),
    "spectrum.fwhm_hz": Key(float, 10.0, _positive, "> 0"),
    "spectrum.step_hz": Key(float, 0.25, _positive, "> 0"),
    "workers": Key(int, 0, _nonneg, ">= 0 (0 means all cores)"),
}

_REFERENCE_TRAP = """
trap.fx_hz = 112
trap.fy_hz = 517
trap.fz_hz = 517
scattering.a11_a0 = 100.4
scattering.a12_a0 = 98.01
scattering.a22_a0 = 95.44
pulse.rabi_hz = 3.5
pulse.duration_ms = 140
"""

PRESETS = {
    "paper_n400": _REFERENCE_TRAP + "trap.delta_x_um = 0.13\natoms.n = 400\n",
    "paper_n800": _REFERENCE_TRAP + "trap.delta_x_um = 0.13\natoms.n = 800\n"
                                "sweep.delta_min_hz = -250\nsweep.delta_max_hz = 150\n",
    "paper_highT": _REFERENCE_TRAP + "trap.delta_x_um = 0.26\ntrap.gamma_hz_per_um = 2.5\n"
                                 "atoms.n = 630\nthermal.temperature_nk = 150\nmodes.k = 64\n"
                                 "model = spectrum_high_t\n",
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values`` holds every key, defaults included."""

    values: MappingProxyType
    sources: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __getitem__(self, key):
        return self.values[key]

    @property
    def model(self) -> str:
        return self.values["model"]

    def trap(self) -> TrapSpec:
        v = self.values
        return TrapSpec(v["trap.fx_hz"], v["trap.fy_hz"], v["trap.fz_hz"],
                        delta_x=v["trap.delta_x_um"] * 1e-6,
                        gamma=2 * math.pi * v["trap.gamma_hz_per_um"] * 1e6,
                        bottom_offset=v["trap.bottom_offset_hz"])

    def interaction(self) -> InteractionSpec:
        v = self.values
        return InteractionSpec(v["scattering.a11_a0"], v["scattering.a12_a0"],
                               v["scattering.a22_a0"])

    def pulse(self, detuning_hz: float = 0.0) -> PulseSpec:
        v = self.values
        return PulseSpec.from_hz(v["pulse.rabi_hz"], v["pulse.duration_ms"] * 1e-3, detuning_hz)

    @property
    def n_atoms(self) -> float:
        return self.values["atoms.n"]

    @property
    def dims(self) -> tuple[int, ...]:
        v = self.values
        if v["grid.dim"] == 1:
            return (v["grid.nx"],)
        return (v["grid.nx"], v["grid.ny"], v["grid.nz"])

    def detunings(self) -> np.ndarray:
        v = self.values
        if v["sweep.detunings_hz"] is not None:
            return np.asarray(v["sweep.detunings_hz"], dtype=float)
        return np.linspace(v["sweep.delta_min_hz"], v["sweep.delta_max_hz"], v["sweep.points"])

    def render(self) -> str:
        """Resolved config in the input syntax; parsing it back gives the same values."""
        out = []
        for key in KEYS:
            val = self.values[key]
            if val is None:
                continue
            if isinstance(val, list):
                text = ", ".join(repr(float(x)) for x in val)
            elif isinstance(val, bool):
                text = "true" if val else "false"
            elif isinstance(val, float):
                text = repr(val)
            else:
                text = str(val)
            out.append(f"{key} = {text}")
        return "\n".join(out) + "\n"

    def as_dict(self) -> dict:
        return dict(self.values)


def _unit_of(key):
    for suffix in sorted(_SUFFIX_UNITS, key=len, reverse=True):
        if key.endswith(suffix):
            return _SUFFIX_UNITS[suffix]
    return None


def _convert(key, spec, raw, line):
    raw = raw.strip()
    if spec.kind is list:
        unit = _unit_of(key)
        if unit and raw.lower().endswith(unit):
            raw = raw[: -len(unit)]
        items = [s for s in re.split(r"[,\s]+", raw.strip()) if s]
        try:
            return [float(s) for s in items]
        except ValueError:
            raise ConfigError(f"expected a list of numbers, got {raw!r}", key, line) from None
    if spec.kind is str:
        return raw
    if spec.kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"expected true/false, got {raw!r}", key, line)
    parts = raw.split()
    if len(parts) == 2:
        unit = _unit_of(key)
        if unit is None or parts[1].lower() != unit:
            raise ConfigError(f"unit mismatch: {parts[1]!r} given, key expects "
                              f"{unit or 'a bare number'}", key, line)
        raw = parts[0]
    elif len(parts) != 1:
        raise ConfigError(f"cannot parse value {raw!r}", key, line)
    try:
        num = float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", key, line) from None
    if not math.isfinite(num):
        raise ConfigError(f"value {raw!r} is not finite", key, line)
    if spec.kind is int:
        if num != int(num):
            raise ConfigError(f"expected an integer, got {raw!r}", key, line)
        return int(num)
    return num


def _read_pairs(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        yield lineno, key, raw


def parse_config(text: str | None = None, *, path=None, preset: str | None = None,
                 extra: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a configuration.

    Layers apply in order: ``preset``, ``text`` (or the file at ``path``),
    ``extra`` lines, then ``overrides`` (already-typed values). A key may
    appear once per layer. Errors name the key and, where the key came
    from text, the line number.
    """
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    layers = []
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
        layers.append((PRESETS[preset], False))
    if text:
        layers.append((text, True))
    if extra:
        layers.append((extra, True))
    values, sources = {}, {}
    for layer, track in layers:
        seen = {}
        for lineno, key, raw in _read_pairs(layer):
            if key not in KEYS:
                raise ConfigError("unknown key", key, lineno if track else None)
            if key in seen:
                raise ConfigError(f"duplicate key (first set on line {seen[key]})", key, lineno)
            seen[key] = lineno
            values[key] = _convert(key, KEYS[key], raw, lineno)
            sources[key] = lineno if track else f"preset {preset}"
    for key, val in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError("unknown key", key)
        values[key] = val
        sources[key] = "override"
    resolved = {}
    for key, spec in KEYS.items():
        if key not in values:
            if spec.default is REQUIRED:
                raise ConfigError("missing required key", key)
            resolved[key] = spec.default
            continue
        val = values[key]
        if spec.check is not None and not spec.check(val):
            line = sources.get(key)
            raise ConfigError(f"value {val!r} out of range (must be {spec.rule})", key,
                              line if isinstance(line, int) else None)
        resolved[key] = val
    det = resolved["sweep.detunings_hz"]
    if det is not None and len(det) == 0:
        line = sources.get("sweep.detunings_hz")
        raise ConfigError("detuning list is empty", "sweep.detunings_hz",
                          line if isinstance(line, int) else None)
    if resolved["sweep.delta_max_hz"] < resolved["sweep.delta_min_hz"]:
        raise ConfigError("must not be below sweep.delta_min_hz", "sweep.delta_max_hz",
                          sources.get("sweep.delta_max_hz") if isinstance(
                              sources.get("sweep.delta_max_hz"), int) else None)
    return RunConfig(MappingProxyType(resolved), MappingProxyType(sources))
