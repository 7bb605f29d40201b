"""Scenario files: sectioned ``key = value unit`` text converted to SI objects.

Example::

    [geometry]
    k = 9.0e6 rad/m
    T = 1.0 s

Dimensioned keys must carry a unit, dimensionless keys must not.  Errors are
raised as :class:`ConfigError` with the field path (``geometry.T``) and the
line number of the offending entry when it can be located.
"""
from __future__ import annotations

import configparser
import logging
import math
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.constants as sc

from core_model import (
    DEFAULT_RHO_DM,
    AtomSpecies,
    DilatonParams,
    DomainError,
    PerturbationParameters,
    SPECIES_PRESETS,
    dilaton_amplitude,
    perturbation_parameters,
    species_preset,
)
from gradiometer import AveragingMode, GradiometerConfig
from phase_catalog import Diffraction, MziGeometry
from quadrature import DEFAULT_RTOL

LOGGER = logging.getLogger(__name__)

__all__ = [
    "AVERAGED",
    "ConfigError",
    "NumericsConfig",
    "SCAN_PATHS",
    "ScanAxis",
    "ScenarioConfig",
    "load_scenario",
    "parse_axis",
    "parse_scenario",
    "reference_scenario",
    "resolve_threads",
]

AVERAGED = "averaged"
CONFIG_DIR = Path(__file__).resolve().parent / "configs"
REFERENCE_CONFIG = CONFIG_DIR / "reference.ini"


class ConfigError(ValueError):
    def __init__(self, message: str, *, field: str | None = None, line: int | None = None) -> None:
        self.field = field
        self.line = line
        prefix = ""
        if field:
            prefix = f"{field}: "
        suffix = f" (line {line})" if line is not None else ""
        super().__init__(f"{prefix}{message}{suffix}")


_HZ = 2.0 * math.pi
UNITS: dict[str, dict[str, float]] = {
    "mass": {
        "kg": 1.0,
        "u": sc.atomic_mass,
        "eV/c2": sc.electron_volt / sc.c**2,
        "GeV/c2": sc.giga * sc.electron_volt / sc.c**2,
    },
    "angular_frequency": {
        "rad/s": 1.0,
        "Hz": _HZ,
        "kHz": _HZ * sc.kilo,
        "MHz": _HZ * sc.mega,
        "GHz": _HZ * sc.giga,
        "THz": _HZ * sc.tera,
    },
    "time": {"s": 1.0, "ms": sc.milli, "us": sc.micro},
    "length": {"m": 1.0, "cm": sc.centi, "mm": sc.milli, "km": sc.kilo},
    "wavevector": {"rad/m": 1.0, "1/m": 1.0, "1/nm": 1.0 / sc.nano},
    "acceleration": {"m/s2": 1.0},
    # hbar_k is resolved against geometry.k once that is known
    "momentum": {"kg*m/s": 1.0, "hbar_k": math.nan},
    "density": {"J/m3": 1.0, "GeV/cm3": sc.giga * sc.electron_volt / sc.centi**3},
    "angle": {"rad": 1.0, "deg": sc.degree},
}

# section -> key -> dimension; None marks a dimensionless number, "text"/"int"/"bool" others
_SCHEMA: dict[str, dict[str, str | None]] = {
    "species": {
        "preset": "text",
        "mean_mass": "mass",
        "mass_defect": "mass",
        "eps_g": None,
        "eps_e": None,
        "eps_bar": None,
        "delta_eps": None,
    },
    "dilaton": {
        "omega_rho": "angular_frequency",
        "phi_rho": "angle",
        "rho_0": None,
        "rho_dm": "density",
        "eps_s": None,
        "phi_s": "angle",
    },
    "geometry": {
        "k": "wavevector",
        "T": "time",
        "t0": "time",
        "z0": "length",
        "p0": "momentum",
        "g0": "acceleration",
        "diffraction": "text",
    },
    "gradiometer": {"L": "length", "p1": "momentum"},
    "numerics": {
        "phi_nodes": "int",
        "phi_s_nodes": "int",
        "quadrature_rtol": None,
        "oracle_tolerance": None,
        "pair_tolerance": None,
        "timescale_tolerance": None,
        "brace_terms": "bool",
    },
    "scan": {"axis1": "text", "axis2": "text"},
}

_REQUIRED = {
    "dilaton": ("omega_rho",),
    "geometry": ("k", "T"),
    "gradiometer": ("L",),
}

SCAN_PATHS: tuple[str, ...] = (
    "species.eps_g",
    "species.eps_e",
    "species.eps_bar",
    "species.delta_eps",
    "species.mass_defect",
    "dilaton.omega_rho",
    "dilaton.rho_0",
    "dilaton.eps_s",
    "dilaton.phi_s",
    "geometry.T",
    "geometry.k",
    "geometry.z0",
    "geometry.p0",
    "geometry.g0",
    "geometry.t0",
    "gradiometer.L",
    "gradiometer.p1",
    "ratio.omega_over_omegac",
    "ratio.deltaeps_over_bareps",
)


@dataclass(frozen=True)
class NumericsConfig:
    phi_nodes: int = 256
    phi_s_nodes: int = 64
    quadrature_rtol: float = DEFAULT_RTOL
    oracle_tolerance: float = 1e-6
    pair_tolerance: float = 1e-9
    timescale_tolerance: float = 1e-10
    brace_terms: bool = False

    def with_tolerance(self, tolerance: float) -> "NumericsConfig":
        """Use one threshold for every verification gate."""
        return replace(
            self,
            oracle_tolerance=tolerance,
            pair_tolerance=tolerance,
            timescale_tolerance=tolerance,
        )


@dataclass(frozen=True)
class ScanAxis:
    path: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"

    def __post_init__(self) -> None:
        if self.path not in SCAN_PATHS:
            raise ConfigError(
                f"unknown parameter path {self.path!r}; valid paths: {', '.join(SCAN_PATHS)}",
                field="scan",
            )
        if self.points < 1:
            raise ConfigError("an axis needs at least one point", field=self.path)
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"spacing must be linear or log, got {self.spacing!r}", field=self.path)
        if self.spacing == "log" and not (self.start > 0 and self.stop > 0):
            raise ConfigError("log spacing needs positive bounds", field=self.path)

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


def parse_axis(text: str) -> ScanAxis:
    """Parse ``PATH:START:STOP:POINTS[:log|linear]`` (values in SI units)."""

    parts = [part.strip() for part in text.split(":")]
    if len(parts) not in (4, 5):
        raise ConfigError(f"axis {text!r} must read PATH:START:STOP:POINTS[:log|linear]", field="scan")
    path = parts[0]
    try:
        start, stop = float(parts[1]), float(parts[2])
        points = int(parts[3])
    except ValueError as exc:
        raise ConfigError(f"axis {text!r} has non-numeric bounds", field="scan") from exc
    spacing = parts[4] if len(parts) == 5 else "linear"
    return ScanAxis(path, start, stop, points, spacing)


@dataclass(frozen=True)
class ScenarioConfig:
    species: AtomSpecies
    dilaton: DilatonParams
    geometry: MziGeometry
    gradiometer: GradiometerConfig
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    phi_rho_averaged: bool = True
    phi_s_averaged: bool = False
    # set when rho_0 follows from a dark-matter density and must track omega_rho
    rho_dm: float | None = DEFAULT_RHO_DM
    scan_axes: tuple[ScanAxis, ...] = ()
    source: str = "<reference>"

    def perturbation(self) -> PerturbationParameters:
        return perturbation_parameters(self.species, self.dilaton, self.numerics.brace_terms)

    @property
    def averaging_mode(self) -> AveragingMode:
        if self.phi_s_averaged:
            return AveragingMode.INDEPENDENT_PHI_S
        return AveragingMode.COHERENT

    def require_fixed_phase(self) -> None:
        if self.phi_rho_averaged:
            raise ConfigError(
                "phase reports need a fixed phi_rho, found 'averaged'", field="dilaton.phi_rho"
            )

    def require_averaged_phase(self) -> None:
        if not self.phi_rho_averaged:
            raise ConfigError(
                "signal amplitudes average over phi_rho; set phi_rho = averaged",
                field="dilaton.phi_rho",
            )

    def with_value(self, path: str, value: float) -> "ScenarioConfig":
        """Return a copy with one scan parameter replaced (SI units)."""

        if path not in SCAN_PATHS:
            raise ConfigError(
                f"unknown parameter path {path!r}; valid paths: {', '.join(SCAN_PATHS)}",
                field="scan",
            )
        section, key = path.split(".", 1)
        value = float(value)
        species, dilaton, geometry = self.species, self.dilaton, self.geometry
        L, p1, rho_dm = self.gradiometer.L, self.gradiometer.p1, self.rho_dm

        if path == "ratio.omega_over_omegac":
            species = replace(species, mass_defect=value * species.mean_mass)
        elif path == "ratio.deltaeps_over_bareps":
            if species.eps_bar == 0.0:
                raise DomainError("coupling ratio axis needs a non-zero mean coupling")
            species = replace(species, delta_eps=value * species.eps_bar)
        elif path == "species.eps_g":
            species = species.with_couplings(value, species.eps_e)
        elif path == "species.eps_e":
            species = species.with_couplings(species.eps_g, value)
        elif section == "species":
            species = replace(species, **{key: value})
        elif key == "rho_0":
            dilaton = replace(dilaton, rho_0=value)
            rho_dm = None
        elif key == "phi_s" and self.phi_s_averaged:
            raise ConfigError(
                "phi_s is averaged in this scenario and cannot be scanned", field="dilaton.phi_s"
            )
        elif section == "dilaton":
            dilaton = replace(dilaton, **{_DILATON_FIELDS[key]: value})
            if key == "omega_rho" and rho_dm is not None:
                dilaton = replace(dilaton, rho_0=dilaton_amplitude(value, rho_dm))
        elif section == "geometry":
            geometry = replace(geometry, **{key: value})
        elif key == "L":
            L = value
        else:
            p1 = value
        gradiometer = GradiometerConfig(geometry, L, p1)
        return replace(
            self,
            species=species,
            dilaton=dilaton,
            geometry=geometry,
            gradiometer=gradiometer,
            rho_dm=rho_dm,
        )


_DILATON_FIELDS = {"omega_rho": "omega_rho", "eps_s": "eps_S", "phi_s": "phi_S"}


class _Source:
    """Raw sections plus a lookup of the line each key sits on."""

    _SECTION = re.compile(r"^\s*\[([^\]]+)\]")
    _KEY = re.compile(r"^\s*([^=:#;\s]+)\s*[=:]")

    def __init__(self, text: str, name: str) -> None:
        self.name = name
        self.parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        self.parser.optionxform = str  # keep ``T`` and ``L`` as written
        try:
            self.parser.read_string(text, source=name)
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigError("entry outside any [section]", line=exc.lineno) from exc
        except configparser.DuplicateOptionError as exc:
            raise ConfigError(
                "duplicate key", field=f"{exc.section}.{exc.option}", line=exc.lineno
            ) from exc
        except configparser.DuplicateSectionError as exc:
            raise ConfigError("duplicate section", field=exc.section, line=exc.lineno) from exc
        except configparser.ParsingError as exc:
            line = exc.errors[0][0] if exc.errors else None
            raise ConfigError("malformed line", line=line) from exc
        self._lines: dict[tuple[str, str], int] = {}
        section = None
        for number, raw in enumerate(text.splitlines(), start=1):
            header = self._SECTION.match(raw)
            if header:
                section = header.group(1).strip()
                continue
            key = self._KEY.match(raw)
            if key and section is not None:
                self._lines.setdefault((section, key.group(1)), number)

    def line(self, section: str, key: str | None = None) -> int | None:
        return self._lines.get((section, key)) if key else None

    def error(self, section: str, key: str, message: str) -> ConfigError:
        return ConfigError(message, field=f"{section}.{key}", line=self.line(section, key))

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str) -> str:
        return self.parser.get(section, key).strip()


def _split(raw: str) -> tuple[str, str]:
    parts = raw.split(None, 1)
    if not parts:
        return "", ""
    return parts[0], parts[1].strip() if len(parts) > 1 else ""


class _Reader:
    def __init__(self, source: _Source) -> None:
        self.source = source
        self._validate_layout()

    def _validate_layout(self) -> None:
        parser = self.source.parser
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(
                    f"unknown section; valid sections: {', '.join(_SCHEMA)}", field=section
                )
            for key in parser.options(section):
                if key not in _SCHEMA[section]:
                    valid = ", ".join(_SCHEMA[section])
                    raise self.source.error(section, key, f"unknown key; valid keys: {valid}")
        for section, keys in _REQUIRED.items():
            for key in keys:
                if not self.source.has(section, key):
                    raise ConfigError("required field is missing", field=f"{section}.{key}")

    def has(self, section: str, key: str) -> bool:
        return self.source.has(section, key)

    def text(self, section: str, key: str, default: str | None = None) -> str | None:
        if not self.has(section, key):
            return default
        return self.source.raw(section, key)

    def is_averaged(self, section: str, key: str) -> bool:
        return self.has(section, key) and self.source.raw(section, key).lower() == AVERAGED

    def number(self, section: str, key: str, default: float | None = None, *, hbar_k: float | None = None):
        if not self.has(section, key):
            return default
        dimension = _SCHEMA[section][key]
        number_text, unit = _split(self.source.raw(section, key))
        try:
            if dimension == "int":
                value = int(number_text)
            else:
                value = float(number_text)
        except ValueError as exc:
            raise self.source.error(section, key, f"expected a number, got {number_text!r}") from exc
        if not math.isfinite(value):
            raise self.source.error(section, key, "value must be finite")
        if dimension is None or dimension == "int":
            if unit:
                raise self.source.error(section, key, f"dimensionless value takes no unit, got {unit!r}")
            return value
        units = UNITS[dimension]
        if not unit:
            raise self.source.error(
                section, key, f"missing unit; accepted units: {', '.join(units)}"
            )
        if unit not in units:
            raise self.source.error(
                section, key, f"unknown unit {unit!r}; accepted units: {', '.join(units)}"
            )
        if unit == "hbar_k":
            return value * hbar_k
        return value * units[unit]

    def flag(self, section: str, key: str, default: bool) -> bool:
        if not self.has(section, key):
            return default
        try:
            return self.source.parser.getboolean(section, key)
        except ValueError as exc:
            raise self.source.error(section, key, "expected true or false") from exc

    def wrap(self, section: str, key: str, build: Callable[[], object]):
        try:
            return build()
        except DomainError as exc:
            raise self.source.error(section, key, str(exc)) from exc


def _couplings(reader: _Reader) -> tuple[float, float]:
    """Mean coupling and coupling difference, from either key pair."""

    state_keys = [key for key in ("eps_g", "eps_e") if reader.has("species", key)]
    mean_keys = [key for key in ("eps_bar", "delta_eps") if reader.has("species", key)]
    if state_keys and mean_keys:
        raise reader.source.error(
            "species", mean_keys[0], "give eps_g/eps_e or eps_bar/delta_eps, not both"
        )
    if mean_keys:
        return reader.number("species", "eps_bar", 0.0), reader.number("species", "delta_eps", 0.0)
    eps_g = reader.number("species", "eps_g", 0.0)
    eps_e = reader.number("species", "eps_e", 0.0)
    return 0.5 * (eps_e + eps_g), eps_e - eps_g


def _build_species(reader: _Reader) -> AtomSpecies:
    eps_bar, delta_eps = _couplings(reader)
    preset = reader.text("species", "preset")
    if preset is not None:
        if preset not in SPECIES_PRESETS:
            raise reader.source.error(
                "species", "preset", f"unknown preset; valid presets: {', '.join(SPECIES_PRESETS)}"
            )
        base = species_preset(preset)
    elif reader.has("species", "mean_mass"):
        base = None
    else:
        raise ConfigError("give either a preset or mean_mass", field="species.mean_mass")
    mean_mass = reader.number("species", "mean_mass", base.mean_mass if base else None)
    mass_defect = reader.number("species", "mass_defect", base.mass_defect if base else 0.0)
    name = base.name if base and not reader.has("species", "mean_mass") else "custom"
    return reader.wrap(
        "species",
        "mean_mass",
        lambda: AtomSpecies(mean_mass, mass_defect, eps_bar, delta_eps, name),
    )


def _build(reader: _Reader, source_name: str) -> ScenarioConfig:
    species = _build_species(reader)

    k = reader.number("geometry", "k")
    hbar_k = sc.hbar * k
    diffraction_text = reader.text("geometry", "diffraction", Diffraction.SINGLE_PHOTON.value)
    try:
        diffraction = Diffraction(diffraction_text.lower())
    except ValueError as exc:
        valid = ", ".join(item.value for item in Diffraction)
        raise reader.source.error("geometry", "diffraction", f"valid values: {valid}") from exc
    geometry = reader.wrap(
        "geometry",
        "T",
        lambda: MziGeometry(
            k=k,
            T=reader.number("geometry", "T"),
            t0=reader.number("geometry", "t0", 0.0),
            z0=reader.number("geometry", "z0", 0.0),
            p0=reader.number("geometry", "p0", 0.0, hbar_k=hbar_k),
            g0=reader.number("geometry", "g0", sc.g),
            diffraction=diffraction,
        ),
    )
    gradiometer = reader.wrap(
        "gradiometer",
        "L",
        lambda: GradiometerConfig(
            geometry,
            reader.number("gradiometer", "L"),
            reader.number("gradiometer", "p1", 0.0, hbar_k=hbar_k),
        ),
    )

    omega_rho = reader.number("dilaton", "omega_rho")
    if reader.has("dilaton", "rho_0") and reader.has("dilaton", "rho_dm"):
        raise reader.source.error("dilaton", "rho_dm", "rho_0 and rho_dm are mutually exclusive")
    phi_rho_averaged = not reader.has("dilaton", "phi_rho") or reader.is_averaged("dilaton", "phi_rho")
    phi_s_averaged = reader.is_averaged("dilaton", "phi_s")
    phi_rho = 0.0 if phi_rho_averaged else reader.number("dilaton", "phi_rho")
    phi_s = 0.0 if phi_s_averaged else reader.number("dilaton", "phi_s", 0.0)
    eps_s = reader.number("dilaton", "eps_s", 0.0)
    if reader.has("dilaton", "rho_0"):
        rho_dm = None
        rho_0 = reader.number("dilaton", "rho_0")
    else:
        rho_dm = reader.number("dilaton", "rho_dm", DEFAULT_RHO_DM)
        rho_0 = reader.wrap("dilaton", "rho_dm", lambda: dilaton_amplitude(omega_rho, rho_dm))
    dilaton = reader.wrap(
        "dilaton",
        "omega_rho",
        lambda: DilatonParams(omega_rho, rho_0, phi_rho, eps_s, phi_s, rho_dm),
    )

    defaults = NumericsConfig()
    numerics = NumericsConfig(
        phi_nodes=reader.number("numerics", "phi_nodes", defaults.phi_nodes),
        phi_s_nodes=reader.number("numerics", "phi_s_nodes", defaults.phi_s_nodes),
        quadrature_rtol=reader.number("numerics", "quadrature_rtol", defaults.quadrature_rtol),
        oracle_tolerance=reader.number("numerics", "oracle_tolerance", defaults.oracle_tolerance),
        pair_tolerance=reader.number("numerics", "pair_tolerance", defaults.pair_tolerance),
        timescale_tolerance=reader.number(
            "numerics", "timescale_tolerance", defaults.timescale_tolerance
        ),
        brace_terms=reader.flag("numerics", "brace_terms", defaults.brace_terms),
    )
    for key in ("phi_nodes", "phi_s_nodes"):
        if getattr(numerics, key) < 1:
            raise reader.source.error("numerics", key, "node counts must be positive")

    axes = []
    for key in ("axis1", "axis2"):
        text = reader.text("scan", key)
        if text is not None:
            try:
                axes.append(parse_axis(text))
            except ConfigError as exc:
                raise reader.source.error("scan", key, str(exc)) from exc

    return ScenarioConfig(
        species=species,
        dilaton=dilaton,
        geometry=geometry,
        gradiometer=gradiometer,
        numerics=numerics,
        phi_rho_averaged=phi_rho_averaged,
        phi_s_averaged=phi_s_averaged,
        rho_dm=rho_dm,
        scan_axes=tuple(axes),
        source=source_name,
    )


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    scenario = _build(_Reader(_Source(text, source)), source)
    LOGGER.debug("loaded scenario %s (%s)", source, scenario.species.name)
    return scenario


def load_scenario(path: str | os.PathLike) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_scenario(text, str(path))


def reference_scenario(phi_rho: float | None = None) -> ScenarioConfig:
    """Strontium clock gradiometer from ``configs/reference.ini``.

    ``phi_rho`` fixes the dilaton phase for phase reports; by default the
    scenario averages over it.
    """

    scenario = load_scenario(REFERENCE_CONFIG)
    scenario = replace(scenario, source="<reference>")
    if phi_rho is None:
        return scenario
    return replace(scenario, dilaton=scenario.dilaton.with_phase(phi_rho), phi_rho_averaged=False)


def resolve_threads(flag_value: int | None) -> int:
    """Thread count from the flag, else ``DILATON_MONITOR_THREADS``, else 1."""

    if flag_value is not None:
        count = flag_value
    else:
        override = os.getenv("DILATON_MONITOR_THREADS")
        if not override:
            return 1
        try:
            count = int(override)
        except ValueError as exc:
            raise ConfigError(
                f"DILATON_MONITOR_THREADS must be an integer, got {override!r}"
            ) from exc
    if count < 1:
        raise ConfigError("thread count must be at least 1")
    return count
