"""Structured run configuration: units, geometry, environment sections.

Unknown keys anywhere in the tree are a hard error; silent typos in a
physics config are worse than a crash.  Slit separations are accepted as
"slit_separation" and converted to the half-separation L0 on ingestion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .environment import EnvironmentSpec
from .geometry import ExperimentGeometry, validate_geometry
from .units import UnitSystem


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    units: UnitSystem
    geometry: ExperimentGeometry
    environment: EnvironmentSpec
    source: str = ""
    raw: dict | None = None


def _require_keys(section: dict, allowed: set[str], where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _parse_units(section: dict) -> UnitSystem:
    _require_keys(section, {"mode", "mass", "kB"}, "units")
    mode = section.get("mode", "natural")
    if mode == "natural":
        return UnitSystem.natural(kB=float(section.get("kB", 1.0)))
    if mode == "si":
        if "mass" not in section:
            raise ConfigError("units.mode = 'si' requires units.mass (kg)")
        return UnitSystem.si(mass=float(section["mass"]))
    raise ConfigError(f"unknown units.mode {mode!r}")


def _parse_geometry(section: dict, units: UnitSystem) -> ExperimentGeometry:
    allowed = {
        "L0", "slit_separation", "sigma_x0", "sigma_y0", "k_y",
        "L", "lambda_dB", "M", "t_L",
    }
    _require_keys(section, allowed, "geometry")
    if "L0" in section and "slit_separation" in section:
        raise ConfigError("give either geometry.L0 or geometry.slit_separation, not both")
    if "L0" in section:
        L0 = float(section["L0"])
    elif "slit_separation" in section:
        L0 = float(section["slit_separation"]) / 2.0
    else:
        raise ConfigError("geometry needs L0 or slit_separation")
    if "sigma_x0" not in section:
        raise ConfigError("geometry needs sigma_x0")

    def opt(key):
        return float(section[key]) if key in section else None

    geom = ExperimentGeometry(
        L0=L0,
        sigma_x0=float(section["sigma_x0"]),
        sigma_y0=opt("sigma_y0"),
        k_y=opt("k_y"),
        L=opt("L"),
        lambda_dB=opt("lambda_dB"),
        M=opt("M") if "M" in section else (units.mass if units.mode == "si" else None),
        t_L=opt("t_L"),
    )
    return validate_geometry(geom, units)


def _parse_environment(section: dict, units: UnitSystem, nested: bool = False) -> EnvironmentSpec:
    allowed = {
        "kind", "gamma0", "kBT", "temperature", "include_f", "Lambda",
        "deph_A", "deph_B", "deph_omega", "members", "rule",
    }
    _require_keys(section, allowed, "environment")
    kind = section.get("kind")
    if kind is None:
        raise ConfigError("environment needs a kind")
    if "kBT" in section and "temperature" in section:
        raise ConfigError("give either environment.kBT or environment.temperature, not both")
    kBT = None
    if "kBT" in section:
        kBT = float(section["kBT"])
    elif "temperature" in section:
        kBT = units.thermal_energy(float(section["temperature"]))

    if kind == "composite":
        if nested:
            raise ConfigError("composite environments may not nest")
        members = tuple(
            _parse_environment(m, units, nested=True) for m in section.get("members", [])
        )
        return EnvironmentSpec(
            kind="composite", composite_members=members,
            composite_rule=section.get("rule", "paper_sum"),
        )
    return EnvironmentSpec(
        kind=kind,
        gamma0=float(section.get("gamma0", 0.0)),
        kBT=kBT,
        include_f=bool(section.get("include_f", False)),
        Lambda=float(section.get("Lambda", 0.0)),
        deph_A=float(section.get("deph_A", 0.0)),
        deph_B=float(section.get("deph_B", 0.0)),
        deph_omega=float(section.get("deph_omega", 1.0)),
    )


def parse_config(tree: dict) -> RunConfig:
    _require_keys(tree, {"units", "geometry", "environment", "source"}, "config")
    for key in ("units", "geometry", "environment"):
        if key not in tree:
            raise ConfigError(f"config is missing the {key!r} section")
    units = _parse_units(tree["units"])
    geometry = _parse_geometry(tree["geometry"], units)
    environment = _parse_environment(tree["environment"], units)
    return RunConfig(
        units=units, geometry=geometry, environment=environment,
        source=str(tree.get("source", "")), raw=tree,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        tree = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(tree)
