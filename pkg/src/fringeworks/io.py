"""Delimited/JSON serialization, dataset ingestion, and run manifests.

Numbers are written with 17 significant digits and a locale-independent
decimal point, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ExperimentalDataset, VisibilityTrace
from .dynamics import Trajectory
from .pattern import IntensityProfile


class DatasetFormatError(ValueError):
    pass


def fmt(value: float) -> str:
    """17-significant-digit decimal representation."""
    return format(float(value), ".17g")


# --- trajectory ------------------------------------------------------------

TRAJECTORY_HEADER = "t,A,B,C,traceLog,pre_transient"


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    lines = [TRAJECTORY_HEADER]
    for t, y in zip(traj.ts, traj.ys):
        pre = 1 if traj.is_pre_transient(float(t)) else 0
        lines.append(
            f"{fmt(t)},{fmt(y[0])},{fmt(y[1])},{fmt(y[2])},{fmt(y[3])},{pre}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trajectory_csv(path: Path) -> dict:
    text = path.read_text(encoding="utf-8").strip().splitlines()
    if not text or text[0] != TRAJECTORY_HEADER:
        raise DatasetFormatError(f"{path}: expected header {TRAJECTORY_HEADER!r}")
    rows = [line.split(",") for line in text[1:]]
    cols = np.array([[float(v) for v in row] for row in rows])
    return {
        "t": cols[:, 0], "A": cols[:, 1], "B": cols[:, 2], "C": cols[:, 3],
        "traceLog": cols[:, 4], "pre_transient": cols[:, 5].astype(bool),
    }


def trajectory_json(traj: Trajectory, config_echo: dict | None = None) -> dict:
    return {
        "tol": traj.tol,
        "env": _env_echo(traj.env),
        "config": config_echo,
        "samples": [
            {
                "t": float(t), "A": float(y[0]), "B": float(y[1]),
                "C": float(y[2]), "traceLog": float(y[3]),
                "pre_transient": bool(traj.is_pre_transient(float(t))),
            }
            for t, y in zip(traj.ts, traj.ys)
        ],
    }


def _env_echo(env) -> dict:
    out = {"kind": env.kind}
    if env.kind == "qbm_ohmic":
        out.update(gamma0=env.gamma0, kBT=env.kBT, include_f=env.include_f)
    elif env.kind == "scattering":
        out.update(Lambda=env.Lambda)
    elif env.kind == "dephasing":
        out.update(deph_A=env.deph_A, deph_B=env.deph_B, deph_omega=env.deph_omega)
    elif env.kind == "composite":
        out.update(rule=env.composite_rule, members=[_env_echo(m) for m in env.composite_members])
    return out


# --- profiles --------------------------------------------------------------

def write_profile_csv(path: Path, profile: IntensityProfile, convention: str | None = None) -> None:
    lines = [
        f"# t = {fmt(profile.t)}",
        f"# model = {profile.model_tag}",
        f"# gamma = {fmt(profile.gamma_used)}",
        f"# normalization = {profile.normalization}",
    ]
    if convention is not None:
        lines.append(f"# convention = {convention}")
    lines.append("x,P")
    for x, p in zip(profile.xs, profile.values):
        lines.append(f"{fmt(x)},{fmt(p)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_profile_csv(path: Path) -> dict:
    meta: dict[str, str] = {}
    xs: list[float] = []
    ps: list[float] = []
    header_seen = False
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" in line:
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != "x,P":
                raise DatasetFormatError(f"{path}:{i}: expected header 'x,P'")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DatasetFormatError(f"{path}:{i}: expected two columns")
        xs.append(float(parts[0]))
        ps.append(float(parts[1]))
    return {"meta": meta, "x": np.array(xs), "P": np.array(ps)}


# --- visibility traces -----------------------------------------------------

def write_visibility_csv(path: Path, trace: VisibilityTrace) -> None:
    lines = [
        f"# model = {trace.model_tag}",
        f"# fringe_index = {trace.feature}",
    ]
    if trace.truncated_reason:
        lines.append(f"# truncated = {trace.truncated_reason}")
    lines.append("t,nu")
    for t, nu in zip(trace.times, trace.nu_values):
        lines.append(f"{fmt(t)},{fmt(nu)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_visibility_csv(path: Path) -> dict:
    meta: dict[str, str] = {}
    ts: list[float] = []
    nus: list[float] = []
    header_seen = False
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" in line:
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != "t,nu":
                raise DatasetFormatError(f"{path}:{i}: expected header 't,nu'")
            header_seen = True
            continue
        t_s, _, nu_s = line.partition(",")
        ts.append(float(t_s))
        nus.append(float(nu_s))
    return {"meta": meta, "t": np.array(ts), "nu": np.array(nus)}


# --- experimental datasets -------------------------------------------------

def load_dataset(path: str | Path) -> ExperimentalDataset:
    """Read `x,count[,sigma]` CSV; `# source:` comment populates meta."""
    path = Path(path)
    source = ""
    xs: list[float] = []
    counts: list[float] = []
    sigmas: list[float] = []
    n_cols = None
    header_seen = False
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("source:"):
                source = body[len("source:"):].strip()
            continue
        parts = [p.strip() for p in line.split(",")]
        if not header_seen:
            if parts[:2] != ["x", "count"] or (len(parts) == 3 and parts[2] != "sigma") or len(parts) > 3:
                raise DatasetFormatError(f"{path}:{i}: expected header 'x,count[,sigma]'")
            n_cols = len(parts)
            header_seen = True
            continue
        if len(parts) != n_cols:
            raise DatasetFormatError(f"{path}:{i}: expected {n_cols} columns, got {len(parts)}")
        try:
            x = float(parts[0])
            count = float(parts[1])
            sigma = float(parts[2]) if n_cols == 3 else None
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{i}: {exc}") from exc
        if xs and x <= xs[-1]:
            raise DatasetFormatError(f"{path}:{i}: x values must be strictly increasing")
        xs.append(x)
        counts.append(count)
        if sigma is not None:
            sigmas.append(sigma)
    if not header_seen:
        raise DatasetFormatError(f"{path}: empty dataset")
    return ExperimentalDataset.from_counts(
        xs, counts, sigma=sigmas if sigmas else None, meta=source
    )


def write_dataset_csv(path: Path, data: ExperimentalDataset) -> None:
    lines = []
    if data.meta:
        lines.append(f"# source: {data.meta}")
    lines.append("x,count,sigma")
    for x, c, s in zip(data.xs, data.counts, data.sigma):
        lines.append(f"{fmt(x)},{fmt(c)},{fmt(s)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- generic JSON + manifest ----------------------------------------------

def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class ManifestBuilder:
    command: str
    argv: list[str]
    config_echo: dict | None = None

    def __post_init__(self):
        self.input_hashes: dict[str, str] = {}
        self.outputs: list[str] = []

    def record_input(self, path: str | Path) -> None:
        p = Path(path)
        self.input_hashes[str(p)] = sha256_file(p)

    def record_output(self, path: str | Path) -> None:
        self.outputs.append(str(path))

    def write(self, out_dir: Path) -> Path:
        payload = {
            "command": self.command,
            "argv": self.argv,
            "config": self.config_echo,
            "tool_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "input_hashes": self.input_hashes,
            "outputs": sorted(self.outputs),
        }
        path = out_dir / "run-manifest.json"
        write_json(path, payload)
        return path
