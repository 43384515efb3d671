"""Command-line entry point.

Subcommands: simulate, pattern, visibility, timescales, bounds, dephasing,
fit.  Every run writes its delimited/JSON outputs plus a run-manifest.json
into the output directory (default ./out, overridable with --out or the
FRINGEWORKS_OUT environment variable); the report commands also render a
matplotlib figure next to the data unless --no-plot is given.

Exit codes: 0 success, 1 validation error, 2 numerical failure.  Errors are
reported as a single machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, io, plots
from .analysis import MissingFringeError, synthetic_dataset, visibility_trace
from .config import ConfigError, RunConfig, load_config
from .dynamics import (
    InvariantViolationError,
    initial_state,
    integrate,
)
from .environment import EnvironmentError_, EnvironmentSpec, UnsupportedKindError
from .fitting import fit_parameter, gamma_from_parameter
from .geometry import GeometryError, geometry_to_natural
from .io import DatasetFormatError
from .overlap import (
    decoherence_time,
    dephasing_average_oracle,
    dephasing_factor,
    overlap_at,
    overlap_at_flight_time,
    parameter_bound,
)
from .pattern import (
    GammaRangeError,
    farfield_intensity,
    farfield_profile,
    intensity_profile,
)
from .rk import StepUnderflowError
from .units import UnitError

VALIDATION_ERRORS = (
    ConfigError,
    GeometryError,
    EnvironmentError_,
    DatasetFormatError,
    UnitError,
    ValueError,
    OSError,
)
NUMERICAL_ERRORS = (
    StepUnderflowError,
    InvariantViolationError,
    GammaRangeError,
    MissingFringeError,
    FloatingPointError,
    ArithmeticError,
    RuntimeError,
)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("FRINGEWORKS_OUT") or "./out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _select_env(cfg: RunConfig, requested: str | None) -> EnvironmentSpec:
    if requested is None:
        return cfg.environment
    kind = {"qbm": "qbm_ohmic"}.get(requested, requested)
    if kind == "isolated":
        return EnvironmentSpec.isolated()
    return cfg.environment.member(kind)


def _natural_frame(cfg: RunConfig):
    """Geometry in the dimensionless integration frame plus its time scale."""
    geom_nat = geometry_to_natural(cfg.geometry, cfg.units)
    return geom_nat, cfg.units.time_scale


def _qbm_member(cfg: RunConfig) -> EnvironmentSpec | None:
    try:
        return cfg.environment.member("qbm_ohmic")
    except UnsupportedKindError:
        return None


def _scattering_member(cfg: RunConfig) -> EnvironmentSpec | None:
    try:
        return cfg.environment.member("scattering")
    except UnsupportedKindError:
        return None


def _env_in_natural(env: EnvironmentSpec, cfg: RunConfig) -> EnvironmentSpec:
    """Re-express a qbm member in the dimensionless frame (others unchanged)."""
    if env.kind != "qbm_ohmic" or cfg.units.mode == "natural":
        return env
    tau = cfg.units.time_scale
    return EnvironmentSpec.qbm(
        gamma0=env.gamma0 * tau,
        kBT=env.kBT / cfg.units.energy_scale,
        include_f=env.include_f,
    )


# --- subcommand implementations ---------------------------------------------


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    manifest = io.ManifestBuilder("simulate", sys.argv[1:], cfg.raw)
    manifest.record_input(args.config)

    env = _select_env(cfg, args.env)
    if env.kind not in ("isolated", "qbm_ohmic"):
        raise UsageError(f"simulate needs an isolated or qbm environment, got {env.kind!r}")
    geom_nat, time_scale = _natural_frame(cfg)
    env_nat = _env_in_natural(env, cfg)
    from .units import UnitSystem

    nat = UnitSystem.natural()
    s0 = initial_state(geom_nat, args.convention)
    traj = integrate(s0, env_nat, args.t_end, tol=args.tol, units=nat)

    times = traj.ts
    gam_ansatz = []
    gam_model = []
    for t in times:
        gam_ansatz.append(overlap_at(env_nat, geom_nat.L0, float(t), nat, traj=traj, source="ansatz").value)
        if env_nat.kind == "qbm_ohmic":
            gam_model.append(overlap_at(env_nat, geom_nat.L0, float(t), nat, source="model").value)
        else:
            gam_model.append(1.0)

    if args.format == "csv":
        traj_path = out / "trajectory.csv"
        io.write_trajectory_csv(traj_path, traj)
    else:
        traj_path = out / "trajectory.json"
        io.write_json(traj_path, io.trajectory_json(traj, cfg.raw))
    manifest.record_output(traj_path)

    overlap_path = out / "overlap.csv"
    lines = ["t,gamma_ansatz,gamma_model"]
    for t, ga, gm in zip(times, gam_ansatz, gam_model):
        lines.append(f"{io.fmt(t)},{io.fmt(ga)},{io.fmt(gm)}")
    overlap_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest.record_output(overlap_path)

    if not args.no_plot:
        fig_path = plots.plot_trajectory(out / "trajectory.png", traj, times, gam_ansatz, gam_model)
        manifest.record_output(fig_path)

    manifest.config_echo = dict(cfg.raw or {}, time_scale_seconds=time_scale)
    manifest.write(out)
    print(f"simulate: {len(times)} samples -> {out}")
    return 0


def _cmd_pattern(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    manifest = io.ManifestBuilder("pattern", sys.argv[1:], cfg.raw)
    manifest.record_input(args.config)
    env = _select_env(cfg, args.env)

    farfield = args.farfield or cfg.units.mode == "si"
    if args.t is None and not args.at_tl:
        raise UsageError("pattern needs --t or --at-tl")
    if args.at_tl:
        t = cfg.geometry.flight_time(cfg.units)
        if t is None:
            raise UsageError("--at-tl needs t_L or (lambda_dB, L) in the geometry")
    else:
        t = args.t

    if farfield:
        ov = overlap_at_flight_time(env, cfg.geometry, t, cfg.units, args.td_convention)
        profile = farfield_profile(
            cfg.geometry, ov, n=args.n, separation_convention=args.separation_convention,
            normalization=args.normalization, units=cfg.units, model_tag=env.kind,
        )
    else:
        from .units import UnitSystem

        nat = UnitSystem.natural()
        s0 = initial_state(cfg.geometry, args.convention)
        env_nat = _env_in_natural(env, cfg)
        traj = integrate(s0, env_nat, t, tol=args.tol, units=nat)
        profile = intensity_profile(
            traj, env_nat, cfg.geometry.L0, t, normalization=args.normalization,
            units=nat, gamma_source=args.gamma_source,
        )

    if args.format == "csv":
        prof_path = out / "profile.csv"
        io.write_profile_csv(prof_path, profile, convention=args.separation_convention if farfield else None)
    else:
        prof_path = out / "profile.json"
        io.write_json(prof_path, {
            "t": profile.t, "model": profile.model_tag, "gamma": profile.gamma_used,
            "normalization": profile.normalization,
            "x": [float(v) for v in profile.xs], "P": [float(v) for v in profile.values],
        })
    manifest.record_output(prof_path)
    if not args.no_plot:
        fig_path = plots.plot_profile(out / "profile.png", profile)
        manifest.record_output(fig_path)
    manifest.write(out)
    print(f"pattern: {len(profile.xs)} points, gamma = {profile.gamma_used:.6g} -> {out}")
    return 0


def _cmd_visibility(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    manifest = io.ManifestBuilder("visibility", sys.argv[1:], cfg.raw)
    manifest.record_input(args.config)
    env = _select_env(cfg, args.env)
    from .units import UnitSystem

    nat = UnitSystem.natural()
    geom_nat, _ = _natural_frame(cfg)
    env_nat = _env_in_natural(env, cfg)
    s0 = initial_state(geom_nat, args.convention)
    traj = integrate(s0, env_nat, args.t_end, tol=args.tol, units=nat)
    times = np.linspace(args.t_start, args.t_end, args.n_times)

    if args.threads > 1:
        # Per-time evaluation; results collected by index so the ordering is
        # deterministic regardless of thread count.
        def one(t):
            piece = visibility_trace(
                traj, env_nat, geom_nat, [t], fringe_index=args.fringe_index,
                units=nat, gamma_source=args.gamma_source,
            )
            return float(piece.nu_values[0]) if len(piece.nu_values) else 0.0

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            nus = list(pool.map(one, times))
        from .analysis import VisibilityTrace

        tag = f"{env_nat.kind}/{args.gamma_source}" if env_nat.kind == "qbm_ohmic" else env_nat.kind
        trace = VisibilityTrace(
            times=times, nu_values=np.array(nus),
            feature=args.fringe_index, model_tag=tag,
        )
    else:
        trace = visibility_trace(
            traj, env_nat, geom_nat, times, fringe_index=args.fringe_index,
            units=nat, gamma_source=args.gamma_source,
        )

    if args.format == "csv":
        trace_path = out / "visibility.csv"
        io.write_visibility_csv(trace_path, trace)
    else:
        trace_path = out / "visibility.json"
        io.write_json(trace_path, {
            "model": trace.model_tag, "fringe_index": trace.feature,
            "truncated": trace.truncated_reason,
            "t": [float(v) for v in trace.times], "nu": [float(v) for v in trace.nu_values],
        })
    manifest.record_output(trace_path)
    if not args.no_plot:
        fig_path = plots.plot_visibility(out / "visibility.png", trace)
        manifest.record_output(fig_path)
    manifest.write(out)
    print(f"visibility: {len(trace.times)} samples -> {out}")
    return 0


def _timescale_payload(cfg: RunConfig) -> dict:
    qbm = _qbm_member(cfg)
    scat = _scattering_member(cfg)
    t_L = cfg.geometry.flight_time(cfg.units)
    payload: dict = {
        "t_D_slope": None, "t_D_section_iv": None, "t_Lambda": None,
        "pre_transient": None, "t_L": t_L,
        "bounds": {"gamma0_max": None, "Lambda_max": None},
    }
    if qbm is not None:
        slope = decoherence_time(qbm, cfg.geometry, "slope", cfg.units)
        sec4 = decoherence_time(qbm, cfg.geometry, "section_iv", cfg.units)
        payload["t_D_slope"] = slope.t_D
        payload["t_D_section_iv"] = sec4.t_D
        payload["pre_transient"] = slope.pre_transient
    if scat is not None:
        payload["t_Lambda"] = decoherence_time(scat, cfg.geometry, "slope", cfg.units).t_Lambda
    if t_L is not None:
        if qbm is not None:
            payload["bounds"]["gamma0_max"] = parameter_bound(
                cfg.geometry, t_L, "gamma0", "section_iv", cfg.units, kBT=qbm.kBT
            )
        payload["bounds"]["Lambda_max"] = parameter_bound(cfg.geometry, t_L, "Lambda", units=cfg.units)
    return payload


def _cmd_timescales(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    manifest = io.ManifestBuilder("timescales", sys.argv[1:], cfg.raw)
    manifest.record_input(args.config)
    payload = _timescale_payload(cfg)
    path = out / "timescales.json"
    io.write_json(path, payload)
    manifest.record_output(path)
    manifest.write(out)
    print(f"timescales -> {path}")
    return 0


def _cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    manifest = io.ManifestBuilder("bounds", sys.argv[1:], cfg.raw)
    manifest.record_input(args.config)
    t_L = cfg.geometry.flight_time(cfg.units)
    if t_L is None:
        raise UsageError("bounds needs t_L or (lambda_dB, L) in the geometry")
    qbm = _qbm_member(cfg)
    payload = {
        "convention": args.convention,
        "t_L": t_L,
        "gamma0_max": (
            parameter_bound(cfg.geometry, t_L, "gamma0", args.convention, cfg.units, kBT=qbm.kBT)
            if qbm is not None else None
        ),
        "Lambda_max": parameter_bound(cfg.geometry, t_L, "Lambda", units=cfg.units),
    }
    path = out / "bounds.json"
    io.write_json(path, payload)
    manifest.record_output(path)
    manifest.write(out)
    print(f"bounds -> {path}")
    return 0


def _cmd_dephasing(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    manifest = io.ManifestBuilder("dephasing", sys.argv[1:], cfg.raw)
    manifest.record_input(args.config)
    env = cfg.environment.member("dephasing")
    series = dephasing_factor(env.deph_A, env.deph_B).value
    quad, imag = dephasing_average_oracle(env.deph_A, env.deph_B, env.deph_omega, args.n_samples)
    payload = {
        "deph_A": env.deph_A,
        "deph_B": env.deph_B,
        "modulus": math.hypot(env.deph_A, env.deph_B),
        "gamma_series": series,
        "gamma_quadrature": quad,
        "abs_difference": abs(series - quad),
        "imag_diagnostic": imag,
        "n_samples": args.n_samples,
    }
    path = out / "dephasing.json"
    io.write_json(path, payload)
    manifest.record_output(path)
    manifest.write(out)
    print(f"dephasing -> {path}")
    return 0


def _cmd_fit(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    manifest = io.ManifestBuilder("fit", sys.argv[1:], cfg.raw)
    manifest.record_input(args.config)
    qbm = _qbm_member(cfg)
    kBT = qbm.kBT if qbm is not None else None
    t_L = cfg.geometry.flight_time(cfg.units)
    if t_L is None:
        raise UsageError("fit needs t_L or (lambda_dB, L) in the geometry")

    if (args.data is None) == (args.synthetic is None):
        raise UsageError("fit needs exactly one of --data or --synthetic")
    if args.synthetic is not None:
        gamma = gamma_from_parameter(
            args.param, args.synthetic, cfg.geometry, t_L, cfg.units, kBT, args.convention
        )
        profile = farfield_profile(
            cfg.geometry, gamma, n=args.n_points,
            separation_convention=args.separation_convention,
            normalization="raw", units=cfg.units,
        )
        data = synthetic_dataset(
            profile.values, profile.xs, noise_frac=args.noise_frac, seed=args.seed,
            meta=f"synthetic {args.param} = {args.synthetic}, noise = {args.noise_frac}, seed = {args.seed}",
        )
        data_path = out / "synthetic-data.csv"
        io.write_dataset_csv(data_path, data)
        manifest.record_output(data_path)
    else:
        data = io.load_dataset(args.data)
        manifest.record_input(args.data)

    result = fit_parameter(
        data, cfg.geometry, args.param, (args.lo, args.hi), cfg.units, kBT,
        args.convention, args.separation_convention,
    )
    gamma_best = gamma_from_parameter(
        args.param, result.best_value, cfg.geometry, t_L, cfg.units, kBT, args.convention
    )
    model = result.scale * farfield_intensity(
        cfg.geometry, gamma_best, data.xs, args.separation_convention, cfg.units
    ) + result.offset
    residual = data.counts - model

    fit_path = out / "fit.json"
    io.write_json(fit_path, {
        "param_name": result.param_name,
        "best_value": result.best_value,
        "sse": result.sse,
        "n_eval": result.n_eval,
        "bounds": list(result.bounds),
        "scale": result.scale,
        "offset": result.offset,
        "flags": list(result.flags),
        "gamma_at_tL": gamma_best,
        "convention": args.convention,
        "seed": args.seed,
    })
    manifest.record_output(fit_path)

    resid_path = out / "residuals.csv"
    lines = ["x,data,model,residual"]
    for x, d, m, r in zip(data.xs, data.counts, model, residual):
        lines.append(f"{io.fmt(x)},{io.fmt(d)},{io.fmt(m)},{io.fmt(r)}")
    resid_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest.record_output(resid_path)

    if not args.no_plot:
        fig_path = plots.plot_fit(
            out / "fit.png", data.xs, data.counts, model, residual,
            result.param_name, result.best_value,
        )
        manifest.record_output(fig_path)
    manifest.write(out)
    print(f"fit: {result.param_name} = {result.best_value:.8g} (sse = {result.sse:.6g}) -> {out}")
    return 0


# --- parser ------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, plot: bool = False):
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (default ./out or $FRINGEWORKS_OUT)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    if plot:
        p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fringeworks", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate the ansatz coefficients")
    _add_common(sim, plot=True)
    sim.add_argument("--t-end", type=float, default=1.0)
    sim.add_argument("--tol", type=float, default=1e-9)
    sim.add_argument("--convention", choices=("physical", "paper"), default="physical")
    sim.add_argument("--env", default=None, help="environment kind override/member selector")
    sim.set_defaults(func=_cmd_simulate)

    pat = sub.add_parser("pattern", help="screen intensity profile at a time")
    _add_common(pat, plot=True)
    pat.add_argument("--t", type=float, default=None)
    pat.add_argument("--at-tl", action="store_true", help="evaluate at the geometry flight time")
    pat.add_argument("--env", default=None)
    pat.add_argument("--tol", type=float, default=1e-9)
    pat.add_argument("--convention", choices=("physical", "paper"), default="physical")
    pat.add_argument("--gamma-source", choices=("ansatz", "model"), default="ansatz")
    pat.add_argument("--normalization", choices=("raw", "unit_peak", "unit_area"), default="unit_peak")
    pat.add_argument("--farfield", action="store_true", help="force the closed far-screen form")
    pat.add_argument("--separation-convention", choices=("full_2L0", "half_L0"), default="full_2L0")
    pat.add_argument("--td-convention", choices=("slope", "section_iv"), default="section_iv",
                     help="decoherence-time convention for the far-screen overlap")
    pat.add_argument("--n", type=int, default=2001)
    pat.set_defaults(func=_cmd_pattern)

    vis = sub.add_parser("visibility", help="fringe-visibility trace over time")
    _add_common(vis, plot=True)
    vis.add_argument("--t-start", type=float, default=0.05)
    vis.add_argument("--t-end", type=float, required=True)
    vis.add_argument("--n-times", type=int, default=121)
    vis.add_argument("--fringe-index", type=int, default=1)
    vis.add_argument("--tol", type=float, default=1e-9)
    vis.add_argument("--convention", choices=("physical", "paper"), default="physical")
    vis.add_argument("--gamma-source", choices=("ansatz", "model"), default="ansatz")
    vis.add_argument("--env", default=None)
    vis.set_defaults(func=_cmd_visibility)

    ts = sub.add_parser("timescales", help="decoherence timescales report (JSON)")
    _add_common(ts)
    ts.set_defaults(func=_cmd_timescales)

    bo = sub.add_parser("bounds", help="environment-parameter bounds from t_D > t_L (JSON)")
    _add_common(bo)
    bo.add_argument("--convention", choices=("slope", "section_iv"), default="section_iv")
    bo.set_defaults(func=_cmd_bounds)

    de = sub.add_parser("dephasing", help="dephasing factor with oracle cross-check (JSON)")
    _add_common(de)
    de.add_argument("--n-samples", type=int, default=10_000)
    de.set_defaults(func=_cmd_dephasing)

    fit = sub.add_parser("fit", help="fit one environment parameter to fringe data")
    _add_common(fit, plot=True)
    fit.add_argument("--param", choices=("gamma0", "Lambda", "C_deph"), required=True)
    fit.add_argument("--data", default=None, help="dataset CSV (x,count[,sigma])")
    fit.add_argument("--synthetic", type=float, default=None,
                     help="generate synthetic data at this parameter value instead")
    fit.add_argument("--noise-frac", type=float, default=0.01)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--n-points", type=int, default=401)
    fit.add_argument("--lo", type=float, required=True)
    fit.add_argument("--hi", type=float, required=True)
    fit.add_argument("--convention", choices=("slope", "section_iv"), default="section_iv")
    fit.add_argument("--separation-convention", choices=("full_2L0", "half_L0"), default="full_2L0")
    fit.set_defaults(func=_cmd_fit)

    return parser


def run_cli(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: USAGE: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except VALIDATION_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
