"""End-to-end runs: simulate, filter, smooth, fuse, evaluate, emit files.

Every emission is deterministic given the configuration and seed: outputs
contain no timestamps or environment-dependent content.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io as nio
from .backward_info import BackwardResult, run_backward
from .blends import FileProvider, OracleProvider, ZeroProvider, run_blends
from .errors import ArgumentError
from .forward_ekf import FilterTrace, ForwardConfig, run_forward
from .geodesy import ned_units_per_state
from .linalg import euler_from_rot
from .metrics import nav_errors, pci, rmse, sigma_coverage
from .simkit import SensorNoiseSpec, TrajectorySpec, generate_truth, synthesize_gnss, synthesize_imu
from .smoothers import SmoothedTrajectory, rtss_smooth, tfs_smooth
from .strapdown import ImuNoiseSpec
from .types import BoundSchedule, default_bound_schedule

__all__ = ["RunConfig", "run_pipeline", "MODES"]

log = logging.getLogger("navsmooth")

MODES = ("simulate", "ekf", "tfs", "rtss", "blends", "motivation-study")

BURN_IN_S = 5.0

# filter-side IMU noise floors so zero-noise simulations keep a valid model
_SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class RunConfig:
    """Pipeline configuration; see README for the JSON schema."""

    mode: str
    out_dir: str | None = None
    seed: int = 0
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    sensors: SensorNoiseSpec = field(default_factory=SensorNoiseSpec)
    imu_path: str | None = None
    gnss_path: str | None = None
    truth_path: str | None = None
    p0_diag: np.ndarray | None = None
    init_rpy: tuple[float, float, float] | None = None
    init_vel_ned: np.ndarray | None = None
    phi_order: int = 2
    qd_half: bool = True
    bias_rw_accel: float = 1e-4
    bias_rw_gyro: float = 1e-6
    provider: str = "zero"
    oracle_bias_ned: np.ndarray | None = None
    schedule: BoundSchedule = field(default_factory=default_bound_schedule)
    emit_fusion_trace: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ArgumentError(f"unknown mode {self.mode!r}; choose from {MODES}")
        for attr in ("imu_path", "gnss_path", "truth_path"):
            p = getattr(self, attr)
            if p is not None and not Path(p).exists():
                raise ArgumentError(f"{attr} does not exist: {p}")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        if "trajectory" in raw:
            raw["trajectory"] = TrajectorySpec(**raw["trajectory"])
        if "sensors" in raw:
            raw["sensors"] = SensorNoiseSpec(**raw["sensors"])
        if "schedule" in raw:
            sched = raw["schedule"]
            raw["schedule"] = BoundSchedule(
                m_wide=np.asarray(sched["m_wide"], dtype=float),
                m_base=np.asarray(sched["m_base"], dtype=float),
                e_w=int(sched.get("e_w", 1000)),
                p=float(sched.get("p", 2.0)),
            )
        for key in ("p0_diag", "init_vel_ned", "oracle_bias_ned"):
            if raw.get(key) is not None:
                raw[key] = np.asarray(raw[key], dtype=float)
        if raw.get("init_rpy") is not None:
            raw["init_rpy"] = tuple(float(x) for x in raw["init_rpy"])
        return cls(**raw)


def _filter_noise(cfg: RunConfig) -> ImuNoiseSpec:
    return ImuNoiseSpec(
        sigma_a=max(cfg.sensors.accel_std, _SIGMA_FLOOR),
        sigma_g=max(cfg.sensors.gyro_std, _SIGMA_FLOOR),
        sigma_ab=cfg.bias_rw_accel,
        sigma_gb=cfg.bias_rw_gyro,
    )


def _forward_config(cfg: RunConfig, truth) -> ForwardConfig:
    init_rpy = cfg.init_rpy
    init_vel = cfg.init_vel_ned
    if truth is not None:
        if init_rpy is None:
            init_rpy = euler_from_rot(truth.att[0])
        if init_vel is None:
            init_vel = truth.vel_ned[0]
    kwargs = dict(noise=_filter_noise(cfg),
                  init_rpy=tuple(init_rpy) if init_rpy is not None else (0.0, 0.0, 0.0),
                  init_vel_ned=np.zeros(3) if init_vel is None else np.asarray(init_vel, dtype=float),
                  phi_order=cfg.phi_order, qd_half=cfg.qd_half)
    if cfg.p0_diag is not None:
        kwargs["p0_diag"] = cfg.p0_diag
    return ForwardConfig(**kwargs)


def _obtain_data(cfg: RunConfig):
    """(truth, imu, gnss): from files when paths are set, else simulated."""
    if cfg.imu_path and cfg.gnss_path:
        imu = nio.read_imu_csv(cfg.imu_path)
        gnss = nio.read_gnss_csv(cfg.gnss_path)
        truth = nio.read_truth_csv(cfg.truth_path) if cfg.truth_path else None
        return truth, imu, gnss
    sensors = replace(cfg.sensors, seed=cfg.seed)
    dt = 1.0 / sensors.imu_rate
    truth = generate_truth(cfg.trajectory, dt)
    imu = synthesize_imu(truth, sensors)
    gnss = synthesize_gnss(truth, sensors)
    return truth, imu, gnss


def _estimator_metrics(name: str, t, pos_geo, vel_ned, att, p_diag, truth,
                       ekf_p_trace=None, p_full=None) -> dict:
    errs = nav_errors(pos_geo, vel_ned, att, truth.pos_geo, truth.vel_ned, truth.att)
    pos, vel, eul = errs["pos_ned"], errs["vel"], errs["euler"]
    axis_rmse = {
        "p_N": rmse(pos[:, 0])["norm"], "p_E": rmse(pos[:, 1])["norm"], "p_D": rmse(pos[:, 2])["norm"],
        "v_N": rmse(vel[:, 0])["norm"], "v_E": rmse(vel[:, 1])["norm"], "v_D": rmse(vel[:, 2])["norm"],
        "phi": rmse(eul[:, 0])["norm"], "theta": rmse(eul[:, 1])["norm"], "psi": rmse(eul[:, 2])["norm"],
    }
    horiz = np.linalg.norm(pos[:, 0:2], axis=1)
    out = {
        "rmse": axis_rmse,
        "horizontal_rmse": float(np.sqrt(np.mean(horiz**2))),
        "horizontal_mean_error": float(np.mean(horiz)),
    }

    # 2-sigma coverage for the position axes, evaluated in meters
    cov = {}
    units = np.array([ned_units_per_state(truth.pos_geo[k][0], truth.pos_geo[k][2])
                      for k in range(len(t))])
    var_m = p_diag[:, 0:3] * units**2
    for i, key in enumerate(("p_N", "p_E", "p_D")):
        cov[key] = sigma_coverage(pos[:, i], var_m[:, i], k=2.0)
    out["coverage_2sigma"] = cov

    if ekf_p_trace is not None and p_full is not None:
        series = pci(ekf_p_trace, p_full)
        mask = t - t[0] >= BURN_IN_S
        out["pci_vs_ekf"] = {
            "min_after_burn_in": float(series[mask].min()),
            "mean_after_burn_in": float(series[mask].mean()),
        }
    return out


def _write_outputs(out_dir: Path, name: str, t, pos_geo, vel_ned, att, p_diag) -> None:
    nio.write_estimate_csv(out_dir / f"{name}_estimate.csv", t, pos_geo, vel_ned, att, p_diag)


def _plot_data(out_dir: Path, truth, estimators: dict, gnss) -> None:
    origin = tuple(truth.pos_geo[0])
    n = len(truth.t)
    from .geodesy import geo_to_ned

    cols = ["t", "truth_n", "truth_e"]
    data = [truth.t]
    track = np.array([geo_to_ned(truth.pos_geo[k], origin) for k in range(n)])
    data += [track[:, 0], track[:, 1]]
    for name, est in estimators.items():
        ned = np.array([geo_to_ned(est["pos_geo"][k], origin) for k in range(n)])
        cols += [f"{name}_n", f"{name}_e"]
        data += [ned[:, 0], ned[:, 1]]
    np.savetxt(out_dir / "plot_traj.csv", np.column_stack(data), fmt="%.17g",
               delimiter=",", header=",".join(cols), comments="")

    gn = np.array([geo_to_ned(f.pos_geo, origin) for f in gnss])
    gt = np.array([f.t for f in gnss])
    np.savetxt(out_dir / "plot_gnss.csv", np.column_stack([gt, gn[:, 0], gn[:, 1]]),
               fmt="%.17g", delimiter=",", header="t,gnss_n,gnss_e", comments="")


def _run_single(cfg: RunConfig, estimators: tuple[str, ...], out_dir: Path | None) -> dict:
    t0 = time.perf_counter()
    truth, imu, gnss = _obtain_data(cfg)

    trace = run_forward(imu, gnss, _forward_config(cfg, truth))
    result: dict = {"trace": trace, "truth": truth, "estimates": {}, "summary": {}}

    backward: BackwardResult | None = None
    if any(e in estimators for e in ("tfs", "blends")) or cfg.emit_fusion_trace:
        backward = run_backward(trace.t, trace.phi, trace.qd, trace.update_flag,
                                trace.dz, trace.r_state, trace.dx, h=trace.h)
        result["backward"] = backward

    outputs: dict = {}
    if "ekf" in estimators:
        outputs["ekf"] = {
            "t": trace.t, "pos_geo": trace.pos_geo, "vel_ned": trace.vel_ned,
            "att": trace.att,
            "p_diag": np.diagonal(trace.p_plus, axis1=1, axis2=2),
            "p_full": trace.p_plus,
        }
    if "tfs" in estimators:
        tfs = tfs_smooth(trace, backward)
        result["estimates"]["tfs"] = tfs
        outputs["tfs"] = _smoothed_output(tfs)
    if "rtss" in estimators:
        rts = rtss_smooth(trace)
        result["estimates"]["rtss"] = rts
        outputs["rtss"] = _smoothed_output(rts)
    if "blends" in estimators:
        provider = _make_provider(cfg, trace)
        fused = run_blends(trace, backward, provider, schedule=cfg.schedule)
        result["estimates"]["blends"] = fused
        outputs["blends"] = _smoothed_output(fused)

    summary: dict = {"mode": cfg.mode, "seed": cfg.seed, "estimators": {}}
    if truth is not None and len(truth.t) == len(trace.t):
        for name, est in outputs.items():
            summary["estimators"][name] = _estimator_metrics(
                name, est["t"], est["pos_geo"], est["vel_ned"], est["att"], est["p_diag"],
                truth,
                ekf_p_trace=trace.p_plus if name != "ekf" else None,
                p_full=est.get("p_full") if name != "ekf" else None,
            )
    result["summary"] = summary
    result["runtime_s"] = time.perf_counter() - t0

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, est in outputs.items():
            _write_outputs(out_dir, name, est["t"], est["pos_geo"], est["vel_ned"],
                           est["att"], est["p_diag"])
        if truth is not None and len(truth.t) == len(trace.t):
            _plot_data(out_dir, truth, outputs, gnss)
        if cfg.emit_fusion_trace:
            nio.write_fusion_trace(out_dir / "fusion_trace.csv", trace, backward)
        with (out_dir / "summary.json").open("w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return result


def _smoothed_output(sm: SmoothedTrajectory) -> dict:
    return {
        "t": sm.t, "pos_geo": sm.pos_geo, "vel_ned": sm.vel_ned, "att": sm.att,
        "p_diag": np.diagonal(sm.p_s, axis1=1, axis2=2),
        "p_full": sm.p_s,
    }


def _make_provider(cfg: RunConfig, trace: FilterTrace):
    spec = cfg.provider
    if spec == "zero":
        return ZeroProvider()
    if spec == "oracle":
        bias = cfg.oracle_bias_ned
        if bias is None:
            bias = cfg.sensors.mu_ned()
        return OracleProvider(trace, bias)
    if spec.startswith("file:"):
        path = spec[5:]
        records = nio.read_correction_records(path)
        return FileProvider(records)
    raise ArgumentError(f"unknown provider {spec!r}; use zero, oracle or file:<path>")


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute a configured run; returns in-memory results and writes files
    when an output directory is configured."""
    out_dir = Path(cfg.out_dir) if cfg.out_dir else None

    if cfg.mode == "simulate":
        sensors = replace(cfg.sensors, seed=cfg.seed)
        dt = 1.0 / sensors.imu_rate
        truth = generate_truth(cfg.trajectory, dt)
        imu = synthesize_imu(truth, sensors)
        gnss = synthesize_gnss(truth, sensors)
        if out_dir is None:
            raise ArgumentError("simulate mode requires an output directory")
        out_dir.mkdir(parents=True, exist_ok=True)
        nio.write_truth_csv(out_dir / "truth.csv", truth)
        nio.write_imu_csv(out_dir / "imu.csv", imu)
        nio.write_gnss_csv(out_dir / "gnss.csv", gnss)
        return {"truth": truth, "imu": imu, "gnss": gnss}

    if cfg.mode == "motivation-study":
        study: dict = {"configs": {}, "runtimes": {}}
        for mu in (0.0, 1.5, 3.0):
            sub_sensors = replace(cfg.sensors, gnss_mu=mu, gnss_std=0.5)
            sub_cfg = replace(cfg, mode="rtss", sensors=sub_sensors)
            sub_out = out_dir / f"mu_{mu:.1f}" if out_dir else None
            res = _run_single(sub_cfg, ("ekf", "tfs", "rtss"), sub_out)
            # keep summaries only; the per-run traces are hundreds of MB each
            study["configs"][f"mu_{mu:.1f}"] = res["summary"]
            study["runtimes"][f"mu_{mu:.1f}"] = res["runtime_s"]
            log.info("motivation-study mu=%.1f done in %.1fs", mu, res["runtime_s"])
            del res
        if out_dir is not None:
            with (out_dir / "study_summary.json").open("w") as fh:
                json.dump(study["configs"], fh, indent=2, sort_keys=True)
        return study

    wanted = {"ekf": ("ekf",), "tfs": ("ekf", "tfs"), "rtss": ("ekf", "rtss"),
              "blends": ("ekf", "blends")}[cfg.mode]
    return _run_single(cfg, wanted, out_dir)
