"""Experiment harness: configured runs, ratio sweeps, persistence.

A run is fully determined by its RunConfig: trial t regenerates the
stream from sample_seed + t and, for random starts, derives its own
init seed, so identical configs produce byte-identical trajectory CSVs
and reports. Nothing time- or host-dependent is ever written.

File formats:
  * run config and reports -- JSON (UTF-8, sorted keys);
  * trajectories -- CSV with header ``step,s,phi_norm_sq,log_ratio``
    plus optional snapshot columns ``vhat_0..vhat_{m-1}``;
  * each trajectory CSV has a ``<name>.meta.json`` sidecar carrying the
    constants a post-hoc check needs (eta, feature map, init direction,
    oracle alpha/beta and v*).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .checks import CheckReport, run_all_checks
from .datagen import SpikedSpec, make_spiked_stream
from .featuremaps import FeatureMapSpec
from .oja import (
    NumericError,
    OjaConfig,
    StepRecord,
    StreamState,
    Trajectory,
    init_state,
    init_state_at,
    run_stream,
    select_learning_rate,
)
from .spectral import alignment_error, compute_alpha_beta, summarize

OUT_DIR_ENV = "STREAMKPCA_OUT"
REPORT_SCHEMA_ID = "streamkpca-run-report/1"

TRAJECTORY_HEADER = ["step", "s", "phi_norm_sq", "log_ratio"]


class ConfigError(ValueError):
    """A run configuration is invalid."""


class TrajectoryParseError(ValueError):
    """A trajectory file is malformed; the message names a byte offset."""


@dataclass(frozen=True)
class RunConfig:
    """One experiment: feature map, generator, policies, trial count."""

    feature_map: FeatureMapSpec
    generator: SpikedSpec
    eta_policy: object = "auto"  # "auto" or a positive float
    init: str = "random"
    trials: int = 1
    run_checks: bool = False
    save_trajectories: bool = False
    out_dir: str | None = None

    def __post_init__(self):
        if self.feature_map.input_dim != self.generator.input_dim:
            raise ConfigError(
                "feature map input_dim does not match the generator"
            )
        if self.init not in ("random", "vstar"):
            raise ConfigError("init must be 'random' or 'vstar'")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.eta_policy != "auto":
            try:
                eta = float(self.eta_policy)
            except (TypeError, ValueError):
                raise ConfigError(
                    "eta_policy must be 'auto' or a positive number"
                ) from None
            if eta <= 0:
                raise ConfigError("a fixed eta must be positive")
            object.__setattr__(self, "eta_policy", eta)

    def to_dict(self) -> dict:
        return {
            "feature_map": self.feature_map.to_dict(),
            "generator": self.generator.to_dict(),
            "eta_policy": self.eta_policy,
            "init": self.init,
            "trials": self.trials,
            "run_checks": self.run_checks,
            "save_trajectories": self.save_trajectories,
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            return cls(
                feature_map=FeatureMapSpec.from_dict(d["feature_map"]),
                generator=SpikedSpec.from_dict(d["generator"]),
                eta_policy=d.get("eta_policy", "auto"),
                init=d.get("init", "random"),
                trials=int(d.get("trials", 1)),
                run_checks=bool(d.get("run_checks", False)),
                save_trajectories=bool(d.get("save_trajectories", False)),
                out_dir=d.get("out_dir"),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}"
            ) from exc
        return cls.from_dict(raw)


@dataclass
class TrialResult:
    """Per-trial metrics; alignment errors compare against the empirical
    top eigenvector (and the population spike direction for identity maps)."""

    trial: int
    sample_seed: int
    init_seed: int | None
    error: str | None = None
    alignment_error: float | None = None
    alignment_error_population: float | None = None
    residual: float | None = None
    log_norm: float | None = None
    ratio: float | None = None
    alpha: float | None = None
    beta: float | None = None
    eta: float | None = None
    norm_bound: float | None = None
    envelope: float | None = None
    within_envelope: bool | None = None
    check_ok: bool | None = None
    check_failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in self.__dict__.items()}


@dataclass
class TrialArtifacts:
    """Rich per-trial objects for library callers (never serialized)."""

    result: TrialResult
    trajectory: Trajectory | None = None
    check_report: CheckReport | None = None
    final: StreamState | None = None
    x_star: np.ndarray | None = None


def _jsonable(v):
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    if isinstance(v, np.floating):
        return _jsonable(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def trial_seeds(config: RunConfig, trial: int) -> tuple[int, int]:
    """Deterministic per-trial seeds: stream seed and init seed."""
    sample_seed = config.generator.sample_seed + trial
    init_seed = 1_000_003 * (config.generator.sample_seed + 1) + trial
    return sample_seed, init_seed


def run_trial(config: RunConfig, trial: int) -> TrialArtifacts:
    """Execute one trial: generate, summarize, stream, measure, check."""
    sample_seed, init_seed = trial_seeds(config, trial)
    result = TrialResult(
        trial=trial,
        sample_seed=sample_seed,
        init_seed=init_seed if config.init == "random" else None,
    )
    generator = replace(config.generator, sample_seed=sample_seed)
    xs, truth = make_spiked_stream(generator)
    phi = config.feature_map
    feature_bound = phi.norm_bound(truth.norm_bound)
    user_eta = None if config.eta_policy == "auto" else float(config.eta_policy)
    eta = select_learning_rate(feature_bound, user_eta)

    summary = summarize(xs, phi)
    x_star = summary.top_vector
    energies = compute_alpha_beta(summary, eta, x_star)

    want_records = config.run_checks or config.save_trajectories
    oja_config = OjaConfig(
        eta=eta,
        feature_map=phi,
        record_trajectory=want_records,
        snapshots=config.run_checks,
        norm_bound=feature_bound,
    )
    if config.init == "vstar":
        start = init_state_at(x_star)
    else:
        start = init_state(phi.feature_dim, init_seed)

    result.eta = eta
    result.norm_bound = feature_bound
    result.ratio = summary.ratio
    result.alpha = energies.alpha
    result.beta = energies.beta
    try:
        final, trajectory = run_stream(xs, oja_config, start, seed=sample_seed)
    except NumericError as exc:
        result.error = str(exc)
        return TrialArtifacts(result=result, x_star=x_star)

    result.alignment_error = alignment_error(x_star, final.v_hat)
    if phi.kind == "identity":
        result.alignment_error_population = alignment_error(
            truth.top_direction, final.v_hat
        )
    result.residual = math.sqrt(result.alignment_error)
    result.log_norm = final.log_norm
    result.envelope = math.sqrt(energies.alpha) + math.exp(
        -energies.beta / 200.0
    )
    result.within_envelope = result.residual <= result.envelope + 1e-9

    check_report = None
    if config.run_checks:
        check_report = run_all_checks(
            trajectory, x_star, energies.alpha, energies.beta
        )
        result.check_ok = check_report.ok
        result.check_failures = [e.name for e in check_report.failures()]
    return TrialArtifacts(
        result=result,
        trajectory=trajectory,
        check_report=check_report,
        final=final,
        x_star=x_star,
    )


def _quantiles(values: list[float]) -> dict:
    if not values:
        return {"median": None, "q10": None, "q90": None}
    arr = np.array(values)
    q10, med, q90 = np.quantile(arr, [0.1, 0.5, 0.9])
    return {"median": float(med), "q10": float(q10), "q90": float(q90)}


def aggregate_trials(results: list[TrialResult]) -> dict:
    good = [r for r in results if r.error is None]
    errors = [r.alignment_error for r in good]
    agg = {
        "trials": len(results),
        "aborted": len(results) - len(good),
        "alignment_error": _quantiles(errors),
        "residual_median": _median([r.residual for r in good]),
        "log_norm_median": _median([r.log_norm for r in good]),
        "envelope_failure_fraction": None,
        "envelope_slack_median": None,
        "check_failure_count": sum(
            1 for r in good if r.check_ok is False
        ),
    }
    if good:
        agg["envelope_failure_fraction"] = sum(
            1 for r in good if not r.within_envelope
        ) / len(good)
        agg["envelope_slack_median"] = _median(
            [math.exp(-r.beta / 200.0) for r in good]
        )
    return agg


def _median(values):
    vals = [v for v in values if v is not None]
    return float(np.median(vals)) if vals else None


def run(config: RunConfig, out_dir=None) -> dict:
    """Run all trials, aggregate, optionally persist artifacts.

    Returns the report as a plain dict (already JSON-safe). When an
    output directory resolves (argument, config, or the STREAMKPCA_OUT
    environment variable), report.json is written there along with any
    requested trajectory CSVs and check reports.
    """
    resolved = resolve_out_dir(out_dir if out_dir is not None else config.out_dir)
    artifacts = [run_trial(config, t) for t in range(config.trials)]
    results = [a.result for a in artifacts]
    n_stream = config.generator.n
    agg = aggregate_trials(results)
    agg["alpha_hypothesis_fraction"] = _fraction(
        results,
        lambda r: r.alpha is not None
        and n_stream > 1
        and r.alpha < 1.0 / (1000.0 * math.log(n_stream)),
    )
    agg["beta_hypothesis_fraction"] = _fraction(
        results,
        lambda r: r.beta is not None
        and config.feature_map.feature_dim > 1
        and r.beta >= 1000.0 * math.log(config.feature_map.feature_dim),
    )
    report = {
        "schema": REPORT_SCHEMA_ID,
        "config": _jsonable(config.to_dict()),
        "trials": [r.to_dict() for r in results],
        "aggregate": _jsonable(agg),
    }
    if resolved is not None:
        resolved.mkdir(parents=True, exist_ok=True)
        _write_json(resolved / "report.json", report)
        for a in artifacts:
            if a.trajectory is not None and (
                config.save_trajectories or config.run_checks
            ):
                base = resolved / f"trial_{a.result.trial:03d}.csv"
                write_trajectory(base, a.trajectory)
                write_trajectory_meta(base, a.trajectory, a.result, a.x_star)
            if a.check_report is not None:
                _write_json(
                    resolved / f"trial_{a.result.trial:03d}.checks.json",
                    a.check_report.to_dict(),
                )
    return report


def _fraction(results, pred) -> float | None:
    good = [r for r in results if r.error is None]
    if not good:
        return None
    return sum(1 for r in good if pred(r)) / len(good)


def sweep(config: RunConfig, ratios: list[float], out_dir=None) -> dict:
    """Run the same config across several target spectral ratios.

    Seeds are held fixed across ratios, so rows are paired comparisons:
    only lambda2 changes between them. Emits one row per ratio with the
    empirical ratio, the median alignment error, the log(d)/R reference
    bound and the fraction of trials meeting it.
    """
    if len(ratios) < 2:
        raise ConfigError("a sweep needs at least two target ratios")
    if any(r < 1.0 for r in ratios):
        raise ConfigError("target ratios must be >= 1")
    resolved = resolve_out_dir(out_dir if out_dir is not None else config.out_dir)
    d = config.generator.input_dim
    rows = []
    for target in ratios:
        generator = replace(
            config.generator, lambda2=config.generator.lambda1 / target
        )
        sub = replace(config, generator=generator, out_dir=None)
        report = run(sub, out_dir=False)
        good = [t for t in report["trials"] if t["error"] is None]
        ratios_emp = [
            t["ratio"] for t in good if not isinstance(t["ratio"], str)
        ]
        bound = math.log(d) / target
        errors = [t["alignment_error"] for t in good]
        rows.append(
            {
                "r_target": target,
                "empirical_r_median": _median(ratios_emp),
                "median_alignment_error": _median(errors),
                "logd_over_r": bound,
                "bound_satisfied_fraction": (
                    sum(1 for e in errors if e <= bound) / len(errors)
                    if errors
                    else None
                ),
                "no_spike": target == 1.0,
                "aggregate": report["aggregate"],
            }
        )
    out = {
        "schema": "streamkpca-sweep/1",
        "config": _jsonable(config.to_dict()),
        "ratios": list(ratios),
        "rows": _jsonable(rows),
    }
    if resolved is not None:
        resolved.mkdir(parents=True, exist_ok=True)
        _write_json(resolved / "sweep.json", out)
        (resolved / "sweep.csv").write_bytes(sweep_csv(out).encode("utf-8"))
    return out


def sweep_csv(sweep_report: dict) -> str:
    cols = [
        "r_target",
        "empirical_r_median",
        "median_alignment_error",
        "logd_over_r",
        "bound_satisfied_fraction",
    ]
    lines = [",".join(cols)]
    for row in sweep_report["rows"]:
        lines.append(",".join(_format_cell(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def resolve_out_dir(out_dir) -> Path | None:
    """None -> environment default -> nothing; False suppresses output."""
    if out_dir is False:
        return None
    if out_dir is not None:
        return Path(out_dir)
    env = os.environ.get(OUT_DIR_ENV)
    return Path(env) if env else None


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Trajectory persistence


def write_trajectory(path, traj: Trajectory) -> None:
    """Write the step records as CSV; snapshots become vhat_* columns."""
    path = Path(path)
    with_snapshots = traj.has_snapshots and traj.n > 0
    header = list(TRAJECTORY_HEADER)
    if with_snapshots:
        header += [f"vhat_{k}" for k in range(traj.m)]
    lines = [",".join(header)]
    for rec in traj.records:
        cells = [
            str(rec.step),
            repr(rec.s),
            repr(rec.phi_norm_sq),
            repr(rec.log_ratio),
        ]
        if with_snapshots:
            cells += [repr(float(v)) for v in rec.v_hat]
        lines.append(",".join(cells))
    path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def meta_path_for(path) -> Path:
    return Path(path).with_suffix(".meta.json")


def write_trajectory_meta(
    csv_path, traj: Trajectory, result: TrialResult, x_star
) -> None:
    meta = {
        "eta": traj.config.eta,
        "norm_bound": traj.config.norm_bound,
        "feature_map": traj.config.feature_map.to_dict(),
        "init": traj.init_kind,
        "init_v_hat": [float(v) for v in traj.init_v_hat],
        "init_log_norm": traj.init_log_norm,
        "seed": traj.seed,
        "n": traj.n,
        "m": traj.m,
        "alpha": result.alpha,
        "beta": result.beta,
        "v_star": [float(v) for v in x_star] if x_star is not None else None,
    }
    _write_json(meta_path_for(csv_path), _jsonable(meta))


def read_trajectory(csv_path) -> tuple[Trajectory, dict]:
    """Load a trajectory CSV plus its meta sidecar.

    Raises:
        TrajectoryParseError: malformed CSV; the message names the byte
            offset of the offending field.
        ConfigError: missing or malformed meta sidecar.
    """
    csv_path = Path(csv_path)
    meta_file = meta_path_for(csv_path)
    if not meta_file.exists():
        raise ConfigError(f"missing trajectory metadata: {meta_file}")
    try:
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad trajectory metadata: {exc}") from exc

    raw = csv_path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TrajectoryParseError(
            f"invalid UTF-8 at byte {exc.start}"
        ) from exc

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TrajectoryParseError("empty trajectory file at byte 0")

    offsets = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line.encode("utf-8")) + 1

    header = lines[0].split(",")
    if header[: len(TRAJECTORY_HEADER)] != TRAJECTORY_HEADER:
        raise TrajectoryParseError(
            f"bad header at byte 0: expected {','.join(TRAJECTORY_HEADER)}"
        )
    snap_cols = header[len(TRAJECTORY_HEADER) :]
    for k, name in enumerate(snap_cols):
        if name != f"vhat_{k}":
            raise TrajectoryParseError(
                f"bad snapshot column {name!r} at byte "
                f"{offsets[0] + len(','.join(header[: len(TRAJECTORY_HEADER) + k]).encode('utf-8')) + 1}"
            )
    m_cols = len(snap_cols)

    records = []
    for row_idx, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if len(cells) != len(header):
            raise TrajectoryParseError(
                f"row {row_idx} at byte {offsets[row_idx]}: expected "
                f"{len(header)} fields, found {len(cells)}"
            )
        parsed = []
        for j, cell in enumerate(cells):
            try:
                parsed.append(int(cell) if j == 0 else float(cell))
            except ValueError:
                byte_off = offsets[row_idx] + len(
                    ",".join(cells[:j]).encode("utf-8")
                ) + (1 if j > 0 else 0)
                raise TrajectoryParseError(
                    f"unparseable field {cell!r} at byte {byte_off}"
                ) from None
        if parsed[0] != row_idx:
            raise TrajectoryParseError(
                f"non-consecutive step index at byte {offsets[row_idx]}"
            )
        snapshot = (
            np.array(parsed[4 : 4 + m_cols]) if m_cols else None
        )
        records.append(
            StepRecord(
                step=parsed[0],
                s=parsed[1],
                phi_norm_sq=parsed[2],
                log_ratio=parsed[3],
                v_hat=snapshot,
            )
        )

    feature_map = FeatureMapSpec.from_dict(meta["feature_map"])
    config = OjaConfig(
        eta=float(meta["eta"]),
        feature_map=feature_map,
        record_trajectory=True,
        snapshots=m_cols > 0,
        norm_bound=meta.get("norm_bound"),
    )
    init_v_hat = np.array(meta["init_v_hat"], dtype=np.float64)
    if m_cols and init_v_hat.shape[0] != m_cols:
        raise ConfigError("metadata init vector does not match snapshot width")
    log_norm = float(meta.get("init_log_norm", 0.0)) + 0.5 * sum(
        r.log_ratio for r in records
    )
    final_v = records[-1].v_hat if (records and m_cols) else init_v_hat
    final = StreamState(
        v_hat=np.array(final_v, dtype=np.float64),
        log_norm=log_norm,
        step=len(records),
        origin=meta["init"],
    )
    traj = Trajectory(
        config=config,
        init_kind=meta["init"],
        init_v_hat=init_v_hat,
        init_log_norm=float(meta.get("init_log_norm", 0.0)),
        records=records,
        final=final,
        seed=int(meta.get("seed", 0)),
    )
    return traj, meta


def check_trajectory_file(csv_path) -> CheckReport:
    """Load a persisted trajectory and run the full invariant suite."""
    traj, meta = read_trajectory(csv_path)
    if meta.get("v_star") is None or meta.get("alpha") is None:
        raise ConfigError("trajectory metadata lacks v_star/alpha/beta")
    v_star = np.array(meta["v_star"], dtype=np.float64)
    return run_all_checks(
        traj, v_star, float(meta["alpha"]), float(meta["beta"])
    )
