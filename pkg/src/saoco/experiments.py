"""Config-driven experiment engine behind the CLI.

Experiment configs are JSON files; every run is a pure function of the
config (plus an optional seed override), so reruns with the same config
produce byte-identical trace CSVs. Sweeps fan a base config across a
horizon grid, derive the variation target per grid point, and fit the
log-log slope of regret against sqrt(T * V_T).
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bench import (
    ENVIRONMENT_KINDS,
    Environment,
    RegretTrace,
    dynamic_regret,
    generate_environment,
    penalized_regret,
)
from .errors import ConfigError
from .flh import Flh, FlhRound
from .kernels import PenalizedBoundReport, gram_matrix, penalized_bound_report
from .learners import KrrLearner, OgdLearner, OnsLearner

RUN_KINDS = ("dynamic-sc", "dynamic-ec", "dynamic-kernel", "penalized-krr", "bound-report")
VT_RULES = ("sqrt", "inv-t")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    horizon: int = 0
    dim: int = 1
    seed: int = 0
    env: str = "random-walk-drift"
    vt_target: float = 0.0
    curvature: float = 1.0          # H
    ball_radius: float = 2.0
    switches: int | None = None
    bandwidth: float = 1.0          # sigma
    clip: float = 1.0               # B
    ridge: float = 1.0              # a
    zeta: float | None = None
    pruning: str = "none"
    noise: float = 0.05
    anchor_count: int = 12
    labels: str = "signs"
    spread: float = 1.0
    separation: float | None = None
    points: tuple | None = None
    lam: float | None = None
    out_prefix: str | None = None
    # sweep-only fields
    experiment: str = "dynamic-sc"
    horizon_grid: tuple[int, ...] = ()
    vt_rule: object = "sqrt"
    vt_scale: float = 1.0
    reps: int = 1
    synthetic_regret: bool = False
    write_traces: bool = False


_KEY_MAP = {
    "kind": "kind",
    "T": "horizon",
    "d": "dim",
    "seed": "seed",
    "env": "env",
    "vt_target": "vt_target",
    "H": "curvature",
    "ball_radius": "ball_radius",
    "switches": "switches",
    "sigma": "bandwidth",
    "B": "clip",
    "a": "ridge",
    "zeta": "zeta",
    "pruning": "pruning",
    "noise": "noise",
    "anchors": "anchor_count",
    "labels": "labels",
    "spread": "spread",
    "separation": "separation",
    "points": "points",
    "lambda": "lam",
    "out_prefix": "out_prefix",
    "experiment": "experiment",
    "T_grid": "horizon_grid",
    "vt_rule": "vt_rule",
    "vt_scale": "vt_scale",
    "reps": "reps",
    "synthetic_regret": "synthetic_regret",
    "write_traces": "write_traces",
}


def _line_of(raw: str | None, key: str) -> str:
    if raw is None:
        return ""
    for i, line in enumerate(raw.splitlines(), start=1):
        if f'"{key}"' in line:
            return f" (line {i})"
    return ""


def config_from_dict(data: dict, raw: str | None = None) -> ExperimentConfig:
    """Validate a parsed JSON object into an ExperimentConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - set(_KEY_MAP)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown config field {key!r}{_line_of(raw, key)}")
    kind = data.get("kind")
    if kind is None:
        raise ConfigError("missing required field 'kind'")
    if kind not in RUN_KINDS and kind != "sweep":
        raise ConfigError(f"unknown experiment kind {kind!r}{_line_of(raw, 'kind')}")

    kwargs = {}
    for key, value in data.items():
        attr = _KEY_MAP[key]
        if attr in ("horizon_grid", "points") and value is not None:
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[attr] = value
    cfg = ExperimentConfig(**kwargs)

    def bad(key, msg):
        return ConfigError(f"field {key!r} {msg}{_line_of(raw, key)}")

    if kind == "sweep":
        if not cfg.horizon_grid:
            raise ConfigError("missing required field 'T_grid'")
        if any((not isinstance(t, int)) or t < 2 for t in cfg.horizon_grid):
            raise bad("T_grid", "entries must be integers >= 2")
        if cfg.experiment not in ("dynamic-sc", "dynamic-ec", "dynamic-kernel"):
            raise bad("experiment", "must be a dynamic-* kind")
        if isinstance(cfg.vt_rule, str):
            if cfg.vt_rule not in VT_RULES:
                raise bad("vt_rule", f"must be one of {VT_RULES} or a per_step/fixed object")
        elif not (isinstance(cfg.vt_rule, dict) and set(cfg.vt_rule) <= {"per_step", "fixed"}):
            raise bad("vt_rule", "must be 'sqrt', 'inv-t', or {'per_step'|'fixed': value}")
        if cfg.reps < 1:
            raise bad("reps", "must be >= 1")
    else:
        if cfg.horizon < 1 and kind != "bound-report":
            raise ConfigError(f"missing required field 'T'{_line_of(raw, 'T')}")
        if kind == "bound-report" and cfg.horizon < 1 and cfg.points is None:
            raise ConfigError("bound-report needs 'T' or explicit 'points'")
    if cfg.dim < 1:
        raise bad("d", "must be >= 1")
    if cfg.pruning not in ("none", "aflh"):
        raise bad("pruning", "must be 'none' or 'aflh'")
    if cfg.env not in ENVIRONMENT_KINDS:
        raise bad("env", f"must be one of {ENVIRONMENT_KINDS}")
    for key, attr in (("H", "curvature"), ("sigma", "bandwidth"), ("B", "clip"), ("a", "ridge")):
        if getattr(cfg, attr) <= 0:
            raise bad(key, "must be > 0")
    if cfg.vt_target < 0:
        raise bad("vt_target", "must be >= 0")
    if cfg.labels not in ("signs", "drift"):
        raise bad("labels", "must be 'signs' or 'drift'")
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config file; errors carry line references."""
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})") from exc
    return config_from_dict(data, raw)


def config_hash(cfg: ExperimentConfig) -> str:
    payload = json.dumps(
        {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(cfg).items()},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trace: RegretTrace | None
    environment: Environment | None
    bound_report: PenalizedBoundReport | None
    metadata: dict
    records: list[FlhRound] = field(default_factory=list)

    @property
    def regret(self) -> float:
        return float("nan") if self.trace is None else dynamic_regret(self.trace)


def _zeta(cfg: ExperimentConfig, env: Environment) -> float:
    return cfg.zeta if cfg.zeta is not None else env.certificate.exp_concavity


def _run_dynamic_convex(cfg: ExperimentConfig, record_experts: bool) -> ExperimentResult:
    env = generate_environment(
        cfg.env,
        cfg.horizon,
        cfg.dim,
        cfg.seed,
        cfg.vt_target,
        curvature=cfg.curvature,
        ball_radius=cfg.ball_radius,
        switches=cfg.switches,
    )
    cert = env.certificate
    if cfg.kind == "dynamic-sc":
        spawn = lambda birth: OgdLearner(env.domain, cfg.curvature)  # noqa: E731
        name = "flh-ogd"
    else:
        spawn = lambda birth: OnsLearner(  # noqa: E731
            env.domain, cert.grad_bound, cert.exp_concavity
        )
        name = "flh-ons"
    flh = Flh(_zeta(cfg, env), spawn, pruning=cfg.pruning)
    records = []
    learner_loss = np.empty(cfg.horizon)
    for t, loss in enumerate(env.losses):
        rec = flh.play_round(loss)
        learner_loss[t] = rec.meta_loss
        if record_experts:
            records.append(rec)
    trace = RegretTrace(
        algorithm=f"{name}/{cfg.pruning}",
        seed=cfg.seed,
        config_hash=config_hash(cfg),
        learner_loss=learner_loss,
        comparator_loss=env.comparator_loss,
    )
    meta = {
        "zeta": flh.zeta,
        "grad_bound": cert.grad_bound,
        "exp_concavity": cert.exp_concavity,
        "realized_vt": env.realized_variation,
    }
    return ExperimentResult(cfg, trace, env, None, meta, records)


def _run_dynamic_kernel(cfg: ExperimentConfig, record_experts: bool) -> ExperimentResult:
    env = generate_environment(
        "kernel-regression-drift",
        cfg.horizon,
        cfg.dim,
        cfg.seed,
        cfg.vt_target,
        bandwidth=cfg.bandwidth,
        clip=cfg.clip,
        noise=cfg.noise,
        anchor_count=cfg.anchor_count,
    )
    spawn = lambda birth: KrrLearner(cfg.dim, cfg.bandwidth, cfg.ridge, cfg.clip)  # noqa: E731
    flh = Flh(_zeta(cfg, env), spawn, pruning=cfg.pruning)
    records = []
    preds = np.empty(cfg.horizon)
    learner_loss = np.empty(cfg.horizon)
    for t in range(cfg.horizon):
        rec = flh.play_regression_round(env.xs[t], float(env.ys[t]))
        preds[t] = rec.prediction
        learner_loss[t] = rec.meta_loss
        if record_experts:
            records.append(rec)
    trace = RegretTrace(
        algorithm=f"flh-krr/{cfg.pruning}",
        seed=cfg.seed,
        config_hash=config_hash(cfg),
        learner_loss=learner_loss,
        comparator_loss=env.comparator_loss,
        predictions=preds,
        labels=env.ys,
    )
    meta = {"zeta": flh.zeta, "realized_vt": env.realized_variation}
    return ExperimentResult(cfg, trace, env, None, meta, records)


def _run_penalized_krr(cfg: ExperimentConfig) -> ExperimentResult:
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, cfg.horizon, cfg.dim)))
    xs = rng.uniform(-cfg.spread, cfg.spread, size=(cfg.horizon, cfg.dim))
    if cfg.labels == "signs":
        ys = cfg.clip * rng.choice([-1.0, 1.0], size=cfg.horizon)
    else:
        direction = rng.standard_normal(cfg.dim)
        direction /= np.linalg.norm(direction)
        raw = np.tanh(xs @ direction) * cfg.clip
        ys = np.clip(raw + cfg.noise * rng.standard_normal(cfg.horizon), -cfg.clip, cfg.clip)
    learner = KrrLearner(cfg.dim, cfg.bandwidth, cfg.ridge, cfg.clip)
    preds = np.empty(cfg.horizon)
    for t in range(cfg.horizon):
        preds[t] = learner.predict(xs[t])
        learner.update(xs[t], float(ys[t]))
    trace = RegretTrace(
        algorithm="clipped-krr",
        seed=cfg.seed,
        config_hash=config_hash(cfg),
        learner_loss=(preds - ys) ** 2,
        comparator_loss=np.zeros(cfg.horizon),
        predictions=preds,
        labels=ys,
    )
    k = gram_matrix(xs, cfg.bandwidth)
    report = penalized_bound_report(k, cfg.ridge, cfg.clip, lam=cfg.lam)
    meta = {"penalized_regret": penalized_regret(trace, k, cfg.ridge)}
    return ExperimentResult(cfg, trace, None, report, meta)


def _bound_report_points(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.points is not None:
        pts = np.asarray(cfg.points, dtype=float)
        return pts.reshape(len(pts), -1)
    if cfg.separation is not None:
        pts = np.zeros((cfg.horizon, cfg.dim))
        pts[:, 0] = cfg.separation * cfg.bandwidth * np.arange(cfg.horizon)
        return pts
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, cfg.horizon, cfg.dim)))
    return rng.uniform(-cfg.spread, cfg.spread, size=(cfg.horizon, cfg.dim))


def _run_bound_report(cfg: ExperimentConfig) -> ExperimentResult:
    pts = _bound_report_points(cfg)
    k = gram_matrix(pts, cfg.bandwidth)
    report = penalized_bound_report(k, cfg.ridge, cfg.clip, lam=cfg.lam)
    return ExperimentResult(cfg, None, None, report, {"n_points": len(pts)})


def run_experiment(cfg: ExperimentConfig, record_experts: bool = False) -> ExperimentResult:
    """Execute one experiment config end to end."""
    if cfg.kind in ("dynamic-sc", "dynamic-ec"):
        return _run_dynamic_convex(cfg, record_experts)
    if cfg.kind == "dynamic-kernel":
        return _run_dynamic_kernel(cfg, record_experts)
    if cfg.kind == "penalized-krr":
        return _run_penalized_krr(cfg)
    if cfg.kind == "bound-report":
        return _run_bound_report(cfg)
    raise ConfigError(f"cannot run config of kind {cfg.kind!r}")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def vt_from_rule(rule, scale: float, horizon: int) -> float:
    if rule == "sqrt":
        return scale * float(np.sqrt(horizon))
    if rule == "inv-t":
        return scale / horizon
    if isinstance(rule, dict) and "per_step" in rule:
        return scale * float(rule["per_step"]) * (horizon - 1)
    if isinstance(rule, dict) and "fixed" in rule:
        return scale * float(rule["fixed"])
    raise ConfigError(f"unknown vt rule {rule!r}")


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x; NaN when underdetermined."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[dict]
    slope: float
    point_results: list[list[ExperimentResult]]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("T,V_T,regret,sqrt_T_VT,ratio\n")
            for row in self.rows:
                fh.write(
                    f"{row['T']},{row['V_T']:.17g},{row['regret']:.17g},"
                    f"{row['sqrt_T_VT']:.17g},{row['ratio']:.17g}\n"
                )


def sweep_point_config(
    cfg: ExperimentConfig, index: int, rep: int, horizon: int, vt: float
) -> ExperimentConfig:
    """The standalone run config equivalent to one sweep cell, reproducible
    via the run path with seed = base + index * reps + rep."""
    return replace(
        cfg,
        kind=cfg.experiment,
        horizon=horizon,
        vt_target=vt,
        seed=cfg.seed + index * cfg.reps + rep,
        horizon_grid=(),
    )


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Run the grid, average regret over reps, and fit the scaling slope.

    Points execute in a thread pool; results are assembled in grid order so
    parallel and serial sweeps produce identical summaries.
    """
    jobs = []
    for i, horizon in enumerate(cfg.horizon_grid):
        vt = vt_from_rule(cfg.vt_rule, cfg.vt_scale, horizon)
        for rep in range(cfg.reps):
            jobs.append((i, rep, sweep_point_config(cfg, i, rep, horizon, vt)))

    results: dict[tuple[int, int], ExperimentResult] = {}
    if cfg.synthetic_regret:
        for i, rep, point in jobs:
            results[(i, rep)] = ExperimentResult(point, None, None, None, {})
    elif threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(run_experiment, point): (i, rep) for i, rep, point in jobs}
            for fut, key in futures.items():
                results[key] = fut.result()
    else:
        for i, rep, point in jobs:
            results[(i, rep)] = run_experiment(point)

    rows = []
    point_results: list[list[ExperimentResult]] = []
    for i, horizon in enumerate(cfg.horizon_grid):
        vt = vt_from_rule(cfg.vt_rule, cfg.vt_scale, horizon)
        per_rep = [results[(i, rep)] for rep in range(cfg.reps)]
        point_results.append(per_rep)
        bound = float(np.sqrt(horizon * vt)) if vt > 0 else 0.0
        if cfg.synthetic_regret:
            regret = bound
        else:
            regret = float(np.mean([r.regret for r in per_rep]))
        rows.append(
            {
                "T": horizon,
                "V_T": vt,
                "regret": regret,
                "sqrt_T_VT": bound,
                "ratio": regret / bound if bound > 0 else float("nan"),
            }
        )
    slope = fit_loglog_slope(
        np.array([r["sqrt_T_VT"] for r in rows]), np.array([r["regret"] for r in rows])
    )
    return SweepResult(cfg, rows, slope, point_results)
