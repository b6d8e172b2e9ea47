"""Monte-Carlo harness: DOA RMSE sweeps, ANMF variance sweeps, covariance
matching, and estimator-to-estimator variance ratios, with CSV/JSON output.

Determinism contract: every trial owns the generator stream
(seed, (N-index, trial)), and aggregation fills per-trial slots by index, so
results are byte-identical for any worker count.  Within a trial the noise
block is drawn first, then the signal amplitudes (and then the test vector
where one is needed); series that use fewer snapshots than were drawn take a
prefix, which is how the sigma1-scaled overlay shares its draws with the
base series and extends them.

Snapshot model for DOA experiments: z = s a(theta0) + w with s circular
Gaussian of per-sensor power 10^(SNR_dB/10) against unit noise power.
ANMF experiments use target-absent data: the tested vector y is pure noise
drawn once per run and held fixed across trials (conditional-variance
design), and the steering p points at ``steering-deg``.
"""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import applications, asymptotics, estimators, linalg
from .distributions import EllipticalModel, make_stream, parse_model_id

__all__ = [
    "ConfigError",
    "ExperimentError",
    "ExperimentConfig",
    "ResultRow",
    "ExperimentResult",
    "load_config",
    "parse_config",
    "validate_config",
    "run_experiment",
    "run_doa_rmse",
    "run_anmf_variance",
    "run_cov_asymptotics",
    "run_var_ratio",
    "serialize_results",
    "parse_results_csv",
    "parse_results_json",
]

EXPERIMENTS = ("doa-rmse", "anmf-variance", "cov-asymptotics", "var-ratio")
CSV_COLUMNS = ("experiment", "estimator", "model", "m", "N", "trials", "statistic", "value", "stderr", "sigma1", "seed")
MAX_FAILURE_FRACTION = 0.01
_FIXED_DRAW_STREAM = 1 << 32  # reserved stream index for one-off draws


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every offence."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ExperimentError(linalg.NumericalError):
    """Too many per-trial failures in at least one (estimator, N) cell."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    estimators: tuple[str, ...]
    n_grid: tuple[int, ...]
    trials: int
    model: str = "gaussian"
    m: int = 3
    seed: int = 42
    scaled_overlay: bool = False
    doa_deg: float = 20.0
    snr_db: float = 5.0
    grid_step_deg: float = 0.01
    steering_deg: float = 0.0
    functional: str = "anmf"
    tol: float = 1e-9
    max_iter: int = 200


@dataclass(frozen=True)
class ResultRow:
    estimator: str
    N: int
    statistic: str
    value: float
    stderr: float
    trials: int
    failures: int
    sigma1: float | None  # the overlay/ratio anchor; None for plain sweeps


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple[ResultRow, ...]
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# configuration parsing / validation

_KEY_ALIASES = {
    "experiment": "experiment",
    "model": "model",
    "estimators": "estimators",
    "m": "m",
    "n_grid": "n_grid",
    "trials": "trials",
    "seed": "seed",
    "scaled_overlay": "scaled_overlay",
    "doa_deg": "doa_deg",
    "snr_db": "snr_db",
    "grid_step": "grid_step_deg",
    "grid_step_deg": "grid_step_deg",
    "steering_deg": "steering_deg",
    "functional": "functional",
    "tol": "tol",
    "max_iter": "max_iter",
}


def _coerce_list(value, cast):
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    return tuple(cast(v) for v in value)


def _coerce_bool(value):
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_config(mapping: dict) -> ExperimentConfig:
    """Build a config from a raw mapping (JSON object or key=value pairs)."""
    errors = []
    fields: dict = {}
    for raw_key, value in mapping.items():
        key = str(raw_key).strip().lower().replace("-", "_")
        if key not in _KEY_ALIASES:
            errors.append(f"unknown config key {raw_key!r}")
            continue
        key = _KEY_ALIASES[key]
        try:
            if key == "estimators":
                fields[key] = _coerce_list(value, str)
            elif key == "n_grid":
                fields[key] = _coerce_list(value, int)
            elif key in ("m", "trials", "seed", "max_iter"):
                fields[key] = int(value)
            elif key == "scaled_overlay":
                fields[key] = _coerce_bool(value)
            elif key in ("doa_deg", "snr_db", "grid_step_deg", "steering_deg", "tol"):
                fields[key] = float(value)
            else:
                fields[key] = str(value)
        except (TypeError, ValueError) as exc:
            errors.append(f"{raw_key}: {exc}")
    for required in ("experiment", "estimators", "n_grid", "trials"):
        if required not in fields:
            label = "N-grid" if required == "n_grid" else required
            errors.append(f"{label}: missing")
    if errors:
        raise ConfigError(errors)
    cfg = ExperimentConfig(**fields)
    validate_config(cfg)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """Read a config file: a single JSON object, or key = value lines."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.strip()
    if stripped.startswith("{"):
        return parse_config(json.loads(stripped))
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {lineno}: expected key = value, got {line!r}"])
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return parse_config(mapping)


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every field, reporting all problems at once."""
    errors = []
    if cfg.experiment not in EXPERIMENTS:
        errors.append(f"experiment: unknown id {cfg.experiment!r} (choose from {', '.join(EXPERIMENTS)})")
    if not cfg.estimators:
        errors.append("estimators: need at least one")
    for est in cfg.estimators:
        try:
            estimators.parse_estimator_id(est, max(cfg.m, 2))
        except ValueError as exc:
            errors.append(f"estimators: {exc}")
    try:
        parse_model_id(cfg.model)
    except ValueError as exc:
        errors.append(f"model: {exc}")
    if cfg.m < 2:
        errors.append("m: dimension must be at least 2")
    if not cfg.n_grid:
        errors.append("N-grid: must be non-empty")
    elif any(n <= 0 for n in cfg.n_grid):
        errors.append("N-grid: sample counts must be positive")
    elif any(b <= a for a, b in zip(cfg.n_grid, cfg.n_grid[1:])):
        errors.append("N-grid: must be strictly increasing")
    if cfg.trials < 1:
        errors.append("trials: must be at least 1")
    if cfg.tol <= 0:
        errors.append("tol: must be positive")
    if cfg.max_iter < 1:
        errors.append("max-iter: must be at least 1")
    if cfg.grid_step_deg <= 0:
        errors.append("grid-step: must be positive")
    if cfg.scaled_overlay and "tyler" in cfg.estimators:
        errors.append("scaled-overlay: no variance coefficients for tyler; drop the overlay or the estimator")
    if cfg.scaled_overlay and cfg.experiment in ("cov-asymptotics", "var-ratio"):
        errors.append("scaled-overlay: only meaningful for the doa-rmse and anmf-variance sweeps")
    if cfg.experiment == "cov-asymptotics" and cfg.m > 3:
        errors.append("m: covariance matching needs m <= 3 to keep the empirical m^2 x m^2 covariance estimable")
    if cfg.experiment in ("cov-asymptotics", "var-ratio") and "tyler" in cfg.estimators:
        errors.append("estimators: tyler has no variance coefficients; use scm/huber here")
    if cfg.experiment == "var-ratio":
        if "scm" not in cfg.estimators:
            errors.append("estimators: var-ratio needs 'scm' as the baseline")
        if cfg.functional not in ("anmf", "music-doa"):
            errors.append(f"functional: unknown id {cfg.functional!r} (anmf or music-doa)")
    if errors:
        raise ConfigError(errors)


# ---------------------------------------------------------------------------
# series bookkeeping (base estimators + optional sigma1-scaled overlays)


@dataclass(frozen=True)
class _Series:
    estimator: str
    label: str
    scale: float
    sigma1: float | None

    def n_use(self, n: int) -> int:
        return n if self.scale == 1.0 else math.ceil(self.scale * n)


def _estimator_sigma1(estimator_id: str, m: int, model_id: str) -> float | None:
    if estimator_id.strip().lower() == "tyler":
        return None
    return asymptotics.variance_coeffs(estimator_id, m, model_id).sigma1


def _build_series(cfg: ExperimentConfig) -> list[_Series]:
    # sigma1 is the overlay/ratio anchor; plain sweeps leave the column NaN
    # (for very impulsive models its defining root can sit beyond any
    # reasonable bracket, and nothing downstream needs it there)
    want_sigma1 = cfg.scaled_overlay or cfg.experiment == "var-ratio"
    series = []
    for est in cfg.estimators:
        s1 = _estimator_sigma1(est, cfg.m, cfg.model) if want_sigma1 else None
        series.append(_Series(estimator=est, label=est, scale=1.0, sigma1=s1))
        if cfg.scaled_overlay and est != "scm":
            series.append(_Series(estimator=est, label=f"{est}@sigma1N", scale=s1, sigma1=s1))
    return series


# ---------------------------------------------------------------------------
# per-trial work (module-level so worker processes can run it)

_CTX = None


def _init_worker(ctx):
    global _CTX
    _CTX = ctx


def _run_chunk(span):
    lo, hi = span
    fn = _TRIAL_FNS[_CTX["experiment"]]
    return lo, [fn(_CTX, t) for t in range(lo, hi)]


def _draw_noise(model: EllipticalModel, n: int, rng) -> np.ndarray:
    return model.sample(n, rng)


def _draw_signal(n: int, power: float, steer: np.ndarray, rng) -> np.ndarray:
    amp = np.sqrt(0.5 * power) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return amp[:, None] * steer


def _draw_test_vector(model: EllipticalModel, rng) -> np.ndarray:
    y = model.sample(1, rng)[0]
    while not np.any(y):  # texture underflow can zero a row at extreme shapes
        y = model.sample(1, rng)[0]
    return y


def _fit(ctx, z, estimator_id):
    return estimators.estimate(z, estimator_id, tol=ctx["tol"], max_iter=ctx["max_iter"]).matrix


def _trial_doa(ctx, t):
    out = np.full((len(ctx["n_grid"]), len(ctx["series"])), np.nan)
    for jn, n in enumerate(ctx["n_grid"]):
        rng = make_stream(ctx["seed"], (jn, t))
        n_draw = ctx["draw_counts"][jn]
        z = _draw_noise(ctx["model"], n_draw, rng) + _draw_signal(n_draw, ctx["power"], ctx["steer"], rng)
        for js, ser in enumerate(ctx["series"]):
            try:
                mat = _fit(ctx, z[: ser.n_use(n)], ser.estimator)
                out[jn, js] = applications.music_doa(mat, ctx["ula"], ctx["search"])[0]
            except linalg.NumericalError:
                pass
    return out


def _trial_anmf(ctx, t):
    out = np.full((len(ctx["n_grid"]), len(ctx["series"])), np.nan)
    for jn, n in enumerate(ctx["n_grid"]):
        rng = make_stream(ctx["seed"], (jn, t))
        z = _draw_noise(ctx["model"], ctx["draw_counts"][jn], rng)
        y = ctx["y_fixed"] if ctx["y_fixed"] is not None else _draw_test_vector(ctx["model"], rng)
        for js, ser in enumerate(ctx["series"]):
            try:
                mat = _fit(ctx, z[: ser.n_use(n)], ser.estimator)
                out[jn, js] = applications.anmf_statistic(y, ctx["p"], mat)
            except linalg.NumericalError:
                pass
    return out


def _trial_cov(ctx, t):
    m = ctx["model"].dim
    out = np.full((len(ctx["series"]), m * m), np.nan, dtype=complex)
    rng = make_stream(ctx["seed"], (0, t))
    z = _draw_noise(ctx["model"], ctx["n_grid"][-1], rng)
    for js, ser in enumerate(ctx["series"]):
        try:
            out[js] = linalg.vec(_fit(ctx, z, ser.estimator))
        except linalg.NumericalError:
            pass
    return out


def _trial_ratio(ctx, t):
    if ctx["functional"] == "anmf":
        return _trial_anmf(ctx, t)
    return _trial_doa(ctx, t)


_TRIAL_FNS = {
    "doa-rmse": _trial_doa,
    "anmf-variance": _trial_anmf,
    "cov-asymptotics": _trial_cov,
    "var-ratio": _trial_ratio,
}


def _map_trials(cfg: ExperimentConfig, ctx: dict, threads: int) -> list:
    fn = _TRIAL_FNS[cfg.experiment]
    if threads <= 1:
        return [fn(ctx, t) for t in range(cfg.trials)]
    chunk = max(1, math.ceil(cfg.trials / (4 * threads)))
    spans = [(lo, min(lo + chunk, cfg.trials)) for lo in range(0, cfg.trials, chunk)]
    out: list = [None] * cfg.trials
    with ProcessPoolExecutor(
        max_workers=threads,
        mp_context=mp.get_context("fork"),
        initializer=_init_worker,
        initargs=(ctx,),
    ) as pool:
        for lo, vals in pool.map(_run_chunk, spans):
            out[lo : lo + len(vals)] = vals
    return out


# ---------------------------------------------------------------------------
# experiment runners


def _resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValueError("thread count must be non-negative")
    return threads if threads > 0 else (os.cpu_count() or 1)


def _base_ctx(cfg: ExperimentConfig, series: list[_Series]) -> dict:
    scatter = np.eye(cfg.m)
    model = EllipticalModel.from_id(cfg.model, scatter)
    draw_counts = [max(ser.n_use(n) for ser in series) for n in cfg.n_grid]
    return {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "n_grid": list(cfg.n_grid),
        "series": series,
        "model": model,
        "draw_counts": draw_counts,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
    }


def _doa_ctx(cfg: ExperimentConfig, series: list[_Series]) -> dict:
    ctx = _base_ctx(cfg, series)
    ula = applications.UlaConfig(m=cfg.m)
    search = applications.DoaSearch.from_step(cfg.grid_step_deg)
    search.steering_for(ula)  # build the grid steering cache once, in the parent
    ctx.update(
        ula=ula,
        search=search,
        steer=applications.steering_vector(cfg.doa_deg, ula),
        power=10.0 ** (cfg.snr_db / 10.0),
    )
    return ctx


def _anmf_ctx(cfg: ExperimentConfig, series: list[_Series], fixed_y: bool) -> dict:
    ctx = _base_ctx(cfg, series)
    ula = applications.UlaConfig(m=cfg.m)
    y = None
    if fixed_y:
        y = _draw_test_vector(ctx["model"], make_stream(cfg.seed, (_FIXED_DRAW_STREAM, 0)))
    ctx.update(p=applications.steering_vector(cfg.steering_deg, ula), y_fixed=y)
    return ctx


def _failure_check(label: str, n: int, failures: int, trials: int, problems: list):
    if failures > MAX_FAILURE_FRACTION * trials:
        problems.append(f"cell ({label}, N={n}): {failures}/{trials} trials failed")


def _sweep_rows(cfg, series, stacked, statistic, reducer) -> list[ResultRow]:
    """Aggregate a (trials, n_grid, series) stack into one row per cell."""
    rows = []
    problems: list[str] = []
    for js, ser in enumerate(series):
        for jn, n in enumerate(cfg.n_grid):
            vals = stacked[:, jn, js]
            ok = vals[~np.isnan(vals)]
            failures = int(vals.size - ok.size)
            _failure_check(ser.label, n, failures, cfg.trials, problems)
            value, stderr = reducer(ok) if ok.size else (float("nan"), float("nan"))
            rows.append(
                ResultRow(
                    estimator=ser.label,
                    N=n,
                    statistic=statistic,
                    value=value,
                    stderr=stderr,
                    trials=int(ok.size),
                    failures=failures,
                    sigma1=ser.sigma1,
                )
            )
    if problems:
        raise ExperimentError("; ".join(problems))
    return rows


def _finish(cfg: ExperimentConfig, rows: list[ResultRow], extra_meta: dict | None = None) -> ExperimentResult:
    canonical = json.dumps({"config": asdict(cfg), "rows": [asdict(r) for r in rows]}, sort_keys=True)
    meta = {
        # normalized through JSON so the echo survives serialization round-trips
        "config": json.loads(json.dumps(asdict(cfg))),
        "content_hash": hashlib.sha1(canonical.encode()).hexdigest(),
    }
    if extra_meta:
        meta.update(extra_meta)
    return ExperimentResult(config=cfg, rows=tuple(rows), metadata=meta)


def run_doa_rmse(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """RMSE (degrees) of the MUSIC DOA estimate per (estimator, N) cell."""
    series = _build_series(cfg)
    ctx = _doa_ctx(cfg, series)
    stacked = np.stack(_map_trials(cfg, ctx, _resolve_threads(threads)))
    truth = cfg.doa_deg

    def reducer(thetas):
        sq = (thetas - truth) ** 2
        mean_sq = float(np.mean(sq))
        rmse = math.sqrt(mean_sq)
        se_mean = float(np.std(sq, ddof=1)) / math.sqrt(sq.size) if sq.size > 1 else 0.0
        return rmse, (se_mean / (2.0 * rmse) if rmse > 0 else 0.0)

    rows = _sweep_rows(cfg, series, stacked, "rmse-deg", reducer)
    return _finish(cfg, rows, {"signal": {"doa-deg": cfg.doa_deg, "snr-db": cfg.snr_db}})


def run_anmf_variance(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Variance of the ANMF statistic for a fixed target-absent test vector.

    y is drawn once from the config seed and held across trials, so the
    spread measures covariance-estimation error alone (the detector's
    conditional variance); with fresh y per trial the y-variation floor
    dominates at large N and swamps the estimator comparison.
    """
    series = _build_series(cfg)
    ctx = _anmf_ctx(cfg, series, fixed_y=True)

    def reducer(vals):
        var = float(np.var(vals, ddof=1))
        centered = vals - vals.mean()
        m4 = float(np.mean(centered**4))
        se = math.sqrt(max(m4 - var**2, 0.0) / vals.size) if vals.size > 1 else 0.0
        return var, se

    stacked = np.stack(_map_trials(cfg, ctx, _resolve_threads(threads)))
    rows = _sweep_rows(cfg, series, stacked, "anmf-var", reducer)
    return _finish(cfg, rows, {"detection": {"y": "target-absent, fixed across trials", "p": f"a({cfg.steering_deg:g} deg)"}})


def run_cov_asymptotics(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Empirical N Cov(vec(M_hat)) vs the predicted covariance pair.

    At the largest N of the grid: per estimator, the maximum relative
    deviation over entries whose predicted modulus exceeds 0.1, for both the
    covariance (vs Sigma) and the pseudo-covariance (vs Omega).
    """
    series = _build_series(cfg)
    ctx = _base_ctx(cfg, series)
    stacked = np.stack(_map_trials(cfg, ctx, _resolve_threads(threads)))  # (T, series, m^2)
    n_big = cfg.n_grid[-1]
    rows = []
    problems: list[str] = []
    for js, ser in enumerate(series):
        vecs = stacked[:, js, :]
        ok = ~np.isnan(vecs[:, 0].real)
        failures = int(vecs.shape[0] - ok.sum())
        _failure_check(ser.label, n_big, failures, cfg.trials, problems)
        v = vecs[ok]
        t_ok = v.shape[0]
        if t_ok < 2:
            continue  # cell already recorded as failed
        centered = v - v.mean(axis=0)
        emp_cov = n_big * (centered.T @ centered.conj()) / (t_ok - 1)
        emp_pcov = n_big * (centered.T @ centered) / (t_ok - 1)

        w = estimators.parse_estimator_id(ser.estimator, cfg.m)
        av = asymptotics.complex_variance_coeffs(w, cfg.m, model_id=cfg.model)
        estimand = ctx["model"].scatter / av.sigma
        pair = asymptotics.scatter_asymptotic_covariance(estimand, av.sigma1, av.sigma2)

        for stat, emp, ref in (("cov-max-rel-dev", emp_cov, pair.Sigma), ("pcov-max-rel-dev", emp_pcov, pair.Omega)):
            mask = np.abs(ref) > 0.1
            dev = np.abs(emp - ref)[mask] / np.abs(ref)[mask]
            worst = int(np.argmax(dev))
            idx = tuple(np.argwhere(mask)[worst])
            prods = n_big * centered[:, idx[0]] * (centered[:, idx[1]].conj() if stat == "cov-max-rel-dev" else centered[:, idx[1]])
            se = float(np.std(prods, ddof=1) / math.sqrt(t_ok) / abs(ref[idx]))
            rows.append(
                ResultRow(
                    estimator=ser.label,
                    N=n_big,
                    statistic=stat,
                    value=float(dev[worst]),
                    stderr=se,
                    trials=t_ok,
                    failures=failures,
                    sigma1=av.sigma1,
                )
            )
    if problems:
        raise ExperimentError("; ".join(problems))
    return _finish(cfg, rows)


def run_var_ratio(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Per-N spread ratio of a degree-0 functional, M-estimator over SCM.

    ANMF runs hold y fixed across trials (so the spread is pure estimation
    error and the ratio approaches sigma1); DOA runs compare mean squared
    error around the true angle.  Trials are paired: both estimators see the
    same data, which cancels most of the Monte-Carlo noise in the ratio.
    """
    series = _build_series(cfg)
    if cfg.functional == "anmf":
        ctx = _anmf_ctx(cfg, series, fixed_y=True)
    else:
        ctx = _doa_ctx(cfg, series)
    ctx["functional"] = cfg.functional
    stacked = np.stack(_map_trials(cfg, ctx, _resolve_threads(threads)))
    base_idx = next(js for js, ser in enumerate(series) if ser.label == "scm")

    def spread(vals):
        if cfg.functional == "anmf":
            return vals - vals.mean()
        return vals - cfg.doa_deg

    rows = []
    problems: list[str] = []
    statistic = "var-ratio" if cfg.functional == "anmf" else "mse-ratio"
    for js, ser in enumerate(series):
        if js == base_idx:
            continue
        for jn, n in enumerate(cfg.n_grid):
            pair = stacked[:, jn, [js, base_idx]]
            ok = ~np.isnan(pair).any(axis=1)
            failures = int(pair.shape[0] - ok.sum())
            _failure_check(ser.label, n, failures, cfg.trials, problems)
            if ok.sum() < 2:
                continue  # cell already recorded as failed
            dev = spread(pair[ok, 0])
            dev_base = spread(pair[ok, 1])
            num = float(np.mean(dev**2))
            den = float(np.mean(dev_base**2))
            ratio = num / den
            # delta-method stderr from the per-trial influence values
            infl = (dev**2 - num) / den - ratio * (dev_base**2 - den) / den
            se = float(np.std(infl, ddof=1) / math.sqrt(ok.sum()))
            rows.append(
                ResultRow(
                    estimator=ser.label,
                    N=n,
                    statistic=statistic,
                    value=ratio,
                    stderr=se,
                    trials=int(ok.sum()),
                    failures=failures,
                    sigma1=ser.sigma1,
                )
            )
    if problems:
        raise ExperimentError("; ".join(problems))
    meta = {"functional": cfg.functional}
    if cfg.functional == "anmf":
        meta["detection"] = {"y": "target-absent, fixed across trials", "p": f"a({cfg.steering_deg:g} deg)"}
    return _finish(cfg, rows, meta)


_RUNNERS = {
    "doa-rmse": run_doa_rmse,
    "anmf-variance": run_anmf_variance,
    "cov-asymptotics": run_cov_asymptotics,
    "var-ratio": run_var_ratio,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Validate and run the experiment named by the config."""
    validate_config(cfg)
    return _RUNNERS[cfg.experiment](cfg, threads=threads)


# ---------------------------------------------------------------------------
# serialization


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rows_as_csv(res: ExperimentResult) -> str:
    cfg = res.config
    lines = [",".join(CSV_COLUMNS)]
    for row in res.rows:
        lines.append(
            ",".join(
                _csv_cell(v)
                for v in (
                    cfg.experiment,
                    row.estimator,
                    cfg.model,
                    cfg.m,
                    row.N,
                    row.trials,
                    row.statistic,
                    row.value,
                    row.stderr,
                    row.sigma1,
                    cfg.seed,
                )
            )
        )
    return "\n".join(lines) + "\n"


def _as_json(res: ExperimentResult) -> str:
    doc = {
        "config": asdict(res.config),
        "rows": [asdict(r) for r in res.rows],
        "metadata": res.metadata,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def serialize_results(res: ExperimentResult, fmt: str, path: str) -> None:
    """Write a result file; CSV carries the fixed column contract, JSON everything."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown output format {fmt!r}")
    payload = _rows_as_csv(res) if fmt == "csv" else _as_json(res)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def parse_results_csv(path: str) -> list[dict]:
    """Read back a results CSV as typed row dicts (column contract enforced)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln]
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError(f"{path}: missing or wrong CSV header (expected {','.join(CSV_COLUMNS)})")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: row has {len(parts)} columns, expected {len(CSV_COLUMNS)}")
        rec = dict(zip(CSV_COLUMNS, parts))
        for key in ("m", "N", "trials", "seed"):
            rec[key] = int(rec[key])
        for key in ("value", "stderr"):
            rec[key] = float(rec[key])
        rec["sigma1"] = float(rec["sigma1"]) if rec["sigma1"] else None
        rows.append(rec)
    return rows


def parse_results_json(path: str) -> ExperimentResult:
    """Rebuild a full ExperimentResult from its JSON serialization."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg_raw = dict(doc["config"])
    cfg_raw["estimators"] = tuple(cfg_raw["estimators"])
    cfg_raw["n_grid"] = tuple(cfg_raw["n_grid"])
    cfg = ExperimentConfig(**cfg_raw)
    rows = tuple(ResultRow(**r) for r in doc["rows"])
    return ExperimentResult(config=cfg, rows=rows, metadata=doc.get("metadata", {}))
