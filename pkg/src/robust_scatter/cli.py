"""Command-line interface: estimate scatter matrices, print asymptotic
coefficients, run Monte-Carlo experiments, and self-test the install.

Exit codes are a stable scripting contract: 0 success, 2 usage/config
error, 3 numerical failure, 4 I/O or file-format error.  Every run prints
its resolved configuration to stderr before doing any work.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import applications, asymptotics, estimators, experiments, linalg
from ._kernels import BACKEND
from .distributions import make_stream

SAMPLES_HEADER = "# robust-scatter v1"

__all__ = ["main", "read_samples", "write_samples", "SampleFormatError"]


class SampleFormatError(Exception):
    """Sample file violates the interleaved-real-columns CSV contract."""


def read_samples(path: str) -> np.ndarray:
    """Read complex samples from CSV: header line, then 2m real columns
    (Re z_1..Re z_m, Im z_1..Im z_m), one row per sample."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SampleFormatError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != SAMPLES_HEADER:
        raise SampleFormatError(f"{path}: first line must be {SAMPLES_HEADER!r}")
    rows = []
    ncols = None
    bad = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if ncols is None:
            ncols = len(parts)
            if ncols % 2 != 0 or ncols == 0:
                raise SampleFormatError(f"{path}: line {lineno}: need an even number of columns, got {ncols}")
        if len(parts) != ncols:
            bad.append(f"line {lineno}: {len(parts)} columns, expected {ncols}")
            continue
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            bad.append(f"line {lineno}: non-numeric value")
    if bad:
        shown = "; ".join(bad[:10])
        more = "" if len(bad) <= 10 else f" (+{len(bad) - 10} more)"
        raise SampleFormatError(f"{path}: malformed rows: {shown}{more}")
    if not rows:
        raise SampleFormatError(f"{path}: no samples")
    data = np.asarray(rows)
    m = data.shape[1] // 2
    return data[:, :m] + 1j * data[:, m:]


def write_samples(path: str, z: np.ndarray) -> None:
    """Write complex samples in the format :func:`read_samples` expects."""
    z = np.asarray(z)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(SAMPLES_HEADER + "\n")
        for row in z:
            cells = [repr(float(v)) for v in row.real] + [repr(float(v)) for v in row.imag]
            fh.write(",".join(cells) + "\n")


def _complex_matrix_json(mat: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(mat)]


def _announce(label: str, resolved: dict) -> None:
    print(f"config[{label}]: {json.dumps(resolved, sort_keys=True)}", file=sys.stderr)


def _threads_default() -> int:
    env = os.environ.get("ROBUST_SCATTER_THREADS")
    return int(env) if env else 0


def _resolve_estimator(args) -> str:
    est = args.estimator
    if est == "huber":
        est = f"huber:{args.q:g}"
    return est


def _resolve_model(args) -> str:
    model = args.model
    if model == "k-dist":
        model = f"k-dist:{args.nu:g}"
    return model


def cmd_estimate(args) -> int:
    est_id = _resolve_estimator(args)
    _announce("estimate", {"samples": args.samples, "estimator": est_id, "tol": args.tol, "max_iter": args.max_iter})
    z = read_samples(args.samples)
    result = estimators.estimate(z, est_id, tol=args.tol, max_iter=args.max_iter)
    doc = {
        "estimator": result.estimator_id,
        "m": int(z.shape[1]),
        "n": int(z.shape[0]),
        "iterations": result.iterations,
        "residual": result.residual,
        "sigma": result.sigma,
        "pd": result.pd,
        "matrix": _complex_matrix_json(result.matrix),
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_sigma(args) -> int:
    est_id = _resolve_estimator(args)
    model_id = _resolve_model(args)
    _announce("sigma", {"estimator": est_id, "m": args.m, "model": model_id})
    av = asymptotics.variance_coeffs(est_id, args.m, model_id)
    print(json.dumps(asdict(av), indent=2))
    return 0


def cmd_experiment(args) -> int:
    cfg = experiments.load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.grid_step is not None:
        cfg = replace(cfg, grid_step_deg=args.grid_step)
    threads = args.threads if args.threads is not None else _threads_default()
    _announce("experiment", {**asdict(cfg), "threads": threads, "out": args.out, "format": args.format})
    result = experiments.run_experiment(cfg, threads=threads)
    experiments.serialize_results(result, args.format, args.out)
    for row in result.rows:
        print(
            f"{cfg.experiment} {row.estimator} N={row.N} {row.statistic}="
            f"{row.value:.6g} +- {row.stderr:.2g} ({row.trials} trials)"
        )
    print(f"wrote {args.out} [{args.format}]")
    return 0


# ---------------------------------------------------------------------------
# selftest groups


def _selftest_linalg(rng) -> None:
    for m in (2, 3, 8):
        x = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        a = linalg.symmetrize(x @ x.conj().T) + m * np.eye(m)
        fa_inv = linalg.real_embedding(linalg.herm_inv(a))
        rel = np.linalg.norm(fa_inv - 0.25 * np.linalg.inv(linalg.real_embedding(a)))
        if rel > 1e-12 * np.linalg.norm(fa_inv):
            raise AssertionError(f"real-embedding inverse identity off by {rel:.2e} at m={m}")
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        u = np.concatenate([z.real, z.imag])
        lhs = (z.conj() @ linalg.herm_inv(a) @ z).real
        rhs = 0.5 * u @ np.linalg.inv(linalg.real_embedding(a)) @ u
        if abs(lhs - rhs) > 1e-12 * abs(lhs):
            raise AssertionError("real-embedding quadratic-form identity failed")


def _selftest_vec_kron(rng) -> None:
    a, x, b = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3))
    lhs = linalg.vec(a @ x @ b)
    rhs = linalg.kron(b.T, a) @ linalg.vec(x)
    if np.linalg.norm(lhs - rhs) > 1e-12 * np.linalg.norm(lhs):
        raise AssertionError("vec/kron identity failed")
    v = rng.standard_normal(16)
    if not np.array_equal(linalg.commutation_apply(linalg.commutation_apply(v, 4), 4), v):
        raise AssertionError("commutation is not an involution")


def _selftest_fixed_point(rng) -> None:
    from .distributions import sample_complex_gaussian

    z = sample_complex_gaussian(np.eye(3), 500, rng)
    est = estimators.estimate(z, "huber:0.75")
    if est.residual >= 1e-8:
        raise AssertionError(f"fixed-point residual {est.residual:.2e} too large")


def _selftest_sigma(corrupt: bool) -> None:
    q, m = 0.75, 3
    k2, beta = estimators.huber_tuning(q, m)
    if corrupt:
        beta *= 1.05  # negative-control hook
    w = estimators.huber_weight(q, m, k2=k2, beta=beta)
    av = asymptotics.complex_variance_coeffs(w, m)
    if abs(av.sigma1 - 1.067) > 1e-2:
        raise AssertionError(f"sigma1 anchor failed: {av.sigma1:.4f} vs 1.067")


def _selftest_applications(rng) -> None:
    cfg = applications.UlaConfig(m=3)
    steer = applications.steering_vector(20.0, cfg)
    cov = np.eye(3) + 4.0 * np.outer(steer, steer.conj())
    search = applications.DoaSearch.from_step(0.05)
    theta = applications.music_doa(cov, cfg, search)[0]
    if abs(theta - 20.0) > 0.05:
        raise AssertionError(f"exact-covariance DOA off: {theta:.3f}")
    lam = applications.anmf_statistic(steer, steer, cov)
    if abs(lam - 1.0) > 1e-10:
        raise AssertionError("ANMF of y = p must be 1")


def cmd_selftest(args) -> int:
    _announce("selftest", {"corrupt_tuning": bool(args.corrupt_tuning), "kernel_backend": BACKEND})
    rng = make_stream(20240601)
    groups = [
        ("embedding", lambda: _selftest_linalg(rng)),
        ("vec-kron", lambda: _selftest_vec_kron(rng)),
        ("fixed-point", lambda: _selftest_fixed_point(rng)),
        ("sigma", lambda: _selftest_sigma(bool(args.corrupt_tuning))),
        ("applications", lambda: _selftest_applications(rng)),
    ]
    failed = 0
    for name, fn in groups:
        start = time.perf_counter()
        try:
            fn()
        except Exception as exc:
            failed += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name} ({time.perf_counter() - start:.2f}s)")
    return 3 if failed else 0


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-scatter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="estimate a scatter matrix from a samples CSV")
    p_est.add_argument("samples", help=f"CSV file starting with {SAMPLES_HEADER!r}")
    p_est.add_argument("--estimator", default="scm", help="scm | huber:<q> | huber | tyler")
    p_est.add_argument("--q", type=float, default=0.75, help="huber clipping fraction when --estimator huber")
    p_est.add_argument("--tol", type=float, default=estimators.DEFAULT_TOL)
    p_est.add_argument("--max-iter", type=int, default=estimators.DEFAULT_MAX_ITER)
    p_est.set_defaults(func=cmd_estimate)

    p_sig = sub.add_parser("sigma", help="print asymptotic variance coefficients as JSON")
    p_sig.add_argument("--estimator", default="huber:0.75")
    p_sig.add_argument("--q", type=float, default=0.75)
    p_sig.add_argument("--m", type=int, required=True)
    p_sig.add_argument("--model", default="gaussian", help="gaussian | k-dist:<nu> | k-dist | student-t:<dof>")
    p_sig.add_argument("--nu", type=float, default=0.1, help="K-distribution shape when --model k-dist")
    p_sig.set_defaults(func=cmd_sigma)

    p_exp = sub.add_parser("experiment", help="run a Monte-Carlo experiment from a config file")
    p_exp.add_argument("config", help="config file (key = value lines or one JSON object)")
    p_exp.add_argument("--out", required=True, help="output path for the results file")
    p_exp.add_argument("--format", choices=("csv", "json"), default="csv")
    p_exp.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_exp.add_argument("--threads", type=int, default=None, help="worker count (0 = auto; env ROBUST_SCATTER_THREADS)")
    p_exp.add_argument("--grid-step", type=float, default=None, help="override the DOA grid step (degrees)")
    p_exp.set_defaults(func=cmd_experiment)

    p_self = sub.add_parser("selftest", help="run the fast invariant suite")
    p_self.add_argument("--corrupt-tuning", action="store_true", help=argparse.SUPPRESS)
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except experiments.ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except SampleFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except linalg.NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
