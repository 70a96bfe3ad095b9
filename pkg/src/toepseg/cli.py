"""Command-line entry point.

Subcommands
-----------
segment   : fit a fixed-K model (or sweep a K grid) on an interval CSV,
            writing model.json, labels.csv, and objective_trace.csv.
select-k  : alias for segment with a K grid; also writes bic_table.csv.
image     : render per-cluster recurrence-plot images from a saved model.
evaluate  : rolling-origin ridge forecast of the next interval per series,
            printing mean distance errors as JSON.

All runs are driven by a TOML config file; `--seed` and `--out` override
the corresponding config keys.  Exit codes: 0 success, 1 bad input,
2 solver did not converge (artifacts still written), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np
import tomli

from . import errors
from .imaging import RpConfig, build_image_dataset, thresholds_from_quantile
from .ingest import build_windows, read_interval_csv
from .metrics import (
    IntervalForecast,
    intervals_from_center_range,
    load_features,
    mde,
    ridge_baseline,
)
from .pipeline import FitResult, bic_score, fit, load_model, save_model, select_k
from .precision import SolverConfig
from .toeplitz import build_index

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_INTERNAL = 3


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings; every downstream constraint is checked here
    so an invalid config fails before any work starts."""

    input: str
    w: int
    kset: tuple
    beta: float
    lam: float
    lambda_grid: tuple
    folds: int
    rho: float
    tol_primal: float
    tol_dual: float
    scad_a: float
    rp_m: int
    rp_kappa: int
    rp_quantile: float
    seed: int
    out_dir: str
    ridge: float
    threads: int = 1


def _require(cond, msg):
    if not cond:
        raise errors.ParseError(msg)


def load_config(path: str, seed_override=None, out_override=None,
                threads: int = 1) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise errors.ParseError(f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise errors.ParseError(f"bad config: {exc}")

    run = raw.get("run", {})
    solver = raw.get("solver", {})
    rp = raw.get("rp", {})
    eva = raw.get("evaluate", {})

    input_path = run.get("input")
    _require(isinstance(input_path, str) and input_path, "run.input is required")
    w = int(run.get("w", 1))
    _require(w >= 1, "run.w must be >= 1")
    kset = run.get("kset", [int(run.get("k", 2))])
    if isinstance(kset, int):
        kset = [kset]
    kset = tuple(int(k) for k in kset)
    _require(len(kset) >= 1 and all(k >= 1 for k in kset),
             "run.kset entries must be >= 1")
    beta = float(run.get("beta", 0.0))
    _require(beta >= 0.0, "run.beta must be >= 0")
    lam = float(run.get("lambda", 0.1))
    _require(lam >= 0.0, "run.lambda must be >= 0")
    grid = tuple(float(x) for x in run.get("lambda_grid", [lam]))
    _require(all(x >= 0 for x in grid), "run.lambda_grid entries must be >= 0")
    folds = int(run.get("folds", 5))
    _require(folds >= 2, "run.folds must be >= 2")
    rho = float(solver.get("rho", 1.0))
    _require(rho > 0, "solver.rho must be > 0")
    tol_primal = float(solver.get("tol_primal", 1e-5))
    tol_dual = float(solver.get("tol_dual", 1e-5))
    _require(tol_primal > 0 and tol_dual > 0, "solver tolerances must be > 0")
    scad_a = float(solver.get("scad_a", 3.7))
    _require(scad_a > 2.0, "solver.scad_a must be > 2")
    rp_m = int(rp.get("m", 1))
    rp_kappa = int(rp.get("kappa", 1))
    _require(rp_m >= 1 and rp_kappa >= 1, "rp.m and rp.kappa must be >= 1")
    _require(w - (rp_m - 1) * rp_kappa >= 2,
             "rp embedding leaves fewer than 2 trajectory points")
    rp_quantile = float(rp.get("quantile", 0.1))
    _require(0.0 < rp_quantile < 1.0, "rp.quantile must be in (0, 1)")
    seed = int(run.get("seed", 0)) if seed_override is None else int(seed_override)
    out_dir = run.get("out_dir", "out") if out_override is None else out_override
    ridge = float(eva.get("ridge", 1.0))
    _require(ridge >= 0, "evaluate.ridge must be >= 0")

    return RunConfig(
        input=input_path, w=w, kset=kset, beta=beta, lam=lam,
        lambda_grid=grid, folds=folds, rho=rho, tol_primal=tol_primal,
        tol_dual=tol_dual, scad_a=scad_a, rp_m=rp_m, rp_kappa=rp_kappa,
        rp_quantile=rp_quantile, seed=seed, out_dir=out_dir, ridge=ridge,
        threads=max(1, int(threads)),
    )


def _solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(rho=cfg.rho, tol_primal=cfg.tol_primal,
                        tol_dual=cfg.tol_dual, scad_a=cfg.scad_a)


def _load_batch(cfg: RunConfig):
    series = read_interval_csv(cfg.input)
    if cfg.w > series.T:
        raise errors.WindowTooLarge(
            f"w={cfg.w} exceeds series length {series.T}")
    return build_windows(series, cfg.w)


def _write_labels(path, batch, labels):
    with open(path, "w") as fh:
        fh.write("windowRow,label\n")
        for row, lab in enumerate(labels):
            fh.write(f"{row},{lab}\n")


def _write_trace(path, trace):
    with open(path, "w") as fh:
        fh.write("iteration,objective\n")
        for i, v in enumerate(trace):
            fh.write(f"{i},{format(float(v), '.17g')}\n")


def cmd_segment(cfg: RunConfig) -> int:
    batch = _load_batch(cfg)
    scfg = _solver_config(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    if len(cfg.kset) > 1:
        best, table, fits = select_k(batch, cfg.kset, cfg.beta, cfg.lam,
                                     scfg, seed=cfg.seed)
        with open(os.path.join(cfg.out_dir, "bic_table.csv"), "w") as fh:
            fh.write("K,bic\n")
            for k in sorted(table):
                fh.write(f"{k},{format(float(table[k]), '.17g')}\n")
        result = fits[best]
    else:
        result = fit(batch, cfg.kset[0], cfg.beta, cfg.lam, scfg,
                     seed=cfg.seed)
    save_model(result, os.path.join(cfg.out_dir, "model.json"))
    _write_labels(os.path.join(cfg.out_dir, "labels.csv"), batch,
                  result.path.labels)
    _write_trace(os.path.join(cfg.out_dir, "objective_trace.csv"),
                 result.objective_trace)
    print(f"fitted K={result.K} objective={result.path.objective:.6g} "
          f"bic={result.bic:.6g} converged={result.converged}")
    if not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_image(cfg: RunConfig, model_path: str) -> int:
    batch = _load_batch(cfg)
    result = load_model(model_path)
    if result.n != batch.n or result.w != batch.w:
        raise errors.ModelDimensionMismatch(
            f"model is (n={result.n}, w={result.w}), "
            f"data is (n={batch.n}, w={batch.w})")
    rp = RpConfig(m=cfg.rp_m, kappa=cfg.rp_kappa, quantile=cfg.rp_quantile)
    rp = RpConfig(m=cfg.rp_m, kappa=cfg.rp_kappa,
                  thresholds=thresholds_from_quantile(batch, rp))
    out = os.path.join(cfg.out_dir, "images")
    manifest = build_image_dataset(batch, result.path, rp, out)
    print(f"wrote {len(manifest)} images to {out}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, features_path=None) -> int:
    series = read_interval_csv(cfg.input)
    if cfg.w + 1 > series.T:
        raise errors.WindowTooLarge(
            f"w={cfg.w} leaves no forecast targets in series of length "
            f"{series.T}")
    batch = build_windows(series, cfg.w)
    # row r covers series times [r, r+w); the target is time r+w, so the
    # last window has no target and is dropped
    X_rows = batch.count - 1
    if features_path is None:
        X = np.hstack([batch.lower_vecs[:X_rows], batch.upper_vecs[:X_rows]])
    else:
        X = load_features(features_path, X_rows)
    target_lower = series.lower[cfg.w:]
    target_upper = series.upper[cfg.w:]
    test = max(1, int(np.ceil(0.10 * X_rows)))
    split = X_rows - test
    if split < 1:
        raise errors.FoldTooSmall("not enough rows to hold out a test split")
    centers = (target_lower + target_upper) / 2.0
    widths = (target_upper - target_lower) / 2.0
    targets = np.hstack([centers, widths])
    predictor = ridge_baseline(X[:split], targets[:split], ridge=cfg.ridge)
    pred = predictor.predict(X[split:])
    n = series.n
    pred_lo, pred_up, _clamps = intervals_from_center_range(
        pred[:, :n], pred[:, n:])
    fc = IntervalForecast(
        predicted_lower=pred_lo, predicted_upper=pred_up,
        actual_lower=target_lower[split:], actual_upper=target_upper[split:])
    report = {
        "testRows": int(test),
        "mde_d1": float(mde(fc, metric="d1")),
        "mde_dK": float(mde(fc, metric="dK")),
    }
    print(json.dumps(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toepseg",
        description="Segment interval time series with block-Toeplitz "
                    "cluster models; render recurrence-plot datasets; "
                    "score interval forecasts.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML config path")
        p.add_argument("--threads", type=int, default=1,
                       help="worker count cap (default 1)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output dir")

    common(sub.add_parser("segment", help="fit and write model artifacts"))
    common(sub.add_parser("select-k", help="segment over the config K grid"))
    p_img = sub.add_parser("image", help="render recurrence-plot images")
    common(p_img)
    p_img.add_argument("--model", required=True, help="saved model.json")
    p_eval = sub.add_parser("evaluate", help="rolling-origin ridge forecast")
    common(p_eval)
    p_eval.add_argument("--features", default=None,
                        help="optional precomputed feature CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed,
                          out_override=args.out, threads=args.threads)
        if args.command in ("segment", "select-k"):
            return cmd_segment(cfg)
        if args.command == "image":
            return cmd_image(cfg, args.model)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, features_path=args.features)
        return EXIT_INTERNAL
    except (errors.ParseError, errors.MissingCell,
            errors.IntervalOrderViolation, errors.WindowTooLarge,
            errors.DimensionMismatch, errors.SchemaMismatch,
            errors.CorruptFile, errors.ModelDimensionMismatch,
            errors.RowMismatch, errors.FoldTooSmall,
            errors.WindowTooShortForTrajectory, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (errors.NotPositiveDefinite, errors.SingularWorkingMatrix,
            errors.DegenerateClustering, errors.SingularDesign) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except errors.ToepsegError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
