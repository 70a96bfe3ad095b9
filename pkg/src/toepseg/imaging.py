"""Recurrence-plot imaging of windows and labeled dataset export.

Each window yields two images (lower and upper bound): every series is
turned into a binary recurrence matrix against its threshold, and the
per-series matrices are fused by the element-wise product.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .assignment import AssignmentPath
from .errors import (
    DegenerateDistances,
    DimensionMismatch,
    SideMismatch,
    WindowTooShortForTrajectory,
)
from .ingest import WindowBatch

THRESHOLD_SAMPLE_CAP = 200
THRESHOLD_SAMPLE_SEED = 1234


@dataclass(frozen=True)
class RpConfig:
    """Trajectory embedding and thresholds for recurrence plots.

    Thresholds may be given directly (one per series) or derived from a
    distance quantile.
    """

    m: int = 1
    kappa: int = 1
    thresholds: np.ndarray | None = None
    quantile: float | None = None

    def __post_init__(self):
        if self.m < 1 or self.kappa < 1:
            raise WindowTooShortForTrajectory("m and kappa must be >= 1")
        if self.quantile is not None and not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must lie in (0, 1)")

    def side(self, w: int) -> int:
        side = w - (self.m - 1) * self.kappa
        if side < 2:
            raise WindowTooShortForTrajectory(
                f"w={w}, m={self.m}, kappa={self.kappa} leaves a "
                f"{side}x{side} image"
            )
        return side


@dataclass(frozen=True)
class JrpImage:
    side: int
    pixels: np.ndarray  # side x side binary
    label: int
    window_row: int
    bound_side: str  # "lower" | "upper"


def _trajectories(values: np.ndarray, m: int, kappa: int) -> np.ndarray:
    """Rows are delay vectors (x_i, x_{i+kappa}, ..., x_{i+(m-1)kappa})."""
    w = values.shape[0]
    side = w - (m - 1) * kappa
    return np.stack([values[i : i + (m - 1) * kappa + 1 : kappa]
                     for i in range(side)])


def rp_matrix(series: np.ndarray, cfg: RpConfig, dim: int) -> np.ndarray:
    """Binary recurrence matrix of one series under its threshold.

    A pair is recurrent when the trajectory distance does not exceed the
    threshold (ties count as recurrent, so the diagonal is always one).
    """
    series = np.asarray(series, dtype=float)
    cfg.side(series.shape[0])
    if cfg.thresholds is None:
        raise ValueError("rp_matrix needs explicit thresholds")
    eps = float(np.asarray(cfg.thresholds).reshape(-1)[dim])
    traj = _trajectories(series, cfg.m, cfg.kappa)
    dist = np.sqrt(((traj[:, None, :] - traj[None, :, :]) ** 2).sum(axis=2))
    return (dist <= eps).astype(np.uint8)


def jrp_fuse(rps) -> np.ndarray:
    """Element-wise product of per-series recurrence matrices."""
    rps = list(rps)
    if not rps:
        raise SideMismatch("need at least one recurrence matrix")
    out = np.asarray(rps[0]).copy()
    for r in rps[1:]:
        r = np.asarray(r)
        if r.shape != out.shape:
            raise SideMismatch(f"shape {r.shape} != {out.shape}")
        out = out * r
    return out


def _window_series(batch: WindowBatch, row: int, dim: int, side: str
                   ) -> np.ndarray:
    vecs = batch.lower_vecs if side == "lower" else batch.upper_vecs
    return vecs[row].reshape(batch.w, batch.n)[:, dim]


def thresholds_from_quantile(batch: WindowBatch, cfg: RpConfig) -> np.ndarray:
    """Per-series thresholds: the q-quantile of pooled pairwise trajectory
    distances over a capped window sample (both bound sides)."""
    if cfg.quantile is None:
        raise ValueError("config has no quantile")
    rng = np.random.default_rng(THRESHOLD_SAMPLE_SEED)
    if batch.count > THRESHOLD_SAMPLE_CAP:
        sample = np.sort(
            rng.choice(batch.count, size=THRESHOLD_SAMPLE_CAP, replace=False)
        )
    else:
        sample = np.arange(batch.count)
    thresholds = np.empty(batch.n)
    iu = None
    for h in range(batch.n):
        pool = []
        for row in sample:
            for side in ("lower", "upper"):
                traj = _trajectories(
                    _window_series(batch, row, h, side), cfg.m, cfg.kappa
                )
                dist = np.sqrt(
                    ((traj[:, None, :] - traj[None, :, :]) ** 2).sum(axis=2)
                )
                if iu is None:
                    iu = np.triu_indices(dist.shape[0], k=1)
                pool.append(dist[iu])
        pool = np.concatenate(pool)
        if pool.size == 0 or pool.max() == 0.0:
            warnings.warn(
                f"series {h + 1}: all trajectory distances are zero",
                DegenerateDistances,
            )
            thresholds[h] = np.nextafter(0.0, 1.0)
        else:
            thresholds[h] = np.quantile(pool, cfg.quantile)
    return thresholds


def jrp_image(batch: WindowBatch, row: int, side: str, cfg: RpConfig,
              label: int) -> JrpImage:
    rps = [
        rp_matrix(_window_series(batch, row, h, side), cfg, h)
        for h in range(batch.n)
    ]
    pixels = jrp_fuse(rps)
    return JrpImage(
        side=pixels.shape[0], pixels=pixels, label=label,
        window_row=row, bound_side=side,
    )


def build_image_dataset(
    batch: WindowBatch,
    path: AssignmentPath,
    cfg: RpConfig,
    out_dir,
) -> list:
    """Write two grayscale PNGs per window plus ``manifest.json``.

    Filenames are ``cls{label}_t{row}_{lower|upper}.png``; byte-identical
    across reruns with the same inputs.
    """
    if len(path.labels) != batch.count:
        raise DimensionMismatch("assignment length disagrees with batch")
    if cfg.thresholds is None:
        cfg = RpConfig(
            m=cfg.m, kappa=cfg.kappa,
            thresholds=thresholds_from_quantile(batch, cfg),
            quantile=cfg.quantile,
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for row in range(batch.count):
        label = int(path.labels[row])
        for side in ("lower", "upper"):
            image = jrp_image(batch, row, side, cfg, label)
            name = f"cls{label}_t{row}_{side}.png"
            Image.fromarray(image.pixels * np.uint8(255), mode="L").save(
                out_dir / name
            )
            manifest.append(
                {
                    "file": name,
                    "label": label,
                    "windowRow": row,
                    "boundSide": side,
                }
            )
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return manifest
