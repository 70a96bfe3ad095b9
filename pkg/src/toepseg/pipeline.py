"""Outer alternation between assignment and precision estimation, plus
model selection and serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from sklearn.cluster import KMeans

from .assignment import AssignmentPath, cost_matrix, viterbi_assign
from .errors import (
    CorruptFile,
    DegenerateClustering,
    EmptyCluster,
    FoldTooSmall,
    NotPositiveDefinite,
    SchemaMismatch,
)
from .ingest import WindowBatch
from .likelihood import ClusterModel, empirical_moments, scad_matrix
from .precision import SolverConfig, lla_outer_loop
from .toeplitz import ToeplitzMatrix, build_index, project_average

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FitResult:
    K: int
    w: int
    n: int
    beta: float
    lam: tuple  # per-cluster regularization
    models: tuple  # ClusterModel or None per cluster
    path: AssignmentPath
    objective_trace: tuple
    bic: float
    converged: bool


def _members_of(labels: np.ndarray, k: int) -> np.ndarray:
    return np.flatnonzero(labels == k + 1)


def _initial_labels(batch: WindowBatch, K: int, seed: int) -> np.ndarray:
    """k-means++ on the stacked bound vectors, then absorb singleton runs."""
    X = np.hstack([batch.lower_vecs, batch.upper_vecs])
    km = KMeans(n_clusters=K, init="k-means++", n_init=1, random_state=seed)
    labels = km.fit_predict(X).astype(int) + 1
    # one smoothing pass: a window whose neighbors agree with each other
    # but not with it joins them
    for t in range(1, len(labels) - 1):
        if labels[t - 1] == labels[t + 1] != labels[t]:
            labels[t] = labels[t - 1]
    return labels


def _reseed_empty(labels: np.ndarray, costs: np.ndarray, K: int) -> np.ndarray:
    """Hand each empty cluster the worst-fitting windows of the others."""
    labels = labels.copy()
    count = len(labels)
    chunk = max(1, count // K)
    for k in range(K):
        if _members_of(labels, k).size:
            continue
        current = costs[np.arange(count), labels - 1]
        worst = np.argsort(-current, kind="stable")[:chunk]
        labels[worst] = k + 1
    return labels


def _fit_models(batch, labels, K, lam, cfg, idx):
    models = []
    for k in range(K):
        members = _members_of(labels, k)
        if members.size == 0:
            models.append(None)
            continue
        moments = empirical_moments(batch, members)
        gamma = lla_outer_loop(moments, lam[k], idx, cfg)
        models.append(_model_from_estimate(moments, gamma, lam[k], cfg, idx))
    return models


def _model_from_estimate(moments, gamma: ToeplitzMatrix, lam, cfg, idx
                         ) -> ClusterModel:
    try:
        return ClusterModel.build(
            moments.mean_lower, moments.mean_upper, gamma, lam
        )
    except NotPositiveDefinite:
        # consensus iterates can sit on the SPD boundary before full
        # convergence; floor the spectrum and retry
        dense = gamma.dense()
        vals, vecs = np.linalg.eigh(dense)
        vals = np.maximum(vals, cfg.min_eig_floor)
        repaired = project_average(
            vecs @ np.diag(vals) @ vecs.T, np.zeros_like(dense), 1.0, idx
        )
        return ClusterModel.build(
            moments.mean_lower, moments.mean_upper, repaired, lam
        )


def _objective(path: AssignmentPath, models, scad_a: float) -> float:
    """Full joint objective: assignment value plus the concave penalty."""
    total = path.objective
    for model in models:
        if model is None:
            continue
        dense = model.precision_dense
        pen = scad_matrix(np.abs(dense), model.lam, scad_a)
        total += float(pen.sum() - np.trace(pen))
    return total


def fit(
    batch: WindowBatch,
    K: int,
    beta: float,
    lam,
    cfg: SolverConfig = SolverConfig(),
    max_alt: int = 20,
    seed: int = 0,
) -> FitResult:
    """Alternate optimal assignment and per-cluster precision estimation
    until the labels stop changing."""
    if K < 1:
        raise DegenerateClustering("K must be >= 1")
    if batch.count < K:
        raise DegenerateClustering(
            f"{batch.count} windows cannot fill {K} clusters"
        )
    lam = tuple(np.broadcast_to(np.asarray(lam, dtype=float), (K,)))
    idx = build_index(batch.n, batch.w)
    labels = _initial_labels(batch, K, seed)
    trace = []
    models = None
    path = None
    converged = False
    for _ in range(max_alt):
        models = _fit_models(batch, labels, K, lam, cfg, idx)
        active = [m for m in models if m is not None]
        if not active:
            raise DegenerateClustering("all clusters empty")
        if any(m is None for m in models):
            costs = cost_matrix(batch, [m for m in models if m is not None])
            full = np.full((batch.count, K), np.inf)
            full[:, [k for k, m in enumerate(models) if m is not None]] = costs
            labels = _reseed_empty(labels, full, K)
            models = _fit_models(batch, labels, K, lam, cfg, idx)
        path = viterbi_assign(batch, models, beta)
        trace.append(_objective(path, models, cfg.scad_a))
        if np.array_equal(path.labels, labels):
            converged = True
            break
        labels = path.labels
    result = FitResult(
        K=K, w=batch.w, n=batch.n, beta=beta, lam=lam,
        models=tuple(models), path=path, objective_trace=tuple(trace),
        bic=np.nan, converged=converged,
    )
    try:
        return replace(result, bic=bic_score(result))
    except EmptyCluster:
        # a huge beta can leave clusters unused; the score is undefined then
        return result


def bic_score(result: FitResult, standard_sign: bool = False) -> float:
    """Information criterion over the fitted clusters.

    As printed in the source formulation the complexity term enters with a
    minus sign; ``standard_sign=True`` flips it to the textbook plus.
    """
    n, w = result.n, result.w
    params = (w - 1) * n * n + n * (n + 1) / 2.0
    sign = 1.0 if standard_sign else -1.0
    total = 0.0
    for k in range(result.K):
        members = _members_of(result.path.labels, k)
        model = result.models[k]
        if members.size == 0 or model is None:
            raise EmptyCluster(f"cluster {k + 1} has no members")
        m = members.size
        total += (
            -m * model.log_det_precision
            + m * n * w * (1.0 + np.log(2.0 * np.pi))
            + sign * np.log(m) * params
        )
    return float(total)


def select_k(
    batch: WindowBatch,
    k_set,
    beta: float,
    lam,
    cfg: SolverConfig = SolverConfig(),
    max_alt: int = 20,
    seed: int = 0,
    standard_sign: bool = False,
):
    """Fit every candidate K; return the BIC argmin (ties to smaller K)
    and the full table."""
    if not k_set:
        raise DegenerateClustering("k_set must be nonempty")
    table = {}
    fits = {}
    for K in sorted(k_set):
        res = fit(batch, K, beta, lam, cfg, max_alt=max_alt, seed=seed)
        try:
            table[K] = bic_score(res, standard_sign=standard_sign)
        except EmptyCluster:
            # an unused cluster means K overshoots; never select it
            table[K] = np.inf
        fits[K] = res
    best = min(table, key=lambda K: (table[K], K))
    return best, table, fits


def cv_lambda(
    batch: WindowBatch,
    members,
    lambda_grid,
    V: int,
    idx,
    cfg: SolverConfig = SolverConfig(),
    seed: int = 0,
    maximize: bool = False,
):
    """Pick a regularization value by V-fold cross-validation.

    Folds are contiguous blocks of the member list (kept in time order) to
    respect serial dependence.  The held-out score per fold is
    ``m_v * logdet(T) + sum_i (Y_i^l)' T Y_i^l + (Y_i^u)' T Y_i^u``;
    the grid minimizer is returned unless ``maximize`` is set.
    """
    members = np.asarray(members, dtype=int)
    if V < 2 or members.size < V:
        raise FoldTooSmall(f"{members.size} members cannot fill {V} folds")
    if len(lambda_grid) == 0:
        raise ValueError("lambda grid is empty")
    folds = np.array_split(members, V)
    scores = {}
    for lam in lambda_grid:
        score = 0.0
        for v in range(V):
            held = folds[v]
            train = np.concatenate([folds[u] for u in range(V) if u != v])
            if train.size == 0:
                raise FoldTooSmall("a training split is empty")
            moments = empirical_moments(batch, train)
            theta = lla_outer_loop(moments, lam, idx, cfg).dense()
            sign, logdet = np.linalg.slogdet(theta)
            if sign <= 0:
                logdet = -np.inf
            lo = batch.lower_vecs[held]
            up = batch.upper_vecs[held]
            quad = np.einsum("ri,ij,rj->", lo, theta, lo)
            quad += np.einsum("ri,ij,rj->", up, theta, up)
            score += held.size * logdet + float(quad)
        scores[float(lam)] = float(score)
    pick = max if maximize else min
    best = pick(scores, key=lambda l: (scores[l], l))
    return best, scores


# --- serialization -------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def _json_floats(obj):
    """Render with floats at 17 significant digits (exact round trip)."""
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_json_floats(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return (
            "{"
            + ",".join(
                json.dumps(k) + ":" + _json_floats(v) for k, v in obj.items()
            )
            + "}"
        )
    return json.dumps(obj)


def save_model(result: FitResult, path) -> None:
    clusters = []
    for model in result.models:
        if model is None:
            clusters.append(None)
            continue
        clusters.append(
            {
                "meanLower": [float(x) for x in model.mean_lower],
                "meanUpper": [float(x) for x in model.mean_upper],
                "blocks": [
                    [float(x) for x in np.asarray(b).reshape(-1)]
                    for b in model.precision.blocks
                ],
            }
        )
    doc = {
        "version": MODEL_SCHEMA_VERSION,
        "n": result.n,
        "w": result.w,
        "K": result.K,
        "beta": float(result.beta),
        "lambda": [float(x) for x in result.lam],
        "labels": [int(x) for x in result.path.labels],
        "clusters": clusters,
        "objective": float(result.path.objective),
        "objectiveTrace": [float(x) for x in result.objective_trace],
        "bic": float(result.bic),
        "converged": bool(result.converged),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_json_floats(doc))
        fh.write("\n")


def load_model(path) -> FitResult:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from None
    required = {"version", "n", "w", "K", "beta", "lambda", "labels", "clusters"}
    if not isinstance(doc, dict) or not required <= doc.keys():
        raise SchemaMismatch(f"{path}: missing keys")
    if doc["version"] != MODEL_SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported model version {doc['version']}")
    n, w, K = int(doc["n"]), int(doc["w"]), int(doc["K"])
    dim = n * w
    lam = tuple(float(x) for x in doc["lambda"])
    if len(lam) != K or len(doc["clusters"]) != K:
        raise SchemaMismatch("cluster count disagrees with K")
    models = []
    for entry in doc["clusters"]:
        if entry is None:
            models.append(None)
            continue
        mean_lower = np.asarray(entry["meanLower"], dtype=float)
        mean_upper = np.asarray(entry["meanUpper"], dtype=float)
        blocks = entry["blocks"]
        if mean_lower.size != dim or len(blocks) != w or any(
            len(b) != n * n for b in blocks
        ):
            raise SchemaMismatch("cluster dimensions disagree with n, w")
        precision = ToeplitzMatrix.from_blocks(
            [np.asarray(b, dtype=float).reshape(n, n) for b in blocks]
        )
        models.append(
            ClusterModel.build(mean_lower, mean_upper, precision,
                               lam[len(models)])
        )
    labels = np.asarray(doc["labels"], dtype=int)
    path_obj = AssignmentPath(
        labels=labels, objective=float(doc.get("objective", np.nan)),
        K=K, beta=float(doc["beta"]),
    )
    return FitResult(
        K=K, w=w, n=n, beta=float(doc["beta"]), lam=lam, models=tuple(models),
        path=path_obj,
        objective_trace=tuple(float(x) for x in doc.get("objectiveTrace", ())),
        bic=float(doc.get("bic", np.nan)),
        converged=bool(doc.get("converged", False)),
    )
