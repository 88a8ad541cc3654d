"""Seeded k-means with round-based restarts and matching accuracy.

The evaluation protocol treats "a round" as ten independent k-means runs
(sub-seeds round_seed*10 .. round_seed*10+9) keeping the assignment with
the smallest within-cluster sum of squares; accuracy of an assignment is
the best label matching found by the Hungarian algorithm on the (padded
square) contingency table.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from ._validation import as_float_matrix

REPORT_FORMAT_VERSION = 1


@dataclass
class ClusterAssignment:
    """One k-means run: labels, its exact wcss, and the Lloyd trace."""

    labels: np.ndarray
    wcss: float
    iterations_used: int
    seed: int
    centers: np.ndarray
    wcss_history: list[float] = field(default_factory=list)


def _kmeans_pp_init(Y: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = Y.shape[0]
    centers = np.empty((c, Y.shape[1]))
    idx = int(rng.integers(n))
    centers[0] = Y[idx]
    closest = cdist(Y, centers[:1], "sqeuclidean").ravel()
    for pos in range(1, c):
        total = float(closest.sum())
        if total > 0.0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        centers[pos] = Y[idx]
        d_new = cdist(Y, centers[pos: pos + 1], "sqeuclidean").ravel()
        np.minimum(closest, d_new, out=closest)
    return centers


def _reseed_empty(Y, centers, labels, d2, empty_ids):
    """Move each empty cluster's center to the unclaimed point that sits
    farthest from its current center (ties toward the lowest index)."""
    assigned = d2[np.arange(Y.shape[0]), labels].copy()
    for cid in empty_ids:
        far = int(np.argmax(assigned))
        centers[cid] = Y[far]
        assigned[far] = -np.inf
    return centers


def kmeans(Y, c: int, seed: int, max_iters: int = 300, tol: float = 1e-7) -> ClusterAssignment:
    """Lloyd's algorithm with k-means++ initialization.

    Deterministic for a fixed (Y, c, seed): initialization draws from
    np.random.default_rng(seed), assignment ties go to the lowest center
    index, and empty clusters are reseeded by deterministic farthest-point
    selection. The recorded wcss is computed after each centroid update,
    so it equals sum_i ||y_i - centroid(label_i)||^2 exactly and the
    history is non-increasing.
    """
    Y = as_float_matrix(Y, "Y")
    n = Y.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"c must be in [1, n = {n}], got {c}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(Y, c, rng)
    history: list[float] = []
    labels = np.zeros(n, dtype=np.intp)
    prev = None
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        d2 = cdist(Y, centers, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        for _attempt in range(c):
            empty = np.setdiff1d(np.arange(c), labels)
            if empty.size == 0:
                break
            centers = _reseed_empty(Y, centers, labels, d2, empty)
            d2 = cdist(Y, centers, "sqeuclidean")
            labels = np.argmin(d2, axis=1)

        sums = np.zeros_like(centers)
        np.add.at(sums, labels, Y)
        counts = np.bincount(labels, minlength=c)
        occupied = counts > 0
        centers = centers.copy()
        centers[occupied] = sums[occupied] / counts[occupied, None]

        wcss = float(np.sum((Y - centers[labels]) ** 2))
        history.append(wcss)
        if wcss == 0.0:
            break
        if prev is not None and abs(prev - wcss) <= tol * prev:
            break
        prev = wcss

    return ClusterAssignment(
        labels=labels.astype(np.intp),
        wcss=history[-1],
        iterations_used=iterations,
        seed=int(seed),
        centers=centers,
        wcss_history=history,
    )


def kmeans_round(Y, c: int, round_seed: int, runs: int = 10,
                 max_iters: int = 300, tol: float = 1e-7) -> ClusterAssignment:
    """Best of ``runs`` k-means runs, seeds round_seed*runs + 0..runs-1.

    Keeps the strictly smallest wcss, so ties resolve to the lowest
    sub-seed.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    best: Optional[ClusterAssignment] = None
    for sub in range(runs):
        run = kmeans(Y, c, seed=round_seed * runs + sub,
                     max_iters=max_iters, tol=tol)
        if best is None or run.wcss < best.wcss:
            best = run
    return best


def accuracy(pred, truth) -> float:
    """Fraction of points matched under the best label correspondence.

    Label values on either side are arbitrary; the contingency table is
    padded square so differing numbers of classes are handled.
    """
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(
            f"length mismatch: {pred.shape[0]} predictions vs "
            f"{truth.shape[0]} ground-truth labels"
        )
    n = pred.shape[0]
    if n == 0:
        raise ValueError("cannot score an empty assignment")
    _, pred_d = np.unique(pred, return_inverse=True)
    _, truth_d = np.unique(truth, return_inverse=True)
    side = max(int(pred_d.max()), int(truth_d.max())) + 1
    table = np.zeros((side, side), dtype=np.int64)
    np.add.at(table, (pred_d, truth_d), 1)
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum()) / n


@dataclass
class ClusterReport:
    """Evaluation summary for one (dataset, method) run."""

    method: str
    dataset: str
    n: int
    d: int
    c: int
    k: Optional[int]
    rounds: int
    accuracies: list[float]
    avg: Optional[float]
    max: Optional[float]
    wall_ms: float
    seed: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dataset": self.dataset,
            "n": int(self.n),
            "d": int(self.d),
            "c": int(self.c),
            "k": None if self.k is None else int(self.k),
            "rounds": int(self.rounds),
            "accuracies": [float(a) for a in self.accuracies],
            "avg": None if self.avg is None else float(self.avg),
            "max": None if self.max is None else float(self.max),
            "wall_ms": float(self.wall_ms),
            "seed": int(self.seed),
            "format_version": REPORT_FORMAT_VERSION,
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ClusterReport":
        version = payload.get("format_version")
        if version != REPORT_FORMAT_VERSION:
            raise ValueError(
                f"unsupported report format_version {version!r} "
                f"(expected {REPORT_FORMAT_VERSION})"
            )
        return cls(
            method=str(payload["method"]),
            dataset=str(payload["dataset"]),
            n=int(payload["n"]),
            d=int(payload["d"]),
            c=int(payload["c"]),
            k=None if payload["k"] is None else int(payload["k"]),
            rounds=int(payload["rounds"]),
            accuracies=[float(a) for a in payload["accuracies"]],
            avg=None if payload["avg"] is None else float(payload["avg"]),
            max=None if payload["max"] is None else float(payload["max"]),
            wall_ms=float(payload["wall_ms"]),
            seed=int(payload["seed"]),
            config=dict(payload.get("config", {})),
        )


def evaluate(Y, truth, c: int, rounds: int, seed: int, *, method: str = "",
             dataset: str = "", k: Optional[int] = None,
             d: Optional[int] = None, config: Optional[dict] = None) -> ClusterReport:
    """Run ``rounds`` evaluation rounds (round r uses seed + r).

    ``truth`` may be None, in which case accuracies stay empty and
    avg/max are None. ``d`` defaults to the width of Y but callers
    clustering an embedding usually pass the original feature count.
    """
    Y = as_float_matrix(Y, "Y")
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if truth is not None:
        truth = np.asarray(truth).ravel()
        if truth.shape[0] != Y.shape[0]:
            raise ValueError(
                f"labels have length {truth.shape[0]} but Y has {Y.shape[0]} rows"
            )
    start = time.perf_counter()
    accuracies: list[float] = []
    for r in range(rounds):
        best = kmeans_round(Y, c, round_seed=seed + r)
        if truth is not None:
            accuracies.append(accuracy(best.labels, truth))
    wall_ms = (time.perf_counter() - start) * 1000.0
    return ClusterReport(
        method=method,
        dataset=dataset,
        n=Y.shape[0],
        d=Y.shape[1] if d is None else int(d),
        c=int(c),
        k=k,
        rounds=int(rounds),
        accuracies=accuracies,
        avg=float(np.mean(accuracies)) if accuracies else None,
        max=float(np.max(accuracies)) if accuracies else None,
        wall_ms=wall_ms,
        seed=int(seed),
        config=dict(config) if config else {},
    )
