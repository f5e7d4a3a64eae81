"""Fuzzy c-means, Gustafson-Kessel clustering, and cluster-count selection.

Both partitioners run seeded alternating optimization from a column-normalized
uniform random membership matrix.  GK replaces the Euclidean norm with a
per-cluster Mahalanobis norm built from the fuzzy covariance matrix, volume
fixed to 1 (A_i = det(F_i)^(1/d) F_i^{-1}); the covariance is blended with the
diagonal of the global covariance to survive near-categorical columns.

Cluster counts are scored with the Fukuyama-Sugeno validity index
(compactness minus separation); lower is better, argmin over [2, c_max].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError


@dataclass(frozen=True)
class FuzzyPartition:
    """Result of a fuzzy clustering run.

    U is (c, N): u[i, j] is the degree of belonging of sample j to cluster i;
    every column sums to 1.  The traces record, for each iteration, the
    objective sum(u^m * d^2) and the worst column-sum deviation from 1.
    """

    U: np.ndarray
    V: np.ndarray
    m: float
    objective: float
    n_iter: int
    converged: bool
    objective_trace: np.ndarray
    colsum_error_trace: np.ndarray
    covariances: np.ndarray | None = None  # (c, d, d), GK only


@dataclass(frozen=True)
class ValidityScan:
    candidates: tuple
    values: tuple
    selected: int
    best_seeds: tuple

    def __post_init__(self):
        if self.selected != self.candidates[int(np.argmin(self.values))]:
            raise ValueError("selected count must attain the minimum index value")


def _as_data(X) -> np.ndarray:
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
    if not np.isfinite(X).all():
        raise DataError("clustering input contains non-finite values")
    return X


def _check_cm(n: int, c: int, m: float):
    if int(c) != c or c < 1:
        raise ValueError(f"cluster count must be a positive integer, got {c}")
    if not m > 1:
        raise ValueError(f"fuzziness degree must exceed 1, got {m}")
    if c > n:
        raise DataError(f"cannot fit {c} clusters to {n} samples")


def _init_membership(n: int, c: int, seed) -> np.ndarray:
    # uniform random, normalized per sample (column-stochastic in (c, N) terms)
    w = np.random.default_rng(seed).random((n, c))
    return w / w.sum(axis=1, keepdims=True)


def _prototypes(X, u, m, v_old=None):
    w = u ** m
    wsum = w.sum(axis=0)
    v = np.empty((u.shape[1], X.shape[1]))
    dead = wsum <= 0.0
    live = ~dead
    v[live] = (w[:, live].T @ X) / wsum[live, None]
    if dead.any():
        v[dead] = X.mean(axis=0) if v_old is None else v_old[dead]
    return v


def fcm(X, c, m=2.0, tol=1e-6, max_iter=300, seed=0) -> FuzzyPartition:
    """Fuzzy c-means by alternating optimization.

    Stops when the largest membership change drops below tol or after
    max_iter iterations.  The recorded objective is computed after each
    joint prototype+membership update, so the trace is non-increasing.
    """
    X = _as_data(X)
    n, _ = X.shape
    _check_cm(n, c, m)

    u = _init_membership(n, c, seed)
    v = None
    obj_trace, colsum_trace = [], []
    converged = False
    d2 = None
    for _ in range(max_iter):
        v = _prototypes(X, u, m, v)
        d2 = kernels.sq_distances(X, v)
        u_new = kernels.fcm_memberships(d2, m)
        obj_trace.append(float(((u_new ** m) * d2).sum()))
        colsum_trace.append(float(np.abs(u_new.sum(axis=1) - 1.0).max()))
        delta = float(np.abs(u_new - u).max())
        u = u_new
        if delta < tol:
            converged = True
            break

    return FuzzyPartition(
        U=np.ascontiguousarray(u.T), V=v, m=float(m),
        objective=obj_trace[-1], n_iter=len(obj_trace), converged=converged,
        objective_trace=np.array(obj_trace),
        colsum_error_trace=np.array(colsum_trace),
    )


def gk(X, c, m=2.0, tol=1e-6, max_iter=300, seed=0, regularization=1e-3,
       u0=None) -> FuzzyPartition:
    """Gustafson-Kessel clustering (unit-volume Mahalanobis norms).

    Each cluster's fuzzy covariance F_i is blended as
    (1 - reg) * F_i + reg * diag(global covariance) before inversion.
    `u0` optionally warm-starts the membership matrix (given as (c, N),
    e.g. a previous FCM partition's U); otherwise the seeded random
    initialization is used.  Raises DataError when a covariance stays
    singular, which with regularization 0 happens on any flat cluster.
    """
    X = _as_data(X)
    n, d = X.shape
    _check_cm(n, c, m)
    if regularization < 0 or regularization > 1:
        raise ValueError("regularization must lie in [0, 1]")

    if u0 is None:
        u = _init_membership(n, c, seed)
    else:
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != (c, n):
            raise ValueError(f"u0 must have shape ({c}, {n}), got {u0.shape}")
        u = np.ascontiguousarray(u0.T)

    global_diag = np.diag(X.var(axis=0))
    covs = np.empty((c, d, d))
    v = None
    obj_trace, colsum_trace = [], []
    converged = False
    for _ in range(max_iter):
        v = _prototypes(X, u, m, v)
        w = u ** m
        wsum = w.sum(axis=0)
        d2 = np.empty((n, c))
        for i in range(c):
            diff = X - v[i]
            denom = wsum[i] if wsum[i] > 0 else 1.0
            F = (w[:, i, None] * diff).T @ diff / denom
            F = (1.0 - regularization) * F + regularization * global_diag
            F = 0.5 * (F + F.T)
            sign, logdet = np.linalg.slogdet(F)
            if sign <= 0 or not np.isfinite(logdet):
                raise DataError(
                    f"cluster {i} has a singular covariance matrix "
                    f"(regularization={regularization}); increase regularization"
                )
            A = np.exp(logdet / d) * np.linalg.inv(F)
            covs[i] = F
            d2[:, i] = np.einsum("nd,de,ne->n", diff, A, diff)
        np.clip(d2, 0.0, None, out=d2)
        u_new = kernels.fcm_memberships(d2, m)
        obj_trace.append(float(((u_new ** m) * d2).sum()))
        colsum_trace.append(float(np.abs(u_new.sum(axis=1) - 1.0).max()))
        delta = float(np.abs(u_new - u).max())
        u = u_new
        if delta < tol:
            converged = True
            break

    return FuzzyPartition(
        U=np.ascontiguousarray(u.T), V=v, m=float(m),
        objective=obj_trace[-1], n_iter=len(obj_trace), converged=converged,
        objective_trace=np.array(obj_trace),
        colsum_error_trace=np.array(colsum_trace),
        covariances=covs,
    )


def fukuyama_index(X, p: FuzzyPartition) -> float:
    """Fukuyama-Sugeno validity index: compactness minus separation.

    sum_ij u_ij^m ||x_j - v_i||^2  -  sum_ij u_ij^m ||v_i - vbar||^2,
    with vbar the plain mean of the c prototypes.  Lower is better.
    """
    X = _as_data(X)
    n, d = X.shape
    if p.U.shape[1] != n:
        raise ValueError(
            f"partition covers {p.U.shape[1]} samples but data has {n}"
        )
    if p.V.shape[1] != d:
        raise ValueError(
            f"partition prototypes have {p.V.shape[1]} coordinates but data has {d}"
        )
    w = p.U ** p.m  # (c, n)
    d2 = kernels.sq_distances(X, p.V)  # (n, c)
    compact = float((w * d2.T).sum())
    vbar = p.V.mean(axis=0)
    sep2 = ((p.V - vbar) ** 2).sum(axis=1)
    separate = float((w.sum(axis=1) * sep2).sum())
    return compact - separate


def select_cluster_count(X, c_max=10, m=2.0, seeds=(0, 1, 2, 3, 4),
                         tol=1e-6, max_iter=300) -> ValidityScan:
    """Pick the cluster count in [2, c_max] minimizing the Fukuyama index.

    Each candidate count runs FCM once per seed and keeps the lowest-objective
    run before scoring; ties on the index go to the smallest count.
    """
    X = _as_data(X)
    if c_max < 2:
        raise ValueError(f"c_max must be at least 2, got {c_max}")
    if c_max > X.shape[0]:
        raise DataError(f"c_max={c_max} exceeds the {X.shape[0]} samples")
    seeds = tuple(seeds)
    if not seeds:
        raise ValueError("need at least one seed")

    candidates = tuple(range(2, c_max + 1))
    values, best_seeds = [], []
    for c in candidates:
        runs = [(fcm(X, c, m=m, tol=tol, max_iter=max_iter, seed=s), s)
                for s in seeds]
        part, seed = min(runs, key=lambda ps: ps[0].objective)
        values.append(fukuyama_index(X, part))
        best_seeds.append(seed)
    selected = candidates[int(np.argmin(values))]
    return ValidityScan(
        candidates=candidates, values=tuple(values),
        selected=selected, best_seeds=tuple(best_seeds),
    )
