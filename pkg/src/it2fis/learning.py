"""Rule extraction from fuzzy clusters and steepest-descent parameter tuning.

Extraction clusters the joint (features + encoded label) space, then projects
each cluster onto every variable as a weighted-Gaussian fit: the raw
projection of a fuzzy cluster is not convex, so the weighted mean / weighted
standard deviation (weights u^m) stand in as its convex approximation.

Tuning minimizes e = 1/2 (f(x) - y)^2.  The type-1 forward pass is the
centroid-weighted output; the interval type-2 forward pass is the
Karnik-Mendel interval midpoint, with gradients routed through the two
boundary type-1 systems picked out by the converged switch points.
Labels are encoded 1.0 (majority class) / 2.0 (minority class) so the crisp
output lives on a regression scale with a decision threshold applied later.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .clustering import fcm, gk
from .errors import DataError
from .rules import KIND_IT2, KIND_T1, RuleBase, it2_rule_base, t1_rule_base

SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class TuneConfig:
    learning_rate: float = 0.01
    epochs: int = 100
    batch: str = "full"  # full | per-sample
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch not in ("full", "per-sample"):
            raise ValueError(f"unknown batch mode {self.batch!r}")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")


@dataclass(frozen=True)
class TuneTrace:
    """Per-epoch mean error and a digest of the parameters it was measured on."""

    epoch_error: np.ndarray
    param_digests: tuple
    best_epoch: int


def encode_labels(labels):
    """Map the two label codes to regression targets: majority 1.0, minority 2.0.

    Returns (targets, low_code, high_code).  A tie on class counts sends the
    lexicographically smaller code to 1.0.
    """
    labels = list(labels)
    counts = Counter(labels)
    if len(counts) != 2:
        raise DataError(
            f"need exactly two label codes, found {sorted(counts)}"
        )
    a, b = sorted(counts)
    low, high = (a, b) if counts[a] >= counts[b] else (b, a)
    y = np.where(np.asarray(labels, dtype=object) == low, 1.0, 2.0)
    return y, low, high


def targets_for(rb: RuleBase, labels) -> np.ndarray:
    """Encode labels with the rule base's existing low/high mapping."""
    y = np.empty(len(labels))
    for j, lab in enumerate(labels):
        if lab == rb.label_low:
            y[j] = 1.0
        elif lab == rb.label_high:
            y[j] = 2.0
        else:
            raise DataError(
                f"label {lab!r} is neither {rb.label_low!r} nor {rb.label_high!r}"
            )
    return y


def extract_rules(data, c, m=2.0, seed=0, tol=1e-6, max_iter=300,
                  gk_regularization=1e-3) -> RuleBase:
    """Build a type-1 rule base with one rule per cluster of the joint space.

    FCM partitions the joint (features, encoded label) space; GK then refines
    that partition (warm-started from it) unless its covariances are singular
    even after regularization, in which case the FCM memberships are kept and
    the fallback is recorded in the provenance.  Rules are ordered by
    ascending consequent mean.
    """
    X = np.asarray(data.features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("need a non-empty feature matrix")
    y, low, high = encode_labels(data.labels)
    if y.shape[0] != X.shape[0]:
        raise DataError("feature and label counts differ")
    Z = np.column_stack([X, y])

    part = fcm(Z, c, m=m, tol=tol, max_iter=max_iter, seed=seed)
    method = "gk"
    try:
        part = gk(Z, c, m=m, tol=tol, max_iter=max_iter, seed=seed,
                  regularization=gk_regularization, u0=part.U)
    except DataError:
        method = "fcm-fallback"

    w = part.U ** m  # (c, n)
    mass = w.sum(axis=1)
    if (mass < 1e-12).any():
        i = int(np.argmin(mass))
        raise DataError(f"cluster {i} has vanishing membership mass")

    g = X.shape[1]
    means = (w @ Z) / mass[:, None]  # (c, g+1)
    var = np.empty_like(means)
    for i in range(means.shape[0]):
        var[i] = (w[i] @ (Z - means[i]) ** 2) / mass[i]
    sig = np.sqrt(np.clip(var, 0.0, None))
    sig = np.maximum(sig, SIGMA_FLOOR)

    order = np.argsort(means[:, g], kind="stable")
    names = tuple(getattr(data, "feature_names", None)
                  or (f"x{k + 1}" for k in range(g)))
    return t1_rule_base(
        means[order, :g], sig[order, :g], means[order, g], sig[order, g],
        variable_names=names, label_low=low, label_high=high,
        provenance=(
            ("clustering", method),
            ("cluster_count", str(c)),
            ("fuzziness", repr(float(m))),
            ("seed", str(seed)),
        ),
    )


def widen_to_it2(rb: RuleBase, spread=0.2) -> RuleBase:
    """Widen a type-1 base to interval type-2: sigma -> sigma * (1 -/+ spread)."""
    if rb.kind != KIND_T1:
        raise ValueError("widen_to_it2 expects a type-1 rule base")
    if not (0.0 <= spread < 1.0):
        raise ValueError(f"spread must lie in [0, 1), got {spread}")
    return it2_rule_base(
        rb.means,
        rb.sigma_lower * (1.0 - spread), rb.sigma_upper * (1.0 + spread),
        rb.cons_mean,
        rb.cons_sigma_lower * (1.0 - spread), rb.cons_sigma_upper * (1.0 + spread),
        variable_names=rb.variable_names, inference=rb.inference,
        label_low=rb.label_low, label_high=rb.label_high,
        provenance=rb.provenance + (("spread", repr(float(spread))),),
    )


def _digest(*arrays) -> str:
    h = hashlib.sha1()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def _bad_sample_message(X, means, *sigma_arrays) -> str:
    for sig in sigma_arrays:
        lf = kernels.log_firing(X, means, sig)
        bad = ~np.isfinite(lf.max(axis=1))
        if bad.any():
            return f"non-finite gradient at sample {int(np.flatnonzero(bad)[0])}"
    return "non-finite gradient"


def _train_arrays(rb: RuleBase, train):
    X = np.ascontiguousarray(np.asarray(train.features, dtype=float))
    if X.ndim != 2 or X.shape[1] != rb.n_features:
        raise DataError(
            f"training rows have {X.shape[1] if X.ndim == 2 else '?'} features; "
            f"rule base expects {rb.n_features}"
        )
    if X.shape[0] == 0:
        raise DataError("training set is empty")
    return X, targets_for(rb, train.labels)


def tune_t1(rb: RuleBase, train, cfg: TuneConfig = TuneConfig()):
    """Steepest descent on the type-1 system; returns (best base, trace).

    Full-batch mode steps with the mean gradient once per epoch; per-sample
    mode updates after every sample in a seeded shuffled order.  Sigmas are
    floored at 1e-6 after every step.  The returned base is the epoch-start
    snapshot with the lowest recorded mean error.
    """
    if rb.kind != KIND_T1:
        raise ValueError("tune_t1 expects a type-1 rule base")
    X, y = _train_arrays(rb, train)
    n = X.shape[0]
    lr = cfg.learning_rate
    rng = np.random.default_rng(cfg.seed)

    means = rb.means.copy()
    sig = rb.sigma_upper.copy()
    cons = rb.cons_mean.copy()

    errs, digests = [], []
    best = (np.inf, -1, None)
    since_best = 0
    for epoch in range(cfg.epochs):
        digests.append(_digest(means, sig, cons))
        # the recorded error belongs to the epoch-start parameters, so the
        # best-epoch snapshot is taken here, before any update
        snap_now = (means.copy(), sig.copy(), cons.copy())
        if cfg.batch == "full":
            gm, gs, gc, err = kernels.t1_epoch(X, y, means, sig, cons)
            if not np.isfinite(err):
                raise DataError(_bad_sample_message(X, means, sig))
        else:
            gm = gs = gc = None
            err = 0.0
            for j in rng.permutation(n):
                g1m, g1s, g1c, e1 = kernels.t1_epoch(X[j:j + 1], y[j:j + 1],
                                                     means, sig, cons)
                if not np.isfinite(e1):
                    raise DataError(f"non-finite gradient at sample {j}")
                means -= lr * g1m
                sig -= lr * g1s
                cons -= lr * g1c
                np.maximum(sig, SIGMA_FLOOR, out=sig)
                err += e1
        mean_err = err / n
        errs.append(float(mean_err))
        if mean_err < best[0]:
            best = (mean_err, epoch, snap_now)
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
        if cfg.batch == "full":
            # the kernel's gradients are already means over samples
            means -= lr * gm
            sig -= lr * gs
            cons -= lr * gc
            np.maximum(sig, SIGMA_FLOOR, out=sig)

    _, best_epoch, snap = best
    trace = TuneTrace(np.array(errs), tuple(digests), int(best_epoch))
    tuned = rb.with_params(snap[0], snap[1], snap[1], snap[2])
    return tuned, trace


def tune_it2(rb: RuleBase, train, cfg: TuneConfig = TuneConfig()):
    """Steepest descent on the interval type-2 system; returns (base, trace).

    The forward output is the Karnik-Mendel midpoint; each epoch re-derives
    the switch points and differentiates the two boundary type-1 systems they
    select.  After every step sigmas are floored and the pair is projected
    back to sigma_lower <= sigma_upper (offenders collapse to their average).
    """
    if rb.kind != KIND_IT2:
        raise ValueError("tune_it2 expects an interval type-2 rule base")
    X, y = _train_arrays(rb, train)
    n = X.shape[0]
    lr = cfg.learning_rate
    rng = np.random.default_rng(cfg.seed)

    means = rb.means.copy()
    sl = rb.sigma_lower.copy()
    su = rb.sigma_upper.copy()
    cons = rb.cons_mean.copy()

    def project():
        np.maximum(sl, SIGMA_FLOOR, out=sl)
        np.maximum(su, SIGMA_FLOOR, out=su)
        bad = sl > su
        if bad.any():
            avg = 0.5 * (sl[bad] + su[bad])
            sl[bad] = avg
            su[bad] = avg

    errs, digests = [], []
    best = (np.inf, -1, None)
    since_best = 0
    for epoch in range(cfg.epochs):
        digests.append(_digest(means, sl, su, cons))
        snap_now = (means.copy(), sl.copy(), su.copy(), cons.copy())
        if cfg.batch == "full":
            order = np.argsort(cons, kind="stable")
            gm, gsl, gsu, gc, err = kernels.it2_epoch(X, y, means, sl, su,
                                                      cons, order)
            if not np.isfinite(err):
                raise DataError(_bad_sample_message(X, means, su, sl))
        else:
            gm = gsl = gsu = gc = None
            err = 0.0
            for j in rng.permutation(n):
                order = np.argsort(cons, kind="stable")
                g1m, g1sl, g1su, g1c, e1 = kernels.it2_epoch(
                    X[j:j + 1], y[j:j + 1], means, sl, su, cons, order)
                if not np.isfinite(e1):
                    raise DataError(f"non-finite gradient at sample {j}")
                means -= lr * g1m
                sl -= lr * g1sl
                su -= lr * g1su
                cons -= lr * g1c
                project()
                err += e1
        mean_err = err / n
        errs.append(float(mean_err))
        if mean_err < best[0]:
            best = (mean_err, epoch, snap_now)
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
        if cfg.batch == "full":
            means -= lr * gm
            sl -= lr * gsl
            su -= lr * gsu
            cons -= lr * gc
            project()

    _, best_epoch, snap = best
    trace = TuneTrace(np.array(errs), tuple(digests), int(best_epoch))
    tuned = rb.with_params(snap[0], snap[1], snap[2], snap[3])
    return tuned, trace
