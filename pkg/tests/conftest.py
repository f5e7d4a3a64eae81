"""Shared fixtures and small builders used across the test modules."""

import numpy as np
import pytest

from it2fis import kernels
from it2fis.preprocess import Dataset
from it2fis.rules import it2_rule_base, t1_rule_base


def random_t1_base(rng, n_rules=3, n_features=2, **kw):
    means = rng.uniform(-2.0, 2.0, (n_rules, n_features))
    sig = rng.uniform(0.5, 2.0, (n_rules, n_features))
    cons = rng.uniform(1.0, 2.0, n_rules)
    cons_sig = rng.uniform(0.2, 0.8, n_rules)
    return t1_rule_base(means, sig, cons, cons_sig, **kw)


def random_it2_base(rng, n_rules=3, n_features=2, spread=0.3, **kw):
    means = rng.uniform(-2.0, 2.0, (n_rules, n_features))
    su = rng.uniform(0.5, 2.0, (n_rules, n_features))
    sl = su * (1.0 - spread * rng.random((n_rules, n_features)))
    cons = rng.uniform(1.0, 2.0, n_rules)
    csu = rng.uniform(0.2, 0.8, n_rules)
    csl = csu * (1.0 - spread * rng.random(n_rules))
    return it2_rule_base(means, sl, su, cons, csl, csu, **kw)


def blobs(rng, centers, n_per=60, sigma=0.25):
    """Isotropic Gaussian blobs around the given centers, stacked in order."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    return np.vstack([c + sigma * rng.standard_normal((n_per, centers.shape[1]))
                      for c in centers])


def two_class_dataset(rng, n_major=80, n_minor=40, gap=4.0):
    """One-dimensional two-Gaussian classification data ('a' majority at 0)."""
    x = np.concatenate([rng.normal(0.0, 0.5, n_major),
                        rng.normal(gap, 0.5, n_minor)])
    labels = ("a",) * n_major + ("b",) * n_minor
    return Dataset(x[:, None], labels, ("x1",))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def warm_kernels():
    """Run every kernel once so JIT compilation stays out of timed sections."""
    r = np.random.default_rng(0)
    x = r.random((6, 3))
    v = np.ascontiguousarray(x[:2])
    d2 = kernels.sq_distances(x, v)
    kernels.fcm_memberships(d2, 2.0)
    means = np.zeros((2, 3))
    sig = np.ones((2, 3))
    cons = np.array([1.0, 2.0])
    kernels.log_firing(x, means, sig)
    kernels.km_batch(np.full((1, 2), 0.3), np.full((1, 2), 0.6), cons)
    y = np.ones(6)
    kernels.t1_epoch(x, y, means, sig, cons)
    kernels.it2_epoch(x, y, means, 0.8 * sig, sig, cons, np.argsort(cons))
    kernels.topk_select(d2, 2)
    return kernels.backend()
