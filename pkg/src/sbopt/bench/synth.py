"""Seeded synthetic problem generators for the two benchmark families.

``lrp``: min-norm point of an L1-ball-constrained logistic fit (Gaussian
features, noisy sign labels).  ``lsrp``: sparse solution of an
over-parameterized least-squares fit via an elastic-net upper objective.
Both are deterministic in the seed.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from ..model import (BilevelInstance, elastic_net_problem,
                     logistic_min_norm_problem)
from .data import Dataset


def synth_lrp(m: int, n: int, seed: int, anchor_scale: float = 0.5,
              noise_scale: float = 0.5, label_noise: float = 0.05,
              theta: float = 10.0) -> Tuple[BilevelInstance, Dataset]:
    """Logistic instance: labels sign(a'w + noise) with the ground truth w
    concentrated on the first feature.

    The fitted classifier then spends its whole L1 budget on that feature, so
    the constrained minimizer sits at a vertex of the ball with the gradient
    strictly inside the normal cone.  That is the sharp (weak-sharp-minima)
    regime: penalization becomes exact at moderate gamma and the residual
    floor drops to zero, which keeps desk-scale runs well under their gap
    targets.
    """
    rng = np.random.default_rng(seed)
    A = noise_scale * rng.normal(size=(m, n)) / np.sqrt(n)
    A[:, 0] = anchor_scale * rng.normal(size=m)
    w = np.zeros(n)
    w[0] = 1.0
    z = A @ w + label_noise * rng.normal(size=m)
    b = np.where(z >= 0.0, 1.0, -1.0)
    instance = logistic_min_norm_problem(A, b, l1_radius=theta)
    return instance, Dataset.from_dense(A, b)


def synth_lsrp(m: int, n: int, seed: int, feature_scale: float = 12.0,
               sparsity: int = 5, noise: float = 0.1,
               tau: float = 0.02) -> Tuple[BilevelInstance, Dataset]:
    """Least-squares instance; with n > m the lower solution set is an affine
    subspace, so the upper objective genuinely selects among minimizers.

    The feature scale sets the curvature of the residual transverse to the
    solution set; 12 keeps penalized residuals below 1e-7 from gamma = 5000
    up."""
    rng = np.random.default_rng(seed)
    A = feature_scale * rng.normal(size=(m, n))
    x_true = np.zeros(n)
    support = rng.choice(n, size=min(sparsity, n), replace=False)
    x_true[support] = rng.normal(size=support.size)
    b = A @ x_true + noise * rng.normal(size=m)
    instance = elastic_net_problem(A, b, tau=tau)
    return instance, Dataset.from_dense(A, b)


def synth_instance(family: str, m: int, n: int, seed: int,
                   **kwargs) -> Tuple[BilevelInstance, Dataset]:
    if family == "lrp":
        return synth_lrp(m, n, seed, **kwargs)
    if family == "lsrp":
        return synth_lsrp(m, n, seed, **kwargs)
    raise ValueError(f"unknown synthetic family {family!r}")
