"""Input validation helpers shared by the estimators."""

import os

import numpy as np

from .tensor import Tensor3, Tricluster


def check_tensor(X, ordinal=False, temporal=False):
    """Coerce ``X`` to a :class:`Tensor3` and check requirements.

    A bare 3-d array is wrapped as a real-valued, non-temporal tensor.
    """
    if not isinstance(X, Tensor3):
        X = Tensor3(np.asarray(X, dtype=float))
    if ordinal and not X.is_ordinal:
        real = [j for j, d in enumerate(X.domains) if not d.is_ordinal]
        raise TypeError(f"variables {real} are real-valued; discretize first")
    if temporal and not X.temporal:
        raise ValueError("operation requires a temporal tensor")
    return X


def check_triclusters(triclusters):
    out = []
    for tc in triclusters:
        if isinstance(tc, Tricluster):
            out.append(tc)
        elif isinstance(tc, dict):
            out.append(Tricluster(tc["I"], tc["J"], tc["K"], tc.get("contiguous", False)))
        else:
            out.append(Tricluster(*tc))
    return out


def check_probability(p, name="p", open_interval=False):
    p = float(p)
    if open_interval and not 0.0 < p < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {p}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def n_threads(n_jobs=None):
    """Worker count: explicit ``n_jobs``, else ``TRISIG_THREADS`` (0 = auto)."""
    if n_jobs is None:
        try:
            n_jobs = int(os.environ.get("TRISIG_THREADS", "1"))
        except ValueError:
            n_jobs = 1
    if n_jobs <= 0:
        n_jobs = os.cpu_count() or 1
    return n_jobs
