"""Tensor preprocessing: per-variable discretization and PAA along time."""

from __future__ import annotations

import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .exceptions import DegenerateVariableWarning, EmptySegmentWarning
from .tensor import Tensor3, VariableDomain
from .validation import check_tensor

STRATEGIES = ("equal-width", "equal-frequency")


def _equal_width_edges(x, n_bins):
    lo, hi = x.min(), x.max()
    return np.linspace(lo, hi, n_bins + 1)[1:-1]


def _equal_frequency_edges(x, n_bins):
    # Edge q sits between the sorted values at ranks ceil(q*n/b) - 1 and
    # ceil(q*n/b), so distinct values split into bins whose sizes differ by <= 1.
    s = np.sort(x)
    n = s.size
    edges = []
    for q in range(1, n_bins):
        r = math.ceil(q * n / n_bins)
        r = min(max(r, 1), n - 1)
        edges.append((s[r - 1] + s[r]) / 2.0)
    return np.asarray(edges)


class TensorDiscretizer(TransformerMixin, BaseEstimator):
    """Bin each real-valued variable into ordinal categories.

    Values of a variable are pooled over all observations and contexts
    before the bin edges are computed. Ordinal variables pass through.

    Parameters
    ----------
    n_bins : int, default=5
    strategy : {"equal-width", "equal-frequency"}, default="equal-width"

    Attributes
    ----------
    bin_edges_ : list of ndarray or None
        Interior edges per variable (None for pass-through variables).
    degenerate_ : list of int
        Variables that were constant and collapsed to one category.
    """

    def __init__(self, n_bins=5, strategy="equal-width"):
        self.n_bins = n_bins
        self.strategy = strategy

    def fit(self, X, y=None):
        t = check_tensor(X)
        if int(self.n_bins) < 2:
            raise ValueError(f"n_bins must be >= 2, got {self.n_bins}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        edges_fn = _equal_width_edges if self.strategy == "equal-width" else _equal_frequency_edges
        self.bin_edges_ = []
        self.degenerate_ = []
        for j, dom in enumerate(t.domains):
            if dom.is_ordinal:
                self.bin_edges_.append(None)
                continue
            x = t.values[:, j, :]
            x = x[~np.isnan(x)]
            if x.size == 0 or x.min() == x.max():
                self.degenerate_.append(j)
                self.bin_edges_.append(np.array([]))
                continue
            self.bin_edges_.append(edges_fn(x, int(self.n_bins)))
        if self.degenerate_:
            warnings.warn(
                f"variables {self.degenerate_} are constant and collapse to one category",
                DegenerateVariableWarning,
                stacklevel=2,
            )
        self.n_vars_ = t.n_vars
        return self

    def transform(self, X):
        if not hasattr(self, "bin_edges_"):
            raise NotFittedError("TensorDiscretizer is not fitted yet")
        t = check_tensor(X)
        if t.n_vars != self.n_vars_:
            raise ValueError(f"fitted on {self.n_vars_} variables, got {t.n_vars}")
        values = np.array(t.values)
        domains = list(t.domains)
        for j, edges in enumerate(self.bin_edges_):
            if edges is None:
                continue
            if t.domains[j].is_ordinal:
                raise ValueError(f"variable {j} was real when fitted but is ordinal now")
            col = values[:, j, :]
            ok = ~np.isnan(col)
            col[ok] = np.searchsorted(edges, col[ok], side="right")
            n_cat = 1 if edges.size == 0 else int(self.n_bins)
            domains[j] = VariableDomain.ordinal(n_cat, bin_edges=edges.tolist())
        return t.replace(values=values, domains=tuple(domains))


def discretize(t: Tensor3, bins: int = 5, strategy: str = "equal-width") -> Tensor3:
    """Functional form of :class:`TensorDiscretizer`."""
    return TensorDiscretizer(bins, strategy).fit_transform(t)


def segment_bounds(n, n_segments):
    """Start/stop offsets of ``n_segments`` near-equal consecutive segments."""
    sizes = np.full(n_segments, n // n_segments)
    sizes[: n % n_segments] += 1
    stops = np.cumsum(sizes)
    return list(zip(stops - sizes, stops))


class PiecewiseAggregateApproximation(TransformerMixin, BaseEstimator):
    """Average the context (time) axis over consecutive segments.

    The first ``n_ctx % n_segments`` segments hold one extra time point.
    Missing cells are ignored in the means; a segment with no observed
    value yields a missing output cell and an :class:`EmptySegmentWarning`.

    Parameters
    ----------
    n_segments : int
    """

    def __init__(self, n_segments):
        self.n_segments = n_segments

    def fit(self, X, y=None):
        t = check_tensor(X)
        if not t.temporal:
            raise ValueError("PAA requires a temporal tensor")
        if not 1 <= int(self.n_segments) <= t.n_ctx:
            raise ValueError(f"n_segments must be in [1, {t.n_ctx}], got {self.n_segments}")
        return self

    def transform(self, X):
        t = check_tensor(X)
        self.fit(t)
        ordinal = [j for j, d in enumerate(t.domains) if d.is_ordinal]
        if ordinal:
            raise ValueError(f"PAA needs real-valued variables; {ordinal} are ordinal")
        bounds = segment_bounds(t.n_ctx, int(self.n_segments))
        out = np.full((t.n_obs, t.n_vars, len(bounds)), np.nan)
        empty = 0
        for s, (a, b) in enumerate(bounds):
            seg = t.values[:, :, a:b]
            count = np.sum(~np.isnan(seg), axis=2)
            total = np.nansum(seg, axis=2)
            with np.errstate(invalid="ignore", divide="ignore"):
                out[:, :, s] = np.where(count > 0, total / np.maximum(count, 1), np.nan)
            empty += int(np.sum(count == 0))
        if empty:
            warnings.warn(f"{empty} empty PAA segment(s) left missing", EmptySegmentWarning, stacklevel=2)
        labels = [
            t.ctx_labels[a] if b - a == 1 else f"{t.ctx_labels[a]}..{t.ctx_labels[b - 1]}"
            for a, b in bounds
        ]
        return t.replace(values=out, ctx_labels=labels)


def paa(t: Tensor3, target_ctx: int) -> Tensor3:
    """Functional form of :class:`PiecewiseAggregateApproximation`."""
    return PiecewiseAggregateApproximation(target_ctx).fit_transform(t)
