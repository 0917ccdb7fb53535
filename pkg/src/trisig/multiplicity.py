"""Benjamini-Hochberg false discovery rate control and significance tiers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BH_SIGNIFICANT = "bh_significant"
NOMINAL = "nominal"
NOT_SIGNIFICANT = "not_significant"


@dataclass(frozen=True)
class AdjustedEntry:
    raw: float
    pvalue: float
    qvalue: float
    tier: str
    log_qvalue: float = float("nan")

    @property
    def rejected(self):
        return self.tier == BH_SIGNIFICANT


@dataclass(frozen=True)
class AdjustedReport:
    """BH outcome for a batch, index-aligned with the input p-values.

    ``bh_threshold`` is the largest p-value rejected by the step-up rule
    (None when nothing is rejected).
    """

    entries: tuple = field(default_factory=tuple)
    bh_threshold: float | None = None
    q: float = 0.05
    alpha: float = 0.05

    def __len__(self):
        return len(self.entries)

    @property
    def rejected(self):
        return np.array([e.rejected for e in self.entries], dtype=bool)

    @property
    def qvalues(self):
        return np.array([e.qvalue for e in self.entries])

    @property
    def tiers(self):
        return [e.tier for e in self.entries]


def benjamini_hochberg(pvalues, q=0.05, alpha=0.05, raw=None, log=False) -> AdjustedReport:
    """Step-up BH procedure at false discovery rate ``q``.

    Parameters
    ----------
    pvalues : sequence of float
        Values in [0, 1]. NaN entries (failed tests) are left out of the
        batch and come back ``not_significant`` with a NaN q-value.
    q : float
        FDR level.
    alpha : float
        Nominal level for the ``nominal`` tier: not rejected by BH but
        ``p < alpha``.
    raw : sequence of float, optional
        Uncorrected p-values to carry along in the report.
    log : bool, default=False
        Inputs (``pvalues`` and ``raw``) are natural logs. Comparisons and
        q-values are then computed in log space, so p-values far below the
        float range keep their order and non-zero q-values.

    Returns
    -------
    AdjustedReport
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    p = np.asarray(pvalues, dtype=float).ravel()
    raw = p if raw is None else np.asarray(raw, dtype=float).ravel()
    if raw.shape != p.shape:
        raise ValueError("raw and pvalues differ in length")
    ok = ~np.isnan(p)
    lo, hi = (-np.inf, 0.0) if log else (0.0, 1.0)
    if np.any((p[ok] < lo) | (p[ok] > hi)):
        raise ValueError("log p-values must be <= 0" if log else "p-values must lie in [0, 1]")
    if p.size == 0:
        return AdjustedReport((), None, q, alpha)

    idx = np.flatnonzero(ok)
    m = idx.size
    qvals = np.full(p.size, np.nan)
    rejected = np.zeros(p.size, dtype=bool)
    threshold = None
    if m:
        order = idx[np.argsort(p[idx], kind="stable")]
        ps = p[order]
        ranks = np.arange(1, m + 1)
        if log:
            below = np.flatnonzero(ps <= np.log(ranks * q / m))
            scaled = np.log(m / ranks) + ps
        else:
            below = np.flatnonzero(ps <= ranks * q / m)
            scaled = m / ranks * ps
        if below.size:
            k = below[-1]
            rejected[order[: k + 1]] = True
            threshold = float(ps[k])
        qs = np.minimum.accumulate(scaled[::-1])[::-1]
        qvals[order] = np.minimum(qs, hi)

    level = np.log(alpha) if log else alpha
    with np.errstate(divide="ignore"):
        log_q = qvals if log else np.log(qvals)
    entries = []
    for i in range(p.size):
        if rejected[i]:
            tier = BH_SIGNIFICANT
        elif ok[i] and p[i] < level:
            tier = NOMINAL
        else:
            tier = NOT_SIGNIFICANT
        if log:
            entry = AdjustedEntry(
                float(np.exp(raw[i])), float(np.exp(p[i])), float(np.exp(qvals[i])), tier, float(qvals[i])
            )
        else:
            entry = AdjustedEntry(float(raw[i]), float(p[i]), float(qvals[i]), tier, float(log_q[i]))
        entries.append(entry)
    if log and threshold is not None:
        threshold = float(np.exp(threshold))
    return AdjustedReport(tuple(entries), threshold, q, alpha)

