"""Empirical probability estimates over an ordinal tensor.

All estimators ignore missing cells: a missing value drops its observation
(or observation-context pair) from both numerator and denominator. An
optional additive pseudo-count ``smoothing`` turns a frequency ``c / n``
over ``L`` outcomes into ``(c + eps) / (n + eps * L)``.

Transition statistics are stationary: pairs of adjacent contexts are
pooled over every position along the context axis.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats

from .exceptions import EmptySupportError, InsufficientSupportWarning
from .tensor import Tensor3
from .validation import check_tensor

PER_CONTEXT = "per-context"
POOLED = "pooled"


def _freq(count, support, eps, n_outcomes):
    """Smoothed relative frequency; NaN when there is nothing to count."""
    den = float(support) + eps * n_outcomes
    if den == 0.0:
        return float("nan")
    return (float(count) + eps) / den


def _check_eps(smoothing):
    eps = float(smoothing)
    if eps < 0:
        raise ValueError(f"smoothing must be >= 0, got {smoothing}")
    return eps


@dataclass(frozen=True, eq=False)
class MarginalTable:
    """Category probabilities per variable (and per context, if scoped so).

    ``probs`` has shape ``(n_vars, n_ctx, L_max)`` for the per-context scope
    and ``(n_vars, L_max)`` when pooled over contexts; categories beyond a
    variable's cardinality hold zero. ``support`` counts the non-missing
    values behind each distribution; entries with no support are NaN.
    """

    scope: str
    probs: np.ndarray
    counts: np.ndarray
    support: np.ndarray

    def prob(self, j, category, ctx=None):
        if self.scope == PER_CONTEXT:
            if ctx is None:
                raise ValueError("per-context table needs a context index")
            return float(self.probs[j, ctx, category])
        return float(self.probs[j, category])

    @property
    def empty_support(self):
        return self.support == 0


def estimate_marginals(t: Tensor3, scope: str = PER_CONTEXT, smoothing: float = 0.0) -> MarginalTable:
    """Category frequencies of each variable, per context slice or pooled.

    Slices with no observed value get NaN probabilities and an
    :class:`EmptySupportError` is raised only when such a cell is queried
    through :class:`EmpiricalTables`.
    """
    t = check_tensor(t, ordinal=True)
    eps = _check_eps(smoothing)
    if scope not in (PER_CONTEXT, POOLED):
        raise ValueError(f"scope must be {PER_CONTEXT!r} or {POOLED!r}, got {scope!r}")
    codes = t.codes()
    n, m, p = codes.shape
    card = np.array(t.cardinalities)
    L = int(card.max())
    counts = np.zeros((m, p, L), dtype=np.int64)
    for j in range(m):
        c = codes[:, j, :]
        ok = c >= 0
        flat = (c + np.arange(p)[None, :] * L)[ok]
        counts[j] = np.bincount(flat, minlength=p * L).reshape(p, L)
    if scope == POOLED:
        counts = counts.sum(axis=1)
    support = counts.sum(axis=-1)
    Lj = card.reshape((m,) + (1,) * (counts.ndim - 1))
    den = support[..., None] + eps * Lj
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(den > 0, (counts + eps) / np.where(den > 0, den, 1), np.nan)
    # zero out padding beyond each variable's cardinality
    mask = np.arange(L)[None, :] < card[:, None]
    probs = np.where(mask.reshape((m,) + (1,) * (counts.ndim - 2) + (L,)), probs, 0.0)
    return MarginalTable(scope, probs, counts, support)


def _rows(codes, variables, ctx=None, contexts=None):
    """Observation rows over ``variables``; pooled rows stack contexts."""
    variables = list(variables)
    if ctx is not None:
        return codes[:, variables, ctx]
    block = codes[:, variables, :] if contexts is None else codes[:, variables][:, :, contexts]
    return block.transpose(0, 2, 1).reshape(-1, len(variables))


def joint_counts(codes, cells: Mapping[int, int], ctx=None, contexts=None):
    """``(matches, support)`` for rows showing every ``j -> category`` at once."""
    js = list(cells)
    target = np.array([cells[j] for j in js])
    rows = _rows(codes, js, ctx, contexts)
    valid = np.all(rows >= 0, axis=1)
    match = valid & np.all(rows == target, axis=1)
    return int(match.sum()), int(valid.sum())


def joint_prob(
    t: Tensor3,
    cells: Mapping[int, int],
    scope: str = PER_CONTEXT,
    ctx: int | None = None,
    smoothing: float = 0.0,
) -> float:
    """Fraction of observations matching all ``j -> category`` requirements.

    With ``scope="per-context"`` the observations are those of slice ``ctx``;
    pooled, every (observation, context) pair counts as one row.

    Raises
    ------
    EmptySupportError
        If no row has all queried variables observed.
    """
    t = check_tensor(t, ordinal=True)
    if not cells:
        raise ValueError("joint_prob needs at least one (variable, category)")
    if scope == PER_CONTEXT and ctx is None:
        raise ValueError("per-context scope needs ctx")
    eps = _check_eps(smoothing)
    match, support = joint_counts(t.codes(), cells, ctx if scope == PER_CONTEXT else None)
    if support == 0 and eps == 0:
        raise EmptySupportError(f"no observed rows for variables {sorted(cells)}")
    n_out = int(np.prod([t.domains[j].cardinality for j in cells]))
    return _freq(match, support, eps, n_out)


@dataclass(frozen=True, eq=False)
class TransitionTable:
    """Stationary first-order transition statistics per variable.

    ``pairs[j, u, v]`` estimates P(u at k-1, v at k) over every adjacent
    context pair; ``marginals[j, u]`` is its row sum, P(u at k-1) over the
    same pairs, so ``pairs[j, u, v] / marginals[j, u]`` is the conditional
    step probability. With smoothing that conditional is
    ``(count_uv + eps) / (count_u + eps * L)``.
    """

    pairs: np.ndarray
    marginals: np.ndarray
    pair_counts: np.ndarray
    support: np.ndarray

    def conditional(self, j, u, v):
        return float(self.pairs[j, u, v]) / float(self.marginals[j, u])


def estimate_transitions(t: Tensor3, smoothing: float = 0.0) -> TransitionTable:
    """Count adjacent pairs ``(a[i, j, k-1], a[i, j, k])`` over all i and k."""
    t = check_tensor(t, ordinal=True, temporal=True)
    if t.n_ctx < 2:
        raise ValueError("transitions need at least two contexts")
    eps = _check_eps(smoothing)
    codes = t.codes()
    card = np.array(t.cardinalities)
    m, L = t.n_vars, int(card.max())
    pair_counts = np.zeros((m, L, L), dtype=np.int64)
    for j in range(m):
        prev, cur = codes[:, j, :-1], codes[:, j, 1:]
        ok = (prev >= 0) & (cur >= 0)
        pair_counts[j] = np.bincount((prev * L + cur)[ok], minlength=L * L).reshape(L, L)
    support = pair_counts.sum(axis=(1, 2))
    pairs = np.zeros((m, L, L))
    marginals = np.zeros((m, L))
    for j in range(m):
        Lj = int(card[j])
        row = pair_counts[j].sum(axis=1)
        for u in range(Lj):
            # mass of the smoothed joints in row u, so conditionals sum to one
            marginals[j, u] = _freq(row[u] + eps * (Lj - 1), support[j], eps, Lj * Lj)
            for v in range(Lj):
                pairs[j, u, v] = _freq(pair_counts[j, u, v], support[j], eps, Lj * Lj)
    return TransitionTable(pairs, marginals, pair_counts, support)


def transition_counts(codes, previous: Mapping[int, int], current: Mapping[int, int]):
    """``(joint, prev_matches, support)`` over adjacent pairs with all cells observed.

    ``joint`` counts pairs where every variable steps from its ``previous``
    to its ``current`` category; ``prev_matches`` those matching ``previous``.
    """
    js = sorted(set(previous) | set(current))
    prev = codes[:, js, :-1]
    cur = codes[:, js, 1:]
    valid = np.all((prev >= 0) & (cur >= 0), axis=1)
    pm = np.ones_like(valid)
    cm = np.ones_like(valid)
    for a, j in enumerate(js):
        if j in previous:
            pm &= prev[:, a, :] == previous[j]
        if j in current:
            cm &= cur[:, a, :] == current[j]
    pm &= valid
    return int((pm & cm).sum()), int(pm.sum()), int(valid.sum())


def joint_transition(t: Tensor3, current: Mapping[int, int], previous: Mapping[int, int], smoothing=0.0):
    """Joint probability that all variables step ``previous -> current`` together."""
    t = check_tensor(t, ordinal=True, temporal=True)
    if t.n_ctx < 2:
        raise ValueError("transitions need at least two contexts")
    eps = _check_eps(smoothing)
    joint, _, support = transition_counts(t.codes(), previous, current)
    if support == 0 and eps == 0:
        raise EmptySupportError(f"no adjacent pairs observed for variables {sorted(current)}")
    n_out = int(np.prod([t.domains[j].cardinality for j in current])) ** 2
    return _freq(joint, support, eps, n_out)


class EmpiricalTables:
    """Lazily built empirical estimates consumed by the significance calculus.

    Every method returns a probability; NaN support raises
    :class:`EmptySupportError`. The object only reads the tensor and caches
    immutable tables, so it can be shared across threads once warmed up.
    """

    def __init__(self, t: Tensor3, smoothing: float = 0.0):
        self.tensor = check_tensor(t, ordinal=True)
        self.smoothing = _check_eps(smoothing)
        self.codes = self.tensor.codes()
        self.codes.setflags(write=False)
        self._per_context = None
        self._pooled = None
        self._transitions = None

    def warm(self, transitions=False):
        self.per_context
        self.pooled
        if transitions:
            self.transitions
        return self

    @property
    def n_ctx(self):
        return self.tensor.n_ctx

    @property
    def per_context(self):
        if self._per_context is None:
            self._per_context = estimate_marginals(self.tensor, PER_CONTEXT, self.smoothing)
        return self._per_context

    @property
    def pooled(self):
        if self._pooled is None:
            self._pooled = estimate_marginals(self.tensor, POOLED, self.smoothing)
        return self._pooled

    @property
    def transitions(self):
        if self._transitions is None:
            self._transitions = estimate_transitions(self.tensor, self.smoothing)
        return self._transitions

    @staticmethod
    def _checked(p, what):
        if np.isnan(p):
            raise EmptySupportError(f"no observed data for {what}")
        return p

    def marginal(self, j, category, ctx=None):
        """P(category) for variable j, in slice ``ctx`` or pooled if None."""
        table = self.pooled if ctx is None else self.per_context
        return self._checked(table.prob(j, category, ctx), f"variable {j}, context {ctx}")

    def joint(self, cells, ctx=None):
        match, support = joint_counts(self.codes, cells, ctx)
        n_out = int(np.prod([self.tensor.domains[j].cardinality for j in cells]))
        return self._checked(_freq(match, support, self.smoothing, n_out), f"variables {sorted(cells)}")

    def transition(self, j, u, v):
        """P(v at k | u at k-1) for variable j."""
        tt = self.transitions
        return self._checked(
            _ratio(tt.pairs[j, u, v], tt.marginals[j, u]), f"transitions of variable {j}"
        )

    def joint_transition(self, previous, current):
        """P(all of ``current`` at k | all of ``previous`` at k-1)."""
        if self.tensor.n_ctx < 2:
            raise ValueError("transitions need at least two contexts")
        joint, prev, support = transition_counts(self.codes, previous, current)
        n_prev = int(np.prod([self.tensor.domains[j].cardinality for j in previous]))
        eps = self.smoothing
        p_joint = _freq(joint, support, eps, n_prev * n_prev)
        p_prev = _freq(prev + eps * (n_prev - 1), support, eps, n_prev * n_prev)
        return self._checked(_ratio(p_joint, p_prev), f"transitions of variables {sorted(current)}")


def _ratio(num, den):
    num, den = float(num), float(den)
    if np.isnan(num) or np.isnan(den):
        return float("nan")
    if den == 0.0:
        # an unseen predecessor has no estimable successor distribution
        return float("nan") if num == 0.0 else float("inf")
    return num / den


class UniformTables:
    """Theoretical uniform null: every category of variable j has 1 / L_j."""

    def __init__(self, cardinalities, n_ctx):
        self.cardinalities = tuple(int(c) for c in cardinalities)
        self._n_ctx = int(n_ctx)

    @property
    def n_ctx(self):
        return self._n_ctx

    def marginal(self, j, category, ctx=None):
        return 1.0 / self.cardinalities[j]

    def joint(self, cells, ctx=None):
        return float(np.prod([1.0 / self.cardinalities[j] for j in cells]))

    def transition(self, j, u, v):
        return 1.0 / self.cardinalities[j]

    def joint_transition(self, previous, current):
        return float(np.prod([1.0 / self.cardinalities[j] for j in current]))


# -- goodness of fit ----------------------------------------------------------


def _merge_sparse(table, min_expected=5.0):
    """Merge adjacent category columns, smallest first, until expected >= min.

    Returns the merged 2 x c table, or None when fewer than two columns remain.
    """
    cols = [table[:, c].astype(float) for c in range(table.shape[1]) if table[:, c].sum() > 0]
    rows = table.sum(axis=1).astype(float)
    total = rows.sum()
    if total == 0 or np.any(rows == 0):
        return None
    while len(cols) > 1:
        totals = np.array([c.sum() for c in cols])
        if rows.min() * totals.min() / total >= min_expected:
            break
        s = int(np.argmin(totals))
        if s == 0:
            nb = 1
        elif s == len(cols) - 1:
            nb = s - 1
        else:
            nb = s - 1 if totals[s - 1] <= totals[s + 1] else s + 1
        cols[nb] = cols[nb] + cols[s]
        del cols[s]
    if len(cols) < 2:
        return None
    return np.column_stack(cols)


def chi2_two_sample(counts_a, counts_b, min_expected=5.0):
    """Two-sample chi-square homogeneity test on category counts.

    Categories are aligned by ordinal position. Sparse columns are merged
    (smallest first, into their smaller neighbour) until every expected
    count reaches ``min_expected``.

    Returns
    -------
    (statistic, pvalue) or None
        None when the data cannot support the test.
    """
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    L = max(a.size, b.size)
    a = np.pad(a, (0, L - a.size))
    b = np.pad(b, (0, L - b.size))
    table = _merge_sparse(np.vstack([a, b]), min_expected)
    if table is None:
        return None
    stat, pvalue, _, _ = stats.chi2_contingency(table, correction=False)
    return float(stat), float(pvalue)


@dataclass(frozen=True)
class PairTest:
    var_a: int
    var_b: int
    test: str
    statistic: float | None
    pvalue: float | None
    rejected: bool
    skipped: bool = False
    reason: str = ""


@dataclass(frozen=True)
class GoFResult:
    """Outcome of the identically-distributed gate."""

    identically_distributed: bool
    alpha: float
    threshold: float
    pairs: tuple = field(default_factory=tuple)

    def __bool__(self):
        return self.identically_distributed

    @property
    def skipped(self):
        return [p for p in self.pairs if p.skipped]

    @property
    def rejected(self):
        return [p for p in self.pairs if p.rejected]


def identically_distributed(t: Tensor3, alpha: float = 0.05, variables=None) -> GoFResult:
    """Pairwise two-sample tests between pooled variable distributions.

    Ordinal pairs use chi-square, real pairs Kolmogorov-Smirnov; pairs of
    different kinds are rejected outright. The global flag holds iff no
    tested pair rejects at the Bonferroni level ``alpha / n_tested``.
    Single-category variables are left out.
    """
    t = check_tensor(t)
    if variables is None:
        variables = [j for j in range(t.n_vars) if not t.domains[j].degenerate]
    variables = list(variables)
    if len(variables) < 2:
        raise ValueError("need at least two variables to compare distributions")
    pooled = None
    if any(t.domains[j].is_ordinal for j in variables):
        ordinal = [j for j in variables if t.domains[j].is_ordinal]
        codes = np.where(np.isnan(t.values), -1, np.nan_to_num(t.values)).astype(np.int64)
        pooled = {
            j: np.bincount(codes[:, j, :][codes[:, j, :] >= 0], minlength=t.domains[j].cardinality)
            for j in ordinal
        }
    samples = {}
    raw = []
    for a, b in itertools.combinations(variables, 2):
        da, db = t.domains[a], t.domains[b]
        if da.is_ordinal and db.is_ordinal:
            res = chi2_two_sample(pooled[a], pooled[b])
            if res is None:
                raw.append((a, b, "chi2", None, None, "insufficient support after merging"))
            else:
                raw.append((a, b, "chi2", res[0], res[1], ""))
        elif not da.is_ordinal and not db.is_ordinal:
            for j in (a, b):
                if j not in samples:
                    x = t.values[:, j, :]
                    samples[j] = x[~np.isnan(x)]
            if samples[a].size == 0 or samples[b].size == 0:
                raw.append((a, b, "ks", None, None, "no observed values"))
            else:
                res = stats.ks_2samp(samples[a], samples[b])
                raw.append((a, b, "ks", float(res.statistic), float(res.pvalue), ""))
        else:
            raw.append((a, b, "kind", None, 0.0, "ordinal vs real-valued"))
    n_tested = sum(1 for r in raw if r[4] is not None)
    threshold = alpha / max(n_tested, 1)
    pairs = []
    for a, b, test, stat, pv, reason in raw:
        skipped = pv is None
        pairs.append(PairTest(a, b, test, stat, pv, (not skipped) and pv < threshold, skipped, reason))
    skipped = [p for p in pairs if p.skipped]
    if skipped:
        warnings.warn(
            f"{len(skipped)} variable pair(s) skipped for insufficient support",
            InsufficientSupportWarning,
            stacklevel=2,
        )
    flag = not any(p.rejected for p in pairs)
    return GoFResult(flag, float(alpha), threshold, tuple(pairs))


def tables_to_json(tables: EmpiricalTables, transitions=False):
    """Debug dump of the estimated tables."""
    doc = {
        "smoothing": tables.smoothing,
        "pooled": tables.pooled.probs.tolist(),
        "per_context": tables.per_context.probs.tolist(),
    }
    if transitions and tables.tensor.temporal and tables.tensor.n_ctx > 1:
        tt = tables.transitions
        doc["transitions"] = {"pairs": tt.pairs.tolist(), "marginals": tt.marginals.tolist()}
    return doc
