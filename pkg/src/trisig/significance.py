"""Null-model probability of a tricluster pattern and its binomial p-value.

Everything is computed in natural-log space. The pattern probability is
returned raw: under dependent or temporal contexts it multiplies by the
number of possible placements and may exceed one, in which case the
tricluster is reported as not assessable.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, logsumexp
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .estimation import EmpiricalTables, identically_distributed
from .exceptions import (
    EmptySupportError,
    TrisigError,
    UnsupportedProfileError,
    ZeroProbabilityWarning,
)
from .multiplicity import AdjustedReport, benjamini_hochberg
from .tensor import Pattern, Tricluster, extract_pattern, pattern_support
from .validation import check_probability, check_tensor, check_triclusters, n_threads

MI, MD, TC = "mi", "md", "tc"
LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class AssumptionProfile:
    """Dependency assumptions behind the null model.

    Parameters
    ----------
    var_dep : {"mi", "md"}
        Variables mutually independent or mutually dependent.
    ctx_model : {"mi", "md", "tc"}
        Contexts mutually independent, mutually dependent, or temporally
        contiguous (first-order Markov chain along time).
    identically_distributed : bool
        Enables the correction for the pattern spanning other variables.
    smoothing : float
        Additive pseudo-count used when estimating tables.
    """

    var_dep: str = MI
    ctx_model: str = MD
    identically_distributed: bool = False
    smoothing: float = 0.0

    def __post_init__(self):
        if self.var_dep not in (MI, MD):
            raise ValueError(f"var_dep must be 'mi' or 'md', got {self.var_dep!r}")
        if self.ctx_model not in (MI, MD, TC):
            raise ValueError(f"ctx_model must be 'mi', 'md' or 'tc', got {self.ctx_model!r}")
        if self.smoothing < 0:
            raise ValueError("smoothing must be >= 0")

    def check_tensor(self, t):
        if self.ctx_model == TC and not t.temporal:
            raise UnsupportedProfileError("temporally contiguous contexts need a temporal tensor")

    def check_tricluster(self, tc):
        if self.ctx_model == TC and not tc.is_run:
            raise UnsupportedProfileError(
                f"contexts {list(tc.ctx_idx)} are not contiguous; the TC profile needs a run"
            )


def log_comb(n, k):
    """Natural log of the binomial coefficient C(n, k)."""
    n, k = int(n), int(k)
    if not 0 <= k <= n:
        return -math.inf
    if n <= 100_000:
        return math.log(math.comb(n, k))
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def log1mexp(x):
    """log(1 - exp(x)) for x <= 0, accurate at both ends."""
    if x > -0.6931471805599453:
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def _log(p):
    if p <= 0.0:
        return -math.inf
    return math.log(p)


def pattern_prob(t, tc, pattern: Pattern, profile: AssumptionProfile, tables) -> float:
    """Log null probability of ``pattern`` under ``profile``.

    ``tables`` supplies ``marginal``, ``joint``, ``transition`` and
    ``joint_transition`` (see :class:`~trisig.estimation.EmpiricalTables`
    and :class:`~trisig.estimation.UniformTables`).

    The value is not clamped and may be positive. A zero factor gives
    ``-inf`` with a :class:`ZeroProbabilityWarning`.
    """
    profile.check_tensor(t)
    if tc is not None:
        profile.check_tricluster(tc)
    J, K = pattern.var_idx, pattern.ctx_idx
    n_ctx = tables.n_ctx
    independent = profile.var_dep == MI
    if profile.ctx_model == TC and K[-1] - K[0] + 1 != len(K):
        raise UnsupportedProfileError("TC profile needs a contiguous context run")

    def slice_log(k, ctx):
        cells = pattern.slice(k)
        if independent:
            return sum(_log(tables.marginal(j, c, ctx)) for j, c in cells.items())
        return _log(tables.joint(cells, ctx))

    if profile.ctx_model == MI:
        logp = sum(slice_log(k, k) for k in K)
    elif profile.ctx_model == MD:
        logp = log_comb(n_ctx, len(K)) + sum(slice_log(k, None) for k in K)
    else:
        logp = math.log(n_ctx - len(K) + 1) + slice_log(K[0], None)
        for k_prev, k in zip(K[:-1], K[1:]):
            prev, cur = pattern.slice(k_prev), pattern.slice(k)
            if independent:
                logp += sum(_log(tables.transition(j, prev[j], cur[j])) for j in J)
            else:
                logp += _log(tables.joint_transition(prev, cur))
    if logp == -math.inf:
        warnings.warn("pattern has an empirical factor of zero", ZeroProbabilityWarning, stacklevel=2)
    return float(logp)


def binomial_tail(log_p_pattern: float, n_obs_total: int, n_obs_tric: int) -> float:
    """Log of P(x >= n_obs_tric) for x ~ Bin(n_obs_total, min(p, 1)).

    Sums the log-pmf terms with log-sum-exp; when the tail exceeds one half
    the complement is summed instead, so results near one stay accurate.
    """
    n, k = int(n_obs_total), int(n_obs_tric)
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= n_obs_tric <= n_obs_total, got {k} and {n}")
    if k == 0 or log_p_pattern >= 0.0:
        return 0.0
    if log_p_pattern == -math.inf:
        return -math.inf
    log_p = float(log_p_pattern)
    log_q = log1mexp(log_p)
    x = np.arange(n + 1, dtype=float)
    terms = gammaln(n + 1.0) - gammaln(x + 1.0) - gammaln(n - x + 1.0) + x * log_p + (n - x) * log_q
    upper = float(logsumexp(terms[k:]))
    if upper < LOG_HALF:
        return min(upper, 0.0)
    lower = float(logsumexp(terms[:k]))
    return log1mexp(lower) if lower < 0.0 else -math.inf


def span_correction(log_pvalue: float, n_vars_total: int, n_vars_tric: int) -> float:
    """Multiply the p-value by C(|Y|, |J|), capped at one (log space)."""
    return min(float(log_pvalue) + log_comb(n_vars_total, n_vars_tric), 0.0)


def min_observations(p_pattern, n_obs_total, alpha=0.01, correction_factor=1.0, inclusive=False):
    """Smallest tricluster size that reaches significance, or None.

    With the default ``inclusive=False`` the returned count ``I`` is the
    smallest ``1 <= I < n_obs_total`` with
    ``correction_factor * P(x > I) < alpha``: a pattern seen in more than
    ``I`` observations is significant. This is the convention of the
    published minimum-size tables. ``inclusive=True`` instead returns the
    smallest ``I <= n_obs_total`` with ``correction_factor * P(x >= I) < alpha``.

    None means not assessable: ``p_pattern >= 1`` or no size qualifies.
    """
    alpha = check_probability(alpha, "alpha", open_interval=True)
    if correction_factor < 1:
        raise ValueError("correction_factor must be >= 1")
    n = int(n_obs_total)
    if p_pattern >= 1.0:
        return None
    log_p = _log(p_pattern)
    bound = math.log(alpha) - math.log(correction_factor)
    shift = 0 if inclusive else 1
    lo, hi = 1, n - shift
    if hi < lo or binomial_tail(log_p, n, hi + shift) >= bound:
        return None
    # tail is non-increasing in the size, so bisect for the first hit
    while lo < hi:
        mid = (lo + hi) // 2
        if binomial_tail(log_p, n, mid + shift) < bound:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass(frozen=True)
class SignificanceResult:
    """Per-tricluster outcome; p-values are stored as natural logs.

    ``n_support`` is the number of the tricluster's observations showing
    the full pattern, used as the binomial success count. A failed
    tricluster carries ``error`` and p-values of one.
    """

    shape: tuple
    log_p_pattern: float
    p_pattern_clamped: float
    log_pvalue_raw: float
    log_pvalue_span: float
    assessable: bool
    n_support: int = 0
    zero_probability: bool = False
    non_constant: bool = False
    error: str | None = None

    @property
    def pvalue_raw(self):
        return math.exp(self.log_pvalue_raw)

    @property
    def pvalue_span(self):
        return math.exp(self.log_pvalue_span)

    @property
    def log10_p_pattern(self):
        return self.log_p_pattern / math.log(10)

    @property
    def failed(self):
        return self.error is not None


def _failed(tc, message):
    return SignificanceResult(tc.shape, math.nan, math.nan, 0.0, 0.0, False, error=message)


def assess_one(t, tc, profile, tables, n_vars_total=None) -> SignificanceResult:
    """Pattern probability and p-values for one tricluster (raises on failure)."""
    tc.check_bounds(t)
    profile.check_tricluster(tc)
    keep = tuple(j for j in tc.var_idx if not t.domains[j].degenerate)
    if not keep:
        raise TrisigError("every variable of the tricluster is single-category")
    if n_vars_total is None:
        n_vars_total = sum(1 for d in t.domains if not d.degenerate)
    if keep != tc.var_idx:
        tc = replace(tc, var_idx=keep)
    pattern = extract_pattern(t, tc, warn=False)
    support = pattern_support(t, tc, pattern)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroProbabilityWarning)
        log_p = pattern_prob(t, tc, pattern, profile, tables)
    if np.isnan(log_p):
        raise EmptySupportError("pattern probability is undefined")
    assessable = log_p < 0.0
    if assessable:
        raw = binomial_tail(log_p, t.n_obs, support)
        span = span_correction(raw, n_vars_total, len(keep)) if profile.identically_distributed else raw
    else:
        raw = span = 0.0
    return SignificanceResult(
        shape=(len(tc.obs_idx), len(keep), len(tc.ctx_idx)),
        log_p_pattern=log_p,
        p_pattern_clamped=min(math.exp(log_p), 1.0) if log_p < 700 else 1.0,
        log_pvalue_raw=raw,
        log_pvalue_span=max(span, raw),
        assessable=assessable,
        n_support=support,
        zero_probability=log_p == -math.inf,
        non_constant=not pattern.is_constant,
    )


def assess(t, triclusters, profile: AssumptionProfile, tables=None, n_jobs=None):
    """Significance of every tricluster, index-aligned with the input.

    A tricluster that cannot be evaluated yields a result with ``error``
    set; the rest of the batch is unaffected. Multiple-testing correction
    is left to :func:`~trisig.multiplicity.benjamini_hochberg`.
    """
    t = check_tensor(t, ordinal=True)
    profile.check_tensor(t)
    triclusters = check_triclusters(triclusters)
    if tables is None:
        tables = EmpiricalTables(t, profile.smoothing)
    if not triclusters:
        return []
    if isinstance(tables, EmpiricalTables):
        tables.warm(transitions=profile.ctx_model == TC and t.n_ctx > 1)
    n_vars_total = sum(1 for d in t.domains if not d.degenerate)

    def run(tc):
        try:
            return assess_one(t, tc, profile, tables, n_vars_total)
        except (TrisigError, IndexError, ValueError, TypeError) as exc:
            return _failed(tc, f"{type(exc).__name__}: {exc}")

    workers = min(n_threads(n_jobs), len(triclusters))
    if workers <= 1:
        return [run(tc) for tc in triclusters]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, triclusters))


def adjust(results, fdr=0.05, alpha=0.05) -> AdjustedReport:
    """Benjamini-Hochberg over the span-corrected p-values of ``results``.

    The span-corrected value equals the raw one when the correction is off.
    Failed results are left out of the batch. Works on log p-values, so
    ``AdjustedEntry.log_qvalue`` stays finite far below the float range.
    """
    span = [math.nan if r.failed else r.log_pvalue_span for r in results]
    raw = [math.nan if r.failed else r.log_pvalue_raw for r in results]
    return benjamini_hochberg(span, q=fdr, alpha=alpha, raw=raw, log=True)


class TriclusterSignificance(BaseEstimator):
    """Statistical significance of triclusters against an empirical null.

    ``fit`` estimates probability tables from a discretized tensor and, with
    ``span_correction="auto"``, runs the identically-distributed gate.
    ``assess`` then scores triclusters and ``report`` adds BH q-values and
    tiers.

    Parameters
    ----------
    var_dep : {"mi", "md"}, default="mi"
    ctx_model : {"mi", "md", "tc"}, default="md"
    span_correction : {"auto", "on", "off"}, default="auto"
    smoothing : float, default=0.0
    alpha : float, default=0.05
        Nominal level separating the ``nominal`` tier from ``not_significant``.
    fdr : float, default=0.05
        Benjamini-Hochberg false discovery rate.
    gof_alpha : float, default=0.05
        Level of the identically-distributed gate (Bonferroni over pairs).
    n_jobs : int, optional
        Worker threads; defaults to ``TRISIG_THREADS`` (0 = all cores).

    Attributes
    ----------
    profile_ : AssumptionProfile
    tables_ : EmpiricalTables
    gof_ : GoFResult or None
        Gate verdict when ``span_correction="auto"``.
    """

    def __init__(
        self,
        var_dep=MI,
        ctx_model=MD,
        span_correction="auto",
        smoothing=0.0,
        alpha=0.05,
        fdr=0.05,
        gof_alpha=0.05,
        n_jobs=None,
    ):
        self.var_dep = var_dep
        self.ctx_model = ctx_model
        self.span_correction = span_correction
        self.smoothing = smoothing
        self.alpha = alpha
        self.fdr = fdr
        self.gof_alpha = gof_alpha
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        t = check_tensor(X, ordinal=True)
        if self.span_correction not in ("auto", "on", "off"):
            raise ValueError(f"span_correction must be auto, on or off, got {self.span_correction!r}")
        check_probability(self.alpha, "alpha", open_interval=True)
        check_probability(self.fdr, "fdr", open_interval=True)
        self.gof_ = None
        if self.span_correction == "auto":
            usable = [j for j in range(t.n_vars) if not t.domains[j].degenerate]
            if len(usable) >= 2:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    self.gof_ = identically_distributed(t, self.gof_alpha, usable)
                ident = bool(self.gof_)
            else:
                ident = True
        else:
            ident = self.span_correction == "on"
        self.profile_ = AssumptionProfile(self.var_dep, self.ctx_model, ident, float(self.smoothing))
        self.profile_.check_tensor(t)
        self.tensor_ = t
        self.tables_ = EmpiricalTables(t, self.smoothing)
        return self

    def _check_fitted(self):
        if not hasattr(self, "tables_"):
            raise NotFittedError("TriclusterSignificance is not fitted yet")

    def assess(self, triclusters):
        """List of :class:`SignificanceResult`, one per tricluster."""
        self._check_fitted()
        return assess(self.tensor_, triclusters, self.profile_, self.tables_, self.n_jobs)

    def report(self, triclusters):
        """``(results, AdjustedReport)`` for a batch of triclusters."""
        results = self.assess(triclusters)
        return results, adjust(results, self.fdr, self.alpha)

    def predict(self, triclusters):
        """Tier label per tricluster."""
        _, rep = self.report(triclusters)
        return np.array([e.tier for e in rep.entries], dtype=object)

    def pattern_log_proba(self, tc: Tricluster):
        self._check_fitted()
        pattern = extract_pattern(self.tensor_, tc, warn=False)
        return pattern_prob(self.tensor_, tc, pattern, self.profile_, self.tables_)

