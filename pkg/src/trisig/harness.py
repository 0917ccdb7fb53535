"""Verification machinery: independent oracles, a baseline miner and the
minimum-observations grid.

The oracles here deliberately avoid the estimation and significance code
paths: counts are taken with plain loops over Python lists and combined in
exact rational or arbitrary-precision arithmetic.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy import stats

from .exceptions import SearchSpaceTooLargeError
from .significance import MD, MI, TC, min_observations
from .tensor import Pattern, Tensor3, Tricluster
from .validation import check_tensor

# -- exact binomial tail ------------------------------------------------------


def _mp(p):
    if isinstance(p, Fraction):
        return mpmath.mpf(p.numerator) / p.denominator
    return mpmath.mpf(p)


def _tail_sums(p, n, k):
    pm = _mp(p)
    q = 1 - pm
    ratio = pm / q
    term = q**n
    terms = [term]
    for x in range(n):
        term = term * (n - x) / (x + 1) * ratio
        terms.append(term)
    return mpmath.fsum(terms[k:]), mpmath.fsum(terms[:k])


def exact_tail_oracle(p, n, k, dps=60):
    """P(x >= k) for x ~ Bin(n, p) by direct summation at ``dps`` digits.

    ``p`` may be a float (taken at its exact binary value), a Fraction, or
    an mpmath number. Returns an ``mpmath.mpf``.
    """
    n, k = int(n), int(k)
    with mpmath.workdps(dps):
        if k <= 0 or _mp(p) >= 1:
            return mpmath.mpf(1)
        return +_tail_sums(p, n, k)[0]


def exact_log_tail(p, n, k, dps=60):
    """Natural log of :func:`exact_tail_oracle`, as an mpf.

    Tails above one half are taken as ``log1p(-lower)`` from the directly
    summed lower sum, which keeps full relative precision when the tail
    is within 10^-dps of one.
    """
    n, k = int(n), int(k)
    with mpmath.workdps(dps):
        if k <= 0 or _mp(p) >= 1:
            return mpmath.mpf(0)
        upper, lower = _tail_sums(p, n, k)
        if upper > 0.5:
            return mpmath.log1p(-lower)
        return mpmath.log(upper) if upper > 0 else mpmath.mpf("-inf")


# -- brute-force pattern probability ------------------------------------------


def _nested(t: Tensor3):
    """Tensor as nested lists of codes, None for missing."""
    out = []
    for i in range(t.n_obs):
        out.append(
            [
                [None if math.isnan(v) else int(v) for v in t.values[i, j, :].tolist()]
                for j in range(t.n_vars)
            ]
        )
    return out


def _frac(count, support, eps, n_out):
    den = support + eps * n_out
    if den == 0:
        return None
    return (count + eps) / den


def brute_force_pattern_prob(t: Tensor3, pattern: Pattern, var_dep=MI, ctx_model=MD, smoothing=0):
    """Exact rational p_phiT by row and pair scans (None if undefined).

    Mirrors the dispatch of the significance calculus but shares none of its
    code: per-context or pooled row counts, stationary adjacent-pair counts,
    and integer placement factors.
    """
    eps = Fraction(smoothing)
    a = _nested(t)
    n, p = t.n_obs, t.n_ctx
    card = [d.cardinality for d in t.domains]
    J, K = pattern.var_idx, pattern.ctx_idx

    def row_prob(cells, contexts):
        match = support = 0
        for i in range(n):
            for k in contexts:
                vals = [a[i][j][k] for j in cells]
                if any(v is None for v in vals):
                    continue
                support += 1
                if all(v == cells[j] for v, j in zip(vals, cells)):
                    match += 1
        n_out = 1
        for j in cells:
            n_out *= card[j]
        return _frac(match, support, eps, n_out)

    def slice_prob(k, contexts):
        cells = pattern.slice(k)
        if var_dep == MD:
            return row_prob(cells, contexts)
        out = Fraction(1)
        for j, c in cells.items():
            f = row_prob({j: c}, contexts)
            if f is None:
                return None
            out *= f
        return out

    def step_prob(prev, cur):
        joint = prevm = support = 0
        for i in range(n):
            for k in range(1, p):
                before = [a[i][j][k - 1] for j in prev]
                after = [a[i][j][k] for j in prev]
                if any(v is None for v in before + after):
                    continue
                support += 1
                pm = all(v == prev[j] for v, j in zip(before, prev))
                cm = all(v == cur[j] for v, j in zip(after, prev))
                prevm += pm
                joint += pm and cm
        n_out = 1
        for j in prev:
            n_out *= card[j]
        pj = _frac(joint, support, eps, n_out * n_out)
        # predecessor mass summed over all n_out successors
        pp = _frac(prevm + eps * (n_out - 1), support, eps, n_out * n_out)
        if pj is None or pp is None or pp == 0:
            return None
        return pj / pp

    all_ctx = range(p)
    factors = []
    if ctx_model == MI:
        placements = 1
        factors = [slice_prob(k, [k]) for k in K]
    elif ctx_model == MD:
        placements = math.comb(p, len(K))
        factors = [slice_prob(k, all_ctx) for k in K]
    else:
        placements = p - len(K) + 1
        factors = [slice_prob(K[0], all_ctx)]
        for k_prev, k in zip(K[:-1], K[1:]):
            prev, cur = pattern.slice(k_prev), pattern.slice(k)
            if var_dep == MD:
                factors.append(step_prob(prev, cur))
            else:
                for j in J:
                    factors.append(step_prob({j: prev[j]}, {j: cur[j]}))
    if any(f is None for f in factors):
        return None
    out = Fraction(placements)
    for f in factors:
        out *= f
    return out


# -- Monte-Carlo placement frequency ------------------------------------------


@dataclass(frozen=True)
class MCResult:
    """Monte-Carlo estimate over ``trials`` null observations.

    ``frequency`` is the share of observations showing the pattern at one
    or more placements; ``mean_placements`` the average number of
    placements, whose expectation is the analytic placement-factor formula.
    """

    frequency: float
    ci: tuple
    mean_placements: float
    mean_ci: tuple
    trials: int
    n_placements: int

    def contains(self, value):
        return self.ci[0] <= value <= self.ci[1]


def _placements(ctx_model, n_ctx, ctx_idx):
    n_k = len(ctx_idx)
    if ctx_model == MI:
        return [tuple(ctx_idx)]
    if ctx_model == MD:
        return list(itertools.combinations(range(n_ctx), n_k))
    return [tuple(range(s, s + n_k)) for s in range(n_ctx - n_k + 1)]


def mc_pattern_frequency(
    cardinality, n_ctx, pattern_values, ctx_model=MD, ctx_idx=None, trials=100_000, seed=0, confidence=0.99
) -> MCResult:
    """Simulate uniform null observations and count pattern placements.

    Parameters
    ----------
    cardinality : int or sequence of int
        Categories per pattern variable.
    n_ctx : int
        Number of contexts |Z|.
    pattern_values : array-like of shape (|J|, |K|)
        Pattern codes.
    ctx_model : {"mi", "md", "tc"}
        "mi" looks only at ``ctx_idx``; "md" at every ordered |K|-subset of
        contexts; "tc" at every contiguous start.
    """
    pat = np.asarray(pattern_values, dtype=np.int64)
    n_j, n_k = pat.shape
    if isinstance(cardinality, (int, np.integer)):
        cardinality = [int(cardinality)] * n_j
    card = np.asarray(cardinality)[:, None]
    if ctx_idx is None:
        ctx_idx = tuple(range(n_k))
    rng = np.random.default_rng(seed)
    draws = np.floor(rng.random((trials, n_j, n_ctx)) * card[None]).astype(np.int8)
    counts = np.zeros(trials, dtype=np.int64)
    placements = _placements(ctx_model, n_ctx, ctx_idx)
    for pl in placements:
        counts += np.all(draws[:, :, list(pl)] == pat[None], axis=(1, 2))
    z = stats.norm.ppf(0.5 + confidence / 2)
    freq = float(np.mean(counts > 0))
    # Wilson score interval
    den = 1 + z * z / trials
    centre = (freq + z * z / (2 * trials)) / den
    half = z * math.sqrt(freq * (1 - freq) / trials + z * z / (4 * trials * trials)) / den
    mean = float(counts.mean())
    sd = float(counts.std(ddof=1)) if trials > 1 else 0.0
    mhalf = z * sd / math.sqrt(trials)
    return MCResult(freq, (centre - half, centre + half), mean, (mean - mhalf, mean + mhalf), trials, len(placements))


# -- naive miner ----------------------------------------------------------------


def _subsets(n, lo, hi, contiguous):
    for size in range(lo, hi + 1):
        if contiguous:
            for s in range(n - size + 1):
                yield tuple(range(s, s + size))
        else:
            yield from itertools.combinations(range(n), size)


def _count_subsets(n, lo, hi, contiguous):
    if contiguous:
        return sum(n - s + 1 for s in range(lo, hi + 1))
    return sum(math.comb(n, s) for s in range(lo, hi + 1))


def _maximal(candidates):
    """Drop candidates contained in another one (I, J and K all subsets)."""
    def bits(idx):
        return sum(1 << i for i in idx)

    keyed = sorted(
        candidates,
        key=lambda c: (-len(c.obs_idx) * len(c.var_idx) * len(c.ctx_idx), c.var_idx, c.ctx_idx, c.obs_idx),
    )
    kept = []
    for c in keyed:
        b = (bits(c.obs_idx), bits(c.var_idx), bits(c.ctx_idx))
        if any(all(x & ~y == 0 for x, y in zip(b, kb)) for _, kb in kept):
            continue
        kept.append((c, b))
    return sorted((c for c, _ in kept), key=lambda c: (c.var_idx, c.ctx_idx, c.obs_idx))


def naive_miner(
    t: Tensor3,
    min_I=2,
    min_J=1,
    min_K=1,
    contiguous=False,
    max_J=None,
    max_K=None,
    mode="exhaustive",
    max_combinations=200_000,
):
    """Constant triclusters of an ordinal tensor, for end-to-end testing.

    ``exhaustive`` enumerates every (J, K) within the size bounds, groups
    observations with identical values over J x K, and keeps maximal
    groups of at least ``min_I`` rows. ``greedy`` seeds on frequent
    (j, k, category) cells and repeatedly adds the variable or context that
    keeps the most observations constant, as long as at least ``min_I`` and
    half of the current observations remain. Output is sorted lexicographically by (J, K, I).
    """
    t = check_tensor(t, ordinal=True)
    codes = t.codes()
    n, m, p = codes.shape
    max_J = m if max_J is None else min(max_J, m)
    max_K = p if max_K is None else min(max_K, p)
    if mode == "greedy":
        return _greedy(codes, min_I, min_J, min_K, contiguous)
    if mode != "exhaustive":
        raise ValueError(f"mode must be 'exhaustive' or 'greedy', got {mode!r}")
    n_comb = _count_subsets(m, min_J, max_J, False) * _count_subsets(p, min_K, max_K, contiguous)
    if n_comb > max_combinations:
        raise SearchSpaceTooLargeError(
            f"{n_comb} (J, K) combinations exceed the budget of {max_combinations}; "
            "tighten max_J/max_K or use mode='greedy'"
        )
    candidates = []
    for J in _subsets(m, min_J, max_J, False):
        sub = codes[:, list(J), :]
        for K in _subsets(p, min_K, max_K, contiguous):
            rows = sub[:, :, list(K)].reshape(n, -1)
            ok = np.all(rows >= 0, axis=1)
            if ok.sum() < min_I:
                continue
            obs = np.flatnonzero(ok)
            uniq, inverse, counts = np.unique(rows[ok], axis=0, return_inverse=True, return_counts=True)
            for g in np.flatnonzero(counts >= min_I):
                I = obs[inverse.ravel() == g]
                candidates.append(Tricluster(I, J, K, contiguous=contiguous))
    return _maximal(candidates)


def _best_rows(block):
    """Rows of ``block`` (rows x cells) equal to its most frequent full row."""
    ok = np.all(block >= 0, axis=1)
    if not ok.any():
        return np.zeros(block.shape[0], dtype=bool)
    uniq, inverse, counts = np.unique(block[ok], axis=0, return_inverse=True, return_counts=True)
    target = uniq[int(np.argmax(counts))]
    return ok & np.all(block == target, axis=1)


def _greedy(codes, min_I, min_J, min_K, contiguous, keep=0.5):
    n, m, p = codes.shape
    found = set()
    for j0 in range(m):
        for k0 in range(p):
            col = codes[:, j0, k0]
            for c in np.unique(col[col >= 0]):
                I = np.flatnonzero(col == c)
                if I.size < min_I:
                    continue
                J, K = [j0], [k0]
                while True:
                    # candidate extensions keep J x K rectangular
                    options = [(J + [j], K) for j in range(m) if j not in J]
                    ks = [min(K) - 1, max(K) + 1] if contiguous else range(p)
                    options += [(J, sorted(K + [k])) for k in ks if 0 <= k < p and k not in K]
                    best = None
                    for Jc, Kc in options:
                        rows = _best_rows(codes[I][:, Jc][:, :, Kc].reshape(I.size, -1))
                        if best is None or rows.sum() > best[0].sum():
                            best = (rows, Jc, Kc)
                    if best is None:
                        break
                    rows, Jc, Kc = best
                    if rows.sum() < max(min_I, keep * I.size):
                        break
                    I, J, K = I[rows], Jc, Kc
                if len(J) >= min_J and len(K) >= min_K:
                    Js = sorted(J)
                    target = codes[I[0]][np.ix_(Js, K)]
                    full = np.flatnonzero(np.all(codes[:, Js][:, :, K] == target, axis=(1, 2)))
                    found.add((tuple(Js), tuple(K), tuple(full)))
    candidates = [Tricluster(I, J, K, contiguous=contiguous) for J, K, I in found]
    return _maximal(candidates)


# -- minimum observations grid ----------------------------------------------------


PROFILES = (("md", MD), ("tc", TC))


@dataclass(frozen=True)
class GridCell:
    L: int
    J: int
    K: int
    profile: str
    p_pattern: float
    n_min: int | None
    n_min_corrected: int | None


def theoretical_pattern_prob(L, J, K, n_ctx, profile):
    """Uniform-null p_phiT for independent variables (exact rational)."""
    base = Fraction(1, L ** (J * K))
    factor = math.comb(n_ctx, K) if profile == MD else n_ctx - K + 1
    return base * factor


def min_obs_grid(n_obs=1000, n_vars=50, n_ctx=50, L_set=(3, 5), J_set=(2, 3, 4, 5), K_set=(2, 3, 4, 5), alpha=0.01):
    """Minimum significant tricluster sizes under a uniform null.

    For every (|L|, |J|, |K|) and both context models (mutually dependent,
    temporally contiguous) with independent variables, returns p_phiT and
    the minimum sizes without and with the C(|Y|, |J|) correction.
    """
    cells = []
    for J in J_set:
        for L in L_set:
            for name, prof in PROFILES:
                for K in K_set:
                    p = float(theoretical_pattern_prob(L, J, K, n_ctx, prof))
                    n_min = min_observations(p, n_obs, alpha, 1)
                    n_corr = min_observations(p, n_obs, alpha, math.comb(n_vars, J))
                    cells.append(GridCell(L, J, K, name, p, n_min, n_corr))
    return cells


def format_number(x):
    """6 significant digits; scientific notation below 1e-4."""
    if x is None:
        return "-"
    x = float(x)
    if x == 0 or not math.isfinite(x):
        return repr(x) if not math.isfinite(x) else "0"
    if abs(x) < 1e-4:
        return f"{x:.5e}"
    return f"{x:.6g}"


def write_grid_csv(cells, sink):
    """Wide CSV shaped like the published table: one block of three rows
    (n_min, n_min_corrected, p_pattern) per (|J|, |L|), one column per
    context model and |K|."""
    Ks = sorted({c.K for c in cells})
    cols = [(name, K) for name, _ in PROFILES for K in Ks]
    header = ["J", "L", "row"] + [f"{name}_K{K}" for name, K in cols]
    lookup = {(c.L, c.J, c.K, c.profile): c for c in cells}
    order = []
    for c in cells:
        if (c.J, c.L) not in order:
            order.append((c.J, c.L))

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for J, L in order:
            for row, attr in (("n_min", "n_min"), ("n_min_corrected", "n_min_corrected"), ("p_pattern", "p_pattern")):
                vals = []
                for name, K in cols:
                    cell = lookup.get((L, J, K, name))
                    v = None if cell is None else getattr(cell, attr)
                    vals.append(format_number(v) if attr == "p_pattern" else ("-" if v is None else str(v)))
                w.writerow([J, L, row] + vals)

    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
    else:
        emit(sink)
