"""Data model: three-way tensors, triclusters and their patterns.

Cells are held in one float64 array of shape ``(n_obs, n_vars, n_ctx)``
with NaN marking missing values. Ordinal variables store category codes
``0 .. cardinality - 1``; the labels live in the variable's
:class:`VariableDomain`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DomainMismatchError, MissingDataError, NonConstantCellWarning

ORDINAL = "ordinal"
REAL = "real"


@dataclass(frozen=True)
class VariableDomain:
    """Domain of one variable: ordinal with ordered labels, or real-valued.

    ``bin_edges`` is set when the ordinal domain came from discretizing a
    real variable.
    """

    kind: str = ORDINAL
    categories: tuple = ()
    bin_edges: tuple | None = None

    def __post_init__(self):
        if self.kind not in (ORDINAL, REAL):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        if self.kind == ORDINAL:
            if len(self.categories) < 1:
                raise ValueError("ordinal domain needs at least one category")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"duplicate categories in {self.categories}")
        elif self.categories:
            raise ValueError("real domains carry no categories")
        if self.bin_edges is not None:
            object.__setattr__(self, "bin_edges", tuple(float(e) for e in self.bin_edges))

    @classmethod
    def ordinal(cls, cardinality_or_labels, bin_edges=None):
        if isinstance(cardinality_or_labels, (int, np.integer)):
            labels = [str(c) for c in range(int(cardinality_or_labels))]
        else:
            labels = list(cardinality_or_labels)
        return cls(ORDINAL, tuple(labels), bin_edges)

    @classmethod
    def real(cls):
        return cls(REAL)

    @property
    def is_ordinal(self):
        return self.kind == ORDINAL

    @property
    def cardinality(self):
        return len(self.categories) if self.is_ordinal else None

    @property
    def degenerate(self):
        """True for a single-category ordinal domain."""
        return self.is_ordinal and len(self.categories) < 2

    def code(self, label):
        try:
            return self.categories.index(str(label))
        except ValueError:
            raise DomainMismatchError(
                f"category {label!r} not in domain {list(self.categories)}"
            ) from None

    def to_dict(self):
        d = {"kind": self.kind}
        if self.is_ordinal:
            d["categories"] = list(self.categories)
        if self.bin_edges is not None:
            d["bin_edges"] = list(self.bin_edges)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("kind", ORDINAL), tuple(d.get("categories", ())), d.get("bin_edges"))


def _labels(labels, n, prefix):
    if labels is None:
        return tuple(f"{prefix}{i}" for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise ValueError(f"expected {n} {prefix} labels, got {len(labels)}")
    if len(set(labels)) != n:
        raise ValueError(f"duplicate {prefix} labels")
    return labels


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Immutable three-way dataset (observations x variables x contexts).

    Parameters
    ----------
    values : array-like of shape (n_obs, n_vars, n_ctx)
        Cell values; NaN marks a missing cell. Ordinal variables hold
        integer category codes.
    domains : sequence of VariableDomain, optional
        One per variable. Defaults to real-valued for every variable.
    temporal : bool
        Whether the context axis is an ordered time axis.
    obs_labels, var_labels, ctx_labels : sequence of str, optional
    """

    values: np.ndarray
    domains: tuple = None
    temporal: bool = False
    obs_labels: tuple = None
    var_labels: tuple = None
    ctx_labels: tuple = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 3:
            raise ValueError(f"values must be 3-dimensional, got shape {values.shape}")
        n, m, p = values.shape
        if min(n, m, p) < 1:
            raise ValueError(f"every axis needs at least one element, got {values.shape}")
        domains = self.domains
        if domains is None:
            domains = tuple(VariableDomain.real() for _ in range(m))
        domains = tuple(domains)
        if len(domains) != m:
            raise ValueError(f"expected {m} domains, got {len(domains)}")
        for j, dom in enumerate(domains):
            if not dom.is_ordinal:
                continue
            col = values[:, j, :]
            obs = col[~np.isnan(col)]
            if obs.size and (
                np.any(obs != np.round(obs)) or obs.min() < 0 or obs.max() >= dom.cardinality
            ):
                raise DomainMismatchError(
                    f"variable {j} holds codes outside 0..{dom.cardinality - 1}"
                )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domains", domains)
        object.__setattr__(self, "temporal", bool(self.temporal))
        object.__setattr__(self, "obs_labels", _labels(self.obs_labels, n, "x"))
        object.__setattr__(self, "var_labels", _labels(self.var_labels, m, "y"))
        object.__setattr__(self, "ctx_labels", _labels(self.ctx_labels, p, "z"))

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_obs(self):
        return self.values.shape[0]

    @property
    def n_vars(self):
        return self.values.shape[1]

    @property
    def n_ctx(self):
        return self.values.shape[2]

    @property
    def is_ordinal(self):
        return all(d.is_ordinal for d in self.domains)

    @property
    def cardinalities(self):
        return tuple(d.cardinality for d in self.domains)

    def codes(self):
        """Integer category codes with -1 for missing cells."""
        if not self.is_ordinal:
            raise TypeError("codes() requires an ordinal tensor; discretize first")
        out = np.full(self.values.shape, -1, dtype=np.int32)
        ok = ~np.isnan(self.values)
        out[ok] = self.values[ok].astype(np.int32)
        return out

    def replace(self, **changes):
        kwargs = dict(
            values=self.values,
            domains=self.domains,
            temporal=self.temporal,
            obs_labels=self.obs_labels,
            var_labels=self.var_labels,
            ctx_labels=self.ctx_labels,
        )
        kwargs.update(changes)
        return Tensor3(**kwargs)

    def equals(self, other, rtol=0.0):
        """Cell- and metadata-wise comparison; ``rtol`` applies to real variables."""
        if not isinstance(other, Tensor3) or self.shape != other.shape:
            return False
        meta = ("domains", "temporal", "obs_labels", "var_labels", "ctx_labels")
        if any(getattr(self, a) != getattr(other, a) for a in meta):
            return False
        return bool(np.allclose(self.values, other.values, rtol=rtol, atol=0.0, equal_nan=True))

    def __eq__(self, other):
        return self.equals(other)

    __hash__ = None

    def __repr__(self):
        n, m, p = self.shape
        return f"Tensor3({n}x{m}x{p}, temporal={self.temporal})"


@dataclass(frozen=True)
class Tricluster:
    """Index sets (I, J, K) of a subspace; ``contiguous`` flags a run of contexts."""

    obs_idx: tuple
    var_idx: tuple
    ctx_idx: tuple
    contiguous: bool = False

    def __post_init__(self):
        for name in ("obs_idx", "var_idx", "ctx_idx"):
            idx = tuple(int(i) for i in getattr(self, name))
            if not idx:
                raise ValueError(f"{name} must be non-empty")
            if len(set(idx)) != len(idx):
                raise ValueError(f"{name} has duplicate indices")
            if min(idx) < 0:
                raise ValueError(f"{name} has negative indices")
            object.__setattr__(self, name, tuple(sorted(idx)))
        if self.contiguous and not self.is_run:
            raise ValueError(f"contexts {self.ctx_idx} are flagged contiguous but are not a run")

    @property
    def is_run(self):
        k = self.ctx_idx
        return k[-1] - k[0] + 1 == len(k)

    @property
    def shape(self):
        return len(self.obs_idx), len(self.var_idx), len(self.ctx_idx)

    def check_bounds(self, t):
        for name, idx, size in (
            ("obs_idx", self.obs_idx, t.n_obs),
            ("var_idx", self.var_idx, t.n_vars),
            ("ctx_idx", self.ctx_idx, t.n_ctx),
        ):
            if idx[-1] >= size:
                raise IndexError(f"{name} index {idx[-1]} out of bounds for size {size}")

    def cells(self, t):
        """The sub-array ``t.values[I][:, J][:, :, K]``."""
        self.check_bounds(t)
        return t.values[np.ix_(self.obs_idx, self.var_idx, self.ctx_idx)]

    def contains(self, other):
        return (
            set(other.obs_idx) <= set(self.obs_idx)
            and set(other.var_idx) <= set(self.var_idx)
            and set(other.ctx_idx) <= set(self.ctx_idx)
        )


@dataclass(frozen=True, eq=False)
class Pattern:
    """Expected category per (variable, context) cell of a tricluster.

    ``values[a, b]`` is the code for ``var_idx[a]`` at ``ctx_idx[b]``.
    ``non_constant`` lists the (j, k) cells whose block varied across I.
    """

    var_idx: tuple
    ctx_idx: tuple
    values: np.ndarray
    non_constant: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.int64, copy=True)
        if values.shape != (len(self.var_idx), len(self.ctx_idx)):
            raise ValueError(
                f"pattern shape {values.shape} does not match "
                f"{len(self.var_idx)}x{len(self.ctx_idx)}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "var_idx", tuple(int(j) for j in self.var_idx))
        object.__setattr__(self, "ctx_idx", tuple(int(k) for k in self.ctx_idx))
        object.__setattr__(self, "non_constant", frozenset(self.non_constant))

    @property
    def cells(self):
        """Mapping ``(j, k) -> category code``."""
        return {
            (j, k): int(self.values[a, b])
            for a, j in enumerate(self.var_idx)
            for b, k in enumerate(self.ctx_idx)
        }

    @property
    def is_constant(self):
        return not self.non_constant

    def slice(self, k):
        """Mapping ``j -> code`` for context ``k`` (the slice pattern)."""
        b = self.ctx_idx.index(k)
        return {j: int(self.values[a, b]) for a, j in enumerate(self.var_idx)}

    def labels(self, t):
        return [
            [t.domains[j].categories[int(c)] for c in row]
            for j, row in zip(self.var_idx, self.values)
        ]

    def __eq__(self, other):
        return (
            isinstance(other, Pattern)
            and self.var_idx == other.var_idx
            and self.ctx_idx == other.ctx_idx
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def extract_pattern(t: Tensor3, tc: Tricluster, warn: bool = True) -> Pattern:
    """Modal category of each (j, k) block over the tricluster's observations.

    Ties go to the lowest category code. Blocks that are not constant are
    recorded in ``Pattern.non_constant`` and, if ``warn``, reported with a
    :class:`NonConstantCellWarning`.

    Raises
    ------
    MissingDataError
        If any cell of the tricluster is missing.
    """
    for j in tc.var_idx:
        if not t.domains[j].is_ordinal:
            raise TypeError(f"variable {j} is real-valued; discretize before extracting patterns")
    block = tc.cells(t)
    if np.isnan(block).any():
        raise MissingDataError(f"tricluster {tc.shape} covers missing cells")
    block = block.astype(np.int64)
    n_j, n_k = block.shape[1], block.shape[2]
    values = np.empty((n_j, n_k), dtype=np.int64)
    non_constant = set()
    for a in range(n_j):
        for b in range(n_k):
            col = block[:, a, b]
            values[a, b] = np.bincount(col).argmax()
            if np.any(col != col[0]):
                non_constant.add((tc.var_idx[a], tc.ctx_idx[b]))
    if non_constant and warn:
        warnings.warn(
            f"{len(non_constant)} non-constant cell(s) in tricluster {tc.shape}",
            NonConstantCellWarning,
            stacklevel=2,
        )
    return Pattern(tc.var_idx, tc.ctx_idx, values, frozenset(non_constant))


def pattern_support(t: Tensor3, tc: Tricluster, pattern: Pattern) -> int:
    """Number of observations in I whose cells match the whole pattern."""
    block = tc.cells(t)
    return int(np.all(block == pattern.values[None, :, :], axis=(1, 2)).sum())


def from_codes(codes, cardinality, temporal=False, **labels) -> Tensor3:
    """Build an ordinal tensor from an integer array (negative = missing)."""
    codes = np.asarray(codes)
    values = codes.astype(float)
    values[codes < 0] = np.nan
    m = codes.shape[1]
    if isinstance(cardinality, (int, np.integer)):
        cardinality = [int(cardinality)] * m
    domains = tuple(VariableDomain.ordinal(c) for c in cardinality)
    return Tensor3(values, domains, temporal, **labels)


def check_ordinal(t: Tensor3, variables: Sequence[int] | None = None):
    variables = range(t.n_vars) if variables is None else variables
    bad = [j for j in variables if not t.domains[j].is_ordinal]
    if bad:
        raise TypeError(f"variables {bad} are real-valued; discretize first")
