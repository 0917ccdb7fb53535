"""Synthetic ordinal tensors with planted constant triclusters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import PlantingConflictError
from .tensor import Pattern, Tensor3, Tricluster, VariableDomain

UNIFORM = "uniform"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class GenSpec:
    """Generator settings.

    Size ranges are inclusive ``(low, high)`` pairs. The defaults mirror the
    usual benchmark setting: 1000 x 50 x 50, five plantings with 50-500
    observations, 2-4 variables and 2-4 contexts.
    """

    n_obs: int = 1000
    n_vars: int = 50
    n_ctx: int = 50
    background: str = UNIFORM
    mu: float = 0.0
    sigma: float = 30.0
    cardinality: int = 5
    n_planted: int = 5
    obs_range: tuple = (50, 500)
    var_range: tuple = (2, 4)
    ctx_range: tuple = (2, 4)
    contiguous: bool = True
    temporal: bool = True
    seed: int = 0
    max_retries: int = 100

    def __post_init__(self):
        for name in ("obs_range", "var_range", "ctx_range"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()

    def validate(self):
        if min(self.n_obs, self.n_vars, self.n_ctx) < 1:
            raise ValueError("axis sizes must be >= 1")
        if self.cardinality < 2:
            raise ValueError("cardinality must be >= 2")
        if self.n_planted < 0:
            raise ValueError("n_planted must be >= 0")
        if self.background not in (UNIFORM, GAUSSIAN):
            raise ValueError(f"background must be 'uniform' or 'gaussian', got {self.background!r}")
        if self.background == GAUSSIAN and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        for name, size in (("obs_range", self.n_obs), ("var_range", self.n_vars), ("ctx_range", self.n_ctx)):
            lo, hi = getattr(self, name)
            if self.n_planted and not 1 <= lo <= hi <= size:
                raise ValueError(f"{name}={lo, hi} must satisfy 1 <= low <= high <= {size}")

    def to_dict(self):
        d = asdict(self)
        for name in ("obs_range", "var_range", "ctx_range"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True)
class PlantingManifest:
    """Ground truth: planted triclusters and their patterns, in planting order."""

    triclusters: tuple = field(default_factory=tuple)
    patterns: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.triclusters)

    def __iter__(self):
        return iter(zip(self.triclusters, self.patterns))


def gaussian_codes(x, cardinality, mu, sigma):
    """Equal-width bins over [mu - 3 sigma, mu + 3 sigma]; outliers clipped."""
    lo, hi = mu - 3 * sigma, mu + 3 * sigma
    codes = np.floor((x - lo) / (hi - lo) * cardinality).astype(np.int64)
    return np.clip(codes, 0, cardinality - 1)


def _draw(rng, spec):
    n_i = int(rng.integers(spec.obs_range[0], spec.obs_range[1] + 1))
    n_j = int(rng.integers(spec.var_range[0], spec.var_range[1] + 1))
    n_k = int(rng.integers(spec.ctx_range[0], spec.ctx_range[1] + 1))
    I = np.sort(rng.choice(spec.n_obs, n_i, replace=False))
    J = np.sort(rng.choice(spec.n_vars, n_j, replace=False))
    if spec.contiguous:
        start = int(rng.integers(0, spec.n_ctx - n_k + 1))
        K = np.arange(start, start + n_k)
    else:
        K = np.sort(rng.choice(spec.n_ctx, n_k, replace=False))
    pattern = rng.integers(0, spec.cardinality, size=(n_j, n_k))
    return I, J, K, pattern


def generate(spec: GenSpec):
    """Draw a background tensor and overwrite it with constant plantings.

    Returns
    -------
    (Tensor3, PlantingManifest)

    Raises
    ------
    PlantingConflictError
        If a planting keeps contradicting earlier ones on shared cells after
        ``spec.max_retries`` redraws.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    shape = (spec.n_obs, spec.n_vars, spec.n_ctx)
    if spec.background == UNIFORM:
        codes = rng.integers(0, spec.cardinality, size=shape)
    else:
        codes = gaussian_codes(rng.normal(spec.mu, spec.sigma, size=shape), spec.cardinality, spec.mu, spec.sigma)

    planted = np.full(shape, -1, dtype=np.int64)
    triclusters, patterns = [], []
    for n in range(spec.n_planted):
        for _ in range(spec.max_retries + 1):
            I, J, K, pattern = _draw(rng, spec)
            region = planted[np.ix_(I, J, K)]
            taken = region >= 0
            if not np.any(taken & (region != pattern[None, :, :])):
                break
        else:
            raise PlantingConflictError(
                f"planting {n} still conflicted after {spec.max_retries} redraws "
                f"(shape {len(I)}x{len(J)}x{len(K)}); lower n_planted or the size ranges"
            )
        block = np.broadcast_to(pattern[None, :, :], (len(I), len(J), len(K)))
        planted[np.ix_(I, J, K)] = block
        codes[np.ix_(I, J, K)] = block
        triclusters.append(Tricluster(I, J, K, contiguous=spec.contiguous))
        patterns.append(Pattern(J, K, pattern))

    domains = tuple(VariableDomain.ordinal(spec.cardinality) for _ in range(spec.n_vars))
    t = Tensor3(codes.astype(float), domains, temporal=spec.temporal)
    return t, PlantingManifest(tuple(triclusters), tuple(patterns))


def verify_plantings(t: Tensor3, manifest: PlantingManifest) -> bool:
    """True when every planted cell of ``t`` equals its manifest pattern."""
    for tc, pattern in manifest:
        block = tc.cells(t)
        if not np.array_equal(block, np.broadcast_to(pattern.values[None], block.shape)):
            return False
    return True
