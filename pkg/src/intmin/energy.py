"""Discrete interaction energy of weighted particle configurations.

The energy of a configuration is half the weighted double sum of
W(x_i - x_j). The diagonal terms (i = j) are excluded by default; with
``include_diagonal=True`` they contribute W(0)/2 * sum(w_i**2), which
makes the sum exactly the energy of the particle measure. Reported
energies are meaningless without stating the diagonal convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentSingularPairError
from .potential import PotentialProfile

__all__ = [
    "ParticleConfiguration",
    "discrete_energy",
    "discrete_gradient",
    "potential_field",
    "field_at_particles",
    "max_pairwise_distance",
]

_WEIGHT_SUM_TOL = 1e-12
_TRIU_CACHE: dict = {}


def _triu(n: int):
    pair = _TRIU_CACHE.get(n)
    if pair is None:
        pair = np.triu_indices(n, k=1)
        if len(_TRIU_CACHE) > 8:
            _TRIU_CACHE.clear()
        _TRIU_CACHE[n] = pair
    return pair


@dataclass(frozen=True)
class ParticleConfiguration:
    """N weighted points approximating a probability measure on R^d."""

    positions: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,), positive, summing to 1

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 1:
            raise ValueError("positions must be an (n, d) array with n >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        w = np.array(self.weights, dtype=float)
        if w.shape != (pos.shape[0],):
            raise ValueError("weights must be a vector matching the particle count")
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        pos.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, positions) -> "ParticleConfiguration":
        pos = np.asarray(positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        n = pos.shape[0]
        return cls(pos, np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def translated(self, z) -> "ParticleConfiguration":
        return ParticleConfiguration(self.positions + np.asarray(z, float), self.weights)


def _energy_raw(
    x: np.ndarray, w: np.ndarray, profile: PotentialProfile, include_diagonal: bool
) -> float:
    n = x.shape[0]
    total = 0.0
    if n > 1:
        iu, ju = _triu(n)
        diff = x[iu] - x[ju]
        r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        vals = np.asarray(profile.value(r), dtype=float)
        pw = w[iu] * w[ju]
        s = float(np.dot(pw, vals))
        if not math.isfinite(s):
            if np.any(np.isposinf(vals)):
                return math.inf
            return s
        total += s
    if include_diagonal:
        if profile.singular_at_origin:
            return math.inf
        total += 0.5 * profile.value_at_origin * float(np.dot(w, w))
    return total


def discrete_energy(
    config: ParticleConfiguration,
    profile: PotentialProfile,
    include_diagonal: bool = False,
) -> float:
    """(1/2) sum_{i,j} w_i w_j W(x_i - x_j), diagonal per flag.

    Returns +inf when a counted pair sits at a singularity of W.
    """
    return _energy_raw(config.positions, config.weights, profile, include_diagonal)


def _gradient_raw(x: np.ndarray, w: np.ndarray, profile: PotentialProfile) -> np.ndarray:
    n = x.shape[0]
    diff = x[:, None, :] - x[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    idx = np.arange(n)
    r2[idx, idx] = 1.0
    coincident = r2 == 0.0
    if coincident.any():
        if profile.singular_at_origin:
            i, j = np.argwhere(coincident)[0]
            raise CoincidentSingularPairError(int(i), int(j))
    r = np.sqrt(r2)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        coef = np.asarray(profile.derivative(r), dtype=float) / r
    coef[coincident] = 0.0  # smooth coincident pairs exert no force
    coef[idx, idx] = 0.0
    coef *= w[None, :]
    g = np.einsum("ij,ijk->ik", coef, diff)
    g *= w[:, None]
    return g


def discrete_gradient(
    config: ParticleConfiguration, profile: PotentialProfile
) -> np.ndarray:
    """Gradient of the diagonal-off energy with respect to positions:
    g_i = w_i sum_{j != i} w_j grad W(x_i - x_j)."""
    return _gradient_raw(config.positions, config.weights, profile)


def potential_field(
    config: ParticleConfiguration,
    profile: PotentialProfile,
    query,
    exclude: int | None = None,
) -> float:
    """Field (W * rho)(query) = sum_j w_j W(query - x_j), optionally
    skipping one particle index."""
    q = np.asarray(query, dtype=float)
    diff = config.positions - q[None, :]
    r = np.sqrt(np.sum(diff * diff, axis=1))
    vals = np.asarray(profile.value(r), dtype=float)
    w = config.weights
    if exclude is not None:
        mask = np.ones(config.n, dtype=bool)
        mask[exclude] = False
        vals, w = vals[mask], w[mask]
    if np.any(np.isposinf(vals)):
        return math.inf
    return float(np.dot(w, vals))


def field_at_particles(
    config: ParticleConfiguration, profile: PotentialProfile
) -> np.ndarray:
    """Self-excluded field at every particle: U_i = sum_{j != i} w_j W_ij.

    Consistent with the diagonal-off energy: sum_i w_i U_i = 2 E."""
    x = config.positions
    n = x.shape[0]
    diff = x[:, None, :] - x[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    idx = np.arange(n)
    r[idx, idx] = 1.0
    vals = np.asarray(profile.value(r), dtype=float)
    vals[idx, idx] = 0.0
    return vals @ config.weights


def max_pairwise_distance(positions: np.ndarray, chunk: int = 512) -> float:
    """Exact support diameter of a point set, chunked O(n^2)."""
    x = np.asarray(positions, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    best = 0.0
    for start in range(0, n, chunk):
        block = x[start : start + chunk]
        diff = block[:, None, :] - x[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        best = max(best, float(d2.max()))
    return math.sqrt(best)
