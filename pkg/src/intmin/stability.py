"""Stability classification of pair potentials and minimiser existence.

A potential is unstable (catastrophic) when some probability measure has
energy strictly below half the value of W at infinity. Instability is
what makes a compactly supported global minimiser exist, so this module
both classifies potentials and produces the witness measures the bound
pipeline consumes.

Sufficient instability tests implemented here:

* divergence: w_inf = +inf  (any uniform ball then lies below the level);
* negative space integral of W - w_inf (computed by adaptive quadrature
  with an analytic tail completion);
* an explicit uniform-ball witness with energy below w_inf / 2.

A nonnegative integral proves nothing either way and is reported as
undetermined, except for the delta-equality shortcut: when the profile
never dips below its limit and W(0) equals that limit, the point mass
attains the stability level exactly and a minimiser exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import integrate, special, stats

from .errors import PotentialValidationError, QuadratureError
from .potential import PotentialProfile, validate_hypotheses

__all__ = [
    "QuadratureOptions",
    "BallWitness",
    "StabilityReport",
    "sphere_surface_area",
    "classify",
    "morse_criterion",
    "morse_space_integral",
    "uniform_ball_energy",
    "monte_carlo_ball_energy",
    "instability_witness",
    "minimiser_existence",
]

MONTE_CARLO_SEED = 0x5EED


@dataclass(frozen=True)
class QuadratureOptions:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    limit: int = 200
    tail_log_cut: float = 45.0  # exponential tails truncated at rate*r > this


@dataclass(frozen=True)
class BallWitness:
    """A uniform ball whose energy lies below the stability level."""

    radius: float
    energy: float


@dataclass(frozen=True)
class StabilityReport:
    verdict: str  # "unstable" | "boundary_stable" | "undetermined"
    reason: str  # "w_infinity_divergent" | "negative_integral" | "witness_found"
    #              | "delta_equality" | "integral_nonnegative"
    integral_value: Optional[float]  # integral of W - w_inf over R^d
    witness: Optional[BallWitness]
    existence_verdict: str  # "minimiser_exists" | "no_minimiser" | "unknown"
    quadrature_error: Optional[float] = None
    note: str = ""

    def as_dict(self) -> dict:
        d = {
            "verdict": self.verdict,
            "reason": self.reason,
            "integral_value": self.integral_value,
            "witness": None
            if self.witness is None
            else {"radius": self.witness.radius, "energy": self.witness.energy},
            "existence_verdict": self.existence_verdict,
            "quadrature_error": self.quadrature_error,
            "note": self.note,
        }
        return d


def sphere_surface_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)


def morse_criterion(cr: float, ca: float, lr: float, la: float, d: int) -> bool:
    """Closed-form sufficient instability test for the two-exponential
    family: shorter repulsion range and repulsion strength below the
    range ratio to the d-th power."""
    if min(cr, ca, lr, la) <= 0:
        raise PotentialValidationError("morse parameters must be strictly positive")
    return lr < la and cr / ca < (la / lr) ** d


def morse_space_integral(cr: float, ca: float, lr: float, la: float, d: int) -> float:
    """Exact space integral of the two-exponential profile over R^d."""
    return sphere_surface_area(d) * special.gamma(d) * (cr * lr**d - ca * la**d)


def _exponential_tail_integral(c: float, rate: float, r_cut: float, d: int) -> float:
    # integral_{r_cut}^inf r**(d-1) c exp(-rate (r - r_cut)) dr, d integer
    total = 0.0
    for k in range(d):
        total += math.comb(d - 1, k) * r_cut ** (d - 1 - k) * math.gamma(k + 1) / rate ** (k + 1)
    return c * total


def _space_integral(profile: PotentialProfile, opts: QuadratureOptions):
    """sigma_{d-1} * integral_0^inf r**(d-1) (w(r) - w_inf) dr.

    Returns (value, error_estimate, note); value may be -inf or +inf for
    divergent power tails, decided by exponent comparison.
    """
    d = profile.dimension
    w_inf = profile.value_at_infinity
    sigma = sphere_surface_area(d)

    def integrand(r):
        return r ** (d - 1) * (float(profile.value(r)) - w_inf)

    tail = profile.tail
    if tail.kind == "exponential":
        r_cut = opts.tail_log_cut / tail.rate
        val, err = integrate.quad(
            integrand, 0.0, r_cut, epsabs=opts.abs_tol, epsrel=opts.rel_tol,
            limit=opts.limit,
        )
        c = float(profile.value(r_cut)) - w_inf
        val += _exponential_tail_integral(c, tail.rate, r_cut, d)
        return sigma * val, sigma * err, ""
    if tail.kind == "power":
        p = tail.exponent
        if d + p >= 0:  # r**(d-1+p) not integrable at infinity
            probe = 10.0 ** np.arange(2, 7)
            signs = np.sign(np.asarray(profile.value(probe), dtype=float) - w_inf)
            if np.all(signs < 0):
                return -math.inf, 0.0, "tail below the limit; integral diverges to -inf"
            if np.all(signs > 0):
                return (
                    math.inf,
                    0.0,
                    "positive part of W - w_inf not integrable; integral test inapplicable",
                )
            return math.nan, math.nan, "tail sign indeterminate; integral test inapplicable"
        # convergent power tail: truncate where the remainder is negligible
        r_cut = 100.0
        while True:
            c = abs(float(profile.value(r_cut)) - w_inf)
            rem = c * r_cut**d / abs(d + p)
            if rem < 0.5 * opts.abs_tol or r_cut > 1e12:
                break
            r_cut *= 2.0
        val, err = integrate.quad(
            integrand, 0.0, r_cut, epsabs=opts.abs_tol, epsrel=opts.rel_tol,
            limit=opts.limit,
        )
        c = (float(profile.value(r_cut)) - w_inf) / r_cut**p
        val += c * r_cut ** (d + p) / (-(d + p))
        return sigma * val, sigma * err, ""
    raise QuadratureError("cannot integrate a profile with a divergent tail")


def _tilde_plus_integrable(profile: PotentialProfile) -> Optional[bool]:
    """Whether the positive part of W - w_inf is integrable (None when
    not determined). Needed by the existence theorem for finite w_inf."""
    w_inf = profile.value_at_infinity
    if math.isinf(w_inf):
        return True  # vacuous: the condition only applies to finite limits
    if not profile.origin_integrable:
        return False
    tail = profile.tail
    if tail.kind == "exponential":
        return True
    if tail.kind == "power":
        if tail.exponent < -profile.dimension:
            return True
        # divergent tail: integrable iff the tail approaches from below
        probe = 10.0 ** np.arange(2, 7)
        vals = np.asarray(profile.value(probe), dtype=float) - w_inf
        if np.all(vals <= 0):
            return True
        return False
    return None


def _theorem_applicable(profile: PotentialProfile) -> bool:
    """Preconditions of the existence characterisation: the admissibility
    core plus integrable positive part (radial symmetry replaces the
    tail-growth condition for these profiles)."""
    report = validate_hypotheses(profile)
    if not report.core_hold:
        return False
    return _tilde_plus_integrable(profile) is True


def classify(
    profile: PotentialProfile, quad: QuadratureOptions | None = None
) -> StabilityReport:
    """Classify a potential via the divergence / negative-integral tests
    plus the delta-equality shortcut; report-only, never raises on an
    inconclusive outcome."""
    opts = quad or QuadratureOptions()
    w_inf = profile.value_at_infinity
    applicable = _theorem_applicable(profile)

    if math.isinf(w_inf) and w_inf > 0:
        return StabilityReport(
            verdict="unstable",
            reason="w_infinity_divergent",
            integral_value=None,
            witness=None,
            existence_verdict="minimiser_exists" if applicable else "unknown",
        )

    try:
        integral, err, note = _space_integral(profile, opts)
    except QuadratureError as exc:
        return StabilityReport(
            verdict="undetermined",
            reason="integral_nonnegative",
            integral_value=None,
            witness=None,
            existence_verdict="unknown",
            note=f"quadrature failed: {exc}",
        )
    if math.isnan(integral):
        return StabilityReport(
            verdict="undetermined",
            reason="integral_nonnegative",
            integral_value=None,
            witness=None,
            existence_verdict="unknown",
            note=note,
        )
    if integral < 0 and _tilde_plus_integrable(profile) is True:
        return StabilityReport(
            verdict="unstable",
            reason="negative_integral",
            integral_value=integral,
            witness=None,
            existence_verdict="minimiser_exists" if applicable else "unknown",
            quadrature_error=err,
            note=note,
        )
    if integral < 0:
        return StabilityReport(
            verdict="undetermined",
            reason="integral_nonnegative",
            integral_value=integral,
            witness=None,
            existence_verdict="unknown",
            quadrature_error=err,
            note="negative integral but positive part not integrable; test inapplicable",
        )

    # Delta-equality shortcut: profile never dips below its limit and the
    # origin value attains it, so the point mass sits exactly at the level.
    scale = max(1.0, abs(w_inf))
    if (
        profile.lower_bound >= w_inf - 1e-12 * scale
        and abs(profile.value_at_origin - w_inf) <= 1e-12 * scale
    ):
        return StabilityReport(
            verdict="boundary_stable",
            reason="delta_equality",
            integral_value=integral,
            witness=None,
            existence_verdict="minimiser_exists",
            quadrature_error=err,
        )
    return StabilityReport(
        verdict="undetermined",
        reason="integral_nonnegative",
        integral_value=integral,
        witness=None,
        existence_verdict="unknown",
        quadrature_error=err,
        note=note,
    )


def _ball_distance_density(s: np.ndarray, radius: float, d: int) -> np.ndarray:
    """Density of |X - Y| for X, Y independent uniform points in a d-ball,
    via the normalised overlap volume of two balls (regularised
    incomplete beta)."""
    s = np.asarray(s, dtype=float)
    u = np.clip(1.0 - (s / (2.0 * radius)) ** 2, 0.0, 1.0)
    overlap = special.betainc((d + 1) / 2.0, 0.5, u)
    return d * s ** (d - 1) / radius**d * overlap


def uniform_ball_energy(
    profile: PotentialProfile,
    radius: float,
    quad: QuadratureOptions | None = None,
) -> float:
    """Energy of the uniform probability measure on the closed ball of the
    given radius: (1/2) integral_0^{2R} w(s) f_d(s; R) ds."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not profile.origin_integrable:
        raise PotentialValidationError(
            "potential is not locally integrable near the origin; "
            "the uniform-ball energy diverges"
        )
    opts = quad or QuadratureOptions()
    d = profile.dimension

    def integrand(s):
        return float(profile.value(s)) * _ball_distance_density(s, radius, d)

    val, err = integrate.quad(
        integrand,
        0.0,
        2.0 * radius,
        epsabs=opts.abs_tol,
        epsrel=opts.rel_tol,
        limit=opts.limit,
    )
    return 0.5 * val


def _qmc_ball_points(n: int, d: int, radius: float, seed: int):
    """Scrambled low-discrepancy pairs of uniform points in a d-ball."""
    sob = stats.qmc.Sobol(d=2 * (d + 1), scramble=True, seed=seed)
    u = sob.random(n)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)

    def block(cols_dir, col_r):
        g = special.ndtri(u[:, cols_dir])
        norms = np.sqrt(np.sum(g * g, axis=1))
        norms[norms == 0.0] = 1.0
        r = radius * u[:, col_r] ** (1.0 / d)
        return g / norms[:, None] * r[:, None]

    x = block(slice(0, d), 2 * d)
    y = block(slice(d, 2 * d), 2 * d + 1)
    return x, y


def monte_carlo_ball_energy(
    profile: PotentialProfile,
    radius: float,
    n_samples: int = 2**20,
    seed: int = MONTE_CARLO_SEED,
) -> tuple[float, float]:
    """Quasi-Monte-Carlo estimate of the uniform-ball energy.

    Returns (estimate, standard_error); the standard error is the plain
    sample estimate, conservative for scrambled low-discrepancy points.
    """
    d = profile.dimension
    x, y = _qmc_ball_points(n_samples, d, radius, seed)
    r = np.sqrt(np.sum((x - y) ** 2, axis=1))
    vals = np.asarray(profile.value(r), dtype=float)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_samples))
    return 0.5 * mean, 0.5 * se


@dataclass(frozen=True)
class WitnessScanOptions:
    steps: int = 20
    base_radius: Optional[float] = None  # default max(monotone radius, 1)
    tolerance: float = 1e-9


def instability_witness(
    profile: PotentialProfile,
    scan: WitnessScanOptions | None = None,
    quad: QuadratureOptions | None = None,
) -> Optional[BallWitness]:
    """Scan uniform balls on a geometric radius grid for one with energy
    below w_inf / 2; the returned radius doubles as the instability
    radius of the bound pipeline. None when no grid radius qualifies."""
    opts = scan or WitnessScanOptions()
    r0 = opts.base_radius
    if r0 is None:
        r0 = max(profile.monotone_radius or 0.0, 1.0)
    w_inf = profile.value_at_infinity
    for k in range(opts.steps + 1):
        radius = r0 * 2.0**k
        energy = uniform_ball_energy(profile, radius, quad)
        if math.isinf(w_inf) and w_inf > 0:
            if math.isfinite(energy):
                return BallWitness(radius, energy)
        elif energy < 0.5 * w_inf - opts.tolerance:
            return BallWitness(radius, energy)
    return None


def minimiser_existence(
    profile: PotentialProfile,
    report: StabilityReport | None = None,
    scan: WitnessScanOptions | None = None,
    quad: QuadratureOptions | None = None,
) -> StabilityReport:
    """Render the existence verdict, upgrading an undetermined
    classification through a witness scan when one succeeds."""
    rep = report if report is not None else classify(profile, quad)
    if rep.verdict != "undetermined":
        return rep
    witness = instability_witness(profile, scan, quad)
    if witness is None:
        return rep
    applicable = _theorem_applicable(profile)
    return replace(
        rep,
        verdict="unstable",
        reason="witness_found",
        witness=witness,
        existence_verdict="minimiser_exists" if applicable else "unknown",
    )
