"""A-priori bound pipeline and certification of candidate minimisers.

Any global minimiser of an unstable potential with a monotone tail obeys
four quantitative predictions, all computable from the potential alone:

1. the field W * rho is constant on the support (equal to twice the
   energy);
2. every support point carries at least ``mass_floor`` of mass within
   distance ``mass_radius``;
3. no coordinate-aligned empty slab of the support is wider than twice
   the monotone radius;
4. the support diameter is at most ``diameter_bound``.

Failing any check therefore disproves global minimality of a candidate;
passing all four is strong (not conclusive) evidence.

The pipeline is deliberately conservative: it only needs *any* certified
upper bound on the minimum energy within the instability radius, and
using a non-sharp bound can only shrink the guaranteed mass floor and
enlarge the diameter bound, never invalidate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import (
    ParticleConfiguration,
    discrete_energy,
    field_at_particles,
    max_pairwise_distance,
)
from .errors import NoInstabilityWitnessError
from .minimise import MinimiseOptions, minimise_discrete
from .potential import PotentialProfile
from .stability import QuadratureOptions, WitnessScanOptions, instability_witness

__all__ = [
    "WitnessOptions",
    "BoundParameters",
    "ElResidual",
    "LocalMassCheck",
    "CoordinateGap",
    "GapReport",
    "CertifyOptions",
    "CertificateReport",
    "theoretical_bound",
    "euler_lagrange_residual",
    "check_local_mass",
    "detect_gaps",
    "diameter",
    "certify_all",
]


@dataclass(frozen=True)
class WitnessOptions:
    """How to establish the instability radius and the energy bound."""

    scan: WitnessScanOptions = field(default_factory=WitnessScanOptions)
    quadrature: QuadratureOptions = field(default_factory=QuadratureOptions)
    refine: bool = True  # also try a ball-constrained discrete minimisation
    refine_options: Optional[MinimiseOptions] = None  # ball_radius filled in


_DEFAULT_REFINE = MinimiseOptions(
    n=48, restarts=2, max_iters=800, grad_tol=1e-9, seed=0x5EED
)


@dataclass(frozen=True)
class BoundParameters:
    """Certified constants derived from the potential alone."""

    dimension: int
    instability_radius: float  # ball radius with energy below the level
    energy_upper_bound: float  # >= minimum energy within that ball
    split_level: float  # strictly between the bound and w_inf / 2
    far_field_radius: float  # w >= 2 * split_level beyond this radius
    mass_radius: float  # ball radius of the local-mass guarantee
    mass_floor: float  # guaranteed mass in that ball around any support point
    monotone_radius: float  # potential strictly increasing beyond this
    diameter_bound: float  # a-priori support diameter bound
    lower_bound: float  # finite lower bound of the potential
    value_at_infinity: float

    def recompute_mass_floor(self) -> float:
        return (self.split_level - self.energy_upper_bound) / (
            self.split_level - 0.5 * self.lower_bound
        )

    def recompute_diameter_bound(self) -> float:
        pieces = math.ceil(1.0 / self.mass_floor) - 1
        return math.sqrt(self.dimension) * (
            4.0 * self.mass_radius
            + pieces * (4.0 * self.mass_radius + 2.0 * self.monotone_radius)
        )

    def validate(self) -> None:
        """Raise when any structural invariant fails; the stored mass floor
        and diameter bound must recompute bit-exactly from their inputs."""
        if not self.split_level < 0.5 * self.value_at_infinity:
            raise ValueError("split level must lie below half the value at infinity")
        if not self.energy_upper_bound < self.split_level:
            raise ValueError("energy bound must lie below the split level")
        if not math.isfinite(self.split_level):
            raise ValueError("split level must be finite")
        if not (0.0 < self.mass_floor <= 1.0):
            raise ValueError("mass floor must lie in (0, 1]")
        if not self.diameter_bound > 0:
            raise ValueError("diameter bound must be positive")
        if not (self.mass_radius > self.far_field_radius > 0):
            raise ValueError("need mass_radius > far_field_radius > 0")
        if self.mass_floor != self.recompute_mass_floor():
            raise ValueError("stored mass floor does not recompute from its inputs")
        if self.diameter_bound != self.recompute_diameter_bound():
            raise ValueError("stored diameter bound does not recompute from its inputs")

    def as_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "instability_radius": self.instability_radius,
            "energy_upper_bound": self.energy_upper_bound,
            "split_level": self.split_level,
            "far_field_radius": self.far_field_radius,
            "mass_radius": self.mass_radius,
            "mass_floor": self.mass_floor,
            "monotone_radius": self.monotone_radius,
            "diameter_bound": self.diameter_bound,
            "lower_bound": self.lower_bound,
            "value_at_infinity": self.value_at_infinity,
        }


def _far_field_radius(profile: PotentialProfile, level: float) -> float:
    """Smallest radius beyond which w stays >= level, assuming a monotone
    tail; 0 when the profile never drops below the level."""
    r6 = profile.monotone_radius
    if r6 is None:
        raise NoInstabilityWitnessError(
            "no monotone tail radius; far-field radius undefined"
        )
    anchor = max(r6, 1e-12)
    if float(profile.value(anchor)) < level:
        lo, hi = anchor, 2.0 * anchor
        while float(profile.value(hi)) < level:
            hi *= 2.0
            if hi > 1e300:
                raise NoInstabilityWitnessError("profile never reaches the level")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(profile.value(mid)) >= level:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * max(1.0, hi):
                break
        return hi
    # already above the level at the monotone radius: the last crossing,
    # if any, sits below it
    grid = np.linspace(anchor / 4096.0, anchor, 4096)
    vals = np.asarray(profile.value(grid), dtype=float)
    below = np.where(vals < level)[0]
    if below.size == 0:
        return 0.0
    lo = grid[below[-1]]
    hi = grid[min(below[-1] + 1, grid.size - 1)]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(profile.value(mid)) >= level:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return hi


def theoretical_bound(
    profile: PotentialProfile, witness: WitnessOptions | None = None
) -> BoundParameters:
    """Run the bound pipeline: instability radius, certified energy bound,
    split level, far-field radius, mass floor, diameter bound.

    Raises NoInstabilityWitnessError when instability cannot be
    established, in which case no bound exists.
    """
    opts = witness or WitnessOptions()
    found = instability_witness(profile, opts.scan, opts.quadrature)
    if found is None:
        raise NoInstabilityWitnessError("instability not established; bound unavailable")
    if profile.monotone_radius is None:
        raise NoInstabilityWitnessError(
            "potential has no monotone tail radius; the gap and diameter bounds need one"
        )
    s_radius = found.radius
    e_hat = found.energy
    if opts.refine:
        ropts = opts.refine_options or _DEFAULT_REFINE
        ropts = MinimiseOptions(
            n=ropts.n,
            restarts=ropts.restarts,
            max_iters=ropts.max_iters,
            grad_tol=ropts.grad_tol,
            step_rule=ropts.step_rule,
            ball_radius=s_radius,
            recentre=False,
            seed=ropts.seed,
            init_radius=s_radius,
        )
        run = minimise_discrete(profile, ropts)
        # Only the diagonal-on energy is the energy of a genuine probability
        # measure, hence a certified upper bound; singular origins give +inf
        # and the witness energy stands.
        e_disc = discrete_energy(run.config, profile, include_diagonal=True)
        if e_disc < e_hat:
            e_hat = e_disc

    w_inf = profile.value_at_infinity
    if math.isfinite(w_inf):
        level = 0.5 * (e_hat + 0.5 * w_inf)
    else:
        level = e_hat + 1.0
    r_prime = _far_field_radius(profile, 2.0 * level)
    mass_radius = r_prime + max(0.01 * r_prime, 1e-3)
    mass_floor = (level - e_hat) / (level - 0.5 * profile.lower_bound)
    r6 = profile.monotone_radius
    pieces = math.ceil(1.0 / mass_floor) - 1
    diameter_bound = math.sqrt(profile.dimension) * (
        4.0 * mass_radius + pieces * (4.0 * mass_radius + 2.0 * r6)
    )
    return BoundParameters(
        dimension=profile.dimension,
        instability_radius=s_radius,
        energy_upper_bound=e_hat,
        split_level=level,
        far_field_radius=r_prime,
        mass_radius=mass_radius,
        mass_floor=mass_floor,
        monotone_radius=r6,
        diameter_bound=diameter_bound,
        lower_bound=profile.lower_bound,
        value_at_infinity=w_inf,
    )


@dataclass(frozen=True)
class ElResidual:
    constant: float  # twice the diagonal-off energy
    residual_max: float
    residual_rms: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "constant": self.constant,
            "residual_max": self.residual_max,
            "residual_rms": self.residual_rms,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def euler_lagrange_residual(
    config: ParticleConfiguration,
    profile: PotentialProfile,
    el_tolerance: float = 1e-3,
) -> ElResidual:
    """Deviation of the self-excluded field at the particles from the
    constant it must equal on the support of a minimiser (twice the
    energy). The pass threshold is relative: max residual <=
    el_tolerance * max(1, |constant|)."""
    e = discrete_energy(config, profile)
    if not math.isfinite(e):
        raise ValueError("configuration has non-finite energy")
    c = 2.0 * e
    u = field_at_particles(config, profile)
    res = np.abs(u - c)
    res_max = float(res.max())
    res_rms = float(np.sqrt(np.mean(res * res)))
    return ElResidual(
        constant=c,
        residual_max=res_max,
        residual_rms=res_rms,
        tolerance=el_tolerance,
        passed=res_max <= el_tolerance * max(1.0, abs(c)),
    )


@dataclass(frozen=True)
class LocalMassCheck:
    radius: float
    floor: float
    min_found: float
    worst_particle: int
    passed: bool

    def as_dict(self) -> dict:
        return {
            "radius": self.radius,
            "floor": self.floor,
            "min_found": self.min_found,
            "worst_particle": self.worst_particle,
            "passed": self.passed,
        }


def check_local_mass(
    config: ParticleConfiguration, radius: float, floor: float
) -> LocalMassCheck:
    """Mass within the open ball of the given radius around each particle
    (the particle itself counts); passes when the minimum meets the floor."""
    x = config.positions
    w = config.weights
    masses = np.empty(config.n)
    for start in range(0, config.n, 512):
        block = x[start : start + 512]
        diff = block[:, None, :] - x[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        masses[start : start + block.shape[0]] = (dist < radius) @ w
    worst = int(np.argmin(masses))
    return LocalMassCheck(
        radius=radius,
        floor=floor,
        min_found=float(masses[worst]),
        worst_particle=worst,
        passed=bool(masses[worst] >= floor),
    )


@dataclass(frozen=True)
class CoordinateGap:
    coordinate: int
    largest_interior_gap: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class GapReport:
    gaps: list  # CoordinateGap per coordinate
    passed: bool

    def as_dict(self) -> dict:
        return {
            "per_coordinate": [
                {
                    "coordinate": g.coordinate,
                    "largest_interior_gap": g.largest_interior_gap,
                    "bound": g.bound,
                    "passed": g.passed,
                }
                for g in self.gaps
            ],
            "passed": self.passed,
        }


def detect_gaps(
    config: ParticleConfiguration,
    monotone_radius: float,
    weight_floor: float = 0.0,
    slack: float = 1e-9,
) -> GapReport:
    """Largest empty interval between consecutive particle coordinates,
    per coordinate; a minimiser's support allows at most twice the
    monotone radius. Particles below ``weight_floor`` are ignored."""
    mask = config.weights >= weight_floor
    x = config.positions[mask]
    bound = 2.0 * monotone_radius
    gaps = []
    ok = True
    for k in range(config.dimension):
        coords = np.sort(x[:, k])
        gap = float(np.diff(coords).max()) if coords.size > 1 else 0.0
        passed = gap <= bound + slack
        ok = ok and passed
        gaps.append(CoordinateGap(k, gap, bound, passed))
    return GapReport(gaps=gaps, passed=ok)


def diameter(config: ParticleConfiguration) -> float:
    """Exact support diameter (largest pairwise distance)."""
    return max_pairwise_distance(config.positions)


@dataclass(frozen=True)
class CertifyOptions:
    el_tolerance: float = 1e-3
    weight_floor: float = 0.0
    gap_slack: float = 1e-9
    diameter_slack: float = 1e-9
    witness: WitnessOptions = field(default_factory=WitnessOptions)


@dataclass(frozen=True)
class CertificateReport:
    bounds: BoundParameters
    euler_lagrange: ElResidual
    local_mass: LocalMassCheck
    gaps: GapReport
    diameter: float
    passes: dict
    violations: list

    @property
    def all_passed(self) -> bool:
        return all(self.passes.values())

    def as_dict(self) -> dict:
        return {
            "bounds": self.bounds.as_dict(),
            "euler_lagrange": self.euler_lagrange.as_dict(),
            "local_mass": self.local_mass.as_dict(),
            "gaps": self.gaps.as_dict(),
            "diameter": self.diameter,
            "passes": dict(self.passes),
            "violations": list(self.violations),
            "all_passed": self.all_passed,
        }


def certify_all(
    config: ParticleConfiguration,
    profile: PotentialProfile,
    options: CertifyOptions | None = None,
    bounds: BoundParameters | None = None,
) -> CertificateReport:
    """Check a candidate against every quantitative prediction for global
    minimisers. A failed check disproves global minimality; the violation
    list names which prediction broke."""
    opts = options or CertifyOptions()
    if bounds is None:
        bounds = theoretical_bound(profile, opts.witness)
    el = euler_lagrange_residual(config, profile, opts.el_tolerance)
    mass = check_local_mass(config, bounds.mass_radius, bounds.mass_floor)
    gaps = detect_gaps(
        config, bounds.monotone_radius, opts.weight_floor, opts.gap_slack
    )
    diam = diameter(config)
    diam_ok = diam <= bounds.diameter_bound + opts.diameter_slack
    passes = {
        "euler_lagrange": el.passed,
        "local_mass": mass.passed,
        "gaps": gaps.passed,
        "diameter": diam_ok,
    }
    violations = []
    if not el.passed:
        violations.append(
            "euler_lagrange: the field varies on the support beyond tolerance "
            f"(max residual {el.residual_max:.3e} vs constant {el.constant:.3e}); "
            "a global minimiser has a constant field on its support"
        )
    if not mass.passed:
        violations.append(
            f"local_mass: particle {mass.worst_particle} holds only "
            f"{mass.min_found:.3e} mass within radius {mass.radius:.3e} "
            f"(floor {mass.floor:.3e}); a global minimiser keeps at least the "
            "floor mass near every support point"
        )
    if not gaps.passed:
        bad = [g for g in gaps.gaps if not g.passed]
        violations.append(
            "gaps: coordinate(s) "
            + ", ".join(str(g.coordinate) for g in bad)
            + " show empty slabs wider than twice the monotone radius, which a "
            "global minimiser's support cannot have"
        )
    if not diam_ok:
        violations.append(
            f"diameter: support diameter {diam:.6g} exceeds the a-priori bound "
            f"{bounds.diameter_bound:.6g} valid for every global minimiser"
        )
    return CertificateReport(
        bounds=bounds,
        euler_lagrange=el,
        local_mass=mass,
        gaps=gaps,
        diameter=diam,
        passes=passes,
        violations=violations,
    )
