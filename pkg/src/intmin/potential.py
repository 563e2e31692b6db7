"""Radial pair potentials and their admissibility metadata.

A potential is the radial lift W(x) = w(|x|) of a scalar profile w.
Profiles carry the metadata the rest of the library relies on: the value
at the origin, a finite lower bound, the limit at infinity, the radius
beyond which the profile is strictly increasing (when there is one), the
tail decay class, and whether |W| is integrable around the origin.

Built-in families:

* ``power_law``  w(r) = r**a / a - r**b / b, with -d < b < a and the
  convention r**0 / 0 = log(r).
* ``morse``      w(r) = c_r * exp(-r / ell_r) - c_a * exp(-r / ell_a),
  all four parameters strictly positive.
* ``gaussian_bump``  w(r) = r**2 * exp(-r**2).
* ``custom_radial``  user-supplied profile plus declared metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import PotentialValidationError

__all__ = [
    "Tail",
    "PotentialSpec",
    "PotentialProfile",
    "ConditionStatus",
    "AdmissibilityReport",
    "build_profile",
    "evaluate",
    "gradient",
    "validate_hypotheses",
]

FAMILIES = ("power_law", "morse", "gaussian_bump", "custom_radial")


@dataclass(frozen=True)
class Tail:
    """Behaviour of w(r) - w_inf as r grows.

    kind is one of "divergent", "exponential" (|w - w_inf| <= C exp(-rate r)
    eventually) or "power" (w - w_inf ~ c r**exponent).
    """

    kind: str
    rate: float = math.nan
    exponent: float = math.nan

    @classmethod
    def divergent(cls) -> "Tail":
        return cls("divergent")

    @classmethod
    def exponential(cls, rate: float) -> "Tail":
        return cls("exponential", rate=float(rate))

    @classmethod
    def power(cls, exponent: float) -> "Tail":
        return cls("power", exponent=float(exponent))


@dataclass(frozen=True)
class PotentialSpec:
    """A validated request for a pair potential.

    ``params`` holds the family parameters: {"a", "b"} for power_law,
    {"cr", "ca", "lr", "la"} for morse, nothing for gaussian_bump, and a
    profile bundle for custom_radial (see :func:`build_profile`).
    """

    family: str
    dimension: int
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PotentialValidationError(
                f"unknown potential family {self.family!r}; expected one of {FAMILIES}"
            )
        if int(self.dimension) < 1 or self.dimension != int(self.dimension):
            raise PotentialValidationError("dimension must be an integer >= 1")
        object.__setattr__(self, "dimension", int(self.dimension))
        _validate_params(self.family, self.dimension, self.params)


def _validate_params(family: str, dimension: int, params: dict) -> None:
    if family == "power_law":
        try:
            a, b = float(params["a"]), float(params["b"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PotentialValidationError(
                "power_law needs numeric parameters 'a' and 'b'"
            ) from exc
        if not (-dimension < b):
            raise PotentialValidationError(
                f"power_law exponent b={b} must exceed -dimension={-dimension}: "
                "otherwise the potential is not locally integrable at the origin"
            )
        if not (b < a):
            raise PotentialValidationError(
                f"power_law requires b < a (got a={a}, b={b}): otherwise the "
                "attractive term does not dominate and the potential is unbounded below"
            )
    elif family == "morse":
        try:
            vals = {k: float(params[k]) for k in ("cr", "ca", "lr", "la")}
        except (KeyError, TypeError, ValueError) as exc:
            raise PotentialValidationError(
                "morse needs numeric parameters 'cr', 'ca', 'lr', 'la'"
            ) from exc
        bad = [k for k, v in vals.items() if not v > 0]
        if bad:
            raise PotentialValidationError(
                f"morse parameters must be strictly positive; offending: {bad}"
            )
    elif family == "gaussian_bump":
        if params:
            raise PotentialValidationError("gaussian_bump takes no parameters")
    elif family == "custom_radial":
        for key in ("value", "derivative"):
            if not callable(params.get(key)):
                raise PotentialValidationError(
                    f"custom_radial needs a callable {key!r}"
                )
        if "value_at_infinity" not in params:
            raise PotentialValidationError(
                "custom_radial needs 'value_at_infinity' (may be math.inf)"
            )
        if not isinstance(params.get("tail"), Tail):
            raise PotentialValidationError("custom_radial needs a Tail instance under 'tail'")


@dataclass(frozen=True)
class PotentialProfile:
    """Immutable radial profile with analytic metadata.

    ``value`` and ``derivative`` are vectorised over radii; ``value`` is
    defined for r >= 0 (returning +inf where the potential is singular)
    and ``derivative`` for r > 0.
    """

    spec: PotentialSpec
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    value_at_origin: float
    lower_bound: float
    value_at_infinity: float
    monotone_radius: Optional[float]
    tail: Tail
    origin_integrable: bool
    continuous: bool = True

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def singular_at_origin(self) -> bool:
        return math.isinf(self.value_at_origin)


def build_profile(spec: PotentialSpec) -> PotentialProfile:
    """Construct the profile for a validated spec, with analytic metadata
    wherever the family admits it."""
    if spec.family == "power_law":
        return _build_power_law(spec)
    if spec.family == "morse":
        return _build_morse(spec)
    if spec.family == "gaussian_bump":
        return _build_gaussian_bump(spec)
    return _build_custom(spec)


def _power_term(r: np.ndarray, exponent: float) -> np.ndarray:
    # r**p / p with the convention r**0 / 0 = log(r)
    if exponent == 0.0:
        return np.log(r)
    return r**exponent / exponent


def _build_power_law(spec: PotentialSpec) -> PotentialProfile:
    a, b = float(spec.params["a"]), float(spec.params["b"])
    origin = 0.0 if b > 0 else math.inf

    def value(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            w = _power_term(r, a) - _power_term(r, b)
        return np.where(r == 0.0, origin, w)

    def derivative(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return r ** (a - 1.0) - r ** (b - 1.0)

    # Unique critical point at r = 1: w'(r) > 0 iff r**(a-b) > 1.
    w_min = (0.0 if a == 0 else 1.0 / a) - (0.0 if b == 0 else 1.0 / b)
    w_inf = math.inf if a >= 0 else 0.0
    tail = Tail.divergent() if a >= 0 else Tail.power(a)
    return PotentialProfile(
        spec=spec,
        value=value,
        derivative=derivative,
        value_at_origin=origin,
        lower_bound=w_min,
        value_at_infinity=w_inf,
        monotone_radius=1.0,
        tail=tail,
        origin_integrable=True,
    )


def _morse_turning_point(cr, ca, lr, la) -> Optional[float]:
    # Solves w'(r) = 0 for the two-exponential profile; None when the
    # derivative never vanishes on (0, inf).
    if lr == la:
        return None
    ratio = (cr * la) / (ca * lr)
    r = math.log(ratio) / (1.0 / lr - 1.0 / la)
    return r if r > 0 else None


def _build_morse(spec: PotentialSpec) -> PotentialProfile:
    cr, ca = float(spec.params["cr"]), float(spec.params["ca"])
    lr, la = float(spec.params["lr"]), float(spec.params["la"])

    def value(r):
        r = np.asarray(r, dtype=float)
        return cr * np.exp(-r / lr) - ca * np.exp(-r / la)

    def derivative(r):
        r = np.asarray(r, dtype=float)
        return -(cr / lr) * np.exp(-r / lr) + (ca / la) * np.exp(-r / la)

    turning = _morse_turning_point(cr, ca, lr, la)
    if lr < la:
        monotone_radius = turning if turning is not None else 0.0
    elif lr == la:
        monotone_radius = 0.0 if cr < ca else None
    else:
        monotone_radius = None  # tail is strictly decreasing to 0 from above

    candidates = [cr - ca, 0.0]
    if turning is not None:
        candidates.append(float(value(turning)))
    w_min = min(candidates)

    return PotentialProfile(
        spec=spec,
        value=value,
        derivative=derivative,
        value_at_origin=cr - ca,
        lower_bound=w_min,
        value_at_infinity=0.0,
        monotone_radius=monotone_radius,
        tail=Tail.exponential(1.0 / max(lr, la)),
        origin_integrable=True,
    )


def _build_gaussian_bump(spec: PotentialSpec) -> PotentialProfile:
    def value(r):
        r = np.asarray(r, dtype=float)
        return r**2 * np.exp(-(r**2))

    def derivative(r):
        r = np.asarray(r, dtype=float)
        return 2.0 * r * (1.0 - r**2) * np.exp(-(r**2))

    return PotentialProfile(
        spec=spec,
        value=value,
        derivative=derivative,
        value_at_origin=0.0,
        lower_bound=0.0,
        value_at_infinity=0.0,
        monotone_radius=None,  # decays to 0, never increasing at infinity
        tail=Tail.exponential(1.0),
        origin_integrable=True,
    )


def _search_lower_bound(value: Callable, hi: float, w_inf: float) -> float:
    """Lower bound of a profile by grid scan plus bounded golden/Brent
    refinement; endpoints and the limit at infinity enter as candidates."""
    grid = np.concatenate(
        [np.geomspace(1e-8, hi, 2048), np.linspace(0.0, hi, 2049)]
    )
    with np.errstate(all="ignore"):
        vals = np.asarray(value(grid), dtype=float)
    finite = np.isfinite(vals)
    best_idx = int(np.argmin(np.where(finite, vals, np.inf)))
    lo = grid[max(best_idx - 1, 0)]
    up = grid[min(best_idx + 1, grid.size - 1)]
    candidates = [float(vals[finite].min())]
    if up > lo:
        res = optimize.minimize_scalar(
            lambda r: float(value(r)), bounds=(lo, up), method="bounded",
            options={"xatol": 1e-10},
        )
        candidates.append(float(res.fun))
    if math.isfinite(w_inf):
        candidates.append(w_inf)
    v0 = float(value(0.0))
    if math.isfinite(v0):
        candidates.append(v0)
    return min(candidates)


def _bisect_monotone_radius(derivative: Callable, hi: float) -> Optional[float]:
    """Smallest radius beyond which w' stays positive, by grid + bisection
    on w'; requires a declared monotone tail."""
    grid = np.geomspace(1e-6, hi, 4096)
    dv = np.asarray(derivative(grid), dtype=float)
    nonpos = np.where(~(dv > 0))[0]
    if nonpos.size == 0:
        return 0.0
    last = int(nonpos[-1])
    if last == grid.size - 1:
        return None  # derivative not positive even at the end of the scan
    lo, up = grid[last], grid[last + 1]
    for _ in range(200):
        mid = 0.5 * (lo + up)
        if float(derivative(mid)) > 0:
            up = mid
        else:
            lo = mid
        if up - lo <= 1e-14 * max(1.0, up):
            break
    return float(up)


def _build_custom(spec: PotentialSpec) -> PotentialProfile:
    p = spec.params
    value, derivative = p["value"], p["derivative"]
    w_inf = float(p["value_at_infinity"])
    tail: Tail = p["tail"]
    origin = p.get("value_at_origin")
    if origin is None:
        origin = float(value(0.0))
    hi = float(p.get("search_radius", 100.0))
    monotone_radius = None
    if p.get("monotone_tail", False):
        monotone_radius = _bisect_monotone_radius(derivative, hi)
        if monotone_radius is not None:
            hi = max(hi, 10.0 * monotone_radius)
    lower = p.get("lower_bound")
    if lower is None:
        lower = _search_lower_bound(value, hi, w_inf)
    return PotentialProfile(
        spec=spec,
        value=value,
        derivative=derivative,
        value_at_origin=float(origin),
        lower_bound=float(lower),
        value_at_infinity=w_inf,
        monotone_radius=monotone_radius,
        tail=tail,
        origin_integrable=bool(p.get("origin_integrable", True)),
        continuous=bool(p.get("continuous", False)),
    )


def evaluate(profile: PotentialProfile, x) -> float:
    """W(x) = w(|x|) at a point of R^d."""
    x = np.asarray(x, dtype=float)
    r = float(np.sqrt(np.sum(x * x)))
    return float(profile.value(r))


def gradient(profile: PotentialProfile, x) -> Optional[np.ndarray]:
    """Gradient of the radial lift: w'(|x|) x / |x|.

    At the origin, returns the zero vector for profiles with a finite
    value there (the symmetric subgradient choice), and None as the
    singular signal when W(0) = +inf; callers must treat None as an
    infinite repulsion event.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.sqrt(np.sum(x * x)))
    if r == 0.0:
        if profile.singular_at_origin:
            return None
        return np.zeros_like(x)
    return float(profile.derivative(r)) / r * x


@dataclass(frozen=True)
class ConditionStatus:
    status: str  # "holds" | "fails" | "not_determined"
    evidence: str

    @property
    def holds(self) -> bool:
        return self.status == "holds"


@dataclass(frozen=True)
class AdmissibilityReport:
    """Per-condition status of the admissibility requirements:

    * bounded_below           - finite lower bound
    * locally_integrable      - |W| integrable around the origin
    * symmetric               - W(x) = W(-x)
    * has_limit_at_infinity   - w(r) has a limit (possibly +inf)
    * lower_semicontinuous    - profile lower semi-continuous
    * increasing_tail         - strictly increasing beyond some radius
    """

    bounded_below: ConditionStatus
    locally_integrable: ConditionStatus
    symmetric: ConditionStatus
    has_limit_at_infinity: ConditionStatus
    lower_semicontinuous: ConditionStatus
    increasing_tail: ConditionStatus

    def as_dict(self) -> dict:
        return {
            name: {"status": c.status, "evidence": c.evidence}
            for name, c in self.__dict__.items()
        }

    @property
    def core_hold(self) -> bool:
        """All conditions except the tail growth hold."""
        return all(
            c.holds
            for c in (
                self.bounded_below,
                self.locally_integrable,
                self.symmetric,
                self.has_limit_at_infinity,
                self.lower_semicontinuous,
            )
        )


def _detect_decreasing_tail(profile: PotentialProfile) -> Optional[tuple]:
    base = max(1.0, 2.0 * (profile.monotone_radius or 0.0))
    radii = base * 2.0 ** np.arange(0, 9)
    vals = np.asarray(profile.value(radii), dtype=float)
    for i in range(len(radii) - 1):
        if vals[i + 1] < vals[i]:
            return float(radii[i]), float(radii[i + 1])
    return None


def validate_hypotheses(profile: PotentialProfile) -> AdmissibilityReport:
    """Report-only check of the admissibility conditions for a profile."""
    w_min = profile.lower_bound
    bounded = ConditionStatus(
        "holds" if math.isfinite(w_min) else "fails",
        f"lower bound {w_min}",
    )
    integrable = ConditionStatus(
        "holds" if profile.origin_integrable else "fails",
        "profile integrable against r**(d-1) near the origin"
        if profile.origin_integrable
        else "non-integrable singularity at the origin",
    )
    symmetric = ConditionStatus("holds", "radial lift: W(x) = w(|x|) = W(-x)")
    has_limit = ConditionStatus(
        "holds" if not math.isnan(profile.value_at_infinity) else "not_determined",
        f"value at infinity {profile.value_at_infinity}",
    )
    if profile.continuous:
        lsc = ConditionStatus("holds", "profile is continuous")
    else:
        lsc = ConditionStatus(
            "not_determined", "custom profile; continuity not declared"
        )
    if profile.monotone_radius is not None:
        tail = ConditionStatus(
            "holds",
            f"radially strictly increasing beyond {profile.monotone_radius}",
        )
    else:
        pair = _detect_decreasing_tail(profile)
        if pair is not None:
            tail = ConditionStatus(
                "fails", f"w({pair[1]}) < w({pair[0]}): decreasing at infinity"
            )
        else:
            tail = ConditionStatus(
                "not_determined", "no monotone radius and no decrease detected"
            )
    return AdmissibilityReport(
        bounded_below=bounded,
        locally_integrable=integrable,
        symmetric=symmetric,
        has_limit_at_infinity=has_limit,
        lower_semicontinuous=lsc,
        increasing_tail=tail,
    )
