import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intmin import PotentialSpec, Tail, build_profile, evaluate, gradient, validate_hypotheses
from intmin.errors import PotentialValidationError


def power_law(a, b, d=2):
    return build_profile(PotentialSpec("power_law", d, {"a": a, "b": b}))


def morse(cr, ca, lr, la, d=2):
    return build_profile(PotentialSpec("morse", d, {"cr": cr, "ca": ca, "lr": lr, "la": la}))


def bump(d=2):
    return build_profile(PotentialSpec("gaussian_bump", d, {}))


class TestSpecValidation:
    def test_power_law_needs_b_above_minus_d(self):
        with pytest.raises(PotentialValidationError, match="integrable"):
            PotentialSpec("power_law", 2, {"a": 2, "b": -2})

    def test_power_law_needs_b_below_a(self):
        with pytest.raises(PotentialValidationError, match="b < a"):
            PotentialSpec("power_law", 2, {"a": 1, "b": 1})

    def test_morse_needs_positive_parameters(self):
        with pytest.raises(PotentialValidationError, match="positive"):
            PotentialSpec("morse", 2, {"cr": 1, "ca": -2, "lr": 1, "la": 1})

    def test_dimension_at_least_one(self):
        with pytest.raises(PotentialValidationError, match="dimension"):
            PotentialSpec("power_law", 0, {"a": 2, "b": 1})

    def test_unknown_family(self):
        with pytest.raises(PotentialValidationError, match="family"):
            PotentialSpec("lennard_jones", 2, {})


class TestBuiltinProfiles:
    def test_morse_value_at_origin_is_cr_minus_ca(self):
        assert morse(1, 2, 1, 1).value_at_origin == -1.0

    def test_power_law_value_at_one(self):
        # direct evaluation: 1/2 - 1
        assert float(power_law(2, 1).value(1.0)) == pytest.approx(-0.5, abs=1e-15)

    def test_power_law_monotone_radius_is_one(self):
        # w'(r) = r**(a-1) - r**(b-1) > 0 iff r**(a-b) > 1
        assert power_law(2, 1).monotone_radius == 1.0
        assert power_law(3.5, -0.5, 3).monotone_radius == 1.0

    def test_morse_monotone_radius_closed_form(self):
        cr, ca, lr, la = 2.0, 1.0, 0.5, 2.0
        p = morse(cr, ca, lr, la)
        expected = math.log(cr * la / (ca * lr)) / (1 / lr - 1 / la)
        assert p.monotone_radius == pytest.approx(expected, rel=1e-12)
        # derivative changes sign exactly there
        assert float(p.derivative(expected * 0.99)) < 0
        assert float(p.derivative(expected * 1.01)) > 0

    def test_morse_monotone_radius_clamped_at_zero(self):
        # turning point formula is nonpositive: increasing everywhere
        assert morse(1, 2, 0.5, 1).monotone_radius == 0.0

    def test_morse_without_monotone_tail(self):
        assert morse(1, 2, 2, 1).monotone_radius is None

    def test_log_convention(self):
        p = power_law(2, 0)
        r = np.array([0.5, 1.0, 3.0])
        np.testing.assert_allclose(p.value(r), r**2 / 2 - np.log(r), rtol=1e-15)
        p = power_law(0, -1, 3)
        np.testing.assert_allclose(p.value(r), np.log(r) + 1.0 / r, rtol=1e-15)

    def test_value_at_origin_singular_for_nonpositive_b(self):
        assert power_law(2, 0).value_at_origin == math.inf
        assert power_law(2, -1, 3).value_at_origin == math.inf
        assert power_law(2, 1).value_at_origin == 0.0

    def test_value_at_infinity(self):
        assert power_law(2, 1).value_at_infinity == math.inf
        assert power_law(0, -1).value_at_infinity == math.inf
        assert power_law(-0.5, -1).value_at_infinity == 0.0
        assert morse(1, 2, 0.5, 1).value_at_infinity == 0.0
        assert bump().value_at_infinity == 0.0

    def test_power_law_lower_bound_closed_form(self):
        assert power_law(2, 1).lower_bound == pytest.approx(-0.5)
        assert power_law(2, 0).lower_bound == pytest.approx(0.5)

    def test_bump_profile(self):
        p = bump()
        assert float(p.value(0.0)) == 0.0
        assert float(p.value(1.0)) == pytest.approx(math.exp(-1))
        assert p.lower_bound == 0.0
        assert p.monotone_radius is None


@pytest.fixture(scope="module")
def all_builtins():
    return [
        power_law(2, 1),
        power_law(2, 0),
        power_law(2, -1, 3),
        power_law(-0.5, -1.5, 2),
        morse(1, 2, 0.5, 1),
        morse(2, 1, 0.5, 2),
        bump(),
    ]


class TestProfileInvariants:
    def test_symmetry_exact(self, all_builtins):
        rng = np.random.default_rng(0)
        for p in all_builtins:
            x = rng.normal(size=(10_000, p.dimension)) * rng.choice(
                [0.01, 1.0, 100.0], size=(10_000, 1)
            )
            r_plus = np.sqrt((x**2).sum(axis=1))
            r_minus = np.sqrt(((-x) ** 2).sum(axis=1))
            np.testing.assert_array_equal(p.value(r_plus), p.value(r_minus))

    def test_lower_bound_on_log_grid(self, all_builtins):
        r = np.geomspace(1e-6, 1e6, 20_000)
        for p in all_builtins:
            vals = np.asarray(p.value(r), dtype=float)
            assert np.all(vals >= p.lower_bound - 1e-12), p.spec.family

    def test_strict_monotonicity_beyond_radius(self, all_builtins):
        for p in all_builtins:
            r6 = p.monotone_radius
            if r6 is None:
                continue
            r = np.geomspace(max(r6, 1e-3), max(10 * max(r6, 1.0), 50.0), 500)
            vals = np.asarray(p.value(r), dtype=float)
            finite = np.isfinite(vals)
            assert np.all(np.diff(vals[finite]) > 0), p.spec.family

    def test_gradient_matches_finite_differences(self, all_builtins):
        rng = np.random.default_rng(1)
        for p in all_builtins:
            for _ in range(20):
                x = rng.normal(size=p.dimension)
                r = np.linalg.norm(x)
                if r < 1e-2:
                    x *= 1e-2 / r
                g = gradient(p, x)
                h = 1e-6 * max(1.0, np.linalg.norm(x))
                fd = np.zeros_like(x)
                for k in range(p.dimension):
                    e = np.zeros_like(x)
                    e[k] = h
                    fd[k] = (evaluate(p, x + e) - evaluate(p, x - e)) / (2 * h)
                scale = max(np.linalg.norm(g), 1e-10)
                assert np.linalg.norm(g - fd) / scale < 1e-6

    def test_gradient_at_origin(self):
        np.testing.assert_array_equal(gradient(morse(1, 2, 0.5, 1), [0.0, 0.0]), 0.0)
        np.testing.assert_array_equal(gradient(bump(), [0.0, 0.0]), 0.0)
        assert gradient(power_law(2, 0), [0.0, 0.0]) is None  # singular signal

    def test_two_point_gradient_at_equilibrium(self):
        g = gradient(power_law(2, 1), [1.0, 0.0])
        np.testing.assert_allclose(g, [0.0, 0.0], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(
    cr=st.floats(0.1, 10),
    ca=st.floats(0.1, 10),
    lr=st.floats(0.1, 5),
    la=st.floats(0.1, 5),
)
def test_morse_lower_bound_property(cr, ca, lr, la):
    p = morse(cr, ca, lr, la)
    r = np.geomspace(1e-4, 1e3, 2_000)
    assert np.all(np.asarray(p.value(r)) >= p.lower_bound - 1e-12)


@settings(max_examples=40, deadline=None)
@given(
    d=st.integers(1, 4),
    b=st.floats(-0.9, 3.0),
    gap=st.floats(0.1, 3.0),
)
def test_power_law_lower_bound_property(d, b, gap):
    b = max(b, -d + 0.1)
    p = power_law(b + gap, b, d)
    r = np.geomspace(1e-4, 1e4, 2_000)
    vals = np.asarray(p.value(r), dtype=float)
    assert np.all(vals[np.isfinite(vals)] >= p.lower_bound - 1e-12)


class TestAdmissibility:
    def test_morse_core_conditions_hold(self):
        rep = validate_hypotheses(morse(3, 1, 2, 0.5))
        assert rep.bounded_below.holds
        assert rep.locally_integrable.holds
        assert rep.symmetric.holds
        assert rep.has_limit_at_infinity.holds
        assert rep.lower_semicontinuous.holds

    def test_bump_tail_condition_fails(self):
        rep = validate_hypotheses(bump())
        assert rep.increasing_tail.status == "fails"
        assert rep.core_hold

    def test_power_law_all_hold(self):
        rep = validate_hypotheses(power_law(2, 0))
        assert rep.core_hold
        assert rep.increasing_tail.holds

    def test_decaying_morse_tail_fails(self):
        rep = validate_hypotheses(morse(2, 1, 2, 1))  # long-range repulsion
        assert rep.increasing_tail.status == "fails"

    def test_custom_profile_not_determined(self):
        spec = PotentialSpec(
            "custom_radial",
            2,
            {
                "value": lambda r: np.cos(np.asarray(r)) * np.exp(-np.asarray(r)),
                "derivative": lambda r: -(np.sin(np.asarray(r)) + np.cos(np.asarray(r)))
                * np.exp(-np.asarray(r)),
                "value_at_infinity": 0.0,
                "tail": Tail.exponential(1.0),
            },
        )
        rep = validate_hypotheses(build_profile(spec))
        assert rep.lower_semicontinuous.status == "not_determined"


class TestCustomProfiles:
    def test_monotone_radius_by_bisection(self):
        # same shape as the quadratic-log profile: w' = r - 1/r, root at 1
        spec = PotentialSpec(
            "custom_radial",
            2,
            {
                "value": lambda r: np.asarray(r, float) ** 2 / 2
                - np.log(np.asarray(r, float)),
                "derivative": lambda r: np.asarray(r, float)
                - 1.0 / np.asarray(r, float),
                "value_at_infinity": math.inf,
                "tail": Tail.divergent(),
                "value_at_origin": math.inf,
                "monotone_tail": True,
            },
        )
        p = build_profile(spec)
        assert p.monotone_radius == pytest.approx(1.0, rel=1e-9)

    def test_lower_bound_by_search(self):
        spec = PotentialSpec(
            "custom_radial",
            2,
            {
                "value": lambda r: (np.asarray(r, float) - 2.0) ** 2 - 3.0,
                "derivative": lambda r: 2.0 * (np.asarray(r, float) - 2.0),
                "value_at_infinity": math.inf,
                "tail": Tail.divergent(),
                "monotone_tail": True,
            },
        )
        p = build_profile(spec)
        assert p.lower_bound == pytest.approx(-3.0, abs=1e-9)
