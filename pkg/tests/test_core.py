import json
import math

import numpy as np
import pytest
import scipy.integrate as si
from hypothesis import given, settings
from hypothesis import strategies as hst

from levylab.core import (
    BaseSpace,
    CallableFunction,
    ConicSequence,
    DiscreteMeasure,
    SimplexSequence,
    StepFunction,
    conic_part,
    functional_f_a,
    log1p_integral,
    log_integral,
    normalize,
)
from levylab.errors import DomainError, NotInGroup, ZeroMass


def measure(locs, charges, tail=0.0):
    return DiscreteMeasure(np.asarray(locs, float), np.asarray(charges, float), tail)


class TestDiscreteMeasure:
    def test_sorts_non_increasing_and_caches_total(self):
        eta = measure([0.1, 0.9, 0.5], [0.5, 1.0, 0.7])
        assert np.all(np.diff(eta.charges) <= 0)
        assert eta.charges[0] == 1.0 and eta.locations[0] == 0.9
        assert eta.total_charge == pytest.approx(2.2, rel=1e-12)

    def test_rejects_bad_atoms(self):
        with pytest.raises(ValueError):
            measure([0.5], [0.0])
        with pytest.raises(ValueError):
            measure([1.5], [1.0])
        with pytest.raises(ValueError):
            measure([0.5], [1.0], tail=-1.0)

    def test_stable_sort_keeps_tied_order(self):
        eta = measure([0.1, 0.2, 0.3], [1.0, 2.0, 1.0])
        assert list(eta.locations) == [0.2, 0.1, 0.3]

    def test_json_roundtrip_is_exact(self):
        eta = measure([0.12345678901234567, 0.5], [1.0 / 3.0, 0.1], tail=1e-9)
        back = DiscreteMeasure.from_json(eta.to_json())
        assert np.array_equal(back.locations, eta.locations)
        assert np.array_equal(back.charges, eta.charges)
        assert back.tail_bound == eta.tail_bound

    def test_json_shape(self):
        eta = measure([0.25], [2.0])
        payload = json.loads(eta.to_json())
        assert payload == {"atoms": [{"x": 0.25, "z": 2.0}], "tail_bound": 0.0}

    def test_atoms_view(self):
        eta = measure([0.3, 0.6], [2.0, 1.0])
        assert [(a.location, a.charge) for a in eta.atoms] == [(0.3, 2.0), (0.6, 1.0)]


class TestFunctionalAndDecomposition:
    def test_zero_function_gives_zero(self):
        eta = measure([0.2, 0.8], [1.0, 2.0])
        assert functional_f_a(StepFunction.constant(0.0), eta) == 0.0

    def test_unit_function_gives_total_charge(self):
        eta = measure([0.2, 0.8, 0.4], [1.0, 1.0, 0.5])
        assert functional_f_a(StepFunction.constant(1.0), eta) == pytest.approx(2.5)

    def test_identity_map_hand_sum(self):
        # 0.25*1.0 + 0.5*0.5 = 0.5
        eta = measure([0.25, 0.5], [1.0, 0.5])
        a = CallableFunction(lambda x: x, 0.0, 1.0, log_summable=True)
        assert functional_f_a(a, eta) == pytest.approx(0.5, abs=1e-15)

    def test_conic_part_sorts_and_conserves_mass(self):
        eta = measure([0.1, 0.9], [0.5, 1.0])
        z = conic_part(eta)
        assert list(z.terms) == [1.0, 0.5]
        assert z.total == pytest.approx(eta.total_charge)

    def test_conic_part_of_empty(self):
        z = conic_part(measure([], []))
        assert len(z) == 0

    def test_normalize_roundtrip(self):
        eta = measure([0.3, 0.7], [2.0, 2.0], tail=1e-6)
        total, unit = normalize(eta)
        assert total == pytest.approx(4.0)
        assert unit.total_charge == pytest.approx(1.0, rel=1e-12)
        assert np.array_equal(unit.locations, eta.locations)
        back = unit.scale(total)
        assert np.allclose(back.charges, eta.charges, rtol=1e-15)

    def test_normalize_zero_mass(self):
        with pytest.raises(ZeroMass):
            normalize(measure([], []))

    @given(hst.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=25, deadline=None)
    def test_conic_commutes_with_scaling(self, c):
        eta = measure([0.2, 0.8, 0.5], [3.0, 1.0, 0.25])
        left = conic_part(eta.scale(c)).terms
        right = c * conic_part(eta).terms
        assert np.allclose(left, right, rtol=1e-14)


class TestSequences:
    def test_conic_invariants(self):
        with pytest.raises(ValueError):
            ConicSequence(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            ConicSequence(np.array([1.0, -1.0]))

    def test_simplex_sum_window(self):
        SimplexSequence(np.array([0.6, 0.4]))
        SimplexSequence(np.array([0.6, 0.3]), tail_tolerance=0.1)
        with pytest.raises(ValueError):
            SimplexSequence(np.array([0.6, 0.2]), tail_tolerance=0.05)


class TestIntegrals:
    BASE1 = BaseSpace(1.0)
    BASE2 = BaseSpace(2.0)

    def test_log_integral_of_one_is_zero(self):
        assert log_integral(StepFunction.constant(1.0), self.BASE1) == 0.0

    def test_log_integral_of_e(self):
        assert log_integral(StepFunction.constant(math.e), self.BASE1) == pytest.approx(1.0)

    def test_log_integral_affine_closed_form(self):
        # 2 * int_0^1 log(1+x) dx = 2*(2 log 2 - 1), cross-checked by quadrature
        a = CallableFunction(lambda x: 1.0 + x, 1.0, 2.0)
        closed = 2.0 * (2.0 * math.log(2.0) - 1.0)
        quad, _ = si.quad(lambda x: math.log(1 + x), 0, 1, epsabs=1e-13)
        assert closed == pytest.approx(2.0 * quad, abs=1e-11)
        assert log_integral(a, self.BASE2) == pytest.approx(closed, abs=1e-10)

    def test_log_integral_rejects_zero_steps(self):
        with pytest.raises(NotInGroup):
            log_integral(StepFunction([0.5], [0.0, 1.0]), self.BASE1)

    def test_log_integral_callable_needs_declaration(self):
        with pytest.raises(NotInGroup):
            log_integral(CallableFunction(lambda x: x, 0.0, 1.0), self.BASE1)
        # x has a summable log once declared
        a = CallableFunction(lambda x: x, 0.0, 1.0, log_summable=True)
        assert log_integral(a, self.BASE1) == pytest.approx(-1.0, abs=1e-9)

    def test_log1p_zero_argument(self):
        a = StepFunction([0.5], [2.0, 0.5])
        assert log1p_integral(a, 0.0, self.BASE1) == 0.0

    def test_log1p_constant(self):
        assert log1p_integral(StepFunction.constant(1.0), 1.0, self.BASE1) == pytest.approx(
            math.log(2.0)
        )

    def test_log1p_identity_map_antiderivative(self):
        a = CallableFunction(lambda x: x, 0.0, 1.0, log_summable=True)
        assert log1p_integral(a, 1.0, self.BASE1) == pytest.approx(
            2.0 * math.log(2.0) - 1.0, abs=1e-10
        )

    def test_log1p_domain_error(self):
        with pytest.raises(DomainError):
            log1p_integral(StepFunction.constant(2.0), -0.5, self.BASE1)

    @given(
        hst.floats(min_value=0.0, max_value=3.0),
        hst.floats(min_value=0.0, max_value=3.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_log1p_monotone_in_z(self, z1, z2):
        a = StepFunction([0.3, 0.6], [0.5, 2.0, 1.0])
        lo, hi = sorted([z1, z2])
        assert log1p_integral(a, lo, self.BASE1) <= log1p_integral(a, hi, self.BASE1) + 1e-12


class TestStepFunctionAlgebra:
    def test_evaluation_boundaries(self):
        a = StepFunction([0.5], [2.0, 0.5])
        assert a(0.0) == 2.0 and a(0.49) == 2.0
        assert a(0.5) == 0.5 and a(1.0) == 0.5

    def test_combine_refines_partitions(self):
        a = StepFunction([0.5], [2.0, 0.5])
        b = StepFunction([0.25], [1.0, 3.0])
        prod = a.combine(b, np.multiply)
        xs = np.array([0.1, 0.3, 0.6])
        assert np.allclose(prod(xs), a(xs) * b(xs))

    def test_reciprocal_and_group_inverse(self):
        a = StepFunction([0.4], [2.0, 0.25])
        ident = a.combine(a.reciprocal(), np.multiply)
        assert np.allclose(ident(np.linspace(0, 1, 17)), 1.0)

    def test_laplace_of_inverse(self):
        a = StepFunction([0.5], [2.0, 0.5])
        s = np.array([0.0, 1.0])
        expect = 0.5 * np.exp(-s / 2.0) + 0.5 * np.exp(-s / 0.5)
        assert np.allclose(a.laplace_of_inverse(s), expect)
