import math
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from szhatie.direct_limit import (
    DLVector,
    compatible_bases_check,
    dl_add,
    dl_equal,
    dl_inner,
    dl_scale,
    example_sequences,
    finite_matrix_element,
    limit_intertwiner,
    matrix_element_limit,
    matrix_element_table,
    matrix_elements_section,
    push,
    spherical_system,
    target_matrix_element,
)
from szhatie.representations import InvalidParam, UnknownCase
from szhatie.special import DomainError

L_SCHEDULE = [10, 20, 50, 100, 200]
_entries = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


@st.composite
def _vectors(draw: st.DrawFn, max_index: int = 6) -> DLVector:
    index = draw(st.integers(min_value=1, max_value=max_index))
    real = draw(st.lists(_entries, min_size=index, max_size=index))
    imag = draw(st.lists(_entries, min_size=index, max_size=index))
    return DLVector.of(index, [complex(a, b) for a, b in zip(real, imag)])


class DirectedSystemTests(unittest.TestCase):
    def test_axioms_hold(self) -> None:
        self.assertEqual(example_sequences(6).axiom_residual(), 0.0)
        self.assertEqual(spherical_system([1, 2, 5]).axiom_residual(), 0.0)

    def test_indices_must_increase(self) -> None:
        with self.assertRaises(ValueError):
            spherical_system([3, 2])

    def test_spherical_embedding_keeps_orders(self) -> None:
        system = spherical_system([1, 3])
        image = push(DLVector.of(1, [1, 2, 3]), 3, system)
        self.assertEqual(image.vector, (0, 0, 1, 2, 3, 0, 0))

    def test_push_validation(self) -> None:
        system = example_sequences(4)
        with self.assertRaises(ValueError):
            push(DLVector.of(3, [1, 2, 3]), 2, system)
        with self.assertRaises(ValueError):
            push(DLVector.of(3, [1, 2]), 4, system)
        with self.assertRaises(ValueError):
            push(DLVector.of(5, [0] * 5), 5, system)


class LimitSpaceTests(unittest.TestCase):
    system = example_sequences(8)

    def test_equality_across_indices(self) -> None:
        self.assertTrue(dl_equal(DLVector.of(2, [1, 2]), DLVector.of(4, [1, 2, 0, 0]), self.system))
        self.assertFalse(dl_equal(DLVector.of(2, [1, 2]), DLVector.of(3, [1, 2, 1]), self.system))

    def test_arithmetic(self) -> None:
        total = dl_add(DLVector.of(1, [1]), DLVector.of(3, [0, 1, 0]), self.system)
        self.assertEqual(total, DLVector.of(3, [1, 1, 0]))
        self.assertEqual(dl_scale(2j, DLVector.of(2, [1, 1]), self.system).vector, (2j, 2j))

    def test_inner_product_is_sesquilinear(self) -> None:
        a, b = DLVector.of(2, [1j, 0]), DLVector.of(1, [1])
        self.assertEqual(dl_inner(a, b, self.system), 1j)
        self.assertEqual(dl_inner(b, a, self.system), -1j)
        with self.assertRaises(ValueError):
            dl_inner(a, b, self.system, k=1)

    @settings(max_examples=1000, deadline=None)
    @given(_vectors(), _vectors())
    def test_inner_product_ignores_the_common_index(self, a: DLVector, b: DLVector) -> None:
        reference = dl_inner(a, b, self.system)
        for k in range(max(a.index, b.index), 9):
            value = dl_inner(a, b, self.system, k=k)
            self.assertAlmostEqual(value, reference, delta=1e-9)

    @settings(max_examples=1000, deadline=None)
    @given(_vectors(), st.integers(min_value=0, max_value=2))
    def test_pushed_vectors_are_equal(self, a: DLVector, shift: int) -> None:
        pushed = push(a, a.index + shift, self.system)
        self.assertTrue(dl_equal(a, pushed, self.system))
        self.assertAlmostEqual(dl_inner(pushed, pushed, self.system), dl_inner(a, a, self.system), delta=1e-9)


class MatrixElementTests(unittest.TestCase):
    def test_closed_form_at_order_zero(self) -> None:
        for l in (10, 200):
            value = finite_matrix_element(1.0, 1, 0, "X2", l)
            self.assertAlmostEqual(value, -0.5j * math.sqrt(1 + 1 / l), delta=1e-12)
        self.assertAlmostEqual(target_matrix_element(1.0, 1, 0, "X2"), -0.5j, delta=1e-15)

    def test_table_converges_within_tolerance(self) -> None:
        series = matrix_element_table(1.0, 3, L_SCHEDULE)
        self.assertEqual(len(series), 3 * 7 * 7)
        for item in series:
            with self.subTest(generator=item.generator, m=item.m, s=item.s):
                self.assertLessEqual(item.final_error, 3e-3)

    def test_rotation_generator_is_exact(self) -> None:
        for item in matrix_element_table(1.0, 2, L_SCHEDULE, generators=(2,)):
            self.assertEqual(item.final_error, 0.0)

    def test_errors_decrease_with_degree(self) -> None:
        series = matrix_element_limit(2.0, 1, 2, "X1", L_SCHEDULE)
        errors = [abs(value - series.target) for _, value in series.values]
        for before, after in zip(errors, errors[1:]):
            self.assertLess(after, before)
        payload = series.as_dict()
        self.assertEqual(payload["generator"], "X1")
        self.assertEqual([v["l"] for v in payload["values"]], L_SCHEDULE)

    def test_orders_must_fit_the_schedule(self) -> None:
        with self.assertRaises(DomainError):
            matrix_element_limit(1.0, 11, 0, 0, L_SCHEDULE)
        with self.assertRaises(DomainError):
            matrix_element_limit(1.0, 0, 0, 0, [])
        with self.assertRaises(DomainError):
            finite_matrix_element(1.0, 0, 0, "X4", 10)

    def test_section_pass_and_fail(self) -> None:
        self.assertTrue(matrix_elements_section(1.0, 3, L_SCHEDULE, 3e-3)["passed"])
        self.assertFalse(matrix_elements_section(1.0, 3, L_SCHEDULE, 1e-6)["passed"])


class CompatibleBasisTests(unittest.TestCase):
    def test_su2_bases_are_compatible(self) -> None:
        result = compatible_bases_check("su2-to-iso2", [5, 10, 20])
        self.assertTrue(result["passed"])
        self.assertTrue(result["indexing"])
        self.assertEqual(result["spans"], {"X1": 2, "X2": 2, "X3": 1})
        self.assertEqual(result["axiom_residual"], 0.0)

    def test_other_cases(self) -> None:
        result = compatible_bases_check("ea-to-h", [5, 10, 20])
        self.assertFalse(result["has_compatible_basis"])
        with self.assertRaises(UnknownCase):
            compatible_bases_check("su3-to-h", [5, 10])

    def test_limit_intertwiner(self) -> None:
        intertwiner = limit_intertwiner("su2-to-iso2")
        self.assertEqual([intertwiner(m) for m in (-2, 0, 3)], [2, 0, -3])
        with self.assertRaises(InvalidParam):
            limit_intertwiner("sl2-to-iso2")
        with self.assertRaises(InvalidParam):
            limit_intertwiner("su2-to-iso2", radius=0.0)


if __name__ == "__main__":
    unittest.main()
