import math
import unittest
from fractions import Fraction

import numpy as np

from szhatie.algebra import CASE_IDS, family
from szhatie.representations import (
    InvalidParam,
    ScheduleKind,
    UnknownCase,
    bessel_mode,
    case_parameters,
    commutator_residual,
    contraction_case,
    iso2_ladder,
    ladder_consistency_residual,
    limit_representation,
    realize,
    su2_ladder,
)
from szhatie.spaces import EmbeddingKind, bump, bump_product
from szhatie.special import DomainError, bessel_j

LINE_PROBES = [bump(0.0, 1.0), bump(0.5, 0.75)]
LINE_GRID = (np.linspace(-1.0, 1.25, 200),)
HALF_LINE_PROBES = [bump(1.25, 0.75), bump(1.0, 0.5)]
HALF_LINE_GRID = (np.linspace(0.5, 2.0, 200),)
_theta, _phi = np.meshgrid(np.linspace(1.05, 1.95, 20), np.linspace(2.05, 3.95, 10), indexing="ij")
DISC_PROBES = [bump_product(bump(1.5, 0.5), bump(3.0, 1.0))]
DISC_GRID = (_theta.ravel(), _phi.ravel())


def _probes_for(case_id: str) -> tuple[list, tuple]:
    if case_id == "sl2-to-iso11":
        return HALF_LINE_PROBES, HALF_LINE_GRID
    if case_id == "su2-to-iso2":
        return DISC_PROBES, DISC_GRID
    return LINE_PROBES, LINE_GRID


class ParameterTests(unittest.TestCase):
    def test_defaults(self) -> None:
        params = case_parameters("g-lambda-to-h")
        self.assertEqual(params["A"], 1)
        self.assertEqual(params["lambda"], Fraction(1, 2))
        self.assertEqual(case_parameters("sl2-to-iso11").to_json(), {"b": "1/4", "sign": "1"})

    def test_overrides_are_exact(self) -> None:
        params = case_parameters("ea-to-h", {"A": "3/2"})
        self.assertEqual(params.at(Fraction(1, 10)), {"A": Fraction(3, 2), "a": 15, "b": -15})
        self.assertEqual(case_parameters("ea-to-h", {"A": 0.1})["A"], Fraction(1, 10))

    def test_derived_parameters(self) -> None:
        self.assertEqual(case_parameters("su2-to-iso2", {"R": 2}).at(Fraction(1, 50))["l"], 100)
        self.assertEqual(case_parameters("sl2-to-iso11").at(Fraction(1, 16))["n_squared"], 16)
        g = case_parameters("g-lambda-to-h", {"lambda": -1}).at(Fraction(1, 2))
        self.assertEqual((g["a"], g["b"]), (1, -1))

    def test_invalid_parameters(self) -> None:
        with self.assertRaises(UnknownCase):
            case_parameters("su3-to-h")
        with self.assertRaises(InvalidParam):
            case_parameters("ea-to-h", {"R": 1})
        with self.assertRaises(InvalidParam):
            case_parameters("ea-to-h", {"A": 0})
        with self.assertRaises(InvalidParam):
            case_parameters("g-lambda-to-h", {"lambda": 1})
        with self.assertRaises(InvalidParam):
            case_parameters("sl2-to-iso11", {"sign": 2})
        with self.assertRaises(InvalidParam):
            case_parameters("su2-to-iso2", {"R": -1})
        with self.assertRaises(InvalidParam):
            case_parameters("ea-to-h").at(Fraction(0))


class HomomorphismTests(unittest.TestCase):
    def test_every_family_member_is_a_homomorphism(self) -> None:
        for case_id in CASE_IDS:
            probes, grid = _probes_for(case_id)
            index = 3 if case_id == "su2-to-iso2" else 5 if case_id == "sl2-to-iso11" else None
            rep = realize(case_id, case_parameters(case_id), 1, index=index)
            with self.subTest(case=case_id):
                self.assertLessEqual(commutator_residual(rep, probes, grid), 1e-8)

    def test_lambda_grid(self) -> None:
        for case_id in ("g-lambda-to-h", "l-lambda-to-h"):
            for lam in (-1, Fraction(1, 2), 2):
                rep = realize(case_id, case_parameters(case_id, {"lambda": lam}), 1)
                with self.subTest(case=case_id, lam=lam):
                    self.assertEqual(rep.algebra.lam, Fraction(lam))
                    self.assertLessEqual(commutator_residual(rep, LINE_PROBES, LINE_GRID), 1e-8)

    def test_kirillov_indices_and_branches(self) -> None:
        for n in range(2, 7):
            for sign in (1, -1):
                params = case_parameters("sl2-to-iso11", {"sign": sign})
                rep = realize("sl2-to-iso11", params, 1, index=n)
                with self.subTest(n=n, sign=sign):
                    self.assertLessEqual(commutator_residual(rep, HALF_LINE_PROBES, HALF_LINE_GRID), 1e-8)

    def test_limit_representations(self) -> None:
        for case_id in CASE_IDS:
            probes, grid = _probes_for(case_id)
            if case_id == "su2-to-iso2":
                grid = (np.linspace(1.05, 1.95, 20), np.linspace(2.05, 3.95, 20))
            rep = limit_representation(case_id, case_parameters(case_id))
            with self.subTest(case=case_id):
                self.assertLessEqual(commutator_residual(rep, probes, grid), 1e-8)

    def test_limit_algebras_match_edge_targets(self) -> None:
        for case_id in CASE_IDS:
            case = contraction_case(case_id)
            with self.subTest(case=case_id):
                self.assertEqual(case.limit().algebra.structure, case.edge.target.structure)


class LadderTests(unittest.TestCase):
    def _matrix(self, l: int, k: int) -> np.ndarray:
        size = 2 * l + 1
        matrix = np.zeros((size, size), dtype=complex)
        for m in range(-l, l + 1):
            for target, c in su2_ladder(l, m, k).items():
                matrix[target + l, m + l] = c
        return matrix

    def test_su2_ladder_matrices_satisfy_brackets(self) -> None:
        su2 = family("su2")
        for l in (1, 2, 5):
            mats = [self._matrix(l, k) for k in range(3)]
            for i in range(3):
                for j in range(3):
                    expected = sum(float(c) * mats[k] for k, c in enumerate(su2.structure[i][j]))
                    np.testing.assert_allclose(mats[i] @ mats[j] - mats[j] @ mats[i], expected, atol=1e-12)

    def test_su2_ladder_is_skew_hermitian(self) -> None:
        for k in range(3):
            matrix = self._matrix(4, k)
            np.testing.assert_allclose(matrix.conj().T, -matrix, atol=1e-15)

    def test_su2_ladder_edges(self) -> None:
        self.assertNotIn(4, su2_ladder(3, 3, "X1"))
        self.assertNotIn(-4, su2_ladder(3, -3, "X2"))
        self.assertEqual(su2_ladder(3, 2, "X3"), {2: 2j})
        with self.assertRaises(DomainError):
            su2_ladder(2, 3, 0)
        with self.assertRaises(DomainError):
            su2_ladder(2, 1, "X4")

    def test_iso2_ladder_brackets(self) -> None:
        radius, m = 1.5, 2

        def act(k: int, vector: dict[int, complex]) -> dict[int, complex]:
            out: dict[int, complex] = {}
            for n, c in vector.items():
                for target, d in iso2_ladder(radius, n, k).items():
                    out[target] = out.get(target, 0j) + c * d
            return out

        def commutator(i: int, j: int) -> dict[int, complex]:
            first, second = act(i, act(j, {m: 1.0})), act(j, act(i, {m: 1.0}))
            keys = set(first) | set(second)
            return {n: first.get(n, 0j) - second.get(n, 0j) for n in keys}

        def close(a: dict[int, complex], b: dict[int, complex]) -> bool:
            return all(abs(a.get(n, 0j) - b.get(n, 0j)) < 1e-14 for n in set(a) | set(b))

        self.assertTrue(close(commutator(2, 0), act(1, {m: 1.0})))
        self.assertTrue(close(commutator(2, 1), {n: -c for n, c in act(0, {m: 1.0}).items()}))
        self.assertTrue(close(commutator(0, 1), {}))

    def test_ladder_matches_operators(self) -> None:
        theta, phi = np.meshgrid(np.linspace(0.3, 2.8, 12), np.linspace(0.2, 6.0, 12), indexing="ij")
        for l in (1, 3, 6):
            self.assertLessEqual(ladder_consistency_residual(l, 1, (theta.ravel(), phi.ravel())), 1e-10)

    def test_matrix_element_closed_form(self) -> None:
        for l in (10, 200):
            value = su2_ladder(l, 0, "X2")[1] / l
            self.assertAlmostEqual(value, -0.5j * math.sqrt(1 + 1 / l), delta=1e-12)


class ContractionCaseTests(unittest.TestCase):
    def test_schedule_and_embedding_kinds(self) -> None:
        self.assertIs(contraction_case("su2-to-iso2").schedule_kind, ScheduleKind.SEQUENTIAL_L)
        self.assertIs(contraction_case("sl2-to-iso11").schedule_kind, ScheduleKind.SEQUENTIAL_N)
        self.assertIs(contraction_case("ea-to-h").schedule_kind, ScheduleKind.CONTINUOUS)
        self.assertIs(contraction_case("iso2-to-h").embedding_kind, EmbeddingKind.ZERO_EXTENSION)
        self.assertIs(contraction_case("sl2-to-h").embedding_kind, EmbeddingKind.ZERO_EXTENSION)
        self.assertIs(contraction_case("su2-to-iso2").embedding_kind, EmbeddingKind.BASIS_INDEX_MAP)
        self.assertIs(contraction_case("c-to-g1").embedding_kind, EmbeddingKind.IDENTITY)

    def test_eps_for_index(self) -> None:
        self.assertEqual(contraction_case("su2-to-iso2", {"R": 2}).eps_for_index(50), Fraction(1, 25))
        self.assertEqual(contraction_case("sl2-to-iso11", {"b": 1}).eps_for_index(4), Fraction(1, 4))
        with self.assertRaises(InvalidParam):
            contraction_case("ea-to-h").eps_for_index(3)

    def test_degree_must_be_integral(self) -> None:
        with self.assertRaises(InvalidParam):
            realize("su2-to-iso2", case_parameters("su2-to-iso2"), Fraction(3, 10))
        with self.assertRaises(InvalidParam):
            realize("sl2-to-iso11", case_parameters("sl2-to-iso11"), Fraction(1, 5))
        self.assertIn("n=4", realize("sl2-to-iso11", case_parameters("sl2-to-iso11"), Fraction(1, 16)).label)

    def test_ea_scaled_generator_converges_linearly(self) -> None:
        case = contraction_case("ea-to-h")
        f = bump(0.0, 1.0)
        x = np.linspace(-0.95, 0.95, 77)
        errors = []
        for eps in (Fraction(1, 10), Fraction(1, 100), Fraction(1, 1000)):
            lhs = case.scaled_operator(1, eps).evaluate(f, x)
            rhs = case.target_operator(1).evaluate(f, x)
            errors.append(float(np.max(np.abs(lhs - rhs))))
        self.assertLess(errors[2], errors[1])
        self.assertLess(errors[1], errors[0])
        self.assertAlmostEqual(errors[1] / errors[2], 10.0, delta=0.5)

    def test_kirillov_x_generator_is_eps_independent(self) -> None:
        case = contraction_case("sl2-to-iso11")
        f = bump(1.25, 0.75)
        x = np.linspace(0.6, 1.9, 50)
        target = case.target_operator(0).evaluate(f, x)
        for n in (4, 16, 64):
            lhs = case.scaled_operator(0, case.eps_for_index(n), n).evaluate(f, x)
            np.testing.assert_allclose(lhs, target, atol=1e-12)

    def test_limit_map_for_basis_probes(self) -> None:
        case = contraction_case("su2-to-iso2")
        with self.assertRaises(InvalidParam):
            case.limit_map(bump(0.0, 1.0))


class BesselModeTests(unittest.TestCase):
    def test_values_and_phi_derivative(self) -> None:
        mode = bessel_mode(-2, 1.5)
        r, phi = np.array([0.5, 2.0]), np.array([0.3, 1.1])
        expected = (1j) ** 2 * bessel_j(-2, 1.5 * r) * np.exp(-2j * phi)
        np.testing.assert_allclose(mode(r, phi), expected, atol=1e-15)
        np.testing.assert_allclose(mode.derivative((0, 1), r, phi), -2j * expected, atol=1e-15)
        with self.assertRaises(ValueError):
            mode.derivative((1, 0), r, phi)


if __name__ == "__main__":
    unittest.main()
