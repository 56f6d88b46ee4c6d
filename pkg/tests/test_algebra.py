import unittest
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from szhatie.algebra import (
    CASE_IDS,
    DivergenceError,
    LaurentMonomial,
    LaurentPoly,
    LieAlgebra3,
    LinearMap3,
    NotALieAlgebra,
    ScalingMap,
    ScalingParseError,
    SingularMap,
    UnknownCase,
    algebra_from_json,
    algebra_to_json,
    bracket,
    catalog,
    change_basis,
    classify,
    contract,
    contraction_edge,
    contraction_graph,
    family,
    jacobi_residual,
    killing_form,
    parse_scaling_spec,
    scaling_from_json,
    verify_isomorphism,
)

X1 = (1, 0, 0)
X2 = (0, 1, 0)
X3 = (0, 0, 1)
ZERO = (Fraction(0),) * 3
E = LaurentMonomial(1, 1)
ONE = LaurentMonomial(1)


class LaurentTests(unittest.TestCase):
    def test_parse_monomials(self) -> None:
        self.assertEqual(LaurentMonomial.parse("e"), LaurentMonomial(1, 1))
        self.assertEqual(LaurentMonomial.parse("-e"), LaurentMonomial(-1, 1))
        self.assertEqual(LaurentMonomial.parse("1/2"), LaurentMonomial(Fraction(1, 2), 0))
        self.assertEqual(LaurentMonomial.parse("2e^-1"), LaurentMonomial(2, -1))
        self.assertEqual(LaurentMonomial.parse("-3/4e^2"), LaurentMonomial(Fraction(-3, 4), 2))

    def test_parse_rejects_garbage(self) -> None:
        for text in ("", "x", "e^", "1/0", "ee"):
            with self.subTest(text=text):
                with self.assertRaises(ScalingParseError):
                    LaurentMonomial.parse(text)

    def test_zero_monomial_is_canonical(self) -> None:
        self.assertEqual(LaurentMonomial(0, 5), LaurentMonomial(0, 0))

    def test_poly_drops_zero_terms(self) -> None:
        poly = LaurentPoly.from_mapping({-1: Fraction(1), 0: Fraction(0), 2: Fraction(3)})
        self.assertEqual(poly.terms, ((-1, Fraction(1)), (2, Fraction(3))))
        self.assertTrue(poly.has_negative_exponents)
        cancelled = poly - poly
        self.assertTrue(cancelled.is_zero)

    def test_poly_product(self) -> None:
        a = LaurentPoly.from_mapping({-1: Fraction(1), 1: Fraction(1)})
        squared = a * a
        self.assertEqual(squared.as_mapping(), {-2: 1, 0: 2, 2: 1})

    def test_singular_scaling_rejected(self) -> None:
        zero = LaurentMonomial(0)
        with self.assertRaises(SingularMap):
            ScalingMap.diagonal(E, zero, ONE)

    def test_scaling_spec_and_json(self) -> None:
        scaling = parse_scaling_spec("diag:e,e,1")
        self.assertEqual(scaling, ScalingMap.diagonal(E, E, ONE))
        self.assertEqual(scaling_from_json(scaling.to_json()), scaling)
        self.assertEqual(str(scaling), "diag:e,e,1")
        with self.assertRaises(ScalingParseError):
            parse_scaling_spec("diag:e,e")


class BracketTests(unittest.TestCase):
    def test_su2_bracket(self) -> None:
        self.assertEqual(bracket(family("su2"), X1, X2), (0, 0, 1))

    def test_heisenberg_brackets(self) -> None:
        h = family("h")
        self.assertEqual(bracket(h, X3, X2), (1, 0, 0))
        self.assertEqual(bracket(h, X1, X2), ZERO)

    def test_self_bracket_vanishes(self) -> None:
        for alg in catalog():
            with self.subTest(alg=alg.display_name):
                self.assertEqual(bracket(alg, (1, 2, 3), (1, 2, 3)), ZERO)

    def test_catalog_satisfies_jacobi(self) -> None:
        for lam in (Fraction(-1), Fraction(1, 2), Fraction(2)):
            for alg in catalog(lam_g=lam, lam_l=lam):
                with self.subTest(alg=alg.display_name):
                    self.assertEqual(jacobi_residual(alg), 0)

    def test_perturbed_structure_breaks_jacobi(self) -> None:
        alg = LieAlgebra3.from_brackets(
            "custom", {(2, 3): (2, 0, 0), (3, 1): (0, 1, 0), (1, 2): (0, 0, 1)}
        )
        self.assertNotEqual(jacobi_residual(alg), 0)

    def test_catalog_special_members(self) -> None:
        iso11 = family("iso11")
        self.assertEqual(bracket(iso11, X3, X1), (1, 0, 0))
        self.assertEqual(bracket(iso11, X3, X2), (0, -1, 0))
        self.assertEqual(family("iso2"), family("l", 0))
        ab = family("ab")
        self.assertTrue(all(bracket(ab, a, b) == ZERO for a in (X1, X2, X3) for b in (X1, X2, X3)))
        self.assertEqual(len(catalog()), 8)

    def test_antisymmetry_enforced(self) -> None:
        structure = [[ZERO] * 3 for _ in range(3)]
        structure[0][1] = (0, 0, 1)
        with self.assertRaises(NotALieAlgebra):
            LieAlgebra3("custom", tuple(tuple(row) for row in structure))

    def test_json_round_trip(self) -> None:
        alg = family("l", Fraction(1, 3))
        self.assertEqual(algebra_from_json(algebra_to_json(alg)), alg)


class ContractTests(unittest.TestCase):
    def test_su2_to_iso2(self) -> None:
        limit = contract(family("su2"), ScalingMap.diagonal(E, E, ONE))
        self.assertEqual(bracket(limit, X3, X1), (0, 1, 0))
        self.assertEqual(bracket(limit, X3, X2), (-1, 0, 0))
        self.assertEqual(bracket(limit, X1, X2), ZERO)

    def test_identity_scaling_is_noop(self) -> None:
        for alg in catalog():
            with self.subTest(alg=alg.display_name):
                self.assertEqual(contract(alg, ScalingMap.identity()), alg)

    def test_divergent_scaling(self) -> None:
        with self.assertRaises(DivergenceError) as ctx:
            contract(family("su2"), ScalingMap.diagonal(ONE, ONE, E))
        self.assertIn((1, 2, 3, -1), ctx.exception.entries)

    def test_ea_edge_isomorphism(self) -> None:
        edge = contraction_edge("ea-to-h")
        self.assertEqual(verify_isomorphism(edge.contracted(), family("h"), edge.psi), 0)

    def test_swap_is_not_a_homomorphism_of_h(self) -> None:
        swap = LinearMap3(((0, 1, 0), (1, 0, 0), (0, 0, 1)))
        self.assertNotEqual(verify_isomorphism(family("h"), family("h"), swap), 0)

    def test_singular_witness(self) -> None:
        with self.assertRaises(SingularMap):
            verify_isomorphism(family("h"), family("h"), LinearMap3(((1, 0, 0), (0, 0, 0), (0, 0, 1))))


class ClassifyTests(unittest.TestCase):
    def test_contracted_su2_is_iso2(self) -> None:
        result = classify(contract(family("su2"), ScalingMap.diagonal(E, E, ONE)))
        self.assertEqual((result.tag, result.lam), ("l", 0))
        self.assertEqual(result.witness, LinearMap3.identity())

    def test_heisenberg_identity_witness(self) -> None:
        result = classify(family("h"))
        self.assertEqual((result.tag, result.lam, result.witness), ("h", None, LinearMap3.identity()))

    def test_permuted_g_is_canonicalised(self) -> None:
        permuted = change_basis(family("g", 2), LinearMap3(((0, 1, 0), (1, 0, 0), (0, 0, 1))))
        result = classify(permuted)
        self.assertEqual((result.tag, result.lam), ("g", Fraction(1, 2)))
        self.assertEqual(verify_isomorphism(permuted, family("g", Fraction(1, 2)), result.witness), 0)

    def test_negative_l_parameter_folds(self) -> None:
        result = classify(family("l", -3))
        self.assertEqual((result.tag, result.lam), ("l", 3))

    def test_every_family_classifies_to_itself(self) -> None:
        for alg in catalog(lam_g=Fraction(-1, 3), lam_l=Fraction(2)):
            with self.subTest(alg=alg.display_name):
                result = classify(alg)
                self.assertEqual((result.tag, result.lam), (alg.label, alg.lam))

    def test_killing_form_signature(self) -> None:
        self.assertEqual(killing_form(family("su2"))[0][0], -2)
        self.assertEqual(killing_form(family("sl2"))[1][1], 2)

    def test_compact_form_without_rational_witness(self) -> None:
        alg = LieAlgebra3.from_brackets(
            "custom", {(1, 2): (0, 0, 2), (2, 3): (6, 0, 0), (3, 1): (0, 2, 0)}
        )
        result = classify(alg)
        self.assertEqual(result.tag, "su2")
        self.assertIsNone(result.witness)

    def test_not_a_lie_algebra(self) -> None:
        alg = LieAlgebra3.from_brackets(
            "custom", {(2, 3): (2, 0, 0), (3, 1): (0, 1, 0), (1, 2): (0, 0, 1)}
        )
        with self.assertRaises(NotALieAlgebra):
            classify(alg)


_entries = st.integers(min_value=-3, max_value=3)


def _invertible_maps() -> st.SearchStrategy[LinearMap3]:
    return (
        st.lists(_entries, min_size=9, max_size=9)
        .map(lambda v: LinearMap3((tuple(v[0:3]), tuple(v[3:6]), tuple(v[6:9]))))
        .filter(lambda m: m.determinant() != 0)
    )


class ClassifyPropertyTests(unittest.TestCase):
    @settings(max_examples=200, deadline=None)
    @given(
        _invertible_maps(),
        st.sampled_from(["ab", "h", "ea", "c", "g", "l", "su2", "sl2"]),
        st.fractions(min_value=-1, max_value=1, max_denominator=6).filter(lambda v: v != 0),
        st.fractions(min_value=0, max_value=3, max_denominator=6),
    )
    def test_classification_is_basis_independent(
        self, basis: LinearMap3, tag: str, lam_g: Fraction, lam_l: Fraction
    ) -> None:
        lam = {"g": lam_g, "l": lam_l}.get(tag)
        alg = family(tag, lam)
        result = classify(change_basis(alg, basis))
        self.assertEqual((result.tag, result.lam), (tag, lam))
        if result.witness is not None:
            self.assertEqual(
                verify_isomorphism(change_basis(alg, basis), alg, result.witness), 0
            )


class ContractionGraphTests(unittest.TestCase):
    def test_ten_edges(self) -> None:
        edges = contraction_graph()
        self.assertEqual(tuple(edge.case_id for edge in edges), CASE_IDS)
        self.assertFalse(any(edge.target.label in {"su2", "sl2"} for edge in edges))
        sl2_targets = sorted(edge.target.display_name for edge in edges if edge.source.label == "sl2")
        self.assertEqual(sl2_targets, ["g(-1)", "h", "l(0)"])

    def test_every_edge_contracts_onto_its_target(self) -> None:
        for edge in contraction_graph(lam_g=Fraction(2), lam_l=Fraction(-1, 2)):
            with self.subTest(edge=edge.case_id):
                contracted = edge.contracted()
                self.assertEqual(edge.residual(), 0)
                result = classify(contracted)
                self.assertEqual((result.tag, result.lam), (edge.target.label, edge.target.lam))

    def test_iso11_to_h_instance(self) -> None:
        edge = contraction_edge("g-lambda-to-h", -1)
        self.assertEqual(edge.source, family("iso11"))
        self.assertEqual(edge.residual(), 0)

    def test_unknown_edge(self) -> None:
        with self.assertRaises(UnknownCase):
            contraction_edge("su2-to-h")


if __name__ == "__main__":
    unittest.main()
