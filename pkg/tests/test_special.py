import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from szhatie.spaces import gauss_nodes
from szhatie.special import (
    DomainError,
    assoc_legendre,
    bessel_j,
    normalized_legendre,
    sph_harm,
    sph_harm_dtheta,
)
from tests import oracles


class BesselTests(unittest.TestCase):
    def test_reference_value(self) -> None:
        self.assertAlmostEqual(bessel_j(1, 1.0), 0.4400505857, delta=1e-9)
        self.assertAlmostEqual(bessel_j(1, 1.0), float(oracles.bessel_j(1, 1.0)), delta=1e-14)

    def test_zero_argument(self) -> None:
        self.assertEqual(bessel_j(0, 0.0), 1.0)
        for m in (1, 2, 5):
            self.assertEqual(bessel_j(m, 0.0), 0.0)

    def test_series_and_recurrence_agree_with_oracle(self) -> None:
        for m in (0, 1, 2, 3, 7, 15):
            for x in (0.3, 2.5, 7.9, 8.1, 12.0, 25.0, 40.0):
                with self.subTest(m=m, x=x):
                    expected = float(oracles.bessel_j(m, x))
                    self.assertAlmostEqual(bessel_j(m, x), expected, delta=1e-12)

    def test_negative_order_and_argument(self) -> None:
        self.assertAlmostEqual(bessel_j(-3, 2.0), -bessel_j(3, 2.0), delta=1e-15)
        self.assertAlmostEqual(bessel_j(-2, 2.0), bessel_j(2, 2.0), delta=1e-15)
        self.assertAlmostEqual(bessel_j(1, -2.0), -bessel_j(1, 2.0), delta=1e-15)

    def test_array_input_keeps_shape(self) -> None:
        values = bessel_j(2, np.array([[0.5, 9.0], [3.0, 30.0]]))
        self.assertEqual(values.shape, (2, 2))
        self.assertAlmostEqual(values[1, 1], float(oracles.bessel_j(2, 30.0)), delta=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=12), st.floats(min_value=0.0, max_value=30.0))
    def test_matches_oracle_on_random_points(self, m: int, x: float) -> None:
        self.assertAlmostEqual(bessel_j(m, x), float(oracles.bessel_j(m, x)), delta=1e-12)


class LegendreTests(unittest.TestCase):
    def test_low_degree_closed_forms(self) -> None:
        x = np.linspace(-1.0, 1.0, 11)
        np.testing.assert_allclose(assoc_legendre(1, 0, x), x, atol=1e-15)
        np.testing.assert_allclose(assoc_legendre(2, 0, x), 1.5 * x**2 - 0.5, atol=1e-15)
        np.testing.assert_allclose(assoc_legendre(1, 1, x), -np.sqrt(1 - x**2), atol=1e-15)
        np.testing.assert_allclose(
            assoc_legendre(1, 1, x, condon_shortley=False), np.sqrt(1 - x**2), atol=1e-15
        )
        np.testing.assert_allclose(assoc_legendre(1, -1, x), np.sqrt(1 - x**2) / 2, atol=1e-15)
        np.testing.assert_allclose(assoc_legendre(2, 2, x), 3 * (1 - x**2), atol=1e-14)

    def test_domain_errors(self) -> None:
        with self.assertRaises(DomainError):
            assoc_legendre(2, 3, 0.5)
        with self.assertRaises(DomainError):
            assoc_legendre(-1, 0, 0.5)
        with self.assertRaises(DomainError):
            normalized_legendre(3, 1, 1.5)
        with self.assertRaises(DomainError):
            normalized_legendre(300, 1, 0.5)

    def test_high_degree_stays_finite(self) -> None:
        values = normalized_legendre(256, 128, np.linspace(-1.0, 1.0, 101))
        self.assertTrue(np.all(np.isfinite(values)))
        self.assertLessEqual(float(np.max(np.abs(values))), 1.0)

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_matches_explicit_series(self, data: st.DataObject) -> None:
        l = data.draw(st.integers(min_value=0, max_value=40))
        k = data.draw(st.integers(min_value=0, max_value=l))
        x = data.draw(st.floats(min_value=-1.0, max_value=1.0))
        expected = float(oracles.normalized_legendre(l, k, x))
        self.assertAlmostEqual(normalized_legendre(l, k, x), expected, delta=1e-10)


class SphericalHarmonicTests(unittest.TestCase):
    def test_north_pole_value(self) -> None:
        for l in (0, 3, 50):
            self.assertAlmostEqual(sph_harm(l, 0, 0.0, 1.3), 1.0, delta=1e-14)
            self.assertAlmostEqual(abs(sph_harm(l, min(l, 2), 0.0, 1.3)), 0.0 if l else 1.0, delta=1e-14)

    def test_phase_convention(self) -> None:
        theta, phi = 0.7, 0.4
        value = sph_harm(3, 2, theta, phi)
        expected = (1j) ** 2 * normalized_legendre(3, 2, math.cos(theta)) * np.exp(-2j * phi)
        self.assertAlmostEqual(value, expected, delta=1e-15)
        # negative orders use |m| in the unit phase and no Condon-Shortley sign
        value = sph_harm(3, -1, theta, phi)
        expected = 1j * normalized_legendre(3, 1, math.cos(theta)) * np.exp(1j * phi)
        self.assertAlmostEqual(value, expected, delta=1e-15)

    def test_orthonormal_under_normalised_sphere_measure(self) -> None:
        l = 4
        theta, wt = gauss_nodes(0.0, math.pi, panels=8)
        phi, wp = gauss_nodes(0.0, 2 * math.pi, panels=8)
        T, P = np.meshgrid(theta, phi, indexing="ij")
        W = np.outer(wt, wp) * (2 * l + 1) * np.sin(T) / (4 * math.pi)
        for m in range(-l, l + 1):
            for s in range(-l, l + 1):
                value = np.sum(W * sph_harm(l, m, T, P) * np.conj(sph_harm(l, s, T, P)))
                with self.subTest(m=m, s=s):
                    self.assertAlmostEqual(complex(value), 1.0 if m == s else 0.0, delta=1e-12)

    def test_theta_derivative_matches_finite_difference(self) -> None:
        theta = np.linspace(0.2, 2.9, 9)
        h = 1e-6
        for l, m in ((5, 0), (5, 2), (12, -3)):
            numeric = (sph_harm(l, m, theta + h, 0.3) - sph_harm(l, m, theta - h, 0.3)) / (2 * h)
            np.testing.assert_allclose(sph_harm_dtheta(l, m, theta, 0.3), numeric, atol=1e-6)


if __name__ == "__main__":
    unittest.main()
