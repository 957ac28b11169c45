"""
Unit tests for modal fields and the frequency grid
"""

import unittest

import numpy as np
from scipy.integrate import trapezoid

from src.errors import ArgumentError
from src.geometry.cross_section import CrossSection
from src.geometry.modal import KGrid, ModalField, energy_lattice


def single(cs, kgrid, j, ell, value=1.0):
    coeffs = np.zeros((kgrid.n_k, cs.l_max), dtype=complex)
    coeffs[j, ell - 1] = value
    return ModalField(cs, kgrid, coeffs)


class TestKGrid(unittest.TestCase):
    """Test cases for the half-offset frequency grid."""

    def test_nodes_symmetric(self):
        """Test symmetry and absence of k = 0."""
        grid = KGrid(k_max=4.0, n_k=64)
        nodes = grid.nodes
        np.testing.assert_allclose(nodes, -nodes[::-1], atol=1e-14)
        self.assertFalse(np.any(nodes == 0.0))
        self.assertAlmostEqual(grid.dk, 0.125)
        self.assertEqual(grid.mirror(0), 63)

    def test_invalid_grid(self):
        """Test validation of n_k and k_max."""
        with self.assertRaises(ArgumentError):
            KGrid(k_max=1.0, n_k=3)
        with self.assertRaises(ArgumentError):
            KGrid(k_max=0.0, n_k=4)


class TestModalField(unittest.TestCase):
    """Test cases for norms, synthesis and generators."""

    def setUp(self):
        """Set up test fixtures."""
        self.cs = CrossSection(a=np.pi, l_max=4)
        self.unit_dk = KGrid(k_max=1.0, n_k=2)     # dk = 1, nodes +/- 0.5
        self.small_dk = KGrid(k_max=0.1, n_k=2)    # dk = 0.1
        self.kgrid = KGrid(k_max=3.0, n_k=24)

    def test_l2_norm_examples(self):
        """Test the Plancherel sum."""
        self.assertAlmostEqual(single(self.cs, self.small_dk, 0, 1).l2_norm(), np.sqrt(0.1), places=12)
        self.assertEqual(ModalField.zeros(self.cs, self.kgrid).l2_norm(), 0.0)
        coeffs = np.zeros((2, 4), dtype=complex)
        coeffs[0, 0], coeffs[1, 2] = 1.0, 2.0j
        self.assertAlmostEqual(ModalField(self.cs, self.unit_dk, coeffs).l2_norm(), np.sqrt(5.0), places=12)

    def test_h1_seminorm_examples(self):
        """Test the energy-weighted sum."""
        self.assertAlmostEqual(single(self.cs, self.unit_dk, 1, 1).h1_seminorm(), np.sqrt(1.25), places=12)
        self.assertAlmostEqual(single(self.cs, self.unit_dk, 1, 2).h1_seminorm(), np.sqrt(4.25), places=12)
        self.assertEqual(ModalField.zeros(self.cs, self.unit_dk).h1_seminorm(), 0.0)

    def test_h1_norm(self):
        """Test the combined norm and homogeneity."""
        coeffs = np.zeros((2, 4), dtype=complex)
        coeffs[1, 0] = 1.0
        f = ModalField(self.cs, KGrid(k_max=0.1, n_k=2), coeffs)
        expected = np.hypot(f.l2_norm(), f.h1_seminorm())
        self.assertAlmostEqual(f.h1_norm(), expected, places=14)
        g = ModalField.random(self.cs, self.kgrid, 20.0, seed=2)
        self.assertAlmostEqual(g.with_coeffs(2 * g.coeffs).h1_norm(), 2 * g.h1_norm(), places=12)
        self.assertEqual(ModalField.zeros(self.cs, self.kgrid).h1_norm(), 0.0)

    def test_triangle_inequality(self):
        """Test Parseval linearity properties."""
        f = ModalField.random(self.cs, self.kgrid, 20.0, seed=3)
        g = ModalField.random(self.cs, self.kgrid, 20.0, seed=4)
        total = f.with_coeffs(f.coeffs + g.coeffs)
        self.assertLessEqual(total.l2_norm(), f.l2_norm() + g.l2_norm() + 1e-12)
        self.assertLessEqual(total.h1_norm(), f.h1_norm() + g.h1_norm() + 1e-12)

    def test_synthesize_examples(self):
        """Test physical-space evaluation."""
        zero = ModalField.zeros(self.cs, self.unit_dk)
        self.assertEqual(zero.synthesize(1.0, 0.3), 0.0)
        coeffs = np.zeros((2, 4), dtype=complex)
        coeffs[:, 0] = 1.0
        pair = ModalField(self.cs, self.unit_dk, coeffs)
        x = 0.7
        expected = 2 / np.sqrt(2 * np.pi) * self.cs.eigenfunction(1, x)
        self.assertAlmostEqual(pair.synthesize(x, 0.0), expected, places=12)
        rand = ModalField.random(self.cs, self.kgrid, 20.0, seed=5)
        self.assertAlmostEqual(rand.synthesize(0.0, 1.3), 0.0, places=14)

    def test_synthesize_shape(self):
        """Test output shape x_n.shape + x.shape."""
        rand = ModalField.random(self.cs, self.kgrid, 20.0, seed=5)
        values = rand.synthesize(np.linspace(0, np.pi, 7), np.linspace(-1, 1, 3))
        self.assertEqual(values.shape, (3, 7))

    def test_plancherel_consistency(self):
        """Test l2_norm against quadrature of the synthesized field."""
        kgrid = KGrid(k_max=2.0, n_k=16)
        f = ModalField.random(self.cs, kgrid, 20.0, seed=8)
        x = np.linspace(0.0, np.pi, 257)
        # synthesized field is periodic in x_n with period 2 pi / dk
        period = 2 * np.pi / kgrid.dk
        x_n = np.linspace(-period / 2, period / 2, 2049)
        values = f.synthesize(x, x_n)
        quad = trapezoid(trapezoid(values ** 2, x, axis=1), x_n)
        self.assertAlmostEqual(quad / f.l2_norm() ** 2, 1.0, places=4)

    def test_random_field(self):
        """Test determinism, Hermitian symmetry and support."""
        a = ModalField.random(self.cs, self.kgrid, 12.0, seed=9)
        b = ModalField.random(self.cs, self.kgrid, 12.0, seed=9)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        self.assertTrue(a.is_hermitian())
        self.assertTrue(np.all(a.coeffs[energy_lattice(self.cs, self.kgrid) > 12.0] == 0))
        self.assertGreater(a.active_count(), 0)

    def test_random_field_empty_support(self):
        """Test a cap between lambda_1 and lambda_1 + min k^2."""
        f = ModalField.random(self.cs, self.kgrid, 1.0 + 0.5 * 0.125 ** 2, seed=1)
        self.assertEqual(f.active_count(), 0)
        with self.assertRaises(ArgumentError):
            ModalField.random(self.cs, self.kgrid, 0.5, seed=1)

    def test_rescale(self):
        """Test the rescaling identity."""
        f = ModalField.random(self.cs, self.kgrid, 20.0, seed=10).rescaled(3.0)
        self.assertAlmostEqual(f.h1_norm(), 3.0, delta=1e-12)
        with self.assertRaises(ArgumentError):
            ModalField.zeros(self.cs, self.kgrid).rescaled(1.0)

    def test_sparse_field(self):
        """Test one active Hermitian pair per target energy."""
        f = ModalField.sparse(self.cs, self.kgrid, [1.5, 4.0, 9.0], seed=4)
        self.assertEqual(f.active_count(), 6)
        self.assertTrue(f.is_hermitian())
        np.testing.assert_allclose(np.abs(f.coeffs[f.coeffs != 0]), 1.0)

    def test_json_round_trip(self):
        """Test exact serialization."""
        f = ModalField.random(self.cs, self.kgrid, 20.0, seed=11)
        g = ModalField.from_dict(f.to_dict())
        np.testing.assert_array_equal(f.coeffs, g.coeffs)
        self.assertTrue(f.same_lattice(g))

    def test_rejects_non_finite(self):
        """Test coefficient validation."""
        coeffs = np.zeros((self.kgrid.n_k, self.cs.l_max), dtype=complex)
        coeffs[0, 0] = np.nan
        with self.assertRaises(ArgumentError):
            ModalField(self.cs, self.kgrid, coeffs)


if __name__ == "__main__":
    unittest.main()
