"""
Unit tests for the boundary observability estimates
"""

import unittest

import numpy as np

from src.errors import ArgumentError
from src.geometry.cross_section import CrossSection
from src.geometry.modal import KGrid, ModalField
from src.inverse.observability import empirical_observability_constant, observability_ratio
from src.solvers.forward import TimeGrid


class TestObservabilityRatio(unittest.TestCase):
    """Test cases for the single-state ratio."""

    def setUp(self):
        """Set up test fixtures."""
        self.cs = CrossSection(a=np.pi, l_max=4)
        self.kgrid = KGrid(k_max=0.5, n_k=8)
        self.tg = TimeGrid(T=1.0, n_t=1000)
        self.j = self.kgrid.n_k // 2

    def single(self, ell, value=1.0):
        coeffs = np.zeros((self.kgrid.n_k, self.cs.l_max), dtype=complex)
        coeffs[self.j, ell - 1] = value
        coeffs[self.kgrid.mirror(self.j), ell - 1] = np.conj(value)
        return ModalField(self.cs, self.kgrid, coeffs)

    def closed_form(self, ell):
        E = ell ** 2 + self.kgrid.nodes[self.j] ** 2
        T = self.tg.T
        slope = abs(self.cs.normal_derivative_on_gamma(ell))
        return np.sqrt(1 + E) * np.exp(-E * T) / (slope * np.sqrt((1 - np.exp(-2 * E * T)) / (2 * E)))

    def test_single_mode_closed_form(self):
        """Test quadrature against the closed form for modes with E near 1, 4, 9."""
        ratios = []
        for ell in (1, 2, 3):
            ratio = observability_ratio(self.single(ell), self.tg)
            self.assertAlmostEqual(ratio / self.closed_form(ell), 1.0, delta=1e-4)
            ratios.append(ratio)
        # the closed form decays like exp(-E T)
        self.assertTrue(ratios[0] > ratios[1] > ratios[2])

    def test_scaling_invariance(self):
        """Test that scaling v0 by 10 leaves the ratio unchanged."""
        v0 = ModalField.random(self.cs, self.kgrid, 12.0, seed=3)
        base = observability_ratio(v0, self.tg)
        self.assertAlmostEqual(observability_ratio(v0.with_coeffs(10 * v0.coeffs), self.tg) / base, 1.0, places=12)

    def test_zero_state(self):
        """Test that a zero initial state is rejected."""
        with self.assertRaises(ArgumentError):
            observability_ratio(ModalField.zeros(self.cs, self.kgrid), self.tg)


class TestEmpiricalConstant(unittest.TestCase):
    """Test cases for the sampled observability constant."""

    def setUp(self):
        """Set up test fixtures."""
        self.cs = CrossSection(a=np.pi, l_max=4)
        self.kgrid = KGrid(k_max=2.0, n_k=16)
        self.tg = TimeGrid(T=1.0, n_t=200)

    def test_single_sample(self):
        """Test that a sample of one equals that field's ratio."""
        estimate = empirical_observability_constant(self.cs, self.kgrid, self.tg, 1, 12.0, seed=5)
        v0 = ModalField.random(self.cs, self.kgrid, 12.0, 5)
        self.assertEqual(estimate.constant, observability_ratio(v0, self.tg))
        self.assertEqual(estimate.seeds, [5])
        self.assertEqual(estimate.worst_seed, 5)

    def test_nondecreasing_in_sample_size(self):
        """Test that the constant is a max over nested samples."""
        small = empirical_observability_constant(self.cs, self.kgrid, self.tg, 5, 12.0, seed=0)
        large = empirical_observability_constant(self.cs, self.kgrid, self.tg, 20, 12.0, seed=0)
        self.assertEqual(large.ratios[:5], small.ratios)
        self.assertGreaterEqual(large.constant, small.constant)

    def test_resolution_stability(self):
        """Test that doubling n_t changes the constant by less than 5%."""
        coarse = empirical_observability_constant(self.cs, self.kgrid, self.tg, 10, 12.0, seed=0)
        fine = empirical_observability_constant(self.cs, self.kgrid, TimeGrid(1.0, 400), 10, 12.0, seed=0)
        self.assertLess(abs(fine.constant - coarse.constant) / coarse.constant, 0.05)

    def test_validation(self):
        """Test argument validation."""
        with self.assertRaises(ArgumentError):
            empirical_observability_constant(self.cs, self.kgrid, self.tg, 0, 12.0, seed=0)
        with self.assertRaises(ArgumentError):
            empirical_observability_constant(self.cs, self.kgrid, self.tg, 3, 0.5, seed=0)


if __name__ == "__main__":
    unittest.main()
