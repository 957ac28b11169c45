"""
Unit tests for the forward modal solver
"""

import unittest

import numpy as np

from src.errors import ArgumentError
from src.geometry.cross_section import CrossSection
from src.geometry.modal import KGrid, ModalField
from src.solvers.forward import (
    ForwardSolver,
    ModalTrajectory,
    SourceProfile,
    TimeGrid,
    duhamel_coefficient,
    duhamel_table,
    trace_h1_norm,
)
from src.solvers.reference import CrankNicolsonFiber


def pair_field(cs, kgrid, j, ell, value=1.0):
    """Hermitian field with coefficient value at (j, ell) and its mirror."""
    coeffs = np.zeros((kgrid.n_k, cs.l_max), dtype=complex)
    coeffs[j, ell - 1] = value
    coeffs[kgrid.mirror(j), ell - 1] = np.conj(value)
    return ModalField(cs, kgrid, coeffs)


class TestDuhamel(unittest.TestCase):
    """Test cases for the Duhamel coefficient."""

    def setUp(self):
        """Set up test fixtures."""
        self.tg = TimeGrid(T=1.0, n_t=200)
        self.one = SourceProfile.constant_one(self.tg)

    def test_closed_form_examples(self):
        """Test the sigma = 1 closed form."""
        self.assertAlmostEqual(duhamel_coefficient(self.one, 2.0, 1.0), (1 - np.exp(-2)) / 2, places=12)
        self.assertAlmostEqual(duhamel_coefficient(self.one, 2.0, 1.0), 0.432332, places=6)
        self.assertEqual(duhamel_coefficient(self.one, 3.0, 0.0), 0.0)
        self.assertAlmostEqual(duhamel_coefficient(self.one, 100.0, 1.0), 0.01, delta=1e-6)
        self.assertAlmostEqual(duhamel_coefficient(self.one, 1.0, 1.0), 0.632121, places=6)

    def test_rejects_nonpositive_energy(self):
        """Test energy validation."""
        with self.assertRaises(ArgumentError):
            duhamel_coefficient(self.one, 0.0, 0.5)
        with self.assertRaises(ArgumentError):
            duhamel_table(self.one, np.array([1.0, -2.0]))

    def test_rejects_time_outside_grid(self):
        """Test time validation."""
        with self.assertRaises(ArgumentError):
            duhamel_coefficient(self.one, 1.0, 1.5)

    def test_table_matches_pointwise_quadrature(self):
        """Test the recursion against direct trapezoid quadrature."""
        decay = SourceProfile.decay(0.7, self.tg)
        energies = np.array([1.0, 4.5, 12.0])
        table = duhamel_table(decay, energies)
        for i in (0, 1, 17, 100, 200):
            for e, energy in enumerate(energies):
                direct = duhamel_coefficient(decay, energy, self.tg.nodes[i])
                self.assertAlmostEqual(table[i, e], direct, places=12)

    def test_decay_profile_converges(self):
        """Test trapezoid Duhamel against the exact decay-profile integral."""
        mu, energy = 1.0, 5.0
        decay = SourceProfile.decay(mu, self.tg)
        t = self.tg.nodes
        exact = (np.exp(-mu * t) - np.exp(-energy * t)) / (energy - mu)
        np.testing.assert_allclose(duhamel_table(decay, np.array(energy)), exact, atol=5e-5)


class TestForwardSolver(unittest.TestCase):
    """Test cases for solve_forward, solve_homogeneous and time_derivative."""

    def setUp(self):
        """Set up test fixtures."""
        self.cs = CrossSection(a=np.pi, l_max=4)
        self.kgrid = KGrid(k_max=2.0, n_k=16)
        self.tg = TimeGrid(T=1.0, n_t=400)
        self.solver = ForwardSolver(self.cs, self.kgrid, self.tg)
        self.one = SourceProfile.constant_one(self.tg)
        self.j = self.kgrid.n_k // 2
        self.energy = 1.0 + self.kgrid.nodes[self.j] ** 2

    def test_zero_source(self):
        """Test that beta = 0 gives a zero trajectory."""
        u = self.solver.solve_forward(ModalField.zeros(self.cs, self.kgrid), self.one)
        self.assertFalse(np.any(u.values))

    def test_single_mode_closed_form(self):
        """Test u(T) = (1 - exp(-E)) / E for a single mode."""
        beta = pair_field(self.cs, self.kgrid, self.j, 1)
        u = self.solver.solve_forward(beta, self.one)
        self.assertAlmostEqual(u.values[-1, self.j, 0].real, -np.expm1(-self.energy) / self.energy, places=12)
        self.assertFalse(np.any(u.values[0]))

    def test_modal_ode_residual(self):
        """Test u' = sigma beta - E u by central differences."""
        beta = ModalField.random(self.cs, self.kgrid, 20.0, seed=1)
        for sigma in (self.one, SourceProfile.decay(1.0, self.tg)):
            u = self.solver.solve_forward(beta, sigma).values
            fd = (u[2:] - u[:-2]) / (2 * self.tg.dt)
            rhs = sigma.samples[1:-1, None, None] * beta.coeffs[None] - self.solver.energies[None] * u[1:-1]
            self.assertLess(np.max(np.abs(fd - rhs)), 1e-3 * np.max(np.abs(beta.coeffs)))

    def test_hermitian_trajectory(self):
        """Test Hermitian symmetry in j at every time."""
        beta = ModalField.random(self.cs, self.kgrid, 20.0, seed=2)
        u = self.solver.solve_forward(beta, SourceProfile.decay(0.5, self.tg))
        np.testing.assert_allclose(u.values, np.conj(u.values[:, ::-1]), rtol=1e-12, atol=1e-15)

    def test_homogeneous_examples(self):
        """Test v(t) = v0 exp(-E t)."""
        v0 = pair_field(self.cs, self.kgrid, self.j, 1)
        v = self.solver.solve_homogeneous(v0)
        self.assertAlmostEqual(v.values[-1, self.j, 0].real, np.exp(-self.energy), places=14)
        np.testing.assert_array_equal(v.values[0], v0.coeffs)
        self.assertGreater(abs(v.values[-1, self.j, 0]), 0.0)

    def test_semigroup_property(self):
        """Test restarting at T/2 reproduces v(T)."""
        v0 = ModalField.random(self.cs, self.kgrid, 20.0, seed=3)
        half = ForwardSolver(self.cs, self.kgrid, TimeGrid(T=0.5, n_t=200))
        middle = half.solve_homogeneous(v0).final_state()
        restarted = half.solve_homogeneous(middle).final_state()
        direct = self.solver.solve_homogeneous(v0).final_state()
        np.testing.assert_allclose(restarted.coeffs, direct.coeffs, rtol=1e-12, atol=1e-15)

    def test_contraction(self):
        """Test that the L2 norm of the homogeneous solution is nonincreasing."""
        v0 = ModalField.random(self.cs, self.kgrid, 30.0, seed=4)
        norms = self.solver.solve_homogeneous(v0).l2_norms()
        self.assertTrue(np.all(np.diff(norms) <= 1e-15))

    def test_time_derivative_examples(self):
        """Test v = sigma beta - E u."""
        beta = pair_field(self.cs, self.kgrid, self.j, 1, 0.5 - 0.25j)
        u = self.solver.solve_forward(beta, self.one)
        v = self.solver.time_derivative(u, beta, self.one)
        np.testing.assert_allclose(v.values[0], beta.coeffs, atol=1e-15)
        self.assertAlmostEqual(abs(v.values[-1, self.j, 0]), np.exp(-self.energy) * abs(0.5 - 0.25j), places=12)
        zero = ModalField.zeros(self.cs, self.kgrid)
        v0 = self.solver.time_derivative(self.solver.solve_forward(zero, self.one), zero, self.one)
        self.assertFalse(np.any(v0.values))

    def test_grid_mismatch(self):
        """Test that mismatched grids are rejected."""
        other = ModalField.zeros(self.cs, KGrid(k_max=1.0, n_k=16))
        with self.assertRaises(ArgumentError):
            self.solver.solve_forward(other, self.one)
        with self.assertRaises(ArgumentError):
            self.solver.solve_forward(ModalField.zeros(self.cs, self.kgrid), SourceProfile.constant_one(TimeGrid(1.0, 100)))


class TestNeumannTrace(unittest.TestCase):
    """Test cases for trace synthesis, its norm and noise."""

    def setUp(self):
        """Set up test fixtures."""
        self.cs = CrossSection(a=np.pi, l_max=4)
        self.kgrid = KGrid(k_max=2.0, n_k=16)
        self.tg = TimeGrid(T=1.0, n_t=400)
        self.solver = ForwardSolver(self.cs, self.kgrid, self.tg)
        self.one = SourceProfile.constant_one(self.tg)
        self.j = self.kgrid.n_k // 2

    def test_zero_trace(self):
        """Test the zero trajectory."""
        u = self.solver.solve_forward(ModalField.zeros(self.cs, self.kgrid), self.one)
        trace = self.solver.neumann_trace(u)
        self.assertEqual(trace_h1_norm(trace), 0.0)

    def test_single_mode_flux(self):
        """Test d = sum_l u_l d_nu phi_l for u = 1 in mode 1."""
        values = np.zeros((self.tg.n_t + 1, self.kgrid.n_k, self.cs.l_max), dtype=complex)
        values[:, :, 0] = 1.0
        u = ModalTrajectory(self.cs, self.kgrid, self.tg, values)
        trace = self.solver.neumann_trace(u)
        np.testing.assert_allclose(trace.values, -np.sqrt(2 / np.pi), rtol=1e-14)

    def test_linearity(self):
        """Test that traces add."""
        a = ModalField.random(self.cs, self.kgrid, 20.0, seed=5)
        b = ModalField.random(self.cs, self.kgrid, 20.0, seed=6)
        ta = self.solver.neumann_trace(self.solver.solve_forward(a, self.one))
        tb = self.solver.neumann_trace(self.solver.solve_forward(b, self.one))
        tab = self.solver.neumann_trace(self.solver.solve_forward(a.with_coeffs(a.coeffs + b.coeffs), self.one))
        np.testing.assert_allclose(tab.values, ta.values + tb.values, atol=1e-14)

    def test_h1_norm_closed_form(self):
        """Test the quadrature norm of a single-mode trace against exact integrals."""
        beta = pair_field(self.cs, self.kgrid, self.j, 1)
        trace = self.solver.neumann_trace(self.solver.solve_forward(beta, self.one))
        E = 1.0 + self.kgrid.nodes[self.j] ** 2
        T = self.tg.T
        int_u2 = (T - 2 * (1 - np.exp(-E * T)) / E + (1 - np.exp(-2 * E * T)) / (2 * E)) / E ** 2
        int_du2 = (1 - np.exp(-2 * E * T)) / (2 * E)
        exact = np.sqrt(2 * self.kgrid.dk * (2 / np.pi) * (int_u2 + int_du2))
        self.assertAlmostEqual(trace.h1_norm() / exact, 1.0, delta=1e-4)

    def test_h1_norm_second_order(self):
        """Test O(n_t^-2) convergence of the trace norm."""
        beta = ModalField.random(self.cs, self.kgrid, 20.0, seed=7)
        kappas = []
        for n_t in (100, 200, 400):
            tg = TimeGrid(1.0, n_t)
            solver = ForwardSolver(self.cs, self.kgrid, tg)
            kappas.append(solver.neumann_trace(solver.solve_forward(beta, SourceProfile.constant_one(tg))).h1_norm())
        coarse, fine = abs(kappas[1] - kappas[0]), abs(kappas[2] - kappas[1])
        self.assertLess(fine, coarse / 2.5)

    def test_add_noise(self):
        """Test exact noise norm, determinism and symmetry."""
        beta = ModalField.random(self.cs, self.kgrid, 20.0, seed=8)
        clean = self.solver.neumann_trace(self.solver.solve_forward(beta, self.one))
        self.assertIs(self.solver.add_noise(clean, 0.0, 1), clean)
        noisy = self.solver.add_noise(clean, 1e-3, 1)
        self.assertAlmostEqual(noisy.minus(clean).h1_norm(), 1e-3, delta=1e-12)
        again = self.solver.add_noise(clean, 1e-3, 1)
        np.testing.assert_array_equal(noisy.values, again.values)
        other = self.solver.add_noise(clean, 1e-3, 2)
        self.assertFalse(np.allclose(noisy.values, other.values))
        self.assertAlmostEqual(other.minus(clean).h1_norm(), 1e-3, delta=1e-12)
        noise = noisy.values - clean.values
        np.testing.assert_allclose(noise, np.conj(noise[:, ::-1]), atol=1e-12)
        self.assertEqual(noisy.provenance, {"kind": "noisy", "delta": 1e-3, "seed": 1})
        with self.assertRaises(ArgumentError):
            self.solver.add_noise(clean, -1.0, 1)


class TestCrankNicolsonOracle(unittest.TestCase):
    """Test cases comparing the modal solver with finite differences."""

    def setUp(self):
        """Set up test fixtures."""
        self.cs = CrossSection(a=np.pi, l_max=3)
        self.kgrid = KGrid(k_max=0.25, n_k=4)
        self.j = self.kgrid.n_k // 2
        self.fiber = CrankNicolsonFiber(self.cs, n_x=400, n_t=2000)
        self.basis = np.array([self.cs.eigenfunction(ell, self.fiber.x) for ell in self.cs.modes])

    def _relative_error(self, n_t, sigma_factory, sigma_fn):
        tg = TimeGrid(1.0, n_t)
        solver = ForwardSolver(self.cs, self.kgrid, tg)
        coeffs = np.zeros((self.kgrid.n_k, 3), dtype=complex)
        coeffs[self.j] = [1.0, 0.5 - 0.5j, 0.25j]
        coeffs[self.kgrid.mirror(self.j)] = np.conj(coeffs[self.j])
        beta = ModalField(self.cs, self.kgrid, coeffs)
        self.assertLessEqual(np.max(beta.energies), 10.0)
        u = solver.solve_forward(beta, sigma_factory(tg))
        modal = u.values[-1, self.j] @ self.basis
        k = self.kgrid.nodes[self.j]
        reference = self.fiber.solve(coeffs[self.j], k, 1.0, sigma=sigma_fn)
        return np.linalg.norm(modal - reference) / np.linalg.norm(reference)

    def test_constant_profile(self):
        """Test oracle equivalence for sigma = 1."""
        error = self._relative_error(200, SourceProfile.constant_one, None)
        self.assertLessEqual(error, 1e-4)

    def test_decay_profile(self):
        """Test oracle equivalence for sigma = exp(-t)."""
        error = self._relative_error(1000, lambda tg: SourceProfile.decay(1.0, tg), lambda t: np.exp(-t))
        self.assertLessEqual(error, 1e-4)


class TestEnergyEstimates(unittest.TestCase):
    """Test cases for the numerical energy-estimate checks."""

    def setUp(self):
        """Set up test fixtures."""
        self.cs = CrossSection(a=np.pi, l_max=6)
        self.kgrid = KGrid(k_max=3.0, n_k=24)
        self.tg = TimeGrid(T=1.0, n_t=200)
        self.solver = ForwardSolver(self.cs, self.kgrid, self.tg)

    def test_zero_data(self):
        """Test zero margins for zero data."""
        zero = ModalField.zeros(self.cs, self.kgrid)
        report = self.solver.check_energy_estimates(zero, zero, SourceProfile.constant_one(self.tg))
        self.assertEqual(report.homogeneous_margin, 0.0)
        self.assertEqual(report.driven_margin, 0.0)
        self.assertEqual(report.derivative_margin, 0.0)
        self.assertTrue(report.passed)

    def test_single_mode_derivative_bound(self):
        """Test |u_t(t)|_H1 = exp(-E t) |beta|_H1 <= 2 |beta|_H1."""
        beta = pair_field(self.cs, self.kgrid, self.kgrid.n_k // 2, 1)
        one = SourceProfile.constant_one(self.tg)
        report = self.solver.check_energy_estimates(beta, beta, one)
        self.assertEqual(report.constant, 1.0)
        self.assertAlmostEqual(report.derivative_margin, beta.h1_norm(), places=12)

    def test_randomized_margins(self):
        """Test nonnegative margins on 20 seeded pairs."""
        rng = np.random.default_rng(123)
        for i in range(20):
            if i % 4 == 0:
                sigma = SourceProfile.constant_one(self.tg)
            elif i % 4 == 1:
                sigma = SourceProfile.decay(1.0, self.tg)
            elif i % 4 == 2:
                sigma = SourceProfile.decay(float(rng.uniform(0.1, 5.0)), self.tg)
            else:
                w = float(rng.uniform(1.0, 10.0))
                sigma = SourceProfile.from_function(
                    lambda t: 1.0 + 0.5 * np.sin(w * t), self.tg, lambda t: 0.5 * w * np.cos(w * t)
                )
            beta = ModalField.random(self.cs, self.kgrid, 40.0, seed=100 + i).rescaled(rng.uniform(0.1, 10.0))
            v0 = ModalField.random(self.cs, self.kgrid, 40.0, seed=200 + i)
            report = self.solver.check_energy_estimates(v0, beta, sigma)
            self.assertTrue(report.passed, msg=f"draw {i}: {report.to_dict()}")


if __name__ == "__main__":
    unittest.main()
