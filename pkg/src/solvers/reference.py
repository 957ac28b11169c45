"""
Crank-Nicolson reference solver for a single longitudinal fiber.

For a fixed frequency k the source problem reduces to
  w_t = w_xx - k^2 w + sigma(t) b(x) on (0, a),  w(0, .) = 0,  w = 0 at x = 0, a
which is solved here on a uniform interior grid. It is an independent oracle
for the modal solver.
"""

import logging

import numpy as np
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu

from src.errors import ArgumentError

logger = logging.getLogger(__name__)


class CrankNicolsonFiber:
    """
    Second-order finite-difference solver in x and t.

    Attributes:
        cs (CrossSection): Cross-section providing a and the eigenbasis
        n_x (int): Number of spatial cells
        n_t (int): Number of time steps
    """

    def __init__(self, cs, n_x=400, n_t=2000):
        if n_x < 4 or n_t < 1:
            raise ArgumentError(f"need n_x >= 4 and n_t >= 1, got n_x={n_x}, n_t={n_t}")
        self.cs = cs
        self.n_x = int(n_x)
        self.n_t = int(n_t)
        self.h = cs.a / self.n_x
        self.x = np.linspace(0.0, cs.a, self.n_x + 1)[1:-1]

    def _laplacian(self, k):
        m = self.n_x - 1
        main = np.full(m, -2.0 / self.h ** 2 - k ** 2)
        off = np.full(m - 1, 1.0 / self.h ** 2)
        return diags([off, main, off], [-1, 0, 1], format="csc")

    def solve(self, coeffs, k, T, sigma=None):
        """
        Integrate the fiber problem up to time T.

        Args:
            coeffs (ndarray): Complex modal coefficients b_l, l = 1..l_max
            k (float): Longitudinal frequency
            T (float): Final time
            sigma (callable): Time profile, defaults to sigma = 1

        Returns:
            ndarray: Complex w(T, x) on the interior nodes self.x
        """
        if not T > 0:
            raise ArgumentError(f"final time must be positive, got T={T}")
        sigma = sigma or (lambda t: 1.0)
        coeffs = np.asarray(coeffs, dtype=complex)
        basis = np.array([self.cs.eigenfunction(ell, self.x) for ell in range(1, coeffs.size + 1)])
        source = coeffs @ basis
        rhs_source = np.column_stack([source.real, source.imag])

        dt = T / self.n_t
        lap = self._laplacian(k)
        eye = identity(self.n_x - 1, format="csc")
        implicit = splu((eye - 0.5 * dt * lap).tocsc())
        explicit = (eye + 0.5 * dt * lap).tocsr()

        w = np.zeros_like(rhs_source)
        for n in range(self.n_t):
            forcing = 0.5 * dt * (sigma(n * dt) + sigma((n + 1) * dt))
            w = implicit.solve(explicit @ w + forcing * rhs_source)
        logger.debug("fiber k=%.4g integrated with %d steps", k, self.n_t)
        return w[:, 0] + 1j * w[:, 1]
