"""
Cross-Section Eigenbasis

This module implements the transverse Dirichlet eigenbasis on the interval
cross-section w = (0, a) with support for:
- Closed-form eigenvalues (l*pi/a)^2 and sine eigenfunctions
- Outward normal derivatives at the observed endpoint
- A quadrature Gram matrix used to verify orthonormality
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from src.errors import ArgumentError

LEFT_END = "left"
RIGHT_END = "right"
GAMMA_SIDES = (LEFT_END, RIGHT_END)


@dataclass(frozen=True)
class CrossSection:
    """
    Interval cross-section of the waveguide.

    Eigenpairs of the Dirichlet Laplacian on (0, a) are known in closed form,
    so every downstream formula is exact. One endpoint is observed.

    Attributes:
        a (float): Interval length, strictly positive
        gamma_side (str): Observed endpoint, 'left' (x'=0) or 'right' (x'=a)
        l_max (int): Number of transverse modes retained
    """

    a: float = np.pi
    gamma_side: str = RIGHT_END
    l_max: int = 16

    def __post_init__(self):
        if not self.a > 0:
            raise ArgumentError(f"cross-section length must be positive, got a={self.a}")
        if self.gamma_side not in GAMMA_SIDES:
            raise ArgumentError(f"gamma_side must be one of {GAMMA_SIDES}, got {self.gamma_side!r}")
        if int(self.l_max) != self.l_max or self.l_max < 1:
            raise ArgumentError(f"l_max must be a positive integer, got {self.l_max}")

    @property
    def modes(self):
        """Mode indices 1..l_max as an integer array."""
        return np.arange(1, self.l_max + 1)

    def _check_mode(self, ell):
        if int(ell) != ell or not 1 <= ell <= self.l_max:
            raise ArgumentError(f"mode index must satisfy 1 <= l <= {self.l_max}, got {ell}")
        return int(ell)

    def eigenvalue(self, ell):
        """
        Dirichlet eigenvalue of mode ell.

        Args:
            ell (int): Mode index, 1 <= ell <= l_max

        Returns:
            float: (ell*pi/a)^2
        """
        ell = self._check_mode(ell)
        return (ell * np.pi / self.a) ** 2

    def eigenvalues(self):
        """All retained eigenvalues, strictly increasing."""
        return (self.modes * np.pi / self.a) ** 2

    def eigenfunction(self, ell, x):
        """
        Evaluate the L2-normalized eigenfunction sqrt(2/a) sin(ell*pi*x/a).

        Args:
            ell (int): Mode index
            x (float or ndarray): Transverse coordinate(s) in [0, a]

        Returns:
            float or ndarray: Eigenfunction values
        """
        ell = self._check_mode(ell)
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > self.a):
            raise ArgumentError(f"coordinate must lie in [0, {self.a}]")
        values = np.sqrt(2.0 / self.a) * np.sin(ell * np.pi * x_arr / self.a)
        # Exact zeros at the Dirichlet ends
        values = np.where((x_arr == 0.0) | (x_arr == self.a), 0.0, values)
        return float(values) if values.ndim == 0 else values

    def normal_derivative_on_gamma(self, ell):
        """
        Outward normal derivative of eigenfunction ell at the observed endpoint.

        Args:
            ell (int): Mode index

        Returns:
            float: phi_l'(a) for the right end, -phi_l'(0) for the left end
        """
        ell = self._check_mode(ell)
        slope = np.sqrt(2.0 / self.a) * (ell * np.pi / self.a)
        if self.gamma_side == RIGHT_END:
            return slope * (-1.0) ** ell
        return -slope

    def normal_derivatives(self):
        """Normal derivatives on gamma for all retained modes."""
        return np.array([self.normal_derivative_on_gamma(ell) for ell in self.modes])

    def gram_matrix(self, n_x=2001):
        """
        Trapezoid-quadrature Gram matrix of the retained eigenfunctions.

        Args:
            n_x (int): Number of quadrature points on [0, a]

        Returns:
            ndarray: (l_max, l_max) matrix, identity up to O(n_x^-2)
        """
        x = np.linspace(0.0, self.a, n_x)
        basis = np.array([self.eigenfunction(ell, x) for ell in self.modes])
        return trapezoid(basis[:, None, :] * basis[None, :, :], x, axis=-1)

    def to_dict(self):
        return {"a": self.a, "gamma_side": self.gamma_side, "l_max": self.l_max}
