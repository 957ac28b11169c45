"""
Modal Field Representation

This module implements the discrete fiber decomposition of functions on the
waveguide w x R with support for:
- Half-offset symmetric longitudinal frequency grids (KGrid)
- Coefficient lattices indexed by (frequency node, transverse mode)
- Plancherel L2 norm, H1 seminorm and H1 norm
- Pointwise synthesis back to physical space
- Seeded random and sparse Hermitian test fields
- Exact JSON round trip
"""

from dataclasses import dataclass, field

import numpy as np

from src.errors import ArgumentError
from src.geometry.cross_section import CrossSection


@dataclass(frozen=True)
class KGrid:
    """
    Uniform grid of longitudinal frequencies k, symmetric about zero.

    Nodes sit at cell centres, k_j = -k_max + (j + 1/2) dk, so k = 0 is never
    a node and node j mirrors node n_k - 1 - j.
    """

    k_max: float = 4.0
    n_k: int = 64

    def __post_init__(self):
        if not self.k_max > 0:
            raise ArgumentError(f"k_max must be positive, got {self.k_max}")
        if int(self.n_k) != self.n_k or self.n_k < 2 or self.n_k % 2:
            raise ArgumentError(f"n_k must be an even positive integer, got {self.n_k}")

    @property
    def dk(self):
        return 2.0 * self.k_max / self.n_k

    @property
    def nodes(self):
        return -self.k_max + (np.arange(self.n_k) + 0.5) * self.dk

    def mirror(self, j):
        """Index of the node at -k_j."""
        return self.n_k - 1 - j

    def to_dict(self):
        return {"k_max": self.k_max, "n_k": self.n_k}


def energy_lattice(cs, kgrid):
    """
    Mode energies lambda_l + k_j^2 on the full lattice.

    Args:
        cs (CrossSection): Cross-section
        kgrid (KGrid): Frequency grid

    Returns:
        ndarray: (n_k, l_max) array of energies
    """
    return kgrid.nodes[:, None] ** 2 + cs.eigenvalues()[None, :]


@dataclass(frozen=True, eq=False)
class ModalField:
    """
    Function on the waveguide stored as coefficients c[j, l] on the
    (k-node x mode) lattice.

    Attributes:
        cs (CrossSection): Cross-section the modes belong to
        kgrid (KGrid): Longitudinal frequency grid
        coeffs (ndarray): Complex array of shape (n_k, l_max)
    """

    cs: CrossSection
    kgrid: KGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        expected = (self.kgrid.n_k, self.cs.l_max)
        if coeffs.shape != expected:
            raise ArgumentError(f"coefficient array has shape {coeffs.shape}, expected {expected}")
        if not np.all(np.isfinite(coeffs)):
            raise ArgumentError("modal coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    @classmethod
    def zeros(cls, cs, kgrid):
        return cls(cs, kgrid, np.zeros((kgrid.n_k, cs.l_max), dtype=complex))

    @classmethod
    def random(cls, cs, kgrid, energy_cap, seed):
        """
        Seeded Hermitian field supported on energies <= energy_cap.

        Args:
            cs (CrossSection): Cross-section
            kgrid (KGrid): Frequency grid
            energy_cap (float): Largest lattice energy kept; must be >= lambda_1
            seed (int): Seed for numpy's default generator

        Returns:
            ModalField: Deterministic for a fixed seed
        """
        if energy_cap < cs.eigenvalue(1):
            raise ArgumentError(
                f"energy_cap={energy_cap} is below the lowest eigenvalue {cs.eigenvalue(1)}"
            )
        rng = np.random.default_rng(seed)
        half = kgrid.n_k // 2
        upper = rng.standard_normal((half, cs.l_max)) + 1j * rng.standard_normal((half, cs.l_max))
        coeffs = np.zeros((kgrid.n_k, cs.l_max), dtype=complex)
        coeffs[half:] = upper
        coeffs[:half] = np.conj(upper[::-1])
        coeffs[energy_lattice(cs, kgrid) > energy_cap] = 0.0
        return cls(cs, kgrid, coeffs)

    @classmethod
    def sparse(cls, cs, kgrid, energies, seed):
        """
        Hermitian field with one active (k, l) pair per target energy.

        Each target picks one of its three nearest lattice points (k_j > 0)
        at random and receives a unit-modulus coefficient with random phase;
        the mirror node gets the conjugate.

        Args:
            cs (CrossSection): Cross-section
            kgrid (KGrid): Frequency grid
            energies (list): Target mode energies
            seed (int): Seed for numpy's default generator

        Returns:
            ModalField: Field with len(energies) distinct active pairs
        """
        rng = np.random.default_rng(seed)
        half = kgrid.n_k // 2
        lattice = energy_lattice(cs, kgrid)[half:]
        coeffs = np.zeros((kgrid.n_k, cs.l_max), dtype=complex)
        taken = set()
        for target in energies:
            order = np.argsort(np.abs(lattice - target), axis=None, kind="stable")
            candidates = [int(p) for p in order if int(p) not in taken][:3]
            if not candidates:
                raise ArgumentError("lattice has fewer points than requested energies")
            pick = candidates[int(rng.integers(len(candidates)))]
            taken.add(pick)
            jj, ell = np.unravel_index(pick, lattice.shape)
            value = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
            coeffs[half + jj, ell] = value
            coeffs[kgrid.mirror(half + jj), ell] = np.conj(value)
        return cls(cs, kgrid, coeffs)

    def with_coeffs(self, coeffs):
        return ModalField(self.cs, self.kgrid, coeffs)

    def rescaled(self, target_h1):
        """Copy of the field scaled so that its H1 norm equals target_h1."""
        norm = self.h1_norm()
        if norm == 0.0:
            raise ArgumentError("cannot rescale the zero field")
        return self.with_coeffs(self.coeffs * (target_h1 / norm))

    # ------------------------------------------------------------------
    # Norms (Plancherel: k-integrals are dk-weighted lattice sums)
    # ------------------------------------------------------------------

    @property
    def energies(self):
        return energy_lattice(self.cs, self.kgrid)

    def l2_norm(self):
        return float(np.sqrt(self.kgrid.dk * np.sum(np.abs(self.coeffs) ** 2)))

    def h1_seminorm(self):
        return float(np.sqrt(self.kgrid.dk * np.sum(self.energies * np.abs(self.coeffs) ** 2)))

    def h1_norm(self):
        return float(np.hypot(self.l2_norm(), self.h1_seminorm()))

    def is_hermitian(self, atol=0.0):
        return bool(np.allclose(self.coeffs, np.conj(self.coeffs[::-1]), rtol=0.0, atol=atol))

    def active_count(self):
        """Number of nonzero lattice coefficients."""
        return int(np.count_nonzero(self.coeffs))

    # ------------------------------------------------------------------
    # Synthesis
    # ------------------------------------------------------------------

    def synthesize(self, x, x_n):
        """
        Evaluate the field in physical space.

        Computes Re[ sum_{j,l} (2 pi)^(-1/2) dk c[j,l] exp(i k_j x_n) phi_l(x) ].

        Args:
            x (float or ndarray): Transverse coordinate(s) in [0, a]
            x_n (float or ndarray): Longitudinal coordinate(s)

        Returns:
            float or ndarray: Real field values of shape x_n.shape + x.shape
        """
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > self.cs.a):
            raise ArgumentError(f"coordinate must lie in [0, {self.cs.a}]")
        xn_arr = np.asarray(x_n, dtype=float)
        phi = np.array([self.cs.eigenfunction(ell, x_arr) for ell in self.cs.modes])
        # fiber values per k node at each x: (n_k, *x.shape)
        fibers = np.tensordot(self.coeffs, phi, axes=([1], [0]))
        phase = np.exp(1j * np.multiply.outer(xn_arr, self.kgrid.nodes))
        total = np.tensordot(phase, fibers, axes=([-1], [0]))
        values = (self.kgrid.dk / np.sqrt(2.0 * np.pi)) * total.real
        return float(values) if np.ndim(values) == 0 else values

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self):
        payload = dict(self.cs.to_dict())
        payload.update(self.kgrid.to_dict())
        payload["coeffs"] = [[float(c.real), float(c.imag)] for c in self.coeffs.ravel()]
        return payload

    @classmethod
    def from_dict(cls, payload):
        cs = CrossSection(a=payload["a"], gamma_side=payload["gamma_side"], l_max=payload["l_max"])
        kgrid = KGrid(k_max=payload["k_max"], n_k=payload["n_k"])
        pairs = np.asarray(payload["coeffs"], dtype=float)
        if pairs.shape != (kgrid.n_k * cs.l_max, 2):
            raise ArgumentError("coefficient list does not match the lattice size")
        coeffs = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(kgrid.n_k, cs.l_max)
        return cls(cs, kgrid, coeffs)

    def same_lattice(self, other):
        return self.cs == other.cs and self.kgrid == other.kgrid
