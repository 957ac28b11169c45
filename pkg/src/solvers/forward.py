"""
Forward Modal Solver

This module implements the exact modal solution of the heat equation
  u_t - Laplace(u) = sigma(t) beta(x),  u(0) = 0,  u = 0 on the lateral wall
with support for:
- Duhamel coefficients (closed form for sigma = 1, trapezoid otherwise)
- Homogeneous evolution v(t) = exp(-(lambda_l + k^2) t) v0
- The exact time derivative v = sigma beta - E u
- Neumann trace synthesis on the observed wall and its H1(0,T;L2) norm
- Seeded trace noise with a prescribed norm
- Numerical checks of the two energy estimates
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from src.errors import ArgumentError
from src.geometry.modal import ModalField, energy_lattice

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = i T / n_t, i = 0..n_t."""

    T: float = 1.0
    n_t: int = 200

    def __post_init__(self):
        if not self.T > 0:
            raise ArgumentError(f"final time must be positive, got T={self.T}")
        if int(self.n_t) != self.n_t or self.n_t < 8:
            raise ArgumentError(f"n_t must be an integer >= 8, got {self.n_t}")

    @property
    def dt(self):
        return self.T / self.n_t

    @property
    def nodes(self):
        return np.linspace(0.0, self.T, self.n_t + 1)

    def to_dict(self):
        return {"T": self.T, "n_t": self.n_t}


@dataclass(frozen=True, eq=False)
class SourceProfile:
    """
    Time profile sigma sampled on a time grid.

    Attributes:
        timegrid (TimeGrid): Grid the samples live on
        samples (ndarray): sigma(t_i), i = 0..n_t
        derivative (ndarray): sigma'(t_i)
        is_constant_one (bool): Enables the closed-form Duhamel integral
        label (str): Human-readable description
    """

    timegrid: TimeGrid
    samples: np.ndarray = field(repr=False)
    derivative: np.ndarray = field(repr=False)
    is_constant_one: bool = False
    label: str = "custom"

    def __post_init__(self):
        n = self.timegrid.n_t + 1
        for name in ("samples", "derivative"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ArgumentError(f"{name} must have {n} entries, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ArgumentError(f"source profile {name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def constant_one(cls, tg):
        n = tg.n_t + 1
        return cls(tg, np.ones(n), np.zeros(n), is_constant_one=True, label="constant")

    @classmethod
    def decay(cls, mu, tg):
        """Decay-heat profile sigma(t) = exp(-mu t)."""
        t = tg.nodes
        values = np.exp(-mu * t)
        return cls(tg, values, -mu * values, label=f"decay(mu={mu!r})")

    @classmethod
    def from_function(cls, fn, tg, derivative_fn=None, label="custom"):
        """
        Sample a callable profile; the derivative falls back to second-order
        finite differences when no derivative callable is given.
        """
        t = tg.nodes
        values = np.asarray(fn(t), dtype=float) * np.ones_like(t)
        if derivative_fn is None:
            slope = np.gradient(values, tg.dt, edge_order=2)
        else:
            slope = np.asarray(derivative_fn(t), dtype=float) * np.ones_like(t)
        return cls(tg, values, slope, label=label)

    @property
    def sigma0(self):
        return float(self.samples[0])

    def at(self, t):
        return np.interp(t, self.timegrid.nodes, self.samples)

    def l2_norm(self):
        return float(np.sqrt(trapezoid(self.samples ** 2, self.timegrid.nodes)))

    def c1_norm(self):
        return float(max(np.max(np.abs(self.samples)), np.max(np.abs(self.derivative))))


@dataclass(frozen=True, eq=False)
class ModalTrajectory:
    """Modal coefficients u[i, j, l] at every time node."""

    cs: object
    kgrid: object
    timegrid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (self.timegrid.n_t + 1, self.kgrid.n_k, self.cs.l_max)
        arr = np.array(self.values, dtype=complex)
        if arr.shape != shape:
            raise ArgumentError(f"trajectory has shape {arr.shape}, expected {shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def at_index(self, i):
        return ModalField(self.cs, self.kgrid, self.values[i])

    def final_state(self):
        return self.at_index(self.timegrid.n_t)

    def l2_norms(self):
        return np.sqrt(self.kgrid.dk * np.sum(np.abs(self.values) ** 2, axis=(1, 2)))

    def h1_norms(self):
        weight = 1.0 + energy_lattice(self.cs, self.kgrid)
        return np.sqrt(self.kgrid.dk * np.sum(weight * np.abs(self.values) ** 2, axis=(1, 2)))


@dataclass(frozen=True, eq=False)
class NeumannTrace:
    """
    Flux on the observed wall, per k node and time node.

    Attributes:
        kgrid (KGrid): Frequency grid
        timegrid (TimeGrid): Time grid
        values (ndarray): Complex array d[i, j] = d_j(t_i)
        provenance (dict): {'kind': 'clean'} or {'kind': 'noisy', 'delta': .., 'seed': ..}
    """

    kgrid: object
    timegrid: TimeGrid
    values: np.ndarray = field(repr=False)
    provenance: dict = field(default_factory=lambda: {"kind": "clean"})

    def __post_init__(self):
        shape = (self.timegrid.n_t + 1, self.kgrid.n_k)
        arr = np.array(self.values, dtype=complex)
        if arr.shape != shape:
            raise ArgumentError(f"trace has shape {arr.shape}, expected {shape}")
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("trace values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def noise_level(self):
        return float(self.provenance.get("delta", 0.0))

    def time_derivative(self):
        """Second-order differences: central inside, one-sided at the ends."""
        return np.gradient(self.values, self.timegrid.dt, axis=0, edge_order=2)

    def l2_norm(self):
        """Norm in L2((0,T) x gamma) by trapezoid in t and Plancherel in x_n."""
        t = self.timegrid.nodes
        return float(np.sqrt(self.kgrid.dk * np.sum(trapezoid(np.abs(self.values) ** 2, t, axis=0))))

    def h1_norm(self):
        """The data norm kappa in H1(0,T;L2(gamma))."""
        t = self.timegrid.nodes
        density = np.abs(self.values) ** 2 + np.abs(self.time_derivative()) ** 2
        return float(np.sqrt(self.kgrid.dk * np.sum(trapezoid(density, t, axis=0))))

    def minus(self, other):
        return NeumannTrace(self.kgrid, self.timegrid, self.values - other.values, {"kind": "difference"})

    def is_hermitian(self):
        return bool(np.array_equal(self.values, np.conj(self.values[:, ::-1])))


def trace_h1_norm(d):
    return d.h1_norm()


def duhamel_coefficient(sigma, energy, t):
    """
    Integral of sigma(s) exp(-E (t - s)) over [0, t].

    Args:
        sigma (SourceProfile): Time profile
        energy (float): Mode energy E > 0
        t (float): Time in [0, T]

    Returns:
        float: Closed form (1 - exp(-E t)) / E for sigma = 1, trapezoid
        quadrature on the grid nodes below t otherwise
    """
    if not energy > 0:
        raise ArgumentError(f"mode energy must be positive, got E={energy}")
    tg = sigma.timegrid
    if not 0.0 <= t <= tg.T:
        raise ArgumentError(f"time must lie in [0, {tg.T}], got t={t}")
    if sigma.is_constant_one:
        return float(-np.expm1(-energy * t) / energy)
    nodes = tg.nodes
    s = np.append(nodes[nodes < t], t)
    if s.size < 2:
        return 0.0
    with np.errstate(under="ignore"):
        return float(trapezoid(sigma.at(s) * np.exp(-energy * (t - s)), s))


def duhamel_table(sigma, energies):
    """
    Duhamel coefficients for every time node and every energy at once.

    The trapezoid recursion D_i = q D_{i-1} + dt/2 (q sigma_{i-1} + sigma_i),
    q = exp(-E dt), reproduces duhamel_coefficient at the nodes.

    Args:
        sigma (SourceProfile): Time profile
        energies (ndarray): Positive energies, any shape

    Returns:
        ndarray: Shape (n_t + 1,) + energies.shape
    """
    energies = np.asarray(energies, dtype=float)
    if np.any(energies <= 0):
        raise ArgumentError("mode energies must be positive")
    tg = sigma.timegrid
    t = tg.nodes.reshape((-1,) + (1,) * energies.ndim)
    with np.errstate(under="ignore"):
        if sigma.is_constant_one:
            return -np.expm1(-energies * t) / energies
        q = np.exp(-energies * tg.dt)
        table = np.zeros((tg.n_t + 1,) + energies.shape)
        half = 0.5 * tg.dt
        for i in range(1, tg.n_t + 1):
            table[i] = q * table[i - 1] + half * (q * sigma.samples[i - 1] + sigma.samples[i])
    return table


@dataclass
class EnergyReport:
    """Worst margins (rhs - lhs) of the two energy estimates."""

    constant: float
    homogeneous_margin: float
    driven_margin: float
    derivative_margin: float
    tolerance: float = 0.0

    @property
    def passed(self):
        worst = min(self.homogeneous_margin, self.driven_margin, self.derivative_margin)
        return worst >= -self.tolerance

    def to_dict(self):
        return {
            "constant": self.constant,
            "homogeneous_margin": self.homogeneous_margin,
            "driven_margin": self.driven_margin,
            "derivative_margin": self.derivative_margin,
            "passed": self.passed,
        }


class ForwardSolver:
    """
    Exact modal solver on a fixed (cross-section, k-grid, time-grid) triple.

    Every operation works per lattice point (j, l) with energy
    E = lambda_l + k_j^2; there is no spatial discretization error.
    """

    def __init__(self, cs, kgrid, timegrid):
        """
        Initialize the solver.

        Args:
            cs (CrossSection): Cross-section
            kgrid (KGrid): Longitudinal frequency grid
            timegrid (TimeGrid): Uniform time grid
        """
        self.cs = cs
        self.kgrid = kgrid
        self.timegrid = timegrid
        self.energies = energy_lattice(cs, kgrid)
        self.flux = cs.normal_derivatives()

    def _check_field(self, f):
        if f.cs != self.cs or f.kgrid != self.kgrid:
            raise ArgumentError("modal field lattice does not match the solver grids")

    def _check_profile(self, sigma):
        if sigma.timegrid != self.timegrid:
            raise ArgumentError("source profile is sampled on a different time grid")

    def solve_forward(self, beta, sigma):
        """
        Solve the source problem u' + E u = sigma beta, u(0) = 0.

        Args:
            beta (ModalField): Spatial source
            sigma (SourceProfile): Time profile

        Returns:
            ModalTrajectory: u[i, j, l] = beta[j, l] D_sigma(E_jl, t_i)
        """
        self._check_field(beta)
        self._check_profile(sigma)
        table = duhamel_table(sigma, self.energies)
        return ModalTrajectory(self.cs, self.kgrid, self.timegrid, table * beta.coeffs[None])

    def solve_homogeneous(self, v0):
        """
        Solve v' + E v = 0, v(0) = v0.

        Args:
            v0 (ModalField): Initial state

        Returns:
            ModalTrajectory: v[i, j, l] = v0[j, l] exp(-E t_i)
        """
        self._check_field(v0)
        t = self.timegrid.nodes[:, None, None]
        with np.errstate(under="ignore"):
            decay = np.exp(-self.energies[None] * t)
        return ModalTrajectory(self.cs, self.kgrid, self.timegrid, decay * v0.coeffs[None])

    def time_derivative(self, u, beta, sigma):
        """
        Exact time derivative of a source-problem trajectory.

        Args:
            u (ModalTrajectory): Output of solve_forward(beta, sigma)
            beta (ModalField): The same spatial source
            sigma (SourceProfile): The same time profile

        Returns:
            ModalTrajectory: v = sigma(t_i) beta - E u
        """
        self._check_field(beta)
        self._check_profile(sigma)
        if u.timegrid != self.timegrid or u.kgrid != self.kgrid or u.cs != self.cs:
            raise ArgumentError("trajectory does not match the solver grids")
        values = sigma.samples[:, None, None] * beta.coeffs[None] - self.energies[None] * u.values
        return ModalTrajectory(self.cs, self.kgrid, self.timegrid, values)

    def neumann_trace(self, u):
        """
        Flux on the observed wall: d_j(t_i) = sum_l u[i, j, l] dphi_l/dnu.

        Args:
            u (ModalTrajectory): Any trajectory on the solver grids

        Returns:
            NeumannTrace: Clean trace
        """
        values = np.tensordot(u.values, self.flux, axes=([2], [0]))
        return NeumannTrace(self.kgrid, self.timegrid, values)

    def add_noise(self, d, delta, seed):
        """
        Perturb a trace with seeded Gaussian noise of H1(0,T;L2) norm delta.

        Args:
            d (NeumannTrace): Clean trace
            delta (float): Target perturbation norm, >= 0
            seed (int): Seed for numpy's default generator

        Returns:
            NeumannTrace: d itself for delta = 0, else d + e with |e| = delta
        """
        if delta < 0:
            raise ArgumentError(f"noise level must be nonnegative, got {delta}")
        if delta == 0:
            return d
        rng = np.random.default_rng(seed)
        half = d.kgrid.n_k // 2
        shape = (d.timegrid.n_t + 1, half)
        upper = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        noise = np.empty_like(d.values)
        noise[:, half:] = upper
        noise[:, :half] = np.conj(upper[:, ::-1])
        raw = NeumannTrace(d.kgrid, d.timegrid, noise)
        noise *= delta / raw.h1_norm()
        provenance = {"kind": "noisy", "delta": float(delta), "seed": int(seed)}
        return NeumannTrace(d.kgrid, d.timegrid, d.values + noise, provenance)

    def estimate_constant(self):
        """Constant of the energy estimates on this lattice; 1 whenever T <= 1 or E_min >= 1/2."""
        e_min = float(np.min(self.energies))
        return float(np.sqrt(max(1.0, min(self.timegrid.T, 1.0 / (2.0 * e_min)))))

    def check_energy_estimates(self, v0, beta, sigma):
        """
        Evaluate both sides of the two energy estimates at every time node.

        - homogeneous: |v(t)|_H1 <= C |v0|_H1
        - driven:      |u(t)|_H1 <= C |sigma beta|_{L2(0,T;H1)}
        - derivative:  |u_t(t)|_H1 <= (1 + T^1/2) C |sigma|_C1 |beta|_H1

        Args:
            v0 (ModalField): Initial state of the homogeneous problem
            beta (ModalField): Spatial source of the driven problem
            sigma (SourceProfile): Time profile of the driven problem

        Returns:
            EnergyReport: Worst margins, all nonnegative when the estimates hold
        """
        const = self.estimate_constant()
        homogeneous = self.solve_homogeneous(v0)
        margin_h = float(np.min(const * v0.h1_norm() - homogeneous.h1_norms()))

        u = self.solve_forward(beta, sigma)
        source_norm = sigma.l2_norm() * beta.h1_norm()
        margin_d = float(np.min(const * source_norm - u.h1_norms()))

        v = self.time_derivative(u, beta, sigma)
        bound = (1.0 + np.sqrt(self.timegrid.T)) * const * sigma.c1_norm() * beta.h1_norm()
        margin_v = float(np.min(bound - v.h1_norms()))

        # equality at t = 0 is only reproduced up to rounding
        scale = max(const * v0.h1_norm(), const * source_norm, bound)
        report = EnergyReport(const, margin_h, margin_d, margin_v, tolerance=1e-12 * scale)
        if not report.passed:
            logger.warning("energy estimate violated: %s", report.to_dict())
        return report
