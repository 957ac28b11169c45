"""
Boundary Observability

Empirical constants for the final-state observability estimate
  |v(T)|_H1 <= C |d_nu v|_{L2((0,T) x gamma)}
of the homogeneous problem v' + A v = 0, v(0) = v0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.errors import ArgumentError
from src.geometry.modal import ModalField
from src.solvers.forward import ForwardSolver

logger = logging.getLogger(__name__)


def observability_ratio(v0, tg):
    """
    Ratio |v(T)|_H1 / |d_nu v|_{L2((0,T) x gamma)} for one initial state.

    Args:
        v0 (ModalField): Nonzero initial state
        tg (TimeGrid): Time grid for the trace quadrature

    Returns:
        float: Finite positive ratio
    """
    if v0.active_count() == 0:
        raise ArgumentError("observability ratio needs a nonzero initial state")
    solver = ForwardSolver(v0.cs, v0.kgrid, tg)
    v = solver.solve_homogeneous(v0)
    denominator = solver.neumann_trace(v).l2_norm()
    if denominator == 0.0 or not np.isfinite(denominator):
        raise ArgumentError(f"trace norm underflowed to {denominator}; refine the time grid or lower T")
    return v.final_state().h1_norm() / denominator


@dataclass
class ObservabilityEstimate:
    """Maximum of the observability ratio over seeded random initial states."""

    constant: float
    ratios: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    energy_cap: float = 0.0

    @property
    def worst_seed(self):
        return self.seeds[int(np.argmax(self.ratios))] if self.ratios else None

    def to_dict(self):
        return {
            "constant": self.constant,
            "sample_size": len(self.ratios),
            "energy_cap": self.energy_cap,
            "worst_seed": self.worst_seed,
            "ratios": list(self.ratios),
            "seeds": list(self.seeds),
        }


def empirical_observability_constant(cs, kgrid, tg, sample_size, energy_cap, seed):
    """
    Estimate the observability constant as a maximum over random draws.

    Draw i uses seed + i, so a larger sample extends a smaller one.

    Args:
        cs (CrossSection): Cross-section
        kgrid (KGrid): Frequency grid
        tg (TimeGrid): Time grid
        sample_size (int): Number of draws, >= 1
        energy_cap (float): Largest lattice energy of the draws
        seed (int): Base seed

    Returns:
        ObservabilityEstimate: Constant and per-draw ratios
    """
    if sample_size < 1:
        raise ArgumentError(f"sample_size must be >= 1, got {sample_size}")
    estimate = ObservabilityEstimate(0.0, energy_cap=float(energy_cap))
    for i in range(sample_size):
        v0 = ModalField.random(cs, kgrid, energy_cap, seed + i)
        if v0.active_count() == 0:
            raise ArgumentError(f"energy_cap={energy_cap} leaves no active lattice point")
        estimate.ratios.append(observability_ratio(v0, tg))
        estimate.seeds.append(seed + i)
    estimate.constant = float(max(estimate.ratios))
    logger.info("observability constant over %d draws: %.6g", sample_size, estimate.constant)
    return estimate
