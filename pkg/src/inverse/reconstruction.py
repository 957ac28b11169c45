"""
Source Reconstruction from Boundary Flux

Recovers the spatial source beta of u_t - Lap u = sigma(t) beta(x) from the
Neumann trace d on the observed wall. Per longitudinal frequency k_j the
time derivative of the trace is fitted by a ridge-regularized weighted least
squares over the modes l <= l_fit; coefficients outside the energy set
{lambda_l + k_j^2 <= lambda_cut} are then set to zero, with the cutoff chosen
from the data quality.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lstsq

from src.errors import ArgumentError, PreconditionError
from src.geometry.modal import ModalField, energy_lattice
from src.inverse.stability import (
    CUTOFF,
    SATURATED,
    ZERO,
    EnergyCutoff,
    choose_cutoff,
    exact_cutoff,
)
from src.solvers.forward import duhamel_table

logger = logging.getLogger(__name__)

ADAPTIVE_POLICY = "adaptive"
FIXED_POLICY = "fixed"
CUTOFF_POLICIES = (ADAPTIVE_POLICY, FIXED_POLICY)


@dataclass(frozen=True)
class InversionConfig:
    """
    Settings of the trace inversion.

    Attributes:
        l_fit (int): Largest mode index fitted per k
        ridge (float): Tikhonov weight; None ties it to the perturbation level
        cutoff_policy (str): 'adaptive' (lambda = -ln(kappa)/(2T)) or 'fixed'
        lambda_cut (float): Threshold used by the fixed policy
        m_budget (float): H1 budget M of the admissible sources
        noise_level (float): Perturbation level; None reads it from the trace
    """

    l_fit: int = 16
    ridge: float = None
    cutoff_policy: str = ADAPTIVE_POLICY
    lambda_cut: float = None
    m_budget: float = 1.0
    noise_level: float = None

    def __post_init__(self):
        if int(self.l_fit) != self.l_fit or self.l_fit < 1:
            raise ArgumentError(f"l_fit must be a positive integer, got {self.l_fit}")
        if self.ridge is not None and self.ridge < 0:
            raise ArgumentError(f"ridge must be nonnegative, got {self.ridge}")
        if self.cutoff_policy not in CUTOFF_POLICIES:
            raise ArgumentError(f"cutoff_policy must be one of {CUTOFF_POLICIES}, got {self.cutoff_policy!r}")
        if self.cutoff_policy == FIXED_POLICY and (self.lambda_cut is None or not self.lambda_cut > 0):
            raise ArgumentError("the fixed cutoff policy needs a positive lambda_cut")
        if not self.m_budget > 0:
            raise ArgumentError(f"m_budget must be positive, got {self.m_budget}")
        if self.noise_level is not None and self.noise_level < 0:
            raise ArgumentError(f"noise_level must be nonnegative, got {self.noise_level}")


@dataclass
class ReconstructionDiagnostics:
    regime: str
    lambda_cut: float
    kappa_data: float
    kappa: float
    ridge: float
    general_sigma: bool = False
    fitted_modes: list = field(default_factory=list)
    kept_modes: list = field(default_factory=list)
    condition_numbers: list = field(default_factory=list)
    residual_norm: float = 0.0
    budget_bound: float = None

    def to_dict(self):
        return {
            "regime": self.regime,
            "lambda_cut": self.lambda_cut,
            "kappa_data": self.kappa_data,
            "kappa": self.kappa,
            "ridge": self.ridge,
            "general_sigma": self.general_sigma,
            "fitted_modes": list(self.fitted_modes),
            "kept_modes": list(self.kept_modes),
            "condition_numbers": list(self.condition_numbers),
            "residual_norm": self.residual_norm,
            "budget_bound": self.budget_bound,
        }


def trapezoid_weights(tg):
    w = np.full(tg.n_t + 1, tg.dt)
    w[0] = w[-1] = 0.5 * tg.dt
    return w


def _select_cutoff(kappa, cs, tg, cfg):
    if cfg.cutoff_policy == FIXED_POLICY:
        return EnergyCutoff(CUTOFF, float(cfg.lambda_cut), kappa)
    if kappa == 0.0:
        return exact_cutoff()
    return choose_cutoff(kappa, tg.T, cs.eigenvalue(1))


def design_columns(cs, kgrid, sigma):
    """
    Time derivative of the modeled trace columns D_sigma(E, t_i) d_nu phi_l.

    The derivative uses the same second-order stencil as the measured trace,
    so a clean trace lies exactly in the span of the columns.

    Returns:
        ndarray: Shape (n_t + 1, n_k, l_max)
    """
    tg = sigma.timegrid
    table = duhamel_table(sigma, energy_lattice(cs, kgrid))
    slope = np.gradient(table, tg.dt, axis=0, edge_order=2)
    return slope * cs.normal_derivatives()[None, None, :]


def reconstruct_from_trace(d, sigma, cs, cfg):
    """
    Reconstruct the spatial source from a (possibly noisy) Neumann trace.

    Args:
        d (NeumannTrace): Flux of the source problem on the observed wall
        sigma (SourceProfile): Known time profile, sigma(0) != 0
        cs (CrossSection): Cross-section of the waveguide
        cfg (InversionConfig): Fit settings

    Returns:
        tuple: (ModalField estimate, ReconstructionDiagnostics)

    Raises:
        PreconditionError: If sigma(0) = 0
    """
    if sigma.sigma0 == 0.0:
        raise PreconditionError("source profile must satisfy sigma(0) != 0")
    if sigma.timegrid != d.timegrid:
        raise ArgumentError("trace and source profile use different time grids")
    if cfg.l_fit > cs.l_max:
        raise ArgumentError(f"l_fit={cfg.l_fit} exceeds l_max={cs.l_max}")

    kgrid, tg = d.kgrid, d.timegrid
    estimate = ModalField.zeros(cs, kgrid)
    general = not sigma.is_constant_one
    if general:
        logger.warning("profile %s is not constant; inversion is best-effort", sigma.label)

    kappa_data = d.h1_norm()
    kappa = cfg.noise_level if cfg.noise_level is not None else d.noise_level
    if kappa_data == 0.0:
        diagnostics = ReconstructionDiagnostics(ZERO, 0.0, 0.0, float(kappa), 0.0, general)
        diagnostics.fitted_modes = [0] * kgrid.n_k
        diagnostics.kept_modes = [0] * kgrid.n_k
        diagnostics.condition_numbers = [None] * kgrid.n_k
        logger.info("zero data: returning the zero source")
        return estimate, diagnostics

    cut = _select_cutoff(float(kappa), cs, tg, cfg)
    ridge = float(cfg.ridge) if cfg.ridge is not None else float(kappa)
    diagnostics = ReconstructionDiagnostics(cut.regime, cut.lambda_cut, kappa_data, float(kappa), ridge, general)
    if cut.regime == SATURATED:
        diagnostics.budget_bound = cfg.m_budget
        logger.warning("kappa=%.3g is in the saturated regime; error bound is the budget M", kappa)

    columns = design_columns(cs, kgrid, sigma)
    energies = energy_lattice(cs, kgrid)
    root_w = np.sqrt(trapezoid_weights(tg))
    target = d.time_derivative() * root_w[:, None]

    # the cutoff truncates the fitted coefficients, not the design
    active = np.arange(cfg.l_fit)
    coeffs = np.zeros((kgrid.n_k, cs.l_max), dtype=complex)
    fitted = [0] * kgrid.n_k
    kept = [0] * kgrid.n_k
    conds = [None] * kgrid.n_k
    residual = 0.0
    half = kgrid.n_k // 2
    for j in range(half, kgrid.n_k):
        mirror = kgrid.mirror(j)
        design = columns[:, j, active] * root_w[:, None]
        rhs = np.column_stack([target[:, j].real, target[:, j].imag])
        if ridge > 0.0:
            design_aug = np.vstack([design, math.sqrt(ridge) * np.eye(active.size)])
            rhs_aug = np.vstack([rhs, np.zeros((active.size, 2))])
        else:
            design_aug, rhs_aug = design, rhs
        solution, _, _, _ = lstsq(design_aug, rhs_aug)
        values = solution[:, 0] + 1j * solution[:, 1]
        inside = cut.admits(energies[j, active])
        values = np.where(inside, values, 0.0)
        coeffs[j, active] = values
        coeffs[mirror, active] = np.conj(values)
        cond = float(np.linalg.cond(design))
        fitted[j] = fitted[mirror] = int(active.size)
        kept[j] = kept[mirror] = int(np.count_nonzero(inside))
        conds[j] = conds[mirror] = cond
        misfit = design @ solution - rhs
        residual += 2.0 * kgrid.dk * float(np.sum(misfit ** 2))
        logger.debug("k=%.4g: %d modes fitted, %d kept, cond=%.3g", kgrid.nodes[j], active.size, kept[j], cond)

    diagnostics.fitted_modes = fitted
    diagnostics.kept_modes = kept
    diagnostics.condition_numbers = conds
    diagnostics.residual_norm = math.sqrt(residual)
    return estimate.with_coeffs(coeffs), diagnostics
