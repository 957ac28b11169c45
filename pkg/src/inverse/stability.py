"""
Spectral Cutoff Stability

This module implements the log-stability modulus
  Phi(r) = r^{1/2} + |ln r|^{-1/2},  Phi(0) = 0,
the three data regimes (zero data, small data with cutoff
lambda = -ln(kappa) / (2T), saturated data), reconstruction of the source
from the final state of the homogeneous problem by exponential inflation
inside the energy set, and the energy-splitting inequality behind the cutoff.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.errors import ArgumentError, OverflowGuardError, PreconditionError

logger = logging.getLogger(__name__)

EXPONENT_GUARD = 700.0
LOG_FLOAT_MAX = math.log(np.finfo(float).max)

ZERO = "zero"
CUTOFF = "cutoff"
SATURATED = "saturated"


def phi_modulus(r):
    """
    Log-stability modulus.

    Args:
        r (float): Nonnegative data size, r != 1

    Returns:
        float: 0 for r = 0, else sqrt(r) + |ln r|^{-1/2}
    """
    r = float(r)
    if r < 0 or not math.isfinite(r):
        raise ArgumentError(f"modulus argument must be a finite nonnegative number, got {r}")
    if r == 0.0:
        return 0.0
    if r == 1.0:
        raise ArgumentError("modulus is undefined at r = 1 (|ln r|^{-1/2} diverges)")
    return math.sqrt(r) + abs(math.log(r)) ** -0.5


@dataclass(frozen=True)
class EnergyCutoff:
    """
    Regime and threshold for the energy set {lambda_l + k^2 <= lambda_cut}.

    Attributes:
        regime (str): 'zero', 'cutoff' or 'saturated'
        lambda_cut (float): Threshold; 0 in the zero regime, inf for exact data
        kappa (float): Data size the decision was made on
    """

    regime: str
    lambda_cut: float
    kappa: float = 0.0

    def admits(self, energies):
        return np.asarray(energies) <= self.lambda_cut

    def to_dict(self):
        return {"regime": self.regime, "lambda_cut": self.lambda_cut, "kappa": self.kappa}


def choose_cutoff(kappa, T, lambda1):
    """
    Pick the regime for data size kappa.

    - kappa = 0: zero regime, the reconstruction is the zero field
    - 0 < kappa < exp(-2 T lambda1): cutoff at -ln(kappa) / (2T) > lambda1
    - kappa >= exp(-2 T lambda1): saturated, fallback threshold lambda1
    """
    if kappa < 0 or not math.isfinite(kappa):
        raise ArgumentError(f"data norm must be finite and nonnegative, got {kappa}")
    if not T > 0 or not lambda1 > 0:
        raise ArgumentError(f"need T > 0 and lambda1 > 0, got T={T}, lambda1={lambda1}")
    if kappa == 0.0:
        return EnergyCutoff(ZERO, 0.0, 0.0)
    if kappa < math.exp(-2.0 * T * lambda1):
        return EnergyCutoff(CUTOFF, -math.log(kappa) / (2.0 * T), float(kappa))
    return EnergyCutoff(SATURATED, float(lambda1), float(kappa))


def exact_cutoff():
    """Threshold that keeps every lattice point, used for noiseless data."""
    return EnergyCutoff(CUTOFF, math.inf, 0.0)


def reconstruct_from_final_state(vT, T, cut):
    """
    Invert the homogeneous evolution inside the energy set.

    Args:
        vT (ModalField): v(T) with v(0) = beta
        T (float): Final time
        cut (EnergyCutoff): Energy set

    Returns:
        ModalField: exp(E T) vT on {E <= lambda_cut}, 0 elsewhere

    Raises:
        OverflowGuardError: If an admitted point has E T > 700
    """
    if not T > 0:
        raise ArgumentError(f"final time must be positive, got T={T}")
    energies = vT.energies
    if cut.regime == ZERO:
        return vT.with_coeffs(np.zeros_like(vT.coeffs))
    inside = cut.admits(energies)
    exponent = energies * T
    if np.any(exponent[inside] > EXPONENT_GUARD):
        raise OverflowGuardError(
            f"E T = {np.max(exponent[inside]):.6g} exceeds {EXPONENT_GUARD:g} inside the cutoff"
        )
    coeffs = np.where(inside, np.exp(np.where(inside, exponent, 0.0)) * vT.coeffs, 0.0)
    return vT.with_coeffs(coeffs)


@dataclass
class SplitCheck:
    lhs: float
    rhs: float
    margin: float
    log_first: float = -math.inf

    @property
    def holds(self):
        return self.margin >= -1e-12 * self.rhs

    def to_dict(self):
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "log_first": self.log_first,
            "holds": self.holds,
        }


def energy_split_check(beta, vT, lam, T):
    """
    Both sides of |beta|^2 <= exp(2 lam T) |v(T)|^2 + |beta|_{H1 semi}^2 / lam.

    Args:
        beta (ModalField): Initial state
        vT (ModalField): Homogeneous evolution of beta at time T
        lam (float): Split threshold, > lambda_1
        T (float): Final time

    Returns:
        SplitCheck: lhs, rhs and rhs - lhs; rhs is inf when the first term
        exceeds the float range, its logarithm is kept in log_first
    """
    lambda1 = beta.cs.eigenvalue(1)
    if not lam > lambda1:
        raise PreconditionError(f"split threshold lambda={lam} must exceed lambda_1={lambda1}")
    if not beta.same_lattice(vT):
        raise ArgumentError("beta and v(T) live on different lattices")
    lhs = beta.l2_norm() ** 2
    vT_norm = vT.l2_norm()
    log_first = 2.0 * lam * T + 2.0 * math.log(vT_norm) if vT_norm > 0.0 else -math.inf
    if log_first > LOG_FLOAT_MAX:
        logger.debug("first split term exp(%.6g) overflows; rhs taken as inf", log_first)
        first = math.inf
    else:
        first = math.exp(log_first)
    rhs = first + beta.h1_seminorm() ** 2 / lam
    return SplitCheck(lhs, rhs, rhs - lhs, log_first)
