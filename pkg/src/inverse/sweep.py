"""
Stability Sweep

Runs the forward model, perturbs the trace at a list of noise levels,
reconstructs, and calibrates the smallest constant C_fit with
|beta - beta_hat|_L2 <= C_fit Phi(kappa) over the small-data records.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from src.errors import ArgumentError, PreconditionError
from src.geometry.modal import ModalField
from src.inverse.reconstruction import reconstruct_from_trace
from src.inverse.stability import SATURATED, phi_modulus
from src.solvers.forward import ForwardSolver

logger = logging.getLogger(__name__)

DRAW_SEED_STRIDE = 1000


@dataclass
class SweepRecord:
    delta: float
    kappa: float
    err: float
    regime: str
    bound: float = float("nan")

    @property
    def saturated(self):
        return self.regime == SATURATED

    @property
    def ratio(self):
        """Super-Lipschitz indicator err / kappa."""
        return self.err / self.kappa if self.kappa > 0 else float("nan")

    def to_dict(self):
        return {
            "delta": self.delta,
            "kappa": self.kappa,
            "err": self.err,
            "bound": self.bound,
            "ratio": self.ratio,
            "regime": self.regime,
        }


@dataclass
class SweepResult:
    records: list = field(default_factory=list)
    c_fit: float = None
    seed: int = 0

    def calibrated(self):
        """Records that entered the C_fit calibration."""
        return [r for r in self.records if not r.saturated and r.kappa > 0]

    def ratios_nondecreasing(self):
        """True when err / kappa does not decrease as delta decreases."""
        rows = sorted(self.calibrated(), key=lambda r: r.delta, reverse=True)
        ratios = [r.ratio for r in rows]
        return all(b >= a for a, b in zip(ratios, ratios[1:]))

    def summary(self):
        return {
            "c_fit": self.c_fit,
            "records": len(self.records),
            "calibrated": len(self.calibrated()),
            "saturated": sum(1 for r in self.records if r.saturated),
            "ratios_nondecreasing": self.ratios_nondecreasing(),
            "seed": self.seed,
        }


def sweep_source(cs, kgrid, T, active_energies=6, energy_cap=30.0, m_budget=1.0, seed=0):
    """
    Sparse source with active energies spread geometrically over
    [lambda_1 + k_min^2, energy_cap / T], scaled to H1 norm m_budget.
    """
    if active_energies < 1:
        raise ArgumentError(f"need at least one active energy, got {active_energies}")
    low = cs.eigenvalue(1) + float(np.min(kgrid.nodes ** 2))
    high = energy_cap / T
    if high < low:
        raise ArgumentError(f"energy cap {high} is below the lowest lattice energy {low}")
    energies = np.geomspace(low, high, active_energies)
    return ModalField.sparse(cs, kgrid, energies, seed).rescaled(m_budget)


def stability_sweep(beta, deltas, sigma, cfg, seed):
    """
    Reconstruction error against perturbation size.

    Args:
        beta (ModalField): True source with h1_norm(beta) <= cfg.m_budget
        deltas (list): Nonnegative noise norms
        sigma (SourceProfile): Time profile
        cfg (InversionConfig): Inversion settings; the noise level is set per record
        seed (int): Record i uses noise seed seed + i

    Returns:
        SweepResult: Records with bounds and the calibrated C_fit
    """
    if beta.h1_norm() > cfg.m_budget * (1.0 + 1e-12):
        raise PreconditionError(f"source H1 norm {beta.h1_norm():.6g} exceeds the budget M={cfg.m_budget}")
    if any(delta < 0 for delta in deltas):
        raise ArgumentError("noise levels must be nonnegative")

    solver = ForwardSolver(beta.cs, beta.kgrid, sigma.timegrid)
    clean = solver.neumann_trace(solver.solve_forward(beta, sigma))
    result = SweepResult(seed=seed)
    for i, delta in enumerate(deltas):
        noisy = solver.add_noise(clean, delta, seed + i)
        kappa = noisy.minus(clean).h1_norm() if delta > 0 else 0.0
        estimate, diagnostics = reconstruct_from_trace(noisy, sigma, beta.cs, replace(cfg, noise_level=kappa))
        err = beta.with_coeffs(beta.coeffs - estimate.coeffs).l2_norm()
        result.records.append(SweepRecord(float(delta), float(kappa), float(err), diagnostics.regime))
        logger.info("delta=%.3g kappa=%.3g err=%.3g regime=%s", delta, kappa, err, diagnostics.regime)

    calibrated = result.calibrated()
    if calibrated:
        result.c_fit = max(r.err / phi_modulus(r.kappa) for r in calibrated)
    for record in result.records:
        if record.saturated:
            record.bound = cfg.m_budget
        elif record.kappa > 0 and result.c_fit is not None:
            record.bound = result.c_fit * phi_modulus(record.kappa)
    return result


@dataclass
class DrawSummary:
    c_fits: list = field(default_factory=list)
    seeds: list = field(default_factory=list)

    @property
    def spread(self):
        values = [c for c in self.c_fits if c is not None and c > 0]
        if not values:
            return float("nan")
        return max(values) / min(values)

    def to_dict(self):
        return {"c_fits": list(self.c_fits), "seeds": list(self.seeds), "spread": self.spread}


def multi_draw_sweep(cs, kgrid, sigma, cfg, deltas, draws, seed, active_energies=6, energy_cap=30.0):
    """
    Repeat the sweep over independent sources; draw i uses seed + 1000 i
    for both the source and the noise.
    """
    if draws < 1:
        raise ArgumentError(f"draws must be >= 1, got {draws}")
    summary = DrawSummary()
    results = []
    for draw in range(draws):
        draw_seed = seed + DRAW_SEED_STRIDE * draw
        beta = sweep_source(cs, kgrid, sigma.timegrid.T, active_energies, energy_cap, cfg.m_budget, draw_seed)
        result = stability_sweep(beta, deltas, sigma, cfg, draw_seed)
        results.append(result)
        summary.c_fits.append(result.c_fit)
        summary.seeds.append(draw_seed)
        logger.info("draw %d/%d: C_fit=%s", draw + 1, draws, result.c_fit)
    if math.isfinite(summary.spread):
        logger.info("C_fit spread over %d draws: %.3g", draws, summary.spread)
    return results, summary
