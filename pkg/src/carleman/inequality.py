"""
Weighted Inequality Evaluation

This module evaluates both sides of the parabolic Carleman inequality
  |e^{lam Phi} (lam g)^{-1/2} Lap u| + |e^{lam Phi} (lam g)^{-1/2} u_t|
  + |e^{lam Phi} (lam g)^{1/2} grad u| + |e^{lam Phi} (lam g)^{3/2} u|
  <= C (|e^{lam Phi} P u| + |e^{lam Phi} (lam g)^{1/2} d_nu u|_{(0,T) x gamma})
for separable test functions u = t^p (T - t)^q sin(m pi x'/a) carried by a
Hermitian pair of longitudinal frequencies, and scans the ratio lhs / rhs
over several values of lam.

The weight e^{2 lam Phi} is concentrated in a thin layer around t = T/2 and
the observed endpoint, so every integral uses quadrature nodes graded toward
that point and log-weights taken relative to their maximum.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from src.errors import ArgumentError, PreconditionError

logger = logging.getLogger(__name__)

LOG_SKIP = -700.0
GRADED_NODES = 384


@dataclass(frozen=True)
class TestFunction:
    """
    u(t, x', x_n) = amplitude t^p (T - t)^q sin(m pi x'/a) on the fibers +/-k.

    Attributes:
        p (int): Power of t, >= 1 so that u(0) = 0
        q (int): Power of T - t
        m (int): Transverse mode number
        k (float): Longitudinal frequency of the Hermitian pair
        fiber_weight (float): Plancherel weight dk * sum |c|^2 of the pair
        amplitude (float): Overall scale
    """

    __test__ = False

    p: int = 1
    q: int = 1
    m: int = 1
    k: float = 0.0
    fiber_weight: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise PreconditionError(f"test function must vanish at t=0, got p={self.p}")
        if self.q < 0:
            raise ArgumentError(f"q must be nonnegative, got q={self.q}")
        if int(self.m) != self.m or self.m < 1:
            raise PreconditionError(f"test function must vanish on the lateral wall, got m={self.m}")
        if self.fiber_weight < 0:
            raise ArgumentError("fiber weight must be nonnegative")

    @property
    def label(self):
        return f"p={self.p},q={self.q},m={self.m},k={self.k:.6g}"

    def scaled(self, factor):
        return TestFunction(self.p, self.q, self.m, self.k, self.fiber_weight, self.amplitude * factor)

    def time_factor(self, t, T):
        return t ** self.p * (T - t) ** self.q

    def time_factor_derivative(self, t, T):
        first = self.p * t ** (self.p - 1) * (T - t) ** self.q
        second = self.q * t ** self.p * (T - t) ** (self.q - 1) if self.q > 0 else 0.0
        return first - second


def default_family(kgrid, powers=(1, 2), modes=(1, 2, 3, 4)):
    """Test functions on the Hermitian pair of smallest |k|, coefficient 1 at both nodes."""
    j = kgrid.n_k // 2
    k = float(kgrid.nodes[j])
    family = []
    for p in powers:
        for q in powers:
            for m in modes:
                family.append(TestFunction(p, q, m, k, 2.0 * kgrid.dk))
    return family


@dataclass
class SidesResult:
    """
    Both sides of the inequality, as norms scaled by exp(-log_scale).

    Attributes:
        lhs (float): Sum of the four interior norms
        rhs (float): Sum of the residual and boundary norms
        terms (dict): Individual scaled norms
        log_scale (float): Common log factor removed from every norm
        skipped (int): Quadrature points below the underflow threshold
        points (int): Quadrature points evaluated, skipped ones included
        eps_s (float): Weight layer width in the distance to the observed end
        tau_star (float): Weight layer width in time around T/2
    """

    lhs: float
    rhs: float
    terms: dict = field(default_factory=dict)
    log_scale: float = 0.0
    skipped: int = 0
    points: int = 0
    eps_s: float = float("nan")
    tau_star: float = float("nan")

    @property
    def ratio(self):
        if self.rhs == 0.0:
            return float("nan")
        return self.lhs / self.rhs

    @property
    def skipped_fraction(self):
        if self.points == 0:
            return float("nan")
        return self.skipped / self.points

    def to_dict(self):
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "terms": dict(self.terms),
            "log_scale": self.log_scale,
            "skipped": self.skipped,
            "points": self.points,
            "skipped_fraction": self.skipped_fraction,
            "eps_s": self.eps_s,
            "tau_star": self.tau_star,
        }


def _layer_scales(params):
    """e-folding lengths of the weight in s = dist(x', gamma') and tau = t - T/2."""
    T, rho, lam = params.T, params.rho, params.lam
    with np.errstate(over="ignore", divide="ignore"):
        eps_s = 1.0 / (2.0 * lam * (4.0 / T ** 2) * rho * np.exp(rho * params.psi_max))
        tau_star = T ** 2 / (4.0 * np.sqrt(2.0 * lam * np.exp(2.0 * rho * params.psi_max)))
    return float(eps_s), float(tau_star)


def quadrature_nodes(params, n_t=64, n_x=64, graded=GRADED_NODES):
    """
    Nodes in tau = t - T/2 and s = distance to the observed endpoint.

    Union of the uniform clipped lattice and geometric grids accumulating at
    tau = 0 and s = 0.
    """
    T, a = params.T, params.cs.a
    eps_s, tau_star = _layer_scales(params)
    half = T / 2.0 - T / n_t

    t_uniform = np.linspace(T / n_t, T - T / n_t, n_t)
    tau = [t_uniform - T / 2.0, np.array([0.0])]
    low = 1e-3 * tau_star
    if 0.0 < low < half:
        ladder = np.geomspace(low, half, graded)
        tau.extend([ladder, -ladder])

    s = [np.linspace(0.0, a, n_x)]
    low = 1e-3 * eps_s
    if 0.0 < low < a:
        s.append(np.geomspace(low, a, graded))
    return np.unique(np.concatenate(tau)), np.unique(np.concatenate(s))


def _log_weight(params, tau, s):
    """
    2 lam (Phi - Phi*) with Phi* the maximum of Phi (at t = T/2, s = 0),
    evaluated without cancellation; tau along axis 0, s along axis 1.
    """
    T, rho, lam = params.T, params.rho, params.lam
    psi = params.psi_max - s
    prod = (T / 2.0 + tau) * (T / 2.0 - tau)
    g = 1.0 / prod
    excess = 4.0 * tau ** 2 / (T ** 2 * prod)
    with np.errstate(over="ignore"):
        big = np.exp(2.0 * rho * params.psi_max)
        gap_t = excess[:, None] * (big - np.exp(rho * psi))[None, :]
        gap_s = (4.0 / T ** 2) * np.exp(rho * params.psi_max) * (-np.expm1(-rho * s))
        log_w = -2.0 * lam * (gap_t + gap_s[None, :])
    log_w = np.where(np.isfinite(log_w), log_w, -np.inf)
    return log_w, np.log(lam * g)


def carleman_sides(u, params, n_t=64, n_x=64):
    """
    Evaluate both sides of the weighted inequality for one test function.

    Integrals over x_n reduce to the Plancherel weight of the Hermitian pair;
    on a fiber k the Laplacian acts as -(mu_m + k^2), |grad u|^2 is
    |u_x'|^2 + k^2 |u|^2 and P u = u_t + (mu_m + k^2) u.

    Args:
        u (TestFunction): Boundary-compatible test function
        params (WeightParams): Weight and Carleman parameter
        n_t (int): Uniform time nodes of the clipped lattice
        n_x (int): Uniform transverse nodes

    Returns:
        SidesResult: Scaled norms; lhs / rhs does not depend on the scaling
    """
    T, a = params.T, params.cs.a
    eps_s, tau_star = _layer_scales(params)
    tau, s = quadrature_nodes(params, n_t, n_x)
    t = T / 2.0 + tau
    log_w, log_lg = _log_weight(params, tau, s)

    names = ("laplacian", "time_derivative", "gradient", "value", "residual", "boundary")
    powers = {"laplacian": -1.0, "time_derivative": -1.0, "gradient": 1.0, "value": 3.0, "residual": 0.0, "boundary": 1.0}
    logs = {name: log_w + powers[name] * log_lg[:, None] for name in names}
    top = max(float(np.max(value)) for value in logs.values())

    if u.amplitude == 0.0 or u.fiber_weight == 0.0:
        return SidesResult(0.0, 0.0, {name: 0.0 for name in names}, top / 2.0, 0, 0, eps_s, tau_star)

    wave = u.m * np.pi / a
    energy = wave ** 2 + u.k ** 2
    tf = u.time_factor(t, T)
    dtf = u.time_factor_derivative(t, T)
    sine = np.sin(wave * s) ** 2
    cosine = wave ** 2 * np.cos(wave * s) ** 2
    scale = u.fiber_weight * u.amplitude ** 2

    densities = {
        "laplacian": energy ** 2 * np.outer(tf ** 2, sine),
        "time_derivative": np.outer(dtf ** 2, sine),
        "gradient": np.outer(tf ** 2, cosine + u.k ** 2 * sine),
        "value": np.outer(tf ** 2, sine),
        "residual": np.outer((dtf + energy * tf) ** 2, sine),
    }

    terms = {}
    skipped = 0
    for name, density in densities.items():
        rel = logs[name] - top
        keep = rel >= LOG_SKIP
        skipped += int(np.count_nonzero(~keep))
        integrand = np.where(keep, np.exp(np.where(keep, rel, 0.0)), 0.0) * density
        inner = trapezoid(integrand, s, axis=1)
        terms[name] = float(np.sqrt(scale * max(trapezoid(inner, tau), 0.0)))

    # boundary flux lives on s = 0, where |d_nu u| = wave * |time factor|
    rel = logs["boundary"][:, 0] - top
    keep = rel >= LOG_SKIP
    skipped += int(np.count_nonzero(~keep))
    integrand = np.where(keep, np.exp(np.where(keep, rel, 0.0)), 0.0) * wave ** 2 * tf ** 2
    terms["boundary"] = float(np.sqrt(scale * trapezoid(integrand, tau)))

    lhs = terms["laplacian"] + terms["time_derivative"] + terms["gradient"] + terms["value"]
    rhs = terms["residual"] + terms["boundary"]
    points = len(densities) * tau.size * s.size + tau.size
    if skipped:
        logger.debug("%s: %d of %d quadrature points below exp(%g) skipped", u.label, skipped, points, LOG_SKIP)
    return SidesResult(lhs, rhs, terms, top / 2.0, skipped, points, eps_s, tau_star)


@dataclass
class ScanRow:
    label: str
    multiplier: float
    lam: float
    below_threshold: bool
    result: SidesResult

    def to_dict(self):
        row = {
            "label": self.label,
            "multiplier": self.multiplier,
            "lambda": self.lam,
            "below_threshold": self.below_threshold,
        }
        row.update(self.result.to_dict())
        return row


@dataclass
class ScanTable:
    """Ratios lhs / rhs per (test function, lambda) with per-lambda maxima."""

    rows: list = field(default_factory=list)

    def max_ratio_by_lambda(self):
        summary = {}
        for row in self.rows:
            ratio = row.result.ratio
            if np.isfinite(ratio):
                summary[row.lam] = max(summary.get(row.lam, 0.0), ratio)
        return dict(sorted(summary.items()))

    def layers_by_lambda(self):
        """Layer widths and the largest skipped fraction per lambda."""
        layers = {}
        for row in self.rows:
            result = row.result
            entry = layers.setdefault(row.lam, [result.eps_s, result.tau_star, 0.0])
            if np.isfinite(result.skipped_fraction):
                entry[2] = max(entry[2], result.skipped_fraction)
        return dict(sorted(layers.items()))

    def spread(self):
        """max / min of the per-lambda maxima; 1 for a single lambda."""
        values = list(self.max_ratio_by_lambda().values())
        if not values or min(values) == 0.0:
            return float("nan")
        return max(values) / min(values)

    def summary(self):
        maxima = self.max_ratio_by_lambda()
        values = list(maxima.values())
        return {
            "max_ratio_by_lambda": [[lam, value] for lam, value in maxima.items()],
            "layers": [
                {"lambda": lam, "eps_s": eps_s, "tau_star": tau_star, "max_skipped_fraction": fraction}
                for lam, (eps_s, tau_star, fraction) in self.layers_by_lambda().items()
            ],
            "spread": self.spread(),
            "nonincreasing": bool(all(b <= a for a, b in zip(values, values[1:]))),
            "nondecreasing": bool(all(b >= a for a, b in zip(values, values[1:]))),
            "rows": len(self.rows),
        }


def constant_scan(family, params, multipliers, n_t=64, n_x=64):
    """
    Scan lhs / rhs over a family of test functions and lambda values.

    Args:
        family (list): TestFunction instances
        params (WeightParams): Base parameters; lam is replaced per scan entry
        multipliers (list): Values of lam / lambda_0(rho); entries below 1 are
            kept and flagged below_threshold
        n_t (int): Uniform time nodes
        n_x (int): Uniform transverse nodes

    Returns:
        ScanTable: One row per (test function, multiplier)
    """
    table = ScanTable()
    lambda0 = params.lambda0
    for multiplier in multipliers:
        if not multiplier > 0:
            raise ArgumentError(f"lambda multipliers must be positive, got {multiplier}")
        scan_params = params.with_lambda(multiplier * lambda0)
        below = multiplier < 1.0
        if below:
            logger.warning("lambda = %g lambda_0 is below the threshold, kept for contrast", multiplier)
        worst = 0.0
        for u in family:
            result = carleman_sides(u, scan_params, n_t, n_x)
            table.rows.append(ScanRow(u.label, float(multiplier), scan_params.lam, below, result))
            if np.isfinite(result.skipped_fraction):
                worst = max(worst, result.skipped_fraction)
        if worst > 0.9:
            logger.warning(
                "lambda = %g lambda_0: up to %.1f%% of quadrature points underflow (eps_s=%.3g)",
                multiplier, 100.0 * worst, _layer_scales(scan_params)[0],
            )
        logger.info("scanned %d test functions at lambda = %g lambda_0", len(family), multiplier)
    return table
