"""
Experiment Runner

One method per command-line subcommand. Each method runs the corresponding
pipeline, writes its payload files through an OutputWriter and returns a
short summary for the console banner.
"""

import logging
import math

import numpy as np

from src.carleman.inequality import constant_scan, default_family
from src.carleman.weight import verify_lemma
from src.errors import ArgumentError
from src.experiments.files import (
    SWEEP_HEADER,
    emit_plot_data,
    read_field,
    read_trace,
    write_field,
    write_trace,
)
from src.geometry.modal import ModalField
from src.inverse.observability import empirical_observability_constant
from src.inverse.reconstruction import reconstruct_from_trace
from src.inverse.stability import (
    ZERO,
    choose_cutoff,
    energy_split_check,
    exact_cutoff,
    reconstruct_from_final_state,
)
from src.inverse.sweep import multi_draw_sweep, sweep_source
from src.solvers.forward import ForwardSolver, TimeGrid
from src.solvers.reference import CrankNicolsonFiber

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("forward", "invert", "sweep", "carleman", "observability", "check-energy")


class ExperimentRunner:
    """
    Runs experiments for a validated configuration.

    Attributes:
        cfg (ExperimentConfig): Validated configuration
        writer (OutputWriter): Destination of every payload file
    """

    def __init__(self, cfg, writer):
        self.cfg = cfg
        self.writer = writer
        self.cs = cfg.cross_section_obj()
        self.kgrid = cfg.kgrid()
        self.tg = cfg.timegrid()

    def run(self, subcommand, **options):
        handlers = {
            "forward": self.run_forward,
            "invert": self.run_invert,
            "sweep": self.run_sweep,
            "carleman": self.run_carleman,
            "observability": self.run_observability,
            "check-energy": self.run_check_energy,
        }
        if subcommand not in handlers:
            raise ArgumentError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
        logger.info("running %s", subcommand)
        return handlers[subcommand](**options)

    def default_source(self, seed=None):
        """Sparse source of the sweep, scaled to the H1 budget."""
        s = self.cfg.sweep
        return sweep_source(
            self.cs,
            self.kgrid,
            self.tg.T,
            s.active_energies,
            s.energy_cap,
            self.cfg.inverse.m_budget,
            self.cfg.seed if seed is None else seed,
        )

    def run_forward(self):
        """Forward model, trace, energy report and final-state inversion report."""
        cfg = self.cfg
        solver = ForwardSolver(self.cs, self.kgrid, self.tg)
        beta = self.default_source()
        sigma = cfg.profile(self.tg)
        u = solver.solve_forward(beta, sigma)
        clean = solver.neumann_trace(u)
        trace = solver.add_noise(clean, cfg.forward.noise_level, cfg.seed)

        write_field(self.writer, "beta.json", beta)
        write_field(self.writer, "final_state.json", u.final_state())
        write_trace(self.writer, "trace", trace)

        vT = solver.solve_homogeneous(beta).final_state()
        delta = cfg.forward.noise_level
        cut = exact_cutoff() if delta == 0 else choose_cutoff(delta, self.tg.T, self.cs.eigenvalue(1))
        final_state = {"cutoff": cut.to_dict()}
        if cut.regime != ZERO:
            beta_hat = reconstruct_from_final_state(vT, self.tg.T, cut)
            final_state["err"] = beta.with_coeffs(beta.coeffs - beta_hat.coeffs).l2_norm()
        if math.isfinite(cut.lambda_cut) and cut.lambda_cut > self.cs.eigenvalue(1):
            final_state["energy_split"] = energy_split_check(beta, vT, cut.lambda_cut, self.tg.T).to_dict()

        summary = {
            "source": {"profile": sigma.label, "h1_norm": beta.h1_norm(), "active": beta.active_count()},
            "kappa_clean": clean.h1_norm(),
            "kappa_data": trace.h1_norm(),
            "provenance": trace.provenance,
            "energy_estimates": solver.check_energy_estimates(beta, beta, sigma).to_dict(),
            "final_state_inversion": final_state,
        }
        if cfg.forward.oracle_check:
            summary["oracle"] = self._oracle_report(beta, sigma, u)
        self.writer.write_json("forward_summary.json", summary)
        return summary

    def _oracle_report(self, beta, sigma, u):
        """Crank-Nicolson comparison on the fiber of smallest positive k."""
        j = self.kgrid.n_k // 2
        k = float(self.kgrid.nodes[j])
        fiber = CrankNicolsonFiber(self.cs)
        reference = fiber.solve(beta.coeffs[j], k, self.tg.T, sigma=sigma.at)
        basis = np.array([self.cs.eigenfunction(ell, fiber.x) for ell in self.cs.modes])
        modal = u.values[-1, j] @ basis
        scale = np.linalg.norm(reference)
        error = float(np.linalg.norm(modal - reference) / scale) if scale > 0 else 0.0
        return {"k": k, "relative_l2_error": error, "n_x": fiber.n_x, "n_t": fiber.n_t}

    def run_invert(self, trace_path=None, beta_path=None):
        """Reconstruct the source from a trace file written by the forward run."""
        if trace_path is None:
            raise ArgumentError("invert needs a trace file (--trace)")
        trace = read_trace(trace_path)
        if trace.kgrid != self.kgrid:
            logger.warning("trace k-grid %s overrides the configured grid", trace.kgrid)
        sigma = self.cfg.profile(trace.timegrid)
        beta_hat, diagnostics = reconstruct_from_trace(trace, sigma, self.cs, self.cfg.inversion())
        write_field(self.writer, "beta_hat.json", beta_hat)
        summary = {"diagnostics": diagnostics.to_dict(), "l2_norm": beta_hat.l2_norm()}
        if beta_path is not None:
            beta = read_field(beta_path)
            if not beta.same_lattice(beta_hat):
                raise ArgumentError("reference source and reconstruction use different lattices")
            summary["err"] = beta.with_coeffs(beta.coeffs - beta_hat.coeffs).l2_norm()
        self.writer.write_json("invert_diagnostics.json", summary)
        return summary

    def run_sweep(self):
        cfg = self.cfg
        s = cfg.sweep
        sigma = cfg.profile(self.tg)
        results, draws = multi_draw_sweep(
            self.cs,
            self.kgrid,
            sigma,
            cfg.inversion(),
            s.deltas,
            s.draws,
            cfg.sweep_seed(),
            s.active_energies,
            s.energy_cap,
        )
        first = results[0]
        rows = [(r.delta, r.kappa, r.err, r.bound, r.ratio) for r in first.records]
        self.writer.write_csv("sweep.csv", SWEEP_HEADER, rows)
        emit_plot_data(self.writer, first.records)
        summary = dict(first.summary())
        summary["records_detail"] = [r.to_dict() for r in first.records]
        summary["draws"] = draws.to_dict()
        self.writer.write_json("sweep_summary.json", summary)
        return summary

    def run_carleman(self):
        c = self.cfg.carleman
        params = self.cfg.weight_params()
        report = verify_lemma(params, c.grid.n_t, c.grid.n_x, c.rho0)
        self.writer.write_json("lemma.json", report.to_dict())

        table = constant_scan(default_family(self.kgrid), params, c.lambda_list, c.grid.n_t, c.grid.n_x)
        header = ("label", "multiplier", "lambda", "lhs", "rhs", "ratio", "log_scale", "skipped", "skipped_fraction")
        rows = [
            (row.label, row.multiplier, row.lam, row.result.lhs, row.result.rhs,
             row.result.ratio, row.result.log_scale, row.result.skipped, row.result.skipped_fraction)
            for row in table.rows
        ]
        self.writer.write_csv("carleman_scan.csv", header, rows)
        summary = {"lemma_passed": report.passed, "scan": table.summary()}
        summary["items"] = {key: item.passed for key, item in sorted(report.items.items())}
        self.writer.write_json("carleman_summary.json", summary)
        return summary

    def run_observability(self):
        o = self.cfg.observability
        cap = o.energy_cap / self.tg.T
        estimate = empirical_observability_constant(self.cs, self.kgrid, self.tg, o.sample_size, cap, self.cfg.seed)
        refined_tg = TimeGrid(self.tg.T, 2 * self.tg.n_t)
        refined = empirical_observability_constant(self.cs, self.kgrid, refined_tg, o.sample_size, cap, self.cfg.seed)
        change = abs(refined.constant - estimate.constant) / estimate.constant
        summary = {
            "estimate": estimate.to_dict(),
            "refined_constant": refined.constant,
            "relative_change": change,
        }
        self.writer.write_json("observability.json", summary)
        return summary

    def run_check_energy(self):
        cfg = self.cfg
        solver = ForwardSolver(self.cs, self.kgrid, self.tg)
        beta = self.default_source()
        cap = cfg.observability.energy_cap / self.tg.T
        v0 = ModalField.random(self.cs, self.kgrid, cap, cfg.seed).rescaled(cfg.inverse.m_budget)
        report = solver.check_energy_estimates(v0, beta, cfg.profile(self.tg))
        summary = {"report": report.to_dict(), "profile": cfg.source.profile}
        self.writer.write_json("energy_report.json", summary)
        return summary
