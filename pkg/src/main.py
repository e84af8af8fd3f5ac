#!/usr/bin/env python3
"""
tube-spectra

Command-line entry point: spectra and nodal sets of the Dirichlet Laplacian on thin
curved tubes and surface strips.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

sys.path.insert(0, str(Path(__file__).parent))

from core.config_manager import ConfigManager, RunConfig, problem_from_config, settings_from_config
from core.exceptions import ConfigError
from core.operators import export_coo
from core.sweep import REPORT_COLUMNS, ConvergenceReport, SolverSettings, sweep_epsilon
from core.validation import run_validation
from utils import report_writer
from utils.logger import LabLogger, setup_logging

__version__ = "1.0.0"

MODES = ("spectrum", "sweep", "nodal", "validate")
VALIDATION_COLUMNS = ("check", "passed", "message")


def parse_epsilons(text: str) -> List[float]:
    """Comma-separated list of ε values."""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"not a comma-separated list of numbers: '{text}'"
        ) from None
    if not values:
        raise argparse.ArgumentTypeError("empty epsilon list")
    return values


def parse_seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got '{text}'") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def create_parser() -> argparse.ArgumentParser:
    """Create command line argument parser."""
    parser = argparse.ArgumentParser(
        prog="tube-spectra",
        description="Dirichlet Laplacian spectra on thin curved tubes",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s validate                              # Run the invariant suite on defaults
  %(prog)s sweep --config config/default.toml    # Convergence sweep from a config file
  %(prog)s spectrum --eps 0.1 --n 3              # One-epsilon eigenvalue table
  %(prog)s nodal --out results/nodal             # Nodal crossings per eigenfunction
        """,
    )

    parser.add_argument(
        "mode", nargs="?", choices=MODES, help="Pipeline to run (default: run.mode)"
    )
    parser.add_argument("--config", "-c", type=Path, help="Path to TOML configuration file")
    parser.add_argument("--out", "-o", type=Path, help="Output directory")
    parser.add_argument(
        "--seed", type=parse_seed, help="Seed for the iterative solver start vector"
    )
    parser.add_argument(
        "--eps", type=parse_epsilons, help="Comma-separated, strictly decreasing epsilons"
    )
    parser.add_argument("--n", type=int, help="Number of eigenpairs")
    parser.add_argument("--workers", type=int, help="Parallel epsilon rows")
    parser.add_argument(
        "--export-matrices", action="store_true", help="Write assembled T in COO text form"
    )
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--version", "-v", action="version", version=f"%(prog)s {__version__}")

    return parser


def apply_overrides(manager: ConfigManager, args: argparse.Namespace) -> None:
    """Command-line flags take precedence over the configuration file."""
    overrides = {
        "run.mode": args.mode,
        "run.seed": args.seed,
        "run.epsilons": args.eps,
        "solver.n": args.n,
        "performance.max_workers": args.workers,
        "output.directory": str(args.out) if args.out else None,
    }
    for key, value in overrides.items():
        if value is not None:
            manager.set(key, value)
    if args.export_matrices:
        manager.set("output.export_matrices", True)
    if args.debug:
        manager.set("logging.level", "DEBUG")


class TubeSpectraApp:
    """One validated run: owns the output directory, logging and run statistics."""

    def __init__(self, config_manager: ConfigManager):
        self.config_manager = config_manager
        self.config: RunConfig = config_manager.validated()
        self.out_dir = Path(self.config.output.directory).expanduser()

        log_cfg = self.config.logging
        log_file = (
            Path(log_cfg.file_path) if log_cfg.file_path else self.out_dir / "tube_spectra.log"
        )
        self.lab: LabLogger = setup_logging(
            level=log_cfg.level,
            log_file=log_file,
            max_file_size_mb=log_cfg.max_file_size_mb,
            backup_count=log_cfg.backup_count,
            console_output=log_cfg.console_output,
            colored=log_cfg.colored,
            detailed_timing=log_cfg.detailed_timing,
        )
        self.logger = logging.getLogger(__name__)

    def metadata(
        self, settings: Optional[SolverSettings] = None, problem: str = ""
    ) -> Dict[str, Any]:
        meta: Dict[str, Any] = {"tube_spectra": __version__, "mode": self.config.run.mode}
        if problem:
            meta["problem"] = problem
        if settings is not None:
            meta.update(
                {
                    "grid": "x".join(str(m) for m in (settings.s_count, *settings.t_counts)),
                    "tol": settings.tol,
                    "seed": settings.seed,
                    "e1_shift": settings.e1_shift,
                    "n": settings.n,
                }
            )
        return meta

    def run(self) -> int:
        mode = self.config.run.mode
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config_manager.save(self.out_dir / "config.toml")
        op_id = self.lab.log_operation_start(mode, {"out": str(self.out_dir)})
        handler = {
            "spectrum": self.run_spectrum,
            "sweep": self.run_sweep,
            "nodal": self.run_nodal,
            "validate": self.run_validate,
        }[mode]
        try:
            code = handler()
        except Exception as e:
            self.lab.log_operation_failure(mode, str(e), op_id)
            raise
        if code == 0:
            self.lab.log_operation_success(mode, op_id)
        else:
            self.lab.log_operation_failure(mode, f"exit status {code}", op_id)
        return code

    def _sweep(self, epsilons: Sequence[float], keep_fields: bool) -> ConvergenceReport:
        problem = problem_from_config(self.config)
        settings = settings_from_config(self.config)
        report = sweep_epsilon(
            problem,
            epsilons,
            settings,
            keep_fields=keep_fields or self.config.output.export_matrices,
        )
        rows = report.rows
        self.lab.log_rows(len(rows), sum(1 for row in rows if row.error))
        if self.config.output.export_matrices:
            for run in report.runs:
                if run.operator is not None:
                    export_coo(
                        run.operator, self.out_dir / "matrices" / f"T_eps{run.epsilon:g}.coo"
                    )
        return report

    def _write_summary(self, summary: Dict[str, Any]) -> None:
        summary = dict(summary)
        summary["config"] = self.config.model_dump()
        summary["run_statistics"] = self.lab.get_statistics()
        report_writer.write_summary_json(self.out_dir / "summary.json", summary)

    def _write_report(self, report: ConvergenceReport) -> None:
        meta = self.metadata(report.settings, report.problem)
        report_writer.write_table(
            self.out_dir / "report.csv",
            (row.as_record() for row in report.rows),
            REPORT_COLUMNS,
            meta,
        )

    def run_sweep(self) -> int:
        report = self._sweep(self.config.run.epsilons, keep_fields=False)
        self._write_report(report)
        self._write_summary(report.summary())
        self._print_fits(report)
        return 1 if report.all_failed else 0

    def run_spectrum(self) -> int:
        epsilon = self.config.run.epsilons[0]
        report = self._sweep([epsilon], keep_fields=True)
        run = report.runs[0]
        meta = {**self.metadata(report.settings, report.problem), "epsilon": epsilon}
        report_writer.write_spectrum_csv(self.out_dir / "report.csv", run.rows, meta)

        if self.config.output.eigenfunction_tables and not run.failed:
            grid = run.grid
            report_writer.write_curve_table(
                self.out_dir / "phi.dat",
                grid.s_nodes,
                {f"phi_{k}": d.phi for k, d in sorted(run.details.items())},
                meta,
            )
            for k, detail in sorted(run.details.items()):
                report_writer.write_field_table(
                    self.out_dir / f"psi_{k}.dat", grid, detail.psi_field, meta, label=f"psi_{k}"
                )
                report_writer.write_field_table(
                    self.out_dir / f"laplacian_{k}.dat",
                    grid,
                    detail.laplacian_field,
                    meta,
                    label=f"Psi_{k}",
                )

        summary = report.summary()
        summary["spectrum"] = [row.as_record() for row in run.rows]
        self._write_summary(summary)
        for row in run.rows:
            print(f"n={row.n}  sigma={row.sigma:.12g}  mu={row.mu:.12g}  lambda={row.lambda_:.12g}")
        return 1 if report.all_failed else 0

    def run_nodal(self) -> int:
        report = self._sweep(self.config.run.epsilons, keep_fields=False)
        self._write_report(report)
        meta = self.metadata(report.settings, report.problem)
        margins: Dict[str, Dict[str, Any]] = {}
        for n in range(1, report.settings.n + 1):
            records = []
            for run in report.runs:
                detail = run.details.get(n)
                if detail is not None:
                    records.extend(report_writer.nodal_records(run.epsilon, detail))
            report_writer.write_nodal_csv(self.out_dir / f"nodal_{n}.csv", records, meta)
            margins[str(n)] = {
                str(row.epsilon): {
                    "zero_violation_margin": row.zero_violation_margin,
                    "nodal_displacement": row.nodal_displacement,
                    "sign_violations": row.sign_violations,
                    "sign_domains": row.sign_domains,
                }
                for row in report.rows
                if row.n == n
            }
        summary = report.summary()
        summary["nodal"] = margins
        self._write_summary(summary)
        return 1 if report.all_failed else 0

    def run_validate(self) -> int:
        result = run_validation(seed=self.config.run.seed)
        records = [
            {"check": r.name, "passed": r.passed, "message": r.message} for r in result.results
        ]
        meta = {**self.metadata(), "seed": self.config.run.seed}
        report_writer.write_table(self.out_dir / "report.csv", records, VALIDATION_COLUMNS, meta)
        self._write_summary(result.summary())
        for r in result.results:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status}  {r.name}" + (f"  ({r.message})" if r.message else ""))
        print("validation " + ("passed" if result.passed else "FAILED"))
        return 0 if result.passed else 1

    @staticmethod
    def _print_fits(report: ConvergenceReport) -> None:
        for name, per_n in report.fits.items():
            for n, outcome in per_n.items():
                if outcome.status == "ok":
                    print(f"{name} n={n}: slope {outcome.slope:.3f} +- {outcome.stderr:.3f}")
                else:
                    print(f"{name} n={n}: {outcome.status}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit status."""
    parser = create_parser()
    args = parser.parse_args(argv)

    try:
        manager = ConfigManager(args.config)
        apply_overrides(manager, args)
        app = TubeSpectraApp(manager)
        return app.run()
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 1
    except Exception as e:
        logging.getLogger(__name__).exception("Unexpected error")
        print(f"Fatal error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
