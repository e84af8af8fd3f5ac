"""Per-ε pipeline and ε-sweeps.

For each ε the pipeline assembles T and S on one grid, solves both, and measures the
eigenvalue gaps, eigenfunction errors and nodal quantities of every requested index.
Rows are independent, so a sweep runs them on a thread pool and merges them in the
order of the ε list.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from core.analysis import (
    FLOOR,
    PairedEigenvector,
    RateFit,
    comparison_vector,
    eigenfunction_errors,
    fit_rate,
    fix_phi_sign,
    pair_and_sign,
    reconstruct_laplacian_eigenfunction,
)
from core.cross_section import CrossSection, discrete_transverse_eigenvalues, transverse_eigenpair
from core.eigensolve import EigenResult, lowest_eigenpairs
from core.exceptions import (
    PairingAmbiguityError,
    RateFitError,
    SturmViolationError,
    TubeSpectraError,
)
from core.geometry import CurveSpec, JacobianField, jacobian_field, solve_tang_frame
from core.grid import TensorGrid
from core.nodal import (
    NodalData1D,
    NodalDisplacement,
    count_sign_domains,
    nodal_displacement,
    nodal_points_1d,
    nodal_polyline,
    sign_agreement,
)
from core.operators import (
    DiscreteOperator,
    PotentialField,
    assemble_S,
    assemble_T,
    assumption_constant,
    full_potential,
)
from core.surface import SurfaceStripSpec, strip_geometry

logger = logging.getLogger(__name__)

FIT_METRICS = (
    "gap_sigma",
    "gap_sigma_raw",
    "gap_lambda",
    "sup_error",
    "weighted_error",
    "laplacian_weighted_error",
    "nodal_displacement",
    "zero_violation_margin",
    "potential_deviation",
)


class Problem(Protocol):
    """Geometry that can be discretized for a given ε."""

    length: float
    omega: CrossSection
    dim: int

    def prepare(self, epsilon: float, grid: TensorGrid) -> Tuple[JacobianField, PotentialField]: ...

    def describe(self) -> str: ...


@dataclass(frozen=True)
class TubeProblem:
    curve: CurveSpec
    omega: CrossSection
    rotation_refine: int = 1

    @property
    def length(self) -> float:
        return self.curve.length

    @property
    def dim(self) -> int:
        return self.curve.dim

    def prepare(self, epsilon: float, grid: TensorGrid) -> Tuple[JacobianField, PotentialField]:
        rot = solve_tang_frame(self.curve, (grid.s_count + 1) * self.rotation_refine)
        jf = jacobian_field(self.curve, rot, epsilon, grid)
        return jf, full_potential(jf, self.curve)

    def describe(self) -> str:
        kinds = ",".join(k.kind for k in self.curve.kappas)
        return f"tube d={self.dim} L={self.length:g} kappa=[{kinds}] omega={self.omega.describe()}"


@dataclass(frozen=True)
class StripProblem:
    spec: SurfaceStripSpec

    @property
    def length(self) -> float:
        return self.spec.length

    @property
    def omega(self) -> CrossSection:
        return self.spec.omega

    @property
    def dim(self) -> int:
        return 2

    def prepare(self, epsilon: float, grid: TensorGrid) -> Tuple[JacobianField, PotentialField]:
        return strip_geometry(self.spec.with_epsilon(epsilon), grid)

    def describe(self) -> str:
        return (
            f"strip L={self.length:g} kappa={self.spec.kappa.kind} "
            f"K={self.spec.gauss.kind} derivatives={self.spec.derivative_method}"
        )


@dataclass(frozen=True)
class SolverSettings:
    n: int = 3
    s_count: int = 400
    t_counts: Tuple[int, ...] = (60,)
    tol: float = 1e-9
    seed: int = 0
    e1_shift: str = "analytic"
    max_workers: int = 1
    rotation_refine: int = 1
    sign_margin_factor: float = 20.0

    def grid_for(self, problem: Problem) -> TensorGrid:
        return TensorGrid.build(problem.length, self.s_count, problem.omega.sides, self.t_counts)


@dataclass
class SweepRow:
    """One (ε, n) row of the report; NaN marks a metric that was not computed."""

    epsilon: float
    n: int
    sigma: float = math.nan
    mu: float = math.nan
    sigma0: float = math.nan
    lambda_: float = math.nan
    gap_sigma: float = math.nan
    gap_sigma_raw: float = math.nan
    gap_lambda: float = math.nan
    sup_error: float = math.nan
    weighted_error: float = math.nan
    laplacian_weighted_error: float = math.nan
    nodal_displacement: float = math.nan
    sign_violations: int = -1
    zero_violation_margin: float = math.nan
    sign_domains: int = -1
    overlap: float = math.nan
    unitarity_error: float = math.nan
    residual: float = math.nan
    converged: bool = False
    clustered: bool = False
    simple: bool = False
    assumption_constant: float = math.nan
    potential_deviation: float = math.nan
    min_h: float = math.nan
    m_s: int = 0
    m_t: str = ""
    tol: float = math.nan
    seed: int = 0
    error: str = ""

    def as_record(self) -> Dict[str, object]:
        record = asdict(self)
        record["lambda"] = record.pop("lambda_")
        return record


REPORT_COLUMNS = tuple("lambda" if f.name == "lambda_" else f.name for f in fields(SweepRow))


@dataclass(frozen=True, eq=False)
class ModeDetail:
    """Per-index artifacts kept for nodal and eigenfunction output."""

    index: int
    phi: np.ndarray
    nodal: Optional[NodalData1D] = None
    paired: Optional[PairedEigenvector] = None
    displacement: Optional[NodalDisplacement] = None
    polyline_terminations: Optional[int] = None
    psi_field: Optional[np.ndarray] = None
    laplacian_field: Optional[np.ndarray] = None


@dataclass(eq=False)
class EpsilonRun:
    epsilon: float
    rows: List[SweepRow]
    grid: Optional[TensorGrid] = None
    operator: Optional[DiscreteOperator] = None
    t_result: Optional[EigenResult] = None
    s_result: Optional[EigenResult] = None
    details: Dict[int, ModeDetail] = field(default_factory=dict)
    elapsed: float = 0.0
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


def decoupled_simplicity(
    mu: np.ndarray, omega: CrossSection, grid: TensorGrid, epsilon: float, e1_shift: float
) -> np.ndarray:
    """Whether σ⁰_n = μ_n + ε⁻²(E₁,h − E_shift) is a simple eigenvalue of the discrete T₀.

    The n smallest eigenvalues of T₀ lie among μ_k + ε⁻²(E_j,h − E_shift) with k ≤ n,
    so the enumeration over the computed μ's is exact.
    """
    transverse = (discrete_transverse_eigenvalues(omega, grid.t_counts) - e1_shift) / epsilon**2
    combos = np.sort(np.add.outer(mu, transverse).ravel())
    target = mu + transverse[0]
    flags = np.zeros(mu.size, dtype=bool)
    for k in range(mu.size):
        tol = 1e-9 * max(1.0, abs(target[k]))
        matches = np.count_nonzero(np.abs(combos - target[k]) <= tol)
        flags[k] = bool(abs(combos[k] - target[k]) <= tol and matches == 1)
    return flags


def _mode_metrics(
    row: SweepRow,
    k: int,
    t_res: EigenResult,
    s_res: EigenResult,
    jf: JacobianField,
    omega: CrossSection,
    grid: TensorGrid,
    settings: SolverSettings,
    keep_fields: bool,
) -> ModeDetail:
    epsilon = jf.epsilon
    phi = fix_phi_sign(s_res.vectors[:, k - 1])
    nodal = nodal_points_1d(phi, grid, k)
    psi0 = comparison_vector(phi, omega, grid)
    paired = pair_and_sign(t_res, k, psi0, grid)

    row.overlap = paired.overlap
    row.sup_error, row.weighted_error = eigenfunction_errors(paired.psi, paired.psi0, omega, grid)
    violations = sign_agreement(
        paired.psi, phi, nodal, settings.sign_margin_factor * epsilon, grid
    )
    row.sign_violations = violations.count
    row.zero_violation_margin = violations.empirical_margin
    displacement = nodal_displacement(paired.psi, nodal, grid)
    row.nodal_displacement = displacement.value
    row.sign_domains = count_sign_domains(paired.psi, grid)
    recon = reconstruct_laplacian_eigenfunction(paired.psi, jf, epsilon, paired.psi0)
    row.unitarity_error = recon.norm_error
    _, row.laplacian_weighted_error = eigenfunction_errors(
        recon.field, recon.comparison, omega, grid
    )

    terminations = None
    if grid.dim == 2 and k == 2:
        terminations = nodal_polyline(paired.psi, grid).terminations

    return ModeDetail(
        index=k,
        phi=phi,
        nodal=nodal,
        paired=paired if keep_fields else None,
        displacement=displacement,
        polyline_terminations=terminations,
        psi_field=grid.to_field(paired.psi) if keep_fields else None,
        laplacian_field=recon.field if keep_fields else None,
    )


def run_epsilon(
    problem: Problem, epsilon: float, settings: SolverSettings, keep_fields: bool = False
) -> EpsilonRun:
    """Assemble, solve and measure everything for one ε."""
    started = time.perf_counter()
    grid = settings.grid_for(problem)
    omega = problem.omega

    jf, potential = problem.prepare(epsilon, grid)
    op_t = assemble_T(jf, potential, omega, epsilon, grid, settings.e1_shift)
    op_s = assemble_S(potential, grid)
    t_res = lowest_eigenpairs(op_t, settings.n, settings.tol, settings.seed)
    s_res = lowest_eigenpairs(op_s, settings.n, settings.tol, settings.seed)
    constant = assumption_constant(jf, potential)
    simple = decoupled_simplicity(s_res.values, omega, grid, epsilon, op_t.e1_shift)
    e1 = transverse_eigenpair(omega, 1).value

    run = EpsilonRun(epsilon=epsilon, rows=[], grid=grid, t_result=t_res, s_result=s_res)
    if keep_fields:
        run.operator = op_t

    for k in range(1, min(t_res.count, s_res.count) + 1):
        sigma, mu = float(t_res.values[k - 1]), float(s_res.values[k - 1])
        lam = sigma + op_t.e1_shift / epsilon**2
        row = SweepRow(
            epsilon=float(epsilon),
            n=k,
            sigma=sigma,
            mu=mu,
            sigma0=mu + op_t.transverse_offset,
            lambda_=lam,
            residual=float(t_res.residuals[k - 1]),
            converged=bool(t_res.converged[k - 1] and s_res.converged[k - 1]),
            clustered=bool(t_res.clustered[k - 1] or s_res.clustered[k - 1]),
            simple=bool(simple[k - 1]),
            assumption_constant=constant.value,
            potential_deviation=potential.deviation(),
            min_h=jf.min_h,
            m_s=grid.s_count,
            m_t="x".join(str(m) for m in grid.t_counts),
            tol=settings.tol,
            seed=settings.seed,
        )
        row.gap_sigma = abs(sigma - row.sigma0)
        row.gap_sigma_raw = abs(sigma - mu)
        row.gap_lambda = abs(lam - (mu + e1 / epsilon**2))

        if t_res.is_simple(k - 1) and s_res.is_simple(k - 1):
            try:
                run.details[k] = _mode_metrics(
                    row, k, t_res, s_res, jf, omega, grid, settings, keep_fields
                )
            except (SturmViolationError, PairingAmbiguityError) as exc:
                row.error = str(exc)
                logger.warning(f"eps={epsilon:g} n={k}: {exc}")
        else:
            row.error = "clustered or unconverged eigenpair; eigenfunction metrics skipped"
        run.rows.append(row)

    run.elapsed = time.perf_counter() - started
    logger.info(
        f"eps={epsilon:g}: {grid.describe()} grid, sigma_1={t_res.values[0]:.10g}, "
        f"mu_1={s_res.values[0]:.10g} ({run.elapsed:.2f}s)"
    )
    return run


def _failed_run(epsilon: float, settings: SolverSettings, exc: Exception) -> EpsilonRun:
    message = f"{type(exc).__name__}: {exc}"
    rows = [
        SweepRow(epsilon=float(epsilon), n=k, tol=settings.tol, seed=settings.seed, error=message)
        for k in range(1, settings.n + 1)
    ]
    return EpsilonRun(epsilon=float(epsilon), rows=rows, error=message)


@dataclass(frozen=True)
class FitOutcome:
    status: str
    slope: float = math.nan
    stderr: float = math.nan
    used: int = 0
    note: str = ""


def summarize_metric(points: Sequence[Tuple[float, float]]) -> FitOutcome:
    """Fit a rate, or report why no rate is meaningful."""
    values = np.array([v for _, v in points], dtype=float)
    finite = values[np.isfinite(values)]
    if finite.size and np.all(np.abs(finite) <= FLOOR):
        return FitOutcome("floor-limited", used=int(finite.size))
    try:
        fit: RateFit = fit_rate(points)
    except RateFitError as exc:
        return FitOutcome("insufficient", note=str(exc))
    return FitOutcome("ok", fit.slope, fit.stderr, fit.used)


@dataclass(eq=False)
class ConvergenceReport:
    problem: str
    settings: SolverSettings
    runs: List[EpsilonRun]
    fits: Dict[str, Dict[int, FitOutcome]] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def rows(self) -> List[SweepRow]:
        return [row for run in self.runs for row in run.rows]

    @property
    def epsilons(self) -> List[float]:
        return [run.epsilon for run in self.runs]

    @property
    def all_failed(self) -> bool:
        return all(run.failed for run in self.runs)

    def metric(self, name: str, n: int) -> List[Tuple[float, float]]:
        return [(row.epsilon, getattr(row, name)) for row in self.rows if row.n == n]

    def summary(self) -> dict:
        return {
            "problem": self.problem,
            "settings": asdict(self.settings),
            "epsilons": self.epsilons,
            "fits": {
                name: {str(n): asdict(outcome) for n, outcome in per_n.items()}
                for name, per_n in self.fits.items()
            },
            "checks": dict(self.checks),
            "failures": {str(run.epsilon): run.error for run in self.runs if run.failed},
        }


def _smallest_epsilon_checks(run: EpsilonRun) -> Dict[str, bool]:
    checks: Dict[str, bool] = {}
    if run.failed:
        return checks
    checks["simple_at_smallest_epsilon"] = all(row.simple for row in run.rows)
    checks["courant_sign_domains"] = all(
        row.sign_domains == row.n for row in run.rows if row.sign_domains >= 0
    )
    detail = run.details.get(2)
    if detail is not None and detail.polyline_terminations is not None:
        checks["nodal_line_two_boundary_points"] = detail.polyline_terminations == 2
    checks["unitarity"] = all(
        row.unitarity_error <= 1e-10 for row in run.rows if not math.isnan(row.unitarity_error)
    )
    return checks


def sweep_epsilon(
    problem: Problem,
    epsilons: Sequence[float],
    settings: SolverSettings,
    keep_fields: bool = False,
) -> ConvergenceReport:
    """Run the per-ε pipeline for every ε and fit log–log rates per metric and index."""
    epsilons = [float(e) for e in epsilons]
    logger.info(f"Sweep over {len(epsilons)} values of eps: {problem.describe()}")

    def task(eps: float) -> EpsilonRun:
        try:
            return run_epsilon(problem, eps, settings, keep_fields)
        except TubeSpectraError as exc:
            logger.error(f"eps={eps:g} failed: {exc}")
            return _failed_run(eps, settings, exc)
        except Exception as exc:
            logger.exception(f"eps={eps:g} failed unexpectedly")
            return _failed_run(eps, settings, exc)

    workers = max(1, min(settings.max_workers, len(epsilons)))
    if workers == 1:
        runs = [task(eps) for eps in epsilons]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(task, epsilons))

    report = ConvergenceReport(problem=problem.describe(), settings=settings, runs=runs)
    for name in FIT_METRICS:
        report.fits[name] = {
            n: summarize_metric(report.metric(name, n)) for n in range(1, settings.n + 1)
        }

    smallest = min(runs, key=lambda r: r.epsilon)
    report.checks.update(_smallest_epsilon_checks(smallest))
    for name, per_n in report.fits.items():
        for n, outcome in per_n.items():
            if outcome.status == "ok":
                logger.info(f"rate {name} n={n}: {outcome.slope:.3f} +- {outcome.stderr:.3f}")
    return report
