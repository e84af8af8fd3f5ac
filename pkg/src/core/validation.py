"""Invariant suite run by ``tube-spectra validate``.

Each check builds small problems, measures one structural property of the discrete
pipeline and returns a ``CheckResult``. ``run_validation`` runs them all and never
raises for a failed property; unexpected exceptions are recorded as failures.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from core import curvature
from core.analysis import reconstruct_laplacian_eigenfunction, verify_sturm_properties
from core.cross_section import (
    CrossSection,
    discrete_e1,
    discrete_transverse_eigenvalues,
    boundary_slope_ratio,
    poincare_ratio,
    transverse_eigenpair,
)
from core.eigensolve import dense_oracle, lowest_eigenpairs
from core.geometry import (
    CurveSpec,
    check_immersion,
    jacobian_field,
    omega_radius,
    solve_tang_frame,
    thin_tube_bounds,
)
from core.grid import TensorGrid
from core.operators import (
    assemble_H,
    assemble_S,
    assemble_T,
    assemble_T0,
    assemble_T_bracket,
    assumption_constant,
    effective_potential,
    full_potential,
)
from core.surface import SurfaceStripSpec, assemble_surface_T, gauss_constant

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: Dict[str, object] = field(default_factory=dict)
    message: str = ""
    elapsed: float = 0.0


@dataclass
class ValidationReport:
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "checks": {
                r.name: {
                    "passed": r.passed,
                    "message": r.message,
                    "elapsed": r.elapsed,
                    **r.details,
                }
                for r in self.results
            },
        }


def _planar_curve(kappa: curvature.CurvatureFunction, length: float = np.pi) -> CurveSpec:
    return CurveSpec(dim=2, length=length, kappa1=kappa)


def _tube(curve: CurveSpec, omega: CrossSection, epsilon: float, s_count: int, t_counts):
    grid = TensorGrid.build(curve.length, s_count, omega.sides, t_counts)
    rot = solve_tang_frame(curve, grid.s_count + 1)
    jf = jacobian_field(curve, rot, epsilon, grid)
    return grid, jf, full_potential(jf, curve)


def check_oracle_equivalence(rng: np.random.Generator, cases: int = 20, n: int = 4) -> CheckResult:
    """Shift-invert and dense eigenpairs agree on random small assemblies."""
    omega = CrossSection.interval()
    worst_value, worst_vector = 0.0, 0.0
    for _ in range(cases):
        kappa = curvature.sine(
            amplitude=rng.uniform(0.2, 1.5),
            frequency=rng.uniform(0.5, 2.0),
            phase=rng.uniform(0, np.pi),
        )
        curve = _planar_curve(kappa)
        eps = min(0.3, rng.uniform(0.2, 0.8) / curve.c_gamma)
        grid, jf, pot = _tube(
            curve, omega, eps, int(rng.integers(16, 31)), int(rng.integers(6, 16))
        )
        op = assemble_T(jf, pot, omega, eps, grid)
        iterative = lowest_eigenpairs(op, n, seed=int(rng.integers(0, 2**31)))
        oracle = dense_oracle(op, n)
        rel = np.abs(iterative.values - oracle.values) / np.maximum(1.0, np.abs(oracle.values))
        worst_value = max(worst_value, float(rel.max()))
        for k in range(n):
            if iterative.clustered[k] or oracle.clustered[k]:
                continue
            a, b = iterative.vectors[:, k], oracle.vectors[:, k]
            diff = min(np.linalg.norm(a - b), np.linalg.norm(a + b)) * np.sqrt(op.weight)
            worst_vector = max(worst_vector, float(diff))
    passed = worst_value <= 1e-8 and worst_vector <= 1e-5
    return CheckResult(
        "oracle_equivalence",
        passed,
        {"cases": cases, "max_value_rel": worst_value, "max_vector_diff": worst_vector},
    )


def check_kronecker_identity(epsilon: float = 0.1) -> CheckResult:
    """spec(T₀) = spec(S) + ε⁻²(spec(−Δ′_h) − E_shift) as multisets."""
    omega = CrossSection.interval()
    curve = _planar_curve(curvature.sine(amplitude=1.0, frequency=1.0))
    grid = TensorGrid.build(curve.length, 30, omega.sides, 15)
    v0 = effective_potential(curve, grid)
    t0 = assemble_T0(v0, omega, epsilon, grid)
    s_values = dense_oracle(assemble_S(v0, grid)).values
    transverse = (discrete_transverse_eigenvalues(omega, grid.t_counts) - t0.e1_shift) / epsilon**2
    expected = np.sort(np.add.outer(s_values, transverse).ravel())
    actual = dense_oracle(t0).values
    err = float(np.max(np.abs(actual - expected) / np.maximum(1.0, np.abs(expected))))
    return CheckResult("kronecker_identity", err <= 1e-9, {"max_rel_error": err})


STURM_PRESETS: Dict[str, Callable[[], curvature.CurvatureFunction]] = {
    "straight": lambda: curvature.constant(0.0),
    "constant": lambda: curvature.constant(1.0),
    "sine": lambda: curvature.sine(amplitude=1.0, frequency=2.0),
    "bump": lambda: curvature.bump(amplitude=2.0, center=np.pi / 3, width=1.0),
    "offset_sine": lambda: curvature.sine(amplitude=0.5, frequency=1.0, phase=0.3, offset=0.5),
}


def check_sturm_suite(n: int = 6, s_count: int = 400) -> CheckResult:
    """Zero counts, bracket, simplicity and slopes of φ_n for the preset potentials."""
    failures: List[str] = []
    details: Dict[str, object] = {}
    for name, factory in STURM_PRESETS.items():
        curve = _planar_curve(factory())
        grid = TensorGrid.build(curve.length, s_count, (2.0,), 1).longitudinal()
        v0 = effective_potential(curve, grid)
        result = lowest_eigenpairs(assemble_S(v0, grid), n)
        report = verify_sturm_properties(result, grid, v0.v0_sup)
        details[name] = report.measurements.get("boundary_slope_ratio")
        if not report.passed:
            failures.append(f"{name}: {'; '.join(report.messages) or report.checks}")
    return CheckResult("sturm_suite", not failures, details, "; ".join(failures))


def check_poincare(rng: np.random.Generator, samples: int = 1000) -> CheckResult:
    """‖∇ψ‖² ≥ E₁,h‖ψ‖² for random interior vectors, E₁,h the sharp discrete constant."""
    worst = np.inf
    cases = ((CrossSection.interval(), (201,)), (CrossSection.rectangle((1.0, 1.0)), (15, 15)))
    for omega, counts in cases:
        e1 = discrete_e1(omega, counts)
        for _ in range(samples // 2):
            ratio = poincare_ratio(omega, rng.standard_normal(counts))
            worst = min(worst, ratio / e1)
    return CheckResult("poincare", worst >= 1.0 - 1e-12, {"min_ratio_over_e1": float(worst)})


def check_transverse_modes() -> CheckResult:
    """𝒥₁ is normalized, positive and bounded below by c·dist(t, ∂ω)."""
    details = {}
    passed = True
    cases = ((CrossSection.interval(), (60,)), (CrossSection.rectangle((1.0, 1.0)), (20, 20)))
    for omega, counts in cases:
        pair = transverse_eigenpair(omega, 1)
        err = pair.normalization_error()
        ratio = boundary_slope_ratio(omega, counts)
        gap = transverse_eigenpair(omega, 2).value - pair.value
        details[omega.describe()] = {"normalization_error": err, "slope_ratio": ratio, "gap": gap}
        passed &= err <= 1e-10 and ratio > 0 and gap > 0
    return CheckResult("transverse_modes", bool(passed), details)


def check_unitarity(epsilon: float = 0.1) -> CheckResult:
    omega = CrossSection.interval()
    curve = _planar_curve(curvature.sine(amplitude=1.0, frequency=1.5, phase=0.4))
    grid, jf, pot = _tube(curve, omega, epsilon, 80, 20)
    result = lowest_eigenpairs(assemble_T(jf, pot, omega, epsilon, grid), 3)
    worst = max(
        reconstruct_laplacian_eigenfunction(result.vectors[:, k], jf, epsilon).norm_error
        for k in range(result.count)
    )
    return CheckResult("unitarity", worst <= 1e-10, {"max_norm_error": float(worst)})


def check_rotation_orthogonality() -> CheckResult:
    kappas = (
        curvature.sine(amplitude=0.3, frequency=1.0),
        curvature.sine(amplitude=1.0, frequency=2.0, offset=0.5),
        curvature.constant(0.7),
    )
    curve = CurveSpec(dim=4, length=2 * np.pi, kappa1=kappas[0], higher_kappas=kappas[1:])
    rot = solve_tang_frame(curve, 400)
    defect = float(rot.orthogonality_defect().max())
    det = float(np.max(np.abs(np.linalg.det(rot.matrices) - 1.0)))
    return CheckResult(
        "rotation_orthogonality",
        defect <= 1e-9 and det <= 1e-9,
        {"max_defect": defect, "max_det_error": det, "corrections": rot.corrections},
    )


def check_symmetry_and_bracket(epsilon: float = 0.1) -> CheckResult:
    """Exact symmetry of every assembly, T− ≤ T ≤ T+, H − T = ε⁻²E₁ and the form lower bound."""
    omega = CrossSection.interval()
    curve = _planar_curve(curvature.bump(amplitude=0.8, center=1.2, width=1.2))
    grid, jf, pot = _tube(curve, omega, epsilon, 30, 12)
    op_t = assemble_T(jf, pot, omega, epsilon, grid)
    op_h = assemble_H(jf, pot, omega, epsilon, grid)
    op_t0 = assemble_T0(pot, omega, epsilon, grid)
    op_s = assemble_S(pot, grid)
    constant = assumption_constant(jf, pot)
    minus, plus = assemble_T_bracket(jf, pot, omega, epsilon, grid, constant.value)

    symmetric = all(op.is_symmetric() for op in (op_t, op_h, op_t0, op_s, minus, plus))
    values = dense_oracle(op_t).values
    lower = dense_oracle(minus).values
    upper = dense_oracle(plus).values
    slack = 1e-9 * np.maximum(1.0, np.abs(values))
    bracketed = bool(np.all(lower <= values + slack) and np.all(values <= upper + slack))

    diff = (op_h.matrix - op_t.matrix).toarray()
    shift = op_t.e1_shift / epsilon**2
    identity_err = float(np.max(np.abs(diff - shift * np.eye(op_t.dimension))) / shift)
    bounded = bool(values[0] >= -(1.0 + constant.value))

    return CheckResult(
        "symmetry_and_bracket",
        symmetric and bracketed and identity_err <= 1e-12 and bounded,
        {
            "symmetric": symmetric,
            "bracketed": bracketed,
            "h_minus_t_error": identity_err,
            "lowest_eigenvalue": float(values[0]),
            "assumption_constant": constant.value,
        },
    )


def check_thin_tube_bounds() -> CheckResult:
    omega = CrossSection.rectangle((1.0, 1.0))
    curve = CurveSpec(
        dim=3,
        length=np.pi,
        kappa1=curvature.sine(amplitude=1.0, frequency=1.0, offset=0.2),
        higher_kappas=(curvature.constant(0.5),),
    )
    details = {}
    passed = True
    for eps in (0.2, 0.1):
        grid, jf, _ = _tube(curve, omega, eps, 40, 8)
        bounds = thin_tube_bounds(curve, jf)
        validity = check_immersion(curve, omega_radius(grid), eps)
        inside = bool(validity.lower - 1e-12 <= jf.h.min() and jf.h.max() <= validity.upper + 1e-12)
        details[str(eps)] = {"bounds": bounds.passed, "ellipticity": inside}
        passed &= bounds.passed and inside
    return CheckResult("thin_tube_bounds", bool(passed), details)


def check_order_invariance(scale: float = 3.7) -> CheckResult:
    """Multiplying T by a positive constant leaves the eigenvector order unchanged."""
    omega = CrossSection.interval()
    curve = _planar_curve(curvature.constant(1.0))
    grid, jf, pot = _tube(curve, omega, 0.1, 24, 8)
    op = assemble_T(jf, pot, omega, 0.1, grid)
    base = dense_oracle(op, 5)
    scaled = dense_oracle(type(op).from_matrix(scale * op.matrix), 5)
    overlaps = np.abs(np.sum(base.vectors * scaled.vectors, axis=0)) * np.sqrt(
        base.weight * scaled.weight
    )
    return CheckResult(
        "order_invariance",
        bool(np.all(overlaps > 1 - 1e-8)),
        {"min_overlap": float(overlaps.min())},
    )


def check_flat_surface(epsilon: float = 0.1) -> CheckResult:
    """A strip on a flat surface reproduces the planar tube assembly."""
    kappa = curvature.sine(amplitude=0.8, frequency=1.0, phase=0.5)
    spec = SurfaceStripSpec(length=np.pi, kappa=kappa, gauss=gauss_constant(0.0), epsilon=epsilon)
    omega = spec.omega
    grid, jf, pot = _tube(_planar_curve(kappa), omega, epsilon, 40, 15)
    planar = assemble_T(jf, pot, omega, epsilon, grid).matrix
    strip = assemble_surface_T(spec, grid).matrix
    err = float(abs(planar - strip).max() / abs(planar).max())
    return CheckResult("flat_surface", err <= 1e-12, {"max_rel_entry_diff": err})


def run_validation(seed: int = 0, only: Optional[List[str]] = None) -> ValidationReport:
    """Run every check (or the named subset) and collect the results."""
    rng = np.random.default_rng(seed)
    checks: Dict[str, Callable[[], CheckResult]] = {
        "oracle_equivalence": lambda: check_oracle_equivalence(rng),
        "kronecker_identity": check_kronecker_identity,
        "sturm_suite": check_sturm_suite,
        "poincare": lambda: check_poincare(rng),
        "transverse_modes": check_transverse_modes,
        "unitarity": check_unitarity,
        "rotation_orthogonality": check_rotation_orthogonality,
        "symmetry_and_bracket": check_symmetry_and_bracket,
        "thin_tube_bounds": check_thin_tube_bounds,
        "order_invariance": check_order_invariance,
        "flat_surface": check_flat_surface,
    }
    report = ValidationReport()
    for name, check in checks.items():
        if only and name not in only:
            continue
        started = time.perf_counter()
        try:
            result = check()
        except Exception as exc:
            logger.exception(f"check {name} raised")
            result = CheckResult(name, False, message=f"{type(exc).__name__}: {exc}")
        result.elapsed = time.perf_counter() - started
        status = "PASS" if result.passed else "FAIL"
        logger.info(f"{status} {name} ({result.elapsed:.2f}s) {result.message}")
        report.results.append(result)
    return report
