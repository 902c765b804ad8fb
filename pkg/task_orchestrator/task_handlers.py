"""
Task handlers for steinlab experiments.

Each declared task type maps to a handler that turns the task, its measure and
the run settings into ExperimentRecords. ``execute_payload`` is a top-level
function taking only plain data, so it can run inline or be shipped to Ray
workers unchanged.
"""

import math
import time
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import structlog

from clt.convolution import convolve_iid_1d
from clt.experiment import clt_experiment, mixed_sum_w2_check, resolve_poincare
from clt.propagation import draw_batches, empirical_discrepancy, normalized_sums, propagate_kernel
from clt.transport import standard_normal_grid, w2_empirical_nd, w2_quantile_1d
from config.config_manager import MeasureDecl, TaskDecl, TaskType
from config.settings import SystemSettings
from core.data_models import BoundDirection, ExperimentRecord, ReferenceMode
from core.exceptions import MomentBudgetError, SpectralError, SteinLabError
from galerkin.basis import build_basis
from galerkin.solver import kernel_field, run_degrees
from kernel1d.density import GridDensity1D
from kernel1d.field import KernelField
from kernel1d.io import write_kernel_csv
from kernel1d.residual import EmpiricalMeasure, weak_residual
from kernel1d.stein_kernel import closed_form_kernel, discrepancy_1d
from measures.catalog import catalog
from measures.moments import standardize
from measures.sampling import make_rng, sample
from measures.spec import MeasureSpec
from quadrature.integration import weighted_nodes
from spectral.poincare import (
    condition_c_estimate,
    converse_weight_bound,
    poincare_constant_1d,
    rayleigh_variational_bound,
)
from spectral.stability import stability_check_poincare, stability_check_weighted

logger = structlog.get_logger(__name__)

KERNEL_RESIDUAL_TOL = 1e-4
IN_SPAN_RESIDUAL_TOL = 1e-8
POTENTIAL_RESIDUAL_TOL = 1e-6
IDENTITY_TOL = 1e-6
CLOSED_FORM_GAP_TOL = 0.05
RAYLEIGH_TOL = 1e-3
MONOTONE_TOL = 1e-8
PROPAGATION_SLACK = 0.1
PROPAGATION_RESIDUAL_TOL = 0.05
PROPAGATION_EVAL_POINTS = 20_000
STABILITY_W2_POINTS = 2048
FISHER_TARGET_TOL = 1e-3


@dataclass
class TaskContext:
    """Everything a handler needs for one task."""
    index: int
    task: TaskDecl
    spec: MeasureSpec
    measures: Dict[str, MeasureDecl]
    system: SystemSettings
    out_dir: Path

    def param(self, key: str, default: Any = None) -> Any:
        value = self.task.params.get(key)
        return default if value is None else value

    @property
    def seed(self) -> int:
        return self.task.seed if self.task.seed is not None else self.system.clt.seed

    @property
    def name(self) -> str:
        return self.task.label or self.task.measure

    def measure(self, key: str) -> MeasureSpec:
        if key not in self.measures:
            raise ValueError(f"Task {self.index} references undeclared measure '{key}'")
        return build_measure(self.measures[key], self.system)


def build_measure(decl: MeasureDecl, system: Optional[SystemSettings] = None) -> MeasureSpec:
    """Catalog lookup, whitened when the declaration asks for it."""
    system = system or SystemSettings()
    spec = catalog(decl.name, decl.params, decl.check_ranges)
    if decl.standardize:
        spec = standardize(spec, system.integration)
    return spec


def _check(ctx: TaskContext, label: str, n: int, measured: float, bound: float, **extra: Any) -> ExperimentRecord:
    return ExperimentRecord.check(label, n, measured, bound, measure=ctx.spec.name, seed=ctx.task.seed, **extra)


def _info(ctx: TaskContext, label: str, n: int, measured: float, bound: float, **extra: Any) -> ExperimentRecord:
    return ExperimentRecord(label=label, n=n, measured=float(measured), bound=float(bound), passed=True,
                            informational=True, measure=ctx.spec.name, seed=ctx.task.seed, **extra)


def _deviation(ctx: TaskContext, label: str, n: int, value: float, expected: float, tol: float,
               **extra: Any) -> ExperimentRecord:
    """|value - expected| <= tol as a record."""
    metadata = dict(extra.pop("metadata", {}), value=value, expected=expected)
    return _check(ctx, label, n, abs(value - expected), tol, tolerance=0.0, metadata=metadata, **extra)


def _within(ctx: TaskContext, label: str, n: int, value: float, bounds: Sequence[float]) -> List[ExperimentRecord]:
    """Two records placing ``value`` inside [lo, hi]."""
    lo, hi = float(bounds[0]), float(bounds[1])
    return [
        _check(ctx, f"{label}-lower", n, value, lo, direction=BoundDirection.LOWER, tolerance=0.0),
        _check(ctx, f"{label}-upper", n, value, hi, tolerance=0.0),
    ]


def _optional_cp(ctx: TaskContext) -> Dict[str, object]:
    try:
        return resolve_poincare(ctx.spec, ctx.param("cp"), ctx.system)
    except SpectralError as e:
        logger.info("poincare_unavailable", measure=ctx.spec.name, reason=str(e))
        return {"cp": None, "cp_source": "unavailable"}


def _identity_records(ctx: TaskContext, tau: KernelField, n: int = 1) -> List[ExperimentRecord]:
    count = int(ctx.param("identity_points", 0))
    if count <= 0:
        return []
    points = sample(ctx.spec, count, ctx.seed)
    deviation = tau.matrix(points) - np.eye(tau.dim)[None, :, :]
    worst = float(np.max(np.abs(deviation)))
    return [_check(ctx, "identity-deviation", n, worst, float(ctx.param("identity_tol", IDENTITY_TOL)),
                   tolerance=0.0, metadata={"points": count})]


def handle_kernel1d(ctx: TaskContext) -> List[ExperimentRecord]:
    """Exact kernel, discrepancy and weak residual of a one-dimensional measure."""
    spec, system = ctx.spec, ctx.system
    if spec.dim != 1:
        raise ValueError(f"kernel1d tasks need a one-dimensional measure, {spec.name} has d={spec.dim}")
    started = time.perf_counter()
    p = GridDensity1D.from_spec(spec, system.kernel)
    tau = closed_form_kernel(p, system.kernel)
    if ctx.param("estimate_cp", False):
        estimate = poincare_constant_1d(spec, settings=system.spectral)
        cp_info = {"cp": estimate.cp_estimate, "cp_source": "spectral-estimate"}
    else:
        cp_info = resolve_poincare(spec, ctx.param("cp"), system)
    report = discrepancy_1d(tau, p, cp=float(cp_info["cp"]))
    runtime_ms = int(round(1000.0 * (time.perf_counter() - started)))

    records = [
        _check(ctx, "discrepancy-bound", 1, report.s_squared, report.bound_value, runtime_ms=runtime_ms,
               metadata={**cp_info, "second_moment_tau": report.second_moment_tau}),
        _check(ctx, "weak-residual", 1, report.residual_max,
               float(ctx.param("residual_tol", KERNEL_RESIDUAL_TOL)), tolerance=0.0),
    ]
    expected = ctx.param("expected_s_squared")
    if expected is not None:
        records.append(_deviation(ctx, "s-squared", 1, report.s_squared, float(expected),
                                  float(ctx.param("expected_tol", 1e-4))))
    slack = ctx.param("slack_range")
    if slack is not None:
        records.extend(_within(ctx, "bound-slack", 1, report.bound_value - report.s_squared, slack))
    records.extend(_identity_records(ctx, tau))

    if ctx.param("write_kernel", system.output.plot_data):
        path = write_kernel_csv(ctx.out_dir / f"kernel_{ctx.name}.csv", p, tau)
        logger.info("kernel_written", path=str(path))
    return records


def handle_galerkin(ctx: TaskContext) -> List[ExperimentRecord]:
    """Degree sweep of the Galerkin kernel with its structural checks."""
    spec, system = ctx.spec, ctx.system
    mode = ReferenceMode(ctx.param("mode", system.galerkin.mode))
    degrees = sorted(int(N) for N in ctx.param("degrees", system.galerkin.degrees))
    reference_key = ctx.param("reference")
    reference = ctx.measure(reference_key) if reference_key else None
    cp_info = _optional_cp(ctx)
    cp = cp_info["cp"]

    started = time.perf_counter()
    results = run_degrees(spec, degrees, mode, system.integration, system.galerkin, cp=cp,
                          probe=bool(ctx.param("probe", True)), reference=reference)
    runtime_ms = int(round(1000.0 * (time.perf_counter() - started)))

    records: List[ExperimentRecord] = []
    previous = None
    for result in results:
        N, report, solution = result.degree, result.report, result.solution
        meta = {"energy": solution.energy, "j_value": solution.j_value, "regularized": solution.regularized,
                "cond": solution.cond_estimate, "mode": mode.value}
        records.append(_check(ctx, "galerkin-in-span-residual", N, report.residual_max,
                              float(ctx.param("residual_tol", IN_SPAN_RESIDUAL_TOL)), tolerance=0.0,
                              runtime_ms=runtime_ms if result is results[-1] else 0, metadata=meta))
        if report.bound_value is not None:
            records.append(_check(ctx, "galerkin-discrepancy-bound", N, report.s_squared, report.bound_value,
                                  metadata={**meta, **cp_info}))
            records.append(_check(ctx, "galerkin-energy-bound", N, solution.energy,
                                  float(cp) * solution.second_moment, metadata=cp_info))
        if mode == ReferenceMode.POTENTIAL and report.out_of_span_residual is not None:
            worst = max(report.residual_max, report.out_of_span_residual)
            records.append(_check(ctx, "potential-residual", N, worst,
                                  float(ctx.param("potential_tol", POTENTIAL_RESIDUAL_TOL)), tolerance=0.0,
                                  metadata={"reference": reference_key or spec.name}))
        expected = ctx.param("expected_s_squared")
        if expected is not None:
            records.append(_deviation(ctx, "galerkin-s-squared", N, report.s_squared, float(expected),
                                      float(ctx.param("expected_tol", 1e-6)) * max(1.0, abs(float(expected)))))
        if previous is not None:
            records.append(_check(ctx, "galerkin-energy-monotonicity", N, solution.energy,
                                  previous.solution.energy, m=previous.degree,
                                  direction=BoundDirection.LOWER, tolerance=MONOTONE_TOL))
        previous = result

    top = results[-1]
    tau = kernel_field(top.solution)
    records.extend(_identity_records(ctx, tau, top.degree))
    if ctx.param("compare_closed_form", False):
        records.append(_closed_form_gap(ctx, tau, top.degree))
    if ctx.param("write_solution", system.output.write_solutions):
        path = top.solution.save(ctx.out_dir / f"solution_{ctx.name}.json")
        logger.info("solution_written", path=str(path), degree=top.degree)
    return records


def _closed_form_gap(ctx: TaskContext, tau: KernelField, degree: int) -> ExperimentRecord:
    """L2(nu) distance between a Galerkin kernel and the exact one-dimensional kernel."""
    if ctx.spec.dim != 1:
        raise ValueError("Closed-form comparison needs a one-dimensional measure")
    p = GridDensity1D.from_spec(ctx.spec, ctx.system.kernel)
    exact = closed_form_kernel(p, ctx.system.kernel)
    galerkin = tau.matrix(p.x)[:, 0, 0]
    gap = math.sqrt(max(p.expect((galerkin - exact.values) ** 2), 0.0))
    return _check(ctx, "galerkin-closed-form-gap", degree, gap,
                  float(ctx.param("closed_form_tol", CLOSED_FORM_GAP_TOL)), tolerance=0.0)


def handle_spectral(ctx: TaskContext) -> List[ExperimentRecord]:
    """Poincare constant estimates, Rayleigh lower bounds and the weighted side quantities."""
    spec, system = ctx.spec, ctx.system
    records: List[ExperimentRecord] = []
    cp = ctx.param("cp", spec.known_poincare)
    if spec.dim == 1:
        started = time.perf_counter()
        report = poincare_constant_1d(spec, ctx.param("grid"), system.spectral)
        runtime_ms = int(round(1000.0 * (time.perf_counter() - started)))
        meta = {"grid_size": report.grid_size, "convergence_gap": report.convergence_gap,
                "interval": report.interval}
        expected = ctx.param("expected_cp")
        if expected is not None:
            records.append(_deviation(ctx, "cp-estimate", 0, report.cp_estimate, float(expected),
                                      float(ctx.param("expected_tol", 1e-3)), runtime_ms=runtime_ms,
                                      metadata=meta))
        else:
            records.append(_info(ctx, "cp-estimate", 0, report.cp_estimate, report.cp_estimate,
                                 runtime_ms=runtime_ms, metadata=meta))
        cp = report.cp_estimate if ctx.param("cp") is None else cp

    degrees = sorted(int(N) for N in ctx.param("degrees", []))
    nodes = weighted_nodes(spec, system.integration) if degrees else None
    previous = None
    basis = None
    for N in degrees:
        basis = build_basis(spec, N, system.integration, nodes=nodes)
        value = rayleigh_variational_bound(spec, basis, system.integration, nodes)
        if cp is not None:
            records.append(_check(ctx, "rayleigh-lower-bound", N, value, float(cp), tolerance=RAYLEIGH_TOL))
        else:
            records.append(_info(ctx, "rayleigh-lower-bound", N, value, value))
        if previous is not None:
            records.append(_check(ctx, "rayleigh-monotonicity", N, value, previous[1], m=previous[0],
                                  direction=BoundDirection.LOWER, tolerance=MONOTONE_TOL))
        previous = (N, value)

    weight = ctx.param("weight", spec.weight)
    if weight is not None and basis is not None:
        second, witness = converse_weight_bound(spec, weight, basis, system.integration, nodes)
        records.append(_info(ctx, "converse-witness", basis.max_degree, witness, 1.0,
                             metadata={"weighted_second_moment": second,
                                       "refutes_converse": witness > 1.0}))
    if ctx.param("condition_c", False) and basis is not None:
        value = condition_c_estimate(spec, basis, system.integration, nodes)
        if cp is not None:
            second = float(nodes.integrate(np.sum(nodes.points ** 2, axis=1)))
            records.append(_check(ctx, "condition-c", basis.max_degree, value, float(cp) * second))
        else:
            records.append(_info(ctx, "condition-c", basis.max_degree, value, value))
    return records


def _w2_to_gaussian(ctx: TaskContext, spec: MeasureSpec) -> float:
    system = ctx.system
    if spec.dim == 1:
        return w2_quantile_1d(GridDensity1D.from_spec(spec, system.kernel), standard_normal_grid(system.kernel))
    if spec.is_product():
        return math.sqrt(sum(_w2_to_gaussian(ctx, m) ** 2 for m in spec.marginals))
    count = int(ctx.param("w2_points", STABILITY_W2_POINTS))
    xs = sample(spec, count, ctx.seed)
    ys = make_rng(ctx.seed + 1).standard_normal((count, spec.dim))
    logger.info("w2_empirical", measure=spec.name, points=count, note="plug-in estimate, biased upward")
    return w2_empirical_nd(xs, ys)


def handle_stability(ctx: TaskContext) -> List[ExperimentRecord]:
    """Poincare, weighted and Holder stability records."""
    spec, system = ctx.spec, ctx.system
    cp_info = resolve_poincare(spec, ctx.param("cp"), system)
    w2 = _w2_to_gaussian(ctx, spec)
    records = [stability_check_poincare(spec, float(cp_info["cp"]), w2, system.integration, system.spectral)]
    weight = ctx.param("weight", spec.weight)
    if weight is not None:
        records.append(stability_check_weighted(spec, weight, w2, None, system.integration, system.spectral))
        for p in ctx.param("holder", []):
            records.append(stability_check_weighted(spec, weight, w2, float(p), system.integration,
                                                    system.spectral))
    return records


def _propagation_records(ctx: TaskContext, options: Dict[str, Any]) -> List[ExperimentRecord]:
    """Propagate a kernel from S_m to S_n and check the discrepancy decay and weak residual."""
    spec, system = ctx.spec, ctx.system
    n = int(options["n"])
    m = int(options.get("m", 1))
    count = int(options.get("samples", system.clt.propagation_samples))
    started = time.perf_counter()
    if spec.dim == 1:
        p = GridDensity1D.from_spec(spec, system.kernel)
        law = convolve_iid_1d(p, m, system.clt) if m > 1 else p
        tau_m = closed_form_kernel(law, system.kernel)
        s_m = discrepancy_1d(tau_m, law, with_residual=False).s_squared
    else:
        if m != 1:
            raise ValueError("Multivariate propagation starts from the Galerkin kernel of nu itself (m=1)")
        degrees = [N for N in system.galerkin.degrees
                   if spec.moment_budget is None or 2 * N < spec.moment_budget]
        if not degrees:
            raise MomentBudgetError(
                f"No Galerkin degree in {list(system.galerkin.degrees)} fits the moment budget "
                f"{spec.moment_budget:g} of {spec.name}"
            )
        top = run_degrees(spec, [max(degrees)], cfg=system.integration, settings=system.galerkin, probe=False)[-1]
        tau_m = kernel_field(top.solution)
        s_m = top.report.s_squared

    tau_n = propagate_kernel(tau_m, draw_batches(spec, n, count, ctx.seed), n, m, system.clt)
    fresh = normalized_sums(draw_batches(spec, n, min(count, PROPAGATION_EVAL_POINTS), ctx.seed + 1))
    measured = empirical_discrepancy(tau_n, fresh)
    residual = weak_residual(tau_n, EmpiricalMeasure(fresh))
    runtime_ms = int(round(1000.0 * (time.perf_counter() - started)))
    bound = m / n * s_m * (1.0 + float(options.get("slack", PROPAGATION_SLACK)))
    return [
        _check(ctx, "propagation-discrepancy", n, measured, bound, m=m, runtime_ms=runtime_ms,
               metadata={"samples": count, "s_squared_m": s_m, "neighbours": tau_n.k}),
        _check(ctx, "propagation-residual", n, residual,
               float(options.get("residual_tol", PROPAGATION_RESIDUAL_TOL)), m=m, tolerance=0.0),
    ]


def _w2_slope(records: Sequence[ExperimentRecord], min_n: int) -> float:
    points = [(r.n, r.measured) for r in records if r.label == "w2-rate" and r.n >= min_n and r.measured > 0]
    if len(points) < 2:
        raise ValueError(f"A log-log slope needs at least two w2-rate records with n >= {min_n}")
    n, w2 = np.log(np.array(points, dtype=float)).T
    return float(np.polyfit(n, w2, 1)[0])


def handle_clt(ctx: TaskContext) -> List[ExperimentRecord]:
    """CLT bound records, plus mixed sums and kernel propagation when requested."""
    spec, system = ctx.spec, ctx.system
    if ctx.param("t") is not None:
        system.clt.t = float(ctx.param("t"))
    system.clt.seed = ctx.seed
    n_list = ctx.param("n_list")
    checks = ctx.param("checks")
    records = clt_experiment(spec, n_list, checks, ctx.param("cp"), system)

    slope = ctx.param("slope_range")
    if slope is not None:
        value = _w2_slope(records, int(ctx.param("slope_min_n", 4)))
        records.extend(_within(ctx, "w2-slope", 0, value, slope))
    mixed = ctx.param("mixed")
    if mixed:
        specs = [ctx.measure(key) for key in mixed]
        records.append(mixed_sum_w2_check(specs, ctx.param("mixed_cp"), system))
    target = ctx.param("fisher_target")
    if target is not None:
        records.extend(_check(ctx, "fisher-target", r.n, r.measured, float(target), tolerance=FISHER_TARGET_TOL,
                              metadata=r.metadata)
                       for r in list(records) if r.label == "fisher")
    propagation = ctx.param("propagation")
    if propagation:
        records.extend(_propagation_records(ctx, propagation))
    return records


HANDLERS: Dict[str, Callable[[TaskContext], List[ExperimentRecord]]] = {
    TaskType.KERNEL1D.value: handle_kernel1d,
    TaskType.GALERKIN.value: handle_galerkin,
    TaskType.SPECTRAL.value: handle_spectral,
    TaskType.CLT.value: handle_clt,
    TaskType.STABILITY.value: handle_stability,
}


def build_payload(index: int, task: TaskDecl, measures: Dict[str, MeasureDecl], system: SystemSettings,
                  out_dir: Path) -> Dict[str, Any]:
    """Plain-data description of one task."""
    return {
        "index": index,
        "task": task.model_dump(mode="json"),
        "measures": {key: decl.model_dump(mode="json") for key, decl in measures.items()},
        "settings": system.to_dict(),
        "out_dir": str(out_dir),
    }


def _finalize(ctx: TaskContext, records: List[ExperimentRecord]) -> List[ExperimentRecord]:
    """Point records at the measure declaration and prefix labels with the task label."""
    out = []
    for record in records:
        update: Dict[str, Any] = {}
        if record.measure in ("", ctx.spec.name):
            update["measure"] = ctx.task.measure
        if ctx.task.label:
            update["label"] = f"{ctx.task.label}.{record.label}"
        out.append(record.model_copy(update=update) if update else record)
    return out


def execute_payload(payload: Dict[str, Any]) -> Dict[str, Any]:
    """Run one task payload; failures are reported in the result, never raised."""
    started = time.perf_counter()
    index = payload.get("index", -1)
    result: Dict[str, Any] = {"index": index, "ok": False, "records": [], "error": None, "error_type": None}
    try:
        task = TaskDecl(**payload["task"])
        measures = {key: MeasureDecl(**decl) for key, decl in payload["measures"].items()}
        system = SystemSettings.from_dict(payload.get("settings"))
        ctx = TaskContext(
            index=index,
            task=task,
            spec=build_measure(measures[task.measure], system),
            measures=measures,
            system=system,
            out_dir=Path(payload.get("out_dir", system.output.out_dir)),
        )
        logger.info("task_started", index=index, type=task.type, measure=task.measure)
        records = _finalize(ctx, HANDLERS[TaskType(task.type).value](ctx))
        result["records"] = [record.model_dump() for record in records]
        result["ok"] = True
    except (SteinLabError, ValueError, ArithmeticError) as e:
        logger.error("task_failed", index=index, error=str(e), error_type=type(e).__name__)
        result["error"], result["error_type"] = str(e), type(e).__name__
    except Exception as e:
        logger.error("task_crashed", index=index, error=str(e), traceback=traceback.format_exc())
        result["error"], result["error_type"] = str(e), type(e).__name__
    result["runtime_ms"] = int(round(1000.0 * (time.perf_counter() - started)))
    return result
