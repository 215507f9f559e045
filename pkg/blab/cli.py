import argparse
import logging
import sys
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as npoly

from blab.analysis.approx import caratheodory_approximate, fisher_interpolate
from blab.analysis.peak import ExtensionMethod
from blab.analysis.simultaneous import prepare_disc, radius_stability, simultaneous_circle
from blab.analysis.singular import (
    SingularInnerSurrogate,
    simultaneous_singular_circle,
    simultaneous_singular_disc,
)
from blab.analysis.universal import (
    RadiusSchedule,
    TruncatedUniversalProduct,
    build_universal,
    certificates_hold,
    check_membership,
    error_trace,
)
from blab.config.settings import GRID_N, LOG_LEVEL, SEED
from blab.core.sampling import BoundarySampleSet, InteriorRegion
from blab.core.transforms import BoundaryGrid
from blab.errors import BlabError, SpecValidationError, StageFailureError
from blab.io.codec import (
    approximant_from_dict,
    complex_from_json,
    complex_list_from_json,
    product_from_dict,
    product_to_dict,
    read_json,
    result_to_dict,
    surrogate_to_dict,
    universal_to_dict,
    write_json,
)
from blab.io.traces import TraceKind, emit_trace

TASKS = (
    "caratheodory",
    "fisher",
    "simultaneous-circle",
    "simultaneous-disc",
    "singular-circle",
    "singular-disc",
    "universal",
    "check-membership",
    "verify",
)
EXIT_OK = 0
EXIT_SPEC = 2
EXIT_PIPELINE = 3
RESULT_FILE = "result.json"
# Tasks whose result can be a truncated universal product.
UNIVERSAL_TRACE_TASKS = ("universal", "verify", "check-membership")


@dataclass(frozen=True)
class ConstantFunction:
    value: complex

    def __call__(self, z):
        return np.full(np.shape(z), self.value, dtype=complex)


@dataclass(frozen=True)
class RationalFunction:
    """p/q with coefficient lists in ascending order."""

    numerator: np.ndarray
    denominator: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return npoly.polyval(z, self.numerator) / npoly.polyval(z, self.denominator)


@dataclass
class ProblemSpec:
    task: str
    K: BoundarySampleSet
    L: InteriorRegion
    f: Callable
    epsilon: float
    seed: int = SEED
    grid_N: int = GRID_N
    method: ExtensionMethod = ExtensionMethod.PEAK
    radii: list[float] = field(default_factory=list)
    targets: list[np.ndarray] = field(default_factory=list)
    schedule: RadiusSchedule | None = None
    probes: list[np.ndarray] = field(default_factory=list)
    tol: float | None = None


def _function_from_dict(data) -> Callable:
    if data is None:
        return ConstantFunction(0j)
    if not isinstance(data, dict) or "type" not in data:
        raise SpecValidationError(f"f must be an object with a 'type', got {data!r}")
    kind, payload = data["type"], data.get("payload")
    if kind == "constant":
        return ConstantFunction(complex_from_json(payload))
    if kind == "blaschke":
        return product_from_dict(payload or {})
    if kind == "singular":
        return SingularInnerSurrogate(B=product_from_dict(payload or {}))
    if kind == "rational":
        if not isinstance(payload, dict):
            raise SpecValidationError("A rational f needs a payload with 'numerator' and 'denominator'.")
        numerator = complex_list_from_json(payload.get("numerator", []))
        denominator = complex_list_from_json(payload.get("denominator", []))
        if numerator.size == 0 or denominator.size == 0:
            raise SpecValidationError("Rational f needs non-empty numerator and denominator coefficients.")
        return RationalFunction(numerator, denominator)
    raise SpecValidationError(f"Unsupported f type: {kind!r}")


def _region_from_dict(data) -> InteriorRegion:
    if data is None:
        return InteriorRegion.disc(0.0)
    if not isinstance(data, dict):
        raise SpecValidationError(f"L must be an object, got {data!r}")
    kind = data.get("type", "disc")
    if kind == "disc":
        return InteriorRegion.disc(float(data.get("radius", 0.5)), grid_density=int(data.get("grid", 32)))
    if kind == "points":
        return InteriorRegion.from_points(complex_list_from_json(data.get("points", [])))
    raise SpecValidationError(f"Unsupported L type: {kind!r}")


def _vector(value, size: int) -> np.ndarray:
    """A target vector given either per point or as one broadcast value."""
    if isinstance(value, list) and value and isinstance(value[0], list):
        vec = complex_list_from_json(value)
        if vec.size != size:
            raise SpecValidationError(f"Expected {size} target values, got {vec.size}")
        return vec
    return np.full(size, complex_from_json(value), dtype=complex)


def problem_from_dict(data: dict, task: str, seed: int | None = None, grid_n: int | None = None) -> ProblemSpec:
    """Validate a parsed problem file.

    Raises:
        SpecValidationError: On any schema or domain problem.
    """
    if not isinstance(data, dict):
        raise SpecValidationError("The problem file must hold a JSON object.")
    if data.get("task", task) != task:
        raise SpecValidationError(f"Problem file is for task {data['task']!r}, not {task!r}")
    try:
        k_data = data.get("K", {}) or {}
        angles = [float(a) for a in k_data.get("angles", [])]
        raw_targets = k_data.get("targets")
        targets = complex_list_from_json(raw_targets) if raw_targets is not None else None
        K = BoundarySampleSet.from_angles(angles, targets)
        epsilon = float(data.get("epsilon", 0.25))
        if not 0.0 < epsilon < 1.0:
            raise SpecValidationError(f"epsilon must lie in (0, 1), got {epsilon}")
        grid_N = int(grid_n if grid_n is not None else data.get("grid_N", GRID_N))
        BoundaryGrid(grid_N)
        schedule = RadiusSchedule(tuple(data["schedule"])) if data.get("schedule") else None
        spec = ProblemSpec(
            task=task,
            K=K,
            L=_region_from_dict(data.get("L")),
            f=_function_from_dict(data.get("f")),
            epsilon=epsilon,
            seed=int(seed if seed is not None else data.get("seed", SEED)),
            grid_N=grid_N,
            method=ExtensionMethod(data.get("method", ExtensionMethod.PEAK.value)),
            radii=[float(r) for r in data.get("radii", [])],
            targets=[_vector(t, K.size) for t in data.get("targets", [])],
            schedule=schedule,
            probes=[_vector(p, K.size) for p in data.get("probes", [])],
            tol=float(data["tol"]) if "tol" in data else None,
        )
    except SpecValidationError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise SpecValidationError(f"Invalid problem file: {exc}") from exc
    return spec


def check_trace_request(task: str, trace: str | None, spec: ProblemSpec) -> None:
    """Reject a trace kind the task cannot produce before any pipeline runs.

    Raises:
        SpecValidationError: If the trace does not fit the task or the problem.
    """
    if trace is None:
        return
    kind = TraceKind(trace)
    if kind is TraceKind.UNIVERSAL and task not in UNIVERSAL_TRACE_TASKS:
        raise SpecValidationError(f"A universal trace needs a truncated universal product; task {task!r} has none.")
    if kind is TraceKind.BOUNDARY and spec.K.targets is None:
        raise SpecValidationError("A boundary trace needs targets on K.")


def _error_on(evaluator: Callable, points: np.ndarray, targets) -> float:
    if points.size == 0:
        return 0.0
    values = np.broadcast_to(np.asarray(evaluator(points), dtype=complex), points.shape)
    return float(np.max(np.abs(values - targets)))


def _run_caratheodory(spec: ProblemSpec, args):
    B = caratheodory_approximate(spec.f, spec.L, spec.epsilon)
    check = spec.L.grid(refine=2)
    err_L = _error_on(B, check, spec.f(check))
    return {"approximant": product_to_dict(B), "err_L": err_L}, err_L < spec.epsilon, B


def _run_fisher(spec: ProblemSpec, args):
    B = fisher_interpolate(spec.K, spec.epsilon, seed=spec.seed)
    err_K = _error_on(B, spec.K.points, spec.K.require_targets())
    return {"approximant": product_to_dict(B), "err_K": err_K}, err_K < spec.epsilon, B


def _run_simultaneous_circle(spec: ProblemSpec, args):
    result = simultaneous_circle(spec.K, spec.f, spec.L, spec.epsilon, seed=spec.seed)
    return result_to_dict(result), True, result


def _run_simultaneous_disc(spec: ProblemSpec, args):
    grid = BoundaryGrid(spec.grid_N)
    plan = prepare_disc(spec.K, spec.f, spec.L, spec.epsilon, method=spec.method, grid=grid, seed=spec.seed)
    results = radius_stability(plan, spec.radii or [plan.default_radius])
    payload = {"r0": plan.r0, "results": [result_to_dict(r) for r in results]}
    return payload, True, results[0]


def _run_singular_circle(spec: ProblemSpec, args):
    S = simultaneous_singular_circle(spec.K, spec.f, spec.L, spec.epsilon, seed=spec.seed)
    return surrogate_to_dict(S), True, S


def _run_singular_disc(spec: ProblemSpec, args):
    r0, build = simultaneous_singular_disc(
        spec.K, spec.f, spec.L, spec.epsilon, method=spec.method, grid=BoundaryGrid(spec.grid_N), seed=spec.seed
    )
    surrogates = [build(r) for r in (spec.radii or [None])]
    payload = {"r0": r0, "results": [surrogate_to_dict(S) for S in surrogates]}
    return payload, True, surrogates[0]


def _run_universal(spec: ProblemSpec, args):
    targets = spec.targets or ([spec.K.require_targets()] if spec.K.targets is not None else [])
    if not targets:
        raise SpecValidationError("The universal task needs 'targets' (a list of target vectors).")
    T = build_universal(
        spec.K, targets, spec.schedule, method=spec.method, grid=BoundaryGrid(spec.grid_N), seed=spec.seed
    )
    ok = T.failed_stage is None and certificates_hold(T)
    return universal_to_dict(T), ok, T


def _load_approximant(args):
    if not args.approximant:
        raise SpecValidationError("This task needs --approximant pointing at a result JSON.")
    data = read_json(args.approximant)
    if "approximant" not in data and "results" in data and data["results"]:
        data = data["results"][0]
    if "approximant" not in data:
        raise SpecValidationError(f"{args.approximant} holds no approximant.")
    try:
        return approximant_from_dict(data["approximant"]), data
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError(f"Invalid approximant in {args.approximant}: {exc}") from exc


def _run_check_membership(spec: ProblemSpec, args):
    f = _load_approximant(args)[0] if args.approximant else spec.f
    if spec.schedule is None or not spec.probes:
        raise SpecValidationError("check-membership needs a 'schedule' and 'probes'.")
    tol = spec.tol if spec.tol is not None else spec.epsilon
    report = check_membership(f, spec.K, spec.probes, spec.schedule, tol)
    payload = {
        "entries": [[i, r, err] for i, r, err in report.entries],
        "tol": tol,
        "passed": report.passed,
    }
    return payload, report.passed, f


def _run_verify(spec: ProblemSpec, args):
    approximant, data = _load_approximant(args)
    if isinstance(approximant, TruncatedUniversalProduct):
        trace = error_trace(approximant)
        ok = certificates_hold(approximant)
        return {"error_trace": [[k, e, b] for k, e, b in trace], "passed": ok}, ok, approximant
    r = data.get("r_used")
    if spec.radii:
        r = spec.radii[0]
    points = spec.K.points if r is None else float(r) * spec.K.points
    err_K = _error_on(approximant, points, spec.K.require_targets()) if spec.K.size else 0.0
    check = spec.L.grid(refine=2)
    err_L = _error_on(approximant, check, spec.f(check))
    ok = err_K < spec.epsilon and err_L < spec.epsilon
    return {"err_K": err_K, "err_L": err_L, "r_used": r, "passed": ok}, ok, approximant


RUNNERS = {
    "caratheodory": _run_caratheodory,
    "fisher": _run_fisher,
    "simultaneous-circle": _run_simultaneous_circle,
    "simultaneous-disc": _run_simultaneous_disc,
    "singular-circle": _run_singular_circle,
    "singular-disc": _run_singular_disc,
    "universal": _run_universal,
    "check-membership": _run_check_membership,
    "verify": _run_verify,
}


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(
        prog="blab",
        description="Simultaneous approximation by finite Blaschke products on boundary and interior sets.",
    )
    parser.add_argument("task", choices=TASKS, help="Pipeline to run.")
    parser.add_argument("--spec", type=str, required=True, help="Path to the JSON problem file.")
    parser.add_argument("--out", type=str, required=True, help="Directory receiving result.json and traces.")
    parser.add_argument(
        "--trace",
        type=str,
        choices=[kind.value for kind in TraceKind],
        default=None,
        help="Also write a CSV trace of this kind (default: none).",
    )
    parser.add_argument("--grid-n", type=int, default=None, help="Boundary grid size, a power of two (default: 4096).")
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized candidate search and sampled sup norms (default: 0).")
    parser.add_argument("--log-level", type=str, default=LOG_LEVEL, help="Logging level (default: INFO).")
    parser.add_argument(
        "--approximant",
        type=str,
        default=None,
        help="Result JSON whose approximant the verify and check-membership tasks audit.",
    )
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_arguments(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
    )
    out_dir = Path(args.out)

    try:
        spec = problem_from_dict(read_json(args.spec), args.task, seed=args.seed, grid_n=args.grid_n)
        check_trace_request(args.task, args.trace, spec)
        payload, ok, result = RUNNERS[args.task](spec, args)
        if args.trace:
            try:
                emit_trace(result, args.trace, out_dir / f"trace_{args.trace}.csv", K=spec.K)
            except ValueError as exc:
                raise SpecValidationError(f"Cannot write a {args.trace} trace: {exc}") from exc
    except SpecValidationError as exc:
        logging.error(f"Invalid problem: {exc}")
        return EXIT_SPEC
    except StageFailureError as exc:
        logging.error(f"Pipeline failed at stage {exc.stage}: {exc}")
        failure = {"task": args.task, "status": "failed", "stage": exc.stage, "message": str(exc)}
        failure["budget_log"] = [[str(s), float(b), float(m)] for s, b, m in exc.budget_log]
        write_json(failure, out_dir / RESULT_FILE)
        return EXIT_PIPELINE
    except BlabError as exc:
        logging.error(f"Pipeline failed: {exc}")
        write_json({"task": args.task, "status": "failed", "stage": type(exc).__name__, "message": str(exc)}, out_dir / RESULT_FILE)
        return EXIT_PIPELINE

    payload = {"task": args.task, "status": "ok" if ok else "tolerance-missed", "epsilon": spec.epsilon, **payload}
    write_json(payload, out_dir / RESULT_FILE)
    if not ok:
        logging.warning("Requested tolerances were not met.")
    return EXIT_OK if ok else EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
