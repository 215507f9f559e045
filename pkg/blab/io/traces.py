import csv
import logging
from enum import Enum
from pathlib import Path

import numpy as np

from blab.analysis.simultaneous import SimultaneousResult
from blab.analysis.singular import SingularInnerSurrogate
from blab.analysis.universal import TruncatedUniversalProduct, error_trace
from blab.core.sampling import BoundarySampleSet

RADIAL_STEPS = 64


class TraceKind(Enum):
    BOUNDARY = "boundary"
    RADIAL = "radial"
    UNIVERSAL = "universal"


def _evaluator(result):
    """Callable approximant and the dilation radius its K-side error refers to."""
    if isinstance(result, SimultaneousResult):
        return result.B, result.r_used
    if isinstance(result, SingularInnerSurrogate):
        return result, result.r_used
    return result, None


def boundary_rows(result, K: BoundarySampleSet) -> list[list[float]]:
    """(angle, target, value of the approximant or its dilate, error), ascending in angle."""
    evaluator, r = _evaluator(result)
    targets = K.require_targets()
    order = np.argsort(K.angles, kind="stable")
    points = K.points[order]
    values = evaluator(points if r is None else r * points)
    rows = []
    for angle, target, value in zip(K.angles[order], targets[order], np.atleast_1d(values)):
        rows.append([float(angle), target.real, target.imag, value.real, value.imag, float(abs(value - target))])
    return rows


def radial_rows(result, angles, steps: int = RADIAL_STEPS) -> list[list[float]]:
    """(angle, r, |B(r e^{i angle})|) for r = 0, 1/steps, ..., 1, ascending in angle then r."""
    evaluator, _ = _evaluator(result)
    radii = np.arange(steps + 1) / steps
    rows = []
    for angle in sorted(float(a) for a in angles):
        values = np.abs(evaluator(radii * np.exp(1j * angle)))
        rows.extend([angle, float(r), float(v)] for r, v in zip(radii, values))
    return rows


def universal_rows(T: TruncatedUniversalProduct) -> list[list[float]]:
    """(k, r_k, measured, certified) per stage."""
    return [[k, T.radii[k], measured, bound] for k, measured, bound in error_trace(T)]


HEADERS = {
    TraceKind.BOUNDARY: ["angle", "target_re", "target_im", "value_re", "value_im", "error"],
    TraceKind.RADIAL: ["angle", "r", "modulus"],
    TraceKind.UNIVERSAL: ["k", "r_k", "measured", "certified"],
}


def emit_trace(result, kind: TraceKind | str, path, K: BoundarySampleSet | None = None) -> Path:
    """Write a CSV trace with a header row.

    Boundary and radial traces need the sample set K (radial traces fall back
    to the angle 0 without it); universal traces need a truncated product.
    """
    kind = TraceKind(kind)
    if kind is TraceKind.BOUNDARY:
        if K is None:
            raise ValueError("A boundary trace needs the sample set K.")
        rows = boundary_rows(result, K)
    elif kind is TraceKind.RADIAL:
        angles = K.angles if K is not None and K.size else [0.0]
        rows = radial_rows(result, angles)
    else:
        if not isinstance(result, TruncatedUniversalProduct):
            raise ValueError("A universal trace needs a truncated universal product.")
        rows = universal_rows(result)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(HEADERS[kind])
        for row in rows:
            writer.writerow([f"{value:.17g}" if isinstance(value, float) else value for value in row])
    logging.info(f"{kind.value} trace written: {path} ({len(rows)} rows)")
    return path
