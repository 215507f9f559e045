import json
import logging
import math
from pathlib import Path

import numpy as np

from blab.analysis.simultaneous import SimultaneousResult
from blab.analysis.singular import SingularInnerSurrogate
from blab.analysis.universal import TruncatedUniversalProduct, error_trace
from blab.core.blaschke import FiniteBlaschkeProduct
from blab.core.sampling import BoundarySampleSet
from blab.errors import SpecValidationError


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(pair) -> complex:
    if isinstance(pair, (int, float)) and not isinstance(pair, bool):
        return complex(pair)
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise SpecValidationError(f"Expected a complex number as [re, im], got {pair!r}")
    try:
        z = complex(float(pair[0]), float(pair[1]))
    except (TypeError, ValueError):
        raise SpecValidationError(f"Expected a complex number as [re, im], got {pair!r}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise SpecValidationError(f"Complex values must be finite, got {pair!r}")
    return z


def complex_list_from_json(values) -> np.ndarray:
    if not isinstance(values, list):
        raise SpecValidationError(f"Expected a list of [re, im] pairs, got {values!r}")
    return np.array([complex_from_json(v) for v in values], dtype=complex)


def product_to_dict(B: FiniteBlaschkeProduct) -> dict:
    return {
        "type": "blaschke",
        "zeta": complex_to_json(B.zeta),
        "zeros": [complex_to_json(w) for w in B.zeros],
        "degree": B.degree,
    }


def product_from_dict(data: dict) -> FiniteBlaschkeProduct:
    try:
        zeta = complex_from_json(data.get("zeta", [1.0, 0.0]))
        zeros = tuple(complex_from_json(w) for w in data.get("zeros", []))
        return FiniteBlaschkeProduct.from_normalized(zeta, zeros)
    except (AttributeError, ValueError) as exc:
        raise SpecValidationError(f"Invalid Blaschke product payload: {exc}") from exc


def _log_to_json(budget_log) -> list:
    return [[str(stage), float(budget), float(measured)] for stage, budget, measured in budget_log]


def _optional(x):
    return None if x is None else float(x)


def result_to_dict(result: SimultaneousResult) -> dict:
    return {
        "approximant": product_to_dict(result.B),
        "err_K": float(result.err_K),
        "err_L": float(result.err_L),
        "r0": _optional(result.r0),
        "r_used": _optional(result.r_used),
        "w_used": _optional(result.w_used),
        "budget_log": _log_to_json(result.budget_log),
    }


def surrogate_to_dict(S: SingularInnerSurrogate) -> dict:
    return {
        "approximant": {"type": "singular", "B": product_to_dict(S.B)},
        "err_K": _optional(S.err_K),
        "err_L": _optional(S.err_L),
        "r_used": _optional(S.r_used),
        "budget_log": _log_to_json(S.budget_log),
    }


def universal_to_dict(T: TruncatedUniversalProduct) -> dict:
    return {
        "approximant": {
            "type": "universal",
            "K": [float(a) for a in T.K.angles],
            "factors": [product_to_dict(B) for B in T.factors],
            "radii": [float(r) for r in T.radii],
            "targets": [[complex_to_json(v) for v in phi] for phi in T.targets],
            "budgets": [[float(b), float(c)] for b, c in T.budgets],
        },
        "degree_ledger": T.degree_ledger,
        "certificates": [
            {key: (None if value is None else float(value)) for key, value in cert.items()} for cert in T.certificates
        ],
        "error_trace": [[k, float(e), float(bound)] for k, e, bound in error_trace(T)],
        "failed_stage": T.failed_stage,
        "budget_log": _log_to_json(T.budget_log),
    }


def universal_from_dict(data: dict) -> TruncatedUniversalProduct:
    K = BoundarySampleSet.from_angles(data["K"])
    return TruncatedUniversalProduct(
        K=K,
        factors=[product_from_dict(B) for B in data["factors"]],
        radii=[float(r) for r in data["radii"]],
        targets=[complex_list_from_json(phi) for phi in data["targets"]],
        budgets=[(float(b), float(c)) for b, c in data.get("budgets", [])],
    )


def approximant_from_dict(data: dict):
    """Rebuild whatever a result file holds under "approximant"."""
    kind = data.get("type") if isinstance(data, dict) else None
    if kind == "blaschke":
        return product_from_dict(data)
    if kind == "singular":
        return SingularInnerSurrogate(B=product_from_dict(data["B"]))
    if kind == "universal":
        return universal_from_dict(data)
    raise SpecValidationError(f"Unsupported approximant type: {kind!r}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def format_float(value: float) -> str:
    """17 significant digits, always with a decimal point or exponent."""
    if not math.isfinite(value):
        raise ValueError(f"Out of range float values are not JSON compliant: {value!r}")
    text = format(value, ".17g")
    return text if any(c in text for c in ".e") else text + ".0"


class FixedPrecisionEncoder(json.JSONEncoder):
    """JSON encoder writing every float with :func:`format_float`."""

    def iterencode(self, o, _one_shot=False):
        markers = {} if self.check_circular else None
        encoder = json.encoder.encode_basestring_ascii if self.ensure_ascii else json.encoder.encode_basestring
        iterencode = json.encoder._make_iterencode(
            markers,
            self.default,
            encoder,
            self.indent,
            format_float,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot,
        )
        return iterencode(o, 0)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False, cls=FixedPrecisionEncoder) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    logging.info(f"Wrote {path}")
    return path


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise SpecValidationError(f"{path} is not valid JSON: {exc}") from exc
    except OSError as exc:
        raise SpecValidationError(f"Cannot read {path}: {exc}") from exc


