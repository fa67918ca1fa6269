"""JSON wire formats: transformation specs, rationals as "p/q" strings."""

from __future__ import annotations

import decimal
import json
from fractions import Fraction

from . import presets
from .engine import StageRule, TransformationSpec, explicit_spec
from .errors import SpecError

SCHEMA_VERSION = "rank1lab-report/1"


def parse_rational(s) -> Fraction:
    """Accept "p/q", integer, or decimal strings; bit-exact."""
    if isinstance(s, Fraction):
        return s
    try:
        return Fraction(str(s).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"cannot parse rational {s!r}") from exc


def fmt_rational(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def decimal_str(x: Fraction, digits: int = 30) -> str:
    """Decimal expansion of a rational to the given number of significant digits."""
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        d = decimal.Decimal(x.numerator) / decimal.Decimal(x.denominator)
    return str(d)


def fmt_float(v: float) -> str:
    return format(v, ".17g")


def spec_to_json(spec: TransformationSpec) -> dict:
    """JSON document for a spec: preset form or explicit rule list."""
    doc = dict(spec.descriptor)
    if "preset" in doc:
        out = {"preset": doc["preset"], "params": _params_to_json(doc.get("params", {}))}
    else:
        out = {
            "rules": [
                {
                    "cuts": r["cuts"],
                    "fractions": [fmt_rational(f) for f in r["fractions"]],
                    "spacers": list(r["spacers"]),
                }
                for r in doc.get("rules", [])
            ]
        }
        if "tail" in doc:
            out["tail"] = doc["tail"]
    out["base_measure"] = fmt_rational(spec.base_measure)
    return out


def _params_to_json(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, Fraction):
            out[k] = fmt_rational(v)
        elif isinstance(v, list):
            out[k] = [str(x) for x in v]
        else:
            out[k] = v
    return out


def spec_from_json(doc: dict) -> TransformationSpec:
    """Reconstruct a spec from its JSON document."""
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a JSON object")
    base = parse_rational(doc.get("base_measure", 1))
    if "preset" in doc:
        params = dict(doc.get("params", {}))
        if "q" in params:
            params["q"] = [int(str(x)) for x in params["q"]]
        spec = presets.preset(doc["preset"], **params)
        if base != spec.base_measure:
            spec.base_measure = base
            spec.descriptor = dict(spec.descriptor)
        return spec
    if "rules" not in doc:
        raise SpecError("spec document needs either 'preset' or 'rules'")
    rules = []
    for r in doc["rules"]:
        rules.append(
            StageRule(
                int(r["cuts"]),
                tuple(parse_rational(f) for f in r["fractions"]),
                tuple(int(s) for s in r["spacers"]),
            )
        )
    tail = doc.get("tail")
    return explicit_spec(rules, tail=None if tail is None else int(tail), base_measure=base)


def load_spec(path: str) -> TransformationSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))


def dumps_report(payload: dict) -> str:
    """Deterministic JSON rendering: sorted keys, two-space indent."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
