"""Command-line front end.

Each subcommand loads or builds a transformation spec, runs one experiment,
and emits a single JSON report on stdout (or to --out), with a short human
summary on stderr.  Reports are deterministic: identical configuration gives
byte-identical JSON.

Exit codes: 0 ok, 2 spec/config error, 3 resource cap exceeded,
4 inconclusive verdict under --strict.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from . import engine, presets, properties, spectral
from .errors import DepthError, Rank1LabError, ResourceCapError, SpecError, UnresolvedMassError
from .serialize import (
    SCHEMA_VERSION,
    decimal_str,
    dumps_report,
    fmt_float,
    fmt_rational,
    load_spec,
    parse_rational,
    spec_to_json,
)

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_RESOURCE = 3
EXIT_INCONCLUSIVE = 4


def _spec_from_args(args) -> engine.TransformationSpec:
    if getattr(args, "spec", None):
        return load_spec(args.spec)
    name = getattr(args, "preset", None)
    if not name:
        raise SpecError("give either --spec FILE or --preset NAME")
    params = {}
    if getattr(args, "lam", None) is not None:
        params["lambda"] = parse_rational(args.lam)
    if getattr(args, "lambda1", None) is not None:
        params["lambda1"] = parse_rational(args.lambda1)
    if getattr(args, "lambda2", None) is not None:
        params["lambda2"] = parse_rational(args.lambda2)
    if getattr(args, "q", None) is not None:
        params["q"] = _parse_int_list(args.q)
    return presets.preset(name, **params)


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise SpecError(f"cannot parse integer list {text!r}") from exc


def _heights_from_args(args, default_terms: int | None = None) -> spectral.HeightSequence:
    if getattr(args, "q", None):
        return spectral.height_sequence(_parse_int_list(args.q))
    if getattr(args, "heights_json", None):
        import json

        with open(args.heights_json, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return spectral.height_sequence([int(str(x)) for x in data])
    if getattr(args, "preset", None) or getattr(args, "spec", None):
        spec = _spec_from_args(args)
        n = getattr(args, "N", None) or default_terms
        if n is None:
            raise SpecError("preset heights need --N")
        return spectral.preset_heights(spec, n)
    raise SpecError("give heights via --q, --heights-json, or --preset")


def _resolve_threads(args) -> int:
    env = os.environ.get("RANK1LAB_THREADS")
    if env is not None:
        try:
            threads = int(env)
        except ValueError as exc:
            raise SpecError(f"RANK1LAB_THREADS must be an integer, got {env!r}") from exc
    else:
        threads = getattr(args, "threads", 1)
    if threads < 1:
        raise SpecError(f"thread count must be >= 1, got {threads}")
    return threads


def _level_set_arg(text: str) -> engine.LevelSet:
    try:
        stage_s, idx_s = text.split(":", 1)
        return engine.LevelSet(int(stage_s), tuple(int(t) for t in idx_s.split(",") if t))
    except (ValueError, SpecError) as exc:
        raise SpecError(f"cannot parse level set {text!r}; expected 'stage:i,j,...'") from exc


def _sets_from_args(tower, args) -> tuple[engine.LevelSet, engine.LevelSet]:
    if getattr(args, "set_a", None) and getattr(args, "set_b", None):
        return _level_set_arg(args.set_a), _level_set_arg(args.set_b)
    return properties.paper_pair(tower)


def _ls_json(ls: engine.LevelSet) -> dict:
    return {"stage": ls.stage, "indices": list(ls.indices)}


def _cv_json(cv: engine.CocycleValue) -> dict:
    out = {"value": fmt_rational(cv.value)}
    if cv.exponents is not None:
        out["exponents"] = {fmt_rational(b): e for b, e in cv.exponents}
    return out


def _envelope(command: str, args, spec_doc: dict, params: dict, result: dict) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": command,
        "spec": spec_doc,
        "params": params,
        "result": result,
    }


# ---------------------------------------------------------------- commands


def cmd_build(args) -> tuple[dict, int, str]:
    spec = _spec_from_args(args)
    tower = engine.build_tower(spec, args.depth)
    stages = []
    for k in range(args.depth + 1):
        col = tower.column(k)
        stages.append(
            {
                "stage": k,
                "height": str(col.height),
                "levels": str(col.height),
                "total_measure": fmt_rational(col.total_measure),
                "width": fmt_rational(col.width),
                "spacers": col.spacer_count,
            }
        )
    result = {"heights": [str(h) for h in tower.heights], "stages": stages}
    payload = _envelope("build", args, spec_to_json(spec), {"depth": args.depth}, result)
    summary = f"heights: {', '.join(result['heights'])}"
    return payload, EXIT_OK, summary


def cmd_wde(args) -> tuple[dict, int, str]:
    spec = _spec_from_args(args)
    tower = engine.build_tower(spec, args.depth)
    a, b = _sets_from_args(tower, args)
    report = properties.wde_witness_search(
        tower, a, b, args.N, mode=args.mode, max_stage=args.max_stage
    )
    result = {
        "N": report.searched_range,
        "mode": report.mode,
        "verdict": report.verdict,
        "unresolved_encountered": report.unresolved_encountered,
        "witnesses": [
            {"i": i, "measure_aa": fmt_rational(x), "measure_ab": fmt_rational(y)}
            for i, x, y in report.witnesses
        ],
        "set_a": _ls_json(a),
        "set_b": _ls_json(b),
    }
    params = {"N": args.N, "mode": args.mode, "depth": args.depth, "max_stage": args.max_stage}
    payload = _envelope("wde", args, spec_to_json(spec), params, result)
    code = EXIT_OK
    if args.strict and report.verdict == properties.INCONCLUSIVE:
        code = EXIT_INCONCLUSIVE
    summary = f"wde verdict: {report.verdict} ({len(report.witnesses)} witnesses, |i| <= {args.N})"
    return payload, code, summary


def cmd_index_sets(args) -> tuple[dict, int, str]:
    spec = _spec_from_args(args)
    tower = engine.build_tower(spec, args.depth)
    a, b = _sets_from_args(tower, args)
    per_stage = []
    for m in range(1, args.n + 1):
        iaa = properties.index_set(tower, a, a, m)
        iab = properties.index_set(tower, a, b, m)
        per_stage.append(
            {
                "n": m,
                "aa": list(iaa.sorted_members),
                "ab": list(iab.sorted_members),
                "intersection": sorted(iaa.members & iab.members),
            }
        )
    inclusions = []
    for m in range(1, args.n):
        for label, target in (("aa", a), ("ab", b)):
            rep = properties.recursion_inclusion_check(tower, a, target, m)
            inclusions.append(
                {
                    "n": m,
                    "target": label,
                    "holds": rep.holds,
                    "offsets": list(rep.offsets),
                    "violations": list(rep.violations),
                }
            )
    base = properties.base_stage_report(tower)
    result = {
        "set_a": _ls_json(a),
        "set_b": _ls_json(b),
        "index_sets": per_stage,
        "inclusion_checks": inclusions,
        "stage1_note": {
            "i1_aa": list(base.i1_aa),
            "i1_ab": list(base.i1_ab),
            "i1_joint": list(base.i1_joint),
            "ab_nonempty_joint_empty": base.ab_nonempty_joint_empty,
        },
    }
    payload = _envelope("index-sets", args, spec_to_json(spec), {"n": args.n, "depth": args.depth}, result)
    joint_empty = all(not row["intersection"] for row in per_stage)
    summary = f"joint index sets empty up to n={args.n}: {joint_empty}"
    return payload, EXIT_OK, summary


def cmd_ratio_set(args) -> tuple[dict, int, str]:
    spec = _spec_from_args(args)
    tower = engine.build_tower(spec, args.depth)
    if args.set_a:
        a = _level_set_arg(args.set_a)
    elif args.level:
        stage_s, idx_s = args.level.split(":", 1)
        a = engine.LevelSet(int(stage_s), (int(idx_s),))
    else:
        a = engine.LevelSet(1, (0,))
    t = parse_rational(args.t)
    eps = parse_rational(args.eps)
    n_max = args.N if args.N is not None else tower.spec.height(a.stage)
    report = properties.ratio_set_probe(tower, a, t, eps, n_max, args.max_stage)
    result = {
        "t": fmt_rational(t),
        "eps": fmt_rational(eps),
        "N": n_max,
        "set_a": _ls_json(a),
        "hits": [
            {"n": n, "sublevel": _ls_json(ls), "omega": _cv_json(cv)}
            for n, ls, cv in report.hits
        ],
        "observed_values": [_cv_json(cv) for cv in report.observed_values],
        "inconclusive": report.inconclusive,
    }
    params = {"depth": args.depth, "max_stage": args.max_stage}
    payload = _envelope("ratio-set", args, spec_to_json(spec), params, result)
    code = EXIT_INCONCLUSIVE if (args.strict and report.inconclusive) else EXIT_OK
    summary = f"ratio-set probe: {len(report.hits)} hits near {fmt_rational(t)}"
    return payload, code, summary


def cmd_return_bound(args) -> tuple[dict, int, str]:
    spec = _spec_from_args(args)
    tower = engine.build_tower(spec, args.n + 1)
    rep = properties.level_return_ratio(tower, args.n)
    result = {
        "n": rep.stage,
        "min_ratio": fmt_rational(rep.image_min_ratio),
        "achieved_level": rep.image_min_level,
        "max_ratio": fmt_rational(rep.image_max_ratio),
        "source_min_ratio": fmt_rational(rep.source_min_ratio),
        "unresolved_any": rep.unresolved_any,
    }
    payload = _envelope("return-bound", args, spec_to_json(spec), {"n": args.n}, result)
    summary = f"min return ratio at stage {args.n}: {result['min_ratio']}"
    return payload, EXIT_OK, summary


def cmd_spectral(args) -> tuple[dict, int, str]:
    heights = _heights_from_args(args)
    n_terms = args.N if args.N is not None else len(heights)
    threads = _resolve_threads(args)
    report = spectral.eigenvalue_scan(heights, args.grid, n_terms, args.threshold, threads)
    result = {
        "grid": report.grid_size,
        "N": report.n_terms,
        "threshold": fmt_float(report.threshold),
        "threads": threads,
        "candidates": [
            {"theta": decimal_str(c.theta), "phi": fmt_float(c.partial_sum)}
            for c in report.candidates
        ],
        "grid_min": {
            "theta": decimal_str(report.grid_min_theta),
            "phi": fmt_float(report.grid_min_phi),
        },
    }
    spec_doc = {"heights": [str(h) for h in heights.values[:n_terms]]}
    params = {"grid": args.grid, "N": n_terms, "threshold": fmt_float(args.threshold)}
    payload = _envelope("spectral", args, spec_doc, params, result)
    summary = (
        f"{len(report.candidates)} candidate(s) below {args.threshold}; "
        f"grid min phi = {result['grid_min']['phi']} at theta = {result['grid_min']['theta']}"
    )
    return payload, EXIT_OK, summary


def cmd_rigidity(args) -> tuple[dict, int, str]:
    heights = _heights_from_args(args)
    n_terms = args.N if args.N is not None else len(heights)
    theta = parse_rational(args.theta)
    report = spectral.rigidity_sum(heights, theta, n_terms, args.p, args.tol)
    result = {
        "theta": fmt_rational(theta),
        "p": report.exponent,
        "terms": [fmt_float(t) for t in report.terms],
        "partial_sums": [fmt_float(s) for s in report.partial_sums],
        "converged": report.converged,
    }
    spec_doc = {"heights": [str(h) for h in heights.values[:n_terms]]}
    payload = _envelope("rigidity", args, spec_doc, {"N": n_terms, "p": args.p}, result)
    total = report.partial_sums[-1] if report.partial_sums else 0.0
    summary = f"rigidity sum (p={args.p}) over {n_terms} terms: {fmt_float(total)}"
    return payload, EXIT_OK, summary


def cmd_factor_map(args) -> tuple[dict, int, str]:
    heights = _heights_from_args(args)
    theta = parse_rational(args.theta)
    depth = args.depth if args.depth is not None else len(heights) - 1
    report = spectral.factor_map_build(heights, theta, depth)
    result = {
        "theta": fmt_rational(theta),
        "depth": depth,
        "stages": [
            {
                "stage": st.stage,
                "levels": len(st.assignment),
                "delta_sup": fmt_float(st.delta_sup),
                "bound": fmt_float(st.bound),
            }
            for st in report.stages
        ],
        "equivariance_residual": fmt_float(report.equivariance_residual),
    }
    spec_doc = {"heights": [str(h) for h in heights.values]}
    payload = _envelope("factor-map", args, spec_doc, {"depth": depth}, result)
    summary = f"factor map over {depth} stage(s); residual {result['equivariance_residual']}"
    return payload, EXIT_OK, summary


def cmd_gap_check(args) -> tuple[dict, int, str]:
    heights = _heights_from_args(args)
    report = spectral.gap_lemma_check(heights, args.L, args.M, args.max_enum)
    result = {
        "L": report.lo,
        "M": report.hi,
        "max_gap": str(report.max_gap),
        "holds": report.holds,
        "set_size": report.set_size,
    }
    spec_doc = {"heights": [str(h) for h in heights.values]}
    payload = _envelope("gap-check", args, spec_doc, {"L": args.L, "M": args.M}, result)
    summary = f"gap check: max gap {report.max_gap}, holds={report.holds}"
    return payload, EXIT_OK, summary


# ---------------------------------------------------------------- parser


def _add_spec_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="path to a JSON transformation spec")
    p.add_argument("--preset", help="preset name (%s)" % ", ".join(presets.PRESET_NAMES))
    p.add_argument("--lambda", dest="lam", help="cut ratio for hk_plus1_lambda, as p/q")
    p.add_argument("--lambda1", help="even-stage cut ratio for type_iii1")
    p.add_argument("--lambda2", help="odd-stage cut ratio for type_iii1")
    p.add_argument("--q", help="comma-separated heights (tower_from_heights / spectral input)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--strict", action="store_true", help="inconclusive verdicts exit 4")
    p.add_argument("--threads", type=int, default=1, help="worker cap (env RANK1LAB_THREADS overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rank1lab",
        description="Exact experiments on rank-one cutting-and-stacking transformations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build columns and report heights/measures")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--depth", type=int, default=6)
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser("wde", help="search for double-ergodicity witnesses")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--N", type=int, required=True, help="search 1 <= |i| <= N")
    p.add_argument("--mode", choices=["stabilized", "truncated"], default="stabilized")
    p.add_argument("--max-stage", dest="max_stage", type=int, default=None)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--paper-sets", action="store_true", help="use the default witness pair (also the default)")
    p.add_argument("--set-a", dest="set_a", help="explicit source set 'stage:i,j,...'")
    p.add_argument("--set-b", dest="set_b", help="explicit target set 'stage:i,j,...'")
    p.set_defaults(handler=cmd_wde)

    p = sub.add_parser("index-sets", help="cyclic index sets and their recursion")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--n", type=int, default=4, help="largest stage to enumerate")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--paper-sets", action="store_true")
    p.add_argument("--set-a", dest="set_a")
    p.add_argument("--set-b", dest="set_b")
    p.set_defaults(handler=cmd_index_sets)

    p = sub.add_parser("ratio-set", help="probe the ratio set near a target value")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--t", required=True, help="target value, as p/q")
    p.add_argument("--eps", default="1/100", help="half-width of the target window")
    p.add_argument("--N", type=int, default=None, help="largest shift to scan")
    p.add_argument("--level", help="probe set as a single level 'stage:index' (default 1:0)")
    p.add_argument("--set-a", dest="set_a", help="probe set 'stage:i,j,...'")
    p.add_argument("--max-stage", dest="max_stage", type=int, default=None)
    p.add_argument("--depth", type=int, default=8)
    p.set_defaults(handler=cmd_ratio_set)

    p = sub.add_parser("return-bound", help="exact return ratio of T^{h_n} on C_n levels")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(handler=cmd_return_bound)

    p = sub.add_parser("spectral", help="grid scan of the eigenvalue criterion sum")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--heights-json", dest="heights_json", help="JSON file with decimal height strings")
    p.add_argument("--N", type=int, default=None, help="number of terms")
    p.add_argument("--grid", type=int, default=65536)
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(handler=cmd_spectral)

    p = sub.add_parser("rigidity", help="rotation displacement sums along heights")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--heights-json", dest="heights_json")
    p.add_argument("--theta", required=True, help="rotation angle, p/q or decimal")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--p", type=int, choices=[1, 2], default=1)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(handler=cmd_rigidity)

    p = sub.add_parser("factor-map", help="level-to-circle factor map for a doubling tower")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--heights-json", dest="heights_json")
    p.add_argument("--theta", required=True)
    p.add_argument("--depth", type=int, default=None)
    p.set_defaults(handler=cmd_factor_map)

    p = sub.add_parser("gap-check", help="max gap of bounded-digit sums of heights")
    _add_spec_options(p)
    _add_common(p)
    p.add_argument("--heights-json", dest="heights_json")
    p.add_argument("--L", type=int, default=1, help="first index (1-based)")
    p.add_argument("--M", type=int, default=None, help="last index (1-based; default end)")
    p.add_argument("--max-enum", dest="max_enum", type=int, default=spectral.DEFAULT_ENUM_CAP)
    p.set_defaults(handler=cmd_gap_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload, code, summary = args.handler(args)
    except (SpecError, DepthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except UnresolvedMassError as exc:
        print(f"unresolved mass in strict mode: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    text = dumps_report(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
