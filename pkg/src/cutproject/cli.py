"""Command-line experiment runner.

Subcommands: analyze (single-scheme report files), sweep (Monte Carlo over
random slopes), grid / patch / dio / region (single-object exports).
Outputs are CSV for curves and JSON for structured objects; identical
configs produce byte-identical files, and every CSV row carries the scheme
hash and the config hash.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import errors
from .acceptance import all_frequencies, build_grid, max_side, min_side
from .diophantine import (
    PsiFamily,
    approximation_profile,
    continued_fraction,
    kg_classify,
    transference,
    transference_verify,
)
from .discrepancy import (
    fit_power_exponent,
    kendall_trend,
    sup_discrepancy,
)
from .patches import (
    BallOmega,
    BoxOmega,
    PatchKind,
    PatchShape,
    PolytopeOmega,
    patch_to_json_dict,
)
from .regions import (
    cover_region,
    intrinsic_count,
    laczkovich_decompose,
    region_discrepancy,
    region_from_json,
    scale_bound_ratios,
)
from .regularity import repetitivity, repulsivity
from .scheme import SchemeSpec, check_regular, lattice_box, window_coord
from .acceptance import component_of

EXIT_CODES = {
    errors.SingularShift: 2,
    errors.SingularPoint: 3,
    errors.DegenerateInternalSpace: 4,
    errors.TooManyComponents: 5,
    errors.BudgetExceeded: 6,
    errors.UnboundedShape: 7,
    errors.EmptyRegion: 8,
    errors.ResonantFrequency: 9,
    errors.Overflow: 10,
    errors.NoRecurrence: 11,
    errors.UnboundedRegion: 12,
}
USAGE_EXIT = 64


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _config_hash(args: argparse.Namespace) -> str:
    payload = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")
    }
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _write_json(path: Path | None, obj) -> None:
    blob = json.dumps(obj, sort_keys=True, indent=2, default=float)
    if path is None:
        sys.stdout.write(blob + "\n")
    else:
        path.write_text(blob + "\n")


def _load_scheme(args: argparse.Namespace) -> SchemeSpec:
    if args.scheme is not None:
        spec = SchemeSpec.from_json_dict(json.loads(Path(args.scheme).read_text()))
    elif args.random is not None:
        d, k, seed = args.random
        spec = SchemeSpec.random(int(d), int(k), int(seed))
    else:
        raise SystemExit("one of --scheme FILE or --random d k seed is required")
    if getattr(args, "exact", False):
        spec = SchemeSpec(
            d=spec.d, k=spec.k, alpha=spec.alpha, m_map=spec.m_map, t=spec.t,
            exact=True, seed=spec.seed,
        )
    return spec


def _add_scheme_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", type=str, default=None, help="scheme JSON file")
    p.add_argument(
        "--random", nargs=3, type=int, metavar=("D", "K", "SEED"), default=None,
        help="random slope scheme of the given dimensions",
    )
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("--tol", type=float, default=1e-10, help="grid dedup tolerance")
    p.add_argument("--exact", action="store_true", help="extended-precision star map")


def _analyze_one(spec: SchemeSpec, args, out_dir: Path, tag: str = "") -> dict:
    shash = spec.scheme_hash()
    chash = _config_hash(args)
    r_list = args.r
    R_list = args.R
    check_regular(spec, lattice_box(max(r_list), spec.d, budget=args.budget))

    grid_rows, freq_rows, disc_rows, reg_rows = [], [], [], []
    disc_by_R: dict[float, float] = {}
    for r in r_list:
        grid = build_grid(spec, r, dedup_tol=args.tol, budget=args.budget)
        grid_rows.append(
            [shash, chash, r, grid.n_components, min_side(grid), max_side(grid)]
        )
        freqs = all_frequencies(grid)
        for lin, f in enumerate(freqs):
            idx = np.unravel_index(lin, grid.shape)
            freq_rows.append([shash, chash, r, ";".join(map(str, idx)), float(f)])
        for R in R_list:
            rep = sup_discrepancy(spec, grid, [0] * spec.d, R, budget=args.budget)
            flags = f"boundary={rep.boundary_hits}"
            disc_rows.append(
                [shash, chash, r, R, "sup", rep.empirical, rep.exact,
                 rep.discrepancy, rep.bound, flags]
            )
            disc_by_R[R] = max(disc_by_R.get(R, 0.0), rep.discrepancy)

    n_scan = args.n_scan if args.n_scan is not None else (2000 if spec.d == 1 else 150)
    if spec.internal_dim == 1:
        for r in r_list:
            est = repetitivity(spec, r, component_budget=args.budget)
            reg_rows.append(
                [shash, chash, "repetitivity", r, est.n_grid, "window-grid",
                 f"density={est.grid_density};sufficient={est.n_sufficient}"]
            )
            res = repulsivity(spec, r, n_scan=n_scan, component_budget=args.budget)
            reg_rows.append(
                [shash, chash, "repulsivity", r, res.value, "orbit-scan",
                 f"n_scan={res.n_scan}"]
            )

    Rs = sorted(disc_by_R)
    discs = [max(disc_by_R[R], 1e-12) for R in Rs]
    log_fit = (
        fit_power_exponent([math.log(R) for R in Rs], discs) if len(Rs) >= 2 else None
    )
    tau = kendall_trend(
        [disc_by_R[R] / math.log(R) ** (spec.k + 1) for R in Rs]
    ) if len(Rs) >= 2 else None
    c_fit = max(disc_by_R[R] / math.log(R) ** (spec.k + 1) for R in Rs)
    exponents = {
        "scheme_hash": shash,
        "config_hash": chash,
        "discrepancy_log_exponent_fit": log_fit,
        "discrepancy_c_fit": c_fit,
        "discrepancy_trend_tau": tau,
        "theory": {
            "discrepancy_log_exponent": f"k+eps = {spec.k}+eps",
            "repetitivity_log_exponent_upper": (2 * spec.k - 1) / spec.d - 1,
            "repetitivity_log_exponent_lower": 1 / spec.d,
            "repulsivity_log_exponent": 1 / spec.d + (spec.k - spec.d),
        },
    }

    if reg_rows:
        rep_vals = {r: v for _, _, kind, r, v, *_ in reg_rows if kind == "repetitivity"}
        if len(rep_vals) >= 2:
            rs, vals = zip(*sorted(rep_vals.items()))
            exponents["repetitivity_power_fit"] = fit_power_exponent(
                rs, [max(v, 1) for v in vals]
            )

    prefix = f"{tag}_" if tag else ""
    _write_csv(out_dir / f"{prefix}grid_summary.csv",
               ["scheme_hash", "config_hash", "r", "components", "min_side", "max_side"],
               grid_rows)
    _write_csv(out_dir / f"{prefix}frequencies.csv",
               ["scheme_hash", "config_hash", "r", "component", "frequency"],
               freq_rows)
    _write_csv(out_dir / f"{prefix}discrepancy.csv",
               ["scheme_hash", "config_hash", "r", "R", "component", "empirical",
                "exact", "discrepancy", "bound", "flags"],
               disc_rows)
    _write_csv(out_dir / f"{prefix}regularity.csv",
               ["scheme_hash", "config_hash", "kind", "r", "value", "method", "params"],
               reg_rows)
    _write_json(out_dir / f"{prefix}exponents.json", exponents)
    return exponents


def cmd_analyze(args) -> int:
    spec = _load_scheme(args)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "scheme.json", spec.to_json_dict())
    _analyze_one(spec, args, out_dir)
    return 0


def cmd_sweep(args) -> int:
    if args.random is None:
        raise SystemExit("sweep requires --random d k seed (dimensions)")
    d, k, _ = (int(x) for x in args.random)
    seeds = _parse_seeds(args.seeds)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    taus, cfits = [], []
    for seed in seeds:
        spec = SchemeSpec.random(d, k, seed)
        try:
            exp = _analyze_one(spec, args, out_dir, tag=f"seed{seed}")
            rows.append(
                [spec.scheme_hash(), _config_hash(args), seed, "ok",
                 exp["discrepancy_c_fit"], exp["discrepancy_trend_tau"],
                 exp["discrepancy_log_exponent_fit"]]
            )
            taus.append(exp["discrepancy_trend_tau"])
            cfits.append(exp["discrepancy_c_fit"])
        except errors.CutProjectError as exc:
            rows.append(
                [spec.scheme_hash(), _config_hash(args), seed,
                 f"error:{type(exc).__name__}", "", "", ""]
            )
    _write_csv(out_dir / "sweep.csv",
               ["scheme_hash", "config_hash", "seed", "status", "c_fit",
                "trend_tau", "log_exponent_fit"],
               rows)
    taus_arr = np.array([t for t in taus if t is not None], dtype=float)
    summary = {
        "n_seeds": len(seeds),
        "n_ok": len(taus),
        "fraction_trend_consistent": float(np.mean(taus_arr <= 0)) if taus_arr.size else None,
        "c_fit_quantiles": {
            q: float(np.quantile(np.asarray(cfits), float(q))) for q in ("0.1", "0.5", "0.9")
        } if cfits else None,
    }
    _write_json(out_dir / "summary.json", summary)
    return 0


def _parse_seeds(expr: str) -> list[int]:
    if ":" in expr:
        a, b = expr.split(":")
        return list(range(int(a), int(b)))
    return [int(x) for x in expr.split(",")]


def cmd_grid(args) -> int:
    spec = _load_scheme(args)
    grid = build_grid(spec, args.r[0], dedup_tol=args.tol, budget=args.budget)
    shash, chash = spec.scheme_hash(), _config_hash(args)
    rows = []
    for j, cuts in enumerate(grid.cuts):
        rows.append([shash, chash, "cuts", j] + [float(c) for c in cuts])
    rows.append(
        [shash, chash, "summary", grid.n_components, min_side(grid), max_side(grid)]
    )
    path = Path(args.out) if args.out else None
    if path is None:
        writer = csv.writer(sys.stdout)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    else:
        _write_rows_raw(path, rows)
    return 0


def _write_rows_raw(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _parse_omega(expr: str, d: int):
    if expr.startswith("box:"):
        return BoxOmega.symmetric(float(expr.split(":", 1)[1]), d)
    if expr.startswith("ball:"):
        return BallOmega(float(expr.split(":", 1)[1]))
    data = json.loads(expr)
    if data["kind"] == "box":
        return BoxOmega(tuple(data["lo"]), tuple(data["hi"]))
    if data["kind"] == "ball":
        return BallOmega(float(data["radius"]))
    return PolytopeOmega(tuple(tuple(v) for v in data["vertices"]))


def cmd_patch(args) -> int:
    spec = _load_scheme(args)
    kind = PatchKind.TYPE_I if args.kind == "type1" else PatchKind.TYPE_II
    shape = PatchShape(kind, _parse_omega(args.omega, spec.d), r=args.r[0])
    p = [int(x) for x in args.p.split(",")]
    payload = patch_to_json_dict(spec, shape, p)
    payload["scheme_hash"] = spec.scheme_hash()
    payload["config_hash"] = _config_hash(args)
    _write_json(Path(args.out) if args.out else None, payload)
    return 0


def cmd_dio(args) -> int:
    out: dict = {"config_hash": _config_hash(args)}
    if args.x is not None:
        cf = continued_fraction(args.x, depth=args.depth)
        out["continued_fraction"] = {
            "x": cf.x,
            "quotients": list(cf.quotients),
            "convergents": [list(c) for c in cf.convergents],
            "rational_termination": cf.rational_termination,
        }
    spec = None
    if args.scheme is not None or args.random is not None:
        spec = _load_scheme(args)
        out["scheme_hash"] = spec.scheme_hash()
        profile = approximation_profile(spec, args.q_max, budget=args.budget)
        out["profile"] = [
            {"q": list(rec.q), "norm": rec.norm, "height": rec.height}
            for rec in profile.records
        ]
        out["best_constant"] = (
            profile.records[-1].norm * profile.records[-1].height if profile.records else None
        )
        if args.profile_csv:
            _write_rows_raw(
                Path(args.profile_csv),
                [[rec.height, rec.norm] + list(rec.q) for rec in profile.records],
            )
    if args.psi is not None:
        a, b, c = args.psi
        family = PsiFamily(a=a, b=b, c=c)
        m, n = args.mn
        kg = kg_classify(family, m, n)
        out["khintchine_groshev"] = {
            "verdict": kg.verdict.value,
            "exponent": kg.exponent,
            "log_exponent": kg.log_exponent,
            "partial_sum": kg.partial_sum,
        }
    if args.transference is not None:
        psi, X = args.transference
        if spec is not None:
            chk = transference_verify(spec, psi, X, gamma_grid=args.gamma_grid)
            out["transference"] = {
                "hypothesis_ok": chk.hypothesis_ok, "c": chk.c, "R": chk.R,
                "h": chk.h, "worst_gap": chk.worst_gap,
                "conclusion_ok": chk.conclusion_ok,
            }
        else:
            c, R, h = transference(psi, X, d=args.mn[0], k=args.mn[0] + args.mn[1])
            out["transference"] = {"c": c, "R": R, "h": h}
    _write_json(Path(args.out) if args.out else None, out)
    return 0


def cmd_region(args) -> int:
    spec = _load_scheme(args)
    region = region_from_json(json.loads(args.region))
    grid = build_grid(spec, args.r[0], dedup_tol=args.tol, budget=args.budget)
    anchor = [0] * spec.d
    cid = component_of(grid, window_coord(spec, anchor))
    complex_ = cover_region(region, spec, budget=args.budget)
    out: dict = {
        "scheme_hash": spec.scheme_hash(),
        "config_hash": _config_hash(args),
        "n_cells": complex_.n_cells,
        "boundary_faces": complex_.boundary_faces(),
    }
    if spec.d >= 2 and complex_.cells:
        dec = laczkovich_decompose(complex_)
        out["decomposition"] = {
            "n_positive": len(dec.positive),
            "n_negative": len(dec.negative),
            "counts_by_scale": {str(m): c for m, c in sorted(dec.counts_by_scale.items())},
            "scale_bound_ratios": {
                str(m): v
                for m, v in scale_bound_ratios(
                    dec, complex_.boundary_faces(), spec.d
                ).items()
            },
        }
    rep = region_discrepancy(spec, grid, cid, anchor, region, budget=args.budget)
    out["discrepancy"] = {
        "component": list(cid.idx),
        "xi_region": rep.xi_region,
        "xi_exact": rep.xi_exact,
        "deviation": rep.deviation,
        "bound_ratio": rep.bound_ratio,
        "dyadic_agrees": rep.dyadic_agrees,
    }
    intr = intrinsic_count(spec, grid, cid, anchor, region, budget=args.budget)
    out["intrinsic"] = {
        "xi": intr.xi, "xi_prime": intr.xi_prime, "kappa": intr.kappa,
        "collar_bound": intr.collar_bound,
        "n_index": intr.n_index, "n_geometric": intr.n_geometric,
    }
    _write_json(Path(args.out) if args.out else None, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutproject",
        description="cubical cut-and-project pattern statistics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full single-scheme report")
    _add_scheme_flags(p)
    p.add_argument("--r", nargs="+", type=float, default=[1.0, 2.0, 3.0])
    p.add_argument("--R", nargs="+", type=float, default=[100.0, 1000.0, 10000.0])
    p.add_argument("--n-scan", type=int, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="Monte Carlo over random slopes")
    _add_scheme_flags(p)
    p.add_argument("--seeds", type=str, default="0:10", help="range a:b or list a,b,c")
    p.add_argument("--r", nargs="+", type=float, default=[1.0, 2.0])
    p.add_argument("--R", nargs="+", type=float, default=[100.0, 1000.0, 10000.0])
    p.add_argument("--n-scan", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("grid", help="export the cut grid")
    _add_scheme_flags(p)
    p.add_argument("--r", nargs="+", type=float, default=[1.0])
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("patch", help="export a shaped patch with acceptance region")
    _add_scheme_flags(p)
    p.add_argument("--r", nargs="+", type=float, default=[2.0])
    p.add_argument("--p", type=str, default="0")
    p.add_argument("--kind", choices=["type1", "type2"], default="type2")
    p.add_argument("--omega", type=str, default="box:1")
    p.set_defaults(func=cmd_patch)

    p = sub.add_parser("dio", help="Diophantine diagnostics")
    _add_scheme_flags(p)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--depth", type=int, default=20)
    p.add_argument("--q-max", type=int, default=100)
    p.add_argument("--psi", nargs=3, type=float, default=None, metavar=("A", "B", "C"))
    p.add_argument("--mn", nargs=2, type=int, default=[1, 1])
    p.add_argument("--transference", nargs=2, type=float, default=None,
                   metavar=("PSI", "X"))
    p.add_argument("--gamma-grid", type=int, default=1000)
    p.add_argument("--profile-csv", type=str, default=None)
    p.set_defaults(func=cmd_dio)

    p = sub.add_parser("region", help="region counts and dyadic decomposition")
    _add_scheme_flags(p)
    p.add_argument("--r", nargs="+", type=float, default=[1.0])
    p.add_argument("--region", type=str, required=True, help="region JSON")
    p.set_defaults(func=cmd_region)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.CutProjectError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(type(exc), 1)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
