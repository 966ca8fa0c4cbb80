"""
Deterministic command-line front end.

Commands: validate, dims, spectrum, moments, sample, verify.
Exit codes: 0 success, 1 invariant/criterion failure, 2 usage or parse error.
Identical configuration and seed produce byte-identical output files; every
file carries a header with the tool version, a config hash, and the seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .counting import MomentKind, counting_moment_table, partition_moment_table
from .errors import HsmfError, SpecValidationError
from .output import config_hash, csv_bytes, json_bytes, meta_line
from .scaling import separator_grid
from .specs import check_spec, load_spec, matched_generation, sample_paths, validate_spec
from .spectrum import spectrum_result

USAGE_ERROR = 2
FAILURE = 1


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hsmf", description=__doc__)
    p.add_argument("--version", action="version", version=f"hsmf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec_required=True):
        if spec_required:
            sp.add_argument("--spec", required=True, help="measure spec JSON file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    sp = sub.add_parser("validate", help="check a spec file against all invariants")
    sp.add_argument("--spec", required=True)

    sp = sub.add_parser("dims", help="estimate separator functions over a q grid")
    common(sp)
    sp.add_argument("--q-min", type=float, default=-5.0)
    sp.add_argument("--q-max", type=float, default=5.0)
    sp.add_argument("--q-step", type=float, default=0.25)
    sp.add_argument("--k-max", type=int, default=1024)

    sp = sub.add_parser("spectrum", help="legendre transform, coarse spectrum, tilted checks")
    common(sp)
    sp.add_argument("--q-min", type=float, default=-8.0)
    sp.add_argument("--q-max", type=float, default=8.0)
    sp.add_argument("--q-step", type=float, default=0.25)
    sp.add_argument("--k-max", type=int, default=1024)
    sp.add_argument("--r-octaves", type=int, default=16, help="finest scale as 2^-octaves")
    sp.add_argument("--epsilon", type=float, default=0.05)

    sp = sub.add_parser("moments", help="moment tables over octave scales")
    common(sp)
    sp.add_argument("--q-min", type=float, default=-2.0)
    sp.add_argument("--q-max", type=float, default=2.0)
    sp.add_argument("--q-step", type=float, default=0.5)
    sp.add_argument("--r-octaves", type=int, default=10)

    sp = sub.add_parser("sample", help="draw tilted addresses")
    common(sp)
    sp.add_argument("--q", type=float, default=1.0)
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--depth", type=int, default=16)
    sp.add_argument("--count", type=int, default=16)

    sp = sub.add_parser("verify", help="run the acceptance criteria end to end")
    sp.add_argument("--out", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--tol-scale", type=float, default=1.0,
                    help="scale all tolerances (0.1 tightens 10x)")
    sp.add_argument("--fixtures", default=None,
                    help="optional directory of spec fixtures to validate first")
    return p


def _q_grid(args) -> np.ndarray:
    if args.q_step <= 0 or args.q_min >= args.q_max:
        raise ValueError("need q_step > 0 and q_min < q_max")
    n = int(round((args.q_max - args.q_min) / args.q_step))
    return args.q_min + args.q_step * np.arange(n + 1)


def _outdir(args) -> Path:
    out = Path(args.out) if args.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, data: bytes, force: bool) -> None:
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    path.write_bytes(data)


def _emit_table(out: Path, stem: str, columns, rows, meta: str, args) -> None:
    """One table as CSV or as a JSON record list, per --format."""
    rows = list(rows)
    if args.format == "json":
        payload = {"meta": meta.lstrip("# ").rstrip(), "columns": list(columns),
                   "rows": [list(r) for r in rows]}
        _write(out / f"{stem}.json", json_bytes(payload), args.force)
    else:
        _write(out / f"{stem}.csv", csv_bytes(columns, rows, meta), args.force)


def _config(args, spec=None) -> dict:
    """Hashable run configuration: numeric args plus spec content, not paths."""
    cfg = {k: v for k, v in vars(args).items() if k not in ("command", "out", "force", "spec")}
    if spec is not None:
        cfg["spec"] = spec.as_dict()
    return cfg


def _meta(args, spec=None) -> str:
    return meta_line(__version__, config_hash(_config(args, spec)), getattr(args, "seed", 0))


def _json_meta(args, spec=None) -> dict:
    return {
        "version": __version__,
        "config": config_hash(_config(args, spec)),
        "seed": getattr(args, "seed", 0),
    }


def cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    violations = check_spec(spec)
    if violations:
        print(json.dumps([v.as_dict() for v in violations], sort_keys=True))
        return FAILURE
    print(json.dumps({"valid": True, "families": len(spec.families)}, sort_keys=True))
    return 0


def cmd_dims(args) -> int:
    spec = validate_spec(load_spec(args.spec))
    qs = _q_grid(args)
    grid = separator_grid(spec, qs, min(args.k_max, spec.depth_cap))
    out = _outdir(args)
    meta = _meta(args, spec)
    _emit_table(out, "separators",
                ("q", "b", "B", "Lambda", "Theta", "Delta", "osc", "converged"),
                grid.rows_csv(), meta, args)
    diag = {
        "meta": _json_meta(args, spec),
        "per_q": grid.diagnostics,
        "schedule": spec.schedule.as_dict(),
    }
    if hasattr(spec.schedule, "boundary_ratios"):
        diag["boundary_ratios"] = list(spec.schedule.boundary_ratios)
    _write(out / "diagnostics.json", json_bytes(diag), args.force)
    problems = grid.check_invariants()
    if problems:
        print("invariant failures: " + "; ".join(problems), file=sys.stderr)
        return FAILURE
    return 0


def cmd_spectrum(args) -> int:
    spec = validate_spec(load_spec(args.spec))
    qs = _q_grid(args)
    grid = separator_grid(spec, qs, min(args.k_max, spec.depth_cap))
    r_fin = 2.0 ** -args.r_octaves
    r_list = sorted({2.0 ** -j for j in range(max(4, args.r_octaves // 2), args.r_octaves + 1, 4)}
                    | {r_fin}, reverse=True)
    alpha = np.round(np.arange(0.0, 2.5001, 0.025), 10)
    result = spectrum_result(
        spec, grid, alpha, r_list, epsilon=args.epsilon, seed=args.seed
    )
    out = _outdir(args)
    meta = _meta(args, spec)
    _emit_table(out, "legendre", ("alpha", "b_star", "B_star", "boundary_flag"),
                result.legendre_rows_csv(), meta, args)
    _emit_table(out, "coarse", ("r", "alpha", "f_hat", "count"),
                result.coarse.rows_csv(), meta, args)
    tilted = {
        "meta": _json_meta(args, spec),
        "bounds": {
            "alpha_min": result.bounds.alpha_min,
            "alpha_max": result.bounds.alpha_max,
            "beta_min": result.bounds.beta_min,
            "beta_max": result.bounds.beta_max,
        },
        "checks": [t.as_dict() for t in result.tilted],
    }
    _write(out / "tilted.json", json_bytes(tilted), args.force)
    problems = result.check_invariants()
    if problems:
        print("invariant failures: " + "; ".join(problems), file=sys.stderr)
        return FAILURE
    return 0


def cmd_moments(args) -> int:
    spec = validate_spec(load_spec(args.spec))
    qs = _q_grid(args)
    r_list = [2.0 ** -j for j in range(1, args.r_octaves + 1)]
    r_list = [r for r in r_list if _matchable(spec, r)]
    out = _outdir(args)
    meta = _meta(args, spec)
    rows = []
    ks = sorted({matched_generation(spec, r) for r in r_list} | {2, 4, 8})
    tables = [
        partition_moment_table(spec, qs, [k for k in ks if k >= 1]),
        counting_moment_table(spec, MomentKind.COVERING_COUNT, qs, r_list),
        counting_moment_table(spec, MomentKind.PACKING_COUNT, qs, r_list),
        counting_moment_table(spec, MomentKind.COVERING_MOMENT, qs, r_list),
        counting_moment_table(spec, MomentKind.PACKING_MOMENT, qs, r_list),
    ]
    for table in tables:
        problems = table.check_invariants()
        if problems:
            print("invariant failures: " + "; ".join(problems), file=sys.stderr)
            return FAILURE
        rows.extend(table.rows_csv())
    _emit_table(out, "moments", ("kind", "q", "r", "value", "flag"), rows, meta, args)
    return 0


def _matchable(spec, r) -> bool:
    try:
        k = matched_generation(spec, r)
    except HsmfError:
        return False
    n = 1
    for g in range(1, k + 1):
        n *= spec.family_at(g).arity
        if n > (1 << 16):
            return False
    return True


def cmd_sample(args) -> int:
    spec = validate_spec(load_spec(args.spec))
    paths, log_mass, log_len = sample_paths(
        spec, args.q, args.t, args.depth, args.count, args.seed, with_logs=True
    )
    records = [
        {
            "path": [int(i) for i in paths[j]],
            "log_mass": float(log_mass[j]),
            "log_length": float(log_len[j]),
            "alpha_hat": float(log_mass[j] / log_len[j]),
        }
        for j in range(args.count)
    ]
    out = _outdir(args)
    payload = {
        "meta": {**_json_meta(args, spec), "q": args.q, "t": args.t},
        "samples": records,
    }
    _write(out / "samples.json", json_bytes(payload), args.force)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_verify

    if args.fixtures is not None:
        fdir = Path(args.fixtures)
        if not fdir.is_dir():
            raise FileNotFoundError(f"fixture directory {fdir} not found")
        for f in sorted(fdir.glob("*.json")):
            validate_spec(load_spec(f))
    results, artifacts, runtimes = run_verify(seed=args.seed, tol_scale=args.tol_scale)
    out = _outdir(args)
    for name, data in sorted(artifacts.items()):
        _write(out / name, data, args.force)
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} criterion {res.cid}: {res.title} "
              f"({res.elapsed_s:.2f}s / budget {res.budget_s:.0f}s)", file=sys.stderr)
        ok = ok and res.passed
    return 0 if ok else FAILURE


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors already; pass --version/help through
        return int(e.code or 0)
    try:
        handler = {
            "validate": cmd_validate,
            "dims": cmd_dims,
            "spectrum": cmd_spectrum,
            "moments": cmd_moments,
            "sample": cmd_sample,
            "verify": cmd_verify,
        }[args.command]
        return handler(args)
    except SpecValidationError as e:
        print(json.dumps([v.as_dict() for v in e.violations], sort_keys=True))
        return FAILURE
    except (FileNotFoundError, FileExistsError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except HsmfError as e:
        print(f"error: {e}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    sys.exit(main())
