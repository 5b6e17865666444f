"""Command-line entry points: spectra, sweeps, construction runs, verify.

Subcommands:

- ``spectrum``        band table of a periodic potential as CSV
- ``lyapunov-sweep``  exponent over an energy grid as CSV
- ``construct``       run construction A or B and persist stage files
- ``verify``          re-check a saved stage file's certificates

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
All outputs are deterministic functions of the inputs; LIMPER_THREADS
only changes wall time, never bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bands import (
    BAND_EDGE_CAP,
    band_edges_exact,
    local_bands,
)
from .config import config_echo, config_from_mapping, parse_config_text
from .construct_a import (
    ConstructAConfig,
    StageRecordA,
    continue_construction_a,
    run_construction_a,
)
from .construct_b import (
    BRACKET_TOL,
    ConstructBConfig,
    L0_TOL,
    StageRecordB,
    _dirichlet_window_upper,
    _prefix_preserved,
    continue_construction_b,
    run_construction_b,
)
from .errors import ConstructionError, LimperError
from .intervals import is_eps_dense, verify_nesting
from .recipes import PotentialRecipe, from_values
from .stagefile import (
    StageFile,
    compute_digest,
    load_payload,
    load_stage,
    save_stage,
)
from .sweep import lyapunov_sweep
from .transfer import finite_lyapunov, lyapunov_periodic


class UsageError(Exception):
    """Bad flags or unreadable inputs; maps to exit code 2."""


def _write_csv(path: str | None, header: list[str], rows) -> None:
    """CSV with a header row, '.' decimals, and \\n line endings."""
    if path is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _parse_pair(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"{flag} expects 'a,b', got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
    except ValueError as err:
        raise UsageError(f"{flag}: {err}") from None
    if not a < b:
        raise UsageError(f"{flag} needs a < b, got {text!r}")
    return a, b


def _load_recipe_arg(text: str) -> PotentialRecipe:
    """Inline comma-separated values, or a stage/recipe file path."""
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        values = None
    if values is not None:
        return from_values(values)
    path = Path(text)
    if not path.exists():
        raise UsageError(f"potential file not found: {text}")
    payload = json.loads(path.read_text())
    if "schema" in payload:
        return load_stage(path).record.recipe
    return PotentialRecipe.from_jsonable(payload)


def cmd_spectrum(args) -> int:
    recipe = _load_recipe_arg(args.potential)
    if args.window is None:
        if recipe.period > BAND_EDGE_CAP:
            raise UsageError(
                f"period {recipe.period} needs --window for band extraction"
            )
        bands = band_edges_exact(recipe).bands
    else:
        lo, hi = _parse_pair(args.window, "--window")
        bands = local_bands(recipe, (lo, hi)).bands.bands
    rows = [
        (i, repr(alpha), repr(beta)) for i, (alpha, beta) in enumerate(bands)
    ]
    _write_csv(args.out, ["band_index", "alpha", "beta"], rows)
    return 0


def cmd_lyapunov_sweep(args) -> int:
    if (args.stage is None) == (args.potential is None):
        raise UsageError("give exactly one of --stage or --potential")
    if args.stage is not None:
        path = Path(args.stage)
        if not path.exists():
            raise UsageError(f"stage file not found: {args.stage}")
        recipe = load_stage(path).record.recipe
    else:
        recipe = _load_recipe_arg(args.potential)
    parts = args.grid.split(",")
    if len(parts) != 3:
        raise UsageError(f"--grid expects 'a,b,n', got {args.grid!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as err:
        raise UsageError(f"--grid: {err}") from None
    if n <= 0:
        raise UsageError(f"--grid needs n >= 1, got {n}")
    if args.length == "period":
        length = None
    else:
        try:
            length = int(args.length)
        except ValueError:
            raise UsageError(
                f"--length expects an integer or 'period', got {args.length!r}"
            ) from None
        if length < 1:
            raise UsageError(f"--length must be >= 1, got {length}")
    grid = np.linspace(a, b, n)
    rows = lyapunov_sweep(recipe, grid, length=length, threads=args.threads)
    _write_csv(
        args.out,
        ["E", "L", "in_spectrum"],
        [(repr(E), repr(L), int(inside)) for E, L, inside in rows],
    )
    return 0


def _stage_path(outdir: Path, k: int) -> Path:
    return outdir / f"stage-{k}.json"


def _load_resume_records(resume: Path, tag: str):
    """All records 0..k from the directory of a saved stage file."""
    if not resume.exists():
        raise UsageError(f"resume file not found: {resume}")
    last = load_stage(resume)
    if last.construction != tag:
        raise UsageError(
            f"resume file is construction {last.construction}, expected {tag}"
        )
    records = []
    for k in range(last.stage):
        sibling = _stage_path(resume.parent, k)
        if not sibling.exists():
            raise UsageError(f"resume needs earlier stage file {sibling}")
        earlier = load_stage(sibling)
        if earlier.construction != tag or earlier.stage != k:
            raise UsageError(f"{sibling} does not hold stage {k} of {tag}")
        records.append(earlier.record)
    records.append(last.record)
    return records, last.params


def _run_construct_a(args, mapping: dict[str, str], outdir: Path) -> int:
    config = config_from_mapping(mapping, "A")
    if args.stages is not None:
        config = replace(config, K=args.stages)
    if args.resume:
        records, _params = _load_resume_records(Path(args.resume), "A")
        records = continue_construction_a(records, config)
    else:
        records = run_construction_a(config)
    echo = config_echo(config, {"construction": "a"})
    for rec in records:
        save_stage(
            StageFile("A", rec.k, rec, {}, echo), _stage_path(outdir, rec.k)
        )
    ok = all(rec.report.all_ok for rec in records)
    summary = {
        "construction": "A",
        "stages": records[-1].k,
        "all_ok": ok,
        "per_stage": [
            {
                "k": rec.k,
                "p_k": rec.p_k,
                "intervals": len(rec.sigma),
                "all_ok": rec.report.all_ok,
            }
            for rec in records
        ],
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    print(f"construction A: {len(records)} stage(s), all_ok={ok}")
    return 0 if ok else 1


def _run_construct_b(args, mapping: dict[str, str], outdir: Path) -> int:
    config = config_from_mapping(mapping, "B")
    if args.stages is not None:
        config = replace(config, K=args.stages)
    eps = float(mapping.get("eps", "1.0"))
    v0 = from_values([0.0])
    if args.resume:
        records, params = _load_resume_records(Path(args.resume), "B")
        eps = float(params["eps"])
        v0 = PotentialRecipe.from_jsonable(params["v0"])
        records, report = continue_construction_b(records, v0, eps, config=config)
    else:
        records, report = run_construction_b(v0, eps, config=config)
    echo = config_echo(config, {"construction": "b", "eps": eps})
    params = {"eps": eps, "v0": v0.to_jsonable()}
    for rec in records:
        summary = report if rec.k == records[-1].k else None
        save_stage(
            StageFile("B", rec.k, rec, params, echo, summary),
            _stage_path(outdir, rec.k),
        )
    ok = all(rec.report.all_ok for rec in records) and report.all_ok
    summary_doc = {
        "construction": "B",
        "stages": records[-1].k,
        "all_ok": ok,
        "gamma": report.gamma,
        "final_l0": report.final_l0,
        "final_l0_floor": report.final_l0_floor,
        "dip_min": report.dip_min,
        "dip_bound": report.dip_bound,
        "report": report.to_jsonable(),
    }
    (outdir / "summary.json").write_text(json.dumps(summary_doc, indent=1) + "\n")
    print(
        f"construction B: {len(records)} stage(s), all_ok={ok}, "
        f"L(0)={report.final_l0:.6f} >= {report.final_l0_floor:.6f}, "
        f"dip_min={report.dip_min:.3g} <= {report.dip_bound:.3g}"
    )
    return 0 if ok else 1


def cmd_construct(args) -> int:
    tag = args.construction.upper()
    mapping: dict[str, str] = {}
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise UsageError(f"config file not found: {args.config}")
        mapping = parse_config_text(cfg_path.read_text())
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if tag == "A":
            return _run_construct_a(args, mapping, outdir)
        return _run_construct_b(args, mapping, outdir)
    except ConstructionError as err:
        print(f"construction failed: {err}", file=sys.stderr)
        if err.diagnostics:
            print(json.dumps(err.diagnostics, default=str, indent=1), file=sys.stderr)
        return 1


def _check(results: list, name: str, ok: bool, detail: str) -> None:
    results.append((name, bool(ok), detail))


def _verify_a(stage: StageFile, results: list, parent: StageFile | None) -> None:
    rec: StageRecordA = stage.record
    r = rec.report
    _check(
        results,
        "interval-density",
        is_eps_dense(rec.sigma, r.density_eps),
        f"eps={r.density_eps}",
    )
    if parent is not None:
        _check(
            results,
            "interval-nesting",
            verify_nesting(rec.sigma, parent.record.sigma),
            f"parent stage {parent.stage}",
        )
    band_ok = True
    worst = ""
    for i, iv in enumerate(rec.sigma.intervals):
        found = local_bands(rec.recipe, (iv.lo, iv.hi))
        hit = bool(found.bands.bands) or any(
            s.certified for s in found.slivers
        )
        if not hit:
            band_ok = False
            worst = f"interval {i} ({iv.lo}, {iv.hi}) holds no certified band"
            break
    _check(results, "interval-band-witness", band_ok, worst or f"{len(rec.sigma)} interval(s)")
    growth_ok = True
    detail = ""
    stored = {l: es for l, es in r.samples}
    for l, achieved, target, _passed in r.iii_margins:
        energies = stored.get(l, ())
        if not energies:
            continue
        redone = max(finite_lyapunov(E, rec.recipe, rec.p_k) for E in energies)
        if not (abs(redone - achieved) <= 1e-9 and redone <= target + 1e-6):
            growth_ok = False
            detail = f"l={l}: recomputed {redone} vs stored {achieved} target {target}"
            break
    _check(results, "growth-telescoping", growth_ok, detail or "recomputed from stored samples")


def _verify_b(stage: StageFile, results: list) -> None:
    rec: StageRecordB = stage.record
    r = rec.report
    l0 = lyapunov_periodic(0.0, rec.recipe)
    _check(
        results,
        "zero-energy-growth",
        abs(l0 - r.l0_value) <= 1e-9 and l0 >= r.l0_target - L0_TOL,
        f"recomputed {l0} vs stored {r.l0_value}, target {r.l0_target}",
    )
    e_new, lo_t, hi_t, _ok = r.bracket
    bracket_ok = lo_t - BRACKET_TOL <= e_new <= hi_t + BRACKET_TOL
    detail = f"e={e_new} in [{lo_t}, {hi_t}]"
    if rec.k > 0:
        upper = _dirichlet_window_upper(rec.recipe)
        if upper is not None:
            bracket_ok = bracket_ok and e_new <= upper + 1e-6
            detail += f", window bound {upper}"
    _check(results, "infimum-bracket", bracket_ok, detail)
    if rec.k > 0:
        _check(
            results,
            "prefix-preservation",
            _prefix_preserved(rec.recipe, rec.recipe.parent()),
            "probed against the stage's own parent recipe",
        )
        drop = abs(rec.recipe.overlays[-1].shifts[0]) if rec.recipe.overlays[-1].shifts else 0.0
        _check(
            results,
            "shift-budget",
            abs(drop - r.norm_delta) <= 1e-15 and drop <= r.norm_bound + 1e-15,
            f"drop {drop} <= {r.norm_bound}",
        )
    small_ok = all(
        (count == 0) or (achieved <= target + 1e-6)
        for _l, achieved, target, count, _okk in r.smallness
    )
    l0_flag_ok = r.l0_ok == (r.l0_value >= r.l0_target - L0_TOL)
    _check(
        results,
        "report-consistency",
        small_ok and l0_flag_ok,
        "stored rows and flags self-consistent",
    )


def cmd_verify(args) -> int:
    path = Path(args.stagefile)
    if not path.exists():
        raise UsageError(f"stage file not found: {args.stagefile}")
    payload = load_payload(path)
    results: list[tuple[str, bool, str]] = []
    digest_matches = payload.get("digest") == compute_digest(payload)
    _check(results, "digest", digest_matches, "sha256 over canonical payload")
    try:
        stage = StageFile.from_jsonable(payload)
    except (KeyError, ValueError, TypeError, LimperError) as err:
        _check(results, "schema", False, str(err))
        stage = None
    if stage is not None:
        _check(
            results,
            "period-consistency",
            stage.record.p_k == stage.record.recipe.period,
            f"stored {stage.record.p_k} vs recipe {stage.record.recipe.period}",
        )
        parent = None
        if args.parent:
            parent_path = Path(args.parent)
            if not parent_path.exists():
                raise UsageError(f"parent stage file not found: {args.parent}")
            parent = load_stage(parent_path)
        if stage.construction == "A":
            _verify_a(stage, results, parent)
        else:
            _verify_b(stage, results)
    ok = all(passed for _name, passed, _detail in results)
    for name, passed, detail in results:
        print(f"{name}: {'PASS' if passed else 'FAIL'} ({detail})")
    print(f"verify: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="limper",
        description="Periodic discrete Schrodinger spectra and staged constructions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="band table of a periodic potential")
    p.add_argument(
        "--potential",
        required=True,
        help="inline comma-separated values, or a stage/recipe JSON file",
    )
    p.add_argument("--window", help="restrict to an energy window 'a,b'")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("lyapunov-sweep", help="exponent over an energy grid")
    p.add_argument("--stage", help="stage file holding the potential")
    p.add_argument("--potential", help="inline values or recipe file")
    p.add_argument("--grid", required=True, help="energy grid 'a,b,n'")
    p.add_argument(
        "--length",
        default="period",
        help="transfer length N, or 'period' for the exact trace formula",
    )
    p.add_argument("--threads", type=int, help="worker threads (LIMPER_THREADS wins)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_lyapunov_sweep)

    p = sub.add_parser("construct", help="run a staged construction")
    p.add_argument("--construction", required=True, choices=["a", "b", "A", "B"])
    p.add_argument("--stages", type=int, help="override config K")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--resume", help="continue from a saved stage file")
    p.add_argument("--outdir", default=".", help="directory for stage files")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="re-check a saved stage file")
    p.add_argument("stagefile", help="stage file to verify")
    p.add_argument("--parent", help="previous stage file for nesting checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except LimperError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
