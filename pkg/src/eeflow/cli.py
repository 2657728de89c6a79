"""Command-line entry point: ``eeflow <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import centrality, leontief
from .eora import ENERGY_PATTERN, EXCLUDE_PATTERN, adapt_eora
from .flows import block_edges, build_supranetwork, read_network, write_network
from .ingest import IngestError, load_dataset, read_matrix, synth_dataset, write_dataset, write_matrix
from .model import validate_dataset
from .pipeline import (
    ConfigError,
    PipelineError,
    RunConfig,
    default_output_dir,
    diff_runs,
    format_diff,
    parse_floats,
    run_pipeline,
    write_edge_list,
    write_json,
    write_ranking_tables,
    write_score_tables,
    write_strength_tables,
)
from .ranking import format_side_by_side, rank_table, rankings

log = logging.getLogger("eeflow")


class CommandError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


def _dump(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=float))


def _solve(manifest, tol):
    d = load_dataset(manifest)
    return d, leontief.solve_leontief(leontief.build_coefficients(d), tol=tol)


def cmd_ingest(args):
    d = load_dataset(args.manifest)
    report = validate_dataset(d)
    _dump({
        "n_sectors": d.n_sectors,
        "n_economies": d.layer_count,
        "accepted": report.accepted,
        "findings": [f"[{f.severity}] {f.kind}: {f.message} (count={f.count})" for f in report.findings],
        "clamp_counts": dict(d.clamp_counts),
    })


def cmd_synth(args):
    d = synth_dataset(args.sectors, args.economies, args.seed, args.rho)
    m = write_dataset(d, args.out)
    print(m.path)


def cmd_adapt_eora(args):
    m = adapt_eora(args.in_dir, args.out, args.year, args.energy_pattern, args.exclude_pattern,
                   clamp_negatives=not args.no_clamp)
    print(m.path)


def cmd_leontief(args):
    d, ls = _solve(args.manifest, args.tol)
    payload = {
        "spectral_radius": ls.spectral_radius_estimate,
        "residual": ls.residual_norm,
        "size": ls.size,
        "zero_output_columns": [d.flat_labels()[k] for k in ls.coefficient.zero_output_columns],
    }
    if args.inverse:
        if not ls.is_dense:
            raise CommandError("leontief", "the explicit inverse is only formed up to the dense size limit")
        labels = d.flat_labels()
        write_matrix(args.inverse, ls.leontief_inverse, labels, labels)
        payload["inverse"] = str(args.inverse)
    if args.out:
        write_json(Path(args.out), payload)
    _dump(payload)


def _system_from_inverse(d, path, tol):
    inv, rows, cols = read_matrix(path)
    labels = d.flat_labels()
    if rows != labels or cols != labels:
        raise CommandError("flows", f"{path}: labels do not match the dataset")
    cm = leontief.build_coefficients(d)
    residual = float(np.abs((np.eye(d.size) - cm.a) @ inv - np.eye(d.size)).max(initial=0.0))
    if residual > tol:
        raise CommandError("flows", f"{path}: residual {residual:.3g} exceeds {tol:.3g}; not the inverse of this dataset")
    rho, _ = leontief.spectral_radius(cm.a)
    return leontief.LeontiefSystem(cm, inv, rho, residual)


def cmd_flows(args):
    if args.leontief:
        d = load_dataset(args.manifest)
        ls = _system_from_inverse(d, args.leontief, args.tol)
    else:
        d, ls = _solve(args.manifest, args.tol)
    sn = build_supranetwork(d, ls)
    write_network(sn, args.out)
    summary = sn.summary()
    write_json(Path(str(args.out) + ".summary.json"), summary)
    _dump(summary)


def cmd_block(args):
    sn = read_network(args.flows)
    a, b = sn.economy_index(args.alpha), sn.economy_index(args.beta)
    edges = block_edges(sn, a, b, include_zero=args.include_zero)
    if args.out:
        write_edge_list(Path(args.out), edges)
    else:
        print("source_sector\ttarget_sector\tweight")
        for s, t, w in edges:
            print(f"{s}\t{t}\t{w:.17g}")


def cmd_strength(args):
    sn = read_network(args.flows)
    rep = centrality.strengths(sn)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in write_strength_tables(out, rep, sn.sector_codes, sn.economy_codes):
        print(out / name)


def cmd_hits(args):
    from .flows import layer_block

    sn = read_network(args.flows)
    a = sn.economy_index(args.layer)
    sc = centrality.hits_monoplex(layer_block(sn, a, a), args.tol, args.max_iter)
    tables = rankings(sc, sn.sector_codes, k=args.top)
    text = format_side_by_side(tables, ["hub", "authority"])
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if not sc.converged:
        log.warning("HITS did not converge (residual %.3g)", sc.residual)


def cmd_mdhits(args):
    sn = read_network(args.flows)
    sc = centrality.mdhits(sn, parse_floats(args.gamma), args.tol, args.max_iter)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_score_tables(out, sc, sn.sector_codes, sn.economy_codes, args.top)
    payload = {"iterations": sc.iterations, "residual": sc.residual, "converged": sc.converged,
               "gamma": list(sc.gamma)}
    write_json(out / "mdhits.json", payload)
    _dump(payload)


def _read_scores(path: Path, columns):
    from .pipeline import _read_cells

    cells = _read_cells(path)
    header = cells[0]
    codes = [row[1] for row in cells[1:]]
    return codes, {c: np.array([float(r[header.index(c)]) for r in cells[1:]]) for c in columns}


def cmd_report(args):
    src = Path(args.in_dir)
    out = Path(args.out) if args.out else None
    sections = []
    sec_path, eco_path = src / "scores_sectors.tsv", src / "scores_economies.tsv"
    if sec_path.exists() and eco_path.exists():
        sc, sv = _read_scores(sec_path, ["hub", "authority"])
        ec, ev = _read_scores(eco_path, ["broadcasting", "receiving"])
        tables = {
            "hub": rank_table(sv["hub"], sc, args.top),
            "authority": rank_table(sv["authority"], sc, args.top),
            "broadcasting": rank_table(ev["broadcasting"], ec, args.top),
            "receiving": rank_table(ev["receiving"], ec, args.top),
        }
        sections.append(("ranking_sectors.tsv", format_side_by_side(tables, ["hub", "authority"])))
        sections.append(("ranking_economies.tsv", format_side_by_side(tables, ["broadcasting", "receiving"])))
    for kind in ("sectors", "economies"):
        p = src / f"strength_{kind}.tsv"
        if p.exists():
            codes, v = _read_scores(p, ["in_strength", "out_strength"])
            tables = {
                "in_strength": rank_table(v["in_strength"], codes, args.top),
                "out_strength": rank_table(v["out_strength"], codes, args.top),
            }
            sections.append((f"ranking_strength_{kind}.tsv",
                             format_side_by_side(tables, ["in_strength", "out_strength"])))
    if not sections:
        raise CommandError("report", f"{src}: no score or strength tables found")
    for name, text in sections:
        if out:
            out.mkdir(parents=True, exist_ok=True)
            (out / name).write_text(text, encoding="utf-8")
        sys.stdout.write(f"# {name}\n{text}")


def cmd_run(args):
    overrides = dict(
        manifest=args.manifest,
        out_dir=args.out,
        gamma=parse_floats(args.gamma) if args.gamma else None,
        leontief_tol=args.leontief_tol,
        mdhits_tol=args.mdhits_tol,
        max_iter=args.max_iter,
        top_k=args.top,
        monolayers=tuple(c.strip() for c in args.monolayers.split(",")) if args.monolayers else None,
        write_flows=True if args.write_flows else None,
        record_timings=True if args.timings else None,
    )
    if args.config:
        cfg = RunConfig.from_file(args.config, **overrides)
    else:
        if not args.manifest:
            raise ConfigError("either --config or --manifest is required")
        cfg = RunConfig(**{k: v for k, v in overrides.items() if v is not None})
    art = run_pipeline(cfg)
    _dump({"out_dir": str(art.out_dir), "status": art.summary["status"],
           "converged": art.summary["converged"], "files": art.files})


def cmd_diff(args):
    report = diff_runs(args.dir_a, args.dir_b)
    sys.stdout.write(format_diff(report))
    if args.strict and any(d.status != "identical" for d in report):
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eeflow", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="load and validate a dataset")
    s.add_argument("--manifest", required=True, type=Path)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", help="write a random synthetic dataset")
    s.add_argument("--sectors", type=int, required=True)
    s.add_argument("--economies", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rho", type=float, default=0.6, help="spectral radius bound for A")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("adapt-eora", help="convert an Eora26 export to the canonical format")
    s.add_argument("--in", dest="in_dir", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--year", type=int)
    s.add_argument("--energy-pattern", default=ENERGY_PATTERN)
    s.add_argument("--exclude-pattern", default=EXCLUDE_PATTERN)
    s.add_argument("--no-clamp", action="store_true", help="write clamp_negatives = false")
    s.set_defaults(func=cmd_adapt_eora)

    s = sub.add_parser("leontief", help="solve the Leontief system")
    s.add_argument("--manifest", required=True, type=Path)
    s.add_argument("--tol", type=float, default=leontief.DEFAULT_TOL)
    s.add_argument("--out", type=Path, help="JSON summary file")
    s.add_argument("--inverse", type=Path, help="also write the inverse as a matrix file")
    s.set_defaults(func=cmd_leontief)

    s = sub.add_parser("flows", help="build the supradjacency matrix W")
    s.add_argument("--manifest", required=True, type=Path)
    s.add_argument("--leontief", type=Path, help="inverse written by 'leontief --inverse'")
    s.add_argument("--tol", type=float, default=leontief.DEFAULT_TOL)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_flows)

    s = sub.add_parser("block", help="edge list of one layer-pair block")
    s.add_argument("--flows", type=Path, required=True)
    s.add_argument("--alpha", required=True)
    s.add_argument("--beta", required=True)
    s.add_argument("--include-zero", action="store_true")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_block)

    s = sub.add_parser("strength", help="strength tables")
    s.add_argument("--flows", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_strength)

    s = sub.add_parser("hits", help="monoplex HITS on one intra-layer block")
    s.add_argument("--flows", type=Path, required=True)
    s.add_argument("--layer", required=True)
    s.add_argument("--tol", type=float, default=centrality.DEFAULT_TOL)
    s.add_argument("--max-iter", type=int, default=centrality.DEFAULT_MAX_ITER)
    s.add_argument("--top", type=int)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_hits)

    s = sub.add_parser("mdhits", help="Multi-Dimensional HITS scores")
    s.add_argument("--flows", type=Path, required=True)
    s.add_argument("--gamma", default="0.25,0.25,0.25,0.25")
    s.add_argument("--tol", type=float, default=centrality.DEFAULT_TOL)
    s.add_argument("--max-iter", type=int, default=centrality.DEFAULT_MAX_ITER)
    s.add_argument("--top", type=int, default=25)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_mdhits)

    s = sub.add_parser("report", help="ranking tables from score/strength files")
    s.add_argument("--in", dest="in_dir", type=Path, required=True)
    s.add_argument("--top", type=int, default=25)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("run", help="full pipeline")
    s.add_argument("--config", type=Path)
    s.add_argument("--manifest", type=Path)
    s.add_argument("--out", type=Path, help=f"output directory (default: ${'{'}EEFLOW_OUTPUT_ROOT{'}'}/eeflow-run)")
    s.add_argument("--gamma")
    s.add_argument("--leontief-tol", type=float)
    s.add_argument("--mdhits-tol", type=float)
    s.add_argument("--max-iter", type=int)
    s.add_argument("--top", type=int)
    s.add_argument("--monolayers", help="comma-separated economy codes")
    s.add_argument("--write-flows", action="store_true")
    s.add_argument("--timings", action="store_true", help="also write timings.json")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("diff", help="compare two run directories")
    s.add_argument("dir_a", type=Path)
    s.add_argument("dir_b", type=Path)
    s.add_argument("--strict", action="store_true", help="exit 1 unless identical")
    s.set_defaults(func=cmd_diff)
    return p


STAGE_OF = {
    "ingest": "ingest", "synth": "synth", "adapt_eora": "adapt-eora", "leontief": "leontief",
    "flows": "flows", "block": "block", "strength": "strength", "hits": "hits",
    "mdhits": "mdhits", "report": "report", "run": "run", "diff": "diff",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    stage = STAGE_OF.get(args.func.__name__.removeprefix("cmd_"), args.command)
    try:
        return int(args.func(args) or 0)
    except PipelineError as exc:
        print(f"eeflow: [{exc.stage}] {type(exc.cause).__name__}: {exc.cause}", file=sys.stderr)
    except CommandError as exc:
        print(f"eeflow: [{exc.stage}] {exc}", file=sys.stderr)
    except (IngestError, ConfigError, leontief.LeontiefError, centrality.ParameterError,
            KeyError, ValueError, OSError) as exc:
        print(f"eeflow: [{stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
