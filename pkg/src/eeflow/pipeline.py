"""End-to-end run: dataset -> Leontief -> flows -> strengths/consumption -> MD-HITS -> tables."""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import centrality, leontief
from .flows import block_edges, build_supranetwork, write_network
from .ingest import load_dataset, parse_bool, read_key_values
from .ranking import format_side_by_side, rank_correlation, rankings, UndefinedCorrelationError

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "EEFLOW_OUTPUT_ROOT"
SUMMARY_NAME = "summary.json"


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / "eeflow-run"


@dataclass
class RunConfig:
    manifest: Path
    out_dir: Path = field(default_factory=default_output_dir)
    gamma: tuple[float, float, float, float] = centrality.DEFAULT_GAMMA
    leontief_tol: float = leontief.DEFAULT_TOL
    mdhits_tol: float = centrality.DEFAULT_TOL
    max_iter: int = centrality.DEFAULT_MAX_ITER
    top_k: int = 25
    monolayers: tuple[str, ...] = ()
    log_level: str = "INFO"
    write_flows: bool = False
    record_timings: bool = False

    def __post_init__(self):
        self.manifest = Path(self.manifest)
        self.out_dir = Path(self.out_dir)
        self.gamma = tuple(float(g) for g in self.gamma)
        self.monolayers = tuple(self.monolayers)
        self.validate()

    def validate(self) -> None:
        if not (self.leontief_tol > 0 and self.mdhits_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        try:
            centrality.check_gamma(self.gamma)
        except centrality.ParameterError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        """Read a ``key = value`` config; non-None ``overrides`` win over file values."""
        path = Path(path)
        kv = read_key_values(path)
        values: dict = {}
        for key, raw in kv.items():
            if key in ("manifest", "out_dir"):
                p = Path(raw)
                values[key] = p if p.is_absolute() else path.parent / p
            elif key == "gamma":
                values[key] = parse_floats(raw)
            elif key in ("leontief_tol", "mdhits_tol"):
                values[key] = float(raw)
            elif key in ("max_iter", "top_k"):
                values[key] = int(raw)
            elif key == "monolayers":
                values[key] = tuple(c.strip() for c in raw.split(",") if c.strip())
            elif key in ("write_flows", "record_timings"):
                values[key] = parse_bool(raw)
            elif key == "log_level":
                values[key] = raw
            else:
                raise ConfigError(f"{path}: unknown config key {key!r}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "manifest" not in values:
            raise ConfigError(f"{path}: 'manifest' is required")
        return cls(**values)

    def as_dict(self) -> dict:
        return {
            "manifest": str(self.manifest),
            "gamma": list(self.gamma),
            "leontief_tol": self.leontief_tol,
            "mdhits_tol": self.mdhits_tol,
            "max_iter": self.max_iter,
            "top_k": self.top_k,
            "monolayers": list(self.monolayers),
        }


def parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_tsv(path: Path, header: Sequence[str], rows) -> None:
    lines = ["\t".join(header)]
    lines += ["\t".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


# table writers shared with the CLI subcommands -------------------------------

def write_strength_tables(out: Path, rep, sector_codes, economy_codes) -> list[str]:
    n = len(sector_codes)
    write_tsv(
        out / "strength_node_layer.tsv",
        ["position", "sector", "economy", "in_strength", "out_strength", "total_strength"],
        [
            (a * n + i + 1, s, e, rep.node_layer_in[i, a], rep.node_layer_out[i, a], rep.node_layer_tot[i, a])
            for a, e in enumerate(economy_codes)
            for i, s in enumerate(sector_codes)
        ],
    )
    write_tsv(
        out / "strength_sectors.tsv",
        ["position", "sector", "in_strength", "out_strength", "total_strength"],
        [(i + 1, s, rep.node_in[i], rep.node_out[i], rep.node_tot[i]) for i, s in enumerate(sector_codes)],
    )
    write_tsv(
        out / "strength_economies.tsv",
        ["position", "economy", "in_strength", "out_strength", "total_strength"],
        [(a + 1, e, rep.layer_in[a], rep.layer_out[a], rep.layer_tot[a]) for a, e in enumerate(economy_codes)],
    )
    return ["strength_node_layer.tsv", "strength_sectors.tsv", "strength_economies.tsv"]


def write_score_tables(out: Path, scores, sector_codes, economy_codes, top_k: int) -> list[str]:
    write_tsv(
        out / "scores_sectors.tsv",
        ["position", "sector", "hub", "authority"],
        [(i + 1, s, scores.hub[i], scores.authority[i]) for i, s in enumerate(sector_codes)],
    )
    write_tsv(
        out / "scores_economies.tsv",
        ["position", "economy", "broadcasting", "receiving"],
        [(a + 1, e, scores.broadcasting[a], scores.receiving[a]) for a, e in enumerate(economy_codes)],
    )
    return ["scores_sectors.tsv", "scores_economies.tsv"] + write_ranking_tables(
        out, scores, sector_codes, economy_codes, top_k
    )


def write_ranking_tables(out: Path, scores, sector_codes, economy_codes, top_k: int) -> list[str]:
    tables = rankings(scores, sector_codes, economy_codes, k=top_k)
    (out / "ranking_sectors.tsv").write_text(format_side_by_side(tables, ["hub", "authority"]), encoding="utf-8")
    (out / "ranking_economies.tsv").write_text(
        format_side_by_side(tables, ["broadcasting", "receiving"]), encoding="utf-8"
    )
    return ["ranking_sectors.tsv", "ranking_economies.tsv"]


def write_consumption_tables(out: Path, cons, k: int = 10) -> list[str]:
    write_tsv(
        out / "consumption_sectors.tsv",
        ["rank", "sector", "energy"],
        [(r + 1, code, v) for r, (code, v) in enumerate(cons.sectors_ranked())],
    )
    write_tsv(
        out / "consumption_economies.tsv",
        ["rank", "economy", "energy"],
        [(r + 1, code, v) for r, (code, v) in enumerate(cons.economies_ranked())],
    )
    write_tsv(
        out / "consumption_top_by_sector.tsv",
        ["sector", "rank", "economy", "energy"],
        [
            (sector, r + 1, code, v)
            for sector, rows in cons.top_economies_per_sector(k).items()
            for r, (code, v) in enumerate(rows)
        ],
    )
    return ["consumption_sectors.tsv", "consumption_economies.tsv", "consumption_top_by_sector.tsv"]


def write_edge_list(path: Path, edges) -> None:
    write_tsv(path, ["source_sector", "target_sector", "weight"], edges)


def _spearman(a, b):
    try:
        return rank_correlation(a, b)
    except (UndefinedCorrelationError, ValueError):
        return None


@dataclass
class RunArtifacts:
    out_dir: Path
    files: list[str]
    summary: dict


def run_pipeline(cfg: RunConfig) -> RunArtifacts:
    """Run every stage and write plot-ready tables plus ``summary.json`` to ``cfg.out_dir``.

    A failing stage raises :class:`PipelineError`; files from earlier stages
    stay in place and the summary is written with ``status = "failed"``.
    Wall times go to the log (and ``timings.json`` if requested) so that
    repeated runs produce byte-identical directories.
    """
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    stages: dict[str, dict] = {}
    timings: dict[str, float] = {}
    summary: dict = {"config": cfg.as_dict(), "stages": stages, "files": files}
    state: dict = {}

    def stage(name):
        def wrap(fn):
            t0 = time.perf_counter()
            try:
                info = fn() or {}
            except Exception as exc:
                summary.update(status="failed", failed_stage=name, error=f"{type(exc).__name__}: {exc}")
                write_json(out / SUMMARY_NAME, summary)
                raise PipelineError(name, exc) from exc
            timings[name] = time.perf_counter() - t0
            stages[name] = info
            scalars = " ".join(f"{k}={v}" for k, v in info.items() if not isinstance(v, (dict, list)))
            logger.info("[%s] %.3fs %s", name, timings[name], scalars)
            return fn
        return wrap

    @stage("ingest")
    def _():
        d = state["dataset"] = load_dataset(cfg.manifest)
        return {"n_sectors": d.n_sectors, "n_economies": d.layer_count, "clamp_counts": dict(d.clamp_counts)}

    @stage("leontief")
    def _():
        ls = state["leontief"] = leontief.solve_leontief(
            leontief.build_coefficients(state["dataset"]), tol=cfg.leontief_tol
        )
        return {
            "spectral_radius": ls.spectral_radius_estimate,
            "residual": ls.residual_norm,
            "zero_output_columns": len(ls.coefficient.zero_output_columns),
        }

    @stage("flows")
    def _():
        sn = state["network"] = build_supranetwork(state["dataset"], state["leontief"])
        if cfg.write_flows:
            write_network(sn, out / "flows.tsv")
            files.append("flows.tsv")
        return sn.summary()

    @stage("strength")
    def _():
        d, sn = state["dataset"], state["network"]
        rep = state["strength"] = centrality.strengths(sn)
        files.extend(write_consumption_tables(out, centrality.consumption_summary(d)))
        files.extend(write_strength_tables(out, rep, d.sector_codes, d.economy_codes))
        return {
            "economy_in_out_spearman": _spearman(rep.layer_in, rep.layer_out),
            "sector_in_out_spearman": _spearman(rep.node_in, rep.node_out),
        }

    @stage("mdhits")
    def _():
        d, sn = state["dataset"], state["network"]
        sc = centrality.mdhits(sn, cfg.gamma, cfg.mdhits_tol, cfg.max_iter)
        files.extend(write_score_tables(out, sc, d.sector_codes, d.economy_codes, cfg.top_k))
        return {"iterations": sc.iterations, "residual": sc.residual, "converged": sc.converged}

    @stage("monolayers")
    def _():
        d, sn, rep = state["dataset"], state["network"], state["strength"]
        codes = list(cfg.monolayers)
        if not codes:
            order = sorted(range(d.layer_count), key=lambda a: (-rep.layer_tot[a], d.economy_codes[a]))
            codes = [d.economy_codes[a] for a in order[:3]]
        for code in codes:
            a = sn.economy_index(code)
            name = f"monolayer_{code}.tsv"
            write_edge_list(out / name, block_edges(sn, a, a))
            files.append(name)
        return {"economies": codes}

    summary["status"] = "ok"
    summary["converged"] = bool(stages["mdhits"]["converged"])
    write_json(out / SUMMARY_NAME, summary)
    if cfg.record_timings:
        write_json(out / "timings.json", timings)
    return RunArtifacts(out, files + [SUMMARY_NAME], summary)


# run comparison --------------------------------------------------------------

@dataclass
class FileDiff:
    name: str
    status: str  # identical, differs, missing_in_a, missing_in_b, shape_mismatch
    max_abs_diff: float = 0.0
    text_mismatches: int = 0
    rank_changes: int = 0


def _read_cells(path: Path) -> list[list[str]]:
    return [line.split("\t") for line in path.read_text(encoding="utf-8").splitlines()]


def _as_float(s: str):
    try:
        return float(s)
    except ValueError:
        return None


def _flatten_json(obj, prefix="") -> dict[str, object]:
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            out.update(_flatten_json(v, f"{prefix}{k}."))
        return out
    if isinstance(obj, list):
        out = {}
        for k, v in enumerate(obj):
            out.update(_flatten_json(v, f"{prefix}{k}."))
        return out
    return {prefix.rstrip("."): obj}


def _diff_cells(name, a_cells, b_cells) -> FileDiff:
    if len(a_cells) != len(b_cells) or any(len(r) != len(s) for r, s in zip(a_cells, b_cells)):
        return FileDiff(name, "shape_mismatch")
    max_diff, mism, rank_changes = 0.0, 0, 0
    header = a_cells[0] if a_cells else []
    code_cols = {k for k, h in enumerate(header) if h.endswith("_code")}
    for r, (ra, rb) in enumerate(zip(a_cells, b_cells)):
        for c, (x, y) in enumerate(zip(ra, rb)):
            if x == y:
                continue
            fx, fy = _as_float(x), _as_float(y)
            if fx is not None and fy is not None:
                max_diff = max(max_diff, abs(fx - fy))
            else:
                mism += 1
                if r > 0 and c in code_cols:
                    rank_changes += 1
    status = "identical" if max_diff == 0 and mism == 0 else "differs"
    return FileDiff(name, status, max_diff, mism, rank_changes)


def diff_runs(dir_a: str | Path, dir_b: str | Path) -> list[FileDiff]:
    """Per-file numeric max-abs differences and ranking-order changes between two run directories."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    names_a = {p.name for p in dir_a.iterdir() if p.is_file()} if dir_a.is_dir() else set()
    names_b = {p.name for p in dir_b.iterdir() if p.is_file()} if dir_b.is_dir() else set()
    report = []
    for name in sorted(names_a | names_b):
        if name not in names_a:
            report.append(FileDiff(name, "missing_in_a"))
            continue
        if name not in names_b:
            report.append(FileDiff(name, "missing_in_b"))
            continue
        pa, pb = dir_a / name, dir_b / name
        if name.endswith(".json"):
            ja = _flatten_json(json.loads(pa.read_text(encoding="utf-8")))
            jb = _flatten_json(json.loads(pb.read_text(encoding="utf-8")))
            keys = sorted(set(ja) | set(jb))
            a_cells = [["key", "value"]] + [[k, str(ja.get(k, "<missing>"))] for k in keys]
            b_cells = [["key", "value"]] + [[k, str(jb.get(k, "<missing>"))] for k in keys]
            report.append(_diff_cells(name, a_cells, b_cells))
        else:
            report.append(_diff_cells(name, _read_cells(pa), _read_cells(pb)))
    return report


def format_diff(report: list[FileDiff]) -> str:
    lines = ["file\tstatus\tmax_abs_diff\ttext_mismatches\trank_changes"]
    for d in report:
        lines.append(f"{d.name}\t{d.status}\t{d.max_abs_diff:.6g}\t{d.text_mismatches}\t{d.rank_changes}")
    return "\n".join(lines) + "\n"
