"""Canonical on-disk dataset format and a synthetic dataset generator.

A dataset directory holds a key-value manifest plus one tab-separated
matrix file per array.  Matrix files carry one header row and one header
column; supradjacency positions are labelled ``SECTOR@ECONOMY`` and every
number is written with 17 significant digits, so load(write(d)) is exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .model import (
    ENERGY_SEMANTICS,
    DatasetMeta,
    EconomyId,
    MrioDataset,
    SectorId,
    flat_label,
    validate_dataset,
)
from .reference import reference_economies, reference_sectors

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.txt"

ARRAY_KEYS = ("intermediate_use", "total_output", "final_demand", "energy_satellite")


class IngestError(ValueError):
    """Raised when a manifest or matrix file cannot be turned into a dataset."""


@dataclass
class DatasetManifest:
    n_sectors: int
    n_economies: int
    year: int = 0
    currency: str = ""
    energy_unit: str = "TJ"
    energy_semantics: str = "total"
    intermediate_use: str = "intermediate_use.tsv"
    total_output: str = "total_output.tsv"
    final_demand: str = "final_demand.tsv"
    energy_satellite: str = "energy_satellite.tsv"
    sectors: str = "sectors.tsv"
    economies: str = "economies.tsv"
    clamp_negatives: bool = True
    path: Path | None = field(default=None, compare=False)

    def resolve(self, key: str) -> Path:
        p = Path(getattr(self, key))
        if not p.is_absolute() and self.path is not None:
            p = self.path.parent / p
        return p

    def meta(self) -> DatasetMeta:
        return DatasetMeta(self.year, self.currency, self.energy_unit, self.energy_semantics)


# key-value text files (manifest, run config) --------------------------------

def read_key_values(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IngestError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise IngestError(f"not a boolean: {text!r}")


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        kv = read_key_values(path)
    except OSError as exc:
        raise IngestError(f"cannot read manifest {path}: {exc}") from exc
    known = {f.name for f in fields(DatasetManifest)} - {"path"}
    unknown = set(kv) - known
    if unknown:
        raise IngestError(f"{path}: unknown manifest keys {sorted(unknown)}")
    for key in ("n_sectors", "n_economies"):
        if key not in kv:
            raise IngestError(f"{path}: missing required key {key!r}")
    try:
        m = DatasetManifest(
            n_sectors=int(kv.pop("n_sectors")),
            n_economies=int(kv.pop("n_economies")),
            year=int(kv.pop("year", 0)),
            clamp_negatives=parse_bool(kv.pop("clamp_negatives", "true")),
            path=path,
            **kv,
        )
    except ValueError as exc:
        raise IngestError(f"{path}: {exc}") from exc
    if m.energy_semantics not in ENERGY_SEMANTICS:
        raise IngestError(f"{path}: energy_semantics must be one of {ENERGY_SEMANTICS}")
    if m.n_sectors < 1 or m.n_economies < 1:
        raise IngestError(f"{path}: n_sectors and n_economies must be >= 1")
    return m


def write_manifest(m: DatasetManifest, path: str | Path) -> None:
    lines = ["# eeflow dataset manifest"]
    for f in fields(m):
        if f.name == "path":
            continue
        value = getattr(m, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# matrix files ----------------------------------------------------------------

def write_matrix(path: str | Path, values, row_labels: Sequence[str], col_labels: Sequence[str],
                 corner: str = "label") -> None:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != (len(row_labels), len(col_labels)):
        raise ValueError(f"shape {values.shape} does not match labels ({len(row_labels)}, {len(col_labels)})")
    frame = pd.DataFrame(values, index=pd.Index(list(row_labels), name=corner), columns=list(col_labels))
    frame.to_csv(path, sep="\t", float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")


def read_matrix(path: str | Path) -> tuple[np.ndarray, list[str], list[str]]:
    """Return ``(values, row_labels, column_labels)`` from a canonical matrix file."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            frame = pd.read_csv(
                fh,
                sep="\t",
                header=None,
                dtype={0: str},
                keep_default_na=False,
                float_precision="round_trip",
            )
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as exc:
        raise IngestError(f"cannot parse {path}: {exc}") from exc
    col_labels = header[1:]
    if frame.shape[1] != len(header):
        raise IngestError(f"{path}: header has {len(header)} fields, rows have {frame.shape[1]}")
    body = frame.iloc[:, 1:]
    try:
        values = body.to_numpy(dtype=float)
    except (TypeError, ValueError):
        try:
            values = np.array([[float(v) for v in row] for row in body.itertuples(index=False)], dtype=float)
        except ValueError as exc:
            raise IngestError(f"{path}: non-numeric entry: {exc}") from exc
    if values.size == 0:
        values = values.reshape(len(frame), len(col_labels))
    return values, frame.iloc[:, 0].tolist(), col_labels


def write_labels(path: str | Path, ids) -> None:
    lines = ["position\tcode\tname"]
    for x in ids:
        lines.append(f"{x.index + 1}\t{x.code}\t{x.name}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels(path: str | Path, kind):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    rows = [line.split("\t") for line in text.splitlines() if line.strip()]
    if not rows or rows[0][:2] != ["position", "code"]:
        raise IngestError(f"{path}: expected header 'position<TAB>code<TAB>name'")
    out = []
    for k, row in enumerate(rows[1:]):
        if len(row) < 2:
            raise IngestError(f"{path}: malformed row {row!r}")
        if row[0].strip() != str(k + 1):
            raise IngestError(f"{path}: position {row[0]!r} out of order, expected {k + 1}")
        code = row[1].strip()
        name = row[2].strip() if len(row) > 2 else code
        out.append(kind(k, code, name))
    return out


# datasets --------------------------------------------------------------------

def _check_labels(path, got, expected, axis):
    if list(got) != list(expected):
        bad = next((k for k, (a, b) in enumerate(zip(got, expected)) if a != b), min(len(got), len(expected)))
        raise IngestError(
            f"{path}: {axis} labels do not match the declared sectors/economies "
            f"(first mismatch at position {bad + 1}; {len(got)} labels, expected {len(expected)})"
        )


def load_dataset(manifest_path: str | Path) -> MrioDataset:
    """Read, clamp (if enabled) and validate the dataset described by a manifest.

    Raises :class:`IngestError` on parse failures, shape or label mismatches,
    NaN/Inf entries, and negative entries when ``clamp_negatives`` is false.
    The number of clamped entries per array is kept in ``clamp_counts``.
    """
    m = read_manifest(manifest_path)
    sectors = read_labels(m.resolve("sectors"), SectorId)
    economies = read_labels(m.resolve("economies"), EconomyId)
    if len(sectors) != m.n_sectors or len(economies) != m.n_economies:
        raise IngestError(
            f"label files list {len(sectors)} sectors / {len(economies)} economies, "
            f"manifest declares {m.n_sectors} / {m.n_economies}"
        )
    sec_codes = [s.code for s in sectors]
    eco_codes = [e.code for e in economies]
    flat = [flat_label(s, e) for e in eco_codes for s in sec_codes]
    expected = {
        "intermediate_use": (flat, flat),
        "total_output": (flat, None),
        "final_demand": (flat, eco_codes),
        "energy_satellite": (sec_codes, eco_codes),
    }
    arrays = {}
    counts = {}
    for key in ARRAY_KEYS:
        path = m.resolve(key)
        values, rows, cols = read_matrix(path)
        row_exp, col_exp = expected[key]
        _check_labels(path, rows, row_exp, "row")
        if col_exp is not None:
            _check_labels(path, cols, col_exp, "column")
        elif values.shape[1] != 1:
            raise IngestError(f"{path}: expected a single value column, got {values.shape[1]}")
        else:
            values = values[:, 0]
        if not np.isfinite(values).all():
            raise IngestError(f"{path}: {int((~np.isfinite(values)).sum())} NaN/Inf entries")
        negative = values < 0
        n_neg = int(negative.sum())
        if n_neg:
            if not m.clamp_negatives:
                first = tuple(int(v) + 1 for v in np.argwhere(negative)[0])
                raise IngestError(f"{path}: {n_neg} negative entries (first at 1-based {first}); clamping disabled")
            values = np.where(negative, 0.0, values)
            logger.info("clamped %d negative entries in %s", n_neg, key)
        counts[key] = n_neg
        arrays[key] = values

    d = MrioDataset(
        sectors=tuple(sectors),
        economies=tuple(economies),
        meta=m.meta(),
        clamp_counts=counts,
        **arrays,
    )
    report = validate_dataset(d)
    if not report.accepted:
        raise IngestError("dataset failed validation:\n" + report.format())
    for f in report.warnings:
        logger.warning("%s: %s (count=%d)", f.kind, f.message, f.count)
    return d


def write_dataset(d: MrioDataset, directory: str | Path, clamp_negatives: bool = True) -> DatasetManifest:
    """Write ``d`` in canonical form under ``directory`` and return its manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    m = DatasetManifest(
        n_sectors=d.n_sectors,
        n_economies=d.layer_count,
        year=d.meta.year,
        currency=d.meta.currency,
        energy_unit=d.meta.energy_unit,
        energy_semantics=d.meta.energy_semantics,
        clamp_negatives=clamp_negatives,
        path=directory / MANIFEST_NAME,
    )
    flat = d.flat_labels()
    write_labels(m.resolve("sectors"), d.sectors)
    write_labels(m.resolve("economies"), d.economies)
    write_matrix(m.resolve("intermediate_use"), d.intermediate_use, flat, flat)
    write_matrix(m.resolve("total_output"), d.total_output, flat, ["total_output"])
    write_matrix(m.resolve("final_demand"), d.final_demand, flat, d.economy_codes)
    write_matrix(m.resolve("energy_satellite"), d.energy_satellite, d.sector_codes, d.economy_codes, corner="sector")
    write_manifest(m, m.path)
    return m


def _default_codes(n: int, reference, prefix: str) -> list[tuple[str, str]]:
    if n <= len(reference):
        return [(x.code, x.name) for x in reference[:n]]
    return [(f"{prefix}{k + 1}", f"{prefix}{k + 1}") for k in range(n)]


def synth_dataset(n_sectors: int, n_economies: int, seed: int = 0, spectral_target: float = 0.6,
                  density: float = 0.8) -> MrioDataset:
    """Random nonnegative dataset whose coefficient matrix has spectral radius <= ``spectral_target``.

    Uses numpy's PCG64 generator, so a fixed seed reproduces the same values.
    Each coefficient column is scaled to sum to at most ``spectral_target``,
    which bounds the spectral radius by the 1-norm; U is then rescaled
    further if the power-iteration check still reports a larger radius.
    """
    if n_sectors < 1 or n_economies < 1:
        raise ValueError("n_sectors and n_economies must be >= 1")
    if not 0 < spectral_target < 1:
        raise ValueError("spectral_target must lie in (0, 1)")
    from .leontief import spectral_radius

    rng = np.random.Generator(np.random.PCG64(seed))
    n = n_sectors * n_economies
    output = rng.uniform(50.0, 150.0, n)
    raw = rng.uniform(0.0, 1.0, (n, n)) * (rng.random((n, n)) < density)
    col = raw.sum(axis=0)
    col[col == 0] = 1.0
    share = rng.uniform(0.3, 1.0, n) * spectral_target
    coeff = raw / col * share
    use = coeff * output
    final = rng.uniform(0.0, 20.0, (n, n_economies)) * (rng.random((n, n_economies)) < density)
    energy = rng.uniform(0.1, 2.0, (n_sectors, n_economies))

    for _ in range(50):
        rho, _ = spectral_radius(use / output)
        if rho <= spectral_target:
            break
        use = use * (spectral_target / rho) * (1 - 1e-12)

    sec = _default_codes(n_sectors, reference_sectors(), "S")
    eco = _default_codes(n_economies, reference_economies(), "E")
    return MrioDataset(
        sectors=tuple(SectorId(k, c, nm) for k, (c, nm) in enumerate(sec)),
        economies=tuple(EconomyId(k, c, nm) for k, (c, nm) in enumerate(eco)),
        intermediate_use=use,
        total_output=output,
        final_demand=final,
        energy_satellite=energy,
        meta=DatasetMeta(year=seed, currency="synthetic", energy_unit="TJ per unit", energy_semantics="intensity"),
    )
