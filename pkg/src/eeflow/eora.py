"""Adapter from an Eora26 text export to the canonical dataset format.

Expected input directory (the layout of the free Eora26 download)::

    labels_T.txt   country name, country code, "Industries", sector name
    labels_FD.txt  country name, country code, "Final Demand", category
    labels_Q.txt   satellite indicator labels, one row per indicator
    Eora26_<year>_bp_T.txt, Eora26_<year>_bp_FD.txt, Eora26_<year>_bp_Q.txt

Choices made here:

* Economies without the full sector list (the rest-of-world row) are dropped.
* The final-demand categories of each destination economy are summed into a
  single column; the export does not say they should be kept apart.
* Total output is the full row sum of T plus the full row sum of FD.
* The energy satellite is the sum of every Q row whose label matches
  ``energy_pattern`` and not ``exclude_pattern`` (per-carrier energy use,
  leaving out the precomputed total).  It is written as totals in TJ.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from .ingest import DatasetManifest, IngestError, write_dataset
from .model import DatasetMeta, EconomyId, MrioDataset, SectorId
from .reference import sector_code_for

logger = logging.getLogger(__name__)

ENERGY_PATTERN = r"energy"
EXCLUDE_PATTERN = r"total"


def _read_table(path: Path) -> np.ndarray:
    try:
        return pd.read_csv(path, sep="\t", header=None, dtype=float).to_numpy()
    except (OSError, ValueError) as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc


def _read_labels(path: Path) -> list[list[str]]:
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    return [[c.strip() for c in line.split("\t")] for line in text.splitlines() if line.strip()]


def _find_year(in_dir: Path) -> int:
    hits = sorted(in_dir.glob("Eora26_*_bp_T.txt"))
    if not hits:
        raise IngestError(f"{in_dir}: no Eora26_<year>_bp_T.txt file found")
    m = re.match(r"Eora26_(\d+)_bp_T\.txt", hits[0].name)
    return int(m.group(1))


def _sector_code(name: str, taken: set[str]) -> str:
    code = sector_code_for(name)
    if code is None:
        code = "".join(w[0] for w in re.findall(r"[A-Za-z]+", name)).upper() or "S"
    base, k = code, 2
    while code in taken:
        code, k = f"{base}{k}", k + 1
    taken.add(code)
    return code


def read_eora(in_dir: str | Path, year: int | None = None, energy_pattern: str = ENERGY_PATTERN,
              exclude_pattern: str = EXCLUDE_PATTERN) -> MrioDataset:
    """Build an (unclamped) dataset from an Eora26 export directory."""
    in_dir = Path(in_dir)
    year = _find_year(in_dir) if year is None else year
    t_labels = _read_labels(in_dir / "labels_T.txt")
    fd_labels = _read_labels(in_dir / "labels_FD.txt")
    q_labels = _read_labels(in_dir / "labels_Q.txt")
    T = _read_table(in_dir / f"Eora26_{year}_bp_T.txt")
    FD = _read_table(in_dir / f"Eora26_{year}_bp_FD.txt")
    Q = _read_table(in_dir / f"Eora26_{year}_bp_Q.txt")

    if T.shape != (len(t_labels), len(t_labels)):
        raise IngestError(f"T has shape {T.shape}, labels_T lists {len(t_labels)} rows")
    if FD.shape != (len(t_labels), len(fd_labels)):
        raise IngestError(f"FD has shape {FD.shape}, expected ({len(t_labels)}, {len(fd_labels)})")
    if Q.shape != (len(q_labels), len(t_labels)):
        raise IngestError(f"Q has shape {Q.shape}, expected ({len(q_labels)}, {len(t_labels)})")

    # economy code -> (name, list of (row, sector name)) in file order
    groups: dict[str, tuple[str, list[tuple[int, str]]]] = {}
    for row, lab in enumerate(t_labels):
        if len(lab) < 4:
            raise IngestError(f"labels_T.txt row {row + 1} has {len(lab)} fields, expected 4")
        groups.setdefault(lab[1], (lab[0], []))[1].append((row, lab[3]))
    sizes = [len(v[1]) for v in groups.values()]
    n_sec = max(sizes)
    full = [code for code, (_, rows) in groups.items() if len(rows) == n_sec]
    dropped = [code for code in groups if code not in full]
    if dropped:
        logger.info("dropping economies without the full sector list: %s", ", ".join(dropped))
    sector_names = [name for _, name in groups[full[0]][1]]
    for code in full:
        if [name for _, name in groups[code][1]] != sector_names:
            raise IngestError(f"economy {code} lists sectors in a different order")

    keep = np.array([row for code in full for row, _ in groups[code][1]])
    use = T[np.ix_(keep, keep)]
    output = T[keep, :].sum(axis=1) + FD[keep, :].sum(axis=1)

    fd_codes = [lab[1] if len(lab) > 1 else "" for lab in fd_labels]
    final = np.zeros((len(keep), len(full)))
    for b, code in enumerate(full):
        cols = [k for k, c in enumerate(fd_codes) if c == code]
        if not cols:
            raise IngestError(f"no final-demand columns for economy {code}")
        final[:, b] = FD[keep][:, cols].sum(axis=1)

    inc = re.compile(energy_pattern, re.IGNORECASE)
    exc = re.compile(exclude_pattern, re.IGNORECASE) if exclude_pattern else None
    q_text = [" ".join(lab) for lab in q_labels]
    energy_rows = [k for k, lab in enumerate(q_text) if inc.search(lab) and not (exc and exc.search(lab))]
    if not energy_rows:
        raise IngestError(f"no satellite rows match {energy_pattern!r}")
    logger.info("energy satellite rows: %s", "; ".join(q_text[k] for k in energy_rows))
    energy = Q[energy_rows][:, keep].sum(axis=0).reshape(len(full), n_sec).T

    taken: set[str] = set()
    sectors = tuple(SectorId(i, _sector_code(name, taken), name) for i, name in enumerate(sector_names))
    economies = tuple(EconomyId(a, code, groups[code][0]) for a, code in enumerate(full))
    return MrioDataset(
        sectors=sectors,
        economies=economies,
        intermediate_use=use,
        total_output=output,
        final_demand=final,
        energy_satellite=energy,
        meta=DatasetMeta(year=year, currency="kUSD basic prices", energy_unit="TJ", energy_semantics="total"),
    )


def adapt_eora(in_dir: str | Path, out_dir: str | Path, year: int | None = None,
               energy_pattern: str = ENERGY_PATTERN, exclude_pattern: str = EXCLUDE_PATTERN,
               clamp_negatives: bool = True) -> DatasetManifest:
    d = read_eora(in_dir, year, energy_pattern, exclude_pattern)
    return write_dataset(d, out_dir, clamp_negatives=clamp_negatives)
