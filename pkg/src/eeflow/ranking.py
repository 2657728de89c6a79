"""Ranking tables and rank correlation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .centrality import HitsScores, MdHitsScores, StrengthReport

DISPLAY_DECIMALS = 3


class UndefinedCorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class RankRow:
    rank: int
    code: str
    score: float

    def display(self) -> str:
        return f"{self.score:.{DISPLAY_DECIMALS}f}"


def rank_table(values, codes: Sequence[str], k: int | None = None) -> list[RankRow]:
    """Descending by score; exact ties are ordered by code ascending."""
    values = np.asarray(values, dtype=float)
    if len(values) != len(codes):
        raise ValueError(f"{len(values)} scores for {len(codes)} labels")
    order = sorted(range(len(codes)), key=lambda i: (-values[i], codes[i]))
    if k is not None:
        order = order[:k]
    return [RankRow(r + 1, codes[i], float(values[i])) for r, i in enumerate(order)]


def rankings(scores, sector_codes: Sequence[str], economy_codes: Sequence[str] | None = None,
             k: int | None = None) -> dict[str, list[RankRow]]:
    """Named ranking tables for any of the score containers."""
    if isinstance(scores, MdHitsScores):
        if economy_codes is None:
            raise ValueError("economy codes are required for broadcasting/receiving tables")
        return {
            "hub": rank_table(scores.hub, sector_codes, k),
            "authority": rank_table(scores.authority, sector_codes, k),
            "broadcasting": rank_table(scores.broadcasting, economy_codes, k),
            "receiving": rank_table(scores.receiving, economy_codes, k),
        }
    if isinstance(scores, HitsScores):
        return {
            "hub": rank_table(scores.hub, sector_codes, k),
            "authority": rank_table(scores.authority, sector_codes, k),
        }
    if isinstance(scores, StrengthReport):
        if economy_codes is None:
            raise ValueError("economy codes are required for layer strength tables")
        return {
            "sector_in": rank_table(scores.node_in, sector_codes, k),
            "sector_out": rank_table(scores.node_out, sector_codes, k),
            "sector_tot": rank_table(scores.node_tot, sector_codes, k),
            "economy_in": rank_table(scores.layer_in, economy_codes, k),
            "economy_out": rank_table(scores.layer_out, economy_codes, k),
            "economy_tot": rank_table(scores.layer_tot, economy_codes, k),
        }
    raise TypeError(f"cannot rank {type(scores).__name__}")


def format_side_by_side(tables: dict[str, list[RankRow]], names: Sequence[str]) -> str:
    """Tab-separated table with a (score, code) column pair per named ranking."""
    header = ["rank"]
    for name in names:
        header += [name, f"{name}_code"]
    lines = ["\t".join(header)]
    depth = max(len(tables[n]) for n in names)
    for r in range(depth):
        cells = [str(r + 1)]
        for name in names:
            rows = tables[name]
            cells += [rows[r].display(), rows[r].code] if r < len(rows) else ["", ""]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def rank_correlation(a, b) -> float:
    """Spearman correlation with average ranks for ties."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("rank_correlation needs two 1-D vectors of equal length")
    if len(a) < 2:
        raise ValueError("rank_correlation needs at least two observations")
    ra = rankdata(a) - (len(a) + 1) / 2
    rb = rankdata(b) - (len(b) + 1) / 2
    den = np.sqrt((ra @ ra) * (rb @ rb))
    if den == 0:
        raise UndefinedCorrelationError("rank correlation is undefined for a constant vector")
    return float(np.clip((ra @ rb) / den, -1.0, 1.0))
