"""Sector and country code lists for the 26-sector, 189-economy EORA table."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..model import EconomyId, SectorId


def _read(name: str) -> list[tuple[str, str]]:
    text = resources.files(__package__).joinpath(name).read_text(encoding="utf-8")
    rows = [line.split("\t") for line in text.splitlines()[1:] if line.strip()]
    return [(code, label) for _, code, label in rows]


@lru_cache(maxsize=None)
def reference_sectors() -> tuple[SectorId, ...]:
    return tuple(SectorId(k, code, name) for k, (code, name) in enumerate(_read("sectors.tsv")))


@lru_cache(maxsize=None)
def reference_economies() -> tuple[EconomyId, ...]:
    return tuple(EconomyId(k, code, name) for k, (code, name) in enumerate(_read("countries.tsv")))


def sector_code_for(name: str) -> str | None:
    """Look up a sector code by its descriptive name (case and spacing insensitive)."""
    key = " ".join(name.lower().split())
    for s in reference_sectors():
        if " ".join(s.name.lower().split()) == key:
            return s.code
    return None
