"""Domain types for multi-region input-output datasets.

Sectors are the nodes of the multilayer network and economies are its
layers.  A (sector, economy) pair maps to a single position in the
supradjacency matrix through :func:`flatten`; positions are 0-based here
and shown 1-based in every human-facing report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

ENERGY_SEMANTICS = ("intensity", "total")


class ValidationError(ValueError):
    """Raised when indices or dataset contents break a structural rule."""


@dataclass(frozen=True)
class SectorId:
    index: int
    code: str
    name: str = ""


@dataclass(frozen=True)
class EconomyId:
    index: int
    code: str
    name: str = ""


@dataclass(frozen=True)
class DatasetMeta:
    """Descriptive fields carried through the manifest; never used in arithmetic."""

    year: int = 0
    currency: str = ""
    energy_unit: str = "TJ"
    energy_semantics: str = "total"


def _index_of(x) -> int:
    return x.index if isinstance(x, (SectorId, EconomyId)) else int(x)


def flatten(sector, economy, n_sectors: int) -> int:
    """Supradjacency position of ``sector`` within layer ``economy``.

    Accepts either :class:`SectorId`/:class:`EconomyId` or plain indices.
    """
    i, alpha = _index_of(sector), _index_of(economy)
    if n_sectors < 1:
        raise ValidationError(f"n_sectors must be >= 1, got {n_sectors}")
    if not 0 <= i < n_sectors:
        raise ValidationError(f"sector index {i} outside [0, {n_sectors})")
    if alpha < 0:
        raise ValidationError(f"economy index {alpha} is negative")
    return n_sectors * alpha + i


def unflatten(h: int, n_sectors: int, n_economies: int | None = None) -> tuple[int, int]:
    """Inverse of :func:`flatten`: returns ``(sector_index, economy_index)``."""
    h = int(h)
    if n_sectors < 1:
        raise ValidationError(f"n_sectors must be >= 1, got {n_sectors}")
    upper = None if n_economies is None else n_sectors * n_economies
    if h < 0 or (upper is not None and h >= upper):
        raise ValidationError(f"flat index {h} outside [0, {upper})")
    return h % n_sectors, h // n_sectors


def flat_label(sector_code: str, economy_code: str) -> str:
    return f"{sector_code}@{economy_code}"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class MrioDataset:
    """Monetary MRIO table plus an energy satellite account.

    Shapes, with ``n = N * L``:

    * ``intermediate_use``  (n, n)   u at (flat(i, a), flat(j, b))
    * ``total_output``      (n,)     o at flat(j, b)
    * ``final_demand``      (n, L)   f at (flat(j, a), b)
    * ``energy_satellite``  (N, L)   c at (i, e)
    """

    sectors: tuple[SectorId, ...]
    economies: tuple[EconomyId, ...]
    intermediate_use: np.ndarray
    total_output: np.ndarray
    final_demand: np.ndarray
    energy_satellite: np.ndarray
    meta: DatasetMeta = field(default_factory=DatasetMeta)
    clamp_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sectors", tuple(self.sectors))
        object.__setattr__(self, "economies", tuple(self.economies))
        for name in ("intermediate_use", "total_output", "final_demand", "energy_satellite"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "clamp_counts", dict(self.clamp_counts))

    @classmethod
    def from_arrays(
        cls,
        intermediate_use,
        total_output,
        final_demand,
        energy_satellite,
        sector_codes: Sequence[str] | None = None,
        economy_codes: Sequence[str] | None = None,
        **kwargs,
    ) -> "MrioDataset":
        """Build a dataset from raw arrays, generating codes when none are given."""
        c = np.asarray(energy_satellite)
        n_sec, n_eco = c.shape
        sector_codes = sector_codes or [f"S{k + 1}" for k in range(n_sec)]
        economy_codes = economy_codes or [f"E{k + 1}" for k in range(n_eco)]
        return cls(
            sectors=tuple(SectorId(k, code, code) for k, code in enumerate(sector_codes)),
            economies=tuple(EconomyId(k, code, code) for k, code in enumerate(economy_codes)),
            intermediate_use=intermediate_use,
            total_output=total_output,
            final_demand=final_demand,
            energy_satellite=energy_satellite,
            **kwargs,
        )

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    @property
    def layer_count(self) -> int:
        return len(self.economies)

    @property
    def size(self) -> int:
        return self.n_sectors * self.layer_count

    @property
    def sector_codes(self) -> list[str]:
        return [s.code for s in self.sectors]

    @property
    def economy_codes(self) -> list[str]:
        return [e.code for e in self.economies]

    def flat_labels(self) -> list[str]:
        return [flat_label(s.code, e.code) for e in self.economies for s in self.sectors]

    def sector(self, code: str) -> SectorId:
        for s in self.sectors:
            if s.code == code:
                return s
        raise KeyError(f"unknown sector code {code!r}")

    def economy(self, code: str) -> EconomyId:
        for e in self.economies:
            if e.code == code:
                return e
        raise KeyError(f"unknown economy code {code!r}")

    def replace(self, **changes) -> "MrioDataset":
        fields = {
            "sectors": self.sectors,
            "economies": self.economies,
            "intermediate_use": self.intermediate_use,
            "total_output": self.total_output,
            "final_demand": self.final_demand,
            "energy_satellite": self.energy_satellite,
            "meta": self.meta,
            "clamp_counts": self.clamp_counts,
        }
        fields.update(changes)
        return MrioDataset(**fields)

    def equals(self, other: "MrioDataset") -> bool:
        """Exact equality of labels and every array (metadata included)."""
        return (
            self.sectors == other.sectors
            and self.economies == other.economies
            and self.meta == other.meta
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("intermediate_use", "total_output", "final_demand", "energy_satellite")
            )
        )


@dataclass(frozen=True)
class Finding:
    severity: str  # "fatal" or "warning"
    kind: str
    message: str
    count: int = 0
    locations: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def accepted(self) -> bool:
        return not any(f.severity == "fatal" for f in self.findings)

    @property
    def fatal(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "fatal"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    def kinds(self) -> set[str]:
        return {f.kind for f in self.findings}

    def format(self) -> str:
        if not self.findings:
            return "no findings"
        lines = []
        for f in self.findings:
            where = f" at {', '.join(f.locations)}" if f.locations else ""
            lines.append(f"[{f.severity}] {f.kind}: {f.message} (count={f.count}){where}")
        return "\n".join(lines)


MAX_LOCATIONS = 10


def _array_locations(mask: np.ndarray, labeller) -> tuple[int, tuple[str, ...]]:
    idx = np.argwhere(mask)
    return len(idx), tuple(labeller(tuple(int(v) for v in p)) for p in idx[:MAX_LOCATIONS])


def validate_dataset(d: MrioDataset) -> ValidationReport:
    """Collect structural findings without raising.

    Fatal: dimension mismatches, duplicate or empty codes, non-finite values,
    negative values.  Warning: sectors whose total output is zero.
    """
    findings: list[Finding] = []
    n_sec, n_eco = d.n_sectors, d.layer_count
    n = n_sec * n_eco

    for kind, ids in (("sector", d.sectors), ("economy", d.economies)):
        codes = [x.code for x in ids]
        if any(not c for c in codes):
            findings.append(Finding("fatal", "empty code", f"{kind} list has an empty code", codes.count("")))
        dup = sorted({c for c in codes if c and codes.count(c) > 1})
        if dup:
            findings.append(Finding("fatal", "duplicate code", f"duplicate {kind} codes", len(dup), tuple(dup)))
        bad_idx = [x.code for k, x in enumerate(ids) if x.index != k]
        if bad_idx:
            findings.append(
                Finding("fatal", "index order", f"{kind} indices do not follow list order", len(bad_idx))
            )

    expected = {
        "intermediate_use": (n, n),
        "total_output": (n,),
        "final_demand": (n, n_eco),
        "energy_satellite": (n_sec, n_eco),
    }
    shapes_ok = True
    for name, shape in expected.items():
        got = getattr(d, name).shape
        if got != shape:
            shapes_ok = False
            findings.append(
                Finding("fatal", "dimension", f"{name} has shape {got}, expected {shape}", 1, (name,))
            )

    labels = d.flat_labels() if not any(f.kind == "duplicate code" for f in findings) else None

    def labeller_for(name):
        def pos(h):
            text = f"{h + 1}"
            if labels is not None and shapes_ok and h < len(labels):
                text = f"{labels[h]}#{h + 1}"
            return text

        def lab(p):
            if name == "energy_satellite":
                i, e = p
                return f"{d.sectors[i].code}@{d.economies[e].code}" if shapes_ok else str(p)
            if name == "final_demand":
                return f"({pos(p[0])}, {d.economies[p[1]].code if shapes_ok else p[1] + 1})"
            if len(p) == 1:
                return pos(p[0])
            return f"({pos(p[0])}, {pos(p[1])})"

        return lab

    for name in expected:
        arr = getattr(d, name)
        nonfinite = ~np.isfinite(arr)
        if nonfinite.any():
            count, locs = _array_locations(nonfinite, labeller_for(name))
            findings.append(Finding("fatal", "non-finite", f"{name} has NaN/Inf entries", count, locs))
        with np.errstate(invalid="ignore"):
            negative = arr < 0
        if negative.any():
            count, locs = _array_locations(negative, labeller_for(name))
            findings.append(Finding("fatal", "negative", f"{name} has negative entries", count, locs))

    if shapes_ok:
        zero = d.total_output == 0
        if zero.any():
            count, locs = _array_locations(zero, labeller_for("total_output"))
            findings.append(
                Finding(
                    "warning",
                    "zero-output column",
                    "total output is zero; the coefficient column is set to zero",
                    count,
                    locs,
                )
            )
            used = (d.intermediate_use[:, zero] != 0).any(axis=0)
            if used.any():
                findings.append(
                    Finding(
                        "warning",
                        "input without output",
                        "zero-output columns carry nonzero intermediate use, which is dropped",
                        int(used.sum()),
                    )
                )

    if d.meta.energy_semantics not in ENERGY_SEMANTICS:
        findings.append(
            Finding("fatal", "metadata", f"energy_semantics must be one of {ENERGY_SEMANTICS}", 1)
        )
    return ValidationReport(tuple(findings))
