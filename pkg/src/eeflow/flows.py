"""Embodied-energy supradjacency matrix.

The arc from sector i in economy a to sector j in economy b carries

    q = (sum_e c[i, e] * l[flat(i, e), flat(j, a)]) * f[flat(j, a), b]

and negative values are replaced by zero.  Diagonal blocks of W are
intra-layer flows, off-diagonal blocks inter-layer flows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .leontief import LeontiefSystem
from .model import EconomyId, MrioDataset, SectorId, ValidationError, flat_label, flatten

logger = logging.getLogger(__name__)

SPARSE_DENSITY = 0.25


class FlowError(RuntimeError):
    pass


def _idx(x) -> int:
    return x.index if isinstance(x, (SectorId, EconomyId)) else int(x)


@dataclass(frozen=True, eq=False)
class SupraNetwork:
    """Nonnegative (N*L, N*L) weight matrix with its sector/economy labels.

    ``w`` is a dense array, or a CSR sparse array when fewer than a quarter
    of the entries are nonzero.
    """

    w: np.ndarray | sp.csr_array
    sectors: tuple[SectorId, ...]
    economies: tuple[EconomyId, ...]
    total_flow: float
    clamped_count: int = 0

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
    def is_sparse(self) -> bool:
        return sp.issparse(self.w)

    @property
    def sector_codes(self) -> list[str]:
        return [s.code for s in self.sectors]

    @property
    def economy_codes(self) -> list[str]:
        return [e.code for e in self.economies]

    def dense(self) -> np.ndarray:
        return self.w.toarray() if self.is_sparse else np.asarray(self.w)

    def density(self) -> float:
        nnz = self.w.count_nonzero() if self.is_sparse else np.count_nonzero(self.w)
        return nnz / max(1, self.size * self.size)

    def flat_labels(self) -> list[str]:
        return [flat_label(s.code, e.code) for e in self.economies for s in self.sectors]

    def economy_index(self, code: str) -> int:
        for e in self.economies:
            if e.code == code:
                return e.index
        raise KeyError(f"unknown economy code {code!r}")

    def summary(self) -> dict:
        return {
            "n_sectors": self.n_sectors,
            "n_economies": self.layer_count,
            "total_flow": self.total_flow,
            "density": self.density(),
            "clamped_count": self.clamped_count,
            "storage": "sparse" if self.is_sparse else "dense",
        }


def make_network(w, sectors: Sequence[SectorId], economies: Sequence[EconomyId],
                 clamped_count: int = 0, sparse: bool | None = None) -> SupraNetwork:
    """Wrap a weight matrix, choosing storage by density unless ``sparse`` is given."""
    w = w.toarray() if sp.issparse(w) else np.array(w, dtype=float)
    n = len(sectors) * len(economies)
    if w.shape != (n, n):
        raise ValidationError(f"weight matrix has shape {w.shape}, expected {(n, n)}")
    if not np.isfinite(w).all():
        raise FlowError("weight matrix has non-finite entries")
    if (w < 0).any():
        raise ValidationError("weight matrix has negative entries")
    if sparse is None:
        sparse = np.count_nonzero(w) < SPARSE_DENSITY * w.size
    total = float(w.sum())
    if sparse:
        w = sp.csr_array(w)
    else:
        w.flags.writeable = False
    return SupraNetwork(w, tuple(sectors), tuple(economies), total, clamped_count)


def embodied_intensity(d: MrioDataset, ls: LeontiefSystem) -> np.ndarray:
    """m[i, flat(j, a)] = sum_e c[i, e] * l[flat(i, e), flat(j, a)], shape (N, N*L)."""
    n_sec, n_eco = d.n_sectors, d.layer_count
    select = np.zeros((n_sec, d.size))
    for e in range(n_eco):
        select[np.arange(n_sec), e * n_sec + np.arange(n_sec)] = d.energy_satellite[:, e]
    return ls.left_multiply(select)


def embodied_flow(d: MrioDataset, ls: LeontiefSystem, i, j, alpha, beta) -> float:
    """Embodied energy on the arc (i in alpha) -> (j in beta), before clamping."""
    i, j, alpha, beta = _idx(i), _idx(j), _idx(alpha), _idx(beta)
    n_sec, n_eco = d.n_sectors, d.layer_count
    if not (0 <= alpha < n_eco and 0 <= beta < n_eco):
        raise ValidationError("economy index out of range")
    k = flatten(j, alpha, n_sec)
    demand = d.final_demand[k, beta]
    if demand == 0:
        return 0.0
    col = ls.column(k)
    rows = [flatten(i, e, n_sec) for e in range(n_eco)]
    return float(np.dot(d.energy_satellite[i, :], col[rows]) * demand)


def build_supranetwork(d: MrioDataset, ls: LeontiefSystem, sparse: bool | None = None) -> SupraNetwork:
    """Assemble W from the batched embodied intensities.

    W[(a, i), (b, j)] = max(m[i, (a, j)] * f[(a, j), b], 0).
    """
    if ls.size != d.size:
        raise ValidationError(f"Leontief system has size {ls.size}, dataset {d.size}")
    n_sec, n_eco = d.n_sectors, d.layer_count
    m = embodied_intensity(d, ls).reshape(n_sec, n_eco, n_sec)  # [i, a, j]
    f = np.asarray(d.final_demand).reshape(n_eco, n_sec, n_eco)  # [a, j, b]
    w = np.einsum("iaj,ajb->aibj", m, f).reshape(d.size, d.size)
    if not np.isfinite(w).all():
        raise FlowError(f"{int((~np.isfinite(w)).sum())} non-finite embodied flows")
    negative = w < 0
    clamped = int(negative.sum())
    if clamped:
        logger.warning("clamped %d negative embodied flows to zero", clamped)
        w[negative] = 0.0
    net = make_network(w, d.sectors, d.economies, clamped, sparse)
    logger.info("supranetwork: total_flow=%.6g density=%.3f", net.total_flow, net.density())
    return net


def layer_block(sn: SupraNetwork, alpha, beta) -> np.ndarray:
    """The (N, N) block of flows from layer ``alpha`` to layer ``beta``."""
    a, b = _idx(alpha), _idx(beta)
    n, n_eco = sn.n_sectors, sn.layer_count
    if not (0 <= a < n_eco and 0 <= b < n_eco):
        raise ValidationError(f"layer pair ({a}, {b}) outside [0, {n_eco})")
    block = sn.w[a * n:(a + 1) * n, b * n:(b + 1) * n]
    return block.toarray() if sp.issparse(block) else np.array(block)


def block_edges(sn: SupraNetwork, alpha, beta, include_zero: bool = False) -> list[tuple[str, str, float]]:
    """Edge list ``(source_sector, target_sector, weight)`` of one block."""
    block = layer_block(sn, alpha, beta)
    codes = sn.sector_codes
    return [
        (codes[i], codes[j], float(block[i, j]))
        for i in range(sn.n_sectors)
        for j in range(sn.n_sectors)
        if include_zero or block[i, j] != 0
    ]


def parse_flat_labels(labels: Sequence[str]) -> tuple[list[str], list[str]]:
    """Recover sector and economy code lists from ``SECTOR@ECONOMY`` labels in flat order."""
    pairs = []
    for lab in labels:
        if "@" not in lab:
            raise ValidationError(f"label {lab!r} is not of the form SECTOR@ECONOMY")
        s, e = lab.rsplit("@", 1)
        pairs.append((s, e))
    economies = list(dict.fromkeys(e for _, e in pairs))
    sectors = list(dict.fromkeys(s for s, _ in pairs))
    expected = [(s, e) for e in economies for s in sectors]
    if pairs != expected:
        raise ValidationError("labels are not in economy-major, sector-minor order over a full node set")
    return sectors, economies


def read_network(path) -> SupraNetwork:
    from .ingest import read_matrix

    values, rows, cols = read_matrix(path)
    if rows != cols:
        raise ValidationError(f"{path}: row and column labels differ")
    sectors, economies = parse_flat_labels(rows)
    return make_network(
        values,
        [SectorId(k, c, c) for k, c in enumerate(sectors)],
        [EconomyId(k, c, c) for k, c in enumerate(economies)],
    )


def write_network(sn: SupraNetwork, path) -> None:
    from .ingest import write_matrix

    labels = sn.flat_labels()
    write_matrix(path, sn.dense(), labels, labels)
