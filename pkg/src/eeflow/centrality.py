"""Strengths, monoplex HITS and Multi-Dimensional HITS on the supranetwork."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .flows import SupraNetwork
from .model import MrioDataset

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = (0.25, 0.25, 0.25, 0.25)
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000
GAMMA_SLACK = 1e-12


class ParameterError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StrengthReport:
    node_layer_in: np.ndarray   # (N, L)
    node_layer_out: np.ndarray
    node_layer_tot: np.ndarray
    node_in: np.ndarray         # (N,)
    node_out: np.ndarray
    node_tot: np.ndarray
    layer_in: np.ndarray        # (L,)
    layer_out: np.ndarray
    layer_tot: np.ndarray


def strengths(sn: SupraNetwork) -> StrengthReport:
    """In/out/total strengths per node-in-layer, per node and per layer.

    In-strength of position h is the h-th column sum of W and out-strength
    the h-th row sum; node and layer figures sum those over layers or over
    nodes respectively.
    """
    n, n_eco = sn.n_sectors, sn.layer_count
    col = np.asarray(sn.w.sum(axis=0)).ravel()
    row = np.asarray(sn.w.sum(axis=1)).ravel()
    s_in = col.reshape(n_eco, n).T.copy()
    s_out = row.reshape(n_eco, n).T.copy()
    s_tot = s_in + s_out
    return StrengthReport(
        node_layer_in=s_in,
        node_layer_out=s_out,
        node_layer_tot=s_tot,
        node_in=s_in.sum(axis=1),
        node_out=s_out.sum(axis=1),
        node_tot=s_in.sum(axis=1) + s_out.sum(axis=1),
        layer_in=s_in.sum(axis=0),
        layer_out=s_out.sum(axis=0),
        layer_tot=s_in.sum(axis=0) + s_out.sum(axis=0),
    )


@dataclass(frozen=True, eq=False)
class ConsumptionSummary:
    sector_codes: tuple[str, ...]
    economy_codes: tuple[str, ...]
    sector_totals: np.ndarray   # sum over economies, in sector order
    economy_totals: np.ndarray  # sum over sectors, in economy order
    by_cell: np.ndarray         # the (N, L) satellite itself

    def sectors_ranked(self) -> list[tuple[str, float]]:
        return _ranked(self.sector_totals, self.sector_codes)

    def economies_ranked(self) -> list[tuple[str, float]]:
        return _ranked(self.economy_totals, self.economy_codes)

    def top_economies_per_sector(self, k: int = 10) -> dict[str, list[tuple[str, float]]]:
        return {
            code: _ranked(self.by_cell[i], self.economy_codes)[:k]
            for i, code in enumerate(self.sector_codes)
        }


def _ranked(values, codes) -> list[tuple[str, float]]:
    order = sorted(range(len(codes)), key=lambda k: (-float(values[k]), codes[k]))
    return [(codes[k], float(values[k])) for k in order]


def consumption_summary(d: MrioDataset) -> ConsumptionSummary:
    c = np.asarray(d.energy_satellite, dtype=float)
    return ConsumptionSummary(
        sector_codes=tuple(d.sector_codes),
        economy_codes=tuple(d.economy_codes),
        sector_totals=c.sum(axis=1),
        economy_totals=c.sum(axis=0),
        by_cell=c.copy(),
    )


def _max_normalize(v: np.ndarray) -> np.ndarray:
    top = v.max(initial=0.0)
    return v / top if top > 0 else np.zeros_like(v)


@dataclass(frozen=True, eq=False)
class HitsScores:
    hub: np.ndarray
    authority: np.ndarray
    iterations: int
    residual: float
    converged: bool


def hits_monoplex(w, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> HitsScores:
    """Hub/authority scores of a single weighted directed layer.

    Uses the mutually reinforcing pair ``y = W x`` (authority) and
    ``x = W^T y`` (hub), each half-step max-normalized, starting from
    ``x = 1``.  The hub vector therefore tracks the dominant eigenvector of
    ``W^T W`` and the authority vector that of ``W W^T``.
    """
    w = w.toarray() if sp.issparse(w) else np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ParameterError(f"adjacency must be square, got {w.shape}")
    if (w < 0).any():
        raise ParameterError("adjacency must be nonnegative")
    n = w.shape[0]
    x = np.ones(n)
    y = np.ones(n)
    residual = np.inf
    for it in range(1, max_iter + 1):
        y_new = _max_normalize(w @ x)
        x_new = _max_normalize(w.T @ y_new)
        residual = max(np.abs(x_new - x).max(initial=0.0), np.abs(y_new - y).max(initial=0.0))
        x, y = x_new, y_new
        if residual <= tol:
            return HitsScores(x, y, it, float(residual), True)
    logger.warning("HITS did not converge in %d iterations (residual %.3g)", max_iter, residual)
    return HitsScores(x, y, max_iter, float(residual), False)


@dataclass(frozen=True, eq=False)
class MdHitsScores:
    hub: np.ndarray           # x, length N
    authority: np.ndarray     # y, length N
    broadcasting: np.ndarray  # b, length L
    receiving: np.ndarray     # z, length L
    gamma: tuple[float, float, float, float]
    iterations: int
    residual: float
    converged: bool


def check_gamma(gamma) -> tuple[float, float, float, float]:
    g = tuple(float(v) for v in gamma)
    if len(g) != 4:
        raise ParameterError(f"gamma needs 4 entries, got {len(g)}")
    if not all(0.0 < v < 1.0 for v in g):
        raise ParameterError(f"every gamma entry must lie in (0, 1), got {g}")
    if abs(sum(g) - 1.0) > GAMMA_SLACK:
        raise ParameterError(f"gamma must sum to 1, got {sum(g)!r}")
    return g


def _entry_power(w, p: float):
    if sp.issparse(w):
        return w.power(p)
    return np.power(w, p)


def mdhits_update(powered, n: int, n_eco: int, x, y, b, z, gamma):
    """One simultaneous evaluation of the four MD-HITS sums (unnormalized).

    ``powered`` maps each exponent to W raised entrywise to it.  Products
    inside each sum factor as ``w^g * x^g * y^g * ...`` so every sum is one
    matrix-vector product followed by a small (L, N) contraction.
    """
    g1, g2, g3, g4 = gamma
    # x_i = sum_a b_a^g1 sum_{b,j} W^g1[(a,i),(b,j)] (z_b y_j)^g1
    u = powered[g1] @ np.outer(z, y).ravel() ** g1
    x_new = (b ** g1) @ u.reshape(n_eco, n)
    # y_j = sum_b z_b^g2 sum_{a,i} W^g2[(a,i),(b,j)] (b_a x_i)^g2
    u = powered[g2].T @ np.outer(b, x).ravel() ** g2
    y_new = (z ** g2) @ u.reshape(n_eco, n)
    # b_a = sum_i x_i^g3 sum_{b,j} W^g3[(a,i),(b,j)] (z_b y_j)^g3
    u = powered[g3] @ np.outer(z, y).ravel() ** g3
    b_new = u.reshape(n_eco, n) @ (x ** g3)
    # z_b = sum_j y_j^g4 sum_{a,i} W^g4[(a,i),(b,j)] (b_a x_i)^g4
    u = powered[g4].T @ np.outer(b, x).ravel() ** g4
    z_new = u.reshape(n_eco, n) @ (y ** g4)
    return x_new, y_new, b_new, z_new


def mdhits(sn: SupraNetwork, gamma=DEFAULT_GAMMA, tol: float = DEFAULT_TOL,
           max_iter: int = DEFAULT_MAX_ITER) -> MdHitsScores:
    """Hub/authority scores for sectors and broadcasting/receiving scores for economies.

    Jacobi-style fixed-point iteration from all-ones vectors: all four sums
    use the previous iterate, then each vector is divided by its largest
    entry.  ``0 ** gamma`` is taken as 0.  Stops when the largest absolute
    change across the four vectors is at most ``tol``.
    """
    g = check_gamma(gamma)
    if tol <= 0 or max_iter < 1:
        raise ParameterError("tol must be positive and max_iter >= 1")
    n, n_eco = sn.n_sectors, sn.layer_count
    powered = {p: _entry_power(sn.w, p) for p in set(g)}
    x, y = np.ones(n), np.ones(n)
    b, z = np.ones(n_eco), np.ones(n_eco)
    residual = np.inf
    for it in range(1, max_iter + 1):
        new = [_max_normalize(v) for v in mdhits_update(powered, n, n_eco, x, y, b, z, g)]
        residual = max(float(np.abs(a - o).max(initial=0.0)) for a, o in zip(new, (x, y, b, z)))
        x, y, b, z = new
        if residual <= tol:
            logger.info("MD-HITS converged in %d iterations (residual %.3g)", it, residual)
            return MdHitsScores(x, y, b, z, g, it, residual, True)
    logger.warning("MD-HITS did not converge in %d iterations (residual %.3g)", max_iter, residual)
    return MdHitsScores(x, y, b, z, g, max_iter, residual, False)
