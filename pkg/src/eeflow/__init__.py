"""Embodied energy flow multilayer networks built from MRIO tables."""

from .centrality import (
    ConsumptionSummary,
    HitsScores,
    MdHitsScores,
    StrengthReport,
    consumption_summary,
    hits_monoplex,
    mdhits,
    strengths,
)
from .flows import SupraNetwork, build_supranetwork, embodied_flow, layer_block
from .ingest import load_dataset, synth_dataset, write_dataset
from .leontief import LeontiefSystem, build_coefficients, leontief_column, solve_leontief
from .model import EconomyId, MrioDataset, SectorId, flatten, unflatten, validate_dataset
from .ranking import rank_correlation, rankings

__version__ = "0.1.0"

__all__ = [
    "ConsumptionSummary",
    "EconomyId",
    "HitsScores",
    "LeontiefSystem",
    "MdHitsScores",
    "MrioDataset",
    "SectorId",
    "StrengthReport",
    "SupraNetwork",
    "build_coefficients",
    "build_supranetwork",
    "consumption_summary",
    "embodied_flow",
    "flatten",
    "hits_monoplex",
    "layer_block",
    "leontief_column",
    "load_dataset",
    "mdhits",
    "rank_correlation",
    "rankings",
    "solve_leontief",
    "strengths",
    "synth_dataset",
    "unflatten",
    "validate_dataset",
    "write_dataset",
]
