"""Epidemic simulation on village contact networks.

Core pieces: an undirected graph layer with multiplex edge-list ingestion,
village-level network metrics (degree statistics, assortativity, betweenness,
degree mixing matrix), fixed-choice-design truncation, a discrete-time SIR
engine with vaccination, six vaccinee-selection strategies, a Metropolis
network sampler targeting a degree mixing matrix, OLS model selection with
grouped cross-validation, and campaign orchestration tying them together.
"""

from vaxnet.experiment import CampaignConfig, StrategySpec, run_campaign
from vaxnet.fcd import TruncationParams, truncate
from vaxnet.graph import Graph, MultiplexEdgeList, parse_edge_list, build_graph
from vaxnet.metrics import (
    DegreeMixingMatrix,
    VillageCharacteristics,
    village_characteristics,
)
from vaxnet.netgen import McmcParams, convergence_check, sample_ensemble
from vaxnet.regress import RegressionDataset, fit_ols, subset_search
from vaxnet.sir import SirParams, SirOutcome, run_sir, estimate_r0
from vaxnet.vaccinate import VaccinationPlan

__all__ = [
    "CampaignConfig",
    "StrategySpec",
    "run_campaign",
    "TruncationParams",
    "truncate",
    "Graph",
    "MultiplexEdgeList",
    "parse_edge_list",
    "build_graph",
    "DegreeMixingMatrix",
    "VillageCharacteristics",
    "village_characteristics",
    "McmcParams",
    "convergence_check",
    "sample_ensemble",
    "RegressionDataset",
    "fit_ols",
    "subset_search",
    "SirParams",
    "SirOutcome",
    "run_sir",
    "estimate_r0",
    "VaccinationPlan",
]

__version__ = "0.1.0"
