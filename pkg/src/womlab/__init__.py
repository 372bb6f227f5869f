"""Erasure-factor models and FTL simulation for flash with and without WOM codes."""

from .analytic import (
    AnalyticResult,
    System,
    SystemParams,
    WomCodeSpec,
    alpha_prime,
    capacity_contains,
    cp_gamma2,
    ef_baseline,
    ef_cp_given_gamma1,
    ef_cp_multiwrite,
    ef_cp_optimal,
    ef_naive,
    find_crossover,
    max_sum_rate,
    naive_beats_baseline,
)
from .ftl_sim import SimConfig, SimReport, run

__version__ = "0.1.0"
