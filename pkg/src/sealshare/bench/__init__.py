"""Benchmarks and scenario simulations."""

from .corpus import VOCABULARY, Population, generate_population
from .pre_bench import bench_pre
from .reports import BenchReport, environment_descriptor, summarize
from .search_bench import bench_search
from .simulate import SCENARIOS, SimulationResult, run_scenario, scan_for_canaries

__all__ = [
    "BenchReport",
    "Population",
    "SCENARIOS",
    "SimulationResult",
    "VOCABULARY",
    "bench_pre",
    "bench_search",
    "environment_descriptor",
    "generate_population",
    "run_scenario",
    "scan_for_canaries",
    "summarize",
]
