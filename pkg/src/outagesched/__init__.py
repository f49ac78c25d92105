"""Scenario-based maintenance and refueling scheduling toolkit."""

from .model import (
    Instance,
    ProductionState,
    Schedule,
    TimeGrid,
    UNSCHEDULED,
    derive_campaigns,
)
from .instance_io import GeneratorParams, generate_instance, parse_instance, write_instance
from .evaluator import check_feasibility, compute_objective, simulate_fuel
from .scheduler import SearchConfig, solve_schedule
from .planner import build_pwl, plan_production, increase_refuels, min_demand_scenario
from .search import SaParams, anneal
from .cli import run_pipeline

__all__ = [
    "Instance",
    "ProductionState",
    "Schedule",
    "TimeGrid",
    "UNSCHEDULED",
    "derive_campaigns",
    "GeneratorParams",
    "generate_instance",
    "parse_instance",
    "write_instance",
    "check_feasibility",
    "compute_objective",
    "simulate_fuel",
    "SearchConfig",
    "solve_schedule",
    "build_pwl",
    "plan_production",
    "increase_refuels",
    "min_demand_scenario",
    "SaParams",
    "anneal",
    "run_pipeline",
]

__version__ = "0.1.0"
