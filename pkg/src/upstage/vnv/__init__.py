"""Verification layer: monitors, campaigns, worst-case search, reporting."""

from .monitors import Monitor, StatsRecord, Violation, eval_monitor
from .campaign import (CampaignResult, SampleRecord, run_monte_carlo,
                       split_seed)
from .crossentropy import CEOptions, ce_search, cross_entropy_maximize
from .objectives import OBJECTIVES, objective_value
from .requirements import (CycleDetected, DanglingMonitorRef, DuplicateId,
                           RequirementTree, parse_requirements)
from .report import generate_report

__all__ = [
    "Monitor", "StatsRecord", "Violation", "eval_monitor",
    "CampaignResult", "SampleRecord", "run_monte_carlo", "split_seed",
    "CEOptions", "ce_search", "cross_entropy_maximize",
    "OBJECTIVES", "objective_value",
    "CycleDetected", "DanglingMonitorRef", "DuplicateId",
    "RequirementTree", "parse_requirements", "generate_report",
]
