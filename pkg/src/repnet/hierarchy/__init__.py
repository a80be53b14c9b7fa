"""Multi-scale hierarchy of repeated patterns in a colored graph."""
from .levels import Hierarchy, HierarchyError, HierarchyLevel, build_level
from .schedule import ConditionCheck, Schedule, ScheduleError, check_conditions, failed, make_schedule
from .verify import (LimitLevel, density_bound, density_report, hierarchy_report, level_coloring,
                     limit_levels, verify_level)

__all__ = [
    "ConditionCheck", "Hierarchy", "HierarchyError", "HierarchyLevel", "LimitLevel", "Schedule",
    "ScheduleError", "build_level", "check_conditions", "density_bound", "density_report", "failed",
    "hierarchy_report", "level_coloring", "limit_levels", "make_schedule", "verify_level",
]
