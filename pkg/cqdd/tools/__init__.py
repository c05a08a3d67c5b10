"""Experiment tools that emit findings artifacts."""

from cqdd.tools.backdrive_check import BackdriveTool
from cqdd.tools.backlash_check import BacklashTool
from cqdd.tools.base import BaseTool
from cqdd.tools.latency_validate import LatencyTool
from cqdd.tools.preset_compare import ComparisonTool

__all__ = ["BaseTool", "BackdriveTool", "BacklashTool", "ComparisonTool", "LatencyTool"]
