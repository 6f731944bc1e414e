"""Scenario runner, bus tap, offline assertion checks, reports, and the
operator-panel gateway."""

from avpsim.harness.scenario import Scenario, ScenarioError, load_scenario, random_scenario
from avpsim.harness.checks import CheckResult, assert_suite
from avpsim.harness.report import RunReport

__all__ = [
    "CheckResult",
    "RunReport",
    "Scenario",
    "ScenarioError",
    "assert_suite",
    "load_scenario",
    "random_scenario",
]
