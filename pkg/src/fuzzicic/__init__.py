"""Autonomous fuzzy-logic RB and power allocation for dense femto-cell
deployments, with the channel, scenario, metric and benchmark machinery
needed to evaluate it."""

from .config import SystemParams
from .fuzzy_core import (Antecedent, ConfigurationError, LinguisticVariable, MembershipFunction,
                         Rule, RuleBase, defuzzify, load_rulebase, save_rulebase)
from .icic import (CellObservations, FuzzyAgent, assign_powers, link_adapt, schedule_cell,
                   score_rbs, select_rbs, table3_rulebase, update_observations)
from .scenario import Scenario, generate

__version__ = "0.1.0"

__all__ = [
    "Antecedent", "CellObservations", "ConfigurationError", "FuzzyAgent", "LinguisticVariable",
    "MembershipFunction", "Rule", "RuleBase", "Scenario", "SystemParams", "assign_powers",
    "defuzzify", "generate", "link_adapt", "load_rulebase", "save_rulebase", "schedule_cell",
    "score_rbs", "select_rbs", "table3_rulebase", "update_observations",
]
