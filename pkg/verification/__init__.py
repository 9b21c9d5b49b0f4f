"""
Property suites run by the `verify` command.
"""

from .oracles import central_difference, soft_policy_iteration
from .suites import Mutations, SuiteResult, run_all

__all__ = ["Mutations", "SuiteResult", "central_difference", "run_all", "soft_policy_iteration"]
