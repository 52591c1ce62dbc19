from .heuristics import (BigMRTAPolicy, MyopicPolicy, RandomPolicy, big_mrta_choice, big_mrta_incentive,
                         incentive_matrix, myopic_choice)
from .ils import iterated_local_search
from .matching import matching_weight, max_weight_matching
from .oracle import OracleSizeError, OracleSolution, exhaustive_oracle
from .plans import PlanPolicy, plan_from_result, simulate_plan

__all__ = [
    "BigMRTAPolicy", "MyopicPolicy", "OracleSizeError", "OracleSolution", "PlanPolicy", "RandomPolicy",
    "big_mrta_choice", "big_mrta_incentive", "exhaustive_oracle", "incentive_matrix",
    "iterated_local_search", "matching_weight", "max_weight_matching", "myopic_choice",
    "plan_from_result", "simulate_plan",
]
