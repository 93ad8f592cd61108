from .budget import Limiter, RateBudget, RequestLog, load_budget
from .observe import ObservationRun, poll_counts, sample_recent_followers
from .plan import SamplePlan, load_plan

__all__ = [
    "Limiter",
    "ObservationRun",
    "RateBudget",
    "RequestLog",
    "SamplePlan",
    "load_budget",
    "load_plan",
    "poll_counts",
    "sample_recent_followers",
]
