"""Binary label aggregation for simulated crowds.

Majority vote, weighted vote, a point-estimate likelihood model and two
Beta-Bernoulli models, with an ask-until-confident querying loop and expert
escalation.
"""

from .aggregation import PROBABILISTIC, PosteriorResult, Strategy
from .core import Config, Decision, Question, WorkerClass, WorkerProfile, WorkerRecord, load_config, rng_stream

__version__ = "0.1.0"

__all__ = [
    "Config",
    "Decision",
    "PROBABILISTIC",
    "PosteriorResult",
    "Question",
    "Strategy",
    "WorkerClass",
    "WorkerProfile",
    "WorkerRecord",
    "load_config",
    "rng_stream",
]
