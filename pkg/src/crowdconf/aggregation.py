"""Label fusion strategies, the label confidence measure, and record updates.

Everything here is a pure function of its arguments.  Workers are seen only
through :class:`~crowdconf.core.WorkerRecord`; the simulator's true skills
never reach this module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .core import WorkerRecord, check_label, from_signed


class Strategy(str, enum.Enum):
    MV = "mv"
    WEIGHTED = "weighted"
    EM = "em"
    BAY = "bayes"
    CONF = "conf"

    @property
    def is_voting(self) -> bool:
        return self in (Strategy.MV, Strategy.WEIGHTED)

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, name: str) -> Strategy:
        key = name.strip().lower()
        for s in cls:
            if key in (s.value, s.display.lower()):
                return s
        raise ValueError(f"unknown strategy {name!r}; choose from {[s.value for s in cls]}")


_DISPLAY = {
    Strategy.MV: "MV",
    Strategy.WEIGHTED: "Weighted",
    Strategy.EM: "EM",
    Strategy.BAY: "BAY",
    Strategy.CONF: "CONF",
}

ALL_STRATEGIES = tuple(Strategy)
PROBABILISTIC = (Strategy.EM, Strategy.BAY, Strategy.CONF)


@dataclass(frozen=True)
class PosteriorResult:
    p_label_one: float
    chosen: int
    confidence: float


def majority_vote(responses: Sequence[int]) -> int:
    n = len(responses)
    if n == 0 or n % 2 == 0:
        raise ValueError(f"majority vote needs an odd, nonzero number of responses (got {n})")
    ones = sum(check_label(r) for r in responses)
    return 1 if 2 * ones > n else 0


def agreement_weight(record: WorkerRecord, default: float) -> float:
    """Fraction of past answers that matched consensus, ``default`` if none."""
    if record.answered <= 0:
        return default
    return record.agreements / record.answered


def weighted_vote(votes: Sequence[int], weights: Sequence[float]) -> int:
    """Sign of the weighted sum of +/-1 votes, as a {0, 1} label.

    A sum of exactly zero resolves to label 1.
    """
    if len(votes) != len(weights):
        raise ValueError(f"{len(votes)} votes but {len(weights)} weights")
    if len(votes) == 0:
        raise ValueError("weighted vote needs at least one vote")
    total = 0.0
    for v, w in zip(votes, weights):
        if v not in (-1, 1):
            raise ValueError(f"votes must be -1 or +1, got {v!r}")
        total += v * w
    return from_signed(-1 if total < 0 else 1)


def worker_likelihood(response: int, lam: float, hypothesis: int) -> float:
    """P(response | true label = hypothesis) for a worker who is right w.p. ``lam``."""
    return lam if response == hypothesis else 1.0 - lam


def mle_lambda(record: WorkerRecord, prior_mean: float, epsilon: float) -> float:
    if record.answered <= 0:
        return prior_mean
    lam = record.agreements / record.answered
    return min(max(lam, epsilon), 1.0 - epsilon)


def posterior_from_logs(log_one: float, log_zero: float) -> PosteriorResult:
    """Posterior for label 1 given summed log-likelihoods under each label."""
    diff = log_zero - log_one
    if math.isnan(diff):
        raise ArithmeticError("both label likelihoods vanished")
    if diff >= 0:
        e = math.exp(-diff)
        p_one = e / (1.0 + e)
    else:
        p_one = 1.0 / (1.0 + math.exp(diff))
    chosen = 1 if p_one >= 0.5 else 0
    return PosteriorResult(p_one, chosen, confidence(p_one, chosen))


def posterior_label(likelihoods: Iterable[tuple[float, float]]) -> PosteriorResult:
    """Fuse independent workers under a uniform label prior.

    ``likelihoods`` holds one ``(P(w_i | L=1), P(w_i | L=0))`` pair per worker.
    An empty input gives 0.5.
    """
    log_one = log_zero = 0.0
    for l1, l0 in likelihoods:
        if not (0 < l1 <= 1 and 0 < l0 <= 1):
            raise ValueError(f"likelihoods must lie in (0, 1], got ({l1}, {l0})")
        log_one += math.log(l1)
        log_zero += math.log(l0)
    return posterior_from_logs(log_one, log_zero)


def confidence(p_label_one: float, chosen: int) -> float:
    """Distance of the posterior from the rejected label."""
    return abs(p_label_one - (1 - chosen))


def beta_predictive(alpha: float, beta: float, response: int, hypothesis: int) -> float:
    """Probability of ``response`` with the worker's skill marginalised over Beta(alpha, beta).

    Evaluated through log-gamma; for a single Bernoulli draw this reduces to
    alpha/(alpha+beta) for a correct answer and beta/(alpha+beta) otherwise.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError(f"alpha and beta must be positive, got ({alpha}, {beta})")
    # symmetric skill: "correct" plays the role of w=1 under hypothesis L=1
    w = 1 if response == hypothesis else 0
    lg = math.lgamma
    log_p = (
        lg(alpha + beta) + lg(alpha + w) + lg(1 - w + beta)
        - lg(alpha) - lg(beta) - lg(alpha + beta + 1)
    )
    return math.exp(log_p)


def update_counts(record: WorkerRecord, agreed: bool) -> WorkerRecord:
    return replace(
        record,
        agreements=record.agreements + (1.0 if agreed else 0.0),
        answered=record.answered + 1.0,
    )


def update_beta(record: WorkerRecord, agreed: bool) -> WorkerRecord:
    if agreed:
        return replace(record, alpha=record.alpha + 1.0)
    return replace(record, beta=record.beta + 1.0)


def update_beta_confidence(record: WorkerRecord, agreed: bool, omega: float) -> WorkerRecord:
    """Beta update scaled by how sure the system was of the consensus label."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must be in [0, 1], got {omega}")
    if agreed:
        return replace(record, alpha=record.alpha + omega)
    return replace(record, beta=record.beta + omega)
