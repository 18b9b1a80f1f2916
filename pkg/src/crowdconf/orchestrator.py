"""Per-question querying, expert escalation, cost accounting, record updates.

Voting strategies ask a fixed crowd.  The probabilistic strategies start with
a small crowd and keep asking one more random available worker while the
label confidence is at or below the threshold; if the crowd runs out first,
known experts are asked one at a time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .aggregation import (
    PosteriorResult,
    Strategy,
    agreement_weight,
    beta_predictive,
    majority_vote,
    mle_lambda,
    posterior_from_logs,
    update_beta,
    update_beta_confidence,
    update_counts,
    weighted_vote,
    worker_likelihood,
)
from .core import Config, Decision, WorkerRecord, rng_stream, to_signed
from .simulation import World

Ask = Callable[[int], int]


@dataclass
class SessionLog:
    strategy: Strategy
    decisions: list[Decision] = field(default_factory=list)
    records: dict[int, WorkerRecord] = field(default_factory=dict)
    total_cost: float = 0.0

    @property
    def accuracy(self) -> float:
        if not self.decisions:
            return 0.0
        return sum(1 for d in self.decisions if d.correct) / len(self.decisions)

    @property
    def mean_cost(self) -> float:
        return self.total_cost / len(self.decisions) if self.decisions else 0.0

    def costs(self) -> np.ndarray:
        return np.array([d.cost for d in self.decisions], dtype=float)

    def correct(self) -> np.ndarray:
        return np.array([bool(d.correct) for d in self.decisions], dtype=bool)


def initial_records(worker_ids: Sequence[int], expert_ids: Sequence[int], config: Config) -> dict[int, WorkerRecord]:
    k = config.count_prior_strength
    records = {
        i: WorkerRecord(
            i,
            agreements=config.prior_mean * k,
            answered=k,
            alpha=config.prior_alpha,
            beta=config.prior_beta,
        )
        for i in worker_ids
    }
    for i in expert_ids:
        records[i] = WorkerRecord(
            i,
            alpha=config.expert_skill * config.expert_strength,
            beta=(1.0 - config.expert_skill) * config.expert_strength,
            is_known_expert=True,
        )
    return records


def decision_cost(n_workers: int, n_experts: int, config: Config) -> float:
    return config.worker_cost * n_workers + config.expert_cost * n_experts


def answer_question_voting(
    question_id: int,
    ask: Ask,
    strategy: Strategy,
    available: Sequence[int],
    records: Mapping[int, WorkerRecord],
    config: Config,
    rng: np.random.Generator,
) -> Decision:
    if not available:
        raise ValueError("no available workers")
    queried = list(available)
    if strategy is Strategy.MV:
        if len(queried) % 2 == 0:
            del queried[int(rng.integers(len(queried)))]
        responses = [(w, ask(w)) for w in queried]
        chosen = majority_vote([r for _, r in responses])
    elif strategy is Strategy.WEIGHTED:
        responses = [(w, ask(w)) for w in queried]
        chosen = weighted_vote(
            [to_signed(r) for _, r in responses],
            [agreement_weight(records[w], config.prior_mean) for w, _ in responses],
        )
    else:
        raise ValueError(f"{strategy} is not a voting strategy")
    n = len(responses)
    return Decision(
        question_id=question_id,
        chosen_label=chosen,
        confidence=None,
        responses=tuple(responses),
        cost=decision_cost(n, 0, config),
        escalated=False,
        n_workers=n,
        n_experts=0,
    )


def _log_pair(record: WorkerRecord, response: int, strategy: Strategy, config: Config) -> tuple[float, float]:
    if strategy is Strategy.EM:
        if record.is_known_expert:
            lam = config.expert_skill
        else:
            lam = mle_lambda(record, config.prior_mean, config.epsilon)
        l1 = worker_likelihood(response, lam, 1)
        l0 = worker_likelihood(response, lam, 0)
    else:
        l1 = beta_predictive(record.alpha, record.beta, response, 1)
        l0 = beta_predictive(record.alpha, record.beta, response, 0)
    return math.log(l1), math.log(l0)


def answer_question_iterative(
    question_id: int,
    ask: Ask,
    strategy: Strategy,
    available: Sequence[int],
    records: Mapping[int, WorkerRecord],
    experts: Sequence[int],
    config: Config,
    rng: np.random.Generator,
) -> tuple[Decision, PosteriorResult]:
    if strategy.is_voting:
        raise ValueError(f"{strategy} does not use the iterative loop")
    if not available:
        raise ValueError("no available workers")
    order = [available[i] for i in rng.permutation(len(available))]
    threshold = config.confidence_threshold
    responses: list[tuple[int, int]] = []
    log_one = log_zero = 0.0

    def query(worker_id):
        nonlocal log_one, log_zero
        r = ask(worker_id)
        responses.append((worker_id, r))
        a, b = _log_pair(records[worker_id], r, strategy, config)
        log_one += a
        log_zero += b

    k = min(config.initial_query_count, len(order))
    for w in order[:k]:
        query(w)
    post = posterior_from_logs(log_one, log_zero)
    for w in order[k:]:
        if post.confidence > threshold:
            break
        query(w)
        post = posterior_from_logs(log_one, log_zero)

    n_experts = 0
    if post.confidence <= threshold:
        for e in (experts[i] for i in rng.permutation(len(experts))):
            query(e)
            n_experts += 1
            post = posterior_from_logs(log_one, log_zero)
            if post.confidence > threshold:
                break

    n_workers = len(responses) - n_experts
    decision = Decision(
        question_id=question_id,
        chosen_label=post.chosen,
        confidence=post.confidence,
        responses=tuple(responses),
        cost=decision_cost(n_workers, n_experts, config),
        escalated=n_experts > 0,
        n_workers=n_workers,
        n_experts=n_experts,
    )
    return decision, post


def fuse_responses(
    strategy: Strategy,
    responses: Sequence[tuple[int, int]],
    records: Mapping[int, WorkerRecord],
    config: Config,
) -> tuple[int, float | None]:
    """Label a fixed set of responses without asking anyone else.

    Returns the label and, for the probabilistic strategies, its confidence.
    """
    if not responses:
        raise ValueError("no responses to fuse")
    labels = [r for _, r in responses]
    if strategy is Strategy.MV:
        return majority_vote(labels), None
    if strategy is Strategy.WEIGHTED:
        weights = [agreement_weight(records[w], config.prior_mean) for w, _ in responses]
        return weighted_vote([to_signed(r) for r in labels], weights), None
    log_one = log_zero = 0.0
    for w, r in responses:
        a, b = _log_pair(records[w], r, strategy, config)
        log_one += a
        log_zero += b
    post = posterior_from_logs(log_one, log_zero)
    return post.chosen, post.confidence


def update_consensus_records(
    strategy: Strategy,
    records: dict[int, WorkerRecord],
    queried: Sequence[tuple[int, int]],
    chosen: int,
    omega: float | None = None,
) -> dict[int, WorkerRecord]:
    """Score every queried non-expert against the final label.

    Returns a new mapping; expert records are left as they are.
    """
    out = dict(records)
    for worker_id, response in queried:
        rec = out[worker_id]
        if rec.is_known_expert:
            continue
        agreed = response == chosen
        if strategy is Strategy.BAY:
            rec = update_beta(rec, agreed)
        elif strategy is Strategy.CONF:
            if omega is None:
                raise ValueError("confidence-weighted update needs omega")
            rec = update_beta_confidence(rec, agreed, omega)
        else:
            rec = update_counts(rec, agreed)
        out[worker_id] = rec
    return out


def run_session(world: World, strategy: Strategy, config: Config, seed: int) -> SessionLog:
    """Answer every question of ``world`` in order with one strategy.

    Worker selection randomness comes from the seed's ``selection`` stream, so
    sessions on the same world and seed are identical.
    """
    rng = rng_stream(seed, "selection")
    experts = [p.id for p in world.pool.experts]
    records = initial_records([p.id for p in world.pool.crowd], experts, config)
    log = SessionLog(strategy)
    for question, available in zip(world.questions, world.availability):
        ask = lambda w, q=question: world.ask(q, w)  # noqa: E731
        if strategy.is_voting:
            decision = answer_question_voting(question.id, ask, strategy, available, records, config, rng)
            omega = None
        else:
            decision, post = answer_question_iterative(
                question.id, ask, strategy, available, records, experts, config, rng
            )
            omega = post.confidence
        records = update_consensus_records(strategy, records, decision.responses, decision.chosen_label, omega)
        decision = replace(decision, correct=decision.chosen_label == question.true_label)
        log.decisions.append(decision)
        log.total_cost += decision.cost
    log.records = records
    return log


DECISION_COLUMNS = (
    "question_id", "strategy", "chosen_label", "true_label", "correct",
    "confidence", "cost", "n_workers", "n_experts", "escalated",
)


def write_decisions_csv(log: SessionLog, world: World, path: str | Path) -> Path:
    path = Path(path)
    truth = {q.id: q.true_label for q in world.questions}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DECISION_COLUMNS)
        for d in log.decisions:
            w.writerow([
                d.question_id,
                log.strategy.value,
                d.chosen_label,
                truth[d.question_id],
                int(bool(d.correct)),
                "" if d.confidence is None else f"{d.confidence:.9g}",
                f"{d.cost:.9g}",
                d.n_workers,
                d.n_experts,
                int(d.escalated),
            ])
    return path
