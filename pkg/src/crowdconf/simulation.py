"""Synthetic crowd: worker pools, question streams, availability, answers."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Config, Question, WorkerClass, WorkerProfile, rng_stream

# pool ids are assigned in this class order
CLASS_ORDER = (WorkerClass.NORMAL, WorkerClass.ADVERSARIAL, WorkerClass.EXPERT)
MAX_AVAILABILITY_DRAWS = 1000


@dataclass(frozen=True)
class WorkerPool:
    profiles: tuple[WorkerProfile, ...]

    @property
    def counts(self) -> dict[str, int]:
        out = {c.value: 0 for c in CLASS_ORDER}
        for p in self.profiles:
            out[p.cls.value] += 1
        return out

    @property
    def crowd(self) -> tuple[WorkerProfile, ...]:
        return tuple(p for p in self.profiles if p.cls is not WorkerClass.EXPERT)

    @property
    def experts(self) -> tuple[WorkerProfile, ...]:
        return tuple(p for p in self.profiles if p.cls is WorkerClass.EXPERT)

    def __len__(self):
        return len(self.profiles)


def sample_worker_pool(config: Config, rng: np.random.Generator) -> WorkerPool:
    profiles = []
    for cls in CLASS_ORDER:
        n = config.pool_counts.get(cls.value, 0)
        mean, std = config.class_skill[cls.value]
        draws = np.clip(rng.normal(mean, std, size=n) / 100.0, 0.0, 1.0)
        for acc in draws:
            profiles.append(WorkerProfile(len(profiles), cls, float(acc)))
    return WorkerPool(tuple(profiles))


def effective_accuracy(profile: WorkerProfile, difficulty: float) -> float:
    """Chance the worker answers correctly on a question of this difficulty.

    Difficulty shifts normal/expert workers down and adversaries up, but a
    positive difficulty never pushes either past the 0.5 guessing line.
    """
    d = difficulty / 100.0
    p = profile.true_accuracy
    if profile.cls is WorkerClass.ADVERSARIAL:
        # mirror image of the honest rule, pulled up toward 0.5
        q = min(max(p + d, 0.0), 1.0)
        if d > 0 and q > 0.5:
            q = min(q, max(p, 0.5))
        return q
    q = min(max(p - d, 0.0), 1.0)
    if d > 0 and q < 0.5:
        # guessing floor; never lift a worker who was already below it
        q = max(q, min(p, 0.5))
    return q


def response_from_uniform(profile: WorkerProfile, question: Question, u: float) -> int:
    if u < effective_accuracy(profile, question.difficulty):
        return question.true_label
    return 1 - question.true_label


def sample_response(profile: WorkerProfile, question: Question, rng: np.random.Generator) -> int:
    return response_from_uniform(profile, question, rng.random())


def sample_availability(pool: WorkerPool, config: Config, rng: np.random.Generator) -> tuple[int, ...]:
    """Ids of the non-expert workers reachable for one question.

    Known experts are always reachable and are not part of the returned set.
    """
    crowd = pool.crowd
    if not crowd:
        raise ValueError("worker pool has no non-expert workers")
    ids = np.array([p.id for p in crowd])
    for _ in range(MAX_AVAILABILITY_DRAWS):
        mask = rng.random(len(ids)) < config.availability_prob
        if mask.any():
            return tuple(int(i) for i in ids[mask])
    raise RuntimeError(
        f"no worker available after {MAX_AVAILABILITY_DRAWS} draws "
        f"(availability_prob={config.availability_prob})"
    )


def sample_questions(n: int, config: Config, rng: np.random.Generator) -> tuple[Question, ...]:
    if n < 0:
        raise ValueError("question count must be >= 0")
    mean, std = config.difficulty
    labels = rng.integers(0, 2, size=n)
    diffs = rng.normal(mean, std, size=n) if std > 0 else np.full(n, float(mean))
    return tuple(Question(i, int(l), float(d)) for i, (l, d) in enumerate(zip(labels, diffs)))


@dataclass(frozen=True, eq=False)
class World:
    """Everything random about one run that strategies should share.

    ``draws[q, w]`` is the uniform that decides worker ``w``'s answer to
    question ``q``, so two strategies asking the same worker the same question
    get the same answer.
    """

    pool: WorkerPool
    questions: tuple[Question, ...]
    availability: tuple[tuple[int, ...], ...]
    draws: np.ndarray

    def ask(self, question: Question, worker_id: int) -> int:
        return response_from_uniform(
            self.pool.profiles[worker_id], question, self.draws[question.id, worker_id]
        )


def build_world(config: Config, seed: int, n_questions: int | None = None) -> World:
    n = config.questions if n_questions is None else n_questions
    pool = sample_worker_pool(config, rng_stream(seed, "pool"))
    questions = sample_questions(n, config, rng_stream(seed, "questions"))
    avail_rng = rng_stream(seed, "availability")
    availability = tuple(sample_availability(pool, config, avail_rng) for _ in range(n))
    draws = rng_stream(seed, "responses").random((n, len(pool)))
    return World(pool, questions, availability, draws)


def write_world_csv(world: World, out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    workers_path = out_dir / "workers.csv"
    questions_path = out_dir / "questions.csv"
    with open(workers_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "class", "true_accuracy"])
        for p in world.pool.profiles:
            w.writerow([p.id, p.cls.value, f"{p.true_accuracy:.9g}"])
    with open(questions_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "true_label", "difficulty"])
        for q in world.questions:
            w.writerow([q.id, q.true_label, f"{q.difficulty:.9g}"])
    return workers_path, questions_path
