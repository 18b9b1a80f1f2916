"""Shared domain types, configuration and seeded random streams.

Labels are plain ints in {0, 1}.  Skills and difficulty standard deviations
are given in percentage points at the config boundary and converted to
probabilities where they are consumed.
"""

from __future__ import annotations

import enum
import json
import zlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

LABELS = (0, 1)


def to_signed(label: int) -> int:
    """Map a {0, 1} label onto the {-1, +1} vote encoding."""
    return 2 * label - 1


def from_signed(vote: int) -> int:
    return (vote + 1) // 2


def check_label(label) -> int:
    if label not in LABELS:
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    return int(label)


class WorkerClass(str, enum.Enum):
    ADVERSARIAL = "adversarial"
    NORMAL = "normal"
    EXPERT = "expert"


@dataclass(frozen=True)
class WorkerProfile:
    """Simulator-side truth about a worker.  Strategies never see this."""

    id: int
    cls: WorkerClass
    true_accuracy: float


@dataclass(frozen=True)
class WorkerRecord:
    """What the system has learned about one worker.

    ``agreements``/``answered`` feed the vote weights and the point estimate
    of skill; ``alpha``/``beta`` are the Beta belief used by the Bayesian
    strategies.  Counts are floats so the confidence-weighted path shares the
    same type.
    """

    id: int | str
    agreements: float = 0.0
    answered: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    is_known_expert: bool = False

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"worker {self.id}: alpha and beta must be positive")
        if self.agreements < 0 or self.agreements > self.answered:
            raise ValueError(f"worker {self.id}: need 0 <= agreements <= answered")


@dataclass(frozen=True)
class Question:
    id: int
    true_label: int
    difficulty: float  # percentage points, may be negative


@dataclass(frozen=True)
class Decision:
    question_id: int
    chosen_label: int
    confidence: float | None
    responses: tuple[tuple[int, int], ...]
    cost: float
    escalated: bool
    n_workers: int
    n_experts: int
    correct: bool | None = None


def _default_pool() -> dict[str, int]:
    return {"normal": 27, "adversarial": 3, "expert": 5}


def _default_skill() -> dict[str, tuple[float, float]]:
    return {"adversarial": (15.0, 5.0), "normal": (60.0, 15.0), "expert": (85.0, 5.0)}


@dataclass(frozen=True)
class Config:
    """Run configuration.  Defaults reproduce the question-count experiment."""

    pool_counts: dict[str, int] = field(default_factory=_default_pool)
    class_skill: dict[str, tuple[float, float]] = field(default_factory=_default_skill)
    difficulty: tuple[float, float] = (0.0, 15.0)
    availability_prob: float = 0.3
    confidence_threshold: float = 0.9
    prior_mean: float = 0.6
    prior_strength: float = 8.0
    count_prior_strength: float = 3.0
    initial_query_count: int = 1
    worker_cost: float = 1.0
    expert_cost: float = 5.0
    epsilon: float = 1e-6
    expert_skill: float = 0.85
    expert_strength: float = 20.0
    questions: int = 2000
    runs: int = 10
    seed: int = 0

    def __post_init__(self):
        # normalise JSON lists into tuples so configs compare and hash cleanly
        object.__setattr__(self, "difficulty", tuple(float(x) for x in self.difficulty))
        object.__setattr__(
            self,
            "class_skill",
            {WorkerClass(k).value: tuple(float(x) for x in v) for k, v in self.class_skill.items()},
        )
        object.__setattr__(
            self, "pool_counts", {WorkerClass(k).value: int(v) for k, v in self.pool_counts.items()}
        )
        self.validate()

    def validate(self) -> None:
        problems = []
        if any(n < 0 for n in self.pool_counts.values()):
            problems.append("pool_counts must be >= 0")
        missing = {c.value for c in WorkerClass} - set(self.class_skill)
        if missing:
            problems.append(f"class_skill missing {sorted(missing)}")
        if len(self.difficulty) != 2 or self.difficulty[1] < 0:
            problems.append("difficulty must be (mean, std) with std >= 0")
        if not 0 < self.availability_prob <= 1:
            problems.append("availability_prob must be in (0, 1]")
        if not 0.5 <= self.confidence_threshold < 1:
            problems.append("confidence_threshold must be in [0.5, 1)")
        if not 0 < self.prior_mean < 1:
            problems.append("prior_mean must be in (0, 1)")
        if self.count_prior_strength < 0:
            problems.append("count_prior_strength must be >= 0")
        if self.prior_strength <= 0:
            problems.append("prior_strength must be positive")
        if self.initial_query_count < 1:
            problems.append("initial_query_count must be >= 1")
        if self.worker_cost <= 0 or self.expert_cost <= 0:
            problems.append("costs must be positive")
        if not 0 < self.epsilon < 0.5:
            problems.append("epsilon must be in (0, 0.5)")
        if not 0 < self.expert_skill < 1 or self.expert_strength <= 0:
            problems.append("expert_skill must be in (0, 1) and expert_strength positive")
        if self.questions < 0 or self.runs < 1:
            problems.append("questions must be >= 0 and runs >= 1")
        if problems:
            raise ValueError("invalid config: " + "; ".join(problems))

    @property
    def prior_alpha(self) -> float:
        return self.prior_mean * self.prior_strength

    @property
    def prior_beta(self) -> float:
        return (1.0 - self.prior_mean) * self.prior_strength

    def with_(self, **changes) -> Config:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config(path: str | Path | None = None, **overrides) -> Config:
    """Read a flat JSON object of Config fields; ``overrides`` win over the file."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        try:
            values = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise FileNotFoundError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(values, dict):
            raise ValueError(f"{path}: expected a JSON object at top level")
        known = {f.name for f in fields(Config)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Config(**values)


def rng_stream(seed: int, tag: str) -> np.random.Generator:
    """Independent generator for a named purpose under one seed.

    The tag is hashed with crc32 (stable across processes, unlike ``hash``).
    """
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(tag.encode("utf-8"))])
