"""Parameter sweeps over repeated seeded sessions.

Every sweep point runs ``config.runs`` repetitions with seeds
``config.seed + run_index``.  Within one repetition all strategies share one
:class:`~crowdconf.simulation.World`, so strategy differences are paired.
The same seeds are reused at every sweep point.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .aggregation import ALL_STRATEGIES, PROBABILISTIC, Strategy
from .core import Config
from .orchestrator import run_session
from .simulation import build_world

QUESTION_GRID = (100, 250, 500, 1000, 1500, 2000)
THRESHOLD_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
DIFFICULTY_GRID = (-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
ADVERSARY_GRID = (0, 5, 10, 15, 20, 25, 30, 35, 40)
# questions per session in the difficulty and adversarial sweeps; 1000 keeps a
# full sweep at desk scale
SWEEP_QUESTIONS = 1000
ADVERSARIAL_BASE = {"normal": 40, "expert": 5}

EXPERIMENTS = ("questions", "threshold", "difficulty", "adversarial")

SUMMARY_COLUMNS = (
    "experiment", "swept_param", "swept_value", "strategy", "runs",
    "acc_mean", "acc_var", "cost_mean", "cost_var",
)
PLOT_COLUMNS = ("experiment", "swept_param", "swept_value", "strategy", "run_seed", "accuracy", "mean_cost")


@dataclass(frozen=True, eq=False)
class RunResult:
    seed: int
    accuracy: float
    mean_cost: float
    costs: np.ndarray | None = None
    correct: np.ndarray | None = None


def _result(seed: int, costs: np.ndarray, correct: np.ndarray) -> RunResult:
    n = len(costs)
    acc = float(correct.mean()) if n else 0.0
    cost = float(costs.mean()) if n else 0.0
    return RunResult(seed, acc, cost, costs, correct)


@dataclass
class SweepPoint:
    param: str
    value: float
    runs: dict[Strategy, list[RunResult]] = field(default_factory=dict)


@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    swept_param: str
    swept_value: float
    strategy: str
    runs: int
    acc_mean: float
    acc_var: float
    cost_mean: float
    cost_var: float


@dataclass
class ExperimentSummary:
    experiment: str
    rows: list[SummaryRow] = field(default_factory=list)
    points: list[SweepPoint] = field(default_factory=list)

    def row(self, value: float, strategy: Strategy | str) -> SummaryRow:
        name = strategy.display if isinstance(strategy, Strategy) else strategy
        for r in self.rows:
            if r.strategy == name and math.isclose(r.swept_value, value):
                return r
        raise KeyError((value, name))

    def values(self) -> list[float]:
        return sorted({r.swept_value for r in self.rows})


def summarize(experiment: str, points: Sequence[SweepPoint]) -> ExperimentSummary:
    rows = []
    for point in points:
        if not point.runs:
            raise ValueError(f"sweep point {point.param}={point.value} has no runs")
        for strategy in ALL_STRATEGIES:
            results = point.runs.get(strategy)
            if results is None:
                continue
            if not results:
                raise ValueError(f"sweep point {point.param}={point.value} has no {strategy.display} runs")
            acc = np.array([r.accuracy for r in results])
            cost = np.array([r.mean_cost for r in results])
            rows.append(SummaryRow(
                experiment, point.param, float(point.value), strategy.display, len(results),
                float(acc.mean()), float(acc.var()), float(cost.mean()), float(cost.var()),
            ))
    return ExperimentSummary(experiment, rows, list(points))


def _map(fn: Callable, tasks: Iterable, jobs: int) -> list:
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _run_world(task) -> dict[Strategy, RunResult]:
    config, seed, strategies, n_questions = task
    world = build_world(config, seed, n_questions)
    out = {}
    for s in strategies:
        log = run_session(world, s, config, seed)
        out[s] = _result(seed, log.costs(), log.correct())
    return out


def run_point(
    config: Config,
    strategies: Sequence[Strategy] = ALL_STRATEGIES,
    n_questions: int | None = None,
    jobs: int = 1,
) -> list[dict[Strategy, RunResult]]:
    """All repetitions of one configuration; one dict of results per run."""
    n = config.questions if n_questions is None else n_questions
    tasks = [(config, config.seed + i, tuple(strategies), n) for i in range(config.runs)]
    return _map(_run_world, tasks, jobs)


def _collect(param: str, value: float, per_run: list[dict[Strategy, RunResult]]) -> SweepPoint:
    point = SweepPoint(param, value)
    for run in per_run:
        for s, r in run.items():
            point.runs.setdefault(s, []).append(r)
    return point


def exp_questions(config: Config, grid: Sequence[int] = QUESTION_GRID, jobs: int = 1) -> ExperimentSummary:
    """Accuracy and mean cost after the first n questions of one long session.

    A session's first n decisions do not depend on later questions, so each
    grid value reads a prefix of a single run of ``max(grid)`` questions.
    """
    per_run = run_point(config, ALL_STRATEGIES, max(grid), jobs)
    points = []
    for n in grid:
        point = SweepPoint("questions", float(n))
        for run in per_run:
            for s, r in run.items():
                point.runs.setdefault(s, []).append(_result(r.seed, r.costs[:n], r.correct[:n]))
        points.append(point)
    return summarize("questions", points)


def _threshold_task(task):
    config, seed, grid, n = task
    world = build_world(config, seed, n)
    baseline = {}
    for s in (Strategy.MV, Strategy.WEIGHTED):
        log = run_session(world, s, config, seed)
        baseline[s] = _result(seed, log.costs(), log.correct())
    out = []
    for t in grid:
        cfg = config.with_(confidence_threshold=t)
        res = dict(baseline)
        for s in PROBABILISTIC:
            log = run_session(world, s, cfg, seed)
            res[s] = _result(seed, log.costs(), log.correct())
        out.append(res)
    return out


def exp_threshold(config: Config, grid: Sequence[float] = THRESHOLD_GRID, jobs: int = 1) -> ExperimentSummary:
    """Sweep the confidence threshold; the voting methods are flat baselines."""
    tasks = [(config, config.seed + i, tuple(grid), config.questions) for i in range(config.runs)]
    per_run = _map(_threshold_task, tasks, jobs)
    points = [_collect("confidence_threshold", t, [run[j] for run in per_run]) for j, t in enumerate(grid)]
    return summarize("threshold", points)


def _sweep(name, param, grid, make_config, n_questions, jobs) -> ExperimentSummary:
    tasks = []
    for value in grid:
        cfg = make_config(value)
        tasks += [(cfg, cfg.seed + i, ALL_STRATEGIES, n_questions) for i in range(cfg.runs)]
    results = _map(_run_world, tasks, jobs)
    points = []
    for j, value in enumerate(grid):
        runs = make_config(value).runs
        points.append(_collect(param, value, results[j * runs:(j + 1) * runs]))
    return summarize(name, points)


def exp_difficulty(
    config: Config,
    grid: Sequence[float] = DIFFICULTY_GRID,
    n_questions: int = SWEEP_QUESTIONS,
    jobs: int = 1,
) -> ExperimentSummary:
    std = config.difficulty[1]
    return _sweep(
        "difficulty", "difficulty_mean", grid,
        lambda v: config.with_(difficulty=(float(v), std)), n_questions, jobs,
    )


def exp_adversarial(
    config: Config,
    grid: Sequence[int] = ADVERSARY_GRID,
    n_questions: int = SWEEP_QUESTIONS,
    jobs: int = 1,
) -> ExperimentSummary:
    return _sweep(
        "adversarial", "adversarial_count", grid,
        lambda a: config.with_(pool_counts={**ADVERSARIAL_BASE, "adversarial": int(a)}),
        n_questions, jobs,
    )


def run_experiment(name: str, config: Config, jobs: int = 1) -> ExperimentSummary:
    runners = {
        "questions": exp_questions,
        "threshold": exp_threshold,
        "difficulty": exp_difficulty,
        "adversarial": exp_adversarial,
    }
    if name not in runners:
        raise ValueError(f"unknown experiment {name!r}; choose from {list(runners)} or 'all'")
    return runners[name](config, jobs=jobs)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_summary_csv(summaries: ExperimentSummary | Sequence[ExperimentSummary], path: str | Path) -> Path:
    if isinstance(summaries, ExperimentSummary):
        summaries = [summaries]
    rows = (
        [r.experiment, r.swept_param, _fmt(r.swept_value), r.strategy, r.runs,
         _fmt(r.acc_mean), _fmt(r.acc_var), _fmt(r.cost_mean), _fmt(r.cost_var)]
        for s in summaries for r in s.rows
    )
    return _write_rows(Path(path), SUMMARY_COLUMNS, rows)


def read_summary_csv(path: str | Path) -> list[ExperimentSummary]:
    by_name: dict[str, ExperimentSummary] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            row = SummaryRow(
                rec["experiment"], rec["swept_param"], float(rec["swept_value"]), rec["strategy"],
                int(rec["runs"]), float(rec["acc_mean"]), float(rec["acc_var"]),
                float(rec["cost_mean"]), float(rec["cost_var"]),
            )
            by_name.setdefault(row.experiment, ExperimentSummary(row.experiment)).rows.append(row)
    return list(by_name.values())


def write_plot_data(summary: ExperimentSummary, path: str | Path) -> Path:
    """Long-format per-run values behind one accuracy/cost figure pair."""
    rows = []
    for point in summary.points:
        for s in ALL_STRATEGIES:
            for r in point.runs.get(s, ()):
                rows.append([summary.experiment, point.param, _fmt(point.value), s.display,
                             r.seed, _fmt(r.accuracy), _fmt(r.mean_cost)])
    return _write_rows(Path(path), PLOT_COLUMNS, rows)
