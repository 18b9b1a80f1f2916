"""Command-line entry point.

    crowdconf experiment <questions|threshold|difficulty|adversarial|all> [flags]
    crowdconf simulate [flags]
    crowdconf aggregate RESPONSES_CSV [flags]

Flags: --config PATH, --seed N, --out DIR, --strategy NAME, --emit-plot-data,
--jobs N.  Flags override values from the config file.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .aggregation import Strategy
from .core import Config, load_config
from .experiments import EXPERIMENTS, ExperimentSummary, run_experiment, write_plot_data, write_summary_csv
from .orchestrator import fuse_responses, initial_records, run_session, update_consensus_records, write_decisions_csv
from .simulation import build_world, write_world_csv

STRATEGY_CHOICES = [s.value for s in Strategy]


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file of config fields")
    common.add_argument("--seed", type=int, help="base seed (overrides the config file)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    common.add_argument("--strategy", choices=STRATEGY_CHOICES, default="conf")
    common.add_argument("--emit-plot-data", action="store_true", help="also write per-run long-format CSVs")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="crowdconf", description="Crowdsourced binary label aggregation.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    exp = sub.add_parser("experiment", parents=[common], help="run a parameter sweep")
    exp.add_argument("name", choices=[*EXPERIMENTS, "all"])
    sub.add_parser("simulate", parents=[common], help="run one simulated session")
    agg = sub.add_parser("aggregate", parents=[common], help="fuse labels from a responses CSV")
    agg.add_argument("responses", type=Path, help="CSV with columns task_id, worker_id, label")
    return parser


def _print_summary(summary: ExperimentSummary) -> None:
    print(f"[{summary.experiment}]")
    print(f"{'value':>10}  {'strategy':<9} {'acc':>7} {'acc_sd':>7} {'cost':>8}")
    for r in summary.rows:
        print(f"{r.swept_value:>10g}  {r.strategy:<9} {r.acc_mean:7.4f} {r.acc_var ** 0.5:7.4f} {r.cost_mean:8.3f}")


def cmd_experiment(name: str, config: Config, out: Path, emit_plot_data: bool = False, jobs: int = 1) -> list[Path]:
    names = EXPERIMENTS if name == "all" else (name,)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summaries = []
    for n in names:
        summary = run_experiment(n, config, jobs=jobs)
        summaries.append(summary)
        written.append(write_summary_csv(summary, out / f"summary_{n}.csv"))
        if emit_plot_data:
            written.append(write_plot_data(summary, out / f"plot_{n}.csv"))
        _print_summary(summary)
    written.append(write_summary_csv(summaries, out / "summary.csv"))
    return written


def cmd_simulate(config: Config, strategy: Strategy, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    world = build_world(config, config.seed)
    log = run_session(world, strategy, config, config.seed)
    paths = [write_decisions_csv(log, world, out / "decisions.csv"), *write_world_csv(world, out)]
    print(f"strategy={strategy.display} questions={len(log.decisions)} "
          f"accuracy={log.accuracy:.4f} mean_cost={log.mean_cost:.4f}")
    return paths


def read_responses(path: Path) -> list[tuple[str, list[tuple[str, int]]]]:
    """Group ``task_id, worker_id, label`` rows by task, in first-seen order."""
    tasks: dict[str, list[tuple[str, int]]] = {}
    bad = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["task_id", "worker_id", "label"]:
            raise ValueError(f"{path}: header must be task_id,worker_id,label")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3 or not row[0].strip() or not row[1].strip() or row[2].strip() not in ("0", "1"):
                bad.append(lineno)
                continue
            task, worker, label = (x.strip() for x in row)
            answers = tasks.setdefault(task, [])
            if any(w == worker for w, _ in answers):
                bad.append(lineno)
                continue
            answers.append((worker, int(label)))
    if bad:
        raise ValueError(f"{path}: malformed rows at lines {', '.join(map(str, bad))}")
    return list(tasks.items())


def cmd_aggregate(responses: Path, strategy: Strategy, config: Config, out: Path) -> Path:
    tasks = read_responses(responses)
    workers = sorted({w for _, answers in tasks for w, _ in answers})
    records = initial_records(workers, [], config)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "labels.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task_id", "label", "confidence"])
        for task, answers in tasks:
            try:
                label, conf = fuse_responses(strategy, answers, records, config)
            except ValueError as exc:
                raise ValueError(f"task {task}: {exc}") from None
            writer.writerow([task, label, "" if conf is None else f"{conf:.9g}"])
            records = update_consensus_records(strategy, records, answers, label, conf)
    return path


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config, seed=args.seed)
        strategy = Strategy(args.strategy)
        if args.command == "experiment":
            paths = cmd_experiment(args.name, config, args.out, args.emit_plot_data, args.jobs)
        elif args.command == "simulate":
            paths = cmd_simulate(config, strategy, args.out)
        else:
            paths = [cmd_aggregate(args.responses, strategy, config, args.out)]
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
