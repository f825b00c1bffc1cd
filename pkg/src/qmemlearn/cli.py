"""Command-line front end: identity checks, Weingarten tables, task runs and sweeps."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Sequence

from . import weingarten as wg
from .ensembles import Group
from .identities import CheckConfig, all_passed, check_identities
from .tasks import TaskKind, TaskSpec, get_learner, run_trials, sweep

CSV_COLUMNS = ("task", "learner", "n", "T", "trials", "successes", "rate", "ci_lo", "ci_hi", "copies", "seed")
_WG_LIMITS = {"u": wg.MAX_K_UNITARY, "o": wg.MAX_K_ORTHOGONAL, "sp": wg.MAX_K_ORTHOGONAL}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    task: str | None = None
    learner: str | None = None
    n_list: list[int] = field(default_factory=list)
    t_list: list[int] = field(default_factory=list)
    trials: int = 0
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    epsilon: float = 0.1
    m: int = 16
    group: str = "u"
    jobs: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        data["n_list"] = [int(v) for v in data.get("n_list", [])]
        data["t_list"] = [int(v) for v in data.get("t_list", [])]
        return cls(**data)

    def task_spec(self, n: int) -> TaskSpec:
        return TaskSpec(self.task, n, epsilon=self.epsilon, n_observables=self.m, group=Group(self.group))


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _fmt_type(ct: Sequence[int]) -> str:
    return "[" + ",".join(str(c) for c in ct) + "]"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmemlearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the identity and inequality checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=100_000, help="Monte Carlo draws per check")
    p.add_argument("--only", default="", help="comma-separated check letters, e.g. a,b,f")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("wg", help="print an exact Weingarten table")
    p.add_argument("--group", choices=("u", "o", "sp"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)

    def task_args(q):
        q.add_argument("--task", required=True, choices=[k.value for k in TaskKind])
        q.add_argument("--learner", required=True)
        q.add_argument("--trials", type=int, required=True)
        q.add_argument("--seed", type=int, required=True)
        q.add_argument("--epsilon", type=float, default=0.1)
        q.add_argument("--m", type=int, default=16, help="number of random observables")
        q.add_argument("--group", choices=("u", "o", "sp"), default="u")
        q.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        q.add_argument("--out", default=None)
        q.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("run", help="estimate one success rate")
    task_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)

    p = sub.add_parser("sweep", help="success rates over a grid of n and T")
    task_args(p)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--t-list", type=_int_list, required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "run":
        n_list, t_list = [args.n], [args.t]
    else:
        n_list, t_list = args.n_list, args.t_list
    return RunConfig(command=args.command, task=args.task, learner=args.learner, n_list=n_list, t_list=t_list,
                     trials=args.trials, seed=args.seed, out=args.out, format=args.format, epsilon=args.epsilon,
                     m=args.m, group=args.group, jobs=max(1, args.jobs))


def wg_rows(group: str, k: int, d: int) -> list[tuple[str, str]]:
    """``(type, value)`` rows; symplectic values are the signature-free ``(-1)^k Wg^O(type, -d)``."""
    if k < 1 or k > _WG_LIMITS[group]:
        raise UsageError(f"k must lie in 1..{_WG_LIMITS[group]} for group {group}")
    if d < 1 or (group == "sp" and d % 2):
        raise UsageError("d must be positive (and even for sp)")
    rows = []
    for ct in sorted(wg.partitions(k)):
        if group == "u":
            value = wg.wg_unitary(ct, d)
        elif group == "o":
            value = wg.wg_orthogonal(ct, d)
        else:
            value = wg.wg_symplectic_unsigned(ct, d)
        rows.append((_fmt_type(ct), str(value)))
    return rows


def write_rows(rows: list[dict], fmt: str, stream) -> None:
    if fmt == "csv":
        writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        for row in rows:
            stream.write(json.dumps(row) + "\n")


def _emit(cfg: RunConfig, rows: list[dict]) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            write_rows(rows, cfg.format, fh)
    else:
        write_rows(rows, cfg.format, sys.stdout)


def _run_tasks(cfg: RunConfig) -> int:
    get_learner(cfg.task, cfg.learner)
    if cfg.trials < 1:
        raise UsageError("--trials must be positive")
    if cfg.command == "run":
        summaries = [run_trials(cfg.task_spec(cfg.n_list[0]), cfg.learner, cfg.t_list[0], cfg.trials, cfg.seed,
                                jobs=cfg.jobs)]
    else:
        summaries = sweep(cfg.task_spec(cfg.n_list[0]), cfg.learner, cfg.t_list, cfg.trials, cfg.seed,
                          n_list=cfg.n_list, jobs=cfg.jobs)
    _emit(cfg, [s.row() for s in summaries])
    flagged = [r for s in summaries for r in s.records if r.flagged]
    for r in flagged[:5]:
        print(f"flagged trial {r.trial} at n={r.n}, T={r.T}: {r.flagged}", file=sys.stderr)
    return 1 if flagged else 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "verify":
            only = tuple(s.strip() for s in args.only.split(",") if s.strip())
            reports = check_identities(CheckConfig(seed=args.seed, mc_draws=args.draws, jobs=max(1, args.jobs),
                                                   only=only))
            for r in reports:
                print(r.line())
            failed = sum(r.status == "FAIL" for r in reports)
            print(f"{len(reports)} reports, {failed} failed")
            return 0 if all_passed(reports) else 1
        if args.command == "wg":
            for ct, value in wg_rows(args.group, args.k, args.d):
                print(f"{ct} {value}")
            return 0
        return _run_tasks(config_from_args(args))
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
