"""Command-line front end.

    buildmarines run --iterations 5 --seed 7
    buildmarines sweep --iterations 1..10 --seed 7 --out results.csv
    buildmarines baseline --seed 0 --episodes 20
    buildmarines oracle --horizon 18 --macro-period 3 --state start.json

Resolved config and seed go to stderr; results go to stdout or ``--out``.
Wall-clock times are left out of result files unless ``--timing`` is given,
so identical invocations write identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
from pathlib import Path
from typing import IO, Iterable, Sequence

from . import oracle, planner, sim
from .planner import EpisodeResult
from .sim import ConfigError, GameConfig

CSV_HEADER = ("iterations", "score", "seed", "wall_time_ms")


class CLIError(Exception):
    pass


def load_config(path: str | Path | None) -> GameConfig:
    """Parse a flat JSON object of GameConfig fields; absent keys keep defaults."""
    if path is None:
        return GameConfig()
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("<file>", f"{path}: expected a JSON object")
    return GameConfig.from_mapping(data)


def parse_iterations(text: str) -> list[int]:
    """``"5"`` -> [5]; ``"1..10"`` -> [1, ..., 10]."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad iteration count {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"iteration range must satisfy 1 <= lo <= hi, got {text!r}")
    return list(range(lo, hi + 1))


def _ms(result: EpisodeResult, timing: bool) -> str:
    return str(round(result.wall_time * 1000)) if timing else ""


def emit_sweep_csv(results: Sequence[EpisodeResult], destination: IO[str], timing: bool = False) -> None:
    if not results:
        raise ValueError("no results to write")
    writer = csv.writer(destination, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for res in sorted(results, key=lambda r: r.iterations_per_step):
        writer.writerow([res.iterations_per_step, res.final_score, res.seed, _ms(res, timing)])


def result_to_json(result: EpisodeResult, config: GameConfig, timing: bool = False) -> dict:
    out = {
        "config": config.to_dict(),
        "seed": result.seed,
        "iterations": result.iterations_per_step,
        "tree_reuse": result.tree_reuse,
        "score": result.final_score,
        "trace": [{"tick": tick, "action": action.label} for tick, action in result.action_trace],
    }
    if timing:
        out["wall_time_ms"] = round(result.wall_time * 1000)
    return out


def trace_from_json(entries: Iterable[dict]) -> list[tuple[int, sim.ActionKind]]:
    return [(int(e["tick"]), sim.ActionKind.from_label(e["action"])) for e in entries]


def _emit_results(results: list[EpisodeResult], config: GameConfig, args, single: bool) -> None:
    buf = io.StringIO()
    if args.format == "csv":
        emit_sweep_csv(results, buf, args.timing)
    else:
        payload = [result_to_json(r, config, args.timing) for r in results]
        json.dump(payload[0] if single else payload, buf, indent=1)
        buf.write("\n")
    _write(buf.getvalue(), args.out)


def _write(text: str, out: str | None) -> None:
    if out is None:
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CLIError(f"cannot write {out}: {exc.strerror}") from None


def _provenance(config: GameConfig, seed: int | None) -> None:
    print(f"config: {json.dumps(config.to_dict(), sort_keys=True)}", file=sys.stderr)
    if seed is not None:
        print(f"seed: {seed}", file=sys.stderr)


def _cmd_run(args, config: GameConfig) -> None:
    if len(args.iterations) != 1:
        raise CLIError("run takes a single iteration count; use sweep for ranges")
    res = planner.run_episode(config, args.iterations[0], args.seed, tree_reuse=not args.no_tree_reuse)
    print(f"wall time: {res.wall_time:.2f}s", file=sys.stderr)
    _emit_results([res], config, args, single=True)
    print(res.final_score)


def _cmd_sweep(args, config: GameConfig) -> None:
    results = planner.run_sweep(
        config, args.iterations, args.seed, tree_reuse=not args.no_tree_reuse, jobs=args.jobs
    )
    for res in results:
        print(f"iterations={res.iterations_per_step} score={res.final_score} "
              f"wall={res.wall_time:.2f}s", file=sys.stderr)
    _emit_results(results, config, args, single=False)
    if args.out is None:
        buf = io.StringIO()
        emit_sweep_csv(results, buf)
        sys.stdout.write(buf.getvalue())


def _cmd_baseline(args, config: GameConfig) -> None:
    results = [planner.run_random_baseline(config, args.seed + i) for i in range(args.episodes)]
    _emit_results(results, config, args, single=args.episodes == 1)
    scores = [r.final_score for r in results]
    print(f"scores: {scores}", file=sys.stderr)
    print(statistics.median(scores))


def _cmd_oracle(args, config: GameConfig) -> None:
    start = sim.new_game(config)
    if args.state:
        start = sim.GameState.from_mapping(json.loads(Path(args.state).read_text()))
    query = oracle.OracleQuery(start, args.horizon, args.macro_period)
    best = oracle.exhaustive_best(query, config, node_budget=args.node_budget)
    labels = [a.label for a in best.best_sequence]
    if args.out is not None:
        payload = {
            "config": config.to_dict(), "start_state": start.to_dict(),
            "horizon_ticks": args.horizon, "macro_period": args.macro_period,
            "best_score": best.best_score, "best_sequence": labels,
        }
        _write(json.dumps(payload, indent=1) + "\n", args.out)
    print(best.best_score)
    print(",".join(labels))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of GameConfig overrides")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write results to this file")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--timing", action="store_true", help="record wall-clock times in results")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--iterations", type=parse_iterations, default=[1],
                        help="iterations per decision: N or LO..HI")
    search.add_argument("--no-tree-reuse", action="store_true")

    parser = argparse.ArgumentParser(prog="buildmarines", description=__doc__.split("\n")[0] or None)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common, search], help="one episode")
    sweep = sub.add_parser("sweep", parents=[common, search], help="one episode per iteration limit")
    sweep.add_argument("--jobs", type=int, default=1)
    base = sub.add_parser("baseline", parents=[common], help="uniform random play")
    base.add_argument("--episodes", type=int, default=1, help="seeds SEED..SEED+N-1")
    orc = sub.add_parser("oracle", parents=[common], help="exhaustive best sequence")
    orc.add_argument("--horizon", type=int, required=True, help="horizon in ticks")
    orc.add_argument("--macro-period", type=int, default=1)
    orc.add_argument("--state", help="JSON GameState to start from (default: new game)")
    orc.add_argument("--node-budget", type=int, default=oracle.DEFAULT_NODE_BUDGET)
    return parser


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "baseline": _cmd_baseline, "oracle": _cmd_oracle}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        _provenance(config, args.seed)
        COMMANDS[args.command](args, config)
    except (ConfigError, CLIError, ValueError, OSError, oracle.BudgetExceededError) as exc:
        print(f"buildmarines: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
