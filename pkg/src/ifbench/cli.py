"""Command-line harness: instance generation, benchmark runs, interactive
play, planning, and report/graph export."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .agents import HeuristicAgent, HumanAgent, LlmAgent, LlmConfig, ScriptedAgent
from .generate import FAMILIES, INSTANCES_PER_FAMILY, GenerationExhausted, generate_family
from .instance import Instance, instance_to_dot, load_instances, save_instances
from .interpreter import TURN_LIMIT, Engine, run_episode, write_episode
from .metrics import (EpisodeSummary, ExperimentScores, aggregate,
                      format_grid, format_overview, scores_to_csv,
                      scores_to_json, write_scores)
from .planner import Unsolvable, solve_optimal

DEFAULT_SEED = 17


@dataclass
class RunConfig:
    instances: str
    agent: str
    out: str
    parallel: int = 1
    turn_limit: int = TURN_LIMIT
    families: tuple[str, ...] = ()
    endpoint: str | None = None
    model: str | None = None
    temperature: float = 0.0
    max_tokens: int = 128
    timeout: float = 30.0
    retries: int = 2
    dry_run: bool = False

    def __post_init__(self):
        if self.turn_limit < 1:
            raise ValueError("turn limit must be >= 1")


def _parse_families(value: str) -> tuple[str, ...]:
    if value in ("all", ""):
        return FAMILIES
    families = tuple(v.strip() for v in value.split(",") if v.strip())
    unknown = [f for f in families if f not in FAMILIES]
    if unknown:
        raise SystemExit(f"unknown families: {', '.join(unknown)}")
    return families


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        for family in _parse_families(args.families):
            instances = generate_family(args.seed, family, args.count)
            save_instances(instances, out / f"{family}.json", base_seed=args.seed)
            lengths = [i.optimal_length for i in instances]
            print(f"{family}: {len(instances)} instances, "
                  f"optimal length {min(lengths)}-{max(lengths)} "
                  f"(mean {sum(lengths) / len(lengths):.1f})")
    except GenerationExhausted as exc:
        print(f"generation exhausted for {exc}", file=sys.stderr)
        return 1
    return 0


def _load_instance_set(path: str, families: tuple[str, ...]) -> list[Instance]:
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    instances = []
    for f in files:
        instances.extend(load_instances(f))
    if families:
        instances = [i for i in instances if i.family in families]
    if not instances:
        raise SystemExit(f"no instances found under {path}")
    return instances


def _make_agent(kind: str, instance: Instance, config: RunConfig):
    if kind == "scripted":
        return ScriptedAgent.from_plan(instance, solve_optimal(instance))
    if kind == "heuristic":
        return HeuristicAgent(instance)
    if kind == "human":
        return HumanAgent()
    if kind == "llm":
        if not config.endpoint or not config.model:
            raise SystemExit("--endpoint and --model are required for --agent llm")
        return LlmAgent(LlmConfig(endpoint=config.endpoint, model=config.model,
                                  temperature=config.temperature,
                                  max_tokens=config.max_tokens,
                                  timeout=config.timeout,
                                  retries=config.retries))
    raise SystemExit(f"unknown agent {kind!r}")


def run_benchmark(config: RunConfig) -> tuple[int, dict]:
    """Run every instance, write transcripts and scores; returns (exit, scores)."""
    instances = _load_instance_set(config.instances, config.families)
    agent_name = config.model if config.agent == "llm" else config.agent
    agent_dir = Path(config.out) / agent_name.replace("/", "_")

    def run_one(instance: Instance):
        agent = _make_agent(config.agent, instance, config)
        record = run_episode(instance, agent, config.turn_limit)
        family_dir = agent_dir / instance.family
        family_dir.mkdir(parents=True, exist_ok=True)
        write_episode(record, family_dir / f"{instance.id}.jsonl")
        return record

    if config.parallel > 1 and config.agent != "human":
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            records = list(pool.map(run_one, instances))
    else:
        records = [run_one(i) for i in instances]

    summaries = [EpisodeSummary.from_record(r) for r in records]
    if config.dry_run:
        summaries = [s for s in summaries if s.outcome != "aborted-agent"]
    per_family: dict[str, list[EpisodeSummary]] = {}
    for summary in sorted(summaries, key=lambda s: s.instance_id):
        per_family.setdefault(summary.family, []).append(summary)
    scores = [aggregate(group, family)
              for family, group in sorted(per_family.items())]
    if not scores:
        print("no episodes produced scores", file=sys.stderr)
        return 2, {}
    agent_dir.mkdir(parents=True, exist_ok=True)
    write_scores(agent_dir / "scores.json", agent_name, scores)
    rows = [{"agent": agent_name, "experiment": s.experiment,
             "n_episodes": s.n_episodes, "played_pct": s.played_pct,
             "quality": s.quality, "gsr": s.gsr, "mean_turns": s.mean_turns,
             "mean_optimal_turns": s.mean_optimal_turns,
             "epistemic_action_pct": s.epistemic_action_pct} for s in scores]
    (agent_dir / "scores.csv").write_text(scores_to_csv(rows), encoding="utf-8")

    payload = scores_to_json(agent_name, scores)
    print(f"{agent_name}: clemscore {payload['clemscore']:.1f} "
          f"(quality {payload['macro_quality']:.1f}, "
          f"played {payload['macro_played']:.1f}, "
          f"goal rate {payload['macro_gsr']:.1f})")
    all_agent_aborted = all(r.outcome == "aborted-agent" for r in records)
    return (3 if all_agent_aborted else 0), payload


def cmd_run(args) -> int:
    config = RunConfig(
        instances=args.instances, agent=args.agent, out=args.out,
        parallel=args.parallel, turn_limit=args.turn_limit,
        families=_parse_families(args.families), endpoint=args.endpoint,
        model=args.model, temperature=args.temperature,
        max_tokens=args.max_tokens, timeout=args.timeout,
        retries=args.retries, dry_run=args.dry_run)
    code, _ = run_benchmark(config)
    return code


def _pick_instance(args) -> Instance:
    instances = _load_instance_set(args.instances, ())
    if args.id:
        matches = [i for i in instances if i.id == args.id]
        if not matches:
            raise SystemExit(f"no instance with id {args.id}")
        return matches[0]
    return instances[args.index]


def cmd_play(args) -> int:
    instance = _pick_instance(args)
    record = run_episode(instance, HumanAgent(), args.turn_limit)
    gsr = (len(record.final_goals_achieved) / record.goals_total * 100
           if record.goals_total else 0.0)
    print(f"--- {record.outcome} after {len(record.turns)} turns; "
          f"goal success rate {gsr:.0f} ---")
    return 0


def cmd_plan(args) -> int:
    instance = _pick_instance(args)
    try:
        result = solve_optimal(instance, budget=args.budget)
    except Unsolvable:
        print(f"{instance.id} is unsolvable", file=sys.stderr)
        return 1
    engine = Engine(instance)
    print(json.dumps({
        "instance_id": instance.id,
        "actions": [engine.parser.render(a, engine.world)
                    for a in result.actions],
        "length": result.length,
        "states_expanded": result.states_expanded,
    }, indent=1, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    results = Path(args.results)
    score_files = sorted(results.glob("*/scores.json"))
    if not score_files:
        print(f"no scores.json under {results}", file=sys.stderr)
        return 1
    overview_rows = []
    per_agent: dict[str, list[ExperimentScores]] = {}
    for path in score_files:
        payload = json.loads(path.read_text(encoding="utf-8"))
        overview_rows.append({"agent": payload["agent"],
                              "clemscore": payload["clemscore"],
                              "macro_quality": payload["macro_quality"],
                              "macro_played": payload["macro_played"],
                              "macro_gsr": payload["macro_gsr"]})
        per_agent[payload["agent"]] = [
            ExperimentScores(experiment=name, n_episodes=v["n_episodes"],
                             played_pct=v["played_pct"], quality=v["quality"],
                             gsr=v["gsr"], mean_turns=v["mean_turns"],
                             mean_optimal_turns=v["mean_optimal_turns"],
                             phase_failure_histogram=v["phase_failure_histogram"],
                             successful_turns=v["successful_turns"],
                             epistemic_action_pct=v["epistemic_action_pct"])
            for name, v in payload["experiments"].items()]
    print(format_overview(overview_rows))
    print()
    print(format_grid(per_agent))

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        turns_rows = ["agent,experiment,mean_turns,mean_optimal_turns"]
        for agent in sorted(per_agent):
            for s in sorted(per_agent[agent], key=lambda s: s.experiment):
                optimal = "" if s.mean_optimal_turns is None else f"{s.mean_optimal_turns:.4f}"
                turns_rows.append(f"{agent},{s.experiment},{s.mean_turns:.4f},{optimal}")
        (out / "turns.csv").write_text("\n".join(turns_rows) + "\n",
                                       encoding="utf-8")
        if args.instances:
            graph_dir = out / "graphs"
            graph_dir.mkdir(exist_ok=True)
            for instance in _load_instance_set(args.instances, ()):
                (graph_dir / f"{instance.id}.dot").write_text(
                    instance_to_dot(instance), encoding="utf-8")
        print(f"\nreport artifacts written to {out}")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifbench",
        description="Deterministic interactive-fiction benchmark engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate instance files")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--families", default="all")
    p.add_argument("--count", type=int, default=INSTANCES_PER_FAMILY)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run a benchmark")
    p.add_argument("--instances", required=True)
    p.add_argument("--agent", required=True,
                   choices=["scripted", "heuristic", "human", "llm"])
    p.add_argument("--out", required=True)
    p.add_argument("--families", default="all")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--turn-limit", type=int, default=TURN_LIMIT)
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-tokens", type=int, default=128)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--dry-run", action="store_true",
                   help="exclude agent-unreachable episodes from scoring")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("play", help="play one instance interactively")
    p.add_argument("--instances", required=True)
    p.add_argument("--id")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--turn-limit", type=int, default=TURN_LIMIT)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("plan", help="print the optimal plan for an instance")
    p.add_argument("--instances", required=True)
    p.add_argument("--id")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--budget", type=int, default=5_000_000)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("report", help="print score tables, export graphs/CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--instances")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
