#!/usr/bin/env python3
"""Sanity experiment: replay every instance's optimal plan through the
interpreter and confirm the oracle agent scores a perfect benchmark.
Prints per-family optimal turn counts (useful as a difficulty profile)."""

import argparse
import sys

from ifbench import (ScriptedAgent, aggregate, clemscore, generate_all,
                     run_episode, solve_optimal)
from ifbench.metrics import EpisodeSummary


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--count", type=int, default=16)
    args = parser.parse_args()

    scores = []
    for family, instances in generate_all(args.seed, args.count).items():
        summaries = []
        lengths = []
        for inst in instances:
            plan = solve_optimal(inst)
            lengths.append(plan.length)
            record = run_episode(inst, ScriptedAgent.from_plan(inst, plan))
            if record.outcome != "success":
                print(f"FAIL: {inst.id} -> {record.outcome}")
                return 1
            summaries.append(EpisodeSummary.from_record(record))
        scores.append(aggregate(summaries, family))
        print(f"{family:<20} optimal turns "
              f"{min(lengths):>2}-{max(lengths):<2} "
              f"(mean {sum(lengths) / len(lengths):5.2f})")
    print(f"\noracle clemscore: {clemscore(scores):.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
