"""Benchmark scoring: outcome classification, Played / Quality / GSR /
clemscore, exploration accounting, and failure-phase statistics.

Quality's denominator is the non-aborted (played) episodes; GSR is averaged
per episode over all episodes, aborted ones included, on their final state.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .interpreter import PHASES, EpisodeRecord, TurnRecord

_FAILURE_PHASES = ("format-fail", "parse-fail", "resolution-fail",
                   "precondition-fail")


class EmptyInput(Exception):
    pass


@dataclass
class EpisodeSummary:
    """What aggregation needs from one episode (matches the JSONL summary)."""

    instance_id: str
    family: str
    outcome: str
    turns: int
    goals_total: int
    goals_achieved: int
    phase_counts: Mapping[str, int]
    grounded_turns: int = 0
    epistemic_turns: int = 0
    pragmatic_turns: int = 0
    optimal_length: int | None = None

    @staticmethod
    def from_record(record: EpisodeRecord) -> "EpisodeSummary":
        counts = {p: 0 for p in PHASES}
        for turn in record.turns:
            counts[turn.phase_outcome] += 1
        return EpisodeSummary(
            instance_id=record.instance_id,
            family=record.family,
            outcome=record.outcome,
            turns=len(record.turns),
            goals_total=record.goals_total,
            goals_achieved=len(record.final_goals_achieved),
            phase_counts=counts,
            grounded_turns=record.grounded_turns,
            epistemic_turns=record.epistemic_turns,
            pragmatic_turns=record.pragmatic_turns,
            optimal_length=record.optimal_length,
        )

    @staticmethod
    def from_json(summary: Mapping) -> "EpisodeSummary":
        return EpisodeSummary(
            instance_id=summary["instance_id"],
            family=summary["family"],
            outcome=summary["outcome"],
            turns=summary["turns"],
            goals_total=summary["goals_total"],
            goals_achieved=len(summary["goals_achieved"]),
            phase_counts=dict(summary["phase_counts"]),
            grounded_turns=summary.get("grounded_turns", 0),
            epistemic_turns=summary.get("epistemic_turns", 0),
            pragmatic_turns=summary.get("pragmatic_turns", 0),
            optimal_length=summary.get("optimal_length"),
        )


@dataclass
class ExperimentScores:
    experiment: str
    n_episodes: int
    played_pct: float
    quality: float
    gsr: float
    mean_turns: float
    mean_optimal_turns: float | None
    phase_failure_histogram: dict[str, int]
    successful_turns: int
    epistemic_action_pct: float


def goal_success_rate(achieved: int, total: int) -> float:
    """|achieved goals| / |goals| x 100."""
    if total < 1 or not 0 <= achieved <= total:
        raise ValueError(f"bad goal counts {achieved}/{total}")
    return achieved / total * 100.0


def classify_outcome(record: EpisodeRecord) -> str:
    """success / lost / aborted, recomputed from the turns and final state."""
    if record.turns:
        last = record.turns[-1]
        if (last.phase_outcome == "success" and last.grounded
                and last.grounded.action == "done"):
            if len(record.final_goals_achieved) == record.goals_total:
                return "success"
            return "lost"
    return "aborted"


def is_played(outcome: str) -> bool:
    return outcome in ("success", "lost")


def aggregate(episodes: Iterable[EpisodeSummary],
              experiment: str | None = None) -> ExperimentScores:
    """Scores over one experiment family's episodes."""
    episodes = list(episodes)
    if not episodes:
        raise EmptyInput("no episodes to aggregate")
    experiment = experiment or episodes[0].family
    total = len(episodes)
    played = [e for e in episodes if is_played(e.outcome)]
    successes = [e for e in played if e.outcome == "success"]
    histogram = {p: 0 for p in _FAILURE_PHASES}
    successful_turns = 0
    grounded = epistemic = 0
    for e in episodes:
        for phase in _FAILURE_PHASES:
            histogram[phase] += e.phase_counts.get(phase, 0)
        successful_turns += e.phase_counts.get("success", 0)
        grounded += e.grounded_turns
        epistemic += e.epistemic_turns
    optimal = [e.optimal_length for e in episodes if e.optimal_length]
    return ExperimentScores(
        experiment=experiment,
        n_episodes=total,
        played_pct=len(played) / total * 100.0,
        quality=(len(successes) / len(played) * 100.0) if played else 0.0,
        gsr=sum(goal_success_rate(e.goals_achieved, e.goals_total)
                for e in episodes) / total,
        mean_turns=sum(e.turns for e in episodes) / total,
        mean_optimal_turns=(sum(optimal) / len(optimal)) if optimal else None,
        phase_failure_histogram=histogram,
        successful_turns=successful_turns,
        epistemic_action_pct=(epistemic / grounded * 100.0) if grounded else 0.0,
    )


def combine_clemscore(macro_quality: float, macro_played: float) -> float:
    return macro_quality * macro_played / 100.0


def clemscore(per_experiment: Iterable[ExperimentScores]) -> float:
    """Macro-average quality x macro-average played proportion."""
    scores = list(per_experiment)
    if not scores:
        raise EmptyInput("no experiment scores")
    macro_quality = sum(s.quality for s in scores) / len(scores)
    macro_played = sum(s.played_pct for s in scores) / len(scores)
    return combine_clemscore(macro_quality, macro_played)


def macro_gsr(per_experiment: Iterable[ExperimentScores]) -> float:
    scores = list(per_experiment)
    return sum(s.gsr for s in scores) / len(scores)


def label_action(turn: TurnRecord, actions_by_verb: Mapping) -> dict:
    """Epistemic/pragmatic flags for a grounded turn, straight from the
    action catalogue, with the turn's epistemic gain attached."""
    if turn.grounded is None:
        raise ValueError("turn was not grounded")
    flags = actions_by_verb[turn.grounded.action].flags
    return {"epistemic": flags.epistemic, "pragmatic": flags.pragmatic,
            "epistemic_gain": turn.epistemic_gain}


# -- reporting ----------------------------------------------------------------

def paper_pct(value: float) -> str:
    """Percentage formatted the way the reference tables truncate: one
    decimal, rounded toward zero (93.75 -> '93.7')."""
    truncated = math.floor(value * 10 + 1e-9) / 10
    return f"{truncated:.1f}"


def scores_to_json(agent: str, per_experiment: list[ExperimentScores]) -> dict:
    scores = sorted(per_experiment, key=lambda s: s.experiment)
    macro_quality = sum(s.quality for s in scores) / len(scores)
    macro_played = sum(s.played_pct for s in scores) / len(scores)
    return {
        "agent": agent,
        "clemscore": combine_clemscore(macro_quality, macro_played),
        "macro_quality": macro_quality,
        "macro_played": macro_played,
        "macro_gsr": macro_gsr(scores),
        "experiments": {
            s.experiment: {
                "n_episodes": s.n_episodes,
                "played_pct": s.played_pct,
                "quality": s.quality,
                "gsr": s.gsr,
                "mean_turns": s.mean_turns,
                "mean_optimal_turns": s.mean_optimal_turns,
                "phase_failure_histogram": s.phase_failure_histogram,
                "successful_turns": s.successful_turns,
                "epistemic_action_pct": s.epistemic_action_pct,
            } for s in scores
        },
    }


def write_scores(path: str | Path, agent: str,
                 per_experiment: list[ExperimentScores]) -> None:
    payload = scores_to_json(agent, per_experiment)
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def scores_to_csv(rows: list[dict]) -> str:
    """One row per (agent, experiment)."""
    buf = io.StringIO()
    fields = ["agent", "experiment", "n_episodes", "played_pct", "quality",
              "gsr", "mean_turns", "mean_optimal_turns", "epistemic_action_pct"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k) for k in fields})
    return buf.getvalue()


def format_overview(rows: list[dict]) -> str:
    """Benchmark overview: one line per agent (clemscore ranking)."""
    header = f"{'agent':<24} {'clemscore':>9} {'quality':>8} {'played':>7} {'goal rate':>9}"
    lines = [header, "-" * len(header)]
    for row in sorted(rows, key=lambda r: -r["clemscore"]):
        lines.append(f"{row['agent']:<24} {row['clemscore']:>9.1f} "
                     f"{row['macro_quality']:>8.1f} {row['macro_played']:>7.1f} "
                     f"{row['macro_gsr']:>9.1f}")
    return "\n".join(lines)


def format_grid(per_agent: dict[str, list[ExperimentScores]]) -> str:
    """Per-experiment grid: quality/played cell per (experiment, agent)."""
    agents = sorted(per_agent)
    experiments = sorted({s.experiment for scores in per_agent.values()
                          for s in scores})
    width = max(12, max((len(a) for a in agents), default=12) + 1)
    header = f"{'experiment':<18}" + "".join(f"{a:>{width}}" for a in agents)
    lines = [header, "-" * len(header)]
    for experiment in experiments:
        cells = []
        for agent in agents:
            match = [s for s in per_agent[agent] if s.experiment == experiment]
            if match:
                cells.append(f"{paper_pct(match[0].quality)}/"
                             f"{paper_pct(match[0].played_pct)}")
            else:
                cells.append("-")
        lines.append(f"{experiment:<18}" + "".join(f"{c:>{width}}" for c in cells))
    return "\n".join(lines)
