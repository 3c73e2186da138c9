import re
import time
from dataclasses import dataclass

import pytest

from ifbench import ScriptedAgent, generate_all, run_episode, solve_optimal

BENCH_SEED = 17

_acceptance_outcomes: dict[str, str] = {}


@dataclass
class OracleRun:
    records: dict  # instance id -> (instance, plan, episode record)
    elapsed: float


@pytest.fixture(scope="session")
def bench144():
    """All nine families x 16 instances at the default seed."""
    return generate_all(BENCH_SEED)


@pytest.fixture(scope="session")
def oracle_records(bench144):
    """Scripted replay of the optimal plan for every generated instance."""
    started = time.perf_counter()
    records = {}
    for family, instances in bench144.items():
        for instance in instances:
            plan = solve_optimal(instance)
            agent = ScriptedAgent.from_plan(instance, plan)
            records[instance.id] = (instance, plan,
                                    run_episode(instance, agent))
    return OracleRun(records, time.perf_counter() - started)


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = re.search(r"test_acceptance\.py::test_criterion_(\w+)", report.nodeid)
    if match:
        _acceptance_outcomes[match.group(1)] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    def key(item):
        head = item[0].split("_")[0]
        return (0, int(head)) if head.isdigit() else (1, 0)
    for name, outcome in sorted(_acceptance_outcomes.items(), key=key):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper())
        terminalreporter.write_line(f"criterion {name.replace('_', ' ')}: {status}")
