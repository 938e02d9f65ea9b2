"""Shared fixtures plus the per-criterion summary printed after the run."""

from __future__ import annotations

import time

import pytest

from primseq.corpus import generate_corpus
from primseq.evaluation import DEFAULT_EVAL_C
from primseq.learn import TrainConfig, train

_acceptance_lines: dict[str, str] = {}


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    """Register one acceptance line; the summary hook prints them in order."""
    verdict = "PASS" if passed else "FAIL"
    _acceptance_lines[name] = f"{verdict}  {detail}" if detail else verdict


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, line in _acceptance_lines.items():
        terminalreporter.write_line(f"[{name}] {line}")


@pytest.fixture(scope="session")
def corpus():
    """The default deterministic demonstration corpus."""
    return generate_corpus()


@pytest.fixture(scope="session")
def eval_config():
    """Training configuration used for every reported experiment."""
    return TrainConfig(C=DEFAULT_EVAL_C, seed=0)


@pytest.fixture(scope="session")
def trained(corpus, eval_config):
    """Full model trained once per session; yields (report, wall seconds)."""
    start = time.perf_counter()
    report = train(corpus, eval_config)
    return report, time.perf_counter() - start


@pytest.fixture(scope="session")
def weights(trained):
    return trained[0].weights
