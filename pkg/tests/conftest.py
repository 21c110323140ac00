"""Shared fixtures and the acceptance summary hook."""

from __future__ import annotations

import re
from pathlib import Path

import pytest

from mipcert import Certificate, read_certificate

DATA_DIR = Path(__file__).parent / "data"

GOLDEN_NAMES = ("small_range", "rounding_chain", "split_infeasible")


def load_golden(name: str) -> Certificate:
    with open(DATA_DIR / f"{name}.crt", encoding="utf-8") as handle:
        return read_certificate(handle)


def golden_text(name: str) -> str:
    return (DATA_DIR / f"{name}.crt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture()
def small_range() -> Certificate:
    return load_golden("small_range")


@pytest.fixture()
def rounding_chain() -> Certificate:
    return load_golden("rounding_chain")


@pytest.fixture()
def split_infeasible() -> Certificate:
    return load_golden("split_infeasible")


_CRITERION_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    """Print one pass/fail line per acceptance criterion that ran."""
    outcomes: dict[int, str] = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, ()):
            nodeid = getattr(report, "nodeid", "")
            match = _CRITERION_PATTERN.search(nodeid)
            if match:
                number = int(match.group(1))
                if outcomes.get(number) != "FAIL":
                    outcomes[number] = label
    if not outcomes:
        return
    from test_acceptance import CRITERIA

    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(outcomes):
        summary = CRITERIA.get(number, "")
        terminalreporter.write_line(f"[{outcomes[number]}] criterion {number}: {summary}")
