"""Acceptance criteria: one test per criterion plus the ``verify-all`` command.

Each test prints a single PASS/FAIL line with the measured quantities; the
summary test repeats them all at the end of the run.
"""

import json

import pytest

from opkant import cli
from opkant.acceptance import CRITERIA, run_criterion

_lines = {}


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA],
                         ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in CRITERIA])
def test_criterion(number, capsys):
    result = run_criterion(number)
    _lines[number] = result.line()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()


def test_summary(capsys):
    with capsys.disabled():
        print("\nacceptance summary")
        for number in sorted(_lines):
            print(_lines[number])
    assert len(_lines) == len(CRITERIA)
    assert all(line.startswith("[PASS]") for line in _lines.values())


def test_verify_all_command(tmp_path):
    assert cli.main(["verify-all", "--config", "cantor", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] == report["total"] == len(CRITERIA)
    rows = (tmp_path / "acceptance.csv").read_text().splitlines()
    assert len(rows) == len(CRITERIA) + 1
