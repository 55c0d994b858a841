"""Acceptance criteria 1-10; each prints one PASS/FAIL line."""

import os
import subprocess
import sys
import time

import pytest

from cornerpencil import acceptance

from conftest import ACCEPTANCE_LINES


def _report(result):
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return result


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number):
    result = _report(acceptance.CRITERIA[number - 1]())
    assert result.passed, result.detail


def test_criterion_10_verify_command(tmp_path):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "cornerpencil", "verify", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=600,
                          env={**os.environ, "PYTHONHASHSEED": "0"})
    elapsed = time.perf_counter() - t0
    ok = proc.returncode == 0 and elapsed < 180
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    detail = f"exit code {proc.returncode}, {summary}"
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion 10: verify command end to end "
            f"({elapsed:.2f}s / 180s) {detail}")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, detail
