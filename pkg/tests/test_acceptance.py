"""Acceptance criteria 1-7; each prints one PASS/FAIL line in the terminal summary."""

import pytest

from glvp import suite

CRITERIA = [
    (1, suite.nutku_golden, 1.0),
    (2, suite.darboux_golden, 1.0),
    (3, suite.rank_law, 30.0),
    (4, suite.jacobi, None),
    (5, suite.transformation_coherence, None),
    (6, suite.conservation, 5.0),
    (7, suite.flow_equivalence, None),
]


@pytest.mark.parametrize("number,check,time_limit", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, check, time_limit, acceptance_log):
    result = check()
    in_time = time_limit is None or result.elapsed < time_limit
    ok = result.passed and in_time
    detail = result.line()
    if not in_time:
        detail += f" (time limit {time_limit}s exceeded)"
    acceptance_log((number, ok, detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    if result.notes:
        print(f"criterion {number} diagnostics: {result.notes}")
    assert result.passed, result.failures[:5]
    assert in_time, f"took {result.elapsed:.2f}s, limit {time_limit}s"
