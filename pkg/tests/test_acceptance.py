"""The nine acceptance criteria, each at its stated tolerance.

Run with `pytest -s tests/test_acceptance.py` to see one PASS/FAIL line per
criterion; the per-check breakdown is printed on failure.
"""
import pytest

from fano_continuity.acceptance import CRITERIA, run_criterion

_results = {}


def _result(n):
    if n not in _results:
        _results[n] = run_criterion(n, seed=0)
    return _results[n]


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    r = _result(n)
    print(r.line())
    assert r.passed, r.details()


def test_summary(capsys):
    lines = [_result(n).line() for n in sorted(CRITERIA)]
    with capsys.disabled():
        print()
        for line in lines:
            print(line)
    assert len(lines) == 9
