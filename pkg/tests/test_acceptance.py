"""Full-scale acceptance criteria, one test per criterion.

Run standalone with ``python tests/test_acceptance.py`` to print only the
pass/fail lines; under pytest the same lines appear in the terminal summary.
"""

import os

import pytest

from rateless.verify import run_acceptance

NAMES = {
    1: "bec_repetition",
    2: "known_achievability",
    3: "martingales",
    4: "mixture_oracle",
    5: "redundancy",
    6: "universal_achievability",
    7: "randomized_wrapper",
    8: "converse",
    9: "joint_source_channel",
    10: "slepian_wolf",
    11: "complete_universal",
    12: "limited_feedback",
    13: "determinism",
}

RESULTS = {}
WORKERS = min(4, os.cpu_count() or 1)


@pytest.fixture(scope="module")
def results():
    if not RESULTS:
        for r in run_acceptance(workers=WORKERS):
            RESULTS[r.number] = r
    return RESULTS


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(NAMES), ids=lambda n: f"{n:02d}_{NAMES[n]}")
def test_criterion(results, number):
    r = results[number]
    assert r.passed, r.line()


if __name__ == "__main__":
    import sys

    outcome = run_acceptance(workers=WORKERS, echo=lambda r: print(r.line(), flush=True))
    sys.exit(0 if all(r.passed for r in outcome) else 1)
