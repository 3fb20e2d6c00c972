"""Acceptance criteria at full scale; one PASS/FAIL line per criterion.

Run standalone with ``python tests/test_acceptance.py`` or through pytest.
"""

import sys

import pytest

from noisy_bai.criteria import ACCEPTANCE_ORDER, reproduce

# wall-clock limits in seconds
LIMITS = {
    "zero-error-codes": 1,
    "combinatorics": 10,
    "spectral": 1,
    "wrapper-identities": 300,
    "pse-decomposition": 300,
    "delta-correctness": 600,
    "case1-inflation": 120,
    "nonidentifiability": 1,
    "concentration": 300,
}


@pytest.mark.parametrize("criterion", ACCEPTANCE_ORDER)
def test_acceptance(criterion, capsys):
    res = reproduce(criterion)
    within = res.seconds < LIMITS[criterion]
    with capsys.disabled():
        print(f"\n{res.line()}{'' if within else f' [over {LIMITS[criterion]}s limit]'}")
    assert res.passed, res.detail
    assert within, f"took {res.seconds:.1f}s, limit {LIMITS[criterion]}s"


if __name__ == "__main__":
    ok = True
    for cid in ACCEPTANCE_ORDER:
        r = reproduce(cid)
        print(r.line(), flush=True)
        ok = ok and r.passed and r.seconds < LIMITS[cid]
    sys.exit(0 if ok else 1)
