"""Regression lock on catalog outputs.

The frozen values were first checked against independent oracles and
analytic truths elsewhere in the suite; this file only guards against
unintended drift. Regenerate with ``tests/frozen/regenerate.py``.
"""

import json
import sys
from pathlib import Path

import pytest

FROZEN = Path(__file__).parent / "frozen"
sys.path.insert(0, str(FROZEN))

from regenerate import snapshot  # noqa: E402


@pytest.fixture(scope="module")
def current():
    return snapshot()


@pytest.mark.parametrize("name", sorted(json.loads((FROZEN / "scenarios.json").read_text())))
def test_catalog_snapshot(current, name):
    want = json.loads((FROZEN / "scenarios.json").read_text())[name]
    got = current[name]
    assert set(got) == set(want)
    for key, value in want.items():
        assert got[key] == pytest.approx(value, rel=1e-9, abs=1e-9), key
