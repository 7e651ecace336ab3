import math
import os
from pathlib import Path

import pytest

import hardneg

DATA = Path(os.environ.get("HARDNEG_TEST_DATA", Path(__file__).resolve().parents[1] / "data"))


def test_levenshtein_and_tokens():
    assert hardneg.word_tokens("The Planes, parked.") == ["the", "planes", "parked"]
    assert hardneg.word_levenshtein("four planes", "six planes") == 1


def test_pair_stats():
    s = hardneg.pair_stats("a b c", "a b c d e")
    assert s["ld"] == 2
    assert s["len_delta"] == 2
    assert s["longer"] == "rejected"


def test_fixture_audit():
    r = hardneg.audit_file(DATA / "fixture_pairs.jsonl", "fixture")
    assert r["overall"]["count"] == 60
    assert r["overall"]["mean_ld"] == pytest.approx(413 / 60)


def test_categorize():
    assert hardneg.categorize("How many planes are visible in the image?") == "counting"


def test_dpo_loss():
    assert hardneg.dpo_loss(0.0, 0.0) == pytest.approx(math.log(2), abs=1e-12)
    assert hardneg.dpo_loss(2.0, 0.0, 0.1) == pytest.approx(0.598139, abs=1e-6)


def test_stats():
    assert hardneg.fleiss_kappa([[3, 0], [0, 3]]) == pytest.approx(1.0)
    assert hardneg.fleiss_kappa([[3, 0], [3, 0]]) is None
    assert hardneg.bootstrap_win_rate([1, 0], [1, 0], seed=1) == 0.0


def test_errors_surface():
    with pytest.raises(hardneg.HardnegError):
        hardneg.fleiss_kappa([[3, 0], [2, 0]])
