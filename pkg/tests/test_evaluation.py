import math

import pytest
from hypothesis import given, settings, strategies as st

from spparse.corpus import ParallelCorpus, make_pair
from spparse.evaluation import EvalRecord, evaluate, normalize_labels, split_dataset

GOLD = ("numeric", "math", "ceil", "arg")


def record_at(rank, k=10, tag=None):
    kbest = [("miss", str(i)) for i in range(k)]
    if rank is not None:
        kbest[rank - 1] = GOLD
    return EvalRecord(("q",), GOLD, kbest, tag, True, k)


def test_all_rank_one():
    s = evaluate([record_at(1) for _ in range(4)])
    assert s.acc_at_1 == s.acc_at_10 == s.mrr == 1.0


def test_mrr_example():
    s = evaluate([record_at(1), record_at(2), record_at(4)])
    assert abs(s.mrr - 0.58333) < 1e-5
    assert s.mrr == pytest.approx((1 + 1 / 2 + 1 / 4) / 3, abs=1e-12)
    assert s.acc_at_1 == pytest.approx(1 / 3)


def test_misses_count_zero_and_acc10_requires_k10():
    s = evaluate([record_at(None), record_at(2)])
    assert s.mrr == 0.25 and s.acc_at_10 == 0.5
    assert evaluate([record_at(1, k=5)]).acc_at_10 is None
    with pytest.raises(ValueError):
        evaluate([])


def test_normalization():
    assert normalize_labels(["2C", "a", "b", "</s>"]) == ("a", "b")
    assert normalize_labels(["nu", "meric</w>", "math</w>"], bpe=True) == ("numeric", "math")


def test_per_tag_and_output_formats():
    s = evaluate([record_at(1, tag="C"), record_at(3, tag="Py"), record_at(None, tag="Py")])
    assert set(s.per_tag) == {"C", "Py"}
    assert s.per_tag["Py"].mrr == pytest.approx(1 / 6)
    lines = s.to_lines()
    assert lines[0] == "n\t3"
    assert "Py:mrr\t" + repr(1 / 6) in lines
    assert "Acc@1" in s.to_table().splitlines()[0]


def independent_summary(ranks, k):
    n = len(ranks)
    acc1 = sum(r == 1 for r in ranks) / n
    acc10 = sum(r is not None and r <= 10 for r in ranks) / n
    mrr = sum(0 if r is None else 1 / r for r in ranks) / n
    return acc1, acc10, mrr


@settings(max_examples=300, deadline=None)
@given(st.lists(st.one_of(st.none(), st.integers(1, 15)), min_size=1, max_size=40))
def test_matches_independent_recomputation(ranks):
    s = evaluate([record_at(r, k=15) for r in ranks])
    a1, a10, mrr = independent_summary(ranks, 15)
    assert s.acc_at_1 == a1 and s.acc_at_10 == a10
    assert math.isclose(s.mrr, mrr, abs_tol=1e-12)
    assert 0 <= s.acc_at_1 <= s.mrr <= 1 and s.acc_at_1 <= s.acc_at_10


def corpus(n):
    return ParallelCorpus.from_pairs(make_pair([f"s{i}"], [f"t{i}"]) for i in range(n))


def test_split_examples():
    c = corpus(53)
    train, dev, test = split_dataset(c, (1, 0, 0))
    assert len(train) == 53 and len(dev) == len(test) == 0
    a = split_dataset(c, seed=4)
    assert a == split_dataset(c, seed=4)
    assert sorted(p.source_tokens for part in a for p in part.pairs) == sorted(
        p.source_tokens for p in c.pairs)
    for part, frac in zip(a, (0.8, 0.1, 0.1)):
        assert abs(len(part) - frac * 53) <= 1


@pytest.mark.parametrize("fractions", [(0.5, 0.5), (1.2, -0.1, -0.1), (0.5, 0.2, 0.2)])
def test_split_errors(fractions):
    with pytest.raises(ValueError):
        split_dataset(corpus(10), fractions)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 200), a=st.integers(0, 10), b=st.integers(0, 10), seed=st.integers(0, 99))
def test_split_partition(n, a, b, seed):
    c = a + b + 1
    fr = (a / (a + b + c), b / (a + b + c), c / (a + b + c))
    parts = split_dataset(corpus(n), fr, seed)
    assert sum(len(p) for p in parts) == n
    assert len({p for part in parts for p in part.pairs}) == n
    for part, f in zip(parts, fr):
        assert abs(len(part) - f * n) <= 1
