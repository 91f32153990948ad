import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import brute_force_likelihood, random_table
from spparse.corpus import ParallelCorpus, make_pair
from spparse.lexical_model import (DEFAULT_FLOOR, NULL, TranslationTable, corpus_log_likelihood,
                                   sentence_likelihood, train_model1)


def corpus(*rows):
    return ParallelCorpus.from_pairs(make_pair(x.split(), z.split()) for x, z in rows)


HOUSE = corpus(("the house", "das haus"), ("house", "haus"))


def test_fixture_first_iteration():
    t, _ = train_model1(HOUSE, 1, use_null=False)
    assert t.lookup("the", "haus") == pytest.approx(0.25, abs=1e-12)
    assert t.lookup("house", "haus") == pytest.approx(0.75, abs=1e-12)


def test_fixture_second_iteration():
    t, _ = train_model1(HOUSE, 2, use_null=False)
    assert t.lookup("house", "haus") == pytest.approx(1.6 / (1.6 + 1 / 3), abs=1e-12)
    assert abs(t.lookup("house", "haus") - 0.8276) < 1e-4


def test_single_cooccurrence():
    t, _ = train_model1(corpus(("a", "b")), 1, use_null=False)
    assert t.lookup("a", "b") == 1.0


def test_lookup_floor_and_null():
    t, _ = train_model1(HOUSE, 3)
    assert t.lookup("zebra", "haus") == DEFAULT_FLOOR
    assert t.lookup("house", "unknown-z") == DEFAULT_FLOOR
    assert NULL in t.probs
    assert t.lookup("house", NULL) == t.probs[NULL]["house"]


def test_inverse_direction_is_independent_run():
    t, _ = train_model1(HOUSE, 1, "inverse", use_null=False)
    assert t.direction == "inverse"
    assert set(t.probs) == {"the", "house"}
    assert t.lookup("haus", "house") == pytest.approx(0.75)


def test_errors():
    with pytest.raises(ValueError):
        train_model1(HOUSE, 0)
    with pytest.raises(ValueError):
        train_model1(HOUSE, 1, "sideways")
    with pytest.raises(ValueError):
        train_model1(ParallelCorpus.from_pairs(()), 1)


def test_sentence_likelihood_examples():
    t = TranslationTable({"b": {"a": 1.0}})
    assert sentence_likelihood(t, ["a"], ["b"], normalize=False) == 1.0 + DEFAULT_FLOOR
    assert sentence_likelihood(t, ["a"], ["b"]) == (1.0 + DEFAULT_FLOOR) / 2


def test_table_file_round_trip(tmp_path):
    t, _ = train_model1(HOUSE, 4)
    path = tmp_path / "t.tsv"
    t.save(path)
    u = TranslationTable.load(path)
    assert u.probs == t.probs and u.direction == t.direction and u.floor == t.floor
    assert path.read_text().startswith("# direction=forward")


def random_corpus(rng: random.Random, n_pairs=6):
    xs, zs = list("pqrstu"), list("ABCDE")
    rows = []
    for _ in range(n_pairs):
        rows.append((" ".join(rng.choice(xs) for _ in range(rng.randint(1, 5))),
                     " ".join(rng.choice(zs) for _ in range(rng.randint(1, 4)))))
    return corpus(*rows)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("use_null", [True, False])
def test_em_monotone_and_stochastic(seed, use_null):
    c = random_corpus(random.Random(seed))
    t, trace = train_model1(c, 10, use_null=use_null)
    ll = trace.log_likelihood
    assert len(ll) == 10
    assert all(b >= a - 1e-9 for a, b in zip(ll, ll[1:]))
    assert corpus_log_likelihood(t, c, use_null) >= ll[-1] - 1e-9
    for row in t.probs.values():
        assert math.isclose(sum(row.values()), 1.0, abs_tol=1e-9)
        assert all(0 < p <= 1 for p in row.values())


def test_training_is_deterministic():
    c = random_corpus(random.Random(5), 12)
    assert train_model1(c, 5)[0].probs == train_model1(c, 5)[0].probs


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 10**6), nx=st.integers(1, 4), nz=st.integers(1, 4))
def test_sentence_likelihood_matches_alignment_sum(seed, nx, nz):
    rng = random.Random(seed)
    t = random_table(rng, density=0.7)
    x = [rng.choice("uvwxy") for _ in range(nx)]
    z = [rng.choice("abcdef") for _ in range(nz)]
    assert abs(sentence_likelihood(t, x, z) - brute_force_likelihood(t, x, z)) <= 1e-12
