import pytest
from hypothesis import given, settings, strategies as st

from spparse.corpus import (EOW, BpeModel, CorpusError, ParallelCorpus, Pair, apply_bpe,
                            bpe_corpus, learn_bpe, load_corpus, make_language_token, make_pair,
                            merge_bpe, write_corpus)

words = st.text(alphabet="abcdelowst_.", min_size=1, max_size=8)


def corpus_of(*targets, source=("q",)):
    return ParallelCorpus.from_pairs(make_pair(source, t.split()) for t in targets)


def test_language_tokens():
    assert make_language_token("C") == "2C"
    assert make_language_token("Clojure") == "2Clojure"
    with pytest.raises(ValueError):
        make_language_token("")


def test_load_from_column(tmp_path):
    f = tmp_path / "c.tsv"
    f.write_text("the ceiling of a number\tnumeric math ceil arg\tC\n")
    (pair,) = load_corpus(f, "from_column").pairs
    assert pair.source_tokens == ("the", "ceiling", "of", "a", "number")
    assert pair.target_tokens == ("2C", "numeric", "math", "ceil", "arg")
    assert pair.language_tag == "C"
    assert pair.components == ("numeric", "math", "ceil", "arg")


def test_minimal_pair_and_vocab(tmp_path):
    f = tmp_path / "x.tsv"
    f.write_text("a\tb\n")
    assert load_corpus(f).pairs == (Pair(("a",), ("b",), None),)
    f.write_text("a b\tc\na b\tc\n")
    c = load_corpus(f)
    assert len(c) == 2
    assert c.source_vocab == {"a", "b"} and c.target_vocab == {"c"}


def test_tag_from_filename(tmp_path):
    f = tmp_path / "Clojure.tsv"
    f.write_text("round up\tclojure.math ceil x\n")
    c = load_corpus(f, "from_filename")
    assert c.pairs[0].target_tokens[0] == "2Clojure"
    assert "2Clojure" in c.target_vocab
    assert c.languages == ["Clojure"]


@pytest.mark.parametrize("text,message", [
    ("a\n", "line 1"),
    ("a\tb\nonly one column\n", "line 2"),
    ("a\tb\tc\td\n", "line 1"),
    (" \tb\n", "line 1"),
])
def test_malformed_lines_name_the_line(tmp_path, text, message):
    f = tmp_path / "bad.tsv"
    f.write_text(text)
    with pytest.raises(CorpusError, match=message):
        load_corpus(f)


def test_empty_and_missing_files(tmp_path):
    f = tmp_path / "empty.tsv"
    f.write_text("\n")
    with pytest.raises(CorpusError):
        load_corpus(f)
    with pytest.raises(OSError):
        load_corpus(tmp_path / "missing.tsv")
    with pytest.raises(CorpusError, match="tag column"):
        f.write_text("a\tb\n")
        load_corpus(f, "from_column")


def test_write_and_reload(tmp_path):
    c = ParallelCorpus.from_pairs([make_pair(["a", "b"], ["x"], "C"), make_pair(["c"], ["y"])])
    f = tmp_path / "out.tsv"
    write_corpus(c, f)
    assert load_corpus(f, "none").pairs[1] == c.pairs[1]
    assert f.read_text().splitlines()[0] == "a b\tx\tC"


def test_load_is_deterministic(tmp_path):
    f = tmp_path / "d.tsv"
    f.write_text("".join(f"s{i} t\tz{i % 3}\n" for i in range(30)))
    assert load_corpus(f) == load_corpus(f)


def test_tag_invariant_enforced():
    with pytest.raises(CorpusError):
        Pair(("a",), ("x",), "C")
    with pytest.raises(CorpusError):
        Pair((), ("x",))


def test_bpe_low_lowest():
    c = corpus_of(*(["low"] * 5 + ["lowest"] * 2))
    model = learn_bpe(c, 2, side="target")
    assert model.merges == (("l", "o"), ("lo", "w"))


def test_bpe_tie_goes_to_first_pair():
    model = learn_bpe(corpus_of("aa", "aa", "aa"), 1, side="target")
    assert model.merges == (("a", "a"),)


def test_apply_bpe_examples():
    model = BpeModel((("l", "o"), ("lo", "w")))
    assert apply_bpe(model, ["lowest"]) == ["low", "e", "s", "t" + EOW]
    assert apply_bpe(BpeModel(), ["abc"]) == ["a", "b", "c" + EOW]
    assert apply_bpe(model, ["léo"]) == ["l", "é", "o" + EOW]


def test_zero_merges_and_empty_corpus():
    assert learn_bpe(corpus_of("abc"), 0).merges == ()
    with pytest.raises(CorpusError):
        learn_bpe(ParallelCorpus.from_pairs(()), 5)
    with pytest.raises(ValueError):
        learn_bpe(corpus_of("abc"), -1)


def test_bpe_model_file_roundtrip(tmp_path):
    model = learn_bpe(corpus_of("lowest lower newest widest"), 10)
    path = tmp_path / "bpe.txt"
    model.save(path)
    assert BpeModel.load(path) == model
    assert path.read_text().splitlines()[0] == " ".join(model.merges[0])


def test_bpe_corpus_keeps_language_tokens():
    c = ParallelCorpus.from_pairs([make_pair(["lowest"], ["lower"], "Clojure")])
    model = learn_bpe(c, 4)
    seg = bpe_corpus(c, model)
    assert seg.pairs[0].target_tokens[0] == "2Clojure"
    assert merge_bpe(seg.pairs[0].components) == ["lower"]


@settings(max_examples=200, deadline=None)
@given(train=st.lists(words, min_size=1, max_size=12), probe=st.lists(words, max_size=6),
       merges=st.integers(0, 30))
def test_bpe_round_trip(train, probe, merges):
    model = learn_bpe(corpus_of(" ".join(train)), merges, side="target")
    tokens = probe or train
    assert merge_bpe(apply_bpe(model, tokens)) == tokens


@settings(max_examples=100, deadline=None)
@given(train=st.lists(words, min_size=1, max_size=12), merges=st.integers(0, 20))
def test_bpe_deterministic_and_prioritized(train, merges):
    c = corpus_of(" ".join(train))
    a, b = learn_bpe(c, merges, "target"), learn_bpe(c, merges, "target")
    assert a == b
    assert a.merge_count <= merges
    assert len(set(a.merges)) == a.merge_count
