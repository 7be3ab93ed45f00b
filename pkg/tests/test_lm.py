import math

import pytest

from filread.lm import BOS, EOS, UNK, NgramModel, load_models, perplexity, perplexity_sentences, save_models, train_ngram


def test_unigram_counts():
    m = train_ngram([["a", "a", "b"]], 1)
    assert m.ngram_counts[("a",)] == 2
    assert m.ngram_counts[("b",)] == 1
    assert m.vocabulary == {"a", "b", UNK}


def test_bigram_padding():
    m = train_ngram([["a", "b"]], 2)
    assert m.ngram_counts == {(BOS, "a"): 1, ("a", "b"): 1, ("b", EOS): 1}


def test_trigram_padding():
    m = train_ngram([["a"]], 3)
    assert m.ngram_counts == {(BOS, BOS, "a"): 1, (BOS, "a", EOS): 1}


@pytest.mark.parametrize("order", [0, 4])
def test_bad_order(order):
    with pytest.raises(ValueError):
        train_ngram([["a"]], order)


def test_empty_training():
    with pytest.raises(ValueError):
        train_ngram([], 1)
    with pytest.raises(ValueError):
        train_ngram([[]], 1)


def test_bad_alpha():
    with pytest.raises(ValueError):
        train_ngram([["a"]], 1, alpha=0)


def test_hand_case_sqrt6():
    m = train_ngram([["a", "a", "b"]], 1, alpha=1.0)
    assert m.prob("a") == pytest.approx(3 / 6)
    assert m.prob("b") == pytest.approx(2 / 6)
    assert perplexity(m, ["a", "b"]) == pytest.approx(math.sqrt(6), abs=1e-12)


def test_hand_case_one_point_five():
    m = train_ngram([["a"]], 1, alpha=1.0)
    assert perplexity(m, ["a"]) == pytest.approx(1.5, abs=1e-12)


def test_unknown_maps_to_unk():
    m = train_ngram([["a", "a", "b"]], 1)
    assert m.prob("zzz") == m.prob(UNK) == pytest.approx(1 / 6)


def test_empty_doc_is_error():
    m = train_ngram([["a"]], 2)
    with pytest.raises(ValueError):
        perplexity(m, [])
    with pytest.raises(ValueError):
        perplexity_sentences(m, [[]])


def test_bigram_perplexity_by_hand():
    m = train_ngram([["a", "b"]], 2)
    # V = {a, b, </s>, <unk>}; each observed context has count 1
    p = [(1 + 1) / (1 + 4), (1 + 1) / (1 + 4), (1 + 1) / (1 + 4)]
    expected = math.exp(-sum(math.log(x) for x in p) / 3)
    assert perplexity(m, ["a", "b"]) == pytest.approx(expected, rel=1e-12)


def test_sentences_padded_separately():
    m = train_ngram([["a", "b"], ["b", "a"]], 2)
    ll = 0.0
    n = 0
    for s in (["a", "b"], ["b"]):
        pp = perplexity(m, s)
        k = len(s) + 1
        ll += -k * math.log(pp)
        n += k
    assert perplexity_sentences(m, [["a", "b"], ["b"]]) == pytest.approx(math.exp(-ll / n), rel=1e-12)


def test_serialization_roundtrip(tmp_path):
    models = {("L1", o): train_ngram([["a", "b", "c"], ["c", "a"]], o, 0.5, "L1") for o in (1, 2, 3)}
    save_models(models, tmp_path / "lms.json")
    back = load_models(tmp_path / "lms.json")
    for key, m in models.items():
        assert back[key] == m
        assert NgramModel.from_dict(m.to_dict()) == m
