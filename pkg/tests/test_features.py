import math

import numpy as np
import pytest

from filread.corpus import make_document
from filread.features import (
    LM_FEATURES,
    MORPH_CATEGORIES,
    SYLL_FEATURES,
    FeatureRegistry,
    Resources,
    StandardizationStats,
    default_registry,
    extract_all,
    extract_lex,
    extract_lm,
    extract_morph,
    extract_syll,
    extract_trad,
    feature_matrix,
    load_affix_table,
    load_lexicon,
    morph_counts,
    read_feature_csv,
    standardize,
    write_feature_csv,
)
from filread.lm import train_ngram


@pytest.fixture(scope="module")
def tagger():
    return load_lexicon()


@pytest.fixture(scope="module")
def affixes():
    return load_affix_table()


@pytest.fixture(scope="module")
def lms():
    texts = {"L1": [["ang", "bata", "ay", "masaya"]], "L2": [["kumain", "ng", "isda"]], "L3": [["malaking", "bahay"]]}
    return {(lv, o): train_ngram(t, o, 1.0, lv) for lv, t in texts.items() for o in (1, 2, 3)}


def doc(text, label=1):
    return make_document("t", text, label)


class TestRegistry:
    def test_default_sizes(self):
        reg = default_registry()
        assert len(reg.names) == 46
        counts = {f: sum(1 for _, g in reg.entries if g == f) for f in ("TRAD", "LEX", "LM", "SYLL", "MORPH")}
        assert counts == {"TRAD": 7, "LEX": 9, "LM": 9, "SYLL": 10, "MORPH": 11}

    def test_unique_names(self):
        with pytest.raises(ValueError):
            FeatureRegistry((("a", "TRAD"), ("a", "LEX")))

    def test_select_families(self):
        reg = default_registry().select_families(["trad", "syll"])
        assert set(reg.families) == {"TRAD", "SYLL"}
        assert len(reg.names) == 17
        with pytest.raises(ValueError):
            default_registry().select_families(["nope"])


class TestTrad:
    def test_counts(self):
        f = extract_trad(doc("Si Ana ay mabait. Si Ben ay mabait din."))
        assert f["word_count"] == 9
        assert f["sentence_count"] == 2
        assert f["avg_sentence_length"] == 4.5

    def test_polysyllable(self):
        f = extract_trad(doc("Pinakamahalaga ang aso."))
        assert f["polysyll_count"] == 1

    def test_phrase_count(self):
        assert extract_trad(doc("aso."))["phrase_count"] == 1
        assert extract_trad(doc("Aso, pusa, at ibon."))["phrase_count"] == 3


class TestLex:
    def test_ttr_variants(self, tagger):
        f = extract_lex(doc("ang bata ang bata"), tagger)
        assert f["ttr"] == 0.5
        assert f["bilog_ttr"] == pytest.approx(math.log(2) / math.log(4))
        assert f["root_ttr"] == 1.0
        assert f["corr_ttr"] == pytest.approx(2 / math.sqrt(8))

    def test_single_token_bilog_warns(self, tagger):
        with pytest.warns(UserWarning):
            f = extract_lex(doc("aso"), tagger)
        assert f["bilog_ttr"] == 0.0

    def test_foreign_and_compound(self, tagger):
        f = extract_lex(doc("kompyuter araw-araw aso bata"), tagger)
        assert f["foreign_word_density"] >= 0.25
        assert f["compound_word_density"] >= 0.25


class TestSyll:
    def test_all_cv(self):
        f = extract_syll(doc("bata bata"))
        assert f["cv_density"] == 1.0
        assert sum(v for k, v in f.items() if k != "cv_density") == 0

    def test_bahay(self):
        f = extract_syll(doc("bahay"))
        assert f["cv_density"] == 0.5 and f["cvc_density"] == 0.5

    def test_partition(self):
        f = extract_syll(doc("Ang trabaho ng tsinelas ay eksperimento."))
        assert set(f) == set(SYLL_FEATURES)
        assert sum(f.values()) == pytest.approx(1.0)

    def test_no_syllables_is_error(self):
        with pytest.raises(ValueError):
            extract_syll(doc("123 ng"))


class TestLm:
    def test_nine_positive(self, lms):
        f = extract_lm(doc("Ang bata ay masaya."), lms)
        assert set(f) == set(LM_FEATURES)
        assert all(v > 0 for v in f.values())

    def test_own_level_lower(self, lms):
        f = extract_lm(doc("Ang bata ay masaya."), lms)
        assert f["L1_unigram"] < f["L3_unigram"]

    def test_missing_model(self, lms):
        partial = {k: v for k, v in lms.items() if k != ("L2", 3)}
        with pytest.raises(KeyError):
            extract_lm(doc("aso"), partial)


class TestMorph:
    @pytest.mark.parametrize(
        "word, cat",
        [("kumain", "actor_focus"), ("kakain", "aspect_contemplated"), ("kakakain", "aspect_recently_completed")],
    )
    def test_affix_oracle(self, affixes, word, cat):
        assert morph_counts([word], affixes)[cat] == 1

    def test_verb_free_doc(self, affixes, tagger):
        f = extract_morph(doc("Ang bata at ang aso."), affixes, tagger)
        assert set(f) == set(MORPH_CATEGORIES)
        assert all(v == 0 for v in f.values())

    def test_tagger_gate_drops_nouns(self, affixes, tagger):
        assert sum(morph_counts(["tinapay"], affixes, tagger).values()) == 0


class TestExtractAll:
    def test_vector(self, lms):
        res = Resources.default(lms)
        d = doc("Kumain ang bata ng isda. Masaya siya!")
        v1 = extract_all(d, res)
        v2 = extract_all(d, res)
        assert list(v1.values) == default_registry().names
        assert v1 == v2
        assert all(math.isfinite(x) for x in v1.values.values())

    def test_subset_registry(self):
        res = Resources.default({}, default_registry().select_families(["trad"]))
        v = extract_all(doc("Aso."), res)
        assert len(v.values) == 7


class TestStandardize:
    def test_column(self):
        Z, _ = standardize(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(Z[:, 0], [-1.2247449, 0, 1.2247449], atol=1e-6)

    def test_constant(self):
        Z, st = standardize(np.array([[5.0], [5.0], [5.0]]))
        assert np.all(Z == 0) and st.std[0] == 0

    def test_refit_means(self):
        X = np.random.default_rng(0).normal(3, 2, size=(30, 4))
        Z, st = standardize(X)
        assert np.abs(Z.mean(axis=0)).max() < 1e-9
        Z2, _ = standardize(X, st)
        np.testing.assert_array_equal(Z, Z2)
        assert StandardizationStats.from_dict(st.to_dict()).mean.tolist() == st.mean.tolist()

    def test_empty(self):
        with pytest.raises(ValueError):
            standardize(np.zeros((0, 3)))


def test_feature_csv_roundtrip(tmp_path, small_corpus):
    res = Resources.default({}, default_registry().select_families(["trad", "lex"]))
    vecs = [extract_all(d, res) for d in small_corpus.documents[:5]]
    write_feature_csv(tmp_path / "f.csv", vecs, [d.label for d in small_corpus.documents[:5]], res.registry)
    back, labels, names = read_feature_csv(tmp_path / "f.csv")
    assert names == res.registry.names
    np.testing.assert_array_equal(feature_matrix(back, names), feature_matrix(vecs, names))
    assert labels == [d.label for d in small_corpus.documents[:5]]
