import numpy as np
import pytest
from hypothesis import given, strategies as st

from quakebrief.corpus import (
    ClassLabel,
    PAD_ID,
    SEQUENCE_LENGTH,
    UNK_ID,
    build_vocabulary,
    encode_sequence,
    load_labeled_dataset,
    segment_sentences,
    tokenize,
    vectorize,
)


class TestTokenize:
    def test_basic(self):
        assert tokenize("Walls cracked, dishes broke.") == ["walls", "cracked", "dishes", "broke"]

    def test_splits_on_any_non_alphanumeric(self):
        assert tokenize("6.4-magnitude") == ["6", "4", "magnitude"]

    def test_empty(self):
        assert tokenize("") == []

    @given(st.text(max_size=200))
    def test_join_idempotent(self, text):
        tokens = tokenize(text)
        assert tokenize(" ".join(tokens)) == tokens


class TestSegmentSentences:
    def test_two_sentences(self):
        out = segment_sentences("Hello big world. Second sentence here.")
        assert [s.text for s in out] == ["Hello big world.", "Second sentence here."]
        assert [s.index for s in out] == [0, 1]

    def test_empty(self):
        assert segment_sentences("") == []

    def test_abbreviation_not_split(self):
        text = "The earthquake struck at 3:54 a.m. near the Adriatic coast."
        out = segment_sentences(text)
        assert len(out) == 1
        assert out[0].text == text

    def test_abbreviation_before_uppercase(self):
        out = segment_sentences("Sirens sounded at 6 a.m. Rescue teams assembled quickly.")
        assert len(out) == 1  # "a.m." never ends a sentence

    def test_us_abbreviation(self):
        out = segment_sentences("Experts from the U.S. and the EU arrived. Inspections began at once.")
        assert len(out) == 2

    def test_short_segments_dropped(self):
        out = segment_sentences("Ouch! The bridge is fully closed today.")
        assert [s.text for s in out] == ["The bridge is fully closed today."]

    def test_paragraph_break_is_hard_boundary(self):
        out = segment_sentences("the first fragment has no period\n\nAnd this second paragraph does.")
        assert len(out) == 2

    def test_question_and_exclamation(self):
        out = segment_sentences("Was anyone hurt? Nobody was hurt! Everyone got out.")
        assert len(out) == 3

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=400))
    def test_sentences_are_contiguous_substrings(self, body):
        for sentence in segment_sentences(body):
            assert sentence.text in body

    def test_indices_contiguous(self):
        out = segment_sentences("One full sentence. Another one here. And a third sentence.")
        assert [s.index for s in out] == list(range(len(out)))


class TestVocabulary:
    def test_size_includes_reserved(self):
        vocab = build_vocabulary([["a", "b", "c", "d", "e"]], min_count=1)
        assert vocab.size == 7

    def test_empty_corpus(self):
        assert build_vocabulary([], min_count=1).size == 2

    def test_min_count_and_tiebreak(self):
        vocab = build_vocabulary([["a", "b"], ["a", "b"], ["a", "b", "c"]], min_count=2)
        assert vocab.token_to_id == {"a": 2, "b": 3}
        assert vocab.size == 4

    def test_frequency_order_then_lexicographic(self):
        vocab = build_vocabulary([["zeta", "zeta", "alpha", "beta"]], min_count=1)
        assert vocab.token_to_id == {"zeta": 2, "alpha": 3, "beta": 4}

    def test_deterministic(self):
        corpus = [tokenize("roads cracked near the old bridge"), tokenize("the bridge closed")]
        assert build_vocabulary(corpus).token_to_id == build_vocabulary(corpus).token_to_id


class TestEncodeSequence:
    def test_padding(self):
        vocab = build_vocabulary([["a", "b", "c"]])
        seq = encode_sequence(["a", "b", "c"], vocab)
        assert seq.shape == (SEQUENCE_LENGTH,)
        assert list(seq[:3]) == [vocab.id_for("a"), vocab.id_for("b"), vocab.id_for("c")]
        assert all(v == PAD_ID for v in seq[3:])

    def test_truncation(self):
        vocab = build_vocabulary([["tok"]])
        seq = encode_sequence(["tok"] * 70, vocab)
        assert seq.shape == (SEQUENCE_LENGTH,)
        assert all(v == vocab.id_for("tok") for v in seq)

    def test_unknown_token(self):
        vocab = build_vocabulary([["known"]])
        seq = encode_sequence(["mystery"], vocab)
        assert seq[0] == UNK_ID and seq[1] == PAD_ID

    @given(st.lists(st.sampled_from(["a", "b", "zz", "qq"]), max_size=90))
    def test_length_and_range(self, tokens):
        vocab = build_vocabulary([["a", "b"]])
        seq = encode_sequence(tokens, vocab)
        assert seq.shape == (SEQUENCE_LENGTH,)
        assert np.all(seq < vocab.size)


class TestVectorize:
    def test_counts(self):
        vocab = build_vocabulary([["a", "b"]])
        fv = vectorize(["a", "a", "b"], vocab, "count")
        assert fv == {vocab.id_for("a"): 2.0, vocab.id_for("b"): 1.0}

    def test_empty(self):
        vocab = build_vocabulary([["a"]])
        assert vectorize([], vocab, "count") == {}

    def test_tfidf_single_document_single_token(self):
        # D=1, df=1: idf = ln(2/2)+1 = 1; one token of weight 1 normalizes to 1
        vocab = build_vocabulary([["quake"]])
        fv = vectorize(["quake"], vocab, "tfidf")
        assert fv == pytest.approx({vocab.id_for("quake"): 1.0})

    def test_tfidf_l2_normalized(self):
        vocab = build_vocabulary([["a", "b"], ["a"]])
        fv = vectorize(["a", "b", "b"], vocab, "tfidf")
        norm = sum(w * w for w in fv.values())
        assert norm == pytest.approx(1.0)

    def test_unknown_scheme(self):
        vocab = build_vocabulary([["a"]])
        with pytest.raises(ValueError):
            vectorize(["a"], vocab, "binary")


class TestLoadLabeledDataset:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(
            'text,label\n"A five-storey apartment block collapsed",building\n'
            '"Roads were closed",infrastructure\n',
            encoding="utf-8",
        )
        items = load_labeled_dataset(path)
        assert [i.label for i in items] == [ClassLabel.building, ClassLabel.infrastructure]
        assert items[0].sentence.text == "A five-storey apartment block collapsed"

    def test_unknown_label_reports_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("text,label\nok sentence,building\nbad sentence,bridge\n", encoding="utf-8")
        with pytest.raises(ValueError, match="row 3"):
            load_labeled_dataset(path)

    def test_empty_text_rejected_with_warning(self, tmp_path, caplog):
        path = tmp_path / "data.csv"
        path.write_text("text,label\n,building\nreal sentence,other\n", encoding="utf-8")
        items = load_labeled_dataset(path)
        assert len(items) == 1

    def test_empty_file_after_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("text,label\n", encoding="utf-8")
        assert load_labeled_dataset(path) == []

    def test_bundled_fixture_has_about_200_rows(self):
        from quakebrief.config import bundled_data_dir

        items = load_labeled_dataset(bundled_data_dir() / "training_sentences.csv")
        assert 180 <= len(items) <= 220
        assert {i.label for i in items} == set(ClassLabel)
