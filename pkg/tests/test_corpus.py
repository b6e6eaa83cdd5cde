import numpy as np
import pytest

from versetopics.corpus import (
    DocumentTermMatrix,
    TaggedToken,
    VerbReassignRule,
    VocabularyPolicy,
    apply_verb_reassignment,
    build_dtm,
    content_layout,
    load_long_format,
    load_policy,
    load_tokens,
    save_long_format,
    save_tokens,
    segment_blocks,
    stanza_block_index,
    stanza_counts,
)
from versetopics.errors import EmptyResultError, InputDataError


def tok(lemma, pos, chapter=1, stanza=1, content=True):
    return TaggedToken(
        chapter=chapter, stanza=stanza, line=None,
        surface=lemma, lemma=lemma, pos=pos, is_content_stanza=content,
    )


class TestVerbReassignment:
    def test_majority_verb_promoted(self):
        tokens = [tok("parlare", "VERB")] * 3 + [tok("parlare", "NOUN")]
        out = apply_verb_reassignment(tokens, VocabularyPolicy())
        assert all(t.pos == "VERB" for t in out)

    def test_length_guard(self):
        tokens = [tok("are", "VERB")] * 5 + [tok("are", "NOUN")]
        out = apply_verb_reassignment(tokens, VocabularyPolicy())
        assert [t.pos for t in out] == ["VERB"] * 5 + ["NOUN"]

    def test_occurrence_guard(self):
        tokens = [tok("amare", "VERB"), tok("amare", "NOUN")]
        out = apply_verb_reassignment(tokens, VocabularyPolicy())
        assert [t.pos for t in out] == ["VERB", "NOUN"]

    def test_share_guard(self):
        tokens = [tok("cenare", "VERB")] * 2 + [tok("cenare", "NOUN")] * 3
        out = apply_verb_reassignment(tokens, VocabularyPolicy())  # share 0.4 < 0.6
        assert sum(t.pos == "VERB" for t in out) == 2

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        lemmas = ["parlare", "amare", "cantare", "dormire", "casa", "ore"]
        tokens = [
            tok(rng.choice(lemmas), rng.choice(["VERB", "NOUN", "ADJ"]))
            for _ in range(200)
        ]
        policy = VocabularyPolicy()
        once = apply_verb_reassignment(tokens, policy)
        twice = apply_verb_reassignment(once, policy)
        assert once == twice

    def test_non_suffix_untouched(self):
        tokens = [tok("cavallo", "NOUN")] * 4
        assert apply_verb_reassignment(tokens, VocabularyPolicy()) == tokens


class TestSegmentBlocks:
    def test_21_splits_11_10(self):
        seg = segment_blocks([21])
        assert [b.stanza_count for b in seg.blocks] == [11, 10]
        assert [b.stanza_range for b in seg.blocks] == [(1, 11), (12, 21)]

    def test_10_single_block(self):
        seg = segment_blocks([10])
        assert [b.stanza_count for b in seg.blocks] == [10]

    def test_tie_prefers_fewer_blocks(self):
        # s=14: |14/1 - 10.5| == |14/2 - 10.5| == 3.5, so one block wins
        seg = segment_blocks([14])
        assert [b.stanza_count for b in seg.blocks] == [14]

    def test_canonical_366_layout_gives_35_blocks(self):
        counts = [54, 40, 41, 51, 42, 43, 52, 43]
        assert sum(counts) == 366
        seg = segment_blocks(counts)
        sizes = [b.stanza_count for b in seg.blocks]
        assert len(seg.blocks) == 35
        assert set(sizes) <= {10, 11}

    def test_partition_property(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            counts = rng.integers(1, 60, size=rng.integers(1, 9)).tolist()
            seg = segment_blocks(counts)
            for chapter, s in enumerate(counts, start=1):
                ranges = [b.stanza_range for b in seg.chapter_blocks(chapter)]
                covered = [o for lo, hi in ranges for o in range(lo, hi + 1)]
                assert covered == list(range(1, s + 1))

    def test_block_ids_follow_narrative_order(self):
        seg = segment_blocks([21, 10])
        assert seg.block_ids == ("C1_B1", "C1_B2", "C2_B1")

    def test_zero_stanza_chapter_rejected(self):
        with pytest.raises(InputDataError):
            segment_blocks([10, 0])


class TestBuildDtm:
    def test_minimal_instance(self):
        tokens = [tok("casa", "NOUN")] * 3
        seg = segment_blocks([1])
        dtm = build_dtm(tokens, seg, VocabularyPolicy())
        assert dtm.shape == (1, 1)
        assert dtm.dense().tolist() == [[3]]
        assert dtm.total_count == 3

    def test_pos_filter_and_lowercase(self):
        tokens = [
            tok("Casa", "NOUN"), tok("Casa", "NOUN"), tok("Casa", "NOUN"),
            tok("Tatjana", "PROPN"), tok("Tatjana", "PROPN"), tok("Tatjana", "PROPN"),
            tok("correre", "VERB"), tok("correre", "VERB"), tok("correre", "VERB"),
        ]
        dtm = build_dtm(tokens, segment_blocks([1]), VocabularyPolicy(min_count=1))
        assert dtm.lemmas == ("Tatjana", "casa")  # VERB dropped, NOUN lowercased

    def test_stopwords_removed_before_min_count(self):
        tokens = [tok("cosa", "NOUN")] * 5 + [tok("neve", "NOUN")] * 3
        policy = VocabularyPolicy(stopwords=frozenset({"cosa"}), min_count=3)
        dtm = build_dtm(tokens, segment_blocks([1]), policy)
        assert dtm.lemmas == ("neve",)

    def test_min_count_monotonicity(self):
        rng = np.random.default_rng(3)
        lemmas = [f"l{i}" for i in range(30)]
        tokens = [tok(lemmas[rng.integers(0, 30)], "NOUN") for _ in range(300)]
        seg = segment_blocks([1])
        vocabs = []
        for m in (1, 2, 3, 5):
            dtm = build_dtm(tokens, seg, VocabularyPolicy(min_count=m))
            vocabs.append(set(dtm.lemmas))
        for small, large in zip(vocabs[1:], vocabs):
            assert small <= large

    def test_every_column_meets_min_count(self):
        rng = np.random.default_rng(4)
        tokens = [
            tok(f"l{rng.integers(0, 40)}", "NOUN", chapter=1, stanza=int(s))
            for s in rng.integers(1, 22, size=400)
        ]
        seg = segment_blocks([len(content_layout(tokens)[1])])
        dtm = build_dtm(tokens, seg, VocabularyPolicy(min_count=3))
        col_sums = np.asarray(dtm.counts.sum(axis=0)).ravel()
        assert (col_sums >= 3).all()
        freq = {}
        for _, _, lemma in [(t.chapter, t.stanza, t.lemma) for t in tokens]:
            freq[lemma] = freq.get(lemma, 0) + 1
        assert dtm.total_count == sum(n for n in freq.values() if n >= 3)

    def test_empty_vocabulary_rejected(self):
        tokens = [tok("raro", "NOUN")]
        with pytest.raises(EmptyResultError):
            build_dtm(tokens, segment_blocks([1]), VocabularyPolicy(min_count=3))

    def test_non_content_stanzas_excluded(self):
        tokens = [tok("casa", "NOUN", stanza=1)] * 3 + [
            tok("casa", "NOUN", stanza=2, content=False)
        ] * 5
        dtm = build_dtm(tokens, segment_blocks([1]), VocabularyPolicy(min_count=1))
        assert dtm.total_count == 3


class TestLongFormat:
    def test_direct_reshape(self, tmp_path):
        p = tmp_path / "dtm.csv"
        p.write_text("block_id,lemma,n\nC1_B1,casa,2\nC1_B2,casa,1\n", encoding="utf-8")
        dtm = load_long_format(p)
        assert dtm.block_ids == ("C1_B1", "C1_B2")
        assert dtm.dense().tolist() == [[2], [1]]

    def test_duplicates_summed(self, tmp_path):
        p = tmp_path / "dtm.csv"
        p.write_text("block_id,lemma,n\nC1_B1,casa,2\nC1_B1,casa,3\n", encoding="utf-8")
        assert load_long_format(p).dense().tolist() == [[5]]

    def test_malformed_block_id_names_line(self, tmp_path):
        p = tmp_path / "dtm.csv"
        p.write_text("block_id,lemma,n\nC1B1,casa,2\n", encoding="utf-8")
        with pytest.raises(InputDataError, match=r":2"):
            load_long_format(p)

    def test_negative_count_rejected(self, tmp_path):
        p = tmp_path / "dtm.csv"
        p.write_text("block_id,lemma,n\nC1_B1,casa,-2\n", encoding="utf-8")
        with pytest.raises(InputDataError, match="negative"):
            load_long_format(p)

    def test_non_integer_count_rejected(self, tmp_path):
        p = tmp_path / "dtm.csv"
        p.write_text("block_id,lemma,n\nC1_B1,casa,2.5\n", encoding="utf-8")
        with pytest.raises(InputDataError, match="non-integer"):
            load_long_format(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "dtm.csv"
        p.write_text("", encoding="utf-8")
        with pytest.raises(InputDataError):
            load_long_format(p)
        p.write_text("block_id,lemma,n\n", encoding="utf-8")
        with pytest.raises(InputDataError):
            load_long_format(p)

    def test_block_order_numeric_not_lexicographic(self, tmp_path):
        p = tmp_path / "dtm.csv"
        rows = [f"C1_B{i},casa,{i}" for i in (10, 2, 1)]
        p.write_text("block_id,lemma,n\n" + "\n".join(rows) + "\n", encoding="utf-8")
        dtm = load_long_format(p)
        assert dtm.block_ids == ("C1_B1", "C1_B2", "C1_B10")

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        import scipy.sparse as sp

        counts = sp.csr_matrix(rng.integers(0, 4, size=(6, 12)))
        dtm = DocumentTermMatrix(
            block_ids=tuple(f"C1_B{i + 1}" for i in range(6)),
            lemmas=tuple(f"lemma{j:02d}" for j in range(12)),
            counts=counts,
        )
        path = tmp_path / "dtm.csv"
        save_long_format(dtm, path)
        back = load_long_format(path)
        seen = set(back.lemmas)
        keep = [j for j, l in enumerate(dtm.lemmas) if l in seen]
        assert np.array_equal(back.dense(), dtm.dense()[:, keep])
        save_long_format(back, tmp_path / "again.csv")
        assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()

    def test_writer_is_lf_and_minimal_quoting(self, tmp_path):
        import scipy.sparse as sp

        dtm = DocumentTermMatrix(
            block_ids=("C1_B1",),
            lemmas=("com,ma", "plain"),
            counts=sp.csr_matrix(np.array([[1, 2]])),
        )
        path = tmp_path / "dtm.csv"
        save_long_format(dtm, path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert b'"com,ma"' in raw
        assert b'"plain"' not in raw


class TestTokenIO:
    def test_round_trip(self, tmp_path):
        tokens = [
            TaggedToken(1, 1, 1, "Casa", "casa", "NOUN", True),
            TaggedToken(1, 2, None, "Tat'jana", "Tat'jana", "PROPN", True),
            TaggedToken(2, 1, 3, "vuoto", "vuoto", "ADJ", False),
        ]
        path = tmp_path / "tokens.csv"
        save_tokens(tokens, path)
        assert load_tokens(path) == tokens

    def test_unknown_pos_maps_to_other(self, tmp_path):
        path = tmp_path / "tokens.csv"
        path.write_text(
            "chapter,stanza,line,surface,lemma,pos,is_content_stanza\n"
            "1,1,,e,e,CCONJ,true\n",
            encoding="utf-8",
        )
        assert load_tokens(path)[0].pos == "OTHER"

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "tokens.csv"
        path.write_text("chapter,stanza,lemma\n1,1,casa\n", encoding="utf-8")
        with pytest.raises(InputDataError, match="missing columns"):
            load_tokens(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputDataError):
            load_tokens(tmp_path / "absent.csv")

    def test_tsv_by_extension(self, tmp_path):
        path = tmp_path / "tokens.tsv"
        path.write_text(
            "chapter\tstanza\tline\tsurface\tlemma\tpos\tis_content_stanza\n"
            "1\t1\t\tcasa\tcasa\tNOUN\ttrue\n",
            encoding="utf-8",
        )
        assert load_tokens(path)[0].lemma == "casa"


class TestLayout:
    def test_stanza_counts_requires_contiguity(self):
        tokens = [tok("casa", "NOUN", chapter=1), tok("neve", "NOUN", chapter=3)]
        with pytest.raises(InputDataError, match="contiguous"):
            stanza_counts(content_layout(tokens))

    def test_stanza_block_index(self):
        tokens = [tok("casa", "NOUN", stanza=s) for s in (2, 5, 9, 14, 30)]
        layout = content_layout(tokens)
        seg = segment_blocks(stanza_counts(layout))
        mapping = stanza_block_index(seg, layout)
        assert mapping == {(1, 2): 0, (1, 5): 0, (1, 9): 0, (1, 14): 0, (1, 30): 0}


class TestPolicyFile:
    def test_load(self, tmp_path):
        path = tmp_path / "policy.ini"
        path.write_text(
            "[vocabulary]\n"
            "allowed_pos = NOUN, PROPN\n"
            "min_count = 2\n"
            "stopwords = altro, grande, cosa\n"
            "lowercase_non_propn = true\n"
            "\n"
            "[verb_reassign]\n"
            "min_verb_share = 0.7\n"
            "min_verb_occurrences = 3\n"
            "min_lemma_length = 4\n",
            encoding="utf-8",
        )
        policy = load_policy(path)
        assert policy.allowed_pos == frozenset({"NOUN", "PROPN"})
        assert policy.min_count == 2
        assert policy.stopwords == frozenset({"altro", "grande", "cosa"})
        assert policy.verb_reassign == VerbReassignRule(0.7, 3, 4)

    def test_defaults_when_missing(self, tmp_path):
        path = tmp_path / "policy.ini"
        path.write_text("[vocabulary]\nmin_count = 4\n", encoding="utf-8")
        policy = load_policy(path)
        assert policy.min_count == 4
        assert policy.allowed_pos == frozenset({"NOUN", "PROPN", "ADJ"})

    def test_invariants_enforced(self):
        with pytest.raises(InputDataError):
            VocabularyPolicy(min_count=0)
        with pytest.raises(InputDataError):
            VerbReassignRule(min_verb_share=0.0)
