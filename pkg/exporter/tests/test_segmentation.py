"""Sentence splitting and proposition alignment, tested without any model."""

from granurank_export.segment import (
    align_proposition,
    lcs_pairs,
    sentence_char_ranges,
    sentence_index_for,
)


class TestSentenceRanges:
    def test_no_terminal_punctuation_is_one_sentence(self):
        assert sentence_char_ranges("the sky is blue") == [(0, 15)]

    def test_three_sentences(self):
        text = "One two. Three four! Five?"
        ranges = sentence_char_ranges(text)
        assert [text[a:b] for a, b in ranges] == ["One two.", "Three four!", "Five?"]

    def test_punctuation_runs_stay_attached(self):
        text = "Wait... what? Yes!"
        ranges = sentence_char_ranges(text)
        assert [text[a:b] for a, b in ranges] == ["Wait...", "what?", "Yes!"]

    def test_surrounding_whitespace_trimmed(self):
        text = "  first.   second.  "
        ranges = sentence_char_ranges(text)
        assert [text[a:b] for a, b in ranges] == ["first.", "second."]

    def test_empty_and_blank(self):
        assert sentence_char_ranges("") == []
        assert sentence_char_ranges("   ") == []

    def test_trailing_fragment_kept(self):
        text = "Done. and then"
        ranges = sentence_char_ranges(text)
        assert [text[a:b] for a, b in ranges] == ["Done.", "and then"]


class TestSentenceIndex:
    def test_gap_belongs_to_following_sentence(self):
        ranges = [(0, 6), (9, 16)]
        assert sentence_index_for(ranges, 3) == 0
        assert sentence_index_for(ranges, 7) == 1  # inside the gap
        assert sentence_index_for(ranges, 10) == 1

    def test_past_the_end_clamps_to_last(self):
        assert sentence_index_for([(0, 4), (5, 9)], 50) == 1


class TestAlignment:
    def test_identical_tokens_full_span(self):
        tokens = ["the", "sky", "is", "blue"]
        matched, dropped = align_proposition(tokens, list(tokens))
        assert matched == [0, 1, 2, 3]
        assert dropped == []

    def test_paraphrased_word_dropped(self):
        sentence = ["the", "sky", "is", "blue"]
        matched, dropped = align_proposition(sentence, ["the", "sky", "looks", "blue"])
        assert matched == [0, 1, 3]
        assert dropped == ["looks"]

    def test_hand_alignment(self):
        sentence = ["the", "cat", "sat", "on", "the", "mat"]
        matched, dropped = align_proposition(sentence, ["cat", "on", "mat"])
        assert matched == [1, 3, 5]
        assert dropped == []

    def test_casefolded_comparison(self):
        matched, dropped = align_proposition(["Paris", "is", "big"], ["paris", "BIG"])
        assert matched == [0, 2]
        assert dropped == []

    def test_nothing_matches(self):
        matched, dropped = align_proposition(["a", "b"], ["x", "y"])
        assert matched == []
        assert dropped == ["x", "y"]

    def test_empty_proposition(self):
        assert align_proposition(["a", "b"], []) == ([], [])

    def test_repeated_words_take_earliest_positions(self):
        sentence = ["a", "b", "a", "c", "a"]
        matched, _ = align_proposition(sentence, ["a", "a"])
        assert matched == [0, 2]

    def test_pairs_strictly_increase_on_both_sides(self):
        sentence = ["w1", "w2", "w1", "w3", "w2", "w4"]
        prop = ["w2", "w1", "w2", "w4"]
        pairs = lcs_pairs(sentence, prop)
        for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]):
            assert i1 < i2 and j1 < j2
        for i, j in pairs:
            assert sentence[i].casefold() == prop[j].casefold()
