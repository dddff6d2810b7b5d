import json

import pytest

from annopack.datapack import deserialize_pack, new_pack, serialize_pack
from annopack.processors import (
    REGISTRY,
    CooccurrenceRelations,
    InvalidConfig,
    InvalidPackId,
    KeywordSentiment,
    Lexicon,
    LexiconNer,
    MissingDependency,
    PackWriter,
    Processor,
    SentenceSplitter,
    Tokenizer,
    load_lexicon,
)


def run_with_write_set_check(proc: Processor, pack, enforce_requires=True):
    """Run a processor and assert it only added entries of its declared
    `produces` types or touched its declared attribute write-set."""
    before = {e["id"]: e for e in json.loads(serialize_pack(pack))["entries"]}
    proc.process(pack, enforce_requires=enforce_requires)
    after = {e["id"]: e for e in json.loads(serialize_pack(pack))["entries"]}
    assert set(before) <= set(after), "processor deleted entries"
    allowed_attrs = {}
    for type_name, attr in proc.writes_attributes:
        allowed_attrs.setdefault(type_name, set()).add(attr)
    for eid, old in before.items():
        new = dict(after[eid])
        for attr in allowed_attrs.get(old["type"], ()):
            new.get("attributes", {}).pop(attr, None)
            old = dict(old)
            old.get("attributes", {}).pop(attr, None)
        assert new == old, f"entry {eid} mutated outside the declared write-set"
    for eid in set(after) - set(before):
        assert after[eid]["type"] in proc.produces, f"undeclared output type {after[eid]['type']}"


# -- tokenize ------------------------------------------------------------------


def test_tokenize_example():
    pack = new_pack("d", "Hello, world.")
    run_with_write_set_check(Tokenizer(), pack)
    spans = [(t.span, pack.text_of(t)) for t in pack.get_entries("Token")]
    assert spans == [
        ((0, 5), "Hello"),
        ((5, 6), ","),
        ((7, 12), "world"),
        ((12, 13), "."),
    ]


def test_tokenize_empty_and_single():
    empty = new_pack("d", "")
    Tokenizer().process(empty)
    assert empty.get_entries("Token") == []
    single = new_pack("d", "a")
    Tokenizer().process(single)
    assert [t.span for t in single.get_entries("Token")] == [(0, 1)]


def test_tokenize_tokens_disjoint_sorted_cover_non_whitespace():
    pack = new_pack("d", "a+b  (très) naïve—x9 !!")
    Tokenizer().process(pack)
    tokens = pack.get_entries("Token")
    prev_end = 0
    covered = []
    for t in tokens:
        assert t.span[0] >= prev_end  # disjoint and sorted
        prev_end = t.span[1]
        covered.append(pack.text_of(t))
        assert not any(c.isspace() for c in pack.text_of(t))
    assert "".join(covered) == "".join(c for c in pack.text if not c.isspace())


# -- split_sentences -----------------------------------------------------------


def test_split_sentences_example():
    pack = new_pack("d", "Hello world. Bye!")
    run_with_write_set_check(SentenceSplitter(), pack)
    assert [s.span for s in pack.get_entries("Sentence")] == [(0, 12), (13, 17)]


def test_split_sentences_fallback_and_empty():
    pack = new_pack("d", "no terminator")
    SentenceSplitter().process(pack)
    assert [s.span for s in pack.get_entries("Sentence")] == [(0, 13)]
    empty = new_pack("d", "")
    SentenceSplitter().process(empty)
    assert empty.get_entries("Sentence") == []


def test_split_sentences_every_non_ws_char_in_exactly_one():
    text = "One two. Three?  Four! no end"
    pack = new_pack("d", text)
    SentenceSplitter().process(pack)
    owner = [0] * len(text)
    for s in pack.get_entries("Sentence"):
        for i in range(s.span[0], s.span[1]):
            owner[i] += 1
    for i, ch in enumerate(text):
        if not ch.isspace():
            assert owner[i] == 1
    # terminator not followed by whitespace does not split
    pack2 = new_pack("d", "a.b c")
    SentenceSplitter().process(pack2)
    assert [s.span for s in pack2.get_entries("Sentence")] == [(0, 5)]


# -- lexicon_ner ----------------------------------------------------------------


def _ner(lexicon_map, case_sensitive=False):
    return LexiconNer(lexicon=Lexicon(lexicon_map, case_sensitive))


def test_lexicon_ner_longest_match_wins():
    pack = new_pack("d", "new york")
    Tokenizer().process(pack)
    run_with_write_set_check(_ner({"new york": "LOC", "york": "LOC"}), pack)
    mentions = pack.get_entries("EntityMention")
    assert [(m.span, m.attributes["ner_type"]) for m in mentions] == [((0, 8), "LOC")]


def test_lexicon_ner_empty_lexicon():
    pack = new_pack("d", "anything here")
    Tokenizer().process(pack)
    _ner({}).process(pack)
    assert pack.get_entries("EntityMention") == []


def test_lexicon_ner_case_insensitive():
    pack = new_pack("d", "Aspirin given")
    Tokenizer().process(pack)
    _ner({"aspirin": "DRUG"}).process(pack)
    mentions = pack.get_entries("EntityMention")
    assert [(m.span, m.attributes["ner_type"]) for m in mentions] == [((0, 7), "DRUG")]
    assert pack.text_of(mentions[0]) == "Aspirin"


def test_lexicon_ner_case_sensitive_mode():
    pack = new_pack("d", "Aspirin aspirin")
    Tokenizer().process(pack)
    _ner({"aspirin": "DRUG"}, case_sensitive=True).process(pack)
    assert [m.span for m in pack.get_entries("EntityMention")] == [(8, 15)]


def test_lexicon_ner_matches_never_overlap():
    pack = new_pack("d", "a b c a b")
    Tokenizer().process(pack)
    _ner({"a b": "X", "b c": "Y", "c a": "Z"}).process(pack)
    mentions = pack.get_entries("EntityMention")
    spans = [(m.span, m.attributes["ner_type"]) for m in mentions]
    # greedy eats "a b" first, then matches "c a"; the final "b" stays bare
    assert spans == [((0, 3), "X"), ((4, 7), "Z")]
    for ((b1, e1), _), ((b2, e2), _) in zip(spans, spans[1:]):
        assert e1 <= b2


def test_lexicon_ner_requires_tokens():
    pack = new_pack("d", "text")
    with pytest.raises(MissingDependency):
        _ner({"text": "X"}).process(pack)


# -- cooccurrence_relations ------------------------------------------------------


def _mention(pack, b, e):
    return pack.add_entry("EntityMention", begin=b, end=e, attributes={"ner_type": "X"})


def test_cooccurrence_all_pairs_in_sentence():
    pack = new_pack("d", "A B C.")
    pack.add_entry("Sentence", begin=0, end=6)
    a = _mention(pack, 0, 1)
    b = _mention(pack, 2, 3)
    c = _mention(pack, 4, 5)
    run_with_write_set_check(CooccurrenceRelations(rel_type="co"), pack)
    rels = pack.get_entries("Relation")
    assert {(r.link[0], r.link[1]) for r in rels} == {(a, b), (a, c), (b, c)}
    assert len(rels) == 3
    assert all(r.attributes["rel_type"] == "co" for r in rels)


def test_cooccurrence_across_sentences_no_links():
    pack = new_pack("d", "A. B.")
    pack.add_entry("Sentence", begin=0, end=2)
    pack.add_entry("Sentence", begin=3, end=5)
    _mention(pack, 0, 1)
    _mention(pack, 3, 4)
    CooccurrenceRelations().process(pack)
    assert pack.get_entries("Relation") == []


def test_cooccurrence_count_formula():
    pack = new_pack("d", "a b c d. e f g.")
    pack.add_entry("Sentence", begin=0, end=8)
    pack.add_entry("Sentence", begin=9, end=15)
    for b in (0, 2, 4, 6):
        _mention(pack, b, b + 1)
    for b in (9, 11, 13):
        _mention(pack, b, b + 1)
    CooccurrenceRelations().process(pack)
    per_sentence = [
        len(pack.get_covered(s, "EntityMention", include_subtypes=True))
        for s in pack.get_entries("Sentence")
    ]
    expected = sum(m * (m - 1) // 2 for m in per_sentence)
    assert len(pack.get_entries("Relation")) == expected == 6 + 3


# -- keyword_sentiment ------------------------------------------------------------


def _sentiment(lexicon_map):
    return KeywordSentiment(lexicon=Lexicon(lexicon_map))


def test_keyword_sentiment_average():
    pack = new_pack("d", "good good bad")
    Tokenizer().process(pack)
    SentenceSplitter().process(pack)
    run_with_write_set_check(_sentiment({"good": 1.0, "bad": -1.0}), pack)
    (sentence,) = pack.get_entries("Sentence")
    assert sentence.attributes["sentiment"] == pytest.approx(1 / 3, abs=1e-12)


def test_keyword_sentiment_no_match_zero():
    pack = new_pack("d", "nothing matches here")
    Tokenizer().process(pack)
    SentenceSplitter().process(pack)
    _sentiment({"good": 1.0}).process(pack)
    (sentence,) = pack.get_entries("Sentence")
    assert sentence.attributes["sentiment"] == 0.0


def test_keyword_sentiment_single_negative():
    pack = new_pack("d", "bad")
    Tokenizer().process(pack)
    SentenceSplitter().process(pack)
    _sentiment({"bad": -1.0}).process(pack)
    assert pack.get_entries("Sentence")[0].attributes["sentiment"] == -1.0


# -- pack_writer -------------------------------------------------------------------


def test_pack_writer_idempotent_bytes(tmp_path):
    pack = new_pack("doc1", "Some text.")
    Tokenizer().process(pack)
    writer = PackWriter(out_dir=str(tmp_path))
    writer.process(pack)
    first = (tmp_path / "doc1.json").read_bytes()
    writer.process(pack)
    assert (tmp_path / "doc1.json").read_bytes() == first
    again = deserialize_pack(first.decode("utf-8"))
    assert again == pack


def test_pack_writer_rejects_path_separators(tmp_path):
    writer = PackWriter(out_dir=str(tmp_path))
    for bad in ("a/b", "a\\b", "..", "."):
        with pytest.raises(InvalidPackId):
            writer.process(new_pack(bad, "x"))


# -- config and lexicon loading ------------------------------------------------------


def test_from_params_validation():
    with pytest.raises(InvalidConfig):
        LexiconNer.from_params({})  # missing required
    with pytest.raises(InvalidConfig):
        Tokenizer.from_params({"bogus": 1})
    with pytest.raises(InvalidConfig):
        PackWriter.from_params({"out_dir": 3})
    proc = CooccurrenceRelations.from_params({})
    assert proc.rel_type == "cooccurrence"


def test_registry_contents():
    assert set(REGISTRY) >= {
        "tokenize",
        "split_sentences",
        "lexicon_ner",
        "cooccurrence_relations",
        "keyword_sentiment",
        "pack_writer",
    }


def test_load_lexicon_tsv(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text(
        "# comment line\naspirin\tDRUG\nchest   pain\tSYMPTOM\n\n", encoding="utf-8"
    )
    lex = load_lexicon(path, "str")
    assert lex.lookup("Aspirin") == "DRUG"
    assert lex.lookup("chest pain") == "SYMPTOM"
    assert lex.max_words == 2
    sem = tmp_path / "sent.tsv"
    sem.write_text("good\t1.0\nbad\t-1\n", encoding="utf-8")
    slex = load_lexicon(sem, "float")
    assert slex.lookup("bad") == -1.0
    bad = tmp_path / "bad.tsv"
    bad.write_text("only_one_column\n", encoding="utf-8")
    with pytest.raises(InvalidConfig):
        load_lexicon(bad, "str")
    badf = tmp_path / "badf.tsv"
    badf.write_text("word\tnot_a_float\n", encoding="utf-8")
    with pytest.raises(InvalidConfig):
        load_lexicon(badf, "float")


def test_processors_deterministic_bytes():
    def build():
        pack = new_pack("d", "Aspirin helps. Bad days happen.")
        Tokenizer().process(pack)
        SentenceSplitter().process(pack)
        _ner({"aspirin": "DRUG"}).process(pack)
        CooccurrenceRelations().process(pack)
        _sentiment({"bad": -1.0, "helps": 0.5}).process(pack)
        return serialize_pack(pack)

    assert build() == build()
