from textaudit.corpus import Comment, LabeledCorpus
from textaudit.lexicon import default_gazetteer, default_lexicon, _lexicon_from_obj
from textaudit.mining import (
    annotate_corpus,
    annotations_to_jsonl,
    mine_gazetteer,
    mine_lookup,
)

LEX = default_lexicon()
GAZ = default_gazetteer()

ROW1 = (
    "A visit to the DC Holocaust Museum revealed Hitler won by 43% of the popular vote "
    "and 32% of the seats. He also used the Schutzstaffel (SS) to intimidate his "
    "opponents, reminding one of the Antifa thugs we have today. Hitler also got the "
    "Muslims on his side. Uncanny."
)
ROW2 = "Seton Catholic where their own students talk trash about how low of a division there football team is in."
ROW3 = (
    "How to develop their competitive skills and social skills in Home Schooling...as "
    "my child too complain abt bullying and unjust behaviour of teachers since she is "
    "super active..."
)


def test_lookup_male_pronouns():
    comment = Comment(id="1", text="He also used his power", label=0)
    refs = mine_lookup(comment, LEX)
    assert len(refs) == 1
    ref = refs[0]
    assert (ref.attribute, ref.subgroup, ref.method) == ("gender", "male", "lookup")
    assert [term for term, _ in ref.matched_terms] == ["he", "his"]


def test_lookup_female():
    comment = Comment(id="1", text="she is super active", label=0)
    refs = mine_lookup(comment, LEX)
    assert [(r.attribute, r.subgroup) for r in refs] == [("gender", "female")]
    assert [term for term, _ in refs[0].matched_terms] == ["she"]


def test_lookup_no_match():
    comment = Comment(id="1", text="the sky is blue", label=0)
    assert mine_lookup(comment, LEX) == []


def test_lookup_whole_token_only():
    comment = Comment(id="1", text="gayety and hugs", label=0)
    refs = mine_lookup(comment, LEX)
    # 'gayety' must not match 'gay'; 'hu' (ethnicity) must not match 'hugs'
    assert refs == []


def test_gazetteer_muslims():
    comment = Comment(id="1", text="Hitler also got the Muslims on his side", label=0)
    refs = mine_gazetteer(comment, GAZ)
    assert [(r.attribute, r.subgroup, r.method) for r in refs] == [("religion", "islam", "gazetteer")]
    assert [term for term, _ in refs[0].matched_terms] == ["muslims"]


def test_gazetteer_catholic():
    comment = Comment(id="1", text="Seton Catholic where their own students", label=0)
    refs = mine_gazetteer(comment, GAZ)
    assert [(r.attribute, r.subgroup) for r in refs] == [("religion", "christianity")]


def test_gazetteer_no_entries():
    comment = Comment(id="1", text="hello world", label=0)
    assert mine_gazetteer(comment, GAZ) == []


def test_annotate_table_trio():
    corpus = LabeledCorpus(
        [
            Comment(id="row1", text=ROW1, label=1),
            Comment(id="row2", text=ROW2, label=0),
            Comment(id="row3", text=ROW3, label=0),
        ]
    )
    annotated = annotate_corpus(corpus, LEX, GAZ)
    assert annotated.subgroups_referenced("row1", "gender") == {"male"}
    assert annotated.subgroups_referenced("row1", "religion") == {"islam"}
    assert annotated.subgroups_referenced("row2", "religion") == {"christianity"}
    assert annotated.subgroups_referenced("row2", "gender") == set()
    assert annotated.subgroups_referenced("row3", "gender") == {"female"}
    assert annotated.subgroups_referenced("row3", "religion") == set()


def test_annotate_empty_corpus():
    annotated = annotate_corpus(LabeledCorpus([]), LEX, GAZ)
    assert annotated.annotations == {}


def test_both_subgroups_retained():
    corpus = LabeledCorpus([Comment(id="1", text="he told her", label=0)])
    annotated = annotate_corpus(corpus, LEX, GAZ)
    assert annotated.subgroups_referenced("1", "gender") == {"male", "female"}


def test_lookup_gazetteer_dedup_by_span():
    # 'catholic' is both a christianity lexicon term and a gazetteer entry;
    # the identical span must appear once, with the lookup method winning.
    corpus = LabeledCorpus([Comment(id="1", text="the catholic school", label=0)])
    annotated = annotate_corpus(corpus, LEX, GAZ)
    refs = annotated.refs("1")
    assert [(r.attribute, r.subgroup, r.method) for r in refs] == [
        ("religion", "christianity", "lookup")
    ]


def test_gazetteer_only_subgroup_survives():
    corpus = LabeledCorpus([Comment(id="1", text="a jewish bakery", label=0)])
    annotated = annotate_corpus(corpus, LEX, GAZ)
    refs = annotated.refs("1")
    assert [(r.attribute, r.subgroup, r.method) for r in refs] == [
        ("religion", "judaism", "gazetteer")
    ]


def test_lookup_subset_of_annotate():
    comment = Comment(id="row1", text=ROW1, label=1)
    corpus = LabeledCorpus([comment])
    annotated = annotate_corpus(corpus, LEX, GAZ)
    flat = {
        (r.attribute, r.subgroup, span.start, span.end)
        for r in annotated.refs("row1")
        for _, span in r.matched_terms
    }
    for ref in mine_lookup(comment, LEX):
        for _, span in ref.matched_terms:
            assert (ref.attribute, ref.subgroup, span.start, span.end) in flat


def test_annotation_determinism():
    corpus = LabeledCorpus(
        [Comment(id="1", text=ROW1, label=1), Comment(id="2", text=ROW3, label=0)]
    )
    first = annotate_corpus(corpus, LEX, GAZ)
    second = annotate_corpus(corpus, LEX, GAZ)
    assert first.annotations == second.annotations


def test_matched_spans_equal_terms():
    corpus = LabeledCorpus([Comment(id="1", text="The Muslims and the catholic women", label=0)])
    annotated = annotate_corpus(corpus, LEX, GAZ)
    data = "The Muslims and the catholic women".encode("utf-8")
    for ref in annotated.refs("1"):
        for term, span in ref.matched_terms:
            assert data[span.start : span.end].decode().lower() == term


def test_multi_token_term_matching():
    lex = _lexicon_from_obj(
        {"origin": {"domestic": ["home town"], "foreign": ["far away"]}}
    )
    comment = Comment(id="1", text="back in my home town tonight", label=0)
    refs = mine_lookup(comment, lex)
    assert [(r.attribute, r.subgroup) for r in refs] == [("origin", "domestic")]
    term, span = refs[0].matched_terms[0]
    assert term == "home town"
    assert "back in my home town tonight".encode()[span.start : span.end].decode() == "home town"


def test_annotations_jsonl_export(fixture_annotated):
    text = annotations_to_jsonl(fixture_annotated)
    lines = [line for line in text.splitlines() if line]
    assert lines, "fixture corpus must produce annotations"
    import json

    first = json.loads(lines[0])
    assert set(first) == {"id", "attribute", "subgroup", "terms", "method"}
