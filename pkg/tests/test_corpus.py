import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from albench.corpus import (
    ANSWER,
    QUESTION,
    Corpus,
    CorpusError,
    DumpParseError,
    Post,
    SchemaVersionError,
    TagFilter,
    filter_by_tags,
    load_corpus,
    parse_dump,
    persist_corpus,
    strip_html,
)

XML_WRAP = '<?xml version="1.0" encoding="utf-8"?>\n<posts>\n{rows}\n</posts>'


def xml_stream(*rows: str) -> io.BytesIO:
    return io.BytesIO(XML_WRAP.format(rows="\n".join(rows)).encode("utf-8"))


# -- parse_dump -----------------------------------------------------------


def test_parse_question_row_decodes_tags_and_strips_html():
    stream = xml_stream(
        '<row Id="7" PostTypeId="1" Tags="&lt;performance&gt;&lt;nginx&gt;" Body="&lt;p&gt;hi&lt;/p&gt;" />'
    )
    result = parse_dump(stream, "dump-xml")
    assert len(result.posts) == 1
    post = result.posts[0]
    assert post.id == 7
    assert post.kind == QUESTION
    assert post.tags == frozenset({"performance", "nginx"})
    assert post.body_text == "hi"


def test_parse_answer_inherits_parent_tags():
    stream = xml_stream(
        '<row Id="7" PostTypeId="1" Tags="&lt;performance&gt;&lt;nginx&gt;" Body="&lt;p&gt;hi&lt;/p&gt;" />',
        '<row Id="9" PostTypeId="2" ParentId="7" Body="&lt;p&gt;ok&lt;/p&gt;" />',
    )
    result = parse_dump(stream, "dump-xml")
    answer = next(p for p in result.posts if p.kind == ANSWER)
    assert answer.id == 9
    assert answer.parent_id == 7
    assert answer.tags == frozenset({"performance", "nginx"})


def test_parse_skips_non_post_rows_and_counts():
    rows = [f'<row Id="{i}" PostTypeId="1" Tags="&lt;t&gt;" Body="b" />' for i in range(1, 5)]
    rows.append('<row Id="5" PostTypeId="4" Body="tag wiki" />')
    result = parse_dump(xml_stream(*rows), "dump-xml")
    assert len(result.posts) == 4
    assert result.skipped_rows == 1


def test_parse_title_is_folded_into_body_text():
    stream = xml_stream(
        '<row Id="3" PostTypeId="1" Title="Nginx slow" Tags="&lt;nginx&gt;" Body="&lt;p&gt;why?&lt;/p&gt;" />'
    )
    post = parse_dump(stream, "dump-xml").posts[0]
    assert post.body_text == "Nginx slow why?"


def test_parse_missing_mandatory_attribute_tallies_error_row():
    stream = xml_stream(
        '<row Id="1" PostTypeId="1" Body="ok" />',
        '<row Id="2" PostTypeId="1" />',  # no Body
        '<row PostTypeId="1" Body="no id" />',
        '<row Id="4" PostTypeId="2" Body="answer without parent" />',
    )
    result = parse_dump(stream, "dump-xml")
    assert [p.id for p in result.posts] == [1]
    assert result.error_rows == 3


def test_parse_orphan_answer_keeps_empty_tags_and_counts():
    stream = xml_stream('<row Id="9" PostTypeId="2" ParentId="7" Body="orphan" />')
    result = parse_dump(stream, "dump-xml")
    assert result.posts[0].tags == frozenset()
    assert result.orphan_answers == 1


def test_parse_malformed_xml_reports_position():
    stream = io.BytesIO(b"<posts>\n<row Id='1'\n")
    with pytest.raises(DumpParseError) as err:
        parse_dump(stream, "dump-xml")
    assert err.value.line is not None


def test_parse_duplicate_id_is_a_row_error():
    stream = xml_stream(
        '<row Id="1" PostTypeId="1" Body="first" />',
        '<row Id="1" PostTypeId="1" Body="again" />',
    )
    result = parse_dump(stream, "dump-xml")
    assert len(result.posts) == 1
    assert result.error_rows == 1


def test_parse_jsonl_roundtrip_of_fields():
    lines = [
        json.dumps({"id": 1, "kind": "question", "parent_id": None, "tags": ["Perf"],
                    "body_html": "<p>x</p>", "created_at": "2015-01-01T00:00:00"}),
        json.dumps({"id": 2, "kind": "answer", "parent_id": 1, "tags": None,
                    "body_html": "<p>y</p>", "created_at": None}),
    ]
    result = parse_dump(io.BytesIO("\n".join(lines).encode()), "jsonl")
    question, answer = result.posts
    assert question.tags == frozenset({"perf"})
    assert answer.tags == frozenset({"perf"})  # inherited
    assert answer.parent_id == 1


def test_parse_jsonl_malformed_line_reports_line_number():
    with pytest.raises(DumpParseError) as err:
        parse_dump(io.BytesIO(b'{"id": 1, "kind": "question", "body_html": "x"}\n{broken'), "jsonl")
    assert err.value.line == 2


# -- strip_html -----------------------------------------------------------


def test_strip_html_removes_markup():
    assert strip_html("<p>MySQL is <b>slow</b></p>") == "MySQL is slow"


def test_strip_html_drops_code_when_asked():
    assert strip_html("<pre><code>SELECT 1</code></pre>", keep_code=False) == ""
    assert strip_html("<pre><code>SELECT 1</code></pre>", keep_code=True) == "SELECT 1"


def test_strip_html_decodes_entities():
    assert strip_html("a &amp; b") == "a & b"


def test_strip_html_lenient_on_unbalanced_markup():
    assert strip_html("<p>open <b>bold") == "open bold"
    assert strip_html("</code>stray closers</pre> text") == "stray closers text"


_WORD = st.text(alphabet="abcdefg ", min_size=1, max_size=12)


@given(
    st.lists(
        st.one_of(_WORD, st.sampled_from(["<p>", "</p>", "<b>", "</b>", "<code>", "</code>", "<pre>", "</pre>"])),
        max_size=30,
    ),
    st.booleans(),
)
def test_strip_html_never_emits_markup_characters(parts, keep_code):
    text = strip_html("".join(parts), keep_code=keep_code)
    assert "<" not in text and ">" not in text


# -- filter_by_tags -------------------------------------------------------

FILTER = TagFilter("performance", frozenset({"apache", "nginx", "rails"}))


def make_post(post_id, tags):
    return Post(id=post_id, kind=QUESTION, body_html="", body_text="", tags=frozenset(tags))


def test_filter_keeps_required_plus_component_tag():
    assert filter_by_tags([make_post(1, {"performance", "nginx"})], FILTER) != []


def test_filter_drops_when_component_tag_missing():
    assert filter_by_tags([make_post(1, {"performance", "java"})], FILTER) == []


def test_filter_drops_when_required_tag_missing():
    assert filter_by_tags([make_post(1, {"nginx"})], FILTER) == []


@given(st.lists(st.sets(st.sampled_from(["performance", "apache", "nginx", "java", "php"])), max_size=25))
def test_filter_idempotent_order_preserving_and_shrinking(tag_sets):
    posts = [make_post(i + 1, tags) for i, tags in enumerate(tag_sets)]
    once = filter_by_tags(posts, FILTER)
    assert filter_by_tags(once, FILTER) == once
    assert len(once) <= len(posts)
    assert [p.id for p in once] == sorted(p.id for p in once)


def test_tag_filter_validation():
    with pytest.raises(CorpusError):
        TagFilter("performance", frozenset())
    with pytest.raises(CorpusError):
        TagFilter("Performance", frozenset({"nginx"}))


# -- persistence ----------------------------------------------------------


def test_persist_empty_corpus_is_header_only(tmp_path):
    path = tmp_path / "corpus.jsonl"
    persist_corpus(Corpus(posts=[], source="test"), path)
    assert len(path.read_text().splitlines()) == 1
    assert load_corpus(path) == Corpus(posts=[], source="test")


def test_persist_roundtrip_three_posts(tmp_path):
    corpus = Corpus(
        posts=[
            make_post(3, {"performance"}),
            Post(id=1, kind=QUESTION, body_html="<p>a</p>", body_text="a",
                 tags=frozenset({"x"}), created_at="2015-02-03T04:05:06"),
            Post(id=2, kind=ANSWER, body_html="<p>b</p>", body_text="b",
                 tags=frozenset({"x"}), parent_id=1),
        ],
        filter=FILTER,
        source="unit test",
    )
    path = tmp_path / "corpus.jsonl"
    persist_corpus(corpus, path)
    assert len(path.read_text().splitlines()) == 4
    assert load_corpus(path) == corpus


def test_load_rejects_unknown_schema_version(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(json.dumps({"schema_version": 99, "filter": None, "source": ""}) + "\n")
    with pytest.raises(SchemaVersionError) as err:
        load_corpus(path)
    assert "99" in str(err.value) and "1" in str(err.value)


@st.composite
def _corpora(draw):
    ids = draw(st.lists(st.integers(min_value=1, max_value=10_000), unique=True, max_size=12))
    posts = []
    for pid in ids:
        kind = draw(st.sampled_from([QUESTION, ANSWER]))
        posts.append(
            Post(
                id=pid,
                kind=kind,
                body_html=draw(st.text(max_size=20)),
                body_text=draw(st.text(alphabet="abc ", max_size=20)),
                tags=frozenset(draw(st.sets(st.sampled_from(["p", "q", "r"])))),
                parent_id=(pid + 1) if kind == ANSWER else None,
            )
        )
    return Corpus(posts=posts, source="prop")


@settings(max_examples=25, deadline=None)
@given(corpus=_corpora())
def test_persist_roundtrip_property(tmp_path_factory, corpus):
    path = tmp_path_factory.mktemp("rt") / "corpus.jsonl"
    persist_corpus(corpus, path)
    assert load_corpus(path) == corpus


def test_corpus_counts_and_ordering():
    corpus = Corpus(
        posts=[
            make_post(5, set()),
            Post(id=2, kind=ANSWER, body_html="", body_text="", parent_id=5),
        ]
    )
    assert [p.id for p in corpus.posts] == [2, 5]
    assert (corpus.total, corpus.questions, corpus.answers) == (2, 1, 1)


def test_corpus_rejects_duplicate_ids():
    with pytest.raises(CorpusError):
        Corpus(posts=[make_post(1, set()), make_post(1, set())])


def test_post_invariants():
    with pytest.raises(CorpusError):
        Post(id=0, kind=QUESTION, body_html="", body_text="")
    with pytest.raises(CorpusError):
        Post(id=1, kind=QUESTION, body_html="", body_text="", parent_id=2)
    with pytest.raises(CorpusError):
        Post(id=1, kind=ANSWER, body_html="", body_text="")


def test_strip_html_always_drops_script_and_style():
    assert strip_html("<p>ok</p><script>alert(1)</script>") == "ok"
    assert strip_html("<style>p{color:red}</style>fine") == "fine"
