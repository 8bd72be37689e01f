"""Ingestion of Stack Overflow style post dumps.

Parses the ``Posts``-style XML rows (or a simplified JSONL form), strips
HTML from bodies, applies tag filters, and persists the working corpus as
JSONL. Answers carry no tags in the dump, so they inherit the tag set of
their parent question; that makes tag filtering meaningful for both kinds.
"""

from __future__ import annotations

import html
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import IO, Iterable, Iterator

CORPUS_SCHEMA_VERSION = 1

QUESTION = "question"
ANSWER = "answer"


class CorpusError(Exception):
    """Base error for corpus handling."""


class DumpParseError(CorpusError):
    """Malformed dump input; carries the position of the offending content."""

    def __init__(self, message: str, *, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class SchemaVersionError(CorpusError):
    """Corpus store written by an incompatible schema version."""

    def __init__(self, found: object, supported: int = CORPUS_SCHEMA_VERSION):
        self.found = found
        self.supported = supported
        super().__init__(
            f"corpus store has schema_version {found!r}, this reader supports {supported}"
        )


@dataclass(frozen=True)
class Post:
    """One Q&A document. ``tags`` are lowercase; answers hold their parent's."""

    id: int
    kind: str  # QUESTION or ANSWER
    body_html: str
    body_text: str
    tags: frozenset[str] = frozenset()
    parent_id: int | None = None
    created_at: str | None = None  # ISO-8601

    def __post_init__(self):
        if self.id <= 0:
            raise CorpusError(f"post id must be positive, got {self.id}")
        if self.kind not in (QUESTION, ANSWER):
            raise CorpusError(f"unknown post kind {self.kind!r}")
        if (self.kind == ANSWER) != (self.parent_id is not None):
            raise CorpusError(f"post {self.id}: parent_id is required iff kind is answer")


@dataclass(frozen=True)
class TagFilter:
    """Keep posts tagged ``required_tag`` AND at least one of ``any_of_tags``."""

    required_tag: str
    any_of_tags: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "any_of_tags", frozenset(self.any_of_tags))
        tags = {self.required_tag, *self.any_of_tags}
        if not self.any_of_tags:
            raise CorpusError("any_of_tags must not be empty")
        for tag in tags:
            if not tag or tag != tag.lower():
                raise CorpusError(f"tags must be nonempty lowercase, got {tag!r}")

    def matches(self, tags: Iterable[str]) -> bool:
        tags = set(tags)
        return self.required_tag in tags and bool(tags & self.any_of_tags)

    def to_dict(self) -> dict:
        return {"required_tag": self.required_tag, "any_of_tags": sorted(self.any_of_tags)}

    @classmethod
    def from_dict(cls, d: dict) -> "TagFilter":
        return cls(required_tag=d["required_tag"], any_of_tags=frozenset(d["any_of_tags"]))


@dataclass
class ParseResult:
    """Posts plus ingestion tallies (skips never abort the whole parse)."""

    posts: list[Post]
    skipped_rows: int = 0  # rows whose PostTypeId/kind is not question/answer
    error_rows: int = 0  # rows missing mandatory attributes or duplicated ids
    orphan_answers: int = 0  # answers whose parent question is absent from the stream


@dataclass
class Corpus:
    """Working corpus; posts are kept sorted by ascending id."""

    posts: list[Post]
    filter: TagFilter | None = None
    source: str = ""

    def __post_init__(self):
        self.posts = sorted(self.posts, key=lambda p: p.id)
        seen: set[int] = set()
        for p in self.posts:
            if p.id in seen:
                raise CorpusError(f"duplicate post id {p.id} in corpus")
            seen.add(p.id)

    @property
    def total(self) -> int:
        return len(self.posts)

    @property
    def questions(self) -> int:
        return sum(1 for p in self.posts if p.kind == QUESTION)

    @property
    def answers(self) -> int:
        return sum(1 for p in self.posts if p.kind == ANSWER)


_TAG_RE = re.compile(r"<([^<>]+)>")
_WS_RE = re.compile(r"\s+")


def _split_tags(raw: str) -> frozenset[str]:
    raw = html.unescape(raw)
    found = _TAG_RE.findall(raw)
    if not found and raw.strip():
        # pipe-delimited form used by newer dumps
        found = [t for t in raw.split("|") if t]
    return frozenset(t.strip().lower() for t in found if t.strip())


class _TextExtractor(HTMLParser):
    """Lenient HTML-to-text: tags act as delimiters, never as errors."""

    _ALWAYS_DROP = {"script", "style"}
    _CODE = {"code", "pre"}

    def __init__(self, keep_code: bool):
        super().__init__(convert_charrefs=True)
        self.keep_code = keep_code
        self.parts: list[str] = []
        self._code_depth = 0
        self._drop_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._ALWAYS_DROP:
            self._drop_depth += 1
        elif tag in self._CODE:
            self._code_depth += 1

    def handle_endtag(self, tag):
        if tag in self._ALWAYS_DROP:
            self._drop_depth = max(0, self._drop_depth - 1)
        elif tag in self._CODE:
            self._code_depth = max(0, self._code_depth - 1)

    def handle_data(self, data):
        if self._drop_depth:
            return
        if self._code_depth and not self.keep_code:
            return
        self.parts.append(data)


def strip_html(body_html: str, keep_code: bool = True) -> str:
    """Remove markup, decode entities, collapse whitespace runs.

    Text inside ``<code>``/``<pre>`` is retained unless ``keep_code`` is
    False (component names often appear only in code snippets).
    """
    extractor = _TextExtractor(keep_code=keep_code)
    extractor.feed(body_html)
    extractor.close()
    return _WS_RE.sub(" ", " ".join(extractor.parts)).strip()


def _resolve_answer_tags(posts: list[Post]) -> tuple[list[Post], int]:
    """Give each answer its parent question's tags; count unresolvable parents."""
    question_tags = {p.id: p.tags for p in posts if p.kind == QUESTION}
    resolved: list[Post] = []
    orphans = 0
    for p in posts:
        if p.kind == ANSWER and not p.tags:
            parent_tags = question_tags.get(p.parent_id)
            if parent_tags is None:
                orphans += 1
            else:
                p = replace(p, tags=parent_tags)
        resolved.append(p)
    return resolved, orphans


def _parse_dump_xml(source: IO[bytes] | str | Path, keep_code: bool, include_title: bool) -> ParseResult:
    posts: list[Post] = []
    seen_ids: set[int] = set()
    result = ParseResult(posts=posts)
    try:
        for _, elem in ET.iterparse(source, events=("end",)):
            if elem.tag != "row":
                continue
            attrs = elem.attrib
            try:
                post_id = int(attrs["Id"])
                type_id = int(attrs["PostTypeId"])
            except (KeyError, ValueError):
                result.error_rows += 1
                elem.clear()
                continue
            if type_id not in (1, 2):
                result.skipped_rows += 1
                elem.clear()
                continue
            body = attrs.get("Body")
            if body is None or post_id in seen_ids:
                result.error_rows += 1
                elem.clear()
                continue
            created = attrs.get("CreationDate")
            text = strip_html(body, keep_code=keep_code)
            if type_id == 1:
                title = html.unescape(attrs.get("Title", "")) if include_title else ""
                if title:
                    text = f"{title} {text}".strip()
                posts.append(
                    Post(
                        id=post_id,
                        kind=QUESTION,
                        body_html=body,
                        body_text=text,
                        tags=_split_tags(attrs.get("Tags", "")),
                        created_at=created,
                    )
                )
            else:
                try:
                    parent_id = int(attrs["ParentId"])
                except (KeyError, ValueError):
                    result.error_rows += 1
                    elem.clear()
                    continue
                posts.append(
                    Post(
                        id=post_id,
                        kind=ANSWER,
                        body_html=body,
                        body_text=text,
                        parent_id=parent_id,
                        created_at=created,
                    )
                )
            seen_ids.add(post_id)
            elem.clear()
    except ET.ParseError as exc:
        line, _col = exc.position
        raise DumpParseError(f"malformed XML: {exc.msg}", line=line) from exc
    result.posts, result.orphan_answers = _resolve_answer_tags(posts)
    return result


def _parse_dump_jsonl(lines: Iterator[str], keep_code: bool) -> ParseResult:
    posts: list[Post] = []
    seen_ids: set[int] = set()
    result = ParseResult(posts=posts)
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DumpParseError(f"malformed JSON: {exc.msg}", line=lineno) from exc
        kind = row.get("kind")
        if kind not in (QUESTION, ANSWER):
            result.skipped_rows += 1
            continue
        if "id" not in row or "body_html" not in row or row["id"] in seen_ids:
            result.error_rows += 1
            continue
        if kind == ANSWER and row.get("parent_id") is None:
            result.error_rows += 1
            continue
        tags = row.get("tags")
        posts.append(
            Post(
                id=int(row["id"]),
                kind=kind,
                body_html=row["body_html"],
                body_text=strip_html(row["body_html"], keep_code=keep_code),
                tags=frozenset(t.lower() for t in tags) if tags else frozenset(),
                parent_id=row.get("parent_id"),
                created_at=row.get("created_at"),
            )
        )
        seen_ids.add(row["id"])
    result.posts, result.orphan_answers = _resolve_answer_tags(posts)
    return result


def parse_dump(
    source: IO[bytes] | str | Path,
    format: str = "dump-xml",
    *,
    keep_code: bool = True,
    include_title: bool = True,
) -> ParseResult:
    """Parse a posts dump into :class:`Post` objects plus skip/error tallies.

    ``dump-xml`` expects ``<row .../>`` elements with Id / PostTypeId /
    Body / Tags / ParentId attributes; ``jsonl`` expects one post object
    per line. Question titles are folded into ``body_text`` when present
    so the feature text covers them.
    """
    if format == "dump-xml":
        return _parse_dump_xml(source, keep_code, include_title)
    if format == "jsonl":
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                return _parse_dump_jsonl(iter(fh), keep_code)
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return _parse_dump_jsonl(iter(data.splitlines()), keep_code)
    raise CorpusError(f"unknown dump format {format!r}")


def filter_by_tags(posts: Iterable[Post], filter: TagFilter) -> list[Post]:
    """Order-preserving tag filter; an empty result is valid."""
    return [p for p in posts if filter.matches(p.tags)]


def _post_to_dict(p: Post) -> dict:
    return {
        "id": p.id,
        "kind": p.kind,
        "parent_id": p.parent_id,
        "tags": sorted(p.tags),
        "body_html": p.body_html,
        "body_text": p.body_text,
        "created_at": p.created_at,
    }


def _post_from_dict(d: dict) -> Post:
    return Post(
        id=d["id"],
        kind=d["kind"],
        parent_id=d.get("parent_id"),
        tags=frozenset(d.get("tags", ())),
        body_html=d["body_html"],
        body_text=d["body_text"],
        created_at=d.get("created_at"),
    )


def persist_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus store: one header line, then one post per line."""
    header = {
        "schema_version": CORPUS_SCHEMA_VERSION,
        "filter": corpus.filter.to_dict() if corpus.filter else None,
        "source": corpus.source,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for post in corpus.posts:
            fh.write(json.dumps(_post_to_dict(post), ensure_ascii=False) + "\n")


def load_corpus(path: str | Path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise CorpusError(f"{path}: missing corpus header line")
        header = json.loads(header_line)
        if header.get("schema_version") != CORPUS_SCHEMA_VERSION:
            raise SchemaVersionError(header.get("schema_version"))
        posts = [_post_from_dict(json.loads(line)) for line in fh if line.strip()]
    filt = TagFilter.from_dict(header["filter"]) if header.get("filter") else None
    return Corpus(posts=posts, filter=filt, source=header.get("source", ""))
