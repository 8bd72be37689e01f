"""Synthetic corpora for demos and tests.

Documents get a class-marker token ("posclass"/"negclass") plus filler
drawn from a small vocabulary, which makes the two classes linearly
separable in n-gram space while leaving plenty of shared features.
"""

from __future__ import annotations

import random
from xml.sax.saxutils import escape, quoteattr

from .corpus import QUESTION, Corpus, Post

POS_MARKER = "posclass"
NEG_MARKER = "negclass"

_TAG_CYCLE = [
    frozenset({"performance", "nginx"}),
    frozenset({"performance", "apache"}),
    frozenset({"performance", "rails"}),
    frozenset({"performance", "java"}),
    frozenset({"nginx"}),
    frozenset({"performance"}),
]


def synthetic_documents(
    n: int,
    positive_fraction: float = 0.5,
    seed: int = 0,
    filler_vocab: int = 40,
    tokens_per_doc: int = 12,
) -> list[tuple[str, int]]:
    """(text, +/-1 label) pairs; positives contain POS_MARKER, negatives NEG_MARKER."""
    rng = random.Random(seed)
    fillers = [f"filler{i:02d}" for i in range(filler_vocab)]
    docs = []
    n_pos = round(n * positive_fraction)
    for i in range(n):
        label = 1 if i < n_pos else -1
        marker = POS_MARKER if label == 1 else NEG_MARKER
        tokens = [rng.choice(fillers) for _ in range(tokens_per_doc)]
        tokens.insert(rng.randrange(len(tokens) + 1), marker)
        docs.append((" ".join(tokens), label))
    rng.shuffle(docs)
    return docs


def synthetic_corpus(
    n: int,
    positive_fraction: float = 0.5,
    seed: int = 0,
    start_id: int = 1,
    **doc_kwargs,
) -> tuple[Corpus, dict[int, int]]:
    """A corpus of question posts plus the generating post_id -> label truth."""
    docs = synthetic_documents(n, positive_fraction, seed, **doc_kwargs)
    posts = []
    truth = {}
    for offset, (text, label) in enumerate(docs):
        post_id = start_id + offset
        posts.append(
            Post(
                id=post_id,
                kind=QUESTION,
                body_html=f"<p>{escape(text)}</p>",
                body_text=text,
                tags=_TAG_CYCLE[offset % len(_TAG_CYCLE)],
                created_at="2015-01-01T00:00:00",
            )
        )
        truth[post_id] = label
    return Corpus(posts=posts, source=f"synthetic(n={n}, seed={seed})"), truth


def dump_xml(posts: list[Post]) -> str:
    """Render posts as a ``Posts``-style XML dump string."""
    rows = []
    for p in posts:
        attrs = [f"Id={quoteattr(str(p.id))}"]
        if p.kind == QUESTION:
            attrs.append('PostTypeId="1"')
            tag_blob = "".join(f"<{t}>" for t in sorted(p.tags))
            attrs.append(f"Tags={quoteattr(tag_blob)}")
        else:
            attrs.append('PostTypeId="2"')
            attrs.append(f"ParentId={quoteattr(str(p.parent_id))}")
        attrs.append(f"Body={quoteattr(p.body_html)}")
        if p.created_at:
            attrs.append(f"CreationDate={quoteattr(p.created_at)}")
        rows.append(f"  <row {' '.join(attrs)} />")
    return "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n" + "\n".join(rows) + "\n</posts>\n"


def mixed_tag_posts(seed: int = 0) -> list[Post]:
    """Fifty question posts cycling through tag combinations (filter tests)."""
    rng = random.Random(seed)
    posts = []
    for i in range(50):
        text = f"sample body {rng.randrange(1000)}"
        posts.append(
            Post(
                id=i + 1,
                kind=QUESTION,
                body_html=f"<p>{text}</p>",
                body_text=text,
                tags=_TAG_CYCLE[i % len(_TAG_CYCLE)],
                created_at="2015-06-01T12:00:00",
            )
        )
    return posts
