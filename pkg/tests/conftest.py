import pytest

from albench.features import build_vocabulary, vectorize
from albench.synthetic import synthetic_documents


@pytest.fixture(scope="session")
def separable_200():
    """200 separable documents: texts, labels, vocabulary, and vectors."""
    docs = synthetic_documents(200, positive_fraction=0.5, seed=3)
    vocab = build_vocabulary((text for text, _ in docs), min_df=2)
    vectors = [vectorize(text, vocab) for text, _ in docs]
    labels = [label for _, label in docs]
    return {"docs": docs, "vocab": vocab, "vectors": vectors, "labels": labels}
