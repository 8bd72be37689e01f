"""albench: an active-learning annotation workbench.

Ingest a Stack Overflow style dump, train a linear SVM on sparse n-gram
features, hand annotators uncertainty-sampled batches, and measure both
classifier metrics and inter-rater agreement along the way.
"""

__version__ = "0.1.0"
