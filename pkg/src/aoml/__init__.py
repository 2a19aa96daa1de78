"""Desk-scale aspect-opinion mining toolkit.

Two-stage pipeline over noisy product reviews: a token-level ASP/OPI span
tagger feeding an ASP-OPI relation scorer, both fine-tuned from a small
transformer encoder that can be MLM-pretrained on unlabeled text.  Includes
annotation ingestion, span/relation metrics with training curves, a
self-training loop, a command-line pipeline, and an annotation/review HTTP
service.
"""

from . import annotate, corpus, encoder, evalmetrics, neuralcore, ner, relex

__all__ = ["annotate", "corpus", "encoder", "evalmetrics", "neuralcore",
           "ner", "relex"]

__version__ = "0.1.0"
