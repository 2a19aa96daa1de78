"""Shared test utilities: random fixture generators and independent oracles."""

from __future__ import annotations

import numpy as np

from aoml.annotate import BioTag, EntityLabel, EntityMention


def random_mentions(rng: np.random.Generator, n_tokens: int,
                    max_mentions: int = 6) -> list[EntityMention]:
    """A random sorted set of non-overlapping mentions over n_tokens."""
    mentions = []
    pos = 0
    for _ in range(int(rng.integers(0, max_mentions + 1))):
        if pos >= n_tokens:
            break
        start = int(rng.integers(pos, n_tokens))
        end = int(rng.integers(start + 1, min(start + 4, n_tokens) + 1))
        label = EntityLabel.ASP if rng.random() < 0.5 else EntityLabel.OPI
        mentions.append(EntityMention(start, end, label))
        pos = end + int(rng.integers(0, 3))
    return mentions


def random_tags(rng: np.random.Generator, n_tokens: int) -> list[BioTag]:
    """Arbitrary (possibly ill-formed) tag sequence."""
    return [BioTag(int(rng.integers(0, 5))) for _ in range(n_tokens)]


def oracle_prf(gold_by_doc: dict, pred_by_doc: dict) -> tuple[int, float, float, float]:
    """Brute-force micro P/R/F1 by scanning every predicted item against
    the gold list of the same document; independent of the library path."""
    tp = 0
    n_pred = 0
    n_gold = 0
    for doc_id, gold_items in gold_by_doc.items():
        pred_items = pred_by_doc[doc_id]
        gold_left = list(gold_items)
        n_gold += len(gold_left)
        n_pred += len(pred_items)
        for item in pred_items:
            for k, g in enumerate(gold_left):
                if g == item:
                    tp += 1
                    del gold_left[k]
                    break
    if n_pred == 0 and n_gold == 0:
        return 0, 1.0, 1.0, 1.0
    p = tp / n_pred if n_pred else 0.0
    r = tp / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return tp, p, r, f
