"""Second-stage model: scores ordered mention pairs for ASP-OPI relations.

Candidates are every ordered pair of distinct mentions, label-blind, so the
model can (and sometimes will) emit opinion-opinion pairs; that failure
mode is deliberately representable and measurable.  A pair is represented
by mean-pooled head, tail, and whole-sequence encoder states feeding a
small sigmoid head.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .annotate import AnnotatedDocument, EntityMention, RELATION_LABEL
from .corpus import ReviewDocument, Vocabulary, tokenize
from .encoder import (EncoderConfig, Linear, MlmModel, TransformerEncoder,
                      copy_encoder_weights, ids_for_tokens, load_checkpoint,
                      register_model_role)
from .errors import (EmptyAfterTruncation, NoPositives, TooFewDocuments,
                     VocabularyMismatch)
from .evalmetrics import CurvePoint, TrainingCurve, rel_prf
from .ner import MAX_CONFIDENCE, TrainConfig, _clip_mentions, split_indices
from . import neuralcore as nc
from .neuralcore import Adam, RandomSource

logger = logging.getLogger(__name__)

MIN_PROBABILITY = 1e-7
NEGATIVE_RATIO = 5
DEFAULT_THRESHOLD = 0.3


@dataclass(frozen=True)
class RelCandidate:
    """Ordered mention pair from one document; direction is significant."""

    head_index: int
    tail_index: int
    head: EntityMention
    tail: EntityMention


@dataclass(frozen=True)
class RelationPrediction:
    head: EntityMention
    tail: EntityMention
    probability: float
    label: str = RELATION_LABEL

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0):
            raise ValueError(f"probability {self.probability} not in [0,1]")


def gen_candidates(mentions: Sequence[EntityMention]) -> list[RelCandidate]:
    """All n(n-1) ordered pairs in (head index, tail index) order."""
    return [RelCandidate(i, j, mentions[i], mentions[j])
            for i in range(len(mentions))
            for j in range(len(mentions)) if i != j]


class RelModel:
    """Encoder plus a pair-scoring head; checkpoint role REL."""

    role = "REL"

    def __init__(self, config: EncoderConfig, vocab: Vocabulary, rs: RandomSource,
                 train_info: dict | None = None):
        self.config = config
        self.vocab = vocab
        self.encoder = TransformerEncoder(config, rs)
        self.hidden = Linear("rel_head.hidden", 3 * config.d_model, config.d_model, rs)
        self.out = Linear("rel_head.out", config.d_model, 1, rs)
        self.train_info = dict(train_info or {})

    def parameters(self):
        return (self.encoder.parameters() + self.hidden.parameters()
                + self.out.parameters())

    def config_json(self) -> dict:
        return {"role": self.role, "encoder": self.config.to_json(),
                "vocab": self.vocab.to_json(),
                "head": {"pair_width": 3 * self.config.d_model},
                "train": self.train_info}

    @classmethod
    def from_config_json(cls, obj: dict) -> "RelModel":
        return cls(EncoderConfig.from_json(obj["encoder"]),
                   Vocabulary.from_json(obj["vocab"]), RandomSource(0),
                   train_info=obj.get("train"))

    def check_vocab(self, vocab: Vocabulary) -> None:
        if vocab.fingerprint() != self.vocab.fingerprint():
            raise VocabularyMismatch(
                "document vocabulary differs from the model's")

    def _pair_features(self, states: np.ndarray,
                       candidates: Sequence[RelCandidate]) -> np.ndarray:
        d = states.shape[1]
        context = states.mean(axis=0)
        feats = np.empty((len(candidates), 3 * d), dtype=states.dtype)
        for row, c in enumerate(candidates):
            feats[row, :d] = states[c.head.token_start:c.head.token_end].mean(axis=0)
            feats[row, d:2 * d] = states[c.tail.token_start:c.tail.token_end].mean(axis=0)
            feats[row, 2 * d:] = context
        return feats

    def pair_logits(self, ids, candidates: Sequence[RelCandidate],
                    train: bool = False, rng=None):
        states, enc_cache = self.encoder.forward(ids, train=train, rng=rng)
        feats = self._pair_features(states, candidates)
        h, c_hidden = self.hidden.forward(feats)
        a, gelu_back = nc.gelu(h)
        logits, c_out = self.out.forward(a)
        cache = (enc_cache, states.shape, candidates, c_hidden, gelu_back, c_out)
        return logits[:, 0], cache

    def backward(self, cache, dlogits):
        enc_cache, state_shape, candidates, c_hidden, gelu_back, c_out = cache
        da = self.out.backward(c_out, dlogits[:, None])
        (dh,) = gelu_back(da)
        dfeats = self.hidden.backward(c_hidden, dh)
        t, d = state_shape
        dstates = np.zeros(state_shape, dtype=dfeats.dtype)
        for row, c in enumerate(candidates):
            h0, h1 = c.head.token_start, c.head.token_end
            t0, t1 = c.tail.token_start, c.tail.token_end
            dstates[h0:h1] += dfeats[row, :d] / (h1 - h0)
            dstates[t0:t1] += dfeats[row, d:2 * d] / (t1 - t0)
            dstates += dfeats[row, 2 * d:] / t
        self.encoder.backward(enc_cache, dstates)

    def pair_probabilities(self, ids, candidates) -> np.ndarray:
        """Clamped into (0,1): no emitted probability ever reaches 1.0."""
        logits, _ = self.pair_logits(ids, candidates)
        probs, _ = nc.sigmoid(logits)
        return np.clip(probs, MIN_PROBABILITY, MAX_CONFIDENCE)


register_model_role("REL", RelModel.from_config_json)


def _prepare_pairs(docs, vocab: Vocabulary, max_len: int):
    """Per-doc (ids, candidates, positive index set) over gold mentions."""
    prepared = []
    for doc in docs:
        ids = ids_for_tokens(vocab, doc.tokens, max_len)
        if not ids:
            raise EmptyAfterTruncation(
                f"doc {doc.document.id!r} has no tokens to train on")
        keep: list[EntityMention] = []
        index_map: dict[int, int] = {}
        for old, m in enumerate(doc.mentions):
            if m.token_start >= len(ids):
                logger.warning("doc %s: mention lost to truncation",
                               doc.document.id)
                continue
            if m.token_end > len(ids):
                m = EntityMention(m.token_start, len(ids), m.label)
            index_map[old] = len(keep)
            keep.append(m)
        candidates = gen_candidates(keep)
        positions = {(c.head_index, c.tail_index): k
                     for k, c in enumerate(candidates)}
        positives = set()
        for r in doc.relations:
            if r.head in index_map and r.tail in index_map:
                positives.add(positions[(index_map[r.head], index_map[r.tail])])
            else:
                logger.warning("doc %s: relation lost to truncation",
                               doc.document.id)
        prepared.append((doc.document.id, ids, candidates, positives))
    return prepared


def train_rel(docs: list[AnnotatedDocument], config: TrainConfig | None = None,
              vocab: Vocabulary | None = None,
              encoder_config: EncoderConfig | None = None,
              threshold: float = DEFAULT_THRESHOLD
              ) -> tuple[RelModel, TrainingCurve]:
    """Train the pair scorer on gold mentions with subsampled negatives.

    Positives are the gold (head, tail) pairs; negatives are all other
    candidates, capped per document at 5x the positives (seeded draw).
    Validation P/R/F1 uses the given emission threshold.
    """
    if config is None:
        config = TrainConfig(epochs=400)
    if len(docs) < 2:
        raise TooFewDocuments("need at least 2 annotated documents")
    base: MlmModel | None = None
    if config.warm_start is not None:
        base = load_checkpoint(config.warm_start, expect_role="MLM")
        vocab = base.vocab
        encoder_config = base.config
    if vocab is None:
        raise ValueError("train_rel needs a vocabulary (or a warm-start checkpoint)")
    if encoder_config is None:
        encoder_config = EncoderConfig(vocab_size=vocab.size)
    rs = RandomSource(config.seed)

    prepared = _prepare_pairs(docs, vocab, encoder_config.max_len)
    if not any(positives for *_, positives in prepared):
        raise NoPositives("no document carries a gold relation")

    if config.overfit:
        train_idx = val_idx = list(range(len(prepared)))
    else:
        train_idx, val_idx = split_indices(len(prepared),
                                           config.validation_fraction,
                                           rs.fork("split"))

    # per-doc training batches: positives plus <= 5x sampled negatives
    neg_rng = rs.fork("negatives")
    batches = []
    for i in train_idx:
        doc_id, ids, candidates, positives = prepared[i]
        if not positives:
            continue
        negatives = [k for k in range(len(candidates)) if k not in positives]
        cap = NEGATIVE_RATIO * len(positives)
        if len(negatives) > cap:
            chosen = neg_rng.choice(len(negatives), size=cap, replace=False)
            negatives = [negatives[int(k)] for k in sorted(chosen)]
        rows = sorted(positives) + negatives
        labels = np.asarray([1.0 if k in positives else 0.0 for k in rows],
                            dtype=nc.DTYPE)
        batches.append((ids, [candidates[k] for k in rows], labels))
    if not batches:
        raise NoPositives("training split carries no gold relation")

    model = RelModel(encoder_config, vocab, rs.fork("init"),
                     train_info=dict(config.to_json(), threshold=threshold))
    if base is not None:
        copy_encoder_weights(base.encoder, model.encoder)
    trainable = ((model.hidden.parameters() + model.out.parameters())
                 if config.freeze_encoder else model.parameters())
    optimizer = Adam(trainable, lr=config.lr)
    drop_rng = rs.fork("dropout")
    order_rng = rs.fork("order")

    gold_by_doc = {}
    for i in val_idx:
        doc_id, _, candidates, positives = prepared[i]
        gold_by_doc[doc_id] = [(candidates[k].head, candidates[k].tail)
                               for k in sorted(positives)]

    curve = TrainingCurve()
    best_f1 = -1.0
    best_values: list[np.ndarray] | None = None

    for epoch in range(config.epochs):
        order = [i for i in order_rng.permutation(len(batches))]
        train_losses = []
        for i in order:
            ids, candidates, labels = batches[i]
            logits, cache = model.pair_logits(ids, candidates, train=True,
                                              rng=drop_rng)
            loss, loss_back = nc.binary_cross_entropy(logits, labels)
            (dlogits,) = loss_back()
            model.backward(cache, dlogits)
            optimizer.step()
            train_losses.append(loss)

        val_losses = []
        pred_by_doc = {}
        for i in val_idx:
            doc_id, ids, candidates, positives = prepared[i]
            pred_by_doc[doc_id] = []
            if not candidates:
                continue
            labels = np.asarray([1.0 if k in positives else 0.0
                                 for k in range(len(candidates))], dtype=nc.DTYPE)
            logits, _ = model.pair_logits(ids, candidates)
            loss, _ = nc.binary_cross_entropy(logits, labels)
            val_losses.append(loss)
            probs, _ = nc.sigmoid(logits)
            pred_by_doc[doc_id] = [(c.head, c.tail)
                                   for c, p in zip(candidates, probs)
                                   if p >= threshold]
        score = rel_prf(gold_by_doc, pred_by_doc)
        curve.append(CurvePoint(epoch, float(np.mean(train_losses)),
                                float(np.mean(val_losses)) if val_losses else 0.0,
                                score.precision, score.recall, score.f1))
        if score.f1 > best_f1:
            best_f1 = score.f1
            best_values = [p.value.copy() for p in model.parameters()]

    assert best_values is not None
    for p, value in zip(model.parameters(), best_values):
        p.value = value
        p.zero_grad()
    return model, curve


def predict_rel(model: RelModel, document: ReviewDocument,
                mentions: Sequence[EntityMention],
                threshold: float = DEFAULT_THRESHOLD) -> list[RelationPrediction]:
    """Score every ordered mention pair; emit those at or above threshold,
    sorted by descending probability."""
    tokens = tokenize(document.text)
    ids = ids_for_tokens(model.vocab, tokens, model.config.max_len)
    if not ids:
        return []
    usable = _clip_mentions(mentions, len(ids), document.id)
    candidates = gen_candidates(usable)
    if not candidates:
        return []
    probs = model.pair_probabilities(ids, candidates)
    predictions = [RelationPrediction(c.head, c.tail, float(p))
                   for c, p in zip(candidates, probs) if p >= threshold]
    predictions.sort(key=lambda r: -r.probability)
    return predictions
