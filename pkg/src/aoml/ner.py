"""First-stage model: token-level ASP/OPI tagger over the shared encoder.

Training is full-batch per document, deterministic for a fixed seed, and
never sees relation annotations.  The returned model is the snapshot from
the epoch with the best validation span F1 (earliest on ties).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotate import (AnnotatedDocument, BioTag, EntityMention, N_TAGS,
                       decode_bio, encode_bio)
from .corpus import ReviewDocument, Vocabulary, tokenize
from .encoder import (EncoderConfig, Linear, MlmModel, TransformerEncoder,
                      copy_encoder_weights, ids_for_tokens, load_checkpoint,
                      register_model_role)
from .errors import EmptyAfterTruncation, TooFewDocuments, VocabularyMismatch
from .evalmetrics import CurvePoint, TrainingCurve, span_prf
from . import neuralcore as nc
from .neuralcore import Adam, RandomSource

logger = logging.getLogger(__name__)

# Softmax rows can saturate to exactly 1.0 in 32-bit; published confidences
# stay strictly below 1 so a threshold of 1.0 can never be met.
MAX_CONFIDENCE = 1.0 - 1e-7


@dataclass
class TrainConfig:
    """Shared fine-tuning settings for both task models."""

    epochs: int = 300
    lr: float = 1e-3
    seed: int = 0
    validation_fraction: float = 0.2
    warm_start: str | Path | None = None
    freeze_encoder: bool = False
    overfit: bool = False  # validate on the training split itself

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must be in (0,1)")

    def to_json(self) -> dict:
        return {"epochs": self.epochs, "lr": self.lr, "seed": self.seed,
                "validation_fraction": self.validation_fraction,
                "warm_start": str(self.warm_start) if self.warm_start else None,
                "freeze_encoder": self.freeze_encoder, "overfit": self.overfit}

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(epochs=obj["epochs"], lr=obj["lr"], seed=obj["seed"],
                   validation_fraction=obj["validation_fraction"],
                   warm_start=obj.get("warm_start"),
                   freeze_encoder=obj.get("freeze_encoder", False),
                   overfit=obj.get("overfit", False))


class NerModel:
    """Encoder plus a 5-way tag head (BioTag ordinals); checkpoint role NER."""

    role = "NER"

    def __init__(self, config: EncoderConfig, vocab: Vocabulary, rs: RandomSource,
                 train_info: dict | None = None):
        self.config = config
        self.vocab = vocab
        self.encoder = TransformerEncoder(config, rs)
        self.head = Linear("ner_head", config.d_model, N_TAGS, rs)
        self.train_info = dict(train_info or {})

    def parameters(self):
        return self.encoder.parameters() + self.head.parameters()

    def config_json(self) -> dict:
        return {"role": self.role, "encoder": self.config.to_json(),
                "vocab": self.vocab.to_json(), "head": {"n_tags": N_TAGS},
                "train": self.train_info}

    @classmethod
    def from_config_json(cls, obj: dict) -> "NerModel":
        return cls(EncoderConfig.from_json(obj["encoder"]),
                   Vocabulary.from_json(obj["vocab"]), RandomSource(0),
                   train_info=obj.get("train"))

    def check_vocab(self, vocab: Vocabulary) -> None:
        if vocab.fingerprint() != self.vocab.fingerprint():
            raise VocabularyMismatch(
                "document vocabulary differs from the model's")

    def tag_logits(self, ids, train: bool = False, rng=None):
        hidden, enc_cache = self.encoder.forward(ids, train=train, rng=rng)
        logits, head_cache = self.head.forward(hidden)
        return logits, (enc_cache, head_cache)

    def backward(self, cache, dlogits):
        enc_cache, head_cache = cache
        dhidden = self.head.backward(head_cache, dlogits)
        self.encoder.backward(enc_cache, dhidden)


register_model_role("NER", NerModel.from_config_json)


def _clip_mentions(mentions, n_tokens: int, doc_id: str):
    """Drop or shorten mentions that fall beyond a truncated sequence."""
    clipped = []
    for m in mentions:
        if m.token_start >= n_tokens:
            logger.warning("doc %s: mention at token %d lost to truncation",
                           doc_id, m.token_start)
            continue
        if m.token_end > n_tokens:
            logger.warning("doc %s: mention clipped to truncated length", doc_id)
            m = EntityMention(m.token_start, n_tokens, m.label, m.confidence)
        clipped.append(m)
    return clipped


def _prepare_tagging(docs, vocab: Vocabulary, max_len: int):
    """Per-doc (ids, gold mentions, gold tag array) with truncation applied."""
    prepared = []
    for doc in docs:
        ids = ids_for_tokens(vocab, doc.tokens, max_len)
        if not ids:
            raise EmptyAfterTruncation(
                f"doc {doc.document.id!r} has no tokens to train on")
        mentions = _clip_mentions(doc.mentions, len(ids), doc.document.id)
        tags = np.asarray([int(t) for t in encode_bio(mentions, len(ids))],
                          dtype=np.int64)
        prepared.append((doc.document.id, ids, mentions, tags))
    return prepared


def split_indices(n: int, fraction: float, rs: RandomSource):
    """Seeded train/validation split with at least one document on each side."""
    order = rs.permutation(n)
    n_val = min(max(1, int(round(fraction * n))), n - 1)
    return sorted(order[n_val:].tolist()), sorted(order[:n_val].tolist())


def train_ner(docs: list[AnnotatedDocument], config: TrainConfig,
              vocab: Vocabulary | None = None,
              encoder_config: EncoderConfig | None = None
              ) -> tuple[NerModel, TrainingCurve]:
    """Fine-tune a tagger; relations on the input documents are ignored.

    With ``config.warm_start`` set, the encoder configuration and vocabulary
    are taken from the MLM checkpoint and its encoder weights are copied in;
    otherwise ``vocab`` is required.
    """
    if len(docs) < 2:
        raise TooFewDocuments("need at least 2 annotated documents")
    rs = RandomSource(config.seed)

    base: MlmModel | None = None
    if config.warm_start is not None:
        base = load_checkpoint(config.warm_start, expect_role="MLM")
        vocab = base.vocab
        encoder_config = base.config
    if vocab is None:
        raise ValueError("train_ner needs a vocabulary (or a warm-start checkpoint)")
    if encoder_config is None:
        encoder_config = EncoderConfig(vocab_size=vocab.size)

    model = NerModel(encoder_config, vocab, rs.fork("init"),
                     train_info=config.to_json())
    if base is not None:
        copy_encoder_weights(base.encoder, model.encoder)

    prepared = _prepare_tagging(docs, vocab, encoder_config.max_len)
    if config.overfit:
        train_idx = val_idx = list(range(len(prepared)))
    else:
        train_idx, val_idx = split_indices(len(prepared),
                                           config.validation_fraction,
                                           rs.fork("split"))

    trainable = (model.head.parameters() if config.freeze_encoder
                 else model.parameters())
    optimizer = Adam(trainable, lr=config.lr)
    drop_rng = rs.fork("dropout")
    order_rng = rs.fork("order")

    gold_by_doc = {prepared[i][0]: prepared[i][2] for i in val_idx}
    curve = TrainingCurve()
    best_f1 = -1.0
    best_values: list[np.ndarray] | None = None

    for epoch in range(config.epochs):
        order = [train_idx[i] for i in order_rng.permutation(len(train_idx))]
        train_losses = []
        for i in order:
            _, ids, _, tags = prepared[i]
            logits, cache = model.tag_logits(ids, train=True, rng=drop_rng)
            loss, loss_back = nc.cross_entropy(logits, tags)
            (dlogits,) = loss_back()
            model.backward(cache, dlogits)
            optimizer.step()
            train_losses.append(loss)

        val_losses = []
        pred_by_doc = {}
        for i in val_idx:
            doc_id, ids, _, tags = prepared[i]
            logits, _ = model.tag_logits(ids)
            loss, _ = nc.cross_entropy(logits, tags)
            val_losses.append(loss)
            pred_by_doc[doc_id] = decode_bio(logits.argmax(axis=-1).tolist())
        score = span_prf(gold_by_doc, pred_by_doc)
        curve.append(CurvePoint(epoch, float(np.mean(train_losses)),
                                float(np.mean(val_losses)), score.precision,
                                score.recall, score.f1))
        if score.f1 > best_f1:
            best_f1 = score.f1
            best_values = [p.value.copy() for p in model.parameters()]

    assert best_values is not None
    for p, value in zip(model.parameters(), best_values):
        p.value = value
        p.zero_grad()
    return model, curve


def mentions_from_tag_probs(probs: np.ndarray) -> list[EntityMention]:
    """Argmax rows, lenient BIO decode, confidence = mean winning probability
    over the mention's tokens (clamped strictly below 1)."""
    winners = probs.max(axis=-1)
    tags = probs.argmax(axis=-1).tolist()
    mentions = []
    for m in decode_bio(tags):
        confidence = float(np.minimum(
            winners[m.token_start:m.token_end], MAX_CONFIDENCE).mean())
        mentions.append(EntityMention(m.token_start, m.token_end, m.label,
                                      confidence=confidence))
    return mentions


def predict_ner(model: NerModel, document: ReviewDocument) -> list[EntityMention]:
    """Tag a raw document; mentions carry mean winning-tag probability."""
    tokens = tokenize(document.text)
    ids = ids_for_tokens(model.vocab, tokens, model.config.max_len)
    if not ids:
        return []
    logits, _ = model.tag_logits(ids)
    probs, _ = nc.row_softmax(logits)
    return mentions_from_tag_probs(probs)


def bio_tags_of(mentions, n_tokens: int) -> list[BioTag]:
    """Convenience re-export used by callers preparing supervision."""
    return encode_bio(mentions, n_tokens)
