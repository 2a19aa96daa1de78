"""Small transformer encoder, dynamic-masking MLM pretraining, checkpoints.

The encoder is the shared base of both task models: learned token and
position embeddings followed by post-norm blocks of multi-head
self-attention and a GELU feed-forward, one document (no batching) per
forward.  Pretraining it with a masked-language objective on unlabeled
review text gives the warm-start weights the task models fine-tune from.

Checkpoints are a fixed little-endian binary layout (magic ``AOML``) whose
round trip is bit-exact; the embedded JSON config carries the encoder
dimensions and the full vocabulary so a checkpoint is self-contained.
"""

from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import (FIRST_CONTENT_ID, MASK_ID, ReviewDocument, Token,
                     Vocabulary, tokenize)
from .errors import (EmptyCorpus, EmptySequence, FormatError, IdOutOfRange,
                     RoleMismatch, TensorShapeMismatch)
from . import neuralcore as nc
from .neuralcore import Adam, Parameter, RandomSource

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"AOML"
CHECKPOINT_VERSION = 1
ROLE_BYTES = {"MLM": 0, "NER": 1, "REL": 2}
ROLE_NAMES = {v: k for k, v in ROLE_BYTES.items()}

MASK_FRACTION = 0.15
INIT_STD = 0.02


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256
    max_len: int = 128
    dropout_p: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "d_model", "n_heads", "n_layers", "d_ff", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by "
                             f"n_heads {self.n_heads}")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValueError(f"dropout_p {self.dropout_p} not in [0,1)")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "EncoderConfig":
        return cls(**{k: obj[k] for k in
                      ("vocab_size", "d_model", "n_heads", "n_layers",
                       "d_ff", "max_len", "dropout_p")})


# --------------------------------------------------------------------------
# layers (stateless: forward returns an opaque cache consumed by backward,
# so inference over a frozen model never mutates shared state)
# --------------------------------------------------------------------------

class Linear:
    def __init__(self, name: str, d_in: int, d_out: int, rs: RandomSource):
        self.w = Parameter(f"{name}.w", rs.normal((d_in, d_out), std=INIT_STD))
        self.b = Parameter(f"{name}.b", np.zeros((1, d_out), dtype=nc.DTYPE))

    def parameters(self):
        return [self.w, self.b]

    def forward(self, x):
        return x @ self.w.value + self.b.value, x

    def backward(self, cache, g):
        x = cache
        self.w.grad += x.T @ g
        self.b.grad += g.sum(axis=0, keepdims=True)
        return g @ self.w.value.T


class LayerNorm:
    def __init__(self, name: str, d: int, eps: float = 1e-5):
        self.gamma = Parameter(f"{name}.gamma", np.ones((1, d), dtype=nc.DTYPE))
        self.beta = Parameter(f"{name}.beta", np.zeros((1, d), dtype=nc.DTYPE))
        self.eps = eps

    def parameters(self):
        return [self.gamma, self.beta]

    def forward(self, x):
        out, back = nc.layer_norm(x, self.gamma.value, self.beta.value, self.eps)
        return out, back

    def backward(self, cache, g):
        dx, dgamma, dbeta = cache(g)
        self.gamma.grad += dgamma
        self.beta.grad += dbeta
        return dx


class MultiHeadSelfAttention:
    def __init__(self, name: str, d_model: int, n_heads: int, rs: RandomSource):
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.scale = 1.0 / np.sqrt(self.d_head)
        self.wq = Linear(f"{name}.q", d_model, d_model, rs)
        self.wk = Linear(f"{name}.k", d_model, d_model, rs)
        self.wv = Linear(f"{name}.v", d_model, d_model, rs)
        self.wo = Linear(f"{name}.o", d_model, d_model, rs)

    def parameters(self):
        return (self.wq.parameters() + self.wk.parameters()
                + self.wv.parameters() + self.wo.parameters())

    def _split(self, x, t):
        return x.reshape(t, self.n_heads, self.d_head).transpose(1, 0, 2)

    def forward(self, x):
        t = x.shape[0]
        q, cq = self.wq.forward(x)
        k, ck = self.wk.forward(x)
        v, cv = self.wv.forward(x)
        qh, kh, vh = self._split(q, t), self._split(k, t), self._split(v, t)
        scores = (qh @ kh.transpose(0, 2, 1)) * np.asarray(self.scale, dtype=x.dtype)
        att, att_back = nc.row_softmax(scores)
        ctx = att @ vh
        merged = np.ascontiguousarray(ctx.transpose(1, 0, 2)).reshape(t, -1)
        out, co = self.wo.forward(merged)
        return out, (cq, ck, cv, qh, kh, vh, att, att_back, co, t)

    def backward(self, cache, g):
        cq, ck, cv, qh, kh, vh, att, att_back, co, t = cache
        dmerged = self.wo.backward(co, g)
        dctx = dmerged.reshape(t, self.n_heads, self.d_head).transpose(1, 0, 2)
        datt = dctx @ vh.transpose(0, 2, 1)
        dvh = att.transpose(0, 2, 1) @ dctx
        (dscores,) = att_back(datt)
        dscores = dscores * np.asarray(self.scale, dtype=g.dtype)
        dqh = dscores @ kh
        dkh = dscores.transpose(0, 2, 1) @ qh

        def merge(h):
            return np.ascontiguousarray(h.transpose(1, 0, 2)).reshape(t, -1)

        dx = self.wq.backward(cq, merge(dqh))
        dx += self.wk.backward(ck, merge(dkh))
        dx += self.wv.backward(cv, merge(dvh))
        return dx


class FeedForward:
    def __init__(self, name: str, d_model: int, d_ff: int, rs: RandomSource):
        self.lin1 = Linear(f"{name}.in", d_model, d_ff, rs)
        self.lin2 = Linear(f"{name}.out", d_ff, d_model, rs)

    def parameters(self):
        return self.lin1.parameters() + self.lin2.parameters()

    def forward(self, x):
        h, c1 = self.lin1.forward(x)
        a, gelu_back = nc.gelu(h)
        out, c2 = self.lin2.forward(a)
        return out, (c1, gelu_back, c2)

    def backward(self, cache, g):
        c1, gelu_back, c2 = cache
        da = self.lin2.backward(c2, g)
        (dh,) = gelu_back(da)
        return self.lin1.backward(c1, dh)


class EncoderBlock:
    """Post-norm block: LN(x + attn(x)) then LN(. + ff(.))."""

    def __init__(self, name: str, config: EncoderConfig, rs: RandomSource):
        self.attn = MultiHeadSelfAttention(f"{name}.attn", config.d_model,
                                           config.n_heads, rs)
        self.ln1 = LayerNorm(f"{name}.ln1", config.d_model)
        self.ff = FeedForward(f"{name}.ff", config.d_model, config.d_ff, rs)
        self.ln2 = LayerNorm(f"{name}.ln2", config.d_model)
        self.dropout_p = config.dropout_p

    def parameters(self):
        return (self.attn.parameters() + self.ln1.parameters()
                + self.ff.parameters() + self.ln2.parameters())

    def forward(self, x, train=False, rng=None):
        a, c_attn = self.attn.forward(x)
        a, d1 = nc.dropout(a, self.dropout_p, rng, train=train and rng is not None)
        n1, c_ln1 = self.ln1.forward(x + a)
        f, c_ff = self.ff.forward(n1)
        f, d2 = nc.dropout(f, self.dropout_p, rng, train=train and rng is not None)
        out, c_ln2 = self.ln2.forward(n1 + f)
        return out, (c_attn, d1, c_ln1, c_ff, d2, c_ln2)

    def backward(self, cache, g):
        c_attn, d1, c_ln1, c_ff, d2, c_ln2 = cache
        dh2 = self.ln2.backward(c_ln2, g)
        (df,) = d2(dh2)
        dn1 = dh2 + self.ff.backward(c_ff, df)
        dh1 = self.ln1.backward(c_ln1, dn1)
        (da,) = d1(dh1)
        return dh1 + self.attn.backward(c_attn, da)


class TransformerEncoder:
    def __init__(self, config: EncoderConfig, rs: RandomSource):
        self.config = config
        self.tok_emb = Parameter(
            "tok_emb", rs.normal((config.vocab_size, config.d_model), std=INIT_STD))
        self.pos_emb = Parameter(
            "pos_emb", rs.normal((config.max_len, config.d_model), std=INIT_STD))
        self.blocks = [EncoderBlock(f"block{i}", config, rs)
                       for i in range(config.n_layers)]
        self.dropout_p = config.dropout_p

    def parameters(self) -> list[Parameter]:
        params = [self.tok_emb, self.pos_emb]
        for block in self.blocks:
            params.extend(block.parameters())
        return params

    def _check_ids(self, ids: Sequence[int]) -> np.ndarray:
        arr = np.asarray(ids, dtype=np.int64)
        if arr.size == 0:
            raise EmptySequence("encoder received zero token ids")
        if arr.min() < 0 or arr.max() >= self.config.vocab_size:
            raise IdOutOfRange(
                f"token id outside [0,{self.config.vocab_size})")
        if arr.size > self.config.max_len:
            raise ValueError(f"sequence of {arr.size} ids exceeds max_len "
                             f"{self.config.max_len}; truncate upstream")
        return arr

    def forward(self, ids: Sequence[int], train: bool = False, rng=None):
        arr = self._check_ids(ids)
        t = arr.size
        x = self.tok_emb.value[arr] + self.pos_emb.value[:t]
        x, demb = nc.dropout(x, self.dropout_p, rng, train=train and rng is not None)
        caches = []
        for block in self.blocks:
            x, cache = block.forward(x, train=train, rng=rng)
            caches.append(cache)
        return x, (arr, demb, caches)

    def backward(self, cache, g):
        arr, demb, caches = cache
        for block, block_cache in zip(reversed(self.blocks), reversed(caches)):
            g = block.backward(block_cache, g)
        (g,) = demb(g)
        np.add.at(self.tok_emb.grad, arr, g)
        self.pos_emb.grad[:arr.size] += g

    def encode(self, ids: Sequence[int]) -> np.ndarray:
        """Contextual vectors, one row per token; inference mode."""
        out, _ = self.forward(ids, train=False)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("encoder produced non-finite output")
        return out


# --------------------------------------------------------------------------
# ids helper shared by every consumer of the encoder
# --------------------------------------------------------------------------

def ids_for_tokens(vocab: Vocabulary, tokens: Sequence[Token],
                   max_len: int) -> list[int]:
    """Vocabulary ids for tokens, truncated to max_len with a warning."""
    ids = vocab.encode(tokens)
    if len(ids) > max_len:
        logger.warning("truncating %d tokens to max_len %d", len(ids), max_len)
        ids = ids[:max_len]
    return ids


# --------------------------------------------------------------------------
# MLM pretraining (dynamic masking)
# --------------------------------------------------------------------------

class MlmModel:
    """Encoder plus a vocabulary-sized prediction head; checkpoint role MLM."""

    role = "MLM"

    def __init__(self, config: EncoderConfig, vocab: Vocabulary, rs: RandomSource,
                 train_info: dict | None = None):
        self.config = config
        self.vocab = vocab
        self.encoder = TransformerEncoder(config, rs)
        self.head = Linear("mlm_head", config.d_model, config.vocab_size, rs)
        self.train_info = dict(train_info or {})

    def parameters(self) -> list[Parameter]:
        return self.encoder.parameters() + self.head.parameters()

    def config_json(self) -> dict:
        return {"role": self.role, "encoder": self.config.to_json(),
                "vocab": self.vocab.to_json(), "train": self.train_info}

    @classmethod
    def from_config_json(cls, obj: dict) -> "MlmModel":
        return cls(EncoderConfig.from_json(obj["encoder"]),
                   Vocabulary.from_json(obj["vocab"]), RandomSource(0),
                   train_info=obj.get("train"))


def _mask_positions(n: int) -> int:
    """How many positions the dynamic mask selects (15%, round half up)."""
    return int(n * MASK_FRACTION + 0.5)


def apply_dynamic_mask(ids: Sequence[int], vocab_size: int, rs: RandomSource):
    """One fresh masking draw: returns (corrupted ids, target ids, loss mask).

    Of the selected positions, 80% become MASK, 10% a random content id,
    10% stay unchanged; targets hold the original ids at selected positions.
    """
    n = len(ids)
    k = _mask_positions(n)
    corrupted = np.asarray(ids, dtype=np.int64).copy()
    targets = corrupted.copy()
    mask = np.zeros(n, dtype=bool)
    if k == 0:
        return corrupted, targets, mask
    chosen = rs.choice(n, size=k, replace=False)
    for pos in chosen:
        mask[pos] = True
        u = float(rs.random())
        if u < 0.8:
            corrupted[pos] = MASK_ID
        elif u < 0.9 and vocab_size > FIRST_CONTENT_ID:
            corrupted[pos] = int(rs.integers(FIRST_CONTENT_ID, vocab_size))
        # else: leave the original id in place
    return corrupted, targets, mask


def mlm_pretrain(docs: Sequence[ReviewDocument], vocab: Vocabulary,
                 config: EncoderConfig | None = None, epochs: int = 50,
                 rs: RandomSource | None = None,
                 lr: float = 1e-3) -> tuple[MlmModel, list[float]]:
    """Pretrain with per-epoch re-sampled masking; returns model + loss log."""
    if not docs:
        raise EmptyCorpus("mlm_pretrain needs at least one document")
    if config is None:
        config = EncoderConfig(vocab_size=vocab.size)
    if config.vocab_size != vocab.size:
        raise ValueError(f"config.vocab_size {config.vocab_size} != vocabulary "
                         f"size {vocab.size}")
    rs = rs or RandomSource(0)
    seed = rs.seed
    model = MlmModel(config, vocab, rs.fork("init"),
                     train_info={"epochs": epochs, "lr": lr, "seed": seed})
    optimizer = Adam(model.parameters(), lr=lr)
    mask_rng = rs.fork("mask")
    drop_rng = rs.fork("dropout")
    order_rng = rs.fork("order")

    encoded = []
    for doc in docs:
        ids = ids_for_tokens(vocab, tokenize(doc.text), config.max_len)
        if ids:
            encoded.append(ids)
    if not encoded:
        raise EmptyCorpus("every document tokenized to nothing")

    losses: list[float] = []
    for _ in range(epochs):
        order = order_rng.permutation(len(encoded))
        epoch_losses = []
        for idx in order:
            ids = encoded[idx]
            corrupted, targets, mask = apply_dynamic_mask(ids, vocab.size, mask_rng)
            if not mask.any():
                continue
            hidden, cache = model.encoder.forward(corrupted, train=True, rng=drop_rng)
            logits, head_cache = model.head.forward(hidden)
            loss, loss_back = nc.cross_entropy(logits, targets, mask)
            (dlogits,) = loss_back()
            dhidden = model.head.backward(head_cache, dlogits)
            model.encoder.backward(cache, dhidden)
            optimizer.step()
            epoch_losses.append(loss)
        losses.append(float(np.mean(epoch_losses)) if epoch_losses else float("nan"))
    return model, losses


# --------------------------------------------------------------------------
# checkpoint serialization
# --------------------------------------------------------------------------

_MODEL_BUILDERS: dict[str, Callable[[dict], object]] = {"MLM": MlmModel.from_config_json}


def register_model_role(role: str, builder: Callable[[dict], object]) -> None:
    _MODEL_BUILDERS[role] = builder


def save_checkpoint(model, path: str | Path) -> None:
    """Write the documented little-endian binary layout; bit-exact round trip."""
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    buf.write(struct.pack("<B", ROLE_BYTES[model.role]))
    config = json.dumps(model.config_json(), sort_keys=True,
                        ensure_ascii=False).encode("utf-8")
    buf.write(struct.pack("<I", len(config)))
    buf.write(config)
    for param in model.parameters():
        name = param.name.encode("utf-8")
        rows, cols = param.value.shape
        buf.write(struct.pack("<I", len(name)))
        buf.write(name)
        buf.write(struct.pack("<II", rows, cols))
        buf.write(np.ascontiguousarray(param.value, dtype="<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


def _read_exact(buf: io.BytesIO, n: int, what: str) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise FormatError(f"truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path: str | Path, expect_role: str | None = None):
    """Reconstruct a model from a checkpoint file.

    Raises FormatError on bad magic/version/truncation, RoleMismatch when
    expect_role is given and differs, TensorShapeMismatch when a stored
    tensor does not fit the configuration.
    """
    raw = Path(path).read_bytes()
    buf = io.BytesIO(raw)
    if _read_exact(buf, 4, "magic") != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic, not an AOML checkpoint")
    (version,) = struct.unpack("<I", _read_exact(buf, 4, "version"))
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (role_byte,) = struct.unpack("<B", _read_exact(buf, 1, "role"))
    if role_byte not in ROLE_NAMES:
        raise FormatError(f"{path}: unknown role byte {role_byte}")
    role = ROLE_NAMES[role_byte]
    if expect_role is not None and role != expect_role:
        raise RoleMismatch(f"{path}: checkpoint role {role}, expected "
                           f"{expect_role} (pass an explicit warm-start flag "
                           f"to adapt an MLM base)")
    (config_len,) = struct.unpack("<I", _read_exact(buf, 4, "config length"))
    try:
        config = json.loads(_read_exact(buf, config_len, "config").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable config: {exc}") from exc

    tensors: dict[str, np.ndarray] = {}
    while buf.tell() < len(raw):
        (name_len,) = struct.unpack("<I", _read_exact(buf, 4, "tensor name length"))
        name = _read_exact(buf, name_len, "tensor name").decode("utf-8")
        rows, cols = struct.unpack("<II", _read_exact(buf, 8, "tensor shape"))
        data = _read_exact(buf, rows * cols * 4, f"tensor {name!r}")
        tensors[name] = np.frombuffer(data, dtype="<f4").reshape(rows, cols).copy()

    try:
        model = _MODEL_BUILDERS[role](config)
    except KeyError:
        raise FormatError(f"{path}: no builder registered for role {role}")
    params = {p.name: p for p in model.parameters()}
    if set(params) != set(tensors):
        missing = sorted(set(params) - set(tensors))
        extra = sorted(set(tensors) - set(params))
        raise FormatError(f"{path}: tensor set mismatch "
                          f"(missing {missing}, unexpected {extra})")
    for name, value in tensors.items():
        if params[name].value.shape != value.shape:
            raise TensorShapeMismatch(
                f"{path}: tensor {name!r} has shape {value.shape}, "
                f"expected {params[name].value.shape}")
        params[name].value = np.ascontiguousarray(value, dtype=nc.DTYPE)
        params[name].grad = np.zeros_like(params[name].value)
    return model


def copy_encoder_weights(source: TransformerEncoder, target: TransformerEncoder) -> None:
    """Exact tensor copy for warm starts; configs must agree."""
    if source.config != target.config:
        raise TensorShapeMismatch(
            f"encoder configs differ: {source.config} vs {target.config}")
    for src, dst in zip(source.parameters(), target.parameters()):
        dst.value[...] = src.value
