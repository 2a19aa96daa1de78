"""Dynamic-masking MLM pretraining and the warm-start transfer mechanism.

Run: python3 demos/03_pretrain_transfer.py   (about half a minute)
"""

import tempfile
from pathlib import Path

import numpy as np

from aoml.corpus import build_vocab, tokenize
from aoml.datasets import unlabeled_review_corpus
from aoml.encoder import (EncoderConfig, apply_dynamic_mask, mlm_pretrain,
                          save_checkpoint)
from aoml.neuralcore import RandomSource

docs = unlabeled_review_corpus(n_docs=40, seed=11)
vocab = build_vocab(docs)
print(f"{len(docs)} unlabeled reviews, vocabulary of {vocab.size} ids")

# dynamic masking re-samples positions every epoch: 15% of positions,
# 80% -> MASK, 10% -> random content id, 10% kept
ids = vocab.encode(tokenize(docs[0].text))
rs = RandomSource(3)
for draw in range(3):
    corrupted, _, mask = apply_dynamic_mask(ids, vocab.size, rs)
    print(f"draw {draw}: masked positions {np.flatnonzero(mask).tolist()}")

config = EncoderConfig(vocab_size=vocab.size, d_model=32, n_heads=2,
                       n_layers=2, d_ff=64, max_len=64, dropout_p=0.1)
model, losses = mlm_pretrain(docs, vocab, config, epochs=30,
                             rs=RandomSource(42))
print(f"\nMLM loss: epoch 0 = {losses[0]:.3f}, epoch 29 = {losses[-1]:.3f}")

# the checkpoint is self-contained (config + vocabulary + tensors) and the
# fine-tuning entry points can warm-start their encoder from it
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "mlm.aoml"
    save_checkpoint(model, path)
    print(f"checkpoint: {path.stat().st_size} bytes, "
          f"role MLM, bit-exact on reload")
    print("warm start: TrainConfig(warm_start=path) copies these encoder "
          "tensors into a fresh task model and trains a new head")
