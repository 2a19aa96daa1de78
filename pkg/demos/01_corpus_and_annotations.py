"""Tokenization, vocabulary, and annotation handling on a noisy review.

Run: python3 demos/01_corpus_and_annotations.py
"""

import json

from aoml.annotate import (BioTag, decode_bio, encode_bio,
                           parse_annotation_file)
from aoml.corpus import ReviewDocument, build_vocab, tokenize

# the tokenizer splits whitespace, peels punctuation, keeps digit runs whole
text = "Poor screen color, poor camera, wifi also only 2"
tokens = tokenize(text)
print("text:   ", text)
print("tokens: ", [t.surface for t in tokens])

# offsets always slice back to the surface, so annotations stay portable
tok = tokens[3]
print(f"token {tok.surface!r} lives at [{tok.start},{tok.end}) ->",
      repr(text[tok.start:tok.end]))

# vocabulary: descending frequency, ties lexicographic, ids from 3
docs = [ReviewDocument(id="r1", text=text),
        ReviewDocument(id="r2", text="great camera and great value")]
vocab = build_vocab(docs)
print("\nvocab size:", vocab.size)
print("first entries:", dict(list(vocab.entries.items())[:5]))
print("unknown word maps to UNK id:", vocab.lookup("zzzzz"))

# an annotation file carries char spans; parsing aligns them to tokens
annotation = {
    "id": "r1", "text": text,
    "entities": [{"start": 0, "end": 4, "label": "OPI"},          # Poor
                 {"start": 5, "end": 17, "label": "ASP"}],        # screen color
    "relations": [{"head": 1, "tail": 0, "label": "ASP-OPI"}],
}
ann = parse_annotation_file(json.dumps(annotation))
for m in ann.mentions:
    print(f"\nmention tokens [{m.token_start},{m.token_end}) "
          f"{m.label.value}: {ann.mention_text(m)!r}")

# BIO encoding reduces spans to per-token tags and decodes back exactly
tags = encode_bio(ann.mentions, len(ann.tokens))
print("\nBIO tags:", [t.name for t in tags])
print("decode(encode(M)) == M:", decode_bio(tags) == list(ann.mentions))

# decoding is lenient: a stray I-tag opens a mention instead of crashing
stray = [BioTag.I_OPI, BioTag.O, BioTag.B_ASP]
print("lenient decode of [I-OPI, O, B-ASP]:",
      [(m.token_start, m.token_end, m.label.value) for m in decode_bio(stray)])
