"""Bundled synthetic corpora: a tiny unambiguous set and a noisy review set.

Both are generated deterministically from fixed seeds so tests and demos
can rely on exact contents without shipping data files.  The noisy corpus
imitates the failure modes of real product reviews: sloppy punctuation,
typos inside mention words, and rare aspect terms that appear only once.
"""

from __future__ import annotations

from typing import Sequence

from .annotate import (AnnotatedDocument, EntityLabel, EntityMention,
                       RelationAnnotation)
from .corpus import ReviewDocument, Token, tokenize
from .neuralcore import RandomSource

ASPECTS = ["camera", "battery", "screen", "display", "speaker", "charger",
           "processor", "storage", "memory", "wifi", "keyboard", "microphone",
           "bluetooth", "flash", "touchscreen"]
ASPECTS_MULTI = ["battery life", "screen color", "camera quality",
                 "internal storage", "call recorder", "speaker volume",
                 "face unlock"]
RARE_ASPECTS = ["gyroscope", "haptics", "stylus", "notch", "bezel", "gimbal",
                "antenna", "magnetometer", "vibrator", "earpiece", "gorilla",
                "radiator", "slot", "tray", "diaphragm", "shutter", "visor",
                "crown", "hinge", "latch", "prism", "dial", "grille", "clasp"]
OPINIONS = ["good", "great", "poor", "bad", "nice", "terrible", "excellent",
            "awful", "decent", "amazing", "horrible", "weak", "fast", "slow",
            "crisp"]
OPINIONS_MULTI = ["quite good", "very poor", "really nice", "not great",
                  "too slow"]
FILLERS = ["the", "this", "phone", "is", "was", "and", "also", "but", "i",
           "think", "overall", "really", "so", "it", "its", "of", "a", "my",
           "new", "one"]


def _mention_by_phrase(tokens: Sequence[Token], phrase: str, label: str,
                       used: set[int]) -> EntityMention:
    """Locate the first unused occurrence of a phrase as consecutive tokens."""
    words = phrase.split()
    for i in range(len(tokens) - len(words) + 1):
        if any(j in used for j in range(i, i + len(words))):
            continue
        if [t.surface for t in tokens[i:i + len(words)]] == words:
            used.update(range(i, i + len(words)))
            return EntityMention(i, i + len(words), EntityLabel[label])
    raise ValueError(f"phrase {phrase!r} not found")


def make_annotated(doc_id: str, text: str,
                   entities: Sequence[tuple[str, str]],
                   relations: Sequence[tuple[int, int]] = (),
                   rating: int | None = None) -> AnnotatedDocument:
    """Build a gold document from phrase-level entity specs.

    ``entities`` lists (phrase, label) in mention order; ``relations`` are
    (head entity index, tail entity index) pairs.
    """
    document = ReviewDocument(id=doc_id, text=text, rating=rating)
    tokens = tokenize(text)
    used: set[int] = set()
    mentions = [_mention_by_phrase(tokens, phrase, label, used)
                for phrase, label in entities]
    rels = [RelationAnnotation(head=h, tail=t) for h, t in relations]
    return AnnotatedDocument.build(document, tokens, mentions, rels)


def tiny_overfit_docs() -> list[AnnotatedDocument]:
    """Ten unambiguous sentences for the overfit sanity check."""
    rows = [
        ("the camera is great", [("camera", "ASP"), ("great", "OPI")], [(0, 1)]),
        ("the battery is poor", [("battery", "ASP"), ("poor", "OPI")], [(0, 1)]),
        ("the screen is nice", [("screen", "ASP"), ("nice", "OPI")], [(0, 1)]),
        ("the speaker is terrible", [("speaker", "ASP"), ("terrible", "OPI")], [(0, 1)]),
        ("the charger is decent", [("charger", "ASP"), ("decent", "OPI")], [(0, 1)]),
        ("great camera and poor battery",
         [("great", "OPI"), ("camera", "ASP"), ("poor", "OPI"), ("battery", "ASP")],
         [(1, 0), (3, 2)]),
        ("nice screen and terrible speaker",
         [("nice", "OPI"), ("screen", "ASP"), ("terrible", "OPI"), ("speaker", "ASP")],
         [(1, 0), (3, 2)]),
        ("the display is poor", [("display", "ASP"), ("poor", "OPI")], [(0, 1)]),
        ("the battery life is great",
         [("battery life", "ASP"), ("great", "OPI")], [(0, 1)]),
        ("great value for money and the camera is decent",
         [("great value for money", "OPI"), ("camera", "ASP"), ("decent", "OPI")],
         [(1, 2)]),
    ]
    return [make_annotated(f"tiny{i:02d}", text, ents, rels)
            for i, (text, ents, rels) in enumerate(rows)]


def _typo(word: str, rs: RandomSource) -> str:
    """One seeded character-level corruption; never empties the word."""
    if len(word) < 3:
        return word + word[-1]
    op = int(rs.integers(0, 3))
    pos = int(rs.integers(1, len(word) - 1))
    if op == 0:  # swap adjacent
        chars = list(word)
        chars[pos], chars[pos - 1] = chars[pos - 1], chars[pos]
        return "".join(chars)
    if op == 1:  # drop one
        return word[:pos] + word[pos + 1:]
    return word[:pos] + word[pos] + word[pos:]  # double one


class _DocBuilder:
    """Accumulates words while tracking mention character spans."""

    def __init__(self) -> None:
        self.parts: list[str] = []
        self.length = 0
        self.entities: list[tuple[int, int, str]] = []
        self.relations: list[tuple[int, int]] = []

    def add(self, word: str) -> tuple[int, int]:
        if self.parts:
            self.parts.append(" ")
            self.length += 1
        start = self.length
        self.parts.append(word)
        self.length += len(word)
        return start, self.length

    def add_mention(self, phrase: str, label: str) -> int:
        start = None
        for word in phrase.split():
            s, e = self.add(word)
            if start is None:
                start = s
        self.entities.append((start, e, label))
        return len(self.entities) - 1

    def text(self) -> str:
        return "".join(self.parts)


def _maybe_typo(phrase: str, rs: RandomSource, p: float) -> str:
    if float(rs.random()) >= p:
        return phrase
    words = phrase.split()
    k = int(rs.integers(0, len(words)))
    words[k] = _typo(words[k], rs)
    return " ".join(words)


def _pick(rs: RandomSource, pool: Sequence[str]) -> str:
    return pool[int(rs.integers(0, len(pool)))]


def _junk_word(rs: RandomSource) -> str:
    return "".join(chr(97 + int(rs.integers(0, 26)))
                   for _ in range(int(rs.integers(4, 9))))


def _gen_clause(builder: _DocBuilder, rs: RandomSource, rare_pool: list[str],
                typo_p: float) -> None:
    kind = float(rs.random())
    if kind < 0.44:
        # "soup" clause: fillers around one content slot with no opinion cue.
        # The slot holds unlabeled junk or a labeled but rare/corrupted
        # aspect; unseen surfaces in this context are hard to recall, and
        # the junk keeps loose early-epoch models paying for spurious tags.
        for _ in range(int(rs.integers(1, 4))):
            builder.add(_pick(rs, FILLERS))
        if float(rs.random()) < 0.75:
            builder.add(_junk_word(rs))
            builder.add(_pick(rs, FILLERS))
            builder.add(_junk_word(rs))
        else:
            if rare_pool and float(rs.random()) < 0.5:
                aspect = rare_pool.pop()
            else:
                aspect = _typo(_pick(rs, ASPECTS), rs)
            builder.add_mention(aspect, "ASP")
        for _ in range(int(rs.integers(1, 3))):
            builder.add(_pick(rs, FILLERS))
        return
    # choose surfaces
    r = float(rs.random())
    if r < 0.15 and rare_pool:
        aspect = rare_pool.pop()
    elif r < 0.35:
        aspect = _pick(rs, ASPECTS_MULTI)
    else:
        aspect = _pick(rs, ASPECTS)
    opinion = (_pick(rs, OPINIONS_MULTI) if float(rs.random()) < 0.12
               else _pick(rs, OPINIONS))
    aspect = _maybe_typo(aspect, rs, typo_p)
    opinion = _maybe_typo(opinion, rs, typo_p)

    template = float(rs.random())
    if template < 0.3:  # "poor camera"
        o = builder.add_mention(opinion, "OPI")
        a = builder.add_mention(aspect, "ASP")
    elif template < 0.55:  # "camera is poor"
        a = builder.add_mention(aspect, "ASP")
        builder.add("is" if float(rs.random()) < 0.7 else "was")
        o = builder.add_mention(opinion, "OPI")
    elif template < 0.8:  # "the camera is poor"
        builder.add("the")
        a = builder.add_mention(aspect, "ASP")
        builder.add("is")
        o = builder.add_mention(opinion, "OPI")
    else:  # bare adjacency, "wifi poor"
        a = builder.add_mention(aspect, "ASP")
        o = builder.add_mention(opinion, "OPI")
    builder.relations.append((a, o))


_JOINERS = [",", "and", "but", "also", "!", ",,", "!!"]


def _gen_doc(doc_id: str, rs: RandomSource, rare_pool: list[str],
             typo_p: float) -> AnnotatedDocument:
    builder = _DocBuilder()
    n_clauses = int(rs.integers(1, 4))
    for c in range(n_clauses):
        if c > 0:
            builder.add(_pick(rs, _JOINERS))
        _gen_clause(builder, rs, rare_pool, typo_p)
    if float(rs.random()) < 0.3:
        builder.add(_pick(rs, ["!", ".", "..", "!!"]))
    document = ReviewDocument(id=doc_id, text=builder.text(),
                              rating=int(rs.integers(1, 6)))
    tokens = tokenize(document.text)
    mentions = []
    for start, end, label in builder.entities:
        covering = [i for i, t in enumerate(tokens)
                    if t.start < end and t.end > start]
        mentions.append(EntityMention(covering[0], covering[-1] + 1,
                                      EntityLabel[label]))
    relations = [RelationAnnotation(head=h, tail=t)
                 for h, t in builder.relations]
    return AnnotatedDocument.build(document, tokens, mentions, relations)


def noisy_review_corpus(n_docs: int = 150, seed: int = 20240501,
                        typo_p: float = 0.3) -> list[AnnotatedDocument]:
    """The desk-scale noisy corpus: ~150 annotated synthetic reviews."""
    rs = RandomSource(seed)
    rare = list(RARE_ASPECTS)
    rs.shuffle(rare)
    return [_gen_doc(f"r{i:03d}", rs.fork(f"doc{i}"), rare, typo_p)
            for i in range(n_docs)]


def unlabeled_review_corpus(n_docs: int = 80, seed: int = 917,
                            typo_p: float = 0.18) -> list[ReviewDocument]:
    """Unlabeled pool for MLM pretraining and self-training; ids disjoint."""
    rs = RandomSource(seed)
    rare: list[str] = []
    return [_gen_doc(f"u{i:03d}", rs.fork(f"doc{i}"), rare, typo_p).document
            for i in range(n_docs)]
