"""Review documents, deterministic tokenization, and vocabulary construction.

The tokenizer is a rule-based splitter chosen for reproducibility on noisy
review text: split on Unicode whitespace, peel leading/trailing punctuation
characters into their own tokens, and keep maximal digit runs as single
tokens.  Offsets count Unicode scalar values (plain Python string indices),
never bytes.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateId, EmptyCorpus, ParseError

PAD_ID = 0
UNK_ID = 1
MASK_ID = 2
FIRST_CONTENT_ID = 3


@dataclass(frozen=True)
class ReviewDocument:
    """One raw review with optional metadata (date, rating, source)."""

    id: str
    text: str
    rating: int | None = None
    date: str | None = None
    source: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be nonempty")
        if not self.text:
            raise ValueError(f"document {self.id!r}: text must be nonempty")
        if self.rating is not None and not (1 <= self.rating <= 5):
            raise ValueError(f"document {self.id!r}: rating {self.rating} not in [1,5]")
        if self.date is not None:
            try:
                datetime.date.fromisoformat(self.date)
            except ValueError as exc:
                raise ValueError(f"document {self.id!r}: bad ISO date {self.date!r}") from exc


@dataclass(frozen=True)
class Token:
    """A surface string with half-open character offsets into its document."""

    surface: str
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad token offsets [{self.start},{self.end})")
        if self.end - self.start != len(self.surface):
            raise ValueError(f"token {self.surface!r} does not fit [{self.start},{self.end})")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def _split_chunk(text: str, start: int, end: int) -> Iterable[Token]:
    """Split one whitespace-free chunk per the tokenizer rule."""
    # leading punctuation, one token per character
    while start < end and _is_punct(text[start]):
        yield Token(text[start], start, start + 1)
        start += 1
    # trailing punctuation, collected then emitted after the core
    trailing = []
    while end > start and _is_punct(text[end - 1]):
        trailing.append(Token(text[end - 1], end - 1, end))
        end -= 1
    # core: maximal runs of digits vs. non-digits
    i = start
    while i < end:
        j = i + 1
        digit = text[i].isdigit()
        while j < end and text[j].isdigit() == digit:
            j += 1
        yield Token(text[i:j], i, j)
        i = j
    yield from reversed(trailing)


def tokenize(text: str) -> list[Token]:
    """Deterministically tokenize ``text``; total on any input, [] for ""."""
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        tokens.extend(_split_chunk(text, i, j))
        i = j
    return tokens


def detokenize(text: str, tokens: Sequence[Token]) -> str:
    """Rebuild the original text from tokens plus the inter-token gaps."""
    parts = []
    prev = 0
    for tok in tokens:
        parts.append(text[prev:tok.start])
        parts.append(tok.surface)
        prev = tok.end
    parts.append(text[prev:])
    return "".join(parts)


@dataclass
class Vocabulary:
    """Token-string to id map with reserved PAD=0, UNK=1, MASK=2.

    Content ids are contiguous from 3; unknown strings look up to UNK.
    """

    entries: dict[str, int]
    min_frequency: int = 1
    lowercase: bool = True
    _id_to_token: list[str] = field(init=False, repr=False)

    def __post_init__(self):
        expected = set(range(FIRST_CONTENT_ID, FIRST_CONTENT_ID + len(self.entries)))
        if set(self.entries.values()) != expected:
            raise ValueError("vocabulary ids must be contiguous from 3")
        inverse = ["<pad>", "<unk>", "<mask>"] + [""] * len(self.entries)
        for tok, idx in self.entries.items():
            inverse[idx] = tok
        self._id_to_token = inverse

    @property
    def size(self) -> int:
        return FIRST_CONTENT_ID + len(self.entries)

    def lookup(self, surface: str) -> int:
        if self.lowercase:
            surface = surface.lower()
        return self.entries.get(surface, UNK_ID)

    def encode(self, tokens: Sequence[Token]) -> list[int]:
        return [self.lookup(t.surface) for t in tokens]

    def token_for(self, idx: int) -> str:
        return self._id_to_token[idx]

    def fingerprint(self) -> str:
        """Content hash used to detect vocabulary mismatches across artifacts."""
        payload = json.dumps(
            {"entries": self.entries, "min_frequency": self.min_frequency,
             "lowercase": self.lowercase},
            sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_json(self) -> dict:
        return {"entries": self.entries, "min_frequency": self.min_frequency,
                "lowercase": self.lowercase}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return cls(entries={str(k): int(v) for k, v in obj["entries"].items()},
                   min_frequency=int(obj["min_frequency"]),
                   lowercase=bool(obj["lowercase"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, indent=1),
                              encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocab(corpus: Sequence[ReviewDocument], min_frequency: int = 1,
                lowercase: bool = True) -> Vocabulary:
    """Count token surfaces over the corpus and assign contiguous ids.

    Ids start at 3, in descending frequency, ties broken lexicographically.
    """
    if not corpus:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    counts: Counter[str] = Counter()
    for doc in corpus:
        for tok in tokenize(doc.text):
            surface = tok.surface.lower() if lowercase else tok.surface
            counts[surface] += 1
    kept = sorted((t for t, c in counts.items() if c >= min_frequency),
                  key=lambda t: (-counts[t], t))
    entries = {tok: FIRST_CONTENT_ID + i for i, tok in enumerate(kept)}
    return Vocabulary(entries=entries, min_frequency=min_frequency, lowercase=lowercase)


def load_corpus(path: str | Path) -> list[ReviewDocument]:
    """Load a JSONL corpus file, one document per line, order preserved."""
    path = Path(path)
    docs: list[ReviewDocument] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise ParseError(f"{path}:{lineno}: object must carry 'id' and 'text'")
            try:
                doc = ReviewDocument(
                    id=str(obj["id"]), text=str(obj["text"]),
                    rating=obj.get("rating"), date=obj.get("date"),
                    source=obj.get("source"))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if doc.id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return docs


def save_corpus(docs: Sequence[ReviewDocument], path: str | Path) -> None:
    """Write documents as JSONL (the inverse of :func:`load_corpus`)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            record = {"id": doc.id, "text": doc.text}
            for key in ("rating", "date", "source"):
                value = getattr(doc, key)
                if value is not None:
                    record[key] = value
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
