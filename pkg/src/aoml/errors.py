"""Exception hierarchy shared across the toolkit.

Every error the library raises deliberately derives from :class:`AomlError`,
so callers (CLI, HTTP service) can map library failures to exit codes or
status codes without catching bare ``Exception``.
"""


class AomlError(Exception):
    """Base class for all toolkit errors."""


# --- corpus / annotation ingestion ---------------------------------------

class ParseError(AomlError):
    """Malformed input file (JSONL corpus line, annotation JSON, curve CSV)."""


class DuplicateId(AomlError):
    """Two documents in one corpus share an id."""


class EmptyCorpus(AomlError):
    """An operation that needs documents received none."""


class InvalidSpan(AomlError):
    """Character span offsets out of range or inverted."""


class InvalidRelation(AomlError):
    """Relation with bad mention index, head == tail, or unknown label."""


class UnalignableSpan(AomlError):
    """Character span overlaps no token (e.g. whitespace only)."""


class OverlappingMentions(AomlError):
    """Two entity mentions share a token."""


# --- numeric core ----------------------------------------------------------

class ShapeMismatch(AomlError):
    """Operands with incompatible dimensions."""


class NonFiniteLoss(AomlError):
    """Forward pass produced NaN or Inf where a finite loss was required."""


# --- encoder / checkpoints -------------------------------------------------

class IdOutOfRange(AomlError):
    """Token id >= vocab_size fed to the encoder."""


class EmptySequence(AomlError):
    """Encoder received zero token ids."""


class FormatError(AomlError):
    """Checkpoint file with bad magic, version, or truncated payload."""


class RoleMismatch(AomlError):
    """Checkpoint role tag does not match the loading context."""


class TensorShapeMismatch(AomlError):
    """Checkpoint tensor does not fit the declared configuration."""


class VocabularyMismatch(AomlError):
    """Document was tokenized with a different vocabulary than the model's."""


# --- training --------------------------------------------------------------

class TooFewDocuments(AomlError):
    """Not enough documents to carve out a validation split."""


class EmptyAfterTruncation(AomlError):
    """A document has no usable tokens after max_len truncation."""


class NoPositives(AomlError):
    """Relation training set contains no gold relation anywhere."""


# --- evaluation ------------------------------------------------------------

class DocumentIdMismatch(AomlError):
    """Gold and predicted sets are keyed by different document ids."""


# --- pipeline / service ----------------------------------------------------

class NoUnlabeledDocuments(AomlError):
    """Self-training invoked with an empty unlabeled pool."""


class LockHeld(AomlError):
    """Another pipeline command holds the project directory lock."""
