"""Exception hierarchy shared by the library, the service, and the CLI.

Every error carries a short machine-parsable ``category`` so the CLI can
emit one-line diagnostics and the service can map failures to stable
error payloads.
"""


class QanerError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class CorpusError(QanerError):
    """Malformed BIO input or invalid sentence/span construction."""

    category = "corpus-error"


class PromptError(QanerError):
    """Invalid template, missing handcrafted mapping, or bad prompt set."""

    category = "prompt-error"


class MaskFillError(PromptError):
    """Mask filling produced no usable token."""

    category = "mask-fill-error"


class ConversionError(QanerError):
    """NER-to-QA conversion failed or produced inconsistent instances."""

    category = "conversion-error"


class DecodeError(QanerError):
    """Invalid logit record or decoding configuration."""

    category = "decode-error"


class ScoringError(QanerError):
    """Logits file or scoring endpoint failure."""

    category = "scoring-error"


class EvaluationError(QanerError):
    """Gold/prediction mismatch during evaluation or sampling."""

    category = "eval-error"


class ConfigError(QanerError):
    """Bad run configuration or missing referenced files."""

    category = "config-error"
