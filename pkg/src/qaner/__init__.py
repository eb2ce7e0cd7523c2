"""NER-as-extractive-QA toolkit.

Converts BIO-tagged corpora into SQuAD 2.0-format question answering
data (one question per entity type), decodes start/end logits back into
typed entity spans, and evaluates with entity-level micro F1 under
N-per-type few-shot sampling.
"""

from .convert import (
    ConversionMode,
    ConversionReport,
    QaInstance,
    convert_dataset,
    convert_sentence,
    emit_squad2,
    parse_squad2,
    spans_to_ner_prediction,
)
from .corpus import (
    ColumnOrder,
    EntitySpan,
    NerDataset,
    NerSentence,
    bio_from_spans,
    make_dataset,
    make_sentence,
    normalize_entity_type,
    parse_bio,
    serialize_bio,
    spans_from_bio,
)
from .decode import (
    DecodeConfig,
    DecodedSpan,
    LogitRecord,
    Position,
    accept_answers,
    decode_record,
    nbest_spans,
    softmax,
)
from .errors import (
    ConfigError,
    ConversionError,
    CorpusError,
    DecodeError,
    EvaluationError,
    MaskFillError,
    PromptError,
    QanerError,
    ScoringError,
)
from .evaluation import (
    DevRegime,
    EvalReport,
    SampleSpec,
    aggregate_reports,
    carve_dev,
    evaluate,
    make_splits,
    sample_few_shot,
)
from .prompts import (
    BUILTIN_PATTERNS,
    FIVE_WS,
    MaskFiller,
    PromptSet,
    PromptTemplate,
    TemplateKind,
    mask_fill_select,
    render_prompts,
)
from .scoring import (
    HttpScoringClient,
    OracleSpec,
    ScoringRequest,
    http_score,
    oracle_score,
    read_logit_records,
    write_logit_records,
)

__version__ = "0.1.0"
