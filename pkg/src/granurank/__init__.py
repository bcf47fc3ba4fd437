"""Any-granularity multi-vector ranking: encode passages once, then score
and rank whole passages, individual sentences, or proposition token sets
against the same token-level index."""

from .citation import (
    AnswerSentence,
    CitationResult,
    CitationVariant,
    GeneratedAnswer,
    PropositionCitation,
    SentenceCitations,
    cite_answer,
    cite_proposition,
    cite_sentence,
    cite_variant,
    citation_record,
    load_generated_answers,
    render_cited_text,
    save_citations,
    sentence_encoding_id,
)
from .core import (
    DataError,
    EmbeddingMatrix,
    Marker,
    PassageRecord,
    PropositionMask,
    QueryEncoding,
    RankingConfig,
    SentenceSpan,
    span_slice,
    validate_passage,
)
from .losses import (
    EmbeddingStudent,
    LossReport,
    PassageSet,
    StudentScorer,
    TeacherScores,
    aggregate_sentence_loss,
    kl_div,
    passage_loss,
    sentence_loss_per_passage,
    softmax_dist,
    total_loss,
)
from .metrics import (
    CitationReport,
    CitedSentence,
    EntailmentOracle,
    QrelByAnswer,
    SubstringOracle,
    citation_is_irrelevant,
    citation_scores,
    hit,
    normalize_text,
    parse_qrels,
    precision_at_1,
    recall_at_5,
)
from .scorer import (
    ScoreBreakdown,
    ScoredUnit,
    combined_sentence_score,
    maxsim,
    maxsim_rows,
    passage_score_from_sentence_encoding,
    rank_passages,
    rank_propositions,
    rank_sentences,
    score_proposition,
    score_sentence_in_passage,
)
from .storage import IndexKind, IndexManifest, read_index, sidecar_path, write_index
from .toy_encoder import (
    ParamGrads,
    Role,
    ToyEncoder,
    forward_with_cache,
    grad_check,
    init_toy_encoder,
    pack_grads,
    pack_params,
    toy_forward,
    unpack_params,
)
from .training import (
    MARKER_MODES,
    EpochMetrics,
    MarkerMode,
    TrainConfig,
    TrainingDiverged,
    TrainingExample,
    TrainingMode,
    TrainingPassage,
    TrainResult,
    ablation_csv_lines,
    build_vocab,
    evaluate_example,
    example_loss_and_grad,
    history_csv_lines,
    load_corpus,
    load_encoder,
    make_synthetic_corpus,
    marker_ablation,
    save_corpus,
    save_encoder,
    synth_sentence_labels,
    synthesize_teacher,
    tokenize_example,
    train_toy,
)

__all__ = [
    "AnswerSentence",
    "CitationReport",
    "CitationResult",
    "CitationVariant",
    "CitedSentence",
    "DataError",
    "EmbeddingMatrix",
    "EmbeddingStudent",
    "EntailmentOracle",
    "EpochMetrics",
    "GeneratedAnswer",
    "IndexKind",
    "IndexManifest",
    "LossReport",
    "MARKER_MODES",
    "Marker",
    "MarkerMode",
    "ParamGrads",
    "PassageRecord",
    "PassageSet",
    "PropositionCitation",
    "PropositionMask",
    "QrelByAnswer",
    "QueryEncoding",
    "RankingConfig",
    "Role",
    "ScoreBreakdown",
    "ScoredUnit",
    "SentenceCitations",
    "SentenceSpan",
    "StudentScorer",
    "SubstringOracle",
    "TeacherScores",
    "ToyEncoder",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "TrainingExample",
    "TrainingMode",
    "TrainingPassage",
    "ablation_csv_lines",
    "aggregate_sentence_loss",
    "build_vocab",
    "citation_is_irrelevant",
    "citation_record",
    "citation_scores",
    "cite_answer",
    "cite_proposition",
    "cite_sentence",
    "cite_variant",
    "combined_sentence_score",
    "evaluate_example",
    "example_loss_and_grad",
    "forward_with_cache",
    "grad_check",
    "history_csv_lines",
    "hit",
    "init_toy_encoder",
    "kl_div",
    "load_corpus",
    "load_encoder",
    "load_generated_answers",
    "make_synthetic_corpus",
    "marker_ablation",
    "maxsim",
    "maxsim_rows",
    "normalize_text",
    "pack_grads",
    "pack_params",
    "parse_qrels",
    "passage_loss",
    "passage_score_from_sentence_encoding",
    "precision_at_1",
    "rank_passages",
    "rank_propositions",
    "rank_sentences",
    "read_index",
    "recall_at_5",
    "render_cited_text",
    "save_citations",
    "save_corpus",
    "save_encoder",
    "score_proposition",
    "sentence_encoding_id",
    "score_sentence_in_passage",
    "sentence_loss_per_passage",
    "sidecar_path",
    "softmax_dist",
    "span_slice",
    "synth_sentence_labels",
    "synthesize_teacher",
    "tokenize_example",
    "total_loss",
    "toy_forward",
    "train_toy",
    "unpack_params",
]

__version__ = "0.1.0"
