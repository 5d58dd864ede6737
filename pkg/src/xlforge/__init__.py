"""xlforge: build translated summarization corpora with back-translation gating."""

from .corpus import Article, Corpus, CorpusError, SplitSpec, load_corpus, normalize_text, split_corpus
from .metrics import (
    BleuConfig,
    ChrfConfig,
    ScoreTriple,
    TerConfig,
    bleu,
    chrf,
    chrfpp,
    rouge_l,
    rouge_n,
    ter,
    tokenize_words,
)
from .pipeline import (
    GateDecision,
    GatePolicy,
    MetricReport,
    PipelineConfig,
    PipelineRecord,
    StageResult,
    Strategy,
    StrategyBinding,
    Verdict,
    evaluate_roundtrip,
    gate,
    run_cascade,
    run_corpus,
    run_strategy,
)

__version__ = "0.1.0"

__all__ = [
    "Article",
    "BleuConfig",
    "ChrfConfig",
    "Corpus",
    "CorpusError",
    "GateDecision",
    "GatePolicy",
    "MetricReport",
    "PipelineConfig",
    "PipelineRecord",
    "ScoreTriple",
    "SplitSpec",
    "StageResult",
    "Strategy",
    "StrategyBinding",
    "TerConfig",
    "Verdict",
    "bleu",
    "chrf",
    "chrfpp",
    "evaluate_roundtrip",
    "gate",
    "load_corpus",
    "normalize_text",
    "rouge_l",
    "rouge_n",
    "run_cascade",
    "run_corpus",
    "run_strategy",
    "split_corpus",
    "ter",
    "tokenize_words",
    "__version__",
]
