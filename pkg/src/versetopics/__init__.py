"""Consensus topic modelling and lexical analytics for single-work verse corpora.

Pipeline stages: stanza-block DTM construction (:mod:`versetopics.corpus`),
collapsed-Gibbs LDA ensembles (:mod:`versetopics.lda`), topic alignment and
consensus (:mod:`versetopics.align`), a sparse PLS-DA supervised probe
(:mod:`versetopics.splsda`), narrative-hub analytics (:mod:`versetopics.hubs`)
and a synthetic-corpus oracle (:mod:`versetopics.synth`).
"""

from .align import (
    AlignmentWeights,
    ConsensusResult,
    GateThresholds,
    RunAlignment,
    align_run,
    consensus,
    hungarian_max,
    jaccard_top_m,
    n_eff,
    select_reference,
    spearman,
    top_terms,
)
from .corpus import (
    BlockSegmentation,
    DocumentTermMatrix,
    TaggedToken,
    VerbReassignRule,
    VocabularyPolicy,
    apply_verb_reassignment,
    build_dtm,
    load_long_format,
    load_tokens,
    save_long_format,
    segment_blocks,
)
from .errors import ComputationError, EmptyResultError, InputDataError, VersetopicsError
from .hubs import (
    Hub,
    HubCard,
    HubProfile,
    SubthemeTaxonomy,
    build_hub_card,
    hub_beta_profile,
    hub_gamma,
    hub_lemma_counts,
    hub_weights,
)
from .lda import GibbsConfig, LdaRun, collapsed_log_likelihood, fit_ensemble, fit_lda
from .splsda import (
    ProbeReport,
    SplsdaConfig,
    SplsdaModel,
    TermDictionary,
    balanced_accuracy,
    consolidate_lexicon,
    cross_method_overlap,
    exclusivity,
    fit_splsda,
    predict,
    run_ovr_probe,
)
from .synth import RecoveryReport, SynthSpec, SyntheticCorpus, generate, score_recovery

__version__ = "0.1.0"

__all__ = [
    "AlignmentWeights",
    "BlockSegmentation",
    "ComputationError",
    "ConsensusResult",
    "DocumentTermMatrix",
    "EmptyResultError",
    "GateThresholds",
    "GibbsConfig",
    "Hub",
    "HubCard",
    "HubProfile",
    "InputDataError",
    "LdaRun",
    "ProbeReport",
    "RecoveryReport",
    "RunAlignment",
    "SplsdaConfig",
    "SplsdaModel",
    "SubthemeTaxonomy",
    "SynthSpec",
    "SyntheticCorpus",
    "TaggedToken",
    "TermDictionary",
    "VerbReassignRule",
    "VersetopicsError",
    "VocabularyPolicy",
    "align_run",
    "apply_verb_reassignment",
    "balanced_accuracy",
    "build_dtm",
    "build_hub_card",
    "collapsed_log_likelihood",
    "consensus",
    "consolidate_lexicon",
    "cross_method_overlap",
    "exclusivity",
    "fit_ensemble",
    "fit_lda",
    "fit_splsda",
    "generate",
    "hub_beta_profile",
    "hub_gamma",
    "hub_lemma_counts",
    "hub_weights",
    "hungarian_max",
    "jaccard_top_m",
    "load_long_format",
    "load_tokens",
    "n_eff",
    "predict",
    "run_ovr_probe",
    "save_long_format",
    "score_recovery",
    "segment_blocks",
    "select_reference",
    "spearman",
    "top_terms",
]
