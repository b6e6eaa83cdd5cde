"""Pipeline configuration: a sectioned key = value file binding every stage.

A fully commented example with all defaults ships in configs/pipeline.ini.
Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path

from .align import AlignmentWeights, GateThresholds
from .corpus import VerbReassignRule, VocabularyPolicy, _parse_bool, _split_list
from .errors import InputDataError
from .lda import GibbsConfig
from .splsda import SplsdaConfig
from .synth import SynthSpec


@dataclass(frozen=True)
class PipelinePaths:
    tokens: Path | None = None
    dtm: Path | None = None
    hubs: Path | None = None
    taxonomy: Path | None = None
    topic_labels: Path | None = None
    output: Path = Path("out")


@dataclass(frozen=True)
class PipelineConfig:
    paths: PipelinePaths = field(default_factory=PipelinePaths)
    policy: VocabularyPolicy = field(default_factory=VocabularyPolicy)
    verb_reassign_enabled: bool = True
    target_block_size: float = 10.5
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    n_runs: int = 100
    base_seed: int = 1
    weights: AlignmentWeights = field(default_factory=AlignmentWeights)
    thresholds: GateThresholds = field(default_factory=GateThresholds)
    top_m: int = 30
    splsda: SplsdaConfig = field(default_factory=SplsdaConfig)
    synth: SynthSpec | None = None

    def __post_init__(self):
        if self.n_runs < 1:
            raise InputDataError("n_runs must be >= 1")


def _path(section, key: str, base: Path) -> Path | None:
    raw = section.get(key, "").strip()
    if not raw:
        return None
    p = Path(raw)
    return p if p.is_absolute() else base / p


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such config file: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise InputDataError(f"cannot parse {path}: {exc}") from None
    base = path.parent

    def section(name: str):
        return cp[name] if cp.has_section(name) else {}

    sec_paths = section("paths")
    paths = PipelinePaths(
        tokens=_path(sec_paths, "tokens", base),
        dtm=_path(sec_paths, "dtm", base),
        hubs=_path(sec_paths, "hubs", base),
        taxonomy=_path(sec_paths, "taxonomy", base),
        topic_labels=_path(sec_paths, "topic_labels", base),
        output=_path(sec_paths, "output", base) or Path("out"),
    )

    voc = section("vocabulary")
    vr = section("verb_reassign")
    policy_defaults = VocabularyPolicy()
    rule_defaults = VerbReassignRule()
    rule = VerbReassignRule(
        min_verb_share=float(vr.get("min_verb_share", rule_defaults.min_verb_share)),
        min_verb_occurrences=int(vr.get("min_verb_occurrences", rule_defaults.min_verb_occurrences)),
        min_lemma_length=int(vr.get("min_lemma_length", rule_defaults.min_lemma_length)),
        suffixes=_split_list(vr["suffixes"]) if "suffixes" in vr else rule_defaults.suffixes,
    )
    policy = VocabularyPolicy(
        allowed_pos=frozenset(_split_list(voc["allowed_pos"]))
        if "allowed_pos" in voc
        else policy_defaults.allowed_pos,
        min_count=int(voc.get("min_count", policy_defaults.min_count)),
        stopwords=frozenset(_split_list(voc.get("stopwords", ""))),
        lowercase_non_propn=_parse_bool(voc["lowercase_non_propn"], str(path))
        if "lowercase_non_propn" in voc
        else policy_defaults.lowercase_non_propn,
        verb_reassign=rule,
    )
    verb_enabled = (
        _parse_bool(vr["enabled"], str(path)) if "enabled" in vr else True
    )

    g = section("gibbs")
    gibbs_defaults = GibbsConfig()
    gibbs = GibbsConfig(
        k=int(g.get("k", gibbs_defaults.k)),
        alpha=float(g.get("alpha", gibbs_defaults.alpha)),
        beta_prior=float(g.get("beta", gibbs_defaults.beta_prior)),
        iterations=int(g.get("iterations", gibbs_defaults.iterations)),
        burn_in=int(g.get("burn_in", gibbs_defaults.burn_in)),
        thin=int(g.get("thin", gibbs_defaults.thin)),
    )

    e = section("ensemble")
    a = section("align")
    weights = AlignmentWeights(
        w_beta=float(a.get("w_beta", 0.5)), w_gamma=float(a.get("w_gamma", 0.5))
    )
    thresholds = GateThresholds(
        min_jaccard=float(a.get("min_jaccard", 0.30)),
        min_spearman=float(a.get("min_spearman", 0.60)),
        min_agreement=float(a.get("min_agreement", 0.60)),
    )

    s = section("splsda")
    splsda_defaults = SplsdaConfig()
    splsda = SplsdaConfig(
        n_comp=int(s.get("n_comp", splsda_defaults.n_comp)),
        keep_x=int(s.get("keep_x", splsda_defaults.keep_x)),
        cv_folds=int(s.get("cv_folds", splsda_defaults.cv_folds)),
        cv_repeats=int(s.get("cv_repeats", splsda_defaults.cv_repeats)),
        baseline_permutations=int(
            s.get("baseline_permutations", splsda_defaults.baseline_permutations)
        ),
        lambda_exclusive=float(s.get("lambda_exclusive", splsda_defaults.lambda_exclusive)),
        cv_seed=int(s.get("cv_seed", splsda_defaults.cv_seed)),
    )

    synth_spec = None
    if cp.has_section("synth"):
        sy = cp["synth"]
        defaults = SynthSpec()
        if "tokens_per_doc_max" in sy:
            tokens_per_doc: int | tuple[int, int] = (
                int(sy.get("tokens_per_doc", defaults.tokens_per_doc)),
                int(sy["tokens_per_doc_max"]),
            )
        else:
            tokens_per_doc = int(sy.get("tokens_per_doc", defaults.tokens_per_doc))
        synth_spec = SynthSpec(
            k=int(sy.get("k", defaults.k)),
            vocab_size=int(sy.get("vocab_size", defaults.vocab_size)),
            n_docs=int(sy.get("n_docs", defaults.n_docs)),
            tokens_per_doc=tokens_per_doc,
            alpha_true=float(sy.get("alpha_true", defaults.alpha_true)),
            phi_concentration=float(sy.get("phi_concentration", defaults.phi_concentration)),
            seed=int(sy.get("seed", defaults.seed)),
        )

    return PipelineConfig(
        paths=paths,
        policy=policy,
        verb_reassign_enabled=verb_enabled,
        target_block_size=float(section("corpus").get("target_block_size", 10.5)),
        gibbs=gibbs,
        n_runs=int(e.get("n_runs", 100)),
        base_seed=int(e.get("base_seed", 1)),
        weights=weights,
        thresholds=thresholds,
        top_m=int(a.get("top_m", 30)),
        splsda=splsda,
        synth=synth_spec,
    )


def load_topic_labels(path: str | Path, k: int) -> list[str]:
    """Optional topic labels CSV (topic, label); defaults to T1..TK."""
    labels = [f"T{t + 1}" for t in range(k)]
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            t = int(row["topic"]) - 1
            if not 0 <= t < k:
                raise InputDataError(f"topic {t + 1} out of range in {path}")
            labels[t] = row["label"]
    return labels
