"""Topic alignment across chains, stability gating and consensus mixtures.

Topic indices are non-identifiable across chains (label switching), so every
run is matched to a reference run by solving a maximum assignment on a
composite similarity: top-m Jaccard overlap of the topic-term rows blended
with Spearman correlation of the document-topic columns.  Runs failing the
stability gates are excluded from the consensus average.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import rankdata

from .errors import ComputationError, InputDataError
from .lda import LdaRun


@dataclass(frozen=True)
class AlignmentWeights:
    w_beta: float = 0.5
    w_gamma: float = 0.5

    def __post_init__(self):
        if not math.isclose(self.w_beta + self.w_gamma, 1.0, abs_tol=1e-12):
            raise InputDataError("alignment weights must sum to 1")
        if self.w_beta < 0 or self.w_gamma < 0:
            raise InputDataError("alignment weights must be non-negative")


@dataclass(frozen=True)
class GateThresholds:
    min_jaccard: float = 0.30
    min_spearman: float = 0.60
    min_agreement: float = 0.60


@dataclass(frozen=True)
class AlignmentScore:
    """Pairwise topic similarities between a run and the reference."""

    s_beta: np.ndarray  # K x K Jaccard@m overlaps
    r_gamma: np.ndarray  # K x K Spearman correlations (0 where undefined)
    composite: np.ndarray
    undefined_gamma: np.ndarray  # bool mask of zero-variance pairs
    weights: AlignmentWeights


@dataclass(frozen=True)
class RunAlignment:
    permutation: np.ndarray  # run topic i -> reference topic permutation[i]
    mean_jaccard30: float
    mean_spearman: float
    mapping_agreement: float
    retained: bool
    score: AlignmentScore


@dataclass(frozen=True)
class ConsensusResult:
    consensus_gamma: np.ndarray  # D x K, rows renormalised after averaging
    dominant_topic: np.ndarray  # per-document argmax
    runner_up_topic: np.ndarray
    n_eff: float
    retained_run_count: int
    per_topic_mean_jaccard: np.ndarray
    reference_index: int
    alignments: tuple[RunAlignment, ...]
    reference_top_terms: tuple[tuple[str, ...], ...] | None = None


def top_m_indices(weights: np.ndarray, m: int, lemmas: Sequence[str] | None = None) -> np.ndarray:
    """Indices of the m largest weights; ties broken by lemma (or index) order."""
    weights = np.asarray(weights, dtype=np.float64)
    if m > weights.shape[0]:
        raise InputDataError(f"m={m} exceeds vocabulary size {weights.shape[0]}")
    if lemmas is None:
        tiebreak = np.arange(weights.shape[0])
    else:
        tiebreak = np.asarray(lemmas)
    order = np.lexsort((tiebreak, -weights))
    return order[:m]


def top_terms(beta: np.ndarray, lemmas: Sequence[str], m: int = 30) -> list[tuple[str, ...]]:
    """Per-topic ranked top-m lemma lists."""
    return [
        tuple(str(lemmas[j]) for j in top_m_indices(row, m, lemmas))
        for row in np.asarray(beta)
    ]


def jaccard_top_m(
    beta_row_a: np.ndarray,
    beta_row_b: np.ndarray,
    m: int = 30,
    lemmas: Sequence[str] | None = None,
) -> float:
    """Jaccard overlap of the two rows' top-m index sets."""
    a = set(top_m_indices(beta_row_a, m, lemmas).tolist())
    b = set(top_m_indices(beta_row_b, m, lemmas).tolist())
    return len(a & b) / len(a | b)


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman rank correlation with average ranks on ties.

    Raises ComputationError when either input has zero rank variance.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.shape[0] < 2:
        raise InputDataError("spearman needs two equal-length vectors of length >= 2")
    rx = rankdata(x)
    ry = rankdata(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise ComputationError("zero-variance input: correlation undefined")
    return float(np.clip(float(dx @ dy) / denom, -1.0, 1.0))


def hungarian_max(score: np.ndarray) -> np.ndarray:
    """Bijection maximising the sum of selected entries.

    Returns ``perm`` with ``perm[i]`` the column assigned to row i.  Among
    maximising assignments the lexicographically smallest permutation is
    returned; candidate totals are compared as correctly rounded sums
    (math.fsum) so the tie-break is deterministic.
    """
    score = np.asarray(score, dtype=np.float64)
    if score.ndim != 2 or score.shape[0] != score.shape[1]:
        raise InputDataError("score matrix must be square")
    if not np.isfinite(score).all():
        raise InputDataError("score matrix must be finite")
    k = score.shape[0]
    rows, cols = linear_sum_assignment(score, maximize=True)
    best_total = math.fsum(score[i, j] for i, j in zip(rows, cols))

    perm = np.full(k, -1, dtype=np.int64)
    available = list(range(k))
    prefix: list[float] = []
    for i in range(k):
        chosen = -1
        for c in available:
            entries = prefix + [score[i, c]]
            remaining = [col for col in available if col != c]
            if remaining:
                sub = score[np.ix_(range(i + 1, k), remaining)]
                sr, sc = linear_sum_assignment(sub, maximize=True)
                entries = entries + [sub[a, b] for a, b in zip(sr, sc)]
            if math.fsum(entries) == best_total:
                chosen = c
                break
        if chosen < 0:
            # cannot happen mathematically; keep scipy's assignment as a net
            return np.asarray(cols[np.argsort(rows)], dtype=np.int64)
        perm[i] = chosen
        prefix.append(score[i, chosen])
        available.remove(chosen)
    return perm


def composite_similarity(
    run: LdaRun,
    reference: LdaRun,
    weights: AlignmentWeights | None = None,
    m: int = 30,
    lemmas: Sequence[str] | None = None,
) -> AlignmentScore:
    """Build S_beta, R_gamma and their weighted blend for one run/reference pair."""
    weights = weights or AlignmentWeights()
    if run.beta_matrix.shape != reference.beta_matrix.shape:
        raise InputDataError("runs have different topic/vocabulary dimensions")
    if run.gamma_matrix.shape != reference.gamma_matrix.shape:
        raise InputDataError("runs cover different document sets")
    k = run.n_topics
    s_beta = np.empty((k, k))
    r_gamma = np.zeros((k, k))
    undefined = np.zeros((k, k), dtype=bool)
    for i in range(k):
        for j in range(k):
            s_beta[i, j] = jaccard_top_m(
                run.beta_matrix[i], reference.beta_matrix[j], m, lemmas
            )
            try:
                r_gamma[i, j] = spearman(run.gamma_matrix[:, i], reference.gamma_matrix[:, j])
            except ComputationError:
                undefined[i, j] = True
    if undefined.any():
        warnings.warn(
            f"{int(undefined.sum())} gamma column pairs had zero variance; "
            "their correlation is treated as 0 in the composite",
            RuntimeWarning,
            stacklevel=2,
        )
    composite = weights.w_beta * s_beta + weights.w_gamma * r_gamma
    return AlignmentScore(
        s_beta=s_beta,
        r_gamma=r_gamma,
        composite=composite,
        undefined_gamma=undefined,
        weights=weights,
    )


def _matched_in_reference_order(matrix: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Gather matrix[i, perm[i]] ordered by reference topic index perm[i]."""
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(perm.shape[0])
    return np.array([matrix[inverse[t], t] for t in range(perm.shape[0])])


def align_run(
    run: LdaRun,
    reference: LdaRun,
    weights: AlignmentWeights | None = None,
    thresholds: GateThresholds | None = None,
    m: int = 30,
    lemmas: Sequence[str] | None = None,
) -> RunAlignment:
    """Match a run's topics to the reference and evaluate the stability gates."""
    thresholds = thresholds or GateThresholds()
    score = composite_similarity(run, reference, weights, m, lemmas)
    perm = hungarian_max(score.composite)
    matched_jaccard = _matched_in_reference_order(score.s_beta, perm)
    mean_jaccard = float(np.mean(matched_jaccard))

    matched_spearman = _matched_in_reference_order(score.r_gamma, perm)
    matched_defined = ~_matched_in_reference_order(score.undefined_gamma, perm).astype(bool)
    if matched_defined.any():
        mean_spearman = float(np.mean(matched_spearman[matched_defined]))
    else:
        warnings.warn(
            "all matched gamma pairs are zero-variance; mean Spearman set to 0",
            RuntimeWarning,
            stacklevel=2,
        )
        mean_spearman = 0.0

    perm_beta = hungarian_max(score.s_beta)
    perm_gamma = hungarian_max(score.r_gamma)
    agreement = float(np.mean(perm_beta == perm_gamma))
    retained = (
        mean_jaccard >= thresholds.min_jaccard
        and mean_spearman >= thresholds.min_spearman
        and agreement >= thresholds.min_agreement
    )
    return RunAlignment(
        permutation=perm,
        mean_jaccard30=mean_jaccard,
        mean_spearman=mean_spearman,
        mapping_agreement=agreement,
        retained=retained,
        score=score,
    )


def select_reference(runs: Sequence[LdaRun]) -> int:
    """Index of the run with maximal log-likelihood; ties go to the smallest seed."""
    if not runs:
        raise InputDataError("empty run list")
    return min(range(len(runs)), key=lambda i: (-runs[i].log_likelihood, runs[i].seed))


def realign_gamma(gamma: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Reorder gamma columns so column perm[i] holds the run's topic i."""
    out = np.empty_like(gamma)
    out[:, perm] = gamma
    return out


def n_eff(dominant_counts: Sequence[int]) -> float:
    """Inverse Simpson index of the dominant-topic proportions (1 .. K)."""
    counts = np.asarray(dominant_counts, dtype=np.float64)
    if counts.ndim != 1 or (counts < 0).any():
        raise InputDataError("counts must be a non-negative vector")
    total = counts.sum()
    if total == 0:
        raise InputDataError("all counts are zero")
    p = counts / total
    return float(1.0 / np.sum(p * p))


def consensus(
    runs: Sequence[LdaRun],
    reference_index: int | None = None,
    weights: AlignmentWeights | None = None,
    thresholds: GateThresholds | None = None,
    m: int = 30,
    lemmas: Sequence[str] | None = None,
) -> ConsensusResult:
    """Gate, realign and average the ensemble into a consensus mixture.

    The reference run is always retained (it trivially self-aligns); the
    remaining runs enter the average only when they pass every gate.  The
    per-topic top-m term lists are taken from the reference run.
    """
    if not runs:
        raise InputDataError("empty run list")
    if reference_index is None:
        reference_index = select_reference(runs)
    reference = runs[reference_index]
    k = reference.n_topics
    if k < 2:
        raise InputDataError("consensus needs at least two topics")

    alignments: list[RunAlignment] = []
    for idx, run in enumerate(runs):
        alignment = align_run(run, reference, weights, thresholds, m, lemmas)
        if idx == reference_index and not alignment.retained:
            alignment = RunAlignment(
                permutation=alignment.permutation,
                mean_jaccard30=alignment.mean_jaccard30,
                mean_spearman=alignment.mean_spearman,
                mapping_agreement=alignment.mapping_agreement,
                retained=True,
                score=alignment.score,
            )
        alignments.append(alignment)

    retained_idx = [i for i, a in enumerate(alignments) if a.retained]
    if not retained_idx:
        lines = ", ".join(
            f"run {i} (seed {runs[i].seed}): J={a.mean_jaccard30:.3f} "
            f"rho={a.mean_spearman:.3f} agree={a.mapping_agreement:.3f}"
            for i, a in enumerate(alignments)
        )
        raise ComputationError(f"every run was rejected by the gates: {lines}")

    gamma_sum = np.zeros_like(reference.gamma_matrix)
    for i in retained_idx:
        gamma_sum += realign_gamma(runs[i].gamma_matrix, alignments[i].permutation)
    consensus_gamma = gamma_sum / len(retained_idx)
    consensus_gamma = consensus_gamma / consensus_gamma.sum(axis=1, keepdims=True)

    order = np.argsort(-consensus_gamma, axis=1, kind="stable")
    dominant = order[:, 0]
    runner_up = order[:, 1]
    counts = np.bincount(dominant, minlength=k)
    per_topic = np.mean(
        [
            _matched_in_reference_order(alignments[i].score.s_beta, alignments[i].permutation)
            for i in retained_idx
        ],
        axis=0,
    )
    reference_terms = None
    if lemmas is not None:
        reference_terms = tuple(top_terms(reference.beta_matrix, lemmas, m))
    return ConsensusResult(
        consensus_gamma=consensus_gamma,
        dominant_topic=dominant,
        runner_up_topic=runner_up,
        n_eff=n_eff(counts),
        retained_run_count=len(retained_idx),
        per_topic_mean_jaccard=per_topic,
        reference_index=reference_index,
        alignments=tuple(alignments),
        reference_top_terms=reference_terms,
    )


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------


def write_alignment_report(
    runs: Sequence[LdaRun], alignments: Sequence[RunAlignment], path: str | Path
) -> None:
    """One row per run: seed, log-likelihood and gate diagnostics."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("seed,log_likelihood,mean_jaccard30,mean_spearman,mapping_agreement,retained\n")
        for run, a in zip(runs, alignments):
            fh.write(
                f"{run.seed},{run.log_likelihood!r},{a.mean_jaccard30!r},"
                f"{a.mean_spearman!r},{a.mapping_agreement!r},{str(a.retained).lower()}\n"
            )


def write_consensus(
    result: ConsensusResult,
    block_ids: Sequence[str],
    directory: str | Path,
    reference_seed: int | None = None,
) -> None:
    """Write consensus_gamma.csv, dominant.csv and summary.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    gamma = result.consensus_gamma
    k = gamma.shape[1]
    with open(directory / "consensus_gamma.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("block_id," + ",".join(f"topic_{t + 1}" for t in range(k)) + "\n")
        for block_id, row in zip(block_ids, gamma):
            fh.write(block_id + "," + ",".join(repr(float(x)) for x in row) + "\n")
    with open(directory / "dominant.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("block_id,dominant,runner_up,gamma_dominant,gamma_runner_up\n")
        for i, block_id in enumerate(block_ids):
            d = int(result.dominant_topic[i])
            r = int(result.runner_up_topic[i])
            fh.write(
                f"{block_id},{d + 1},{r + 1},{float(gamma[i, d])!r},{float(gamma[i, r])!r}\n"
            )
    summary = {
        "n_eff": result.n_eff,
        "retained_run_count": result.retained_run_count,
        "per_topic_mean_jaccard": [float(x) for x in result.per_topic_mean_jaccard],
        "reference_index": result.reference_index,
    }
    if reference_seed is not None:
        summary["reference_seed"] = reference_seed
    with open(directory / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if result.reference_top_terms is not None:
        with open(directory / "top_terms.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("topic,rank,lemma\n")
            for t, terms in enumerate(result.reference_top_terms):
                for rank, lemma in enumerate(terms, start=1):
                    fh.write(f"{t + 1},{rank},{lemma}\n")


def load_dominant(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read block ids and 0-based dominant topics back from dominant.csv."""
    import csv as _csv

    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    block_ids: list[str] = []
    dominant: list[int] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        for row in reader:
            block_ids.append(row["block_id"])
            dominant.append(int(row["dominant"]) - 1)
    return block_ids, np.asarray(dominant, dtype=np.int64)


def load_consensus_gamma(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read block ids and the consensus mixture back from consensus_gamma.csv."""
    import csv as _csv

    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    block_ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        next(reader)
        for row in reader:
            block_ids.append(row[0])
            rows.append([float(x) for x in row[1:]])
    return block_ids, np.asarray(rows, dtype=np.float64)


def load_top_terms(path: str | Path) -> list[tuple[str, ...]]:
    """Read per-topic term lists back from top_terms.csv."""
    import csv as _csv

    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    per_topic: dict[int, list[tuple[int, str]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        for row in reader:
            per_topic.setdefault(int(row["topic"]) - 1, []).append(
                (int(row["rank"]), row["lemma"])
            )
    return [
        tuple(lemma for _, lemma in sorted(per_topic[t]))
        for t in sorted(per_topic)
    ]
