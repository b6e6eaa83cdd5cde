"""Latent Dirichlet Allocation via collapsed Gibbs sampling.

A single chain is strictly sequential; the inner sweep is numba-compiled and
driven by the portable xoshiro256++ generator so a (corpus, config) pair is
bit-reproducible.  Point estimates average the thinned post-burn-in samples.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.special import gammaln

from ._xoshiro import GENERATOR_NAME, next_double, seed_state
from .corpus import DocumentTermMatrix
from .errors import InputDataError


@dataclass(frozen=True)
class GibbsConfig:
    k: int = 5
    alpha: float = 2.0
    beta_prior: float = 0.15
    iterations: int = 4000
    burn_in: int = 2000
    thin: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise InputDataError("k must be >= 1")
        if self.alpha <= 0 or self.beta_prior <= 0:
            raise InputDataError("priors must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise InputDataError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise InputDataError("thin must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InputDataError("seed must fit in 64 bits")


@dataclass(frozen=True)
class LdaRun:
    """Posterior summaries of one chain."""

    beta_matrix: np.ndarray  # K x V, row-stochastic topic-term weights
    gamma_matrix: np.ndarray  # D x K, row-stochastic document-topic mixtures
    log_likelihood: float
    seed: int
    config: GibbsConfig
    generator: str = GENERATOR_NAME

    @property
    def n_topics(self) -> int:
        return self.beta_matrix.shape[0]


def collapsed_log_likelihood(topic_word_counts: np.ndarray, beta_prior: float) -> float:
    """Collapsed log P(w | z) of an assignment state.

    sum_k [ log G(V b) - V log G(b) + sum_w log G(n_kw + b) - log G(n_k + V b) ]
    with G the gamma function; empty topics contribute zero.
    """
    n_kw = np.asarray(topic_word_counts, dtype=np.float64)
    if n_kw.ndim != 2:
        raise InputDataError("topic_word_counts must be 2-D")
    k, v = n_kw.shape
    n_k = n_kw.sum(axis=1)
    b = float(beta_prior)
    per_topic = (
        gammaln(v * b)
        - v * gammaln(b)
        + gammaln(n_kw + b).sum(axis=1)
        - gammaln(n_k + v * b)
    )
    return float(per_topic.sum())


def _token_arrays(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expand a count matrix to (doc_ids, word_ids) in stored order: documents
    in row order, tokens within a document in ascending vocabulary order."""
    n_docs, vocab = counts.shape
    doc_lengths = counts.sum(axis=1)
    doc_ids = np.repeat(np.arange(n_docs, dtype=np.int64), doc_lengths)
    word_ids = np.concatenate(
        [np.repeat(np.arange(vocab, dtype=np.int64), counts[d]) for d in range(n_docs)]
    )
    return doc_ids, word_ids


@njit(cache=True, nogil=True)
def _gibbs_kernel(doc_ids, word_ids, n_docs, vocab, k, alpha, beta, iterations, burn_in, thin, seed):
    state = seed_state(seed)
    n = doc_ids.shape[0]
    z = np.empty(n, dtype=np.int64)
    n_kw = np.zeros((k, vocab), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_d = np.zeros(n_docs, dtype=np.int64)

    for i in range(n):
        t = int(next_double(state) * k)
        if t == k:
            t = k - 1
        z[i] = t
        n_kw[t, word_ids[i]] += 1
        n_k[t] += 1
        n_dk[doc_ids[i], t] += 1
        n_d[doc_ids[i]] += 1

    beta_acc = np.zeros((k, vocab), dtype=np.float64)
    gamma_acc = np.zeros((n_docs, k), dtype=np.float64)
    cumulative = np.empty(k, dtype=np.float64)
    v_beta = vocab * beta
    k_alpha = k * alpha
    n_samples = 0

    for sweep in range(1, iterations + 1):
        for i in range(n):
            d = doc_ids[i]
            w = word_ids[i]
            t = z[i]
            n_kw[t, w] -= 1
            n_k[t] -= 1
            n_dk[d, t] -= 1
            total = 0.0
            for c in range(k):
                total += (n_kw[c, w] + beta) * (n_dk[d, c] + alpha) / (n_k[c] + v_beta)
                cumulative[c] = total
            u = next_double(state) * total
            t = 0
            while cumulative[t] < u and t < k - 1:
                t += 1
            z[i] = t
            n_kw[t, w] += 1
            n_k[t] += 1
            n_dk[d, t] += 1
        if sweep > burn_in and (sweep - burn_in) % thin == 0:
            n_samples += 1
            for c in range(k):
                denom = n_k[c] + v_beta
                for w in range(vocab):
                    beta_acc[c, w] += (n_kw[c, w] + beta) / denom
            for d in range(n_docs):
                denom = n_d[d] + k_alpha
                for c in range(k):
                    gamma_acc[d, c] += (n_dk[d, c] + alpha) / denom

    return beta_acc, gamma_acc, n_samples, n_kw, n_dk, z


def fit_lda(dtm: DocumentTermMatrix | np.ndarray, config: GibbsConfig) -> LdaRun:
    """Fit one chain and return averaged smoothed estimates of beta and gamma.

    Samples are taken every ``thin`` sweeps after burn-in; the log-likelihood
    is the collapsed log P(w | z) at the final state.
    """
    if isinstance(dtm, DocumentTermMatrix):
        counts = dtm.dense()
    elif sp.issparse(dtm):
        counts = np.asarray(dtm.todense(), dtype=np.int64)
    else:
        counts = np.asarray(dtm, dtype=np.int64)
    if counts.ndim != 2 or counts.size == 0:
        raise InputDataError("count matrix must be non-empty and 2-D")
    if (counts < 0).any():
        raise InputDataError("negative counts")
    n_docs, vocab = counts.shape
    if config.k > vocab:
        raise InputDataError(f"k={config.k} exceeds vocabulary size {vocab}")
    doc_lengths = counts.sum(axis=1)
    if (doc_lengths == 0).any():
        empty = np.flatnonzero(doc_lengths == 0).tolist()
        raise InputDataError(f"documents without tokens: {empty}")
    if config.iterations - config.burn_in < config.thin:
        raise InputDataError("no post-burn-in sample points; reduce thin or burn_in")

    doc_ids, word_ids = _token_arrays(counts)
    beta_acc, gamma_acc, n_samples, n_kw, _n_dk, _z = _gibbs_kernel(
        doc_ids,
        word_ids,
        n_docs,
        vocab,
        config.k,
        config.alpha,
        config.beta_prior,
        config.iterations,
        config.burn_in,
        config.thin,
        np.uint64(config.seed),
    )
    return LdaRun(
        beta_matrix=beta_acc / n_samples,
        gamma_matrix=gamma_acc / n_samples,
        log_likelihood=collapsed_log_likelihood(n_kw, config.beta_prior),
        seed=config.seed,
        config=config,
    )


def fit_ensemble(
    dtm: DocumentTermMatrix | np.ndarray,
    config: GibbsConfig,
    n_runs: int,
    base_seed: int,
    jobs: int = 1,
    progress=None,
) -> list[LdaRun]:
    """Fit ``n_runs`` independent chains seeded base_seed + i.

    Chains share no mutable state, so they may run on threads (the kernel
    releases the GIL); results come back in seed order regardless of jobs.
    """
    if n_runs < 1:
        raise InputDataError("n_runs must be >= 1")
    from dataclasses import replace as _replace

    configs = [_replace(config, seed=base_seed + i) for i in range(n_runs)]

    def one(cfg: GibbsConfig) -> LdaRun:
        run = fit_lda(dtm, cfg)
        if progress is not None:
            progress(run)
        return run

    if jobs <= 1:
        return [one(cfg) for cfg in configs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, configs))


# ---------------------------------------------------------------------------
# run directories
# ---------------------------------------------------------------------------


def _write_matrix_csv(path: Path, matrix: np.ndarray, header: Sequence[str], index: Sequence[str] | None = None, index_name: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        cols = ",".join(header)
        fh.write((f"{index_name}," if index is not None else "") + cols + "\n")
        for i, row in enumerate(matrix):
            prefix = f"{index[i]}," if index is not None else ""
            fh.write(prefix + ",".join(repr(float(x)) for x in row) + "\n")


def save_run(run: LdaRun, directory: str | Path, lemmas: Sequence[str] | None = None) -> None:
    """Write beta.csv, gamma.csv and meta.json for one chain."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    k, vocab = run.beta_matrix.shape
    beta_header = list(lemmas) if lemmas is not None else [f"w{j}" for j in range(vocab)]
    _write_matrix_csv(directory / "beta.csv", run.beta_matrix, beta_header)
    gamma_header = [f"topic_{t + 1}" for t in range(k)]
    _write_matrix_csv(directory / "gamma.csv", run.gamma_matrix, gamma_header)
    meta = {
        "seed": run.seed,
        "log_likelihood": run.log_likelihood,
        "generator": run.generator,
        "config": asdict(run.config),
    }
    with open(directory / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_run(directory: str | Path) -> LdaRun:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise InputDataError(f"no run metadata in {directory}")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    beta = np.loadtxt(directory / "beta.csv", delimiter=",", skiprows=1, ndmin=2)
    gamma = np.loadtxt(directory / "gamma.csv", delimiter=",", skiprows=1, ndmin=2)
    return LdaRun(
        beta_matrix=beta,
        gamma_matrix=gamma,
        log_likelihood=float(meta["log_likelihood"]),
        seed=int(meta["seed"]),
        config=GibbsConfig(**meta["config"]),
        generator=meta.get("generator", GENERATOR_NAME),
    )
