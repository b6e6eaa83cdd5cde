"""Synthetic corpora with known topic structure, plus recovery scoring.

The generator stands in for the source text, which cannot be redistributed:
it draws topic-term rows and document mixtures from Dirichlet distributions,
samples tokens topic-then-word, and reports how well a fitted model recovers
the truth after optimal topic matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .align import hungarian_max, realign_gamma
from .corpus import DocumentTermMatrix, TaggedToken, save_long_format, save_tokens
from .errors import InputDataError


@dataclass(frozen=True)
class SynthSpec:
    k: int = 5
    vocab_size: int = 750
    n_docs: int = 35
    tokens_per_doc: int | tuple[int, int] = 165  # fixed, or inclusive uniform range
    alpha_true: float = 2.0
    phi_concentration: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.vocab_size < self.k or self.n_docs < 1:
            raise InputDataError("need k >= 1, vocab_size >= k, n_docs >= 1")
        if self.alpha_true <= 0 or self.phi_concentration <= 0:
            raise InputDataError("Dirichlet parameters must be positive")
        lo, hi = self._length_range()
        if lo < 1 or hi < lo:
            raise InputDataError("tokens_per_doc must be positive")

    def _length_range(self) -> tuple[int, int]:
        if isinstance(self.tokens_per_doc, tuple):
            return self.tokens_per_doc
        return self.tokens_per_doc, self.tokens_per_doc


@dataclass(frozen=True)
class SyntheticCorpus:
    """A generated corpus with its ground truth."""

    dtm: DocumentTermMatrix  # all-zero lemma columns dropped
    true_phi: np.ndarray  # K x vocab_size over the full vocabulary
    true_theta: np.ndarray  # D x K
    lemmas: tuple[str, ...]  # full vocabulary, index-aligned with true_phi

    @property
    def full_sparsity(self) -> float:
        """Sparsity over the generator's full vocabulary, including the
        columns that never occurred and were dropped from the DTM."""
        rows = self.dtm.counts.shape[0]
        return 1.0 - self.dtm.counts.nnz / (rows * len(self.lemmas))


@dataclass(frozen=True)
class RecoveryReport:
    permutation: np.ndarray  # recovered topic i -> true topic permutation[i]
    matched_cosines: np.ndarray
    mean_cosine: float
    mean_tv: float


def _full_lemmas(vocab_size: int) -> tuple[str, ...]:
    width = len(str(vocab_size - 1))
    return tuple(f"w{j:0{width}d}" for j in range(vocab_size))


def generate(spec: SynthSpec) -> SyntheticCorpus:
    """Draw a corpus from the standard generative process, deterministically."""
    rng = np.random.default_rng(spec.seed)
    phi = rng.dirichlet(np.full(spec.vocab_size, spec.phi_concentration), size=spec.k)
    theta = rng.dirichlet(np.full(spec.k, spec.alpha_true), size=spec.n_docs)
    lo, hi = spec._length_range()
    lengths = (
        np.full(spec.n_docs, lo, dtype=np.int64)
        if lo == hi
        else rng.integers(lo, hi + 1, size=spec.n_docs)
    )
    counts = np.zeros((spec.n_docs, spec.vocab_size), dtype=np.int64)
    for d in range(spec.n_docs):
        z = rng.choice(spec.k, size=lengths[d], p=theta[d])
        topic_sizes = np.bincount(z, minlength=spec.k)
        for t in range(spec.k):
            if topic_sizes[t]:
                words = rng.choice(spec.vocab_size, size=topic_sizes[t], p=phi[t])
                np.add.at(counts[d], words, 1)

    lemmas = _full_lemmas(spec.vocab_size)
    seen = counts.sum(axis=0) > 0
    dtm = DocumentTermMatrix(
        block_ids=tuple(f"C{d + 1}_B1" for d in range(spec.n_docs)),
        lemmas=tuple(np.asarray(lemmas)[seen]),
        counts=sp.csr_matrix(counts[:, seen]),
    )
    return SyntheticCorpus(dtm=dtm, true_phi=phi, true_theta=theta, lemmas=lemmas)


def _restrict_phi(
    true_phi: np.ndarray,
    true_lemmas: Sequence[str] | None,
    lemmas: Sequence[str] | None,
) -> np.ndarray:
    if lemmas is None or true_lemmas is None or tuple(lemmas) == tuple(true_lemmas):
        return true_phi
    col = {lemma: j for j, lemma in enumerate(true_lemmas)}
    try:
        idx = [col[lemma] for lemma in lemmas]
    except KeyError as exc:
        raise InputDataError(f"lemma {exc.args[0]!r} not in the true vocabulary") from None
    return true_phi[:, idx]


def score_recovery(
    beta: np.ndarray,
    gamma: np.ndarray,
    true_phi: np.ndarray,
    true_theta: np.ndarray,
    lemmas: Sequence[str] | None = None,
    true_lemmas: Sequence[str] | None = None,
) -> RecoveryReport:
    """Match recovered topics to the truth (Hungarian on cosine similarity)
    and report mean matched cosine and mean total-variation distance.

    When the fitted vocabulary is a subset of the generator's (all-zero
    columns dropped), pass both lemma lists so the truth is restricted to the
    observed columns; cosine similarity is insensitive to the lost mass.
    """
    beta = np.asarray(beta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    phi = _restrict_phi(np.asarray(true_phi, dtype=np.float64), true_lemmas, lemmas)
    theta = np.asarray(true_theta, dtype=np.float64)
    if beta.shape != phi.shape:
        raise InputDataError(f"beta shape {beta.shape} != truth shape {phi.shape}")
    if gamma.shape != theta.shape:
        raise InputDataError(f"gamma shape {gamma.shape} != truth shape {theta.shape}")

    bn = np.linalg.norm(beta, axis=1, keepdims=True)
    pn = np.linalg.norm(phi, axis=1, keepdims=True)
    bn[bn == 0] = 1.0
    pn[pn == 0] = 1.0
    cosine = (beta / bn) @ (phi / pn).T
    perm = hungarian_max(cosine)
    matched = np.array([cosine[i, perm[i]] for i in range(beta.shape[0])])
    gamma_aligned = realign_gamma(gamma, perm)
    tv = 0.5 * np.abs(gamma_aligned - theta).sum(axis=1)
    return RecoveryReport(
        permutation=perm,
        matched_cosines=matched,
        mean_cosine=float(matched.mean()),
        mean_tv=float(tv.mean()),
    )


# ---------------------------------------------------------------------------
# emission for golden tests and the synthetic pipeline
# ---------------------------------------------------------------------------

_STANZAS_PER_DOC = 10


def synthetic_tokens(corpus: SyntheticCorpus) -> list[TaggedToken]:
    """Lay the corpus out as a token stream: document d becomes chapter d with
    ten content stanzas, tokens assigned round-robin.

    Feeding these tokens through segmentation (one block per ten-stanza
    chapter) and a min_count=1 NOUN-only policy reproduces the DTM exactly.
    """
    tokens: list[TaggedToken] = []
    dense = corpus.dtm.dense()
    for d in range(dense.shape[0]):
        words = np.repeat(np.arange(dense.shape[1]), dense[d])
        for j, w in enumerate(words):
            lemma = corpus.dtm.lemmas[w]
            tokens.append(
                TaggedToken(
                    chapter=d + 1,
                    stanza=(j % _STANZAS_PER_DOC) + 1,
                    line=None,
                    surface=lemma,
                    lemma=lemma,
                    pos="NOUN",
                    is_content_stanza=True,
                )
            )
    return tokens


def write_matrix_csv(matrix: np.ndarray, header: Sequence[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.asarray(matrix):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_matrix_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
    matrix = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, matrix


def write_synthetic(corpus: SyntheticCorpus, directory: str | Path, emit_tokens: bool = True) -> None:
    """Write dtm.csv (long format), true_phi.csv, true_theta.csv and tokens.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_long_format(corpus.dtm, directory / "dtm.csv")
    write_matrix_csv(corpus.true_phi, corpus.lemmas, directory / "true_phi.csv")
    k = corpus.true_theta.shape[1]
    write_matrix_csv(
        corpus.true_theta, [f"topic_{t + 1}" for t in range(k)], directory / "true_theta.csv"
    )
    if emit_tokens:
        save_tokens(synthetic_tokens(corpus), directory / "tokens.csv")
