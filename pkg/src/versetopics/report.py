"""Plot-ready data tables for the standard figures.

No rendering happens here: each writer emits a CSV a plotting layer can
consume directly (treemap of top terms, narrative map of consensus mixtures
with hub bands, cross-method heatmap, theme/subtheme chord table).
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .align import top_m_indices
from .corpus import BlockSegmentation, DocumentTermMatrix
from .hubs import BUCKET, Hub, SubthemeTaxonomy, hub_weights
from .splsda import TermDictionary


def write_treemap(
    reference_beta: np.ndarray,
    consensus_gamma: np.ndarray,
    lemmas: Sequence[str],
    path: str | Path,
    terms_per_topic: int = 20,
) -> None:
    """topic, lemma, weight, prevalence; top terms_per_topic lemmas per topic."""
    beta = np.asarray(reference_beta)
    prevalence = np.asarray(consensus_gamma).mean(axis=0)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("topic,lemma,weight,prevalence\n")
        for t in range(beta.shape[0]):
            for j in top_m_indices(beta[t], terms_per_topic, lemmas):
                fh.write(f"{t + 1},{lemmas[j]},{float(beta[t, j])!r},{float(prevalence[t])!r}\n")


def write_narrative_map(
    consensus_gamma: np.ndarray,
    block_ids: Sequence[str],
    path: str | Path,
    hub_blocks: Mapping[str, Sequence[str]] | None = None,
) -> None:
    """Per-block consensus mixture in narrative order with hub-band annotations."""
    gamma = np.asarray(consensus_gamma)
    bands: dict[str, list[str]] = {b: [] for b in block_ids}
    if hub_blocks:
        for hub_id in sorted(hub_blocks):
            for block_id in hub_blocks[hub_id]:
                bands[block_id].append(hub_id)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "block_id,"
            + ",".join(f"topic_{t + 1}" for t in range(gamma.shape[1]))
            + ",hubs\n"
        )
        for i, block_id in enumerate(block_ids):
            row = ",".join(repr(float(x)) for x in gamma[i])
            fh.write(f"{block_id},{row},{';'.join(bands[block_id])}\n")


def write_heatmap(matrix: np.ndarray, path: str | Path) -> None:
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "core_topic," + ",".join(f"lda_topic_{j + 1}" for j in range(matrix.shape[1])) + "\n"
        )
        for i, row in enumerate(matrix):
            fh.write(f"{i + 1}," + ",".join(repr(float(x)) for x in row) + "\n")


def write_chord(
    dtm: DocumentTermMatrix,
    lda_top_terms: Sequence[Sequence[str]],
    taxonomy: SubthemeTaxonomy,
    path: str | Path,
    dictionary: TermDictionary | None = None,
    topic_labels: Sequence[str] | None = None,
) -> None:
    """theme, subtheme, weight; weight is the corpus count mass of the theme's
    card lexicon falling in each subtheme."""
    k = len(lda_top_terms)
    labels = list(topic_labels) if topic_labels is not None else [f"T{t + 1}" for t in range(k)]
    corpus_counts = np.asarray(dtm.counts.sum(axis=0)).ravel()
    count_of = {lemma: int(corpus_counts[j]) for j, lemma in enumerate(dtm.lemmas)}
    rows: list[tuple[str, str, int]] = []
    for t in range(k):
        lexicon = set(lda_top_terms[t])
        if dictionary is not None and t in dictionary.entries:
            lexicon |= {e.lemma for e in dictionary.core_terms(t)}
        weights: dict[str, int] = {}
        for lemma in lexicon:
            subtheme = taxonomy.subtheme(labels[t], lemma) or BUCKET
            weights[subtheme] = weights.get(subtheme, 0) + count_of.get(lemma, 0)
        for subtheme in sorted(weights):
            rows.append((labels[t], subtheme, weights[subtheme]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("theme,subtheme,weight\n")
        for theme, subtheme, weight in rows:
            fh.write(f"{theme},{subtheme},{weight}\n")


def hub_block_map(
    hubs: Sequence[Hub],
    segmentation: BlockSegmentation,
    layout: Mapping[int, Sequence[int]],
) -> dict[str, tuple[str, ...]]:
    """Blocks contributing at least one stanza to each hub."""
    return {
        hub.id: tuple(hub_weights(hub, segmentation, layout)) for hub in hubs
    }


def write_figure_bundle(
    directory: str | Path,
    *,
    dtm: DocumentTermMatrix,
    consensus_gamma: np.ndarray,
    reference_beta: np.ndarray,
    lda_top_terms: Sequence[Sequence[str]],
    taxonomy: SubthemeTaxonomy | None = None,
    dictionary: TermDictionary | None = None,
    overlap: np.ndarray | None = None,
    hubs: Sequence[Hub] | None = None,
    segmentation: BlockSegmentation | None = None,
    layout: Mapping[int, Sequence[int]] | None = None,
    topic_labels: Sequence[str] | None = None,
    terms_per_topic: int = 20,
) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_treemap(
        reference_beta,
        consensus_gamma,
        dtm.lemmas,
        directory / "treemap.csv",
        terms_per_topic,
    )
    bands = None
    if hubs is not None and segmentation is not None and layout is not None:
        bands = hub_block_map(hubs, segmentation, layout)
    write_narrative_map(
        consensus_gamma, dtm.block_ids, directory / "narrative_map.csv", bands
    )
    if overlap is not None:
        write_heatmap(overlap, directory / "heatmap.csv")
    if taxonomy is not None:
        write_chord(
            dtm,
            lda_top_terms,
            taxonomy,
            directory / "chord.csv",
            dictionary,
            topic_labels,
        )
