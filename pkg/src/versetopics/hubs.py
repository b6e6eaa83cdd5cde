"""Narrative hubs: stanza-weighted topic mixtures, lexical profiles and cards.

A hub is a contiguous stanza range marking a salient episode.  Hubs are
user-supplied configuration and may cross block boundaries, so lexical
profiles are computed from the tagged token stream at stanza resolution, not
re-aggregated from the DTM.
"""

from __future__ import annotations

import csv
import json
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import (
    BlockSegmentation,
    TaggedToken,
    VocabularyPolicy,
    curated_lemma_stream,
    stanza_block_index,
)
from .errors import EmptyResultError, InputDataError

BUCKET = "bucket"

NOVEL_MARK = "†"  # dagger: discriminant lemma absent from every top list
POROUS_MARK = "‡"  # double dagger: lemma in another topic's top list


@dataclass(frozen=True)
class Hub:
    id: str
    label: str
    start: tuple[int, int]  # (chapter, stanza), inclusive
    end: tuple[int, int]

    def __post_init__(self):
        if self.start > self.end:
            raise InputDataError(f"hub {self.id}: start {self.start} after end {self.end}")


@dataclass(frozen=True)
class SubthemeTaxonomy:
    """Human-curated lemma -> subtheme mapping per theme."""

    themes: Mapping[str, Mapping[str, str]]

    def subtheme(self, theme: str, lemma: str) -> str | None:
        return self.themes.get(theme, {}).get(lemma)


@dataclass(frozen=True)
class HubProfile:
    hub: Hub
    weights: Mapping[str, float]  # block_id -> stanza share
    gamma_bar: np.ndarray
    dominant: int
    runner_up: int
    beta_mass: np.ndarray | None = None
    beta_profile: np.ndarray | None = None
    beta_dominant: int | None = None
    beta_error: str | None = None


@dataclass(frozen=True)
class LemmaAnnotation:
    lemma: str
    novel: bool
    porous: bool

    def marked(self) -> str:
        mark = NOVEL_MARK if self.novel else (POROUS_MARK if self.porous else "")
        return self.lemma + mark


@dataclass(frozen=True)
class ThemeSection:
    topic: int
    label: str
    gamma: float
    subthemes: Mapping[str, tuple[LemmaAnnotation, ...]]


@dataclass(frozen=True)
class HubCard:
    hub: Hub
    profile: HubProfile
    themes: tuple[ThemeSection, ...]

    def to_dict(self) -> dict:
        d = {
            "hub_id": self.hub.id,
            "label": self.hub.label,
            "start": list(self.hub.start),
            "end": list(self.hub.end),
            "weights": {k: float(v) for k, v in self.profile.weights.items()},
            "gamma_bar": [float(x) for x in self.profile.gamma_bar],
            "dominant": int(self.profile.dominant) + 1,
            "runner_up": int(self.profile.runner_up) + 1,
            "beta_profile": None
            if self.profile.beta_profile is None
            else [float(x) for x in self.profile.beta_profile],
            "beta_dominant": None
            if self.profile.beta_dominant is None
            else int(self.profile.beta_dominant) + 1,
            "beta_error": self.profile.beta_error,
            "themes": [
                {
                    "topic": int(s.topic) + 1,
                    "label": s.label,
                    "gamma": float(s.gamma),
                    "subthemes": {
                        name: [
                            {"lemma": a.lemma, "novel": a.novel, "porous": a.porous}
                            for a in annotations
                        ]
                        for name, annotations in s.subthemes.items()
                    },
                }
                for s in self.themes
            ],
        }
        return d

    def render_text(self) -> str:
        lines = [f"{self.hub.id} - {self.hub.label}"]
        lines.append(
            "dominant: {} (gamma {:.3f}); runner-up: {} (gamma {:.3f})".format(
                self.themes[0].label,
                self.themes[0].gamma,
                self.themes[1].label if len(self.themes) > 1 else "-",
                self.themes[1].gamma if len(self.themes) > 1 else float("nan"),
            )
        )
        if self.profile.beta_error:
            lines.append(f"lexical profile unavailable: {self.profile.beta_error}")
        for section in self.themes:
            lines.append(f"[{section.label}]")
            if not section.subthemes:
                lines.append("  (no lexicon lemmas present in this hub)")
            for name in sorted(section.subthemes):
                marked = ", ".join(a.marked() for a in section.subthemes[name])
                lines.append(f"  {name}: {marked}")
        return "\n".join(lines) + "\n"


def load_hubs(path: str | Path) -> list[Hub]:
    """hubs config CSV: id, label, start_chapter, start_stanza, end_chapter, end_stanza."""
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    hubs: list[Hub] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "label", "start_chapter", "start_stanza", "end_chapter", "end_stanza"}
        if reader.fieldnames is None or required - set(reader.fieldnames):
            raise InputDataError(f"{path} must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                hubs.append(
                    Hub(
                        id=row["id"],
                        label=row["label"],
                        start=(int(row["start_chapter"]), int(row["start_stanza"])),
                        end=(int(row["end_chapter"]), int(row["end_stanza"])),
                    )
                )
            except ValueError:
                raise InputDataError(f"bad hub coordinates at {path}:{lineno}") from None
    if not hubs:
        raise InputDataError(f"no hubs in {path}")
    return hubs


def load_taxonomy(path: str | Path) -> SubthemeTaxonomy:
    """taxonomy config CSV: theme, subtheme, lemma ('bucket' is reserved)."""
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    themes: dict[str, dict[str, str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"theme", "subtheme", "lemma"}
        if reader.fieldnames is None or required - set(reader.fieldnames):
            raise InputDataError(f"{path} must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            theme, subtheme, lemma = row["theme"], row["subtheme"], row["lemma"]
            mapping = themes.setdefault(theme, {})
            if lemma in mapping and mapping[lemma] != subtheme:
                raise InputDataError(
                    f"lemma {lemma!r} mapped to two subthemes of {theme!r} at {path}:{lineno}"
                )
            mapping[lemma] = subtheme
    return SubthemeTaxonomy(themes=themes)


def _hub_content_stanzas(hub: Hub, layout: Mapping[int, Sequence[int]]) -> list[tuple[int, int]]:
    stanzas = [
        (ch, st)
        for ch in sorted(layout)
        for st in layout[ch]
        if hub.start <= (ch, st) <= hub.end
    ]
    if not stanzas:
        raise EmptyResultError(f"hub {hub.id} covers no content stanzas")
    return stanzas


def hub_weights(
    hub: Hub,
    segmentation: BlockSegmentation,
    layout: Mapping[int, Sequence[int]],
) -> dict[str, float]:
    """Share of the hub's content stanzas falling in each contributing block."""
    block_of = stanza_block_index(segmentation, layout)
    counts: Counter[int] = Counter()
    for key in _hub_content_stanzas(hub, layout):
        if key not in block_of:
            raise InputDataError(f"hub {hub.id}: stanza {key} not covered by segmentation")
        counts[block_of[key]] += 1
    total = sum(counts.values())
    return {
        segmentation.blocks[pos].block_id: counts[pos] / total for pos in sorted(counts)
    }


def hub_gamma(
    hub: Hub,
    gamma: np.ndarray,
    segmentation: BlockSegmentation,
    layout: Mapping[int, Sequence[int]],
) -> HubProfile:
    """Stanza-weighted average of the contributing blocks' topic mixtures."""
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape[0] != len(segmentation.blocks):
        raise InputDataError("gamma rows do not match the segmentation")
    weights = hub_weights(hub, segmentation, layout)
    row_of = {block_id: i for i, block_id in enumerate(segmentation.block_ids)}
    gamma_bar = np.zeros(gamma.shape[1])
    for block_id, w in weights.items():
        gamma_bar += w * gamma[row_of[block_id]]
    order = np.argsort(-gamma_bar, kind="stable")
    return HubProfile(
        hub=hub,
        weights=weights,
        gamma_bar=gamma_bar,
        dominant=int(order[0]),
        runner_up=int(order[1]) if gamma_bar.shape[0] > 1 else int(order[0]),
    )


def hub_lemma_counts(
    tokens: Iterable[TaggedToken],
    hub: Hub,
    policy: VocabularyPolicy,
) -> Counter[str]:
    """Curated lemma frequencies within the hub's content stanzas.

    Uses the same normalisation path as the DTM builder so hub counts and
    vocabulary agree.
    """
    counts: Counter[str] = Counter()
    for chapter, stanza, lemma in curated_lemma_stream(tokens, policy):
        if hub.start <= (chapter, stanza) <= hub.end:
            counts[lemma] += 1
    return counts


def hub_beta_profile(
    profile: HubProfile,
    reference_beta: np.ndarray,
    lemmas: Sequence[str],
    lda_top_terms: Sequence[Sequence[str]],
    hub_counts: Mapping[str, int],
) -> HubProfile:
    """Count-weighted lexical mass per topic over the hub's top-list lemmas.

    An explicit error state is recorded when no top-list lemma occurs in the
    hub, leaving the gamma layer of the profile intact.
    """
    beta = np.asarray(reference_beta, dtype=np.float64)
    col = {lemma: j for j, lemma in enumerate(lemmas)}
    vocabulary = sorted(set().union(*map(set, lda_top_terms)))
    present = [w for w in vocabulary if hub_counts.get(w, 0) > 0]
    if not present:
        return HubProfile(
            hub=profile.hub,
            weights=profile.weights,
            gamma_bar=profile.gamma_bar,
            dominant=profile.dominant,
            runner_up=profile.runner_up,
            beta_error="no top-list lemma occurs in the hub",
        )
    mass = np.zeros(beta.shape[0])
    for w in present:
        j = col.get(w)
        if j is None:
            raise InputDataError(f"top-list lemma {w!r} missing from the vocabulary")
        mass += hub_counts[w] * beta[:, j]
    return HubProfile(
        hub=profile.hub,
        weights=profile.weights,
        gamma_bar=profile.gamma_bar,
        dominant=profile.dominant,
        runner_up=profile.runner_up,
        beta_mass=mass,
        beta_profile=mass / mass.sum(),
        beta_dominant=int(np.argmax(mass)),
    )


def build_hub_card(
    profile: HubProfile,
    lda_top_terms: Sequence[Sequence[str]],
    taxonomy: SubthemeTaxonomy,
    hub_counts: Mapping[str, int],
    dictionary=None,
    topic_labels: Sequence[str] | None = None,
    top_n_themes: int = 2,
) -> HubCard:
    """Assemble the card: dominant and runner-up themes, their lemmas present
    in the hub grouped by subtheme, with novel/porous marks.

    A lemma is listed under every displayed theme whose top list contains it;
    discriminant-only lemmas appear under their core topic.  Lemmas missing
    from the taxonomy fall into the bucket group with a warning.
    """
    k = profile.gamma_bar.shape[0]
    labels = list(topic_labels) if topic_labels is not None else [f"T{t + 1}" for t in range(k)]
    if len(labels) != k:
        raise InputDataError("topic_labels length does not match the topic count")
    lda_sets = [set(terms) for terms in lda_top_terms]
    union_lda: set[str] = set().union(*lda_sets)

    order = np.argsort(-profile.gamma_bar, kind="stable")[:top_n_themes]
    sections: list[ThemeSection] = []
    missing: set[str] = set()
    for t in order:
        t = int(t)
        core = set()
        if dictionary is not None and t in dictionary.entries:
            core = {e.lemma for e in dictionary.core_terms(t)}
        present = sorted(
            w for w in (lda_sets[t] | core) if hub_counts.get(w, 0) > 0
        )
        groups: dict[str, list[LemmaAnnotation]] = {}
        for lemma in present:
            subtheme = taxonomy.subtheme(labels[t], lemma)
            if subtheme is None:
                subtheme = BUCKET
                missing.add(lemma)
            annotation = LemmaAnnotation(
                lemma=lemma,
                novel=lemma not in union_lda,
                porous=any(lemma in lda_sets[j] for j in range(k) if j != t),
            )
            groups.setdefault(subtheme, []).append(annotation)
        sections.append(
            ThemeSection(
                topic=t,
                label=labels[t],
                gamma=float(profile.gamma_bar[t]),
                subthemes={name: tuple(v) for name, v in groups.items()},
            )
        )
    if missing:
        warnings.warn(
            f"hub {profile.hub.id}: lemmas not in the taxonomy placed in the bucket: "
            + ", ".join(sorted(missing)),
            RuntimeWarning,
            stacklevel=2,
        )
    return HubCard(hub=profile.hub, profile=profile, themes=tuple(sections))


def write_hub_card(card: HubCard, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / f"{card.hub.id}.json", "w", encoding="utf-8") as fh:
        json.dump(card.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    with open(directory / f"{card.hub.id}.txt", "w", encoding="utf-8", newline="") as fh:
        fh.write(card.render_text())


def write_hub_gamma_table(profiles: Sequence[HubProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        k = profiles[0].gamma_bar.shape[0] if profiles else 0
        fh.write(
            "hub_id,dominant,runner_up,"
            + ",".join(f"topic_{t + 1}" for t in range(k))
            + "\n"
        )
        for p in profiles:
            fh.write(
                f"{p.hub.id},{p.dominant + 1},{p.runner_up + 1},"
                + ",".join(repr(float(x)) for x in p.gamma_bar)
                + "\n"
            )
