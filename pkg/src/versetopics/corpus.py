"""Corpus preparation: token curation, stanza-block segmentation and the
document-term matrix.

The pipeline consumes pre-lemmatised token streams (one row per token with
chapter/stanza coordinates, lemma and part-of-speech tag).  Tokenisation,
tagging and lemmatisation of raw text are out of scope; the ``is_content_stanza``
flag on each token is trusted as-is.
"""

from __future__ import annotations

import configparser
import csv
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyResultError, InputDataError

CONTENT_POS = ("NOUN", "PROPN", "ADJ", "VERB")
POS_TAGS = CONTENT_POS + ("OTHER",)

_BLOCK_ID_RE = re.compile(r"^C(\d+)_B(\d+)$")

TOKEN_COLUMNS = ("chapter", "stanza", "line", "surface", "lemma", "pos", "is_content_stanza")


@dataclass(frozen=True)
class TaggedToken:
    """One token of the pre-tagged corpus."""

    chapter: int
    stanza: int
    line: int | None
    surface: str
    lemma: str
    pos: str
    is_content_stanza: bool = True

    def __post_init__(self):
        if self.chapter < 1 or self.stanza < 1:
            raise InputDataError(
                f"chapter/stanza must be positive, got ({self.chapter}, {self.stanza})"
            )
        if not self.lemma.strip():
            raise InputDataError("empty lemma")
        if self.pos not in POS_TAGS:
            raise InputDataError(f"unknown PoS tag {self.pos!r}")


@dataclass(frozen=True)
class VerbReassignRule:
    """Evidence rule for re-tagging infinitive-looking lemmas as VERB."""

    min_verb_share: float = 0.60
    min_verb_occurrences: int = 2
    min_lemma_length: int = 5
    suffixes: tuple[str, ...] = ("are", "ere", "ire")

    def __post_init__(self):
        if not 0.0 < self.min_verb_share <= 1.0:
            raise InputDataError("min_verb_share must be in (0, 1]")
        if self.min_verb_occurrences < 1 or self.min_lemma_length < 1:
            raise InputDataError("verb_reassign thresholds must be >= 1")


@dataclass(frozen=True)
class VocabularyPolicy:
    """Filtering rules applied when the DTM is built."""

    allowed_pos: frozenset[str] = frozenset({"NOUN", "PROPN", "ADJ"})
    min_count: int = 3
    stopwords: frozenset[str] = frozenset()
    lowercase_non_propn: bool = True
    verb_reassign: VerbReassignRule = field(default_factory=VerbReassignRule)

    def __post_init__(self):
        if self.min_count < 1:
            raise InputDataError("min_count must be >= 1")
        unknown = set(self.allowed_pos) - set(POS_TAGS)
        if unknown:
            raise InputDataError(f"unknown PoS tags in policy: {sorted(unknown)}")


@dataclass(frozen=True)
class Block:
    block_id: str
    chapter: int
    stanza_range: tuple[int, int]  # inclusive ordinals within the chapter's content stanzas
    stanza_count: int


@dataclass(frozen=True)
class BlockSegmentation:
    blocks: tuple[Block, ...]

    @property
    def block_ids(self) -> tuple[str, ...]:
        return tuple(b.block_id for b in self.blocks)

    def chapter_blocks(self, chapter: int) -> tuple[Block, ...]:
        return tuple(b for b in self.blocks if b.chapter == chapter)


@dataclass(frozen=True)
class DocumentTermMatrix:
    """Sparse block x lemma count matrix in narrative block order."""

    block_ids: tuple[str, ...]
    lemmas: tuple[str, ...]
    counts: sp.csr_matrix
    provenance: VocabularyPolicy | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    @property
    def sparsity(self) -> float:
        rows, cols = self.counts.shape
        return 1.0 - self.counts.nnz / (rows * cols)

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    def dense(self) -> np.ndarray:
        return np.asarray(self.counts.todense(), dtype=np.int64)


def apply_verb_reassignment(
    tokens: Iterable[TaggedToken], policy: VocabularyPolicy
) -> list[TaggedToken]:
    """Re-tag every instance of a lemma as VERB when the evidence rule fires.

    A lemma qualifies when it ends in one of the configured suffixes, is long
    enough, and its VERB-tagged occurrences are both frequent enough in
    absolute terms and as a share of all its occurrences.  The transformation
    is idempotent.
    """
    tokens = list(tokens)
    rule = policy.verb_reassign
    total: Counter[str] = Counter()
    verb: Counter[str] = Counter()
    for t in tokens:
        if len(t.lemma) >= rule.min_lemma_length and t.lemma.endswith(rule.suffixes):
            total[t.lemma] += 1
            if t.pos == "VERB":
                verb[t.lemma] += 1
    promote = {
        lemma
        for lemma, n in total.items()
        if verb[lemma] >= rule.min_verb_occurrences
        and verb[lemma] / n >= rule.min_verb_share
    }
    return [
        replace(t, pos="VERB") if t.lemma in promote and t.pos != "VERB" else t
        for t in tokens
    ]


def segment_blocks(
    stanza_counts_per_chapter: Sequence[int], target_size: float = 10.5
) -> BlockSegmentation:
    """Split each chapter's content stanzas into contiguous, similarly sized blocks.

    The number of blocks per chapter minimises |stanzas/blocks - target_size|
    (ties broken towards fewer blocks); runs differ in size by at most one,
    larger runs first.
    """
    blocks: list[Block] = []
    for chapter, s in enumerate(stanza_counts_per_chapter, start=1):
        if s < 1:
            raise InputDataError(f"chapter {chapter} has no content stanzas")
        b = min(range(1, s + 1), key=lambda n: (abs(s / n - target_size), n))
        base, remainder = divmod(s, b)
        start = 1
        for i in range(b):
            size = base + (1 if i < remainder else 0)
            blocks.append(
                Block(
                    block_id=f"C{chapter}_B{i + 1}",
                    chapter=chapter,
                    stanza_range=(start, start + size - 1),
                    stanza_count=size,
                )
            )
            start += size
    return BlockSegmentation(blocks=tuple(blocks))


def content_layout(tokens: Iterable[TaggedToken]) -> dict[int, list[int]]:
    """Ordered content-stanza numbers per chapter, as observed in the stream."""
    per: dict[int, set[int]] = defaultdict(set)
    for t in tokens:
        if t.is_content_stanza:
            per[t.chapter].add(t.stanza)
    return {ch: sorted(stanzas) for ch, stanzas in sorted(per.items())}


def stanza_counts(layout: Mapping[int, Sequence[int]]) -> list[int]:
    """Content-stanza counts for chapters 1..C; chapters must be contiguous."""
    if not layout:
        raise InputDataError("no content stanzas in token stream")
    chapters = sorted(layout)
    if chapters != list(range(1, len(chapters) + 1)):
        raise InputDataError(f"chapters are not contiguous from 1: {chapters}")
    return [len(layout[ch]) for ch in chapters]


def stanza_block_index(
    segmentation: BlockSegmentation, layout: Mapping[int, Sequence[int]]
) -> dict[tuple[int, int], int]:
    """Map each content stanza (chapter, stanza number) to its block position."""
    mapping: dict[tuple[int, int], int] = {}
    for pos, block in enumerate(segmentation.blocks):
        stanzas = layout.get(block.chapter)
        if stanzas is None:
            raise InputDataError(f"segmentation chapter {block.chapter} missing from layout")
        lo, hi = block.stanza_range
        if hi > len(stanzas):
            raise InputDataError(
                f"block {block.block_id} spans ordinal {hi} but chapter "
                f"{block.chapter} has only {len(stanzas)} content stanzas"
            )
        for ordinal in range(lo, hi + 1):
            mapping[(block.chapter, stanzas[ordinal - 1])] = pos
    return mapping


def curated_lemma_stream(
    tokens: Iterable[TaggedToken], policy: VocabularyPolicy
) -> Iterator[tuple[int, int, str]]:
    """Yield (chapter, stanza, lemma) for tokens that survive PoS and stop-word
    filtering, with the policy's lowercasing applied.

    This is the single normalisation path shared by the DTM builder and the
    hub-level lemma counts, so both always agree on what a lemma looks like.
    The corpus-wide min_count threshold is not applied here.
    """
    for t in tokens:
        if not t.is_content_stanza:
            continue
        if t.pos not in policy.allowed_pos:
            continue
        if t.lemma in policy.stopwords:
            continue
        lemma = t.lemma
        if policy.lowercase_non_propn and t.pos != "PROPN":
            lemma = lemma.lower()
        yield t.chapter, t.stanza, lemma


def build_dtm(
    tokens: Iterable[TaggedToken],
    segmentation: BlockSegmentation,
    policy: VocabularyPolicy,
) -> DocumentTermMatrix:
    """Aggregate curated tokens into a block x lemma count matrix.

    Tokens are filtered to the allowed PoS classes, stop-words removed,
    non-proper lemmas lowercased, and lemmas below the corpus-wide frequency
    threshold dropped.  Verb reassignment is not applied here; run
    :func:`apply_verb_reassignment` first if configured.
    """
    tokens = list(tokens)
    layout = content_layout(tokens)
    block_of = stanza_block_index(segmentation, layout)
    cell_counts: Counter[tuple[int, str]] = Counter()
    lemma_freq: Counter[str] = Counter()
    for chapter, stanza, lemma in curated_lemma_stream(tokens, policy):
        key = (chapter, stanza)
        if key not in block_of:
            raise InputDataError(f"stanza {key} not covered by the segmentation")
        cell_counts[(block_of[key], lemma)] += 1
        lemma_freq[lemma] += 1

    vocab = sorted(l for l, n in lemma_freq.items() if n >= policy.min_count)
    if not vocab:
        raise EmptyResultError("no lemma survives filtering")
    col = {lemma: j for j, lemma in enumerate(vocab)}

    rows, cols, data = [], [], []
    for (block_pos, lemma), n in cell_counts.items():
        j = col.get(lemma)
        if j is not None:
            rows.append(block_pos)
            cols.append(j)
            data.append(n)
    counts = sp.csr_matrix(
        (data, (rows, cols)),
        shape=(len(segmentation.blocks), len(vocab)),
        dtype=np.int64,
    )
    counts.sum_duplicates()
    return DocumentTermMatrix(
        block_ids=segmentation.block_ids,
        lemmas=tuple(vocab),
        counts=counts,
        provenance=policy,
    )


def vocabulary_report(
    tokens: Iterable[TaggedToken], policy: VocabularyPolicy
) -> dict[str, int | float]:
    """Filtering statistics for the ingest report."""
    tokens = list(tokens)
    content = [t for t in tokens if t.is_content_stanza]
    pos_kept = [t for t in content if t.pos in policy.allowed_pos]
    not_stopword = [t for t in pos_kept if t.lemma not in policy.stopwords]
    freq: Counter[str] = Counter()
    for _, _, lemma in curated_lemma_stream(tokens, policy):
        freq[lemma] += 1
    kept = {l for l, n in freq.items() if n >= policy.min_count}
    return {
        "tokens_total": len(tokens),
        "tokens_content": len(content),
        "tokens_pos_filtered": len(content) - len(pos_kept),
        "tokens_stopword_removed": len(pos_kept) - len(not_stopword),
        "lemmas_candidate": len(freq),
        "lemmas_below_min_count": len(freq) - len(kept),
        "vocabulary_size": len(kept),
        "tokens_retained": sum(n for l, n in freq.items() if l in kept),
    }


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _parse_block_id(block_id: str, where: str) -> tuple[int, int]:
    m = _BLOCK_ID_RE.match(block_id)
    if not m:
        raise InputDataError(f"malformed block_id {block_id!r} at {where}")
    return int(m.group(1)), int(m.group(2))


def load_long_format(path: str | Path) -> DocumentTermMatrix:
    """Read a DTM from the long CSV format (block_id, lemma, n).

    Rows are ordered by (chapter, block index) parsed from the block id;
    duplicate (block_id, lemma) rows are summed.
    """
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    cells: dict[tuple[tuple[int, int], str], int] = defaultdict(int)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputDataError(f"empty file: {path}")
        if [h.strip() for h in header[:3]] != ["block_id", "lemma", "n"]:
            raise InputDataError(f"expected header block_id,lemma,n in {path}, got {header}")
        n_rows = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 3:
                raise InputDataError(f"short row at {path}:{lineno}")
            block_id, lemma, raw_n = row[0], row[1], row[2]
            key = _parse_block_id(block_id, f"{path}:{lineno}")
            try:
                n = int(raw_n)
            except ValueError:
                raise InputDataError(f"non-integer count {raw_n!r} at {path}:{lineno}") from None
            if n < 0:
                raise InputDataError(f"negative count {n} at {path}:{lineno}")
            cells[(key, lemma)] += n
            n_rows += 1
    if n_rows == 0:
        raise InputDataError(f"no data rows in {path}")

    block_keys = sorted({key for key, _ in cells})
    vocab = sorted({lemma for (_, lemma), n in cells.items() if n > 0})
    if not vocab:
        raise EmptyResultError(f"all counts are zero in {path}")
    row_of = {key: i for i, key in enumerate(block_keys)}
    col_of = {lemma: j for j, lemma in enumerate(vocab)}
    rows, cols, data = [], [], []
    for (key, lemma), n in cells.items():
        if n > 0:
            rows.append(row_of[key])
            cols.append(col_of[lemma])
            data.append(n)
    counts = sp.csr_matrix(
        (data, (rows, cols)), shape=(len(block_keys), len(vocab)), dtype=np.int64
    )
    counts.sum_duplicates()
    return DocumentTermMatrix(
        block_ids=tuple(f"C{ch}_B{b}" for ch, b in block_keys),
        lemmas=tuple(vocab),
        counts=counts,
    )


def _csv_field(value: str) -> str:
    # minimal quoting: only when the field would break the CSV structure
    if any(c in value for c in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def save_long_format(dtm: DocumentTermMatrix, path: str | Path) -> None:
    """Write the DTM in long format: UTF-8, LF endings, minimal quoting."""
    coo = dtm.counts.tocoo()
    cells = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("block_id,lemma,n\n")
        for i, j, n in cells:
            fh.write(f"{dtm.block_ids[i]},{_csv_field(dtm.lemmas[j])},{n}\n")


def load_tokens(path: str | Path) -> list[TaggedToken]:
    """Read a tagged token stream from CSV or TSV (chosen by extension).

    PoS tags outside the five-value scheme are mapped to OTHER.
    """
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    delimiter = "\t" if path.suffix.lower() in (".tsv", ".tab") else ","
    tokens: list[TaggedToken] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise InputDataError(f"empty file: {path}")
        missing = set(TOKEN_COLUMNS) - set(reader.fieldnames)
        if missing:
            raise InputDataError(f"{path} is missing columns: {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                chapter = int(row["chapter"])
                stanza = int(row["stanza"])
                raw_line = (row["line"] or "").strip()
                line = int(raw_line) if raw_line else None
            except ValueError:
                raise InputDataError(f"non-integer coordinate at {path}:{lineno}") from None
            pos = (row["pos"] or "").strip().upper()
            if pos not in POS_TAGS:
                pos = "OTHER"
            flag = (row["is_content_stanza"] or "").strip().lower()
            if flag in ("true", "1", "yes"):
                content = True
            elif flag in ("false", "0", "no"):
                content = False
            else:
                raise InputDataError(f"bad is_content_stanza {flag!r} at {path}:{lineno}")
            tokens.append(
                TaggedToken(
                    chapter=chapter,
                    stanza=stanza,
                    line=line,
                    surface=row["surface"] or "",
                    lemma=row["lemma"] or "",
                    pos=pos,
                    is_content_stanza=content,
                )
            )
    if not tokens:
        raise InputDataError(f"no token rows in {path}")
    return tokens


def save_tokens(tokens: Iterable[TaggedToken], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TOKEN_COLUMNS) + "\n")
        for t in tokens:
            line = "" if t.line is None else str(t.line)
            fields = (
                str(t.chapter),
                str(t.stanza),
                line,
                _csv_field(t.surface),
                _csv_field(t.lemma),
                t.pos,
                "true" if t.is_content_stanza else "false",
            )
            fh.write(",".join(fields) + "\n")


def _parse_bool(raw: str, where: str) -> bool:
    v = raw.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise InputDataError(f"bad boolean {raw!r} in {where}")


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def load_policy(path: str | Path) -> VocabularyPolicy:
    """Read a VocabularyPolicy from a sectioned key = value file."""
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise InputDataError(f"cannot parse {path}: {exc}") from None
    voc = cp["vocabulary"] if cp.has_section("vocabulary") else {}
    vr = cp["verb_reassign"] if cp.has_section("verb_reassign") else {}
    defaults = VocabularyPolicy()
    rule_defaults = VerbReassignRule()
    rule = VerbReassignRule(
        min_verb_share=float(vr.get("min_verb_share", rule_defaults.min_verb_share)),
        min_verb_occurrences=int(vr.get("min_verb_occurrences", rule_defaults.min_verb_occurrences)),
        min_lemma_length=int(vr.get("min_lemma_length", rule_defaults.min_lemma_length)),
        suffixes=_split_list(vr["suffixes"]) if "suffixes" in vr else rule_defaults.suffixes,
    )
    return VocabularyPolicy(
        allowed_pos=frozenset(_split_list(voc["allowed_pos"]))
        if "allowed_pos" in voc
        else defaults.allowed_pos,
        min_count=int(voc.get("min_count", defaults.min_count)),
        stopwords=frozenset(_split_list(voc.get("stopwords", ""))),
        lowercase_non_propn=_parse_bool(voc["lowercase_non_propn"], str(path))
        if "lowercase_non_propn" in voc
        else defaults.lowercase_non_propn,
        verb_reassign=rule,
    )
