"""Sparse PLS discriminant analysis: supervised probe, baselines and the
exclusivity-based term dictionary.

The fit standardises counts and class indicators, extracts each latent
component as the dominant singular pair of the deflated cross-covariance by
alternating power iteration, truncates the predictor loading to its keep_x
largest entries, and deflates both blocks by regression on the X-score.
Prediction standardises with the training statistics, projects to scores and
assigns the class with the maximal predicted indicator.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import DocumentTermMatrix
from .errors import ComputationError, InputDataError

_POWER_TOL = 1e-9
_POWER_MAX_ITER = 500


@dataclass(frozen=True)
class SplsdaConfig:
    n_comp: int = 2
    keep_x: int = 30
    cv_folds: int = 5
    cv_repeats: int = 5
    baseline_permutations: int = 1000
    lambda_exclusive: float = 0.6
    cv_seed: int = 0

    def __post_init__(self):
        if self.n_comp < 1 or self.keep_x < 1:
            raise InputDataError("n_comp and keep_x must be >= 1")
        if self.cv_folds < 2 or self.cv_repeats < 1:
            raise InputDataError("need cv_folds >= 2 and cv_repeats >= 1")
        if not 0.0 < self.lambda_exclusive <= 1.0:
            raise InputDataError("lambda_exclusive must be in (0, 1]")
        if self.baseline_permutations < 1:
            raise InputDataError("baseline_permutations must be >= 1")


@dataclass(frozen=True)
class SplsdaModel:
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    y_scale: np.ndarray
    loadings_x: np.ndarray  # V x A sparse weight vectors, unit norm
    loadings_y: np.ndarray  # C x A class-space weights
    x_reg_loadings: np.ndarray  # V x A regression loadings used for deflation
    y_coefs: np.ndarray  # C x A regression of indicators on scores
    scores: np.ndarray  # D x A latent variables of the training data
    classes: tuple

    @property
    def n_comp(self) -> int:
        return self.loadings_x.shape[1]


def _as_counts(X) -> np.ndarray:
    if isinstance(X, DocumentTermMatrix):
        return X.dense().astype(np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputDataError("X must be 2-D")
    return X


def _standardise(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = M.mean(axis=0)
    scale = M.std(axis=0, ddof=1)
    scale = np.where(scale == 0.0, 1.0, scale)
    return (M - mean) / scale, mean, scale


def _sparsify(w: np.ndarray, keep_x: int, tiebreak: np.ndarray) -> np.ndarray:
    """Keep the keep_x largest-magnitude entries (ties by lemma), zero the rest."""
    if keep_x >= w.shape[0]:
        return w.copy()
    order = np.lexsort((tiebreak, -np.abs(w)))
    out = np.zeros_like(w)
    keep = order[:keep_x]
    out[keep] = w[keep]
    return out


def fit_splsda(
    X,
    y: Sequence,
    config: SplsdaConfig,
    lemmas: Sequence[str] | None = None,
) -> SplsdaModel:
    """Fit a sparse PLS-DA model on counts X with class labels y."""
    X = _as_counts(X)
    y = np.asarray(y)
    n, v = X.shape
    if y.shape[0] != n:
        raise InputDataError("X and y disagree on the number of documents")
    classes = tuple(sorted(set(y.tolist())))
    if len(classes) < 2:
        raise InputDataError("need at least two classes with members")
    if n < len(classes):
        raise InputDataError("fewer documents than classes")
    if config.keep_x > v:
        raise InputDataError(f"keep_x={config.keep_x} exceeds vocabulary size {v}")
    tiebreak = np.asarray(lemmas) if lemmas is not None else np.arange(v)
    if tiebreak.shape[0] != v:
        raise InputDataError("lemmas length does not match X columns")

    Y = np.zeros((n, len(classes)), dtype=np.float64)
    for j, cls in enumerate(classes):
        Y[y == cls, j] = 1.0

    Xd, x_mean, x_scale = _standardise(X)
    Yd, y_mean, y_scale = _standardise(Y)

    W = np.zeros((v, config.n_comp))
    Q = np.zeros((len(classes), config.n_comp))
    P = np.zeros((v, config.n_comp))
    C = np.zeros((len(classes), config.n_comp))
    T = np.zeros((n, config.n_comp))

    for a in range(config.n_comp):
        M = Xd.T @ Yd
        col_norms = np.linalg.norm(M, axis=0)
        j0 = int(np.argmax(col_norms))
        if col_norms[j0] == 0.0:
            raise ComputationError(f"no covariance signal left for component {a + 1}")
        q = np.zeros(len(classes))
        q[j0] = 1.0
        w = np.zeros(v)
        for _ in range(_POWER_MAX_ITER):
            w_new = _sparsify(M @ q, config.keep_x, tiebreak)
            norm_w = np.linalg.norm(w_new)
            if norm_w == 0.0:
                raise ComputationError(f"degenerate loading in component {a + 1}")
            w_new = w_new / norm_w
            q_raw = M.T @ w_new
            norm_q = np.linalg.norm(q_raw)
            if norm_q == 0.0:
                raise ComputationError(f"degenerate class weights in component {a + 1}")
            q = q_raw / norm_q
            if np.linalg.norm(w_new - w) < _POWER_TOL:
                w = w_new
                break
            w = w_new
        # sign convention: the largest-magnitude loading entry is positive
        imax = int(np.argmax(np.abs(w)))
        if w[imax] < 0:
            w = -w
            q = -q
        t = Xd @ w
        tt = float(t @ t)
        if tt == 0.0:
            raise ComputationError(f"zero-variance score in component {a + 1}")
        p = Xd.T @ t / tt
        c = Yd.T @ t / tt
        Xd = Xd - np.outer(t, p)
        Yd = Yd - np.outer(t, c)
        W[:, a] = w
        Q[:, a] = q
        P[:, a] = p
        C[:, a] = c
        T[:, a] = t

    return SplsdaModel(
        x_mean=x_mean,
        x_scale=x_scale,
        y_mean=y_mean,
        y_scale=y_scale,
        loadings_x=W,
        loadings_y=Q,
        x_reg_loadings=P,
        y_coefs=C,
        scores=T,
        classes=classes,
    )


def decision_values(model: SplsdaModel, X) -> np.ndarray:
    """Predicted class indicators on the original 0/1 scale."""
    X = _as_counts(X)
    if X.shape[1] != model.x_mean.shape[0]:
        raise InputDataError(
            f"vocabulary mismatch: model has {model.x_mean.shape[0]} columns, "
            f"X has {X.shape[1]}"
        )
    Xs = (X - model.x_mean) / model.x_scale
    pw = model.x_reg_loadings.T @ model.loadings_x
    try:
        rotations = model.loadings_x @ np.linalg.inv(pw)
    except np.linalg.LinAlgError:
        raise ComputationError("singular projection; components are degenerate") from None
    scores = Xs @ rotations
    return scores @ model.y_coefs.T * model.y_scale + model.y_mean


def predict(model: SplsdaModel, X) -> np.ndarray:
    """Class of the maximal predicted indicator; ties go to class order."""
    values = decision_values(model, X)
    idx = np.argmax(values, axis=1)
    return np.asarray([model.classes[i] for i in idx])


# ---------------------------------------------------------------------------
# cross-validation probe
# ---------------------------------------------------------------------------


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean per-class recall over the classes present in y_true."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    recalls = []
    for cls in sorted(set(y_true.tolist())):
        mask = y_true == cls
        recalls.append(float(np.mean(y_pred[mask] == cls)))
    return float(np.mean(recalls))


def stratified_folds(y, n_folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Per-class shuffled round-robin assignment of indices to folds.

    Classes smaller than n_folds land in as many folds as they have members;
    a singleton class will leave some training split without it, which the
    fit rejects downstream.
    """
    y = np.asarray(y)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in sorted(set(y.tolist())):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.shape[0])]
        for j, i in enumerate(idx):
            folds[j % n_folds].append(int(i))
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


@dataclass(frozen=True)
class ClassProbe:
    acc: float
    bacc: float
    acc0: float
    bacc0: float
    bacc_by_repeat: tuple[float, ...] = ()


@dataclass(frozen=True)
class ProbeReport:
    topics: tuple
    per_class: Mapping
    overall_acc: float
    overall_bacc: float
    overall_acc0: float
    overall_bacc0: float


def _fold_metrics(X, y_bin, train, test, config, lemmas) -> tuple[float, float]:
    y_train = y_bin[train]
    if len(set(y_train.tolist())) < 2:
        raise ComputationError(
            "a training fold lost one class entirely; a class has too few members "
            f"for {config.cv_folds}-fold cross-validation"
        )
    model = fit_splsda(X[train], y_train, config, lemmas)
    pred = predict(model, X[test])
    return accuracy(y_bin[test], pred), balanced_accuracy(y_bin[test], pred)


def run_ovr_probe(
    X,
    dominant_topics: Sequence[int],
    config: SplsdaConfig,
    lemmas: Sequence[str] | None = None,
) -> ProbeReport:
    """One-versus-rest probe: per topic, cross-validated accuracy and balanced
    accuracy against Monte-Carlo label-permutation baselines."""
    X = _as_counts(X)
    y = np.asarray(dominant_topics)
    topics = tuple(sorted(set(y.tolist())))
    per_class: dict = {}
    for k in topics:
        y_bin = (y == k).astype(np.int64)
        accs: list[float] = []
        baccs: list[float] = []
        bacc_by_repeat: list[float] = []
        for r in range(config.cv_repeats):
            rng = np.random.default_rng([config.cv_seed, int(k), r])
            folds = stratified_folds(y_bin, config.cv_folds, rng)
            repeat_baccs: list[float] = []
            for fold in folds:
                train = np.setdiff1d(np.arange(X.shape[0]), fold)
                a, b = _fold_metrics(X, y_bin, train, fold, config, lemmas)
                accs.append(a)
                baccs.append(b)
                repeat_baccs.append(b)
            bacc_by_repeat.append(float(np.mean(repeat_baccs)))
        rng0 = np.random.default_rng([config.cv_seed, int(k), 10**6])
        acc0s: list[float] = []
        bacc0s: list[float] = []
        for _ in range(config.baseline_permutations):
            perm = y_bin[rng0.permutation(y_bin.shape[0])]
            acc0s.append(accuracy(y_bin, perm))
            bacc0s.append(balanced_accuracy(y_bin, perm))
        per_class[k] = ClassProbe(
            acc=float(np.mean(accs)),
            bacc=float(np.mean(baccs)),
            acc0=float(np.mean(acc0s)),
            bacc0=float(np.mean(bacc0s)),
            bacc_by_repeat=tuple(bacc_by_repeat),
        )
    return ProbeReport(
        topics=topics,
        per_class=per_class,
        overall_acc=float(np.mean([per_class[k].acc for k in topics])),
        overall_bacc=float(np.mean([per_class[k].bacc for k in topics])),
        overall_acc0=float(np.mean([per_class[k].acc0 for k in topics])),
        overall_bacc0=float(np.mean([per_class[k].bacc0 for k in topics])),
    )


def write_probe_report(report: ProbeReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("topic,acc,bacc,acc0,bacc0\n")
        for k in report.topics:
            p = report.per_class[k]
            fh.write(f"{int(k) + 1},{p.acc!r},{p.bacc!r},{p.acc0!r},{p.bacc0!r}\n")
        fh.write(
            f"overall,{report.overall_acc!r},{report.overall_bacc!r},"
            f"{report.overall_acc0!r},{report.overall_bacc0!r}\n"
        )


# ---------------------------------------------------------------------------
# exclusivity and the term dictionary
# ---------------------------------------------------------------------------

CORE_EXCLUSIVE = "core_exclusive"
SHARED = "shared"
_MAX_CORE_TERMS = 20


def exclusivity(X, dominant_topics: Sequence[int]) -> tuple[np.ndarray, tuple]:
    """E[t, k]: share of term t's corpus count in blocks dominated by topic k.

    Rows sum to one for every term that occurs in the corpus.
    """
    X = _as_counts(X)
    y = np.asarray(dominant_topics)
    topics = tuple(sorted(set(y.tolist())))
    f = np.zeros((X.shape[1], len(topics)))
    for j, k in enumerate(topics):
        f[:, j] = X[y == k].sum(axis=0)
    totals = f.sum(axis=1, keepdims=True)
    if (totals == 0).any():
        raise InputDataError("a term has zero corpus count; drop empty columns first")
    return f / totals, topics


@dataclass
class TermEntry:
    lemma: str
    topic: int
    exclusivity: float
    mean_abs_loading: float
    weighted_score: float
    selection_frequency: float
    classification: str
    retained: bool
    novel: bool | None = None
    porous: bool | None = None


@dataclass(frozen=True)
class TermDictionary:
    topics: tuple
    entries: Mapping[int, tuple[TermEntry, ...]]

    def core_terms(self, topic) -> tuple[TermEntry, ...]:
        """Retained core-exclusive entries of a topic, ranked by weighted score."""
        return tuple(e for e in self.entries.get(topic, ()) if e.retained)

    def all_entries(self) -> list[TermEntry]:
        return [e for topic in self.topics for e in self.entries[topic]]


def consolidate_lexicon(
    dtm: DocumentTermMatrix,
    dominant_topics: Sequence[int],
    config: SplsdaConfig,
) -> TermDictionary:
    """Multiclass refit on the full data plus per-fold refits, consolidated
    into an exclusivity-classified term dictionary.

    Candidate terms are those with a nonzero loading in any component of any
    fold fit or of the full fit.  Terms rank by selection frequency across
    folds, then mean absolute loading over the components where selected;
    each candidate is listed under the topic holding most of its count mass,
    and up to 20 core-exclusive terms per topic are retained by descending
    weighted exclusivity.
    """
    X = _as_counts(dtm)
    lemmas = dtm.lemmas
    y = np.asarray(dominant_topics)
    v = X.shape[1]

    full_model = fit_splsda(X, y, config, lemmas)
    full_nonzero = full_model.loadings_x != 0.0

    sel_count = np.zeros(v)
    load_sum = np.zeros(v)
    load_n = np.zeros(v)
    n_fold_fits = 0
    for r in range(config.cv_repeats):
        rng = np.random.default_rng([config.cv_seed, 777_001, r])
        for fold in stratified_folds(y, config.cv_folds, rng):
            train = np.setdiff1d(np.arange(X.shape[0]), fold)
            if len(set(y[train].tolist())) < 2:
                raise ComputationError("a training fold lost all but one class")
            model = fit_splsda(X[train], y[train], config, lemmas)
            nz = model.loadings_x != 0.0
            sel_count += nz.any(axis=1)
            load_sum += np.where(nz, np.abs(model.loadings_x), 0.0).sum(axis=1)
            load_n += nz.sum(axis=1)
            n_fold_fits += 1

    candidate = (sel_count > 0) | full_nonzero.any(axis=1)
    mean_abs = np.zeros(v)
    fold_selected = load_n > 0
    mean_abs[fold_selected] = load_sum[fold_selected] / load_n[fold_selected]
    # terms only ever selected by the full fit: fall back to its components
    only_full = candidate & ~fold_selected
    if only_full.any():
        full_abs = np.where(full_nonzero, np.abs(full_model.loadings_x), 0.0)
        full_n = full_nonzero.sum(axis=1)
        mean_abs[only_full] = full_abs[only_full].sum(axis=1) / full_n[only_full]

    E, topics = exclusivity(X, y)
    assigned = np.argmax(E, axis=1)

    entries: dict[int, list[TermEntry]] = {k: [] for k in topics}
    for t in np.flatnonzero(candidate):
        j = int(assigned[t])
        k = topics[j]
        e_tk = float(E[t, j])
        entry = TermEntry(
            lemma=lemmas[t],
            topic=k,
            exclusivity=e_tk,
            mean_abs_loading=float(mean_abs[t]),
            weighted_score=e_tk * float(mean_abs[t]),
            selection_frequency=float(sel_count[t]) / n_fold_fits,
            classification=CORE_EXCLUSIVE if e_tk >= config.lambda_exclusive else SHARED,
            retained=False,
        )
        entries[k].append(entry)

    final: dict[int, tuple[TermEntry, ...]] = {}
    for k in topics:
        group = entries[k]
        core = sorted(
            (e for e in group if e.classification == CORE_EXCLUSIVE),
            key=lambda e: (-e.weighted_score, e.lemma),
        )
        for e in core[:_MAX_CORE_TERMS]:
            e.retained = True
        group.sort(key=lambda e: (-e.selection_frequency, -e.mean_abs_loading, e.lemma))
        final[k] = tuple(group)
    return TermDictionary(topics=topics, entries=final)


def cross_method_overlap(
    lda_top_terms: Sequence[Sequence[str]],
    dictionary: TermDictionary,
) -> np.ndarray:
    """Jaccard overlap between each topic's retained core-exclusive set and
    every topic's top-term list; annotates dictionary entries in place with
    novel (absent from every top list) and porous (present in another topic's
    top list) flags.
    """
    lda_sets = [set(terms) for terms in lda_top_terms]
    union_lda: set[str] = set().union(*lda_sets) if lda_sets else set()
    k_dict = len(dictionary.topics)
    matrix = np.zeros((k_dict, len(lda_sets)))
    topic_pos = {k: i for i, k in enumerate(dictionary.topics)}
    for i, k in enumerate(dictionary.topics):
        core = {e.lemma for e in dictionary.core_terms(k)}
        for j, lda_set in enumerate(lda_sets):
            union = core | lda_set
            matrix[i, j] = len(core & lda_set) / len(union) if union else 0.0
    for entry in dictionary.all_entries():
        entry.novel = entry.lemma not in union_lda
        own = topic_pos[entry.topic]
        entry.porous = any(
            entry.lemma in lda_sets[j] for j in range(len(lda_sets)) if j != own
        )
    return matrix


def write_dictionary(dictionary: TermDictionary, path: str | Path) -> None:
    """dictionary.csv: retained core-exclusive terms plus shared candidates."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("topic,lemma,exclusivity,mean_abs_loading,weighted_score,classification,novel,porous\n")
        for k in dictionary.topics:
            for e in dictionary.entries[k]:
                if e.classification == CORE_EXCLUSIVE and not e.retained:
                    continue
                novel = "" if e.novel is None else str(e.novel).lower()
                porous = "" if e.porous is None else str(e.porous).lower()
                fh.write(
                    f"{int(k) + 1},{e.lemma},{e.exclusivity!r},{e.mean_abs_loading!r},"
                    f"{e.weighted_score!r},{e.classification},{novel},{porous}\n"
                )


def write_overlap(matrix: np.ndarray, path: str | Path) -> None:
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "core_topic," + ",".join(f"lda_topic_{j + 1}" for j in range(matrix.shape[1])) + "\n"
        )
        for i, row in enumerate(matrix):
            fh.write(f"{i + 1}," + ",".join(repr(float(x)) for x in row) + "\n")


def load_dictionary(path: str | Path) -> TermDictionary:
    """Read dictionary.csv back; core-exclusive rows are the retained ones."""
    import csv as _csv

    path = Path(path)
    if not path.exists():
        raise InputDataError(f"no such file: {path}")
    per_topic: dict[int, list[TermEntry]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        for row in reader:
            k = int(row["topic"]) - 1
            classification = row["classification"]
            entry = TermEntry(
                lemma=row["lemma"],
                topic=k,
                exclusivity=float(row["exclusivity"]),
                mean_abs_loading=float(row["mean_abs_loading"]),
                weighted_score=float(row["weighted_score"]),
                selection_frequency=float("nan"),
                classification=classification,
                retained=classification == CORE_EXCLUSIVE,
                novel=None if row["novel"] == "" else row["novel"] == "true",
                porous=None if row["porous"] == "" else row["porous"] == "true",
            )
            per_topic.setdefault(k, []).append(entry)
    topics = tuple(sorted(per_topic))
    return TermDictionary(
        topics=topics, entries={k: tuple(v) for k, v in per_topic.items()}
    )
