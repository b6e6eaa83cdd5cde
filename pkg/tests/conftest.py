import numpy as np
import pytest

import versetopics as vt
from versetopics.synth import generate


@pytest.fixture(scope="session")
def small_corpus():
    """A quick synthetic corpus for module-level fitting tests."""
    spec = vt.SynthSpec(
        k=3, vocab_size=120, n_docs=20, tokens_per_doc=80,
        alpha_true=2.0, phi_concentration=0.05, seed=11,
    )
    return generate(spec)


@pytest.fixture(scope="session")
def small_ensemble(small_corpus):
    cfg = vt.GibbsConfig(k=3, iterations=600, burn_in=300, thin=30, seed=0)
    return vt.fit_ensemble(small_corpus.dtm, cfg, n_runs=6, base_seed=500, jobs=2)


def separable_classes(n_classes=5, words_per_class=12, docs_per_class=10,
                      tokens_per_doc=40, seed=0):
    """Counts with disjoint class vocabularies: trivially separable."""
    rng = np.random.default_rng(seed)
    vocab = n_classes * words_per_class
    X = np.zeros((n_classes * docs_per_class, vocab), dtype=np.int64)
    y = np.repeat(np.arange(n_classes), docs_per_class)
    for i, k in enumerate(y):
        words = rng.integers(k * words_per_class, (k + 1) * words_per_class,
                             size=tokens_per_doc)
        np.add.at(X[i], words, 1)
    return X, y
