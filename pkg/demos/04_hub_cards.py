"""Narrative hubs: stanza-weighted mixtures and lexical hub cards.

A hub is a contiguous stanza range (an episode).  Its topic mixture is the
stanza-share-weighted average of the contributing blocks' mixtures; its
lexical card groups the lemmas present in the hub by subtheme, with daggers
for discriminant-only lemmas and double daggers for porous ones.
"""

import numpy as np

from versetopics import Hub, SubthemeTaxonomy, build_hub_card, hub_beta_profile, hub_gamma
from versetopics.corpus import segment_blocks

# a 21-stanza chapter splits into blocks of 11 and 10
segmentation = segment_blocks([21])
layout = {1: list(range(1, 22))}
gamma = np.array([[0.7, 0.2, 0.1],
                  [0.2, 0.3, 0.5]])

hub = Hub(id="H1", label="the letter scene", start=(1, 8), end=(1, 17))
profile = hub_gamma(hub, gamma, segmentation, layout)
print("stanza weights per block:", profile.weights)
print("hub mixture:", np.round(profile.gamma_bar, 3).tolist(),
      f"(dominant T{profile.dominant + 1}, runner-up T{profile.runner_up + 1})")

lemmas = ("amore", "cuore", "neve", "bosco", "sangue", "lume")
beta = np.array([
    [0.30, 0.25, 0.02, 0.02, 0.01, 0.05],
    [0.02, 0.03, 0.35, 0.30, 0.02, 0.02],
    [0.03, 0.02, 0.02, 0.02, 0.45, 0.01],
])
top_terms = [("amore", "cuore"), ("neve", "bosco"), ("sangue",)]
hub_counts = {"amore": 4, "cuore": 2, "neve": 1, "lume": 2}

profile = hub_beta_profile(profile, beta, lemmas, top_terms, hub_counts)
print("count-weighted lexical profile:", np.round(profile.beta_profile, 3).tolist(),
      f"(beta-dominant T{profile.beta_dominant + 1})")

taxonomy = SubthemeTaxonomy(themes={
    "T1": {"amore": "Emotions", "cuore": "Emotions", "lume": "Light and sound"},
    "T2": {"neve": "Nature and landscape", "bosco": "Nature and landscape"},
})

from versetopics.splsda import CORE_EXCLUSIVE, TermDictionary, TermEntry

dictionary = TermDictionary(
    topics=(0, 1, 2),
    entries={
        0: (TermEntry("lume", 0, 0.9, 1.2, 1.08, 1.0, CORE_EXCLUSIVE, True),),
        1: (),
        2: (),
    },
)

card = build_hub_card(profile, top_terms, taxonomy, hub_counts, dictionary)
print()
print(card.render_text())
print("(dagger = discriminant lemma outside every top list; "
      "double dagger = lemma from another topic's top list)")
