"""The whole pipeline through the command-line driver.

Writes a config into a scratch directory, then runs
synth -> ingest -> fit -> consensus -> probe -> hubs -> report -> score
and prints the resulting output tree.  Rerunning any stage overwrites its
outputs with byte-identical content.
"""

import tempfile
from pathlib import Path

from versetopics.cli import main

root = Path(tempfile.mkdtemp(prefix="versetopics_demo_"))
out = root / "out"

(root / "hubs.csv").write_text(
    "id,label,start_chapter,start_stanza,end_chapter,end_stanza\n"
    "H1,opening,1,1,1,10\n"
    "H2,turning point,2,6,3,5\n",
    encoding="utf-8",
)
(root / "taxonomy.csv").write_text(
    "theme,subtheme,lemma\nT1,Alpha,w000\nT2,Beta,w001\n", encoding="utf-8"
)
(root / "pipeline.ini").write_text(f"""
[paths]
tokens = {out}/synth/tokens.csv
dtm = {out}/synth/dtm.csv
hubs = {root}/hubs.csv
taxonomy = {root}/taxonomy.csv
output = {out}

[vocabulary]
allowed_pos = NOUN
min_count = 1

[gibbs]
k = 4
iterations = 600
burn_in = 300
thin = 30

[ensemble]
n_runs = 5
base_seed = 11

[align]
top_m = 20

[splsda]
n_comp = 2
keep_x = 15
cv_folds = 3
cv_repeats = 2
baseline_permutations = 200
cv_seed = 4

[synth]
k = 4
vocab_size = 150
n_docs = 24
tokens_per_doc = 90
seed = 1
""", encoding="utf-8")

for command in ("synth", "ingest", "fit", "consensus", "probe", "hubs", "report", "score"):
    code = main([command, "--config", str(root / "pipeline.ini"), "--jobs", "2"])
    assert code == 0, f"{command} exited with {code}"

print("\noutput tree:")
for path in sorted(out.rglob("*")):
    if path.is_file():
        print(" ", path.relative_to(root))

print("\nhub card H2:")
print((out / "hubs" / "H2.txt").read_text())
