"""How the engine learns a user's revision style from their edits.

Every accepted replacement logs an (original, revision) pair.  The feature
delta between the two texts feeds an exponentially weighted preference
vector; strong components become fixed prompt directives and rerank sampled
completions before one is accepted.

Run:  python3 demos/adaptation_walkthrough.py
"""

from stepchain import (
    EditRecord,
    PreferenceVector,
    extract_features,
    record_edit,
    rerank,
    synthesize_directives,
)
from stepchain.adaptation import FEATURE_NAMES

pref = PreferenceVector(alpha=0.3)
log: list[EditRecord] = []

original = "the plan will work in every district"
revision = "however the plan fails; but a counterexample appears downtown unless we stage it instead"

print("feature vectors (length, counterexample, assumption, hedging, question, evidence):")
print("  original:", [round(f, 3) for f in extract_features(original)])
print("  revision:", [round(f, 3) for f in extract_features(revision)])
print()

for i in range(5):
    pref = record_edit(log, pref, EditRecord("demo", i, original, revision, i))
    line = ", ".join(f"{n}={w:+.3f}" for n, w in zip(FEATURE_NAMES, pref.p) if abs(w) > 0.01)
    print(f"after edit {i + 1}: {line}")

print()
print("directives synthesized from the learned preferences:")
for line in synthesize_directives(pref, theta=0.25):
    print(" -", line)

candidates = [
    "The rollout succeeds across the whole city.",
    "Assume uniform adoption and the plan holds.",
    "However, the pilot data shows a counterexample downtown; instead stage the rollout.",
]
print()
print("candidates reranked by the learned preferences:")
for rank, text in enumerate(rerank(candidates, pref), 1):
    print(f"  {rank}. {text}")
