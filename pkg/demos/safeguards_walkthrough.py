"""Transparency and privacy safeguards in isolation.

Run:  python3 demos/safeguards_walkthrough.py
"""

from stepchain import (
    ModelMetadata,
    ReasoningStep,
    build_bias_prompt,
    build_disclosure,
    detect_pii,
)

print("-- disclosure block rendered for every model call --")
metadata = ModelMetadata(
    model_version="demo-model-7", parameters={"n": 3, "temperature": 0.7}, confidence=0.82
)
print(build_disclosure(metadata).rendered)
print()

print("-- PII scan over a user edit --")
edit = "Replace step 2 with: mail results to a.b@example.org or call (555) 123-4567"
for finding in detect_pii(edit):
    print(f"{finding.kind.value:12s} span=({finding.start},{finding.end}) preview={finding.preview}")
print()

print("-- bias checkpoint prompt for one step --")
step = ReasoningStep(
    id=3,
    ordinal=4,
    text="Analyze sources of disparity, such as underrepresentation in training data.",
)
print(build_bias_prompt(step))
