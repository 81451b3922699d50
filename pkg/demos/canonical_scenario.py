"""Replay the shipped dialect-fairness scenario byte-for-byte.

The fixture bundles a scripted backend (deterministic candidate texts keyed
by purpose, target steps, and edit turn) with the exact dialogue the engine
must reproduce: an 8-step draft whose ordinals skip 2, a Step 4 revision that
regenerates Steps 5-9, a forwarded expansion that touches only Step 7, and a
confirmed final answer plus export.

Run:  python3 demos/canonical_scenario.py
"""

from importlib import resources

from stepchain import run_scenario

fixture = resources.files("stepchain") / "fixtures" / "dialect_fairness.json"

result = run_scenario(str(fixture))
print(f"replay status: {result.status} (0 means every message matched byte-for-byte)")
print(f"messages replayed: {len(result.messages)}")
print(f"final state: {result.session.state.value}")
print()
print("Final chain:")
for step in result.session.chain.steps:
    print(f"  [Step {step.ordinal}] {step.text[:72]}{'...' if len(step.text) > 72 else ''}")
