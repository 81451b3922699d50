"""Walk the full edit-regenerate loop offline.

The echo backend stands in for a live model: it drafts a numbered chain,
re-emits whichever steps the engine asks it to regenerate, and answers
finalization with stock text.  Watch how editing Step 2 invalidates and
refreshes only the steps that depend on it, and how the final answer stays
locked behind an explicit confirmation.

Run:  python3 demos/edit_regenerate_loop.py
"""

from stepchain import EchoBackend, SessionConfig, handle_utterance, start_session


def show(title, outcome):
    print(f"=== {title} (state: {outcome.session.state.value}) ===")
    for message in outcome.messages:
        print(message)
        print()


backend = EchoBackend(draft_steps=5)

outcome = start_session("How should a city plan for heavier rainfall?", SessionConfig(), backend)
show("initial draft", outcome)

# Editing Step 2 marks Steps 3-5 stale (they depend on it) and regenerates
# exactly those; Step 1 stays byte-identical.
outcome = handle_utterance(
    outcome.session,
    "Replace Step 2 with: Start from the drainage capacity the city already has.",
    backend,
)
show("after editing Step 2", outcome)

# A Local-scope edit touches nothing downstream.
outcome = handle_utterance(
    outcome.session, "Replace only Step 5 with: Publish the plan for public comment.", backend
)
show("after a Local-scope edit of Step 5", outcome)

# Unrecognized requests are never silently forwarded to the model.
outcome = handle_utterance(outcome.session, "could you expand step 3 with costs?", backend)
show("freeform request held for explicit forwarding", outcome)
outcome = handle_utterance(outcome.session, "forward", backend)
show("after forwarding (only Step 3 regenerated)", outcome)

# Nothing finalizes until the user says so.
outcome = handle_utterance(outcome.session, "Looks good. Proceed to final answer.", backend)
show("confirmed and finalized", outcome)
