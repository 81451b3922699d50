"""Interactive, editable chain-of-thought sessions.

A reasoning chain is exposed as uniquely-identified numbered steps the user
can replace, delete, merge, or extend; edits invalidate exactly the steps
that logically depend on them, and only those get regenerated.  The engine
learns the user's revision style from their edits, reranks sampled
completions accordingly, and never finalizes an answer without explicit
confirmation.
"""

from .adaptation import (
    EditRecord,
    FeatureVector,
    PreferenceVector,
    extract_features,
    record_edit,
    rerank,
    synthesize_directives,
)
from .backends import (
    EchoBackend,
    HttpBackend,
    ModelMetadata,
    ModelResponse,
    ScriptedBackend,
    ScriptEntry,
    load_script,
)
from .chain import (
    DependencyGraph,
    Provenance,
    ReasoningChain,
    ReasoningStep,
    StepStatus,
    apply_edit,
    apply_edit_sequence,
    descendants,
    new_chain,
)
from .commands import (
    BiasCheck,
    Confirm,
    Delete,
    EditCommand,
    Export,
    ExportFormat,
    Freeform,
    Insert,
    Merge,
    Replace,
    Scope,
)
from .engine import (
    EXPORT_OFFER,
    FREEFORM_PROMPT,
    REVIEW_QUESTION,
    EngineOutcome,
    FinalAnswer,
    export_session,
    finalize,
    handle_utterance,
    regenerate_stale,
    start_session,
)
from .errors import StepchainError
from .protocol import (
    SYSTEM_PROMPT,
    PromptBundle,
    PromptPurpose,
    parse_chain,
    parse_command,
    render_chain,
    render_prompt,
)
from .safeguards import (
    Disclosure,
    PiiFinding,
    PiiKind,
    build_bias_prompt,
    build_disclosure,
    detect_pii,
)
from .scenario import ScenarioResult, run_scenario
from .session import Session, SessionConfig, SessionEvent, SessionState, transition
from .store import SessionStore, load_session, save_session

__all__ = [
    "BiasCheck",
    "Confirm",
    "Delete",
    "DependencyGraph",
    "Disclosure",
    "EchoBackend",
    "EditCommand",
    "EditRecord",
    "EngineOutcome",
    "Export",
    "ExportFormat",
    "EXPORT_OFFER",
    "extract_features",
    "FeatureVector",
    "FinalAnswer",
    "Freeform",
    "FREEFORM_PROMPT",
    "HttpBackend",
    "Insert",
    "load_script",
    "load_session",
    "Merge",
    "ModelMetadata",
    "ModelResponse",
    "new_chain",
    "parse_chain",
    "parse_command",
    "PiiFinding",
    "PiiKind",
    "PreferenceVector",
    "PromptBundle",
    "PromptPurpose",
    "Provenance",
    "ReasoningChain",
    "ReasoningStep",
    "record_edit",
    "regenerate_stale",
    "render_chain",
    "render_prompt",
    "Replace",
    "rerank",
    "REVIEW_QUESTION",
    "run_scenario",
    "save_session",
    "ScenarioResult",
    "Scope",
    "ScriptedBackend",
    "ScriptEntry",
    "Session",
    "SessionConfig",
    "SessionEvent",
    "SessionState",
    "SessionStore",
    "StepchainError",
    "StepStatus",
    "synthesize_directives",
    "SYSTEM_PROMPT",
    "transition",
    "apply_edit",
    "apply_edit_sequence",
    "build_bias_prompt",
    "build_disclosure",
    "descendants",
    "detect_pii",
    "export_session",
    "finalize",
    "handle_utterance",
    "start_session",
]
