// Pure view state derived from server events.  The client holds no business
// logic: every rendered chain comes byte-for-byte from a server event (or a
// full envelope on resync), and the reducer only tracks ordering.

import { piiWarningLine } from "./protocol.js";
import type { SessionEnvelope, StepStatus, StepView, TranscriptEvent } from "./types.js";

export interface SessionView {
  sessionId: string;
  query: string;
  state: string;
  steps: StepView[];
  disclosures: string[];
  warnings: string[];
  finalAnswer: string | null;
  lastSeq: number;
  needsResync: boolean;
}

export function emptyView(): SessionView {
  return {
    sessionId: "",
    query: "",
    state: "Created",
    steps: [],
    disclosures: [],
    warnings: [],
    finalAnswer: null,
    lastSeq: -1,
    needsResync: false,
  };
}

function stepsFromPayload(raw: unknown): StepView[] | null {
  if (!Array.isArray(raw)) return null;
  return raw.map((step) => ({
    ordinal: Number(step.ordinal),
    text: String(step.text),
    status: String(step.status) as StepStatus,
    provenance: step.provenance === "UserAuthored" ? "UserAuthored" : "ModelGenerated",
  }));
}

export function viewFromEnvelope(envelope: SessionEnvelope): SessionView {
  const session = envelope.session;
  return {
    sessionId: session.id,
    query: session.query,
    state: session.state,
    steps: session.chain.steps.map((step) => ({
      ordinal: step.ordinal,
      text: step.text,
      status: step.status as StepStatus,
      provenance: step.provenance === "UserAuthored" ? "UserAuthored" : "ModelGenerated",
    })),
    disclosures: session.transcript
      .filter((event) => event.kind === "Disclosure")
      .map((event) => String(event.payload.rendered)),
    warnings: pendingWarnings(session.transcript),
    finalAnswer: session.final_answer ? session.final_answer.text : null,
    lastSeq: session.transcript.length - 1,
    needsResync: false,
  };
}

function pendingWarnings(transcript: TranscriptEvent[]): string[] {
  // warnings since the last user utterance are still pending
  const warnings: string[] = [];
  for (const event of transcript) {
    if (event.kind === "UserUtterance") warnings.length = 0;
    if (event.kind === "PiiWarning") {
      warnings.push(
        piiWarningLine(
          String(event.payload.kind),
          String(event.payload.preview),
          String(event.payload.where),
        ),
      );
    }
  }
  return warnings;
}

// Events with a lower sequence number than already applied are stale and
// dropped; a gap means missed events, so the caller must resynchronize from
// GET /sessions/{id}.
export function applyEvent(view: SessionView, event: TranscriptEvent): SessionView {
  if (event.seq <= view.lastSeq) return view;
  const next: SessionView = { ...view, steps: view.steps.slice(), lastSeq: event.seq };
  if (event.seq > view.lastSeq + 1) next.needsResync = true;

  switch (event.kind) {
    case "StateChanged":
      next.state = String(event.payload.state);
      break;
    case "ChainUpdated":
    case "EditApplied":
    case "Regenerated":
    case "ForwardedFreeform": {
      const steps = stepsFromPayload(event.payload.chain);
      if (steps) next.steps = steps;
      break;
    }
    case "Disclosure":
      next.disclosures = [...view.disclosures, String(event.payload.rendered)];
      break;
    case "PiiWarning":
      next.warnings = [
        ...view.warnings,
        piiWarningLine(
          String(event.payload.kind),
          String(event.payload.preview),
          String(event.payload.where),
        ),
      ];
      break;
    case "UserUtterance":
      next.warnings = [];
      break;
    case "FinalAnswer":
      next.finalAnswer = String(event.payload.text);
      break;
    default:
      break;
  }
  return next;
}

export function applyEvents(view: SessionView, events: TranscriptEvent[]): SessionView {
  return events.reduce(applyEvent, view);
}

export function hasStale(view: SessionView): boolean {
  return view.steps.some((step) => step.status === "Stale");
}

export function canEdit(view: SessionView): boolean {
  return view.state === "AwaitingReview";
}

// Mirror of the server gate: confirmation is off the table whenever any step
// still shows a Stale badge (and outside review entirely).
export function canConfirm(view: SessionView): boolean {
  return canEdit(view) && !hasStale(view) && view.steps.length > 0;
}

// Identity edits never leave the client: no request, no Stale badges.
export function isIdentityEdit(view: SessionView, ordinal: number, newText: string): boolean {
  const step = view.steps.find((candidate) => candidate.ordinal === ordinal);
  return step !== undefined && step.text === newText.trim();
}
