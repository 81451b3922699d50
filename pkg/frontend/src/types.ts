// Wire types mirroring the server's JSON exactly; the client never reshapes
// step text, only displays it.

export type StepStatus = "Fresh" | "Stale" | "UserEdited";
export type Provenance = "ModelGenerated" | "UserAuthored";

export interface StepView {
  ordinal: number;
  text: string;
  status: StepStatus;
  provenance: Provenance;
}

export interface TranscriptEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface SessionEnvelope {
  schema_version: number;
  checksum: string;
  session: {
    id: string;
    query: string;
    state: string;
    chain: {
      steps: Array<{
        id: number;
        ordinal: number;
        text: string;
        status: string;
        provenance: string;
      }>;
    };
    transcript: TranscriptEvent[];
    final_answer: { text: string } | null;
  };
}

export interface CreateSessionReply {
  session_id: string;
  messages: string[];
}

export interface UtteranceReply {
  messages: string[];
  state: string;
}
