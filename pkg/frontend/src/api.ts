// Thin client over the session API.  The event stream is consumed with
// fetch-streaming SSE parsing so the same code runs in browsers and in the
// node test runner (no EventSource dependency).

import type {
  CreateSessionReply,
  SessionEnvelope,
  TranscriptEvent,
  UtteranceReply,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface EventStreamHandle {
  close(): void;
  done: Promise<void>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function expectOk(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return response;
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async createSession(
    query: string,
    config?: Record<string, unknown>,
  ): Promise<CreateSessionReply> {
    const response = await expectOk(
      await this.fetchImpl(`${this.baseUrl}/sessions`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(config ? { query, config } : { query }),
      }),
    );
    return (await response.json()) as CreateSessionReply;
  }

  async sendUtterance(sessionId: string, text: string): Promise<UtteranceReply> {
    const response = await expectOk(
      await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/utterances`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      }),
    );
    return (await response.json()) as UtteranceReply;
  }

  async getEnvelope(sessionId: string): Promise<SessionEnvelope> {
    const response = await expectOk(
      await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}`),
    );
    return (await response.json()) as SessionEnvelope;
  }

  // Raw pass-through: the document is exactly the server's bytes.
  async exportDocument(sessionId: string, format: "markdown" | "json"): Promise<string> {
    const response = await expectOk(
      await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/export?format=${format}`),
    );
    return await response.text();
  }

  streamEvents(
    sessionId: string,
    since: number,
    onEvent: (event: TranscriptEvent) => void,
    options: { follow?: boolean; onError?: (error: unknown) => void } = {},
  ): EventStreamHandle {
    const follow = options.follow === false ? 0 : 1;
    const controller = new AbortController();
    const done = (async () => {
      const response = await expectOk(
        await this.fetchImpl(
          `${this.baseUrl}/sessions/${sessionId}/events?since=${since}&follow=${follow}`,
          { signal: controller.signal },
        ),
      );
      const body = response.body;
      if (!body) throw new ApiError(0, "event stream has no body");
      const reader = body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { value, done: finished } = await reader.read();
        if (finished) break;
        buffer += decoder.decode(value, { stream: true });
        let boundary;
        while ((boundary = buffer.indexOf("\n\n")) >= 0) {
          const frame = buffer.slice(0, boundary);
          buffer = buffer.slice(boundary + 2);
          for (const line of frame.split("\n")) {
            if (line.startsWith("data: ")) {
              onEvent(JSON.parse(line.slice(6)) as TranscriptEvent);
            }
          }
        }
      }
    })().catch((error) => {
      if (!controller.signal.aborted && options.onError) options.onError(error);
    });
    return { close: () => controller.abort(), done };
  }
}
