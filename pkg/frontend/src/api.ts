// Typed client for the annotation service API.

export interface CandidateView {
  id: string;
  rendered: string;
}

export interface CurrentUnit {
  complete: boolean;
  narrative_id: string;
  position?: number;
  sentence_text?: string;
  context_sentences?: string[];
  candidates?: CandidateView[];
  guideline_digest?: string;
}

export interface SessionInfo {
  session_id: string;
  annotator_id: string;
  narrative_id: string;
  cursor: number;
}

export interface SpanPayload {
  char_start: number;
  char_end: number;
  text: string;
}

/** Server rejected the request (validation, sequencing, unknown id). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string
  ) {
    super(detail);
  }
}

/** Network-level failure; the request may not have reached the server. */
export class TransportError extends Error {}

export class AnnotationClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}${path}`, {
        ...init,
        headers: { "Content-Type": "application/json", ...init?.headers }
      });
    } catch (err) {
      throw new TransportError(err instanceof Error ? err.message : String(err));
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof body?.detail === "string" ? body.detail : response.statusText;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  createSession(
    annotatorId: string,
    narrativeId?: string,
    batchId?: string
  ): Promise<SessionInfo> {
    return this.request<SessionInfo>("/sessions", {
      method: "POST",
      body: JSON.stringify({
        annotator_id: annotatorId,
        narrative_id: narrativeId ?? null,
        batch_id: batchId ?? null
      })
    });
  }

  currentUnit(sessionId: string): Promise<CurrentUnit> {
    return this.request<CurrentUnit>(`/sessions/${sessionId}/current`);
  }

  submitAnnotation(
    sessionId: string,
    position: number,
    selectedCandidateIds: string[],
    addedSpans: SpanPayload[]
  ): Promise<SessionInfo> {
    return this.request<SessionInfo>(`/sessions/${sessionId}/annotations`, {
      method: "POST",
      body: JSON.stringify({
        position,
        selected_candidate_ids: selectedCandidateIds,
        added_spans: addedSpans
      })
    });
  }
}
