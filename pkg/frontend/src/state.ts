// Pure view-state: everything the screen shows, nothing the server hasn't
// acknowledged. Checkbox ticks and pending spans are local draft state; the
// narrative cursor and context only ever change by loading a fresh unit
// from the API.

import type { CandidateView, CurrentUnit } from "./api";

export interface PendingSpan {
  charStart: number;
  charEnd: number;
  text: string;
}

export type Status =
  | { kind: "idle" }
  | { kind: "submitting" }
  | { kind: "rejected"; message: string }
  | { kind: "transport-error"; message: string };

export interface ViewState {
  sessionId: string;
  narrativeId: string;
  complete: boolean;
  position: number;
  sentenceText: string;
  contextSentences: string[];
  candidates: CandidateView[];
  selectedIds: string[];
  pendingSpans: PendingSpan[];
  guidelineDigest: string;
  status: Status;
}

export function stateFromUnit(sessionId: string, unit: CurrentUnit): ViewState {
  return {
    sessionId,
    narrativeId: unit.narrative_id,
    complete: unit.complete,
    position: unit.position ?? -1,
    sentenceText: unit.sentence_text ?? "",
    contextSentences: unit.context_sentences ?? [],
    candidates: unit.candidates ?? [],
    selectedIds: [],
    pendingSpans: [],
    guidelineDigest: unit.guideline_digest ?? "",
    status: { kind: "idle" }
  };
}

export function toggleCandidate(state: ViewState, candidateId: string): ViewState {
  const selected = state.selectedIds.includes(candidateId)
    ? state.selectedIds.filter((id) => id !== candidateId)
    : [...state.selectedIds, candidateId];
  return { ...state, selectedIds: selected, status: { kind: "idle" } };
}

export interface SpanResult {
  state: ViewState;
  rejection?: string;
}

export function addPendingSpan(state: ViewState, span: PendingSpan): SpanResult {
  if (
    span.charStart < 0 ||
    span.charEnd > state.sentenceText.length ||
    span.charStart >= span.charEnd
  ) {
    return { state, rejection: "Selection is outside the current sentence." };
  }
  if (state.sentenceText.slice(span.charStart, span.charEnd) !== span.text) {
    return { state, rejection: "Selection does not match the sentence text." };
  }
  const duplicate = state.pendingSpans.some(
    (existing) =>
      existing.charStart === span.charStart && existing.charEnd === span.charEnd
  );
  if (duplicate) {
    return { state }; // second identical selection is silently ignored
  }
  return {
    state: {
      ...state,
      pendingSpans: [...state.pendingSpans, span],
      status: { kind: "idle" }
    }
  };
}

export function removePendingSpan(state: ViewState, index: number): ViewState {
  return {
    ...state,
    pendingSpans: state.pendingSpans.filter((_, i) => i !== index)
  };
}

export function withStatus(state: ViewState, status: Status): ViewState {
  return { ...state, status };
}
