// DOM rendering and the annotation controller.
//
// The screen is a function of ViewState. Server-owned facts (cursor,
// context, candidates) are only changed by re-fetching the current unit
// after an acknowledged submission; a failed or rejected submission leaves
// the local draft untouched.

import {
  AnnotationClient,
  ApiError,
  TransportError,
  type SpanPayload
} from "./api";
import {
  addPendingSpan,
  removePendingSpan,
  stateFromUnit,
  toggleCandidate,
  withStatus,
  type PendingSpan,
  type ViewState
} from "./state";

const TRIPLET_SEPARATOR = " — ";

/** Global character offset of (container, offset) within `root`, or null if
 * the point does not lie inside root's text. */
function textOffset(root: Element, container: Node, offset: number): number | null {
  let node: Node | null = container;
  if (!root.contains(container)) {
    return null;
  }
  if (container.nodeType === Node.ELEMENT_NODE) {
    // element point: resolve to the start of the offset-th child
    let acc = 0;
    const children = container.childNodes;
    for (let i = 0; i < Math.min(offset, children.length); i++) {
      acc += children[i].textContent?.length ?? 0;
    }
    if (container === root) {
      return acc;
    }
    // fall through: add everything before `container` itself
    offset = acc;
    node = container.firstChild ?? container;
    if (node === container) {
      return precedingLength(root, container) + offset;
    }
  }
  return precedingLength(root, node!) + offset;
}

function precedingLength(root: Element, node: Node): number {
  let total = 0;
  const walker = node.ownerDocument!.createTreeWalker(root, NodeFilter.SHOW_TEXT);
  let current = walker.nextNode();
  while (current && current !== node) {
    total += current.textContent?.length ?? 0;
    current = walker.nextNode();
  }
  return total;
}

/** Map a live selection onto the current sentence, or null when it crosses
 * the sentence boundary (context, chrome) or is empty. */
export function spanFromSelection(
  selection: Selection | null,
  sentenceEl: Element
): PendingSpan | null {
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) {
    return null;
  }
  const range = selection.getRangeAt(0);
  if (
    !sentenceEl.contains(range.startContainer) ||
    !sentenceEl.contains(range.endContainer)
  ) {
    return null;
  }
  const start = textOffset(sentenceEl, range.startContainer, range.startOffset);
  const end = textOffset(sentenceEl, range.endContainer, range.endOffset);
  if (start === null || end === null || start >= end) {
    return null;
  }
  const text = (sentenceEl.textContent ?? "").slice(start, end);
  return { charStart: start, charEnd: end, text };
}

/** True when a non-empty selection touches the current sentence but does not
 * lie entirely within it (the submit gate). */
export function selectionCrossesBoundary(
  selection: Selection | null,
  sentenceEl: Element
): boolean {
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) {
    return false;
  }
  const range = selection.getRangeAt(0);
  const startInside = sentenceEl.contains(range.startContainer);
  const endInside = sentenceEl.contains(range.endContainer);
  if (startInside && endInside) {
    return false;
  }
  if (!startInside && !endInside) {
    // entirely elsewhere counts as crossing only if it overlaps the sentence
    return range.intersectsNode ? range.intersectsNode(sentenceEl) : false;
  }
  return true;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class AnnotatorApp {
  state: ViewState | null = null;
  submitGateClosed = false;

  constructor(
    private root: HTMLElement,
    private client: AnnotationClient
  ) {
    const doc = root.ownerDocument;
    doc.addEventListener("selectionchange", () => this.refreshSubmitGate());
  }

  async start(annotatorId: string, narrativeId?: string, batchId?: string): Promise<void> {
    const session = await this.client.createSession(annotatorId, narrativeId, batchId);
    await this.loadCurrentUnit(session.session_id);
  }

  async loadCurrentUnit(sessionId?: string): Promise<void> {
    const id = sessionId ?? this.state?.sessionId;
    if (!id) throw new Error("no session");
    const unit = await this.client.currentUnit(id);
    this.state = stateFromUnit(id, unit);
    this.render();
  }

  onToggleCandidate(candidateId: string): void {
    if (!this.state) return;
    this.state = toggleCandidate(this.state, candidateId);
    this.render();
  }

  /** Turn the current browser selection into a pending span. */
  onAddSpan(): void {
    if (!this.state) return;
    const sentenceEl = this.root.querySelector(".current-sentence");
    const selection = this.root.ownerDocument.getSelection();
    const span = sentenceEl ? spanFromSelection(selection, sentenceEl) : null;
    if (span === null) {
      this.state = withStatus(this.state, {
        kind: "rejected",
        message: "Select text inside the current sentence only."
      });
      this.render();
      return;
    }
    const result = addPendingSpan(this.state, span);
    this.state = result.rejection
      ? withStatus(result.state, { kind: "rejected", message: result.rejection })
      : result.state;
    this.render();
  }

  onRemoveSpan(index: number): void {
    if (!this.state) return;
    this.state = removePendingSpan(this.state, index);
    this.render();
  }

  async submitAndAdvance(): Promise<void> {
    if (!this.state || this.state.complete) return;
    this.refreshSubmitGate();
    if (this.submitGateClosed) {
      this.state = withStatus(this.state, {
        kind: "rejected",
        message: "Selection crosses the sentence boundary; adjust it first."
      });
      this.render();
      return;
    }
    const { sessionId, position, selectedIds, pendingSpans } = this.state;
    const spans: SpanPayload[] = pendingSpans.map((span) => ({
      char_start: span.charStart,
      char_end: span.charEnd,
      text: span.text
    }));
    this.state = withStatus(this.state, { kind: "submitting" });
    this.render();
    try {
      await this.client.submitAnnotation(sessionId, position, selectedIds, spans);
    } catch (err) {
      if (err instanceof ApiError) {
        // server rejected: keep every local decision editable
        this.state = withStatus(this.state, { kind: "rejected", message: err.message });
      } else if (err instanceof TransportError) {
        this.state = withStatus(this.state, {
          kind: "transport-error",
          message: `Could not reach the server (${err.message}). Your work is kept; retry.`
        });
      } else {
        throw err;
      }
      this.render();
      return;
    }
    await this.loadCurrentUnit();
  }

  refreshSubmitGate(): void {
    const sentenceEl = this.root.querySelector(".current-sentence");
    const selection = this.root.ownerDocument.getSelection();
    const closed = sentenceEl
      ? selectionCrossesBoundary(selection, sentenceEl)
      : false;
    if (closed !== this.submitGateClosed) {
      this.submitGateClosed = closed;
      this.updateSubmitButton();
    }
  }

  private updateSubmitButton(): void {
    const button = this.root.querySelector<HTMLButtonElement>(".submit-button");
    if (button && this.state) {
      button.disabled =
        this.submitGateClosed || this.state.status.kind === "submitting";
    }
  }

  render(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    if (!this.state) return;
    const state = this.state;

    if (state.complete) {
      const done = el(doc, "div", "completion-screen");
      done.appendChild(el(doc, "h2", undefined, "Narrative complete"));
      done.appendChild(
        el(doc, "p", undefined, `Thank you — every sentence of ${state.narrativeId} is annotated.`)
      );
      this.root.appendChild(done);
      return;
    }

    const guidelines = el(doc, "header", "guidelines");
    guidelines.appendChild(el(doc, "strong", undefined, "Guidelines: "));
    guidelines.appendChild(el(doc, "span", undefined, state.guidelineDigest));
    this.root.appendChild(guidelines);

    const layout = el(doc, "div", "layout");
    this.root.appendChild(layout);

    // left: progressive narrative
    const narrativePane = el(doc, "section", "narrative-pane");
    layout.appendChild(narrativePane);
    const context = el(doc, "div", "context-sentences");
    for (const sentence of state.contextSentences) {
      context.appendChild(el(doc, "p", "context-sentence", sentence));
    }
    narrativePane.appendChild(context);
    const current = el(doc, "p", "current-sentence");
    current.appendChild(doc.createTextNode(state.sentenceText));
    narrativePane.appendChild(current);

    // right: decisions
    const panel = el(doc, "section", "decision-panel");
    layout.appendChild(panel);
    panel.appendChild(
      el(
        doc,
        "p",
        "question",
        "Which of these describe a valid, new event in this sentence?"
      )
    );

    const checklist = el(doc, "ul", "candidate-list");
    for (const candidate of state.candidates) {
      const item = el(doc, "li", "candidate-item");
      const label = el(doc, "label");
      const checkbox = el(doc, "input") as HTMLInputElement;
      checkbox.type = "checkbox";
      checkbox.value = candidate.id;
      checkbox.checked = state.selectedIds.includes(candidate.id);
      checkbox.addEventListener("change", () => this.onToggleCandidate(candidate.id));
      label.appendChild(checkbox);
      const parts = candidate.rendered.split(TRIPLET_SEPARATOR);
      const roles = ["subject", "predicate", "object"];
      parts.forEach((part, i) => {
        if (i > 0) label.appendChild(el(doc, "span", "triplet-separator", " — "));
        label.appendChild(el(doc, "span", `triplet-${roles[i] ?? "object"}`, part));
      });
      item.appendChild(label);
      checklist.appendChild(item);
    }
    if (state.candidates.length === 0) {
      checklist.appendChild(
        el(doc, "li", "no-candidates", "No candidates were extracted for this sentence.")
      );
    }
    panel.appendChild(checklist);

    const spanBox = el(doc, "div", "span-box");
    spanBox.appendChild(
      el(
        doc,
        "p",
        "span-hint",
        "Missing event? Select its exact words in the current sentence, then:"
      )
    );
    const addButton = el(doc, "button", "add-span-button", "Add selection as new event");
    addButton.addEventListener("click", () => this.onAddSpan());
    spanBox.appendChild(addButton);
    const pendingList = el(doc, "ul", "pending-spans");
    state.pendingSpans.forEach((span, index) => {
      const item = el(doc, "li", "pending-span");
      item.appendChild(el(doc, "span", "pending-span-text", `"${span.text}"`));
      const remove = el(doc, "button", "remove-span-button", "remove");
      remove.addEventListener("click", () => this.onRemoveSpan(index));
      item.appendChild(remove);
      pendingList.appendChild(item);
    });
    spanBox.appendChild(pendingList);
    panel.appendChild(spanBox);

    const submit = el(doc, "button", "submit-button", "Submit and continue");
    submit.addEventListener("click", () => {
      void this.submitAndAdvance();
    });
    panel.appendChild(submit);

    const status = el(doc, "p", `status status-${state.status.kind}`);
    if (state.status.kind === "rejected" || state.status.kind === "transport-error") {
      status.textContent = state.status.message;
    } else if (state.status.kind === "submitting") {
      status.textContent = "Submitting…";
    }
    panel.appendChild(status);

    this.updateSubmitButton();
  }
}
