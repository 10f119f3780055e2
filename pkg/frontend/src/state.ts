/** Review-flow state: the label form with its invariant (target/action
 * only while is_event is on) and the queue session with optimistic
 * advance plus rollback on rejection. DOM-free so it is unit-testable. */

import { ApiClient, LabelSubmission, QueueItem, SubmitOutcome } from "./api.js";

export const TARGET_OPTIONS = [
  "race",
  "nationality",
  "gender",
  "religion",
  "sexual_orientation",
  "ideology",
  "political_identification",
  "mental_physical_health",
] as const;

export const ACTION_OPTIONS = [
  "assault",
  "arson",
  "vandalism",
  "hate_demonstration",
] as const;

export interface LabelForm {
  isEvent: boolean;
  target: string | null;
  action: string | null;
  annotatorId: string;
}

export function emptyForm(annotatorId: string): LabelForm {
  return { isEvent: false, target: null, action: null, annotatorId };
}

/** Turning is_event off clears and disables the attribute fields. */
export function setIsEvent(form: LabelForm, on: boolean): LabelForm {
  if (on) return { ...form, isEvent: true };
  return { ...form, isEvent: false, target: null, action: null };
}

export function setTarget(form: LabelForm, target: string | null): LabelForm {
  return form.isEvent ? { ...form, target } : form;
}

export function setAction(form: LabelForm, action: string | null): LabelForm {
  return form.isEvent ? { ...form, action } : form;
}

export function attributesEnabled(form: LabelForm): boolean {
  return form.isEvent;
}

export function toSubmission(form: LabelForm, articleId: string): LabelSubmission {
  return {
    article_id: articleId,
    is_event: form.isEvent,
    target: form.isEvent ? form.target : null,
    action: form.isEvent ? form.action : null,
    annotator_id: form.annotatorId,
  };
}

export type SessionNotice =
  | { kind: "none" }
  | { kind: "rejected"; message: string }
  | { kind: "retry"; message: string; pending: LabelSubmission };

/** One annotator working through the queue. Submission advances the
 * cursor immediately; a 4xx rolls the cursor and the form back, and a
 * transport failure keeps the form for a retry without losing data. */
export class ReviewSession {
  queue: QueueItem[] = [];
  cursor = 0;
  form: LabelForm;
  notice: SessionNotice = { kind: "none" };

  constructor(private readonly api: ApiClient, public annotatorId: string) {
    this.form = emptyForm(annotatorId);
  }

  async loadQueue(limit = 20): Promise<void> {
    this.queue = await this.api.fetchQueue(limit, this.annotatorId);
    this.cursor = 0;
  }

  current(): QueueItem | null {
    return this.cursor < this.queue.length ? (this.queue[this.cursor] ?? null) : null;
  }

  remaining(): number {
    return Math.max(0, this.queue.length - this.cursor);
  }

  async submitCurrent(): Promise<SubmitOutcome> {
    const item = this.current();
    if (item === null) {
      return { kind: "rejected", status: 0, error: "queue is empty" };
    }
    const submission = toSubmission(this.form, item.article_id);
    const snapshotCursor = this.cursor;
    const snapshotForm = this.form;

    // optimistic advance: show the next item right away
    this.cursor += 1;
    this.form = emptyForm(this.annotatorId);
    this.notice = { kind: "none" };

    const outcome = await this.api.submitLabel(submission);
    if (outcome.kind === "rejected") {
      this.cursor = snapshotCursor;
      this.form = snapshotForm;
      this.notice = { kind: "rejected", message: outcome.error };
    } else if (outcome.kind === "network") {
      this.cursor = snapshotCursor;
      this.form = snapshotForm;
      this.notice = { kind: "retry", message: outcome.error, pending: submission };
    } else {
      item.status = "labeled";
    }
    return outcome;
  }

  /** Re-send after a network failure; the form was never cleared. */
  async retryPending(): Promise<SubmitOutcome> {
    if (this.notice.kind !== "retry") {
      return { kind: "rejected", status: 0, error: "nothing to retry" };
    }
    return this.submitCurrent();
  }
}
