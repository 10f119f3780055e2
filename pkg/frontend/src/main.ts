/** DOM wiring for the annotation page: review flow on the left, ops
 * panel (resample / retrain / status / stats) on the right. Keyboard:
 * y = event, n = not an event, Enter = submit. */

import { ApiClient } from "./api.js";
import {
  articleHtml,
  statsTableHtml,
  statusView,
} from "./render.js";
import {
  ACTION_OPTIONS,
  ReviewSession,
  TARGET_OPTIONS,
  attributesEnabled,
  setAction,
  setIsEvent,
  setTarget,
} from "./state.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fillSelect(select: HTMLSelectElement, options: readonly string[]): void {
  select.innerHTML =
    `<option value="">none</option>` +
    options.map((o) => `<option value="${o}">${o.replace(/_/g, " ")}</option>`).join("");
}

async function start(): Promise<void> {
  const annotatorInput = el<HTMLInputElement>("annotator");
  annotatorInput.value = localStorage.getItem("annotator_id") ?? "annotator";
  const session = new ReviewSession(api, annotatorInput.value);

  const isEventBox = el<HTMLInputElement>("is-event");
  const targetSelect = el<HTMLSelectElement>("target");
  const actionSelect = el<HTMLSelectElement>("action");
  fillSelect(targetSelect, TARGET_OPTIONS);
  fillSelect(actionSelect, ACTION_OPTIONS);

  function syncForm(): void {
    isEventBox.checked = session.form.isEvent;
    const enabled = attributesEnabled(session.form);
    targetSelect.disabled = !enabled;
    actionSelect.disabled = !enabled;
    targetSelect.value = session.form.target ?? "";
    actionSelect.value = session.form.action ?? "";
  }

  function renderCurrent(): void {
    const item = session.current();
    const host = el<HTMLDivElement>("article");
    const banner = el<HTMLDivElement>("banner");
    el<HTMLSpanElement>("remaining").textContent = String(session.remaining());
    if (session.notice.kind === "retry") {
      banner.textContent = `submit failed (${session.notice.message}); your label is kept`;
      banner.className = "banner retry";
      el<HTMLButtonElement>("retry").hidden = false;
    } else if (session.notice.kind === "rejected") {
      banner.textContent = `rejected: ${session.notice.message}`;
      banner.className = "banner error";
      el<HTMLButtonElement>("retry").hidden = true;
    } else {
      banner.textContent = "";
      banner.className = "banner";
      el<HTMLButtonElement>("retry").hidden = true;
    }
    host.innerHTML = item === null ? "<p>queue drained; resample to continue</p>"
      : articleHtml(item);
    syncForm();
  }

  annotatorInput.addEventListener("change", () => {
    localStorage.setItem("annotator_id", annotatorInput.value);
    session.annotatorId = annotatorInput.value;
    session.form = { ...session.form, annotatorId: annotatorInput.value };
  });
  isEventBox.addEventListener("change", () => {
    session.form = setIsEvent(session.form, isEventBox.checked);
    syncForm();
  });
  targetSelect.addEventListener("change", () => {
    session.form = setTarget(session.form, targetSelect.value || null);
  });
  actionSelect.addEventListener("change", () => {
    session.form = setAction(session.form, actionSelect.value || null);
  });

  async function submit(): Promise<void> {
    await session.submitCurrent();
    renderCurrent();
  }

  el<HTMLButtonElement>("submit").addEventListener("click", submit);
  el<HTMLButtonElement>("retry").addEventListener("click", async () => {
    await session.retryPending();
    renderCurrent();
  });
  document.addEventListener("keydown", (event: KeyboardEvent) => {
    if (event.target instanceof HTMLInputElement && event.target.type === "text") return;
    if (event.key === "y") {
      session.form = setIsEvent(session.form, true);
      syncForm();
    } else if (event.key === "n") {
      session.form = setIsEvent(session.form, false);
      syncForm();
    } else if (event.key === "Enter") {
      void submit();
    }
  });

  // ops panel
  const retrainButton = el<HTMLButtonElement>("retrain");
  el<HTMLButtonElement>("resample").addEventListener("click", async () => {
    const n = parseInt(el<HTMLInputElement>("resample-n").value, 10) || 20;
    await api.resample(n);
    await session.loadQueue(n);
    renderCurrent();
  });
  retrainButton.addEventListener("click", async () => {
    const outcome = await api.retrain();
    if (outcome.conflict) {
      retrainButton.disabled = true;
      retrainButton.title = outcome.error ?? "a training run is already in progress";
    }
    await pollStatus();
  });

  async function pollStatus(): Promise<void> {
    try {
      const status = await api.status();
      const view = statusView(status);
      el<HTMLSpanElement>("training-state").textContent = view.trainingLabel;
      el<HTMLSpanElement>("training-progress").textContent = view.progressLabel;
      el<HTMLSpanElement>("dev-f1").textContent = view.devF1Label;
      el<HTMLSpanElement>("count-articles").textContent = String(view.counts.articles);
      el<HTMLSpanElement>("count-labeled").textContent = String(view.counts.labeled_articles);
      el<HTMLSpanElement>("count-pending").textContent = String(view.counts.queue_pending);
      retrainButton.disabled = view.retrainDisabled;
      retrainButton.title = view.retrainDisabled
        ? "a training run is already in progress" : "";
    } catch {
      el<HTMLSpanElement>("training-state").textContent = "unreachable";
    }
  }

  async function loadStats(): Promise<void> {
    const stats = await api.stats();
    el<HTMLDivElement>("stats").innerHTML =
      stats === null ? "<p>no stats report yet</p>" : statsTableHtml(stats);
  }

  await session.loadQueue(20);
  renderCurrent();
  await pollStatus();
  await loadStats();
  setInterval(() => void pollStatus(), 2000);
}

addEventListener("DOMContentLoaded", () => void start());
