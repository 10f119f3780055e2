/** Pure view-model builders. Every number or string they emit is
 * copied from an API payload field, never computed in the UI, so the
 * fidelity tests can compare the render output to the payload 1:1. */

import { QueueItem, StatsPayload, StatusPayload } from "./api.js";

export interface SentenceView {
  text: string;
  highlighted: boolean;
}

/** One entry per payload sentence; highlighted exactly when its index
 * appears in key_sentence_indices. */
export function sentenceViews(item: QueueItem): SentenceView[] {
  const keys = new Set(item.key_sentence_indices);
  return item.sentences.map((tokens, index) => ({
    text: tokens.join(" "),
    highlighted: keys.has(index),
  }));
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function articleHtml(item: QueueItem): string {
  const sentences = sentenceViews(item)
    .map((s) =>
      s.highlighted
        ? `<mark class="key-sentence">${escapeHtml(s.text)}</mark>`
        : `<span>${escapeHtml(s.text)}</span>`,
    )
    .join(" ");
  return (
    `<h2>${escapeHtml(item.title)}</h2>` +
    `<p class="score">model probability: ${item.bag_probability.toFixed(3)}</p>` +
    `<p class="body">${sentences}</p>`
  );
}

export interface TableModel {
  headers: string[];
  rows: (string | number)[][];
}

/** Welch omnibus row plus one row per post-hoc pair, values verbatim
 * from the payload. */
export function statsTableModel(stats: StatsPayload): TableModel {
  const rows: (string | number)[][] = [
    ["welch", "omnibus", stats.welch.F, stats.welch.df1, stats.welch.df2, stats.welch.p],
  ];
  for (const test of stats.posthoc) {
    rows.push([test.group_a, test.group_b, test.t, test.df, test.p_raw, test.p_adjusted]);
  }
  return {
    headers: ["group a", "group b", "statistic", "df1/df", "df2", "p"],
    rows,
  };
}

export function statsTableHtml(stats: StatsPayload): string {
  const model = statsTableModel(stats);
  const head = model.headers.map((h) => `<th>${escapeHtml(h)}</th>`).join("");
  const body = model.rows
    .map(
      (row) =>
        `<tr>${row
          .map((cell) =>
            typeof cell === "number"
              ? `<td>${cell}</td>`
              : `<td>${escapeHtml(cell)}</td>`,
          )
          .join("")}</tr>`,
    )
    .join("");
  return `<table class="stats"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export interface StatusView {
  trainingLabel: string;
  progressLabel: string;
  devF1Label: string;
  counts: StatusPayload["counts"];
  retrainDisabled: boolean;
}

export function statusView(status: StatusPayload): StatusView {
  const p = status.progress;
  const progressLabel = status.training && p.total
    ? `epoch ${p.epoch ?? 0} / ${p.total}`
    : "idle";
  const best = status.last_metrics.best_dev_f1;
  return {
    trainingLabel: status.training ? "training" : "idle",
    progressLabel,
    devF1Label: best === null || best === undefined ? "-" : String(best),
    counts: status.counts,
    retrainDisabled: status.training,
  };
}
