import assert from "node:assert/strict";
import { test } from "node:test";

import { QueueItem, StatsPayload, StatusPayload } from "../src/api.js";
import {
  articleHtml,
  escapeHtml,
  sentenceViews,
  statsTableModel,
  statsTableHtml,
  statusView,
} from "../src/render.js";

const ITEM: QueueItem = {
  article_id: "a9",
  bag_probability: 0.8125,
  sample_weight: 0.9,
  status: "pending",
  title: "Window broken <late>",
  body: "One two. Three four. Five six.",
  sentences: [["one", "two", "."], ["three", "four", "."], ["five", "six", "."]],
  key_sentence_indices: [2, 0],
};

test("highlights correspond exactly to key_sentence_indices", () => {
  const views = sentenceViews(ITEM);
  assert.equal(views.length, ITEM.sentences.length);
  const highlighted = views
    .map((v, i) => (v.highlighted ? i : -1))
    .filter((i) => i >= 0);
  assert.deepEqual(highlighted.sort(), [...ITEM.key_sentence_indices].sort());
  assert.equal(views[0]?.text, "one two .");
});

test("article html marks key sentences and nothing else", () => {
  const html = articleHtml(ITEM);
  const marks = html.match(/<mark class="key-sentence">/g) ?? [];
  assert.equal(marks.length, ITEM.key_sentence_indices.length);
  assert.ok(html.includes("one two ."));
  assert.ok(html.includes("0.813"));              // bag probability, rounded for display
  assert.ok(html.includes("&lt;late&gt;"));        // title is escaped
});

test("escapeHtml neutralizes markup", () => {
  assert.equal(escapeHtml(`<b a="c">&`), "&lt;b a=&quot;c&quot;&gt;&amp;");
});

const STATS: StatsPayload = {
  per_crime_ratios: {
    hate: { crime_type: "hate", cities: ["Alton"], ratios: [0.5] },
  },
  welch: { F: 102.03, df1: 2, df2: 214.28, p: 0.00042 },
  posthoc: [
    { group_a: "hate", group_b: "homicide", t: -3.5, df: 88.2, p_raw: 0.0007, p_adjusted: 0.0021 },
  ],
};

test("stats table carries payload values verbatim", () => {
  const model = statsTableModel(STATS);
  const flat = model.rows.flat();
  for (const value of [102.03, 2, 214.28, 0.00042, -3.5, 88.2, 0.0007, 0.0021]) {
    assert.ok(flat.includes(value), `missing ${value}`);
  }
  // no number in the table that is not in the payload
  const payloadNumbers = new Set<number>([
    STATS.welch.F, STATS.welch.df1, STATS.welch.df2, STATS.welch.p,
    ...STATS.posthoc.flatMap((t) => [t.t, t.df, t.p_raw, t.p_adjusted]),
  ]);
  for (const cell of flat) {
    if (typeof cell === "number") {
      assert.ok(payloadNumbers.has(cell), `table invented ${cell}`);
    }
  }
  const html = statsTableHtml(STATS);
  assert.ok(html.includes("102.03"));
  assert.ok(html.includes("hate"));
});

test("status view reflects training state and disables retrain", () => {
  const busy: StatusPayload = {
    training: true,
    progress: { epoch: 3, total: 18, train_loss: 0.4, dev_f1: 0.9 },
    counts: { articles: 130, labeled_articles: 100, labels: 140, queue_pending: 10 },
    last_metrics: { best_dev_f1: 0.91 },
    model_loaded: true,
  };
  const view = statusView(busy);
  assert.equal(view.retrainDisabled, true);
  assert.equal(view.progressLabel, "epoch 3 / 18");
  assert.equal(view.devF1Label, "0.91");
  assert.deepEqual(view.counts, busy.counts);

  const idle = statusView({ ...busy, training: false });
  assert.equal(idle.retrainDisabled, false);
  assert.equal(idle.progressLabel, "idle");
});
