import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiClient, QueueItem, SubmitOutcome } from "../src/api.js";
import {
  ACTION_OPTIONS,
  ReviewSession,
  TARGET_OPTIONS,
  attributesEnabled,
  emptyForm,
  setAction,
  setIsEvent,
  setTarget,
  toSubmission,
} from "../src/state.js";

function item(id: string): QueueItem {
  return {
    article_id: id,
    bag_probability: 0.5,
    sample_weight: 1,
    status: "pending",
    title: `t-${id}`,
    body: "Body text.",
    sentences: [["body", "text", "."]],
    key_sentence_indices: [0],
  };
}

/** An ApiClient whose transport is scripted per call. */
function scriptedClient(queue: QueueItem[], outcomes: SubmitOutcome[]): ApiClient {
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    if (input.startsWith("/api/queue")) {
      return new Response(JSON.stringify({ items: queue }), { status: 200 });
    }
    if (input === "/api/labels" && init?.method === "POST") {
      const outcome = outcomes.shift();
      if (!outcome) throw new Error("unscripted label POST");
      if (outcome.kind === "stored") {
        return new Response(JSON.stringify({ status: "stored" }), { status: 201 });
      }
      if (outcome.kind === "rejected") {
        return new Response(JSON.stringify({ error: outcome.error }),
          { status: outcome.status });
      }
      throw new TypeError("fetch failed");   // network error
    }
    throw new Error(`unscripted request ${input}`);
  };
  return new ApiClient("", fetchFn);
}

test("label form enforces the attribute invariant", () => {
  let form = emptyForm("ann");
  assert.equal(attributesEnabled(form), false);
  // attributes cannot be set while is_event is off
  form = setTarget(form, "race");
  form = setAction(form, "arson");
  assert.equal(form.target, null);
  assert.equal(form.action, null);

  form = setIsEvent(form, true);
  form = setTarget(form, "race");
  form = setAction(form, "arson");
  assert.equal(form.target, "race");
  assert.equal(form.action, "arson");

  // toggling off clears them again
  form = setIsEvent(form, false);
  assert.equal(form.target, null);
  assert.equal(form.action, null);
  const sub = toSubmission(form, "a1");
  assert.deepEqual(sub, {
    article_id: "a1",
    is_event: false,
    target: null,
    action: null,
    annotator_id: "ann",
  });
});

test("option lists match the 8-way / 4-way taxonomy", () => {
  assert.equal(TARGET_OPTIONS.length, 8);
  assert.equal(ACTION_OPTIONS.length, 4);
  assert.ok(TARGET_OPTIONS.includes("sexual_orientation"));
  assert.ok(ACTION_OPTIONS.includes("hate_demonstration"));
});

test("successful submit advances and resets the form", async () => {
  const api = scriptedClient([item("a1"), item("a2")], [{ kind: "stored" }]);
  const session = new ReviewSession(api, "ann");
  await session.loadQueue();
  session.form = setIsEvent(session.form, true);
  session.form = setTarget(session.form, "religion");

  const outcome = await session.submitCurrent();
  assert.equal(outcome.kind, "stored");
  assert.equal(session.current()?.article_id, "a2");
  assert.equal(session.form.isEvent, false);
  assert.equal(session.notice.kind, "none");
  assert.equal(session.queue[0]?.status, "labeled");
});

test("4xx rejection rolls back cursor and form", async () => {
  const api = scriptedClient(
    [item("a1"), item("a2")],
    [{ kind: "rejected", status: 400, error: "bad label" }],
  );
  const session = new ReviewSession(api, "ann");
  await session.loadQueue();
  session.form = setIsEvent(session.form, true);
  session.form = setTarget(session.form, "gender");

  const outcome = await session.submitCurrent();
  assert.equal(outcome.kind, "rejected");
  assert.equal(session.current()?.article_id, "a1");  // rolled back
  assert.equal(session.form.isEvent, true);           // form preserved
  assert.equal(session.form.target, "gender");
  assert.equal(session.notice.kind, "rejected");
});

test("network failure keeps the form and offers a retry that succeeds", async () => {
  const api = scriptedClient(
    [item("a1")],
    [{ kind: "network", error: "offline" }, { kind: "stored" }],
  );
  const session = new ReviewSession(api, "ann");
  await session.loadQueue();
  session.form = setIsEvent(session.form, true);

  const first = await session.submitCurrent();
  assert.equal(first.kind, "network");
  assert.equal(session.notice.kind, "retry");
  assert.equal(session.current()?.article_id, "a1");
  assert.equal(session.form.isEvent, true);           // no data loss

  const second = await session.retryPending();
  assert.equal(second.kind, "stored");
  assert.equal(session.notice.kind, "none");
  assert.equal(session.remaining(), 0);
});

test("submit on a drained queue is rejected locally", async () => {
  const api = scriptedClient([], []);
  const session = new ReviewSession(api, "ann");
  await session.loadQueue();
  const outcome = await session.submitCurrent();
  assert.equal(outcome.kind, "rejected");
});
