/** Typed client for the pipeline service's JSON API. */

export interface QueueItem {
  article_id: string;
  bag_probability: number;
  sample_weight: number;
  status: string;
  title: string;
  body: string;
  sentences: string[][];
  key_sentence_indices: number[];
}

export interface LabelSubmission {
  article_id: string;
  is_event: boolean;
  target: string | null;
  action: string | null;
  annotator_id: string;
}

export interface TrainingProgress {
  epoch?: number;
  total?: number;
  train_loss?: number;
  dev_f1?: number | null;
}

export interface StatusPayload {
  training: boolean;
  progress: TrainingProgress;
  counts: {
    articles: number;
    labeled_articles: number;
    labels: number;
    queue_pending: number;
  };
  last_metrics: {
    best_dev_f1?: number | null;
    epochs?: number;
    train_loss_final?: number;
    error?: string;
  };
  model_loaded: boolean;
}

export interface WelchPayload {
  F: number;
  df1: number;
  df2: number;
  p: number;
}

export interface PosthocPayload {
  group_a: string;
  group_b: string;
  t: number;
  df: number;
  p_raw: number;
  p_adjusted: number;
}

export interface StatsPayload {
  per_crime_ratios: Record<string, { crime_type: string; cities: string[]; ratios: number[] }>;
  welch: WelchPayload;
  posthoc: PosthocPayload[];
}

/** Outcome of a label submission, separating HTTP rejection (4xx,
 * rollback) from transport failure (retry banner). */
export type SubmitOutcome =
  | { kind: "stored" }
  | { kind: "rejected"; status: number; error: string }
  | { kind: "network"; error: string };

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(private readonly baseUrl: string = "", fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async fetchQueue(limit: number, annotatorId?: string): Promise<QueueItem[]> {
    const query = annotatorId
      ? `?limit=${limit}&annotator_id=${encodeURIComponent(annotatorId)}`
      : `?limit=${limit}`;
    const resp = await this.fetchFn(this.url(`/api/queue${query}`));
    if (!resp.ok) throw new Error(`queue fetch failed: ${resp.status}`);
    const doc = (await resp.json()) as { items: QueueItem[] };
    return doc.items;
  }

  async submitLabel(label: LabelSubmission): Promise<SubmitOutcome> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.url("/api/labels"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(label),
      });
    } catch (err) {
      return { kind: "network", error: String(err) };
    }
    if (resp.status === 201) return { kind: "stored" };
    let message = `HTTP ${resp.status}`;
    try {
      const doc = (await resp.json()) as { error?: string };
      if (doc.error) message = doc.error;
    } catch {
      // keep the generic message
    }
    return { kind: "rejected", status: resp.status, error: message };
  }

  async resample(n: number): Promise<number> {
    const resp = await this.fetchFn(this.url("/api/sample"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ n }),
    });
    if (!resp.ok) throw new Error(`resample failed: ${resp.status}`);
    const doc = (await resp.json()) as { queue: number };
    return doc.queue;
  }

  /** 202 -> started; 409 -> a run is already in progress. */
  async retrain(): Promise<{ started: boolean; conflict: boolean; error?: string }> {
    const resp = await this.fetchFn(this.url("/api/retrain"), { method: "POST" });
    if (resp.status === 202) return { started: true, conflict: false };
    if (resp.status === 409) {
      const doc = (await resp.json()) as { error?: string };
      return { started: false, conflict: true, error: doc.error };
    }
    throw new Error(`retrain failed: ${resp.status}`);
  }

  async status(): Promise<StatusPayload> {
    const resp = await this.fetchFn(this.url("/api/status"));
    if (!resp.ok) throw new Error(`status fetch failed: ${resp.status}`);
    return (await resp.json()) as StatusPayload;
  }

  /** null when the service has no stats report (404). */
  async stats(): Promise<StatsPayload | null> {
    const resp = await this.fetchFn(this.url("/api/stats"));
    if (resp.status === 404) return null;
    if (!resp.ok) throw new Error(`stats fetch failed: ${resp.status}`);
    return (await resp.json()) as StatsPayload;
  }
}
