/**
 * Typed client for the briefing engine's HTTP API.
 *
 * Every non-2xx response carries one error envelope; it is surfaced as an
 * ApiRequestError so callers can show the message without inspecting bodies.
 */

export interface ApiError {
  code: "bad_request" | "not_found" | "upstream_llm_error" | "conflict" | "internal";
  message: string;
  detail: unknown;
}

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly payload: ApiError,
  ) {
    super(payload.message);
    this.name = "ApiRequestError";
  }
}

export type Strategy = "binary" | "ranking";

export interface Decision {
  doc_id: string;
  keyword: string;
  decision: "YES" | "NO";
  raw_reply: string;
  strategy: Strategy;
}

export interface Insight {
  trend: string;
  financial_implication: string;
  risk_or_opportunity: string;
}

export interface InsightSet {
  keyword: string;
  insights: Insight[];
  source_doc_ids: string[];
}

export interface Report {
  report_id: string;
  keyword: string;
  strategy: Strategy;
  decisions: Decision[];
  insights: InsightSet;
  actions: string[];
  action_retries: number;
  created_at: string;
  rendered_text?: string;
}

export interface ArticleRow {
  doc_id: string;
  source_file: string | null;
  title_excerpt: string;
  initial_summary: string | null;
  enhanced_summary: string | null;
  metadata: Record<string, unknown> | null;
}

export interface MetricRow {
  pair_id: string;
  system: "enhanced" | "baseline";
  bleu: number;
  rouge_l_p: number;
  rouge_l_r: number;
  rouge_l_f: number;
}

interface EvalPayload {
  summary_quality: { rows: MetricRow[] } | null;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    const body = (await response.json()) as unknown;
    if (!response.ok) {
      throw new ApiRequestError(response.status, body as ApiError);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  query(keyword: string, strategy: Strategy): Promise<Report> {
    return this.post<Report>("/query", { keyword, strategy });
  }

  async articles(): Promise<ArticleRow[]> {
    const body = await this.request<{ articles: ArticleRow[] }>("/articles");
    return body.articles;
  }

  /** Score a stored document's summaries against a reference text. */
  async scoreAgainstReference(docId: string, reference: string): Promise<MetricRow[]> {
    const body = await this.post<EvalPayload>("/eval", {
      summary_pairs: [{ doc_id: docId, reference }],
    });
    return body.summary_quality?.rows ?? [];
  }
}
