/**
 * Session state for the console. The article panel is always derived from
 * the last report so decision badges can never drift from what the server
 * returned, and history is append-only within a session.
 */

import type { ApiError, ArticleRow, MetricRow, Report, Strategy } from "./api.js";

export interface HistoryEntry {
  keyword: string;
  strategy: Strategy;
  at: string;
}

export interface PanelRow {
  docId: string;
  titleExcerpt: string;
  decision: "YES" | "NO" | null;
}

export interface ConsoleState {
  currentKeyword: string;
  strategy: Strategy;
  lastReport: Report | null;
  articles: ArticleRow[];
  history: HistoryEntry[];
  banner: ApiError | null;
  validation: string | null;
  inFlight: boolean;
  compareDocId: string | null;
  metrics: Record<string, MetricRow[]>;
}

export function initialState(): ConsoleState {
  return {
    currentKeyword: "",
    strategy: "binary",
    lastReport: null,
    articles: [],
    history: [],
    banner: null,
    validation: null,
    inFlight: false,
    compareDocId: null,
    metrics: {},
  };
}

/** Panel rows mirror last_report.decisions exactly; unjudged docs get no badge. */
export function articlePanel(state: ConsoleState): PanelRow[] {
  const decisions = new Map<string, "YES" | "NO">();
  for (const d of state.lastReport?.decisions ?? []) {
    decisions.set(d.doc_id, d.decision);
  }
  return state.articles.map((a) => ({
    docId: a.doc_id,
    titleExcerpt: a.title_excerpt,
    decision: decisions.get(a.doc_id) ?? null,
  }));
}

export function recordQuery(
  state: ConsoleState,
  report: Report,
  keyword: string,
  strategy: Strategy,
): void {
  state.lastReport = report;
  state.currentKeyword = keyword;
  state.strategy = strategy;
  state.banner = null;
  state.validation = null;
  state.history.push({ keyword, strategy, at: new Date().toISOString() });
}

/** A failed query keeps the prior view; only the banner changes. */
export function recordFailure(state: ConsoleState, error: ApiError): void {
  state.banner = error;
}

export function dismissBanner(state: ConsoleState): void {
  state.banner = null;
}
