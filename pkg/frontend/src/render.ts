/**
 * DOM rendering. The whole view is rebuilt from ConsoleState on every
 * change; elements carry data-testid hooks so behavior tests stay
 * independent of styling.
 */

import type { ArticleRow, MetricRow } from "./api.js";
import { articlePanel, type ConsoleState } from "./state.js";

export interface Handlers {
  onSubmit(keyword: string, strategy: string): void;
  onDismissBanner(): void;
  onCompare(docId: string): void;
  onScore(docId: string, reference: string): void;
}

function el(
  tag: string,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderForm(state: ConsoleState, handlers: Handlers): HTMLElement {
  const form = el("form", { "data-testid": "keyword-form", class: "keyword-form" });
  const input = el("input", {
    "data-testid": "keyword-input",
    name: "keyword",
    placeholder: "Keyword, e.g. AI",
    value: state.currentKeyword,
  }) as HTMLInputElement;

  const select = el("select", { "data-testid": "strategy-select", name: "strategy" });
  for (const strategy of ["binary", "ranking"]) {
    const option = el("option", { value: strategy }, strategy) as HTMLOptionElement;
    option.selected = strategy === state.strategy;
    select.appendChild(option);
  }

  const button = el(
    "button",
    { "data-testid": "submit-button", type: "submit" },
    state.inFlight ? "Working..." : "Brief me",
  ) as HTMLButtonElement;
  button.disabled = state.inFlight;

  form.append(input, select, button);
  if (state.validation) {
    form.appendChild(
      el("span", { "data-testid": "validation", class: "validation" }, state.validation),
    );
  }
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.onSubmit(input.value, (select as HTMLSelectElement).value);
  });
  return form;
}

function renderBanner(state: ConsoleState, handlers: Handlers): HTMLElement | null {
  if (!state.banner) {
    return null;
  }
  const banner = el("div", { "data-testid": "error-banner", class: "banner" });
  banner.appendChild(
    el("span", {}, `${state.banner.code}: ${state.banner.message}`),
  );
  const dismiss = el(
    "button",
    { "data-testid": "banner-dismiss", type: "button" },
    "Dismiss",
  );
  dismiss.addEventListener("click", () => handlers.onDismissBanner());
  banner.appendChild(dismiss);
  return banner;
}

function renderReport(state: ConsoleState): HTMLElement | null {
  const report = state.lastReport;
  if (!report) {
    return null;
  }
  const section = el("section", { "data-testid": "report" });
  section.appendChild(
    el("h2", {}, `Briefing for "${report.keyword}" (${report.strategy})`),
  );

  const insights = el("div", { "data-testid": "insights" });
  for (const insight of report.insights.insights) {
    const card = el("div", { "data-testid": "insight", class: "insight" });
    card.appendChild(el("p", { "data-testid": "insight-trend" }, insight.trend));
    card.appendChild(
      el(
        "p",
        { "data-testid": "insight-implication" },
        insight.financial_implication,
      ),
    );
    card.appendChild(
      el("p", { "data-testid": "insight-risk" }, insight.risk_or_opportunity),
    );
    insights.appendChild(card);
  }
  section.appendChild(insights);

  const actions = el("ol", { "data-testid": "actions" });
  report.actions.forEach((action, i) => {
    actions.appendChild(
      el("li", { "data-testid": "action-card", class: "action" }, `${i + 1}. ${action}`),
    );
  });
  section.appendChild(actions);
  return section;
}

function renderArticles(state: ConsoleState, handlers: Handlers): HTMLElement {
  const panel = el("section", { "data-testid": "article-panel" });
  for (const row of articlePanel(state)) {
    const item = el("div", { "data-testid": "article-row", class: "article" });
    if (row.decision) {
      item.appendChild(
        el(
          "span",
          {
            "data-testid": "decision-badge",
            "data-decision": row.decision,
            class: `badge ${row.decision.toLowerCase()}`,
          },
          row.decision,
        ),
      );
    }
    item.appendChild(el("span", { class: "excerpt" }, row.titleExcerpt));
    const compare = el(
      "button",
      { "data-testid": "compare-button", type: "button" },
      "Compare",
    );
    compare.addEventListener("click", () => handlers.onCompare(row.docId));
    item.appendChild(compare);
    panel.appendChild(item);
  }
  return panel;
}

function metricChips(rows: MetricRow[]): HTMLElement {
  const chips = el("div", { "data-testid": "metric-chips" });
  for (const row of rows) {
    chips.appendChild(
      el(
        "span",
        { "data-testid": "metric-chip", "data-system": row.system, class: "chip" },
        `${row.system} BLEU ${row.bleu.toFixed(4)} / ROUGE-L ${row.rouge_l_f.toFixed(4)}`,
      ),
    );
  }
  return chips;
}

function renderCompare(state: ConsoleState, handlers: Handlers): HTMLElement | null {
  if (!state.compareDocId) {
    return null;
  }
  const article = state.articles.find((a) => a.doc_id === state.compareDocId);
  if (!article) {
    return null;
  }
  const panel = el("section", { "data-testid": "compare" });
  panel.appendChild(el("h3", {}, `Summary comparison: ${article.title_excerpt}`));

  const columns = el("div", { class: "columns" });
  columns.appendChild(column("Enhanced", article.enhanced_summary ?? ""));
  if (article.initial_summary) {
    columns.appendChild(column("Baseline", article.initial_summary));
  } else {
    panel.appendChild(
      el(
        "p",
        { "data-testid": "compare-notice" },
        "No baseline summary stored for this document.",
      ),
    );
  }
  panel.appendChild(columns);

  const rows = state.metrics[article.doc_id];
  if (rows && rows.length > 0) {
    panel.appendChild(metricChips(rows));
  }

  const form = el("form", { "data-testid": "score-form" });
  const reference = el("input", {
    "data-testid": "reference-input",
    name: "reference",
    placeholder: "Paste a reference summary to score",
  }) as HTMLInputElement;
  const score = el("button", { type: "submit" }, "Score");
  form.append(reference, score);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.onScore(article.doc_id, reference.value);
  });
  panel.appendChild(form);
  return panel;
}

function column(label: string, text: string): HTMLElement {
  const node = el("div", { "data-testid": "compare-column", class: "column" });
  node.appendChild(el("h4", {}, label));
  node.appendChild(el("p", {}, text));
  return node;
}

function renderHistory(state: ConsoleState): HTMLElement {
  const list = el("ul", { "data-testid": "history" });
  for (const entry of state.history) {
    list.appendChild(
      el(
        "li",
        { "data-testid": "history-entry" },
        `${entry.keyword} (${entry.strategy})`,
      ),
    );
  }
  return list;
}

export function renderApp(
  root: HTMLElement,
  state: ConsoleState,
  handlers: Handlers,
): void {
  root.replaceChildren();
  const pieces = [
    renderForm(state, handlers),
    renderBanner(state, handlers),
    renderReport(state),
    renderArticles(state, handlers),
    renderCompare(state, handlers),
    renderHistory(state),
  ];
  for (const piece of pieces) {
    if (piece) {
      root.appendChild(piece);
    }
  }
}
