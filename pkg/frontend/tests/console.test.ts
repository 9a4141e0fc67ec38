import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, type ArticleRow, type Report } from "../src/api.js";
import { mountConsole, type Console } from "../src/main.js";

const REPORT: Report = {
  report_id: "ai-binary-001",
  keyword: "ai",
  strategy: "binary",
  decisions: [
    { doc_id: "d1", keyword: "ai", decision: "YES", raw_reply: "YES", strategy: "binary" },
    { doc_id: "d2", keyword: "ai", decision: "YES", raw_reply: "Yes:", strategy: "binary" },
    { doc_id: "d3", keyword: "ai", decision: "NO", raw_reply: "NO", strategy: "binary" },
    { doc_id: "d4", keyword: "ai", decision: "NO", raw_reply: "NO", strategy: "binary" },
  ],
  insights: {
    keyword: "ai",
    insights: [
      {
        trend: "AI infrastructure spending keeps accelerating.",
        financial_implication: "Suppliers gain pricing power.",
        risk_or_opportunity: "Opportunity: capacity providers beat estimates.",
      },
    ],
    source_doc_ids: ["d1", "d2"],
  },
  actions: [
    "Increase exposure to AI chip suppliers.",
    "Add datacenter REITs with AI training leases.",
    "Trim consumer staples to fund the shift.",
  ],
  action_retries: 0,
  created_at: "2026-01-01T00:00:00+00:00",
};

const ARTICLES: ArticleRow[] = [
  { doc_id: "d1", source_file: "chipco.txt", title_excerpt: "ChipCo lifted quarterly GPU", initial_summary: "ChipCo shipped more GPUs.", enhanced_summary: "ChipCo grew GPU shipments 40%.", metadata: {} },
  { doc_id: "d2", source_file: "datareit.txt", title_excerpt: "DataREIT signed leases", initial_summary: "DataREIT signed leases.", enhanced_summary: "DataREIT signed $450M of leases.", metadata: {} },
  { doc_id: "d3", source_file: "grain.txt", title_excerpt: "Wheat futures fell", initial_summary: "Wheat fell.", enhanced_summary: "Wheat futures dropped 6%.", metadata: {} },
  { doc_id: "d4", source_file: "threadco.txt", title_excerpt: "ThreadCo cut guidance", initial_summary: null, enhanced_summary: "ThreadCo cut guidance on markdowns.", metadata: {} },
];

type Responder = (init?: RequestInit) => Promise<{ status: number; body: unknown }>;

function stubFetch(routes: Record<string, Responder>) {
  const fn = vi.fn(async (url: string, init?: RequestInit) => {
    const route = routes[url];
    if (!route) {
      throw new Error(`unstubbed fetch: ${url}`);
    }
    const { status, body } = await route(init);
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    } as Response;
  });
  vi.stubGlobal("fetch", fn);
  return fn;
}

const okRoutes: Record<string, Responder> = {
  "/query": async () => ({ status: 200, body: REPORT }),
  "/articles": async () => ({ status: 200, body: { articles: ARTICLES } }),
};

function testids(id: string): HTMLElement[] {
  return Array.from(document.querySelectorAll(`[data-testid="${id}"]`));
}

describe("advisor console", () => {
  let root: HTMLElement;
  let console_: Console;

  beforeEach(() => {
    root = document.createElement("div");
    document.body.appendChild(root);
  });

  afterEach(() => {
    document.body.replaceChildren();
    vi.unstubAllGlobals();
  });

  it("renders badges, insight triples, and exactly three action cards", async () => {
    const fetchStub = stubFetch(okRoutes);
    console_ = mountConsole(root, new ApiClient());

    await console_.submit("AI", "binary");

    expect(fetchStub).toHaveBeenCalledWith(
      "/query",
      expect.objectContaining({ method: "POST" }),
    );
    const yes = testids("decision-badge").filter(
      (b) => b.getAttribute("data-decision") === "YES",
    );
    expect(yes).toHaveLength(2);
    expect(testids("action-card")).toHaveLength(3);
    expect(testids("insight-trend")[0]?.textContent).toContain(
      "AI infrastructure spending",
    );
    expect(testids("insight-implication")).toHaveLength(1);
    expect(testids("insight-risk")).toHaveLength(1);
    expect(testids("history-entry")).toHaveLength(1);
  });

  it("submits through the form and mirrors every decision in the panel", async () => {
    stubFetch(okRoutes);
    console_ = mountConsole(root, new ApiClient());

    const input = testids("keyword-input")[0] as HTMLInputElement;
    input.value = "AI";
    testids("keyword-form")[0]?.dispatchEvent(new Event("submit"));
    await vi.waitFor(() => expect(testids("report")).toHaveLength(1));

    const badges = testids("decision-badge");
    expect(badges).toHaveLength(4);
    expect(badges.map((b) => b.getAttribute("data-decision"))).toEqual([
      "YES",
      "YES",
      "NO",
      "NO",
    ]);
  });

  it("validates an empty keyword inline without any network call", async () => {
    const fetchStub = stubFetch(okRoutes);
    console_ = mountConsole(root, new ApiClient());

    await console_.submit("   ", "binary");

    expect(fetchStub).not.toHaveBeenCalled();
    expect(testids("validation")).toHaveLength(1);
    expect(testids("report")).toHaveLength(0);
  });

  it("keeps the prior view intact behind a dismissible banner on a 502", async () => {
    let fail = false;
    stubFetch({
      ...okRoutes,
      "/query": async () =>
        fail
          ? {
              status: 502,
              body: {
                code: "upstream_llm_error",
                message: "model endpoint unreachable",
                detail: null,
              },
            }
          : { status: 200, body: REPORT },
    });
    console_ = mountConsole(root, new ApiClient());

    await console_.submit("AI", "binary");
    fail = true;
    await console_.submit("rates", "binary");

    const banner = testids("error-banner");
    expect(banner).toHaveLength(1);
    expect(banner[0]?.textContent).toContain("model endpoint unreachable");
    // the previous report is still on screen
    expect(testids("action-card")).toHaveLength(3);
    expect(console_.state.lastReport?.report_id).toBe("ai-binary-001");

    (testids("banner-dismiss")[0] as HTMLButtonElement).click();
    expect(testids("error-banner")).toHaveLength(0);
    expect(testids("action-card")).toHaveLength(3);
  });

  it("disables the submit control while a query is in flight", async () => {
    let release: (value: { status: number; body: unknown }) => void = () => {};
    const gate = new Promise<{ status: number; body: unknown }>((resolve) => {
      release = resolve;
    });
    stubFetch({ ...okRoutes, "/query": () => gate });
    console_ = mountConsole(root, new ApiClient());

    const pending = console_.submit("AI", "binary");
    await Promise.resolve();
    expect(
      (testids("submit-button")[0] as HTMLButtonElement).disabled,
    ).toBe(true);

    release({ status: 200, body: REPORT });
    await pending;
    expect(
      (testids("submit-button")[0] as HTMLButtonElement).disabled,
    ).toBe(false);
  });

  it("renders a two-column comparison when both summaries exist", async () => {
    stubFetch(okRoutes);
    console_ = mountConsole(root, new ApiClient());
    await console_.submit("AI", "binary");

    console_.compare("d1");

    expect(testids("compare-column")).toHaveLength(2);
    expect(testids("compare-notice")).toHaveLength(0);
    expect(testids("compare")[0]?.textContent).toContain("ChipCo grew GPU shipments");
  });

  it("falls back to one column with a notice when the baseline is missing", async () => {
    stubFetch(okRoutes);
    console_ = mountConsole(root, new ApiClient());
    await console_.submit("AI", "binary");

    console_.compare("d4");

    expect(testids("compare-column")).toHaveLength(1);
    expect(testids("compare-notice")).toHaveLength(1);
  });

  it("shows metric chips with the stored scores after an evaluation", async () => {
    stubFetch({
      ...okRoutes,
      "/eval": async () => ({
        status: 200,
        body: {
          summary_quality: {
            rows: [
              { pair_id: "d1", system: "enhanced", bleu: 0.1786, rouge_l_p: 0.4, rouge_l_r: 0.41, rouge_l_f: 0.4028 },
              { pair_id: "d1", system: "baseline", bleu: 0.0487, rouge_l_p: 0.2, rouge_l_r: 0.22, rouge_l_f: 0.2123 },
            ],
          },
        },
      }),
    });
    console_ = mountConsole(root, new ApiClient());
    await console_.submit("AI", "binary");
    console_.compare("d1");

    await console_.score("d1", "analyst reference text");

    const chips = testids("metric-chip");
    expect(chips).toHaveLength(2);
    expect(chips[0]?.textContent).toContain("0.4028");
    expect(chips[1]?.textContent).toContain("0.2123");
  });
});
