/**
 * Controller wiring: state transitions in response to user intent, one
 * in-flight query at a time, every change followed by a full re-render.
 */

import { ApiClient, ApiRequestError, type Strategy } from "./api.js";
import { renderApp, type Handlers } from "./render.js";
import {
  dismissBanner,
  initialState,
  recordFailure,
  recordQuery,
  type ConsoleState,
} from "./state.js";

export interface Console {
  state: ConsoleState;
  submit(keyword: string, strategy: string): Promise<void>;
  compare(docId: string): void;
  score(docId: string, reference: string): Promise<void>;
  dismiss(): void;
  refreshArticles(): Promise<void>;
}

function toApiError(error: unknown) {
  if (error instanceof ApiRequestError) {
    return error.payload;
  }
  return {
    code: "internal" as const,
    message: error instanceof Error ? error.message : String(error),
    detail: null,
  };
}

export function mountConsole(root: HTMLElement, client: ApiClient): Console {
  const state = initialState();

  const handlers: Handlers = {
    onSubmit: (keyword, strategy) => void controller.submit(keyword, strategy),
    onDismissBanner: () => controller.dismiss(),
    onCompare: (docId) => controller.compare(docId),
    onScore: (docId, reference) => void controller.score(docId, reference),
  };

  const render = () => renderApp(root, state, handlers);

  const controller: Console = {
    state,

    async submit(keyword: string, strategy: string): Promise<void> {
      const trimmed = keyword.trim();
      if (!trimmed) {
        state.validation = "Enter a keyword first.";
        render();
        return;
      }
      if (state.inFlight) {
        return;
      }
      state.inFlight = true;
      state.validation = null;
      render();
      try {
        const report = await client.query(trimmed, strategy as Strategy);
        recordQuery(state, report, trimmed, strategy as Strategy);
        state.articles = await client.articles();
      } catch (error) {
        recordFailure(state, toApiError(error));
      } finally {
        state.inFlight = false;
        render();
      }
    },

    compare(docId: string): void {
      state.compareDocId = docId;
      render();
    },

    async score(docId: string, reference: string): Promise<void> {
      if (!reference.trim()) {
        return;
      }
      try {
        state.metrics[docId] = await client.scoreAgainstReference(docId, reference);
      } catch (error) {
        recordFailure(state, toApiError(error));
      }
      render();
    },

    dismiss(): void {
      dismissBanner(state);
      render();
    },

    async refreshArticles(): Promise<void> {
      state.articles = await client.articles();
      render();
    },
  };

  render();
  return controller;
}

declare global {
  interface Window {
    ADVISOR_API_BASE?: string;
  }
}

// Browser entry point; tests mount explicitly instead.
if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    const client = new ApiClient(window.ADVISOR_API_BASE ?? "");
    const console_ = mountConsole(root, client);
    void console_.refreshArticles().catch(() => {
      // the panel stays empty until the API is reachable
    });
  }
}
