// The query console controller: one in-flight query per pane, stale
// responses discarded by sequence number, session history, and abstract
// lookups. DOM-free; a sink receives rendered HTML fragments.

import { ApiClient, ApiError } from "./api.js";
import {
  renderAbstractMissing,
  renderAbstractPane,
  renderAnswer,
  renderAuditSummary,
  renderContextPanel,
  renderError,
  renderHistory,
  renderLoading,
} from "./render.js";
import type { AnswerResponse } from "./types.js";

export interface ViewSink {
  answer(html: string): void;
  context(html: string): void;
  abstractPane(html: string): void;
  history(html: string): void;
  status(html: string): void;
}

export interface ConsoleState {
  wLex: number;
  wSem: number;
  k: number;
}

export class QueryConsole {
  private seq = 0;
  private lastRendered = 0;
  private historyEntries: string[] = [];
  lastQuestion: string | null = null;
  lastResponse: AnswerResponse | null = null;
  readonly state: ConsoleState = { wLex: 0.7, wSem: 0.3, k: 10 };

  constructor(private readonly api: ApiClient, private readonly sink: ViewSink) {}

  setWeights(wLex: number, wSem: number): void {
    this.state.wLex = wLex;
    this.state.wSem = wSem;
  }

  /** Fire a query; a response older than the newest rendered one is
   *  dropped (the sequence number is the arbiter, not arrival order). */
  async ask(question: string): Promise<void> {
    const trimmed = question.trim();
    if (!trimmed) {
      this.sink.status(renderError("Type a question first."));
      return;
    }
    const ticket = ++this.seq;
    this.sink.status(renderLoading(trimmed));
    try {
      const resp = await this.api.answer(
        trimmed,
        this.state.k,
        this.state.wLex,
        this.state.wSem
      );
      if (ticket <= this.lastRendered) return; // stale
      this.lastRendered = ticket;
      this.lastQuestion = trimmed;
      this.lastResponse = resp;
      if (!this.historyEntries.includes(trimmed)) {
        this.historyEntries.unshift(trimmed);
        this.historyEntries = this.historyEntries.slice(0, 20);
      }
      this.sink.status("");
      this.sink.answer(renderAnswer(resp) + renderAuditSummary(resp));
      this.sink.context(renderContextPanel(resp.context));
      this.sink.history(renderHistory(this.historyEntries));
    } catch (err) {
      if (ticket <= this.lastRendered) return;
      this.lastRendered = ticket;
      this.renderFailure(err);
    }
  }

  /** Re-query the current question, e.g. after a weight slider moved. */
  async requery(): Promise<void> {
    if (this.lastQuestion !== null) await this.ask(this.lastQuestion);
  }

  async openAbstract(pmid: string): Promise<void> {
    try {
      const doc = await this.api.abstract(pmid);
      this.sink.abstractPane(renderAbstractPane(doc));
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.sink.abstractPane(renderAbstractMissing(pmid));
        return;
      }
      this.renderFailure(err);
    }
  }

  get history(): readonly string[] {
    return this.historyEntries;
  }

  private renderFailure(err: unknown): void {
    if (err instanceof ApiError) {
      this.sink.status(renderError(err.message, err.leg));
    } else {
      this.sink.status(renderError(`The service is unreachable: ${String(err)}`));
    }
  }
}
