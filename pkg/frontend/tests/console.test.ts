import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { QueryConsole, ViewSink } from "../src/console.js";
import type { AnswerResponse } from "../src/types.js";

function makeSink() {
  const panes = { answer: "", context: "", abstractPane: "", history: "", status: "" };
  const sink: ViewSink = {
    answer: (h) => (panes.answer = h),
    context: (h) => (panes.context = h),
    abstractPane: (h) => (panes.abstractPane = h),
    history: (h) => (panes.history = h),
    status: (h) => (panes.status = h),
  };
  return { panes, sink };
}

function response(marker: string): AnswerResponse {
  return {
    schema_version: "1",
    answer: `${marker} (PUBMED:11).`,
    truncated: false,
    citations: [
      { pmid: "11", start: marker.length + 2, end: marker.length + 11 },
    ],
    audit: {
      distinct_cited: ["11"],
      valid: ["11"],
      hallucinated: [],
      no_references: false,
      most_relevant_pmid: null,
      most_relevant_referenced: null,
    },
    context: [{ rank: 1, pmid: "11", title: `${marker} title`, fused: 1.0 }],
  };
}

class FakeApi extends ApiClient {
  resolvers: Array<(r: AnswerResponse) => void> = [];
  calls: Array<{ question: string; wLex: number; wSem: number }> = [];

  constructor() {
    super("http://unused");
  }

  override answer(question: string, _k: number, wLex: number, wSem: number) {
    this.calls.push({ question, wLex, wSem });
    return new Promise<AnswerResponse>((resolve) => this.resolvers.push(resolve));
  }
}

describe("QueryConsole", () => {
  it("renders answer, context, and history after a query", async () => {
    const api = new FakeApi();
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(api, sink);
    const pending = console_.ask("what about aspirin");
    api.resolvers[0]!(response("Aspirin"));
    await pending;
    expect(panes.answer).toContain('data-pmid="11"');
    expect(panes.context).toContain("Aspirin title");
    expect(panes.history).toContain("what about aspirin");
    expect(console_.history).toEqual(["what about aspirin"]);
  });

  it("discards stale responses by sequence number", async () => {
    const api = new FakeApi();
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(api, sink);
    const first = console_.ask("first");
    const second = console_.ask("second");
    // Second query resolves before the first: the first is stale.
    api.resolvers[1]!(response("Second"));
    await second;
    api.resolvers[0]!(response("First"));
    await first;
    expect(panes.answer).toContain("Second");
    expect(panes.answer).not.toContain("First");
  });

  it("requery reuses the last question with the current weights", async () => {
    const api = new FakeApi();
    const { sink } = makeSink();
    const console_ = new QueryConsole(api, sink);
    const ask = console_.ask("q");
    api.resolvers[0]!(response("One"));
    await ask;
    console_.setWeights(0.0, 1.0);
    const again = console_.requery();
    api.resolvers[1]!(response("Two"));
    await again;
    expect(api.calls[1]).toEqual({ question: "q", wLex: 0.0, wSem: 1.0 });
  });

  it("renders service failures with the failing leg, never a blank pane", async () => {
    const api = new FakeApi();
    api.answer = () =>
      Promise.reject(new ApiError({ status: 502, message: "backend down", leg: "semantic" }));
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(api, sink);
    await console_.ask("anything");
    expect(panes.status).toContain("backend down");
    expect(panes.status).toContain("failing leg: semantic");
  });

  it("rejects blank questions locally", async () => {
    const api = new FakeApi();
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(api, sink);
    await console_.ask("   ");
    expect(api.calls.length).toBe(0);
    expect(panes.status).toContain("Type a question");
  });

  it("renders the 404 state for unknown abstracts", async () => {
    const api = new FakeApi();
    api.abstract = () =>
      Promise.reject(new ApiError({ status: 404, message: "unknown pmid 5" }));
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(api, sink);
    await console_.openAbstract("5");
    expect(panes.abstractPane).toContain("404");
  });
});
