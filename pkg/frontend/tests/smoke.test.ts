// Console smoke tests against the real stub-backed answer service: the
// Python engine is built and served in a child process, and the console
// controller drives it over actual HTTP.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { QueryConsole, ViewSink } from "../src/console.js";

const python = spawnSync("python3", ["-c", "import refmed"], { encoding: "utf-8" });
const havePython = python.status === 0;

interface SetupMeta {
  config: string;
  clean_question: string;
  clean_citations: string[];
  bad_question: string;
  bad_valid: string;
  bad_hallucinated: string;
}

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

describe.skipIf(!havePython)("console against the stub-backed service", () => {
  const port = 18100 + (process.pid % 1800);
  const base = `http://127.0.0.1:${port}`;
  let server: ChildProcess | undefined;
  let meta: SetupMeta;

  beforeAll(async () => {
    const workdir = mkdtempSync(join(tmpdir(), "refmed-smoke-"));
    const setup = spawnSync(
      "python3",
      [join(__dirname, "..", "scripts", "setup_service.py"), workdir],
      { encoding: "utf-8" }
    );
    if (setup.status !== 0) {
      throw new Error(`service setup failed:\n${setup.stderr}`);
    }
    meta = JSON.parse(setup.stdout.trim().split("\n").pop()!) as SetupMeta;

    server = spawn(
      "python3",
      ["-m", "refmed.cli", "serve", "--config", meta.config, "--bind", `127.0.0.1:${port}`],
      { stdio: ["ignore", "pipe", "pipe"] }
    );
    const deadline = Date.now() + 120_000;
    for (;;) {
      try {
        const resp = await fetch(`${base}/healthz`);
        if (resp.ok) break;
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 300));
    }
  });

  afterAll(() => {
    server?.kill("SIGTERM");
  });

  it("renders an answer with a clickable chip for every citation", async () => {
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(new ApiClient(base), sink);
    await console_.ask(meta.clean_question);
    for (const pmid of meta.clean_citations) {
      expect(panes.answer).toContain(`data-pmid="${pmid}"`);
    }
    const chipCount = panes.answer.match(/class="chip /g)?.length ?? 0;
    expect(chipCount).toBe(meta.clean_citations.length);
    expect(panes.answer).not.toContain("chip-hallucinated");
    expect(panes.context.match(/context-row/g)?.length).toBe(10);
  });

  it("flags a hallucinated citation with a nearest-id tooltip", async () => {
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(new ApiClient(base), sink);
    await console_.ask(meta.bad_question);
    expect(panes.answer).toContain(
      `chip chip-hallucinated" data-pmid="${meta.bad_hallucinated}"`
    );
    expect(panes.answer).toContain(`chip chip-valid" data-pmid="${meta.bad_valid}"`);
    // Tooltip carries the nearest context id and the digit distance.
    expect(panes.answer).toMatch(/nearest context id PUBMED:\d+/);
    expect(panes.answer).toContain("digit distance 1");
  });

  it("re-queries on weight change and the context panel changes", async () => {
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(new ApiClient(base), sink);
    console_.setWeights(1.0, 0.0);
    await console_.ask(meta.clean_question);
    const lexicalPanel = panes.context;
    console_.setWeights(0.0, 1.0);
    await console_.requery();
    expect(panes.context).not.toBe("");
    expect(panes.context).not.toEqual(lexicalPanel);
  });

  it("clicking a chip resolves the abstract; unknown ids show a 404 state", async () => {
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(new ApiClient(base), sink);
    await console_.ask(meta.clean_question);
    await console_.openAbstract(meta.clean_citations[0]!);
    expect(panes.abstractPane).toContain(`data-pmid="${meta.clean_citations[0]}"`);
    expect(panes.abstractPane).toContain("<h3>");
    await console_.openAbstract("999999999");
    expect(panes.abstractPane).toContain("404");
  });

  it("session history accumulates and keeps prior questions clickable", async () => {
    const { panes, sink } = makeSink();
    const console_ = new QueryConsole(new ApiClient(base), sink);
    await console_.ask(meta.clean_question);
    await console_.ask(meta.bad_question);
    expect(console_.history.length).toBe(2);
    expect(panes.history).toContain(`data-question="${meta.clean_question}"`);
  });
});
