// Browser bootstrap: wires the DOM to the controller. Clicks on citation
// chips, context rows, and history rows are handled by delegation on
// data-* attributes, so rendered HTML stays inert strings until mounted.

import { ApiClient } from "./api.js";
import { QueryConsole, ViewSink } from "./console.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function apiBase(): string {
  const params = new URLSearchParams(window.location.search);
  return (
    params.get("api") ??
    localStorage.getItem("refmed.apiBase") ??
    ""
  );
}

function main(): void {
  const answerPane = el<HTMLDivElement>("answer");
  const contextPane = el<HTMLDivElement>("context");
  const abstractPane = el<HTMLDivElement>("abstract");
  const historyPane = el<HTMLDivElement>("history");
  const statusPane = el<HTMLDivElement>("status");
  const questionInput = el<HTMLInputElement>("question");
  const askButton = el<HTMLButtonElement>("ask");
  const lexSlider = el<HTMLInputElement>("w-lex");
  const semSlider = el<HTMLInputElement>("w-sem");
  const lexLabel = el<HTMLSpanElement>("w-lex-value");
  const semLabel = el<HTMLSpanElement>("w-sem-value");

  const sink: ViewSink = {
    answer: (html) => (answerPane.innerHTML = html),
    context: (html) => (contextPane.innerHTML = html),
    abstractPane: (html) => (abstractPane.innerHTML = html),
    history: (html) => (historyPane.innerHTML = html),
    status: (html) => (statusPane.innerHTML = html),
  };
  const api = new ApiClient(apiBase());
  const console_ = new QueryConsole(api, sink);

  const syncWeights = () => {
    const wLex = Number(lexSlider.value);
    const wSem = Number(semSlider.value);
    lexLabel.textContent = wLex.toFixed(1);
    semLabel.textContent = wSem.toFixed(1);
    console_.setWeights(wLex, wSem);
  };
  syncWeights();

  askButton.addEventListener("click", () => void console_.ask(questionInput.value));
  questionInput.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") void console_.ask(questionInput.value);
  });
  for (const slider of [lexSlider, semSlider]) {
    slider.addEventListener("change", () => {
      syncWeights();
      void console_.requery();
    });
    slider.addEventListener("input", syncWeights);
  }

  document.body.addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest<HTMLElement>("[data-pmid]");
    if (target?.dataset.pmid) {
      void console_.openAbstract(target.dataset.pmid);
      return;
    }
    const history = (ev.target as HTMLElement).closest<HTMLElement>("[data-question]");
    if (history?.dataset.question) {
      questionInput.value = history.dataset.question;
      void console_.ask(history.dataset.question);
    }
  });

  void api
    .health()
    .then((h) => {
      statusPane.innerHTML = `<p class="notice">Connected · ${h.docs ?? "?"} documents indexed.</p>`;
    })
    .catch(() => {
      statusPane.innerHTML =
        '<div class="error"><p>The answer service is not reachable. ' +
        "Append ?api=http://host:port to point the console at it.</p></div>";
    });
}

document.addEventListener("DOMContentLoaded", main);
