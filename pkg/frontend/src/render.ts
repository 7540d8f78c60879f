// Pure rendering: state in, HTML string out. Citation chips are placed at
// the span offsets returned by the API; the answer text is never re-parsed
// here. Keeping these functions DOM-free makes them directly testable.

import type {
  AbstractResponse,
  AnswerResponse,
  ContextEntry,
  HallucinatedId,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function chipTooltip(pmid: string, valid: boolean, hallucinated: HallucinatedId[]): string {
  if (valid) return `PUBMED:${pmid} is in the retrieved context`;
  const info = hallucinated.find((h) => h.pmid === pmid);
  if (!info) return `PUBMED:${pmid} is not in the retrieved context`;
  return (
    `PUBMED:${pmid} is not in the retrieved context; ` +
    `nearest context id PUBMED:${info.nearest_context_pmid} ` +
    `(digit distance ${info.digit_distance})`
  );
}

/** The answer text with an inline, clickable chip per citation span.
 *  Chip class encodes the audit verdict; hallucinated chips carry a
 *  nearest-id tooltip. */
export function renderAnswer(resp: AnswerResponse): string {
  const valid = new Set(resp.audit.valid);
  const parts: string[] = [];
  let cursor = 0;
  for (const span of resp.citations) {
    parts.push(escapeHtml(resp.answer.slice(cursor, span.start)));
    const isValid = valid.has(span.pmid);
    const cls = isValid ? "chip chip-valid" : "chip chip-hallucinated";
    const tooltip = chipTooltip(span.pmid, isValid, resp.audit.hallucinated);
    parts.push(
      `<button class="${cls}" data-pmid="${escapeHtml(span.pmid)}" ` +
        `title="${escapeHtml(tooltip)}">` +
        escapeHtml(resp.answer.slice(span.start, span.end)) +
        `</button>`
    );
    cursor = span.end;
  }
  parts.push(escapeHtml(resp.answer.slice(cursor)));
  const truncated = resp.truncated
    ? `<p class="notice">The model stopped mid-sentence; the incomplete tail was removed.</p>`
    : "";
  return `<div class="answer-text">${parts.join("")}</div>${truncated}`;
}

export function renderAuditSummary(resp: AnswerResponse): string {
  const a = resp.audit;
  const bits = [
    `${a.valid.length} valid`,
    `${a.hallucinated.length} hallucinated`,
  ];
  if (a.no_references) bits.push("no references");
  if (a.most_relevant_pmid !== null) {
    bits.push(
      a.most_relevant_referenced
        ? `most relevant abstract (PUBMED:${a.most_relevant_pmid}) cited`
        : `most relevant abstract (PUBMED:${a.most_relevant_pmid}) missed`
    );
  }
  return `<p class="audit-summary">${escapeHtml(bits.join(" · "))}</p>`;
}

/** Side panel: the retrieved abstracts with rank and fused score, each row
 *  clickable through the same data-pmid delegation as chips. */
export function renderContextPanel(context: ContextEntry[]): string {
  if (context.length === 0) return `<p class="notice">No documents retrieved.</p>`;
  const rows = context
    .map(
      (c) =>
        `<li><button class="context-row" data-pmid="${escapeHtml(c.pmid)}">` +
        `<span class="rank">${c.rank}</span>` +
        `<span class="title">${escapeHtml(c.title)}</span>` +
        `<span class="score">${c.fused.toFixed(3)}</span>` +
        `<span class="pmid">PUBMED:${escapeHtml(c.pmid)}</span>` +
        `</button></li>`
    )
    .join("");
  return `<ol class="context-list">${rows}</ol>`;
}

export function renderAbstractPane(doc: AbstractResponse): string {
  const meta = [doc.journal, doc.pub_date ?? "", doc.authors.join(", ")]
    .filter(Boolean)
    .map(escapeHtml)
    .join(" · ");
  return (
    `<article class="abstract-pane" data-pmid="${escapeHtml(doc.pmid)}">` +
    `<h3>${escapeHtml(doc.title)}</h3>` +
    `<p class="meta">PUBMED:${escapeHtml(doc.pmid)}${meta ? " · " + meta : ""}</p>` +
    `<p>${escapeHtml(doc.abstract)}</p>` +
    `</article>`
  );
}

export function renderAbstractMissing(pmid: string): string {
  return (
    `<article class="abstract-pane abstract-missing">` +
    `<h3>PUBMED:${escapeHtml(pmid)}</h3>` +
    `<p class="notice">This id does not resolve to a stored abstract (404).</p>` +
    `</article>`
  );
}

/** Errors always render something; a blank screen is never acceptable. */
export function renderError(message: string, leg?: string): string {
  const legLine = leg ? `<p class="error-leg">failing leg: ${escapeHtml(leg)}</p>` : "";
  return `<div class="error"><p>${escapeHtml(message)}</p>${legLine}</div>`;
}

export function renderHistory(entries: string[]): string {
  if (entries.length === 0) return "";
  const items = entries
    .map((q) => `<li><button class="history-row" data-question="${escapeHtml(q)}">${escapeHtml(q)}</button></li>`)
    .join("");
  return `<ul class="history-list">${items}</ul>`;
}

export function renderLoading(question: string): string {
  return `<p class="notice">Searching and answering: ${escapeHtml(question)}…</p>`;
}
