// Wire types mirroring the documented answer-service schemas. The console
// renders these as-is and never re-derives scores client-side.

export interface CitationSpan {
  pmid: string;
  start: number;
  end: number;
}

export interface HallucinatedId {
  pmid: string;
  nearest_context_pmid: string;
  digit_distance: number;
}

export interface Audit {
  distinct_cited: string[];
  valid: string[];
  hallucinated: HallucinatedId[];
  no_references: boolean;
  most_relevant_pmid: string | null;
  most_relevant_referenced: boolean | null;
}

export interface ContextEntry {
  rank: number;
  pmid: string;
  title: string;
  fused: number;
}

export interface AnswerResponse {
  schema_version: string;
  answer: string;
  truncated: boolean;
  citations: CitationSpan[];
  audit: Audit;
  context: ContextEntry[];
}

export interface SearchHitView {
  rank: number;
  pmid: string;
  title: string;
  norm_lex: number;
  norm_sem: number;
  fused: number;
}

export interface SearchResponse {
  schema_version: string;
  hits: SearchHitView[];
}

export interface AbstractResponse {
  schema_version: string;
  pmid: string;
  title: string;
  abstract: string;
  authors: string[];
  journal: string;
  pub_date: string | null;
}

export interface HealthResponse {
  schema_version: string;
  status: string;
  docs?: number;
}

export interface ServiceError {
  status: number;
  message: string;
  leg?: string;
}
