"""BM25 lexical retrieval: scoring, stopword handling, metadata filters.

Builds the inverted index over a synthetic corpus and shows that the
fast path agrees exactly with a naive full-scan scorer.
"""

from refmed.lexical import MetadataFilter, NaiveBM25Scorer, build_lexical_index
from refmed.synthetic import hybrid_fixture

docs, queries = hybrid_fixture(seed=2, n_docs=200, n_queries=20)
index = build_lexical_index(docs)
print(f"indexed {index.doc_count} documents, avgdl {index.avg_doc_length:.1f}, "
      f"{len(index.postings)} terms\n")

query = queries[0].text
print(f"query: {query}")
for hit in index.search(query, k=5):
    print(f"  {hit.doc_pmid}  bm25={hit.raw_score:.3f}")

print("\nstopword removal: query terms drop, the index keeps everything")
wordy = "what is the role of " + queries[2].text
with_stop = index.search(wordy, k=3, remove_stopwords=False)
without = index.search(wordy, k=3, remove_stopwords=True)
print(f"  with stopwords:    top = {[h.doc_pmid for h in with_stop]}")
print(f"  without stopwords: top = {[h.doc_pmid for h in without]}")

print("\nmetadata filter: journal must match exactly")
flt = MetadataFilter(journal="BMJ")
hits = index.search(query, k=5, flt=flt)
by_pmid = {d.pmid: d for d in docs}
for hit in hits:
    print(f"  {hit.doc_pmid}  {by_pmid[hit.doc_pmid].journal}")

print("\nfull-scan oracle agreement (same formula, no index):")
oracle = NaiveBM25Scorer(docs)
fast = [(h.doc_pmid, h.raw_score) for h in index.search(query, k=len(docs))]
print(f"  exact match on {len(fast)} scored documents:",
      fast == oracle.search(query))
