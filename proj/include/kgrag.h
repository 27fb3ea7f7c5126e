/* C interface to the retrieval engine: build and load two-layer document/
 * knowledge-graph indexes, run single-pass retrieval, generate answers, and
 * score QA benchmarks.
 *
 * Conventions:
 *  - Functions return kgrag_status_t; KGRAG_OK is 0. On failure,
 *    kgrag_last_error() describes what went wrong (thread-local, valid until
 *    the next failing call on the same thread).
 *  - Output strings (char**) are malloc'd UTF-8; release them with
 *    kgrag_string_free(). Structured results are JSON documents.
 *  - Handles are opaque; destroy them with their _destroy function. A handle
 *    is never returned on failure.
 *  - Warnings (extraction hiccups, provider identity mismatches, unscored
 *    items) go to stderr.
 */

#ifndef KGRAG_H
#define KGRAG_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kgrag_status {
  KGRAG_OK = 0,
  KGRAG_INVALID_ARGUMENT = 1,
  KGRAG_IO = 2,
  KGRAG_PARSE = 3,
  KGRAG_PROVIDER = 4,
  KGRAG_VERSION_MISMATCH = 5,
  KGRAG_CORRUPT = 6,
  KGRAG_INTERNAL = 7
} kgrag_status_t;

typedef struct kgrag_index kgrag_index_t;
typedef struct kgrag_providers kgrag_providers_t;

/* Library version, static storage. */
const char* kgrag_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* kgrag_last_error(void);

void kgrag_string_free(char* s);

/* Deterministic offline providers: seeded mock embeddings (64 dims) plus a
 * completion mock that echoes the last nonempty prompt line. */
kgrag_status_t kgrag_providers_create_mock(uint64_t seed, kgrag_providers_t** out);

/* Providers from a JSON config:
 *   {"embedding":  {"kind": "mock", "dim": 64, "seed": 0}
 *               |  {"kind": "openai", "base_url": "...", "model": "...",
 *                   "api_key_env": "...", "timeout_seconds": 30,
 *                   "max_in_flight": 4, "batch_size": 32, "retries": 3},
 *    "completion": {"kind": "mock",
 *                   "mode": "echo_last_line" | "canned" | "scripted",
 *                   "reply": "...",                      (canned)
 *                   "replies": [{"match": "...", "reply": "..."}],
 *                   "fallback": "echo_last_line" | "canned",
 *                   "fallback_reply": "..."}             (scripted)
 *               |  {"kind": "openai", ...as above...}}
 * Missing sections fall back to the mocks. When has_seed_override is nonzero,
 * seed_override replaces any "seed" in the document. */
kgrag_status_t kgrag_providers_create_from_config(const char* config_json,
                                                  int has_seed_override,
                                                  uint64_t seed_override,
                                                  kgrag_providers_t** out);

void kgrag_providers_destroy(kgrag_providers_t* providers);

/* Build an index from a JSONL corpus ({"id", "text", "title"?} per line) and
 * persist it into out_dir. k is the per-document neighbor count;
 * template_language is "english" or "chinese"; embed_title prepends titles to
 * the embedded text. Extraction results are cached in out_dir, so rebuilding
 * an unchanged corpus makes no completion calls. out_stats_json (optional)
 * receives {"documents", "edges", "entities", "triples", "cache", "accounting"}. */
kgrag_status_t kgrag_index_build(const char* corpus_path, const char* out_dir, uint64_t k,
                                 int embed_title, const char* template_language,
                                 kgrag_providers_t* providers, char** out_stats_json);

kgrag_status_t kgrag_index_load(const char* dir, kgrag_index_t** out);

void kgrag_index_destroy(kgrag_index_t* index);

/* Manifest and size summary of a loaded index. */
kgrag_status_t kgrag_index_stats(const kgrag_index_t* index, char** out_json);

/* Single-pass retrieval: one embedding call, no completion calls.
 * params_json (optional, NULL for defaults) accepts
 *   {"n": 3, "t": 20, "lambda": 0.1,
 *    "strategy": "one-hop" | "attentive" | "multi-hop", "hops": 2}.
 * out_context_json receives {"query", "triples": [{"h","r","t","score",
 * "source_doc"}], "candidates": [{"doc_id","w"}], "accounting":
 * {"embed_calls","completion_calls","wall_ms"}}. */
kgrag_status_t kgrag_query(const kgrag_index_t* index, kgrag_providers_t* providers,
                           const char* question, const char* params_json,
                           char** out_context_json);

/* Retrieval plus answer generation (adds exactly one completion call).
 * style is "short" or "long"; prompt_template (optional) is a text template
 * with {{triples}} and {{question}} placeholders. Both outputs are optional. */
kgrag_status_t kgrag_generate(const kgrag_index_t* index, kgrag_providers_t* providers,
                              const char* question, const char* params_json,
                              const char* style, const char* prompt_template,
                              char** out_context_json, char** out_answer);

/* Run a QA benchmark ({"id", "question", "answers"} JSONL) through
 * retrieve -> generate -> score (exact match, BLEU, Rouge-L).
 * out_report_json receives {"items", "aggregates", "failed_count",
 * "accounting"}. */
kgrag_status_t kgrag_eval(const kgrag_index_t* index, kgrag_providers_t* providers,
                          const char* qa_path, const char* params_json, const char* style,
                          char** out_report_json);

/* Plain-text aligned table for a report produced by kgrag_eval. */
kgrag_status_t kgrag_render_report_table(const char* report_json, char** out_table);

#ifdef __cplusplus
}
#endif

#endif /* KGRAG_H */
