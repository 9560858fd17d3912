#ifndef BAIRELAB_H
#define BAIRELAB_H

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_NULL_POINTER = 1,
  BL_STATUS_INVALID_UTF8 = 2,
  BL_STATUS_PARSE_ERROR = 3,
  BL_STATUS_VALIDATION_ERROR = 4,
  BL_STATUS_INTERNAL = 5,
} BlStatus;

// A finite bush of dyadic step functions.
typedef struct BlBush BlBush;

// A finite family of vectors with its norm context.
typedef struct BlFamily BlFamily;

// A finite tree.
typedef struct BlTree BlTree;

// A finitely supported vector on a tree.
typedef struct BlVector BlVector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or an empty string.
// The pointer stays valid until the next `bl_*` call on the same thread.
const char *bl_last_error_message(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not have been freed.
void bl_string_free(char *s);

// Parses `{"nodes": [[...], ...]}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum BlStatus bl_tree_from_json(const char *json, struct BlTree **out);

// All tuples with entries `< k` and length `≤ d`.
//
// # Safety
// `out` must be writable.
enum BlStatus bl_tree_generate_full_kary(uint32_t k, uint32_t d, struct BlTree **out);

// The chain with `d + 1` nodes.
//
// # Safety
// `out` must be writable.
enum BlStatus bl_tree_generate_spine(uint32_t d, struct BlTree **out);

// A seeded random tree with `n` nodes.
//
// # Safety
// `out` must be writable.
enum BlStatus bl_tree_generate_random(uint32_t n, uint64_t seed, struct BlTree **out);

// # Safety
// `tree` must be a live handle and `out` writable.
enum BlStatus bl_tree_node_count(const struct BlTree *tree, size_t *out);

// Number of derivations until the tree is empty.
//
// # Safety
// `tree` must be a live handle and `out` writable.
enum BlStatus bl_tree_order_index(const struct BlTree *tree, size_t *out);

// Canonical JSON of the tree.
//
// # Safety
// `tree` must be a live handle and `out` writable.
enum BlStatus bl_tree_to_json(const struct BlTree *tree, char **out);

// # Safety
// `tree` must come from this library and not have been freed.
void bl_tree_free(struct BlTree *tree);

// Parses a vector document. `tree` may be null when the document embeds its tree.
//
// # Safety
// `json` must be a NUL-terminated string, `tree` null or a live handle, `out` writable.
enum BlStatus bl_vector_from_json(const char *json,
                                  const struct BlTree *tree,
                                  struct BlVector **out);

// # Safety
// `vector` must come from this library and not have been freed.
void bl_vector_free(struct BlVector *vector);

// Norm of `vector` as JSON `{"approx", "exact", "witness"}`.
// `basis` is `"l1"`, `"l2"` or `"c0"`; `p` is `"zero"` or a rational `≥ 1`.
//
// # Safety
// Pointers must be valid as documented for the other functions.
enum BlStatus bl_baire_norm(const struct BlVector *vector,
                            const char *basis,
                            const char *p,
                            int parallel,
                            char **out);

// Like [`bl_baire_norm`] but by exhaustive enumeration; small supports only.
//
// # Safety
// Pointers must be valid as documented for the other functions.
enum BlStatus bl_baire_norm_oracle(const struct BlVector *vector,
                                   const char *basis,
                                   const char *p,
                                   char **out);

// The Rademacher bush with levels `0..=k`.
//
// # Safety
// `out` must be writable.
enum BlStatus bl_bush_rademacher(uint32_t k, struct BlBush **out);

// Parses `{"K": k, "levels": [...]}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum BlStatus bl_bush_from_json(const char *json, struct BlBush **out);

// Verdict JSON of the bush conditions at `delta` and `bound` (rational strings).
//
// # Safety
// Pointers must be valid as documented for the other functions.
enum BlStatus bl_bush_check(const struct BlBush *bush,
                            const char *delta,
                            const char *bound,
                            char **out);

// # Safety
// `bush` must come from this library and not have been freed.
void bl_bush_free(struct BlBush *bush);

// Parses a family document (`"space": "baire"` or `"l1-step"`).
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum BlStatus bl_family_from_json(const char *json, struct BlFamily **out);

// Banach-Saks obstruction verdict JSON at `epsilon`.
//
// # Safety
// Pointers must be valid as documented for the other functions.
enum BlStatus bl_check_bs(const struct BlFamily *family,
                          const char *epsilon,
                          int parallel,
                          char **out);

// # Safety
// `family` must come from this library and not have been freed.
void bl_family_free(struct BlFamily *family);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BAIRELAB_H */
