#ifndef BEEHIVE_H
#define BEEHIVE_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum BhStatus {
  BH_STATUS_OK = 0,
  BH_STATUS_NULL_ARGUMENT = 1,
  BH_STATUS_INVALID_UTF8 = 2,
  BH_STATUS_INVALID_ARGUMENT = 3,
  BH_STATUS_PARSE = 4,
  BH_STATUS_NOT_FOUND = 5,
  BH_STATUS_DOMAIN = 6,
  BH_STATUS_PANIC = 7,
} BhStatus;

/*
 Opaque equivalence cache handle.
 */
typedef struct BhCache BhCache;

/*
 Opaque registry network handle.
 */
typedef struct BhNetwork BhNetwork;

/*
 Opaque taxonomy handle.
 */
typedef struct BhTaxonomy BhTaxonomy;

/*
 Outcome of [`bh_discover`]. Release the strings with [`bh_discovery_clear`].
 */
typedef struct BhDiscovery {
  char *registry_id;
  char *service_id;
  double similarity;
  double qos_score;
  uint64_t probes;
} BhDiscovery;

/*
 Outcome of [`bh_substitute`]. Release with [`bh_substitution_clear`].
 */
typedef struct BhSubstitution {
  char *service_id;
  /*
   True when the substitute came from the cache.
   */
  bool cache_hit;
  uint64_t probes;
} BhSubstitution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static string; do not free.
 */
const char *bh_version(void);

/*
 Message of the last failed call on this thread, or NULL. Free with
 [`bh_string_free`].
 */
char *bh_last_error_message(void);

/*
 Frees a string returned by this library.

 # Safety
 `s` must be NULL or a string obtained from this library, freed once.
 */
void bh_string_free(char *s);

/*
 Built-in service-domain taxonomy.

 # Safety
 `out` must be a valid pointer.
 */
enum BhStatus bh_taxonomy_bundled(struct BhTaxonomy **out);

/*
 Parses a taxonomy document (`child<TAB>parent` lines).

 # Safety
 `document` must be a NUL-terminated string; `out` a valid pointer.
 */
enum BhStatus bh_taxonomy_load(const char *document, struct BhTaxonomy **out);

/*
 # Safety
 `t` must be NULL or a handle from this library, freed once.
 */
void bh_taxonomy_free(struct BhTaxonomy *t);

/*
 Wu–Palmer similarity of two concepts.

 # Safety
 Pointers must be valid; strings NUL-terminated.
 */
enum BhStatus bh_wu_palmer(const struct BhTaxonomy *t, const char *a, const char *b, double *out);

/*
 Parses a network document against taxonomy `t`.

 # Safety
 Pointers must be valid; `document` NUL-terminated.
 */
enum BhStatus bh_network_load(const char *document,
                              const struct BhTaxonomy *t,
                              struct BhNetwork **out);

/*
 Generates a random network with default generator settings.

 # Safety
 Pointers must be valid.
 */
enum BhStatus bh_network_generate(const struct BhTaxonomy *t,
                                  size_t registry_count,
                                  uint64_t seed,
                                  struct BhNetwork **out);

/*
 Canonical network document. Free with [`bh_string_free`].

 # Safety
 `net` must be a valid handle; `out` a valid pointer.
 */
enum BhStatus bh_network_to_xml(const struct BhNetwork *net, char **out);

/*
 Number of registries; 0 for NULL.

 # Safety
 `net` must be NULL or a valid handle.
 */
size_t bh_network_registry_count(const struct BhNetwork *net);

/*
 # Safety
 `net` must be NULL or a handle from this library, freed once.
 */
void bh_network_free(struct BhNetwork *net);

/*
 Bees-guided discovery with default parameters followed by QoS selection.
 `weights` is `"attr:w,attr:w"` or NULL for uniform weights.

 # Safety
 Pointers must be valid; strings NUL-terminated.
 */
enum BhStatus bh_discover(const struct BhNetwork *net,
                          const struct BhTaxonomy *t,
                          const char *wanted_domain,
                          const char *weights,
                          double requested_level,
                          uint64_t seed,
                          struct BhDiscovery *out);

/*
 Frees the strings of a [`BhDiscovery`] and nulls them.

 # Safety
 `d` must be NULL or point to a result filled by [`bh_discover`].
 */
void bh_discovery_clear(struct BhDiscovery *d);

/*
 New equivalence cache; `capacity` 0 means unbounded.

 # Safety
 `out` must be a valid pointer.
 */
enum BhStatus bh_cache_new(uint64_t ttl, size_t capacity, struct BhCache **out);

/*
 Number of stored entries, live or not; 0 for NULL.

 # Safety
 `c` must be NULL or a valid handle.
 */
size_t bh_cache_len(const struct BhCache *c);

/*
 Removes expired entries; returns how many (0 for NULL).

 # Safety
 `c` must be NULL or a valid handle.
 */
size_t bh_cache_evict_expired(struct BhCache *c, uint64_t now);

/*
 # Safety
 `c` must be NULL or a handle from this library, freed once.
 */
void bh_cache_free(struct BhCache *c);

/*
 Finds a substitute for `failed_id` at logical time `now`, consulting and
 updating `cache`. `weights` may be NULL for uniform weights.

 # Safety
 Pointers must be valid; strings NUL-terminated.
 */
enum BhStatus bh_substitute(struct BhCache *cache,
                            const struct BhNetwork *net,
                            const struct BhTaxonomy *t,
                            const char *failed_id,
                            const char *weights,
                            double requested_level,
                            uint64_t now,
                            uint64_t seed,
                            struct BhSubstitution *out);

/*
 Frees the string of a [`BhSubstitution`] and nulls it.

 # Safety
 `s` must be NULL or point to a result filled by [`bh_substitute`].
 */
void bh_substitution_clear(struct BhSubstitution *s);

/*
 Inverted Schwefel function of `x[0..len]`; maximum ≈ 0.

 # Safety
 `x` must point to `len` doubles; `out` must be valid.
 */
enum BhStatus bh_schwefel(const double *x, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEEHIVE_H */
