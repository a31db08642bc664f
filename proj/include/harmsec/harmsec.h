#ifndef HARMSEC_H
#define HARMSEC_H

/* C interface to the harmsec library.
 *
 * Handles are opaque. Every call returns an hs_status; on failure the
 * calling thread's hs_last_error() describes it. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * hs_string_free. Options are passed as JSON objects (NULL or "" for
 * defaults); reports come back as JSON documents. */

#include <stddef.h>

#if defined(HS_BUILDING)
#define HS_API __attribute__((visibility("default")))
#else
#define HS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct hs_space hs_space;
typedef struct hs_section hs_section;

typedef enum hs_status {
  HS_OK = 0,
  HS_SYNTAX = 1,
  HS_UNKNOWN_FUNCTION,
  HS_UNBOUND_VARIABLE,
  HS_DOMAIN,
  HS_SINGULAR_METRIC,
  HS_BASE_POINT_MISMATCH,
  HS_SINGULAR_FIBER_BLOCK,
  HS_NON_SYMMETRIC_CONNECTION,
  HS_UNKNOWN_GALLERY_NAME,
  HS_INVALID_HORIZON,
  HS_NON_VERTICAL_FORM,
  HS_STEP_UNSTABLE,
  HS_INVALID_GEOMETRY,
  HS_INVALID_ARGUMENT,
  HS_IO,
  HS_INTERNAL = 100
} hs_status;

HS_API const char* hs_version(void);
HS_API const char* hs_status_name(hs_status status);
/* Message for the last failed call on this thread; "" if none. */
HS_API const char* hs_last_error(void);
HS_API void hs_string_free(char* s);

/* Gallery: names in listing order, and a JSON listing with descriptions
 * (and expectations when verbose != 0). Unlisted helper entries are
 * included only when all != 0. */
HS_API size_t hs_gallery_count(void);
HS_API const char* hs_gallery_name(size_t index);
HS_API hs_status hs_gallery_list_json(int verbose, int all, char** out);

/* eps != 0 yields the broken variant with one perturbed coefficient. */
HS_API hs_status hs_space_from_gallery(const char* name, double eps, hs_space** out);
HS_API hs_status hs_space_from_json(const char* text, hs_space** out);
HS_API hs_status hs_space_from_file(const char* path, hs_space** out);
HS_API hs_status hs_space_export_json(const hs_space* space, char** out);
HS_API hs_status hs_space_dims(const hs_space* space, int* base_dim, int* fiber_dim);
HS_API void hs_space_free(hs_space* space);

/* `selector` names a section of the space, or lists fibre components
 * separated by ';' as expressions in the base coordinates. */
HS_API hs_status hs_section_create(const hs_space* space, const char* selector, hs_section** out);
HS_API void hs_section_free(hs_section* section);

/* Tension and vertical tension at base point x (length n); tau and tau_v
 * receive n + r values each. */
HS_API hs_status hs_tension(const hs_section* section, const double* x, double* tau, double* tau_v);

/* Options: {"samples", "tolerance", "strict_skew", "workers", "timing"}. */
HS_API hs_status hs_verify(const hs_section* section, const char* options, char** report, int* exit_code);
/* Options: {"horizon", "dt", "paths", "seed", "workers", "fiber_index",
 *           "form": [components over the total chart], "x0", "tolerance", "timing"}. */
HS_API hs_status hs_simulate(const hs_section* section, const char* options, char** report, int* exit_code);
/* Options: {"grid", "dt", "steps", "record_every", "workers", "energy_slack", "timing"}. */
HS_API hs_status hs_flow(const hs_section* section, const char* options, char** report, int* exit_code);

/* CSV tables: per-sample diagnostics (verify options) and the simulated
 * base paths (simulate options). */
HS_API hs_status hs_diagnostics_csv(const hs_section* section, const char* options, char** out);
HS_API hs_status hs_paths_csv(const hs_section* section, const char* options, char** out);

#ifdef __cplusplus
}
#endif

#endif
