#ifndef SEMILAB_H
#define SEMILAB_H

/* C interface to the semilab core. All functions return a slab_status; on
 * failure slab_last_error() describes the error for the calling thread.
 * Strings returned by report accessors live as long as the report. */

#include <stddef.h>

#if defined(_WIN32)
#define SLAB_API __declspec(dllexport)
#else
#define SLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slab_status {
  SLAB_OK = 0,
  SLAB_INVALID_ARGUMENT = 1,
  SLAB_INVALID_RESOLUTION = 2,
  SLAB_GRID_MISMATCH = 3,
  SLAB_MISSING_BOUNDARY = 4,
  SLAB_NONCONVERGENCE = 5,
  SLAB_OVERFLOW = 6,
  SLAB_DOMAIN = 7,
  SLAB_PLACEMENT = 8,
  SLAB_CONSISTENCY = 9,
  SLAB_RANGE = 10,
  SLAB_CONFIG = 11,
  SLAB_IO = 12,
  SLAB_INTERNAL = 13
} slab_status;

typedef enum slab_nfunction { SLAB_P = 0, SLAB_PSTAR = 1 } slab_nfunction;
typedef enum slab_weight { SLAB_LEBESGUE = 0, SLAB_RHO = 1 } slab_weight;

/* Run outcome carried by a report: success or classifier inconclusive. */
typedef enum slab_outcome { SLAB_OUTCOME_SUCCESS = 0, SLAB_OUTCOME_INCONCLUSIVE = 2 } slab_outcome;

typedef struct slab_grid slab_grid;
typedef struct slab_report slab_report;

SLAB_API const char* slab_version(void);
SLAB_API const char* slab_last_error(void);
SLAB_API const char* slab_status_name(slab_status status);

/* domain: "unit_square" or "unit_disk". */
SLAB_API slab_status slab_grid_create(const char* domain, int n, slab_grid** out);
SLAB_API void slab_grid_destroy(slab_grid* grid);
SLAB_API slab_status slab_grid_info(const slab_grid* grid, int* n, double* h, size_t* interior_count,
                                    size_t* boundary_count);
SLAB_API slab_status slab_grid_distance(const slab_grid* grid, double x, double y, double* out);
/* Copies interior node coordinates into xy[2 * interior_count]. */
SLAB_API slab_status slab_grid_points(const slab_grid* grid, double* xy, size_t capacity);

SLAB_API slab_status slab_young_gap(double x, double y, double* out);
/* Luxemburg norm of arbitrary samples against arbitrary nonnegative weights. */
SLAB_API slab_status slab_luxemburg_norm(const double* values, const double* weights, size_t count,
                                         slab_nfunction nfunction, double* out);
/* Luxemburg norm of an interior nodal field with the grid's quadrature. */
SLAB_API slab_status slab_grid_luxemburg_norm(const slab_grid* grid, const double* values, size_t count,
                                              slab_nfunction nfunction, slab_weight weight, double* out);
/* L ln L norm of the dyadic maximal function of an interior nodal field. */
SLAB_API slab_status slab_llogl_norm(const slab_grid* grid, const double* values, size_t count, slab_weight weight,
                                     double* out);

/* command: "solve", "capacity", "orlicz-norm", "admissibility" or "experiment"
 * (kind in the config). */
SLAB_API slab_status slab_run(const char* command, const char* config_json, slab_report** out);
SLAB_API slab_status slab_run_experiment(const char* kind, const char* config_json, slab_report** out);
SLAB_API const char* slab_report_json(const slab_report* report);
/* Report JSON without the timing member. */
SLAB_API const char* slab_report_json_stable(const slab_report* report);
SLAB_API const char* slab_report_verdict(const slab_report* report);
SLAB_API slab_outcome slab_report_outcome(const slab_report* report);
SLAB_API size_t slab_report_field_count(const slab_report* report);
SLAB_API const char* slab_report_field_name(const slab_report* report, size_t index);
SLAB_API const char* slab_report_field_csv(const slab_report* report, size_t index);
SLAB_API void slab_report_destroy(slab_report* report);

#ifdef __cplusplus
}
#endif

#endif
