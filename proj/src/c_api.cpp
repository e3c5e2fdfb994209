#include "semilab/semilab.h"

#include "semilab/error.hpp"
#include "semilab/grid.hpp"
#include "semilab/orlicz.hpp"
#include "semilab/run.hpp"

#include <exception>
#include <new>
#include <string>

struct slab_grid {
  semilab::GridPtr grid;
};

struct slab_report {
  semilab::RunResult result;
  std::string stable;
};

namespace {

thread_local std::string last_error;

slab_status record(slab_status s, const char* what) {
  last_error = what;
  return s;
}

template <class Fn>
slab_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return SLAB_OK;
  } catch (const semilab::Error& e) {
    return record(static_cast<slab_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return record(SLAB_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(SLAB_INTERNAL, e.what());
  } catch (...) {
    return record(SLAB_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  semilab::require(p != nullptr, semilab::ErrorCode::invalid_argument, std::string(what) + " must not be null");
}

semilab::NKind nkind(slab_nfunction f) {
  semilab::require(f == SLAB_P || f == SLAB_PSTAR, semilab::ErrorCode::invalid_argument, "unknown N-function");
  return f == SLAB_P ? semilab::NKind::P : semilab::NKind::Pstar;
}

semilab::Weight weight(slab_weight w) {
  semilab::require(w == SLAB_LEBESGUE || w == SLAB_RHO, semilab::ErrorCode::invalid_argument, "unknown weight");
  return w == SLAB_RHO ? semilab::Weight::rho : semilab::Weight::lebesgue;
}

semilab::ScalarField nodal(const slab_grid* g, const double* values, size_t count) {
  need(g, "grid");
  need(values, "values");
  semilab::require(count == g->grid->interior_count(), semilab::ErrorCode::grid_mismatch,
                   "one value per interior node expected");
  auto f = semilab::ScalarField::zeros(g->grid);
  f.values.assign(values, values + count);
  return f;
}

slab_status finish_report(semilab::RunResult&& r, slab_report** out) {
  auto* rep = new slab_report{std::move(r), {}};
  rep->stable = semilab::strip_timing(rep->result.json);
  *out = rep;
  return SLAB_OK;
}

}  // namespace

extern "C" {

const char* slab_version(void) { return "0.1.0"; }

const char* slab_last_error(void) { return last_error.c_str(); }

const char* slab_status_name(slab_status s) {
  switch (s) {
    case SLAB_OK: return "ok";
    case SLAB_INVALID_ARGUMENT: return "invalid_argument";
    case SLAB_INVALID_RESOLUTION: return "invalid_resolution";
    case SLAB_GRID_MISMATCH: return "grid_mismatch";
    case SLAB_MISSING_BOUNDARY: return "missing_boundary";
    case SLAB_NONCONVERGENCE: return "nonconvergence";
    case SLAB_OVERFLOW: return "overflow";
    case SLAB_DOMAIN: return "domain";
    case SLAB_PLACEMENT: return "placement";
    case SLAB_CONSISTENCY: return "consistency";
    case SLAB_RANGE: return "range";
    case SLAB_CONFIG: return "config";
    case SLAB_IO: return "io";
    case SLAB_INTERNAL: return "internal";
  }
  return "unknown";
}

slab_status slab_grid_create(const char* domain, int n, slab_grid** out) {
  return guarded([&] {
    need(domain, "domain");
    need(out, "out");
    *out = nullptr;
    auto g = semilab::Grid2D::build(semilab::domain_kind_from_string(domain), n);
    *out = new slab_grid{std::move(g)};
  });
}

void slab_grid_destroy(slab_grid* grid) { delete grid; }

slab_status slab_grid_info(const slab_grid* grid, int* n, double* h, size_t* interior_count, size_t* boundary_count) {
  return guarded([&] {
    need(grid, "grid");
    if (n) *n = grid->grid->n();
    if (h) *h = grid->grid->h();
    if (interior_count) *interior_count = grid->grid->interior_count();
    if (boundary_count) *boundary_count = grid->grid->boundary_count();
  });
}

slab_status slab_grid_distance(const slab_grid* grid, double x, double y, double* out) {
  return guarded([&] {
    need(grid, "grid");
    need(out, "out");
    semilab::require(grid->grid->contains({x, y}), semilab::ErrorCode::placement, "point outside the domain");
    *out = grid->grid->distance_to_boundary({x, y});
  });
}

slab_status slab_grid_points(const slab_grid* grid, double* xy, size_t capacity) {
  return guarded([&] {
    need(grid, "grid");
    need(xy, "xy");
    const auto pts = grid->grid->interior_points();
    semilab::require(capacity >= 2 * pts.size(), semilab::ErrorCode::invalid_argument, "buffer too small");
    for (size_t i = 0; i < pts.size(); ++i) {
      xy[2 * i] = pts[i].x;
      xy[2 * i + 1] = pts[i].y;
    }
  });
}

slab_status slab_young_gap(double x, double y, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = semilab::young_gap(x, y);
  });
}

slab_status slab_luxemburg_norm(const double* values, const double* weights, size_t count, slab_nfunction nfunction,
                                double* out) {
  return guarded([&] {
    need(out, "out");
    if (count > 0) {
      need(values, "values");
      need(weights, "weights");
    }
    *out = semilab::luxemburg_norm({values, count}, {weights, count}, nkind(nfunction));
  });
}

slab_status slab_grid_luxemburg_norm(const slab_grid* grid, const double* values, size_t count,
                                     slab_nfunction nfunction, slab_weight w, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto f = nodal(grid, values, count);
    *out = semilab::luxemburg_norm(f, semilab::LuxemburgNorm{nkind(nfunction), weight(w)});
  });
}

slab_status slab_llogl_norm(const slab_grid* grid, const double* values, size_t count, slab_weight w, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = semilab::llogl_norm(nodal(grid, values, count), weight(w));
  });
}

slab_status slab_run(const char* command, const char* config_json, slab_report** out) {
  return guarded([&] {
    need(command, "command");
    need(out, "out");
    *out = nullptr;
    finish_report(semilab::run_command(command, config_json ? config_json : ""), out);
  });
}

slab_status slab_run_experiment(const char* kind, const char* config_json, slab_report** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    *out = nullptr;
    finish_report(semilab::run_experiment_kind(kind, config_json ? config_json : ""), out);
  });
}

const char* slab_report_json(const slab_report* r) { return r ? r->result.json.c_str() : nullptr; }
const char* slab_report_json_stable(const slab_report* r) { return r ? r->stable.c_str() : nullptr; }
const char* slab_report_verdict(const slab_report* r) { return r ? r->result.verdict.c_str() : nullptr; }

slab_outcome slab_report_outcome(const slab_report* r) {
  return r && r->result.status == semilab::RunStatus::inconclusive ? SLAB_OUTCOME_INCONCLUSIVE : SLAB_OUTCOME_SUCCESS;
}

size_t slab_report_field_count(const slab_report* r) { return r ? r->result.tables.size() : 0; }

const char* slab_report_field_name(const slab_report* r, size_t i) {
  return r && i < r->result.tables.size() ? r->result.tables[i].name.c_str() : nullptr;
}

const char* slab_report_field_csv(const slab_report* r, size_t i) {
  return r && i < r->result.tables.size() ? r->result.tables[i].csv.c_str() : nullptr;
}

void slab_report_destroy(slab_report* r) { delete r; }

}  // extern "C"
