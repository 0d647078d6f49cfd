#ifndef QFLOW_IO_HPP
#define QFLOW_IO_HPP

#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qflow/cylinder.hpp"
#include "qflow/gluing.hpp"
#include "qflow/modes.hpp"

// Serialization, caching and plot-data emission. JSON uses nlohmann's
// object type (alphabetically ordered keys, shortest-round-trip doubles),
// so identical values always serialize to identical bytes. CSV is RFC-4180
// with headers, numbers printed with %.17g.

namespace qflow {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "qflow-1";

inline json to_json(const DimensionParams& p) {
  return json{{"A", p.A},           {"B", p.B},
              {"C", p.C},           {"H_cyl", p.H_cyl},
              {"kelvin_exp", p.kelvin_exp}, {"n", p.n},
              {"p_crit", p.p_crit}, {"schema", kSchemaVersion},
              {"v_cyl", p.v_cyl}};
}

/// The solution record stores the shooting data, not the samples; the
/// samples are reproduced bit-exactly by resample_orbit.
inline json to_json(const DelaunaySolution& sol, double fine_step) {
  return json{{"alpha", sol.alpha},   {"beta", sol.beta},
              {"energy", sol.energy}, {"eps", sol.eps},
              {"fine_step", fine_step}, {"n", sol.params.n},
              {"period", sol.period}, {"q", sol.q},
              {"schema", kSchemaVersion}, {"step", sol.step},
              {"tol", sol.tol}};
}

inline DelaunaySolution solution_from_json(const json& j) {
  if (!j.contains("schema") || j["schema"] != kSchemaVersion)
    throw IoError("solution_from_json: schema version mismatch");
  const auto p = make_params(j.at("n").get<int>());
  return resample_orbit(p, j.at("eps").get<double>(), j.at("q").get<double>(),
                        j.at("period").get<double>(),
                        j.at("tol").get<double>(), j.at("step").get<double>(),
                        j.at("fine_step").get<double>());
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void trajectory_csv(std::ostream& os, const DimensionParams& p,
                           const std::vector<OdeState>& states) {
  os << "t,v,v1,v2,v3,H\r\n";
  for (const auto& s : states) {
    os << format_double(s.t) << ',' << format_double(s.v) << ','
       << format_double(s.v1) << ',' << format_double(s.v2) << ','
       << format_double(s.v3) << ',' << format_double(hamiltonian(p, s))
       << "\r\n";
  }
}

inline json to_json(const RemainderReport& rep) {
  return json{{"normalized", rep.normalized},
              {"rho", rep.rho},
              {"schema", kSchemaVersion},
              {"sup", rep.sup}};
}

inline json to_json(const TranslationReport& rep) {
  return json{{"exterior_seen", rep.exterior_seen},
              {"schema", kSchemaVersion},
              {"sup_exterior", rep.sup_exterior},
              {"sup_interior", rep.sup_interior}};
}

/// Closed-form mode profile dump: traces of one RadialProfile on a grid.
inline void mode_profile_csv(std::ostream& os, const RadialProfile& prof,
                             const std::vector<double>& grid) {
  os << "r,w,lap_w,dr_w,dr_lap_w\r\n";
  for (double r : grid) {
    os << format_double(r) << ',' << format_double(prof.value(r)) << ','
       << format_double(prof.lap(r)) << ',' << format_double(prof.dr(r))
       << ',' << format_double(prof.drlap(r)) << "\r\n";
  }
}

inline void radial_profile_csv(std::ostream& os, const RadialOps& ops) {
  os << "r,u,lap_u,dr_u,dr_lap_u\r\n";
  for (std::size_t i = 0; i < ops.rho.size(); ++i) {
    os << format_double(ops.rho[i]) << ',' << format_double(ops.u[i]) << ','
       << format_double(ops.lap[i]) << ',' << format_double(ops.du[i]) << ','
       << format_double(ops.dlap[i]) << "\r\n";
  }
}

/// Mode table row: eigendata, indicial roots, datum factor, the
/// Navier-to-Neumann entries.
inline json mode_table(int n, int l_max) {
  json rows = json::array();
  for (int l = 0; l <= l_max; ++l) {
    const auto [mp, mm] = indicial_roots(l, n);
    json row{{"D_l", exterior_datum_factor(l, n)},
             {"l", l},
             {"lambda", eigenvalue(l, n)},
             {"mu_minus", mm},
             {"mu_plus", mp},
             {"multiplicity", sph_multiplicity(l, n)}};
    if (l >= 2) {
      const auto M = n2n_matrix(l, n);
      row["n2n"] = json{{"m11", M(0, 0)},
                        {"m12", M(0, 1)},
                        {"m21", M(1, 0)},
                        {"m22", M(1, 1)},
                        {"det", M.determinant()}};
    }
    rows.push_back(row);
  }
  return json{{"n", n}, {"modes", rows}, {"schema", kSchemaVersion}};
}

inline json ratio_record(int n, int l, double eps, double T, double delta,
                         double ratio) {
  return json{{"T", T},     {"delta", delta}, {"eps", eps},
              {"l", l},     {"n", n},         {"ratio", ratio},
              {"schema", kSchemaVersion}};
}

inline json glue_manifest(const GlueResult& res) {
  const auto& st = res.state;
  json knobs{{"delta0", st.sched.delta0},
             {"delta1", st.sched.delta1},
             {"delta2", st.sched.delta2},
             {"m", st.sched.m}};
  return json{
      {"b", st.sched.b},
      {"constant_passes", res.constants.passes},
      {"eps", st.sched.eps},
      {"lambda", st.lambda},
      {"mismatch",
       {{"value", res.mismatch[0]},
        {"dr", res.mismatch[1]},
        {"lap", res.mismatch[2]},
        {"dr_lap", res.mismatch[3]}}},
      {"n", st.sched.params.n},
      {"pde_residual_diag", res.residual_diag},
      {"r_eps", st.sched.r_eps},
      {"R", st.sched.R},
      {"schedule", knobs},
      {"schema", kSchemaVersion},
      {"tcal", res.coordinates.tcal},
      {"xi0", st.xi0},
      {"xi2", st.xi2}};
}

// ---------------------------------------------------------------------------
// Append-only JSON-lines solution cache keyed by (n, eps, step, tol) plus
// the code version tag; mismatched versions are treated as misses.

class SolutionCache {
 public:
  explicit SolutionCache(std::string path) : path_(std::move(path)) {}

  struct Key {
    int n;
    double eps, step, tol;
  };

  std::optional<json> lookup(const Key& key) const {
    std::ifstream in(path_);
    if (!in) return std::nullopt;
    std::string line;
    std::optional<json> hit;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded()) continue;
      if (!rec.contains("solution") || !rec.contains("key")) continue;
      if (rec.value("version", "") != kSchemaVersion) continue;
      const auto& k = rec["key"];
      if (k.value("n", -1) == key.n && k.value("eps", 0.0) == key.eps &&
          k.value("step", 0.0) == key.step && k.value("tol", 0.0) == key.tol)
        hit = rec["solution"];
    }
    return hit;
  }

  void append(const Key& key, const json& solution) {
    const std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cache: cannot open " + path_);
    json rec{{"created_unix",
              std::chrono::duration_cast<std::chrono::seconds>(
                  std::chrono::system_clock::now().time_since_epoch())
                  .count()},
             {"key",
              {{"eps", key.eps},
               {"n", key.n},
               {"step", key.step},
               {"tol", key.tol}}},
             {"solution", solution},
             {"version", kSchemaVersion}};
    out << rec.dump() << '\n';
  }

 private:
  std::string path_;
  mutable std::mutex mutex_;
};

/// Shoots with caching: an exact-key hit reproduces the solution (and its
/// serialized bytes) without re-running the bisection.
inline DelaunaySolution shoot_cached(const DimensionParams& p, double eps,
                                     double tol, const ShootOptions& opt,
                                     SolutionCache* cache, bool* hit = nullptr) {
  const SolutionCache::Key key{p.n, eps, opt.sample_step, tol};
  if (cache) {
    if (auto rec = cache->lookup(key)) {
      if (hit) *hit = true;
      return solution_from_json(*rec);
    }
  }
  if (hit) *hit = false;
  DelaunaySolution sol = shoot_delaunay(p, eps, tol, opt);
  if (cache) cache->append(key, to_json(sol, opt.fine_step));
  return sol;
}

}  // namespace qflow

#endif  // QFLOW_IO_HPP
