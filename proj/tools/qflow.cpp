// qflow: command-line driver for the Delaunay/bi-Laplacian gluing toolkit.
//
// Subcommands: params, delaunay, modes, n2n, modesolve, glue, sweep, verify.
// Exit codes: 0 ok, 2 usage or domain error, 3 numerical failure, 4 I/O.

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

#include "qflow/acceptance.hpp"
#include "qflow/io.hpp"

namespace {

using qflow::json;

struct GlobalConfig {
  std::string cache_path;
  std::string out_path;
  std::string config_path;
  bool explain = false;
};

std::ostream* open_output(const GlobalConfig& g, std::ofstream& file) {
  if (g.out_path.empty()) return &std::cout;
  file.open(g.out_path);
  if (!file) throw qflow::IoError("cannot open output file " + g.out_path);
  return &file;
}

std::unique_ptr<qflow::SolutionCache> make_cache(const GlobalConfig& g) {
  std::string path = g.cache_path;
  if (path.empty()) {
    if (const char* env = std::getenv("QFLOW_CACHE")) path = env;
  }
  if (path.empty()) return nullptr;
  return std::make_unique<qflow::SolutionCache>(path);
}

// Flags override config-file values; the config file overrides defaults.
template <class T>
void from_config(const json& cfg, const char* key, T& slot) {
  if (cfg.contains(key)) slot = cfg.at(key).get<T>();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw qflow::IoError("cannot open config file " + path);
  json cfg = json::parse(in, nullptr, false);
  if (cfg.is_discarded())
    throw qflow::IoError("config file is not valid JSON: " + path);
  return cfg;
}

struct DelaunayArgs {
  int n = 5;
  double eps = 0.2;
  double tol = 1e-12;
  qflow::ShootOptions shoot;
  bool check = false;
  std::string csv_path;
};

json run_delaunay_checks(const qflow::DelaunaySolution& sol) {
  const auto& p = sol.params;
  const double omega = qflow::default_omega(p, sol.eps);
  const auto [lam, mu] = qflow::splitting_roots(p, omega);
  const auto prop2 = qflow::check_prop2(sol, sol.period / 2);
  const double t_probe = sol.period / 4;
  const double vop = qflow::vop_reconstruct(sol, t_probe);
  const double v_probe = qflow::evaluate(sol, t_probe).v;
  std::vector<double> grid;
  for (int i = 1; i <= 40; ++i) grid.push_back(i / 40.0);
  const auto expansion = qflow::expansion_check_u(sol, 1.0, grid);
  return json{
      {"expansion_sup", expansion.sup},
      {"energy_inequality", qflow::energy_inequality_check(sol, omega)},
      {"prop2_sup", {prop2[0], prop2[1], prop2[2], prop2[3], prop2[4]}},
      {"sign_property",
       {{"gamma_lambda", qflow::sign_property(sol, lam, omega)},
        {"gamma_mid", qflow::sign_property(sol, p.A / 2, omega)},
        {"gamma_mu", qflow::sign_property(sol, mu, omega)}}},
      {"vop_quarter_period",
       {{"reconstructed", vop},
        {"sampled", v_probe},
        {"abs_diff", std::abs(vop - v_probe)}}}};
}

int cmd_delaunay(const GlobalConfig& g, const DelaunayArgs& a) {
  const auto p = qflow::make_params(a.n);
  auto cache = make_cache(g);
  bool hit = false;
  const auto sol =
      qflow::shoot_cached(p, a.eps, a.tol, a.shoot, cache.get(), &hit);
  json out = qflow::to_json(sol, a.shoot.fine_step);
  out["cache_hit"] = hit;
  if (a.check) out["verification"] = run_delaunay_checks(sol);
  if (!a.csv_path.empty()) {
    std::ofstream csv(a.csv_path);
    if (!csv) throw qflow::IoError("cannot open " + a.csv_path);
    qflow::trajectory_csv(csv, p, sol.samples);
  }
  std::ofstream file;
  *open_output(g, file) << out.dump(2) << "\n";
  return 0;
}

json glue_once(const qflow::DelaunaySolution& sol,
               const qflow::GluingKnobs& knobs) {
  return qflow::glue_manifest(qflow::glue_run(sol, knobs));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delaunay-type orbits, biharmonic mode operators and the "
               "flat-model Cauchy-data gluing harness"};
  app.require_subcommand(0, 1);
  GlobalConfig g;
  app.add_option("--cache", g.cache_path,
                 "solution cache path (default: $QFLOW_CACHE)");
  app.add_option("--out", g.out_path, "write output to a file");
  app.add_option("--config", g.config_path, "JSON config file with defaults");
  app.add_flag("--explain", g.explain,
               "print the effective configuration and exit");

  auto* cmd_params = app.add_subcommand("params", "dimension constants");
  cmd_params->fallthrough();
  int params_n = 5;
  cmd_params->add_option("--n", params_n, "dimension (>= 5)");

  DelaunayArgs da;
  auto* cmd_del = app.add_subcommand("delaunay", "shoot a Delaunay orbit");
  cmd_del->fallthrough();
  cmd_del->add_option("--n", da.n, "dimension");
  cmd_del->add_option("--eps", da.eps, "necksize");
  cmd_del->add_option("--tol", da.tol, "shooting tolerance");
  cmd_del->add_option("--step", da.shoot.sample_step, "sample spacing");
  cmd_del->add_option("--fine-step", da.shoot.fine_step, "integrator step");
  cmd_del->add_flag("--check", da.check, "embed the verification block");
  cmd_del->add_option("--csv", da.csv_path, "dump the orbit as CSV");

  auto* cmd_modes = app.add_subcommand("modes", "mode table");
  cmd_modes->fallthrough();
  int modes_n = 5, modes_lmax = 10;
  cmd_modes->add_option("--n", modes_n, "dimension");
  cmd_modes->add_option("--lmax", modes_lmax, "largest degree");

  auto* cmd_n2n = app.add_subcommand("n2n", "Navier-to-Neumann table");
  cmd_n2n->fallthrough();
  int n2n_n = 5, n2n_lmax = 10;
  cmd_n2n->add_option("--n", n2n_n, "dimension");
  cmd_n2n->add_option("--lmax", n2n_lmax, "largest degree");

  auto* cmd_ms = app.add_subcommand("modesolve", "one cylinder mode BVP");
  cmd_ms->fallthrough();
  int ms_n = 5, ms_l = 2;
  double ms_eps = 0.2, ms_T = 10.0, ms_h = 0.02, ms_delta = 0.5;
  std::string ms_bc = "navier", ms_csv;
  cmd_ms->add_option("--n", ms_n, "dimension");
  cmd_ms->add_option("--l", ms_l, "harmonic degree");
  cmd_ms->add_option("--eps", ms_eps, "necksize for the potential");
  cmd_ms->add_option("--T", ms_T, "interval length");
  cmd_ms->add_option("--step", ms_h, "grid step");
  cmd_ms->add_option("--delta", ms_delta, "weight exponent");
  cmd_ms->add_option("--bc", ms_bc, "navier | terminal");
  cmd_ms->add_option("--csv", ms_csv, "dump (t, w, f) as CSV");

  auto* cmd_glue = app.add_subcommand("glue", "flat-model gluing run");
  cmd_glue->fallthrough();
  int glue_n = 5;
  double glue_eps = 0.2;
  qflow::GluingKnobs knobs;
  cmd_glue->add_option("--n", glue_n, "dimension");
  cmd_glue->add_option("--eps", glue_eps, "necksize");
  cmd_glue->add_option("--delta0", knobs.delta0, "schedule exponent knob");
  cmd_glue->add_option("--delta1", knobs.delta1, "schedule knob");
  cmd_glue->add_option("--delta2", knobs.delta2, "schedule knob");
  cmd_glue->add_option("--m", knobs.m, "schedule knob");
  cmd_glue->add_option("--b-seed", knobs.b_seed, "initial b");
  cmd_glue->add_option("--lmax", knobs.l_max, "high-mode cutoff");

  auto* cmd_sweep = app.add_subcommand("sweep", "run an eps grid");
  cmd_sweep->fallthrough();
  std::vector<double> sweep_eps = {0.3, 0.2, 0.1, 0.05};
  std::string sweep_what = "glue";
  int sweep_n = 5, sweep_jobs = 4;
  cmd_sweep->add_option("--eps", sweep_eps, "eps grid")->delimiter(',');
  cmd_sweep->add_option("--what", sweep_what, "glue | delaunay");
  cmd_sweep->add_option("--n", sweep_n, "dimension");
  cmd_sweep->add_option("--jobs", sweep_jobs, "worker threads");

  auto* cmd_verify = app.add_subcommand("verify", "run the acceptance suite");
  cmd_verify->fallthrough();

  try {
    app.parse(argc, argv);
    const json cfg = load_config(g.config_path);
    from_config(cfg, "n", params_n);
    from_config(cfg, "n", da.n);
    from_config(cfg, "eps", da.eps);
    from_config(cfg, "tol", da.tol);
    from_config(cfg, "lmax", modes_lmax);
    from_config(cfg, "lmax", n2n_lmax);
    from_config(cfg, "delta0", knobs.delta0);
    from_config(cfg, "delta1", knobs.delta1);
    from_config(cfg, "delta2", knobs.delta2);
    from_config(cfg, "m", knobs.m);

    if (g.explain) {
      json eff{{"cache", g.cache_path},
               {"delaunay",
                {{"eps", da.eps},
                 {"fine_step", da.shoot.fine_step},
                 {"n", da.n},
                 {"sample_step", da.shoot.sample_step},
                 {"tol", da.tol}}},
               {"glue",
                {{"b_seed", knobs.b_seed},
                 {"delta0", knobs.delta0},
                 {"delta1", knobs.delta1},
                 {"delta2", knobs.delta2},
                 {"eps", glue_eps},
                 {"l_max", knobs.l_max},
                 {"m", knobs.m},
                 {"n", glue_n}}},
               {"schema", qflow::kSchemaVersion}};
      std::cout << eff.dump(2) << "\n";
      return 0;
    }

    std::ofstream file;
    if (cmd_params->parsed()) {
      *open_output(g, file)
          << qflow::to_json(qflow::make_params(params_n)).dump(2) << "\n";
      return 0;
    }
    if (cmd_del->parsed()) return cmd_delaunay(g, da);
    if (cmd_modes->parsed()) {
      *open_output(g, file)
          << qflow::mode_table(modes_n, modes_lmax).dump(2) << "\n";
      return 0;
    }
    if (cmd_n2n->parsed()) {
      json rows = json::array();
      for (int l = 2; l <= n2n_lmax; ++l) {
        const auto M = qflow::n2n_matrix(l, n2n_n);
        rows.push_back(json{{"det", M.determinant()},
                            {"l", l},
                            {"m11", M(0, 0)},
                            {"m12", M(0, 1)},
                            {"m21", M(1, 0)},
                            {"m22", M(1, 1)}});
      }
      *open_output(g, file) << json{{"n", n2n_n},
                                    {"schema", qflow::kSchemaVersion},
                                    {"table", rows}}
                                   .dump(2)
                            << "\n";
      return 0;
    }
    if (cmd_ms->parsed()) {
      const auto p = qflow::make_params(ms_n);
      auto cache = make_cache(g);
      const auto sol = qflow::shoot_cached(p, ms_eps, 1e-12, {}, cache.get());
      const auto bc = ms_bc == "terminal"
                          ? qflow::BoundaryKind::terminal_clamped
                          : qflow::BoundaryKind::navier_both_ends;
      const auto op =
          qflow::make_mode_operator(sol, ms_l, 0.0, ms_T, ms_h, bc);
      std::vector<double> f(op.n_nodes());
      for (std::size_t i = 0; i < op.n_nodes(); ++i)
        f[i] = std::exp(-ms_delta * op.node(i));
      const double ratio = qflow::apriori_ratio(op, f, ms_delta);
      if (!ms_csv.empty()) {
        const auto out = qflow::solve_mode_bvp(op, f);
        std::ofstream csv(ms_csv);
        if (!csv) throw qflow::IoError("cannot open " + ms_csv);
        csv << "t,w,f\r\n";
        for (std::size_t i = 0; i < out.w.size(); ++i)
          csv << qflow::format_double(op.node(i)) << ','
              << qflow::format_double(out.w[i]) << ','
              << qflow::format_double(f[i]) << "\r\n";
      }
      *open_output(g, file)
          << qflow::ratio_record(ms_n, ms_l, ms_eps, ms_T, ms_delta, ratio)
                 .dump(2)
          << "\n";
      return 0;
    }
    if (cmd_glue->parsed()) {
      const auto p = qflow::make_params(glue_n);
      auto cache = make_cache(g);
      const auto sol =
          qflow::shoot_cached(p, glue_eps, 1e-12, {}, cache.get());
      *open_output(g, file) << glue_once(sol, knobs).dump(2) << "\n";
      return 0;
    }
    if (cmd_sweep->parsed()) {
      const auto p = qflow::make_params(sweep_n);
      auto cache = make_cache(g);
      std::vector<json> results(sweep_eps.size());
      std::mutex cache_mutex;
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= sweep_eps.size()) return;
          // Lock only the cache lookup; the shoot itself runs in parallel
          // and appends go through the cache's own single writer.
          qflow::DelaunaySolution sol = [&] {
            const qflow::ShootOptions opt;
            const qflow::SolutionCache::Key key{p.n, sweep_eps[i],
                                                opt.sample_step, 1e-12};
            if (cache) {
              const std::lock_guard<std::mutex> lock(cache_mutex);
              if (auto rec = cache->lookup(key))
                return qflow::solution_from_json(*rec);
            }
            auto shot = qflow::shoot_delaunay(p, sweep_eps[i], 1e-12, opt);
            if (cache) cache->append(key, qflow::to_json(shot, opt.fine_step));
            return shot;
          }();
          if (sweep_what == "glue") {
            results[i] = glue_once(sol, knobs);
          } else {
            results[i] = qflow::to_json(sol, qflow::ShootOptions{}.fine_step);
          }
        }
      };
      std::vector<std::thread> threads;
      const auto n_workers =
          std::max(1, std::min<int>(sweep_jobs, int(sweep_eps.size())));
      for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
      std::ofstream file2;
      auto& os = *open_output(g, file2);
      if (sweep_what == "glue") {
        os << "eps,r_eps,b,lambda,xi0,xi2,mismatch_value,mismatch_dr,"
              "mismatch_lap,mismatch_dr_lap,pde_residual_diag,tcal\r\n";
        for (const auto& r : results) {
          os << qflow::format_double(r["eps"].get<double>()) << ','
             << qflow::format_double(r["r_eps"].get<double>()) << ','
             << qflow::format_double(r["b"].get<double>()) << ','
             << qflow::format_double(r["lambda"].get<double>()) << ','
             << qflow::format_double(r["xi0"].get<double>()) << ','
             << qflow::format_double(r["xi2"].get<double>()) << ','
             << qflow::format_double(r["mismatch"]["value"].get<double>()) << ','
             << qflow::format_double(r["mismatch"]["dr"].get<double>()) << ','
             << qflow::format_double(r["mismatch"]["lap"].get<double>()) << ','
             << qflow::format_double(r["mismatch"]["dr_lap"].get<double>()) << ','
             << qflow::format_double(r["pde_residual_diag"].get<double>()) << ','
             << qflow::format_double(r["tcal"].get<double>()) << "\r\n";
        }
      } else {
        os << "eps,q,period,energy,alpha,beta\r\n";
        for (const auto& r : results) {
          os << qflow::format_double(r["eps"].get<double>()) << ','
             << qflow::format_double(r["q"].get<double>()) << ','
             << qflow::format_double(r["period"].get<double>()) << ','
             << qflow::format_double(r["energy"].get<double>()) << ','
             << qflow::format_double(r["alpha"].get<double>()) << ','
             << qflow::format_double(r["beta"].get<double>()) << "\r\n";
        }
      }
      return 0;
    }
    if (cmd_verify->parsed()) {
      const auto results = qflow::acceptance::run_all();
      std::ofstream file3;
      *open_output(g, file3) << qflow::acceptance::report(results);
      for (const auto& r : results)
        if (!r.pass) return 3;
      return 0;
    }
    std::cerr << app.help();
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const qflow::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const qflow::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const qflow::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
