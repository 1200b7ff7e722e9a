#include "qpr/pipeline.hpp"

#include <fftw3.h>

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <random>

#include "qpr/errors.hpp"
#include "qpr/selfcheck.hpp"

namespace qpr {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

json provenance(const RunConfig& cfg) {
  json p;
  p["config_hash"] = config_hash(cfg);
  p["seed"] = cfg.seed;
  p["version"] = kVersion;
  p["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  p["fftw"] = std::string(fftw_version);
  return p;
}

RunReport start(const char* command, const RunConfig& cfg) {
  RunReport r;
  r.doc["command"] = command;
  r.doc["outcome"] = "ok";
  r.doc["exit_code"] = 0;
  r.doc["provenance"] = provenance(cfg);
  r.doc["omega"] = cfg.freq.omega;
  r.doc["omega_preset"] = cfg.omega_preset;
  r.doc["stages"] = json::array();
  if (cfg.freq.tau_override)
    r.doc["flags"] = json::array({"frequency.tau overridden: the excluded-measure estimate assumes tau = 2 nu + 6"});
  return r;
}

void fail(RunReport& r, int code, const std::string& outcome, const std::string& stage, const std::string& object,
          const std::string& message, json details = json::object()) {
  r.exit_code = code;
  r.doc["outcome"] = outcome;
  r.doc["exit_code"] = code;
  json f;
  f["stage"] = stage;
  f["object"] = object;
  f["message"] = message;
  if (!details.empty()) f["details"] = std::move(details);
  r.doc["failure"] = std::move(f);
}

// run body, mapping typed errors onto exit codes; `stage` is kept current by the body
template <class F>
void guarded(RunReport& r, std::string& stage, F&& body) {
  try {
    body();
  } catch (const ExclusionError& e) {
    fail(r, kExitExcluded, "excluded", stage, e.set, e.what(),
         {{"ell", e.ell}, {"j", e.j}, {"jp", e.jp}, {"divisor", e.divisor}, {"bound", e.bound}});
  } catch (const SmallDivisorError& e) {
    const char* object = stage == "straighten" || stage == "regularize" ? "first Melnikov condition (transport divisors)"
                                                                         : "second Melnikov condition";
    fail(r, kExitExcluded, "excluded", stage, object, e.what(),
         {{"ell", e.ell}, {"j", e.j}, {"jp", e.jp}, {"divisor", e.divisor}});
  } catch (const SmallnessError& e) {
    fail(r, kExitConfig, "config_error", stage, "KAM smallness condition", e.what());
  } catch (const ConfigError& e) {
    fail(r, kExitConfig, "config_error", stage, "configuration", e.what());
  } catch (const DiffeoError& e) {
    fail(r, kExitStage, "stage_failure", stage, "diffeomorphism bound sup|beta_x| < 1", e.what());
  } catch (const StructureError& e) {
    fail(r, kExitStage, "stage_failure", stage, "reality / Hamiltonian structure", e.what());
  } catch (const ConvergenceError& e) {
    fail(r, kExitStage, "stage_failure", stage, "convergence", e.what(), {{"history", e.history}});
  } catch (const WindowError& e) {
    fail(r, kExitStage, "stage_failure", stage, "truncation window", e.what());
  } catch (const RefinementError& e) {
    fail(r, kExitStage, "stage_failure", stage, "time step resolution", e.what());
  } catch (const Error& e) {
    fail(r, kExitStage, "stage_failure", stage, "numerical stage", e.what());
  }
}

void write_text(const std::string& dir, const char* name, const std::string& text) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name);
  out << text;
}

void finish(const RunReport& r, const std::string& dir) { write_text(dir, "report.json", r.doc.dump(2) + "\n"); }

json straighten_json(const StraighteningResult& s) {
  return {{"m", s.m},
          {"residual", s.residual},
          {"iterations", s.iterations},
          {"history", s.history},
          {"inverse_residual", s.inverse_residual}};
}

json kam_trace_json(const KamResult& k) {
  json t = json::array();
  for (const auto& e : k.trace)
    t.push_back({{"k", e.k},
                 {"N", e.N},
                 {"offdiag_norm", e.offdiag_norm},
                 {"melnikov_margin_min", e.melnikov_margin_min},
                 {"structure_defect", e.structure_defect},
                 {"identity_residual", e.identity_residual},
                 {"generator_norm", e.generator_norm},
                 {"smallness", e.smallness},
                 {"series_terms", e.series_terms}});
  return t;
}

std::string eigenvalues_csv(const SpectralData& sd) {
  std::ostringstream os;
  os.precision(17);
  os << "j,d_j,r_j,m_omega_j\n";
  for (int j = -sd.j_max; j <= sd.j_max; ++j)
    if (j != 0) os << j << ',' << sd.d(j) << ',' << sd.r_of(j) << ',' << sd.m * omega_dp(j) << '\n';
  return os.str();
}

Eigen::VectorXcd initial_state(const RunConfig& cfg) {
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(2 * cfg.j_max + 1);
  for (const auto& m : cfg.u0_modes) {
    cd c = 0.5 * m.amplitude * std::exp(cd(0.0, m.phase));
    u[cfg.j_max + m.j] += c;
    u[cfg.j_max - m.j] += std::conj(c);
  }
  return u;
}

void require_O0(const RunConfig& cfg) {
  auto z = diophantine_zeroth(cfg.freq.omega, cfg.freq.gamma, std::max(cfg.l_max, 2));
  if (!z.ok)
    throw ExclusionError("omega violates |omega.l| >= 2 gamma <l>^{-nu}", "O_0 (zeroth Melnikov condition)", z.ell, 0,
                         0, z.divisor, z.bound);
}

Regularized regularize_for(const RunConfig& cfg) {
  const Lattice op = cfg.lattice();
  ToeplitzOperator Q;
  if (!cfg.q_modes.empty()) Q = order_minus_one_perturbation(cfg.c(), op);
  RegularizeOptions ro;
  ro.straighten = cfg.straighten;
  ro.flow.n_steps = cfg.flow_steps;
  ro.rho = cfg.rho;
  return regularize(cfg.a(), Q, cfg.freq, op, ro);
}

void require_second_melnikov(const KamResult& kam) {
  if (!kam.excluded) return;
  const auto& v = kam.violation;
  throw ExclusionError("omega violates |omega.l + d_j - d_j'| >= gamma^{3/2} <l>^{-tau}", "second Melnikov condition",
                       v.ell, v.j, v.jp, v.divisor, v.bound);
}

}  // namespace

Reduction reduce(const RunConfig& cfg, bool assemble) {
  Reduction out;
  require_O0(cfg);
  out.reg = regularize_for(cfg);
  out.kam = kam_iterate(out.reg.R, out.reg.m, cfg.freq.omega, cfg.kam_params());
  require_second_melnikov(out.kam);
  if (assemble) out.diag = assemble_full_diagonalizer(out.reg, out.kam, cfg.freq.omega);
  return out;
}

RunReport cmd_straighten(const RunConfig& cfg, const std::string& dir) {
  RunReport r = start("straighten", cfg);
  std::string stage = "straighten";
  guarded(r, stage, [&] {
    auto s = straighten_iterate(cfg.a(), cfg.freq, cfg.straighten);
    json st = straighten_json(s);
    st["name"] = "straighten";
    r.doc["stages"].push_back(st);
    if (!dir.empty()) {
      std::ostringstream os;
      write_csv(os, s.beta);
      write_text(dir, "beta.csv", os.str());
    }
  });
  finish(r, dir);
  return r;
}

RunReport cmd_reduce(const RunConfig& cfg, const std::string& dir) {
  RunReport r = start("reduce", cfg);
  std::string stage = "regularize";
  guarded(r, stage, [&] {
    require_O0(cfg);
    Regularized reg = regularize_for(cfg);
    json st = straighten_json(reg.straight);
    st["name"] = "straighten";
    r.doc["stages"].push_back(st);
    r.doc["stages"].push_back({{"name", "regularize"},
                               {"m", reg.m},
                               {"transport_defect", reg.transport_defect},
                               {"order0_defect", reg.order0_defect},
                               {"symplectic_defect", reg.symplectic_defect},
                               {"reality_defect", reg.structure.reality_defect},
                               {"hamiltonian_defect", reg.structure.hamiltonian_defect},
                               {"half_weighted_norm", reg.half_weighted_norm},
                               {"r_fit_residual", reg.r_fit_residual},
                               {"flow_grid", reg.flow.Psi_grid.M},
                               {"flow_grid_tail", reg.flow.grid_tail}});
    stage = "kam";
    KamResult kam = kam_iterate(reg.R, reg.m, cfg.freq.omega, cfg.kam_params());
    json tr = kam_trace_json(kam);
    write_text(dir, "trace.json", json{{"straighten_history", reg.straight.history}, {"kam", tr}}.dump(2) + "\n");
    require_second_melnikov(kam);
    r.doc["stages"].push_back({{"name", "kam"},
                               {"stop_reason", kam.stop_reason},
                               {"steps", kam.trace.size()},
                               {"final_norm", kam.final_norm},
                               {"decay_slope", kam.decay_slope},
                               {"trace", tr}});
    const auto& sd = kam.spectral;
    r.doc["spectral"] = {{"m", sd.m},
                         {"j_max", sd.j_max},
                         {"oddness_defect", sd.oddness_defect()},
                         {"weighted_sup_r", sd.weighted_sup()},
                         {"weighted_sup_r_over_epsilon", cfg.epsilon > 0 ? sd.weighted_sup() / cfg.epsilon : 0.0}};
    write_text(dir, "eigenvalues.csv", eigenvalues_csv(sd));
    stage = "assemble";
    FullDiagonalizer fd = assemble_full_diagonalizer(reg, kam, cfg.freq.omega);
    r.doc["stages"].push_back({{"name", "assemble"},
                               {"residual_full", fd.residual_full},
                               {"residual_interior", fd.residual_interior},
                               {"grid", fd.grid}});
  });
  finish(r, dir);
  return r;
}

RunReport cmd_evolve(const RunConfig& cfg, const std::string& dir) {
  RunReport r = start("evolve", cfg);
  std::string stage = "reduce";
  guarded(r, stage, [&] {
    Reduction red = reduce(cfg, false);
    r.doc["stages"].push_back({{"name", "reduce"}, {"m", red.reg.m}, {"kam_final_norm", red.kam.final_norm}});
    stage = "evolve_full";
    const double s_evo = cfg.evolution_s();
    EvolveOptions eo;
    eo.T = cfg.T;
    eo.dt = cfg.dt;
    eo.record_every = cfg.record_every;
    eo.s_list = cfg.s_list;
    if (std::find(eo.s_list.begin(), eo.s_list.end(), s_evo) == eo.s_list.end()) eo.s_list.push_back(s_evo);
    eo.m = red.reg.m;
    Eigen::VectorXcd u0 = initial_state(cfg);
    Trajectory full = evolve_full(u0, red.reg.X, cfg.freq.omega, eo);
    stage = "evolve_reduced";
    Trajectory redt = evolve_reduced(u0, red.reg, red.kam, cfg.freq.omega, full.times, eo.s_list);
    auto st = norm_stability_report(full, s_evo);
    json disc = json::object();
    for (double s : eo.s_list) disc[std::to_string(s)] = trajectory_discrepancy(redt, full, s);
    r.doc["stages"].push_back({{"name", "evolve"},
                               {"T", cfg.T},
                               {"dt", cfg.dt},
                               {"s", s_evo},
                               {"c_lower", st.c_lower},
                               {"c_upper", st.c_upper},
                               {"c_over_epsilon", cfg.epsilon > 0 ? st.c() / cfg.epsilon : 0.0},
                               {"reality_defect", full.reality_defect},
                               {"reduced_vs_full", disc}});
    std::ostringstream os;
    os.precision(17);
    os << "t,s,norm\n";
    for (std::size_t i = 0; i < full.times.size(); ++i)
      for (std::size_t k = 0; k < eo.s_list.size(); ++k)
        os << full.times[i] << ',' << eo.s_list[k] << ',' << full.norms[i][k] << '\n';
    write_text(dir, "norms.csv", os.str());
  });
  finish(r, dir);
  return r;
}

RunReport cmd_measure(const RunConfig& cfg, const std::string& dir) {
  RunReport r = start("measure", cfg);
  std::string stage = "reduce";
  guarded(r, stage, [&] {
    DModel d;
    if (cfg.epsilon > 0.0 && !cfg.a_modes.empty()) {
      // eigenvalue corrections frozen from one reference reduction
      Reduction red = reduce(cfg, false);
      d.m = red.kam.spectral.m;
      d.j_max = red.kam.spectral.j_max;
      d.r = red.kam.spectral.r;
      r.doc["stages"].push_back({{"name", "reduce"}, {"m", d.m}, {"weighted_sup_r", red.kam.spectral.weighted_sup()}});
    }
    stage = "measure";
    Box box{cfg.freq.nu, cfg.freq.L};
    MeasureTable t = excluded_measure(cfg.gammas, d, box, cfg.measure);
    json rows = json::array();
    std::ostringstream os;
    os.precision(17);
    os << "gamma,L,measure,measure_over_gamma,tail_bound\n";
    for (const auto& row : t.rows) {
      rows.push_back({{"gamma", row.gamma},
                      {"measure", row.measure},
                      {"measure_over_gamma", row.measure_over_gamma},
                      {"tail_bound", row.tail_bound},
                      {"max_slice_ratio", row.max_slice_ratio},
                      {"sets", row.n_sets},
                      {"slabs", row.n_slabs},
                      {"listing_cutoff", listing_cutoff(row.gamma, cfg.measure)}});
      os << row.gamma << ',' << row.L << ',' << row.measure << ',' << row.measure_over_gamma << ',' << row.tail_bound
         << '\n';
    }
    json st = {{"name", "measure"}, {"rows", rows}, {"slope", t.slope}, {"ratio_variation", t.ratio_variation}};
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> e1(cfg.freq.nu, 0);
    e1[0] = 1;
    st["inclusion_constant_e1"] =
        smallest_inclusion_constant(e1, cfg.gammas.front(), cfg.measure.tau, cfg.measure.tau1, d, box, 64, 200, rng);
    st["C_incl"] = cfg.measure.C_incl;
    r.doc["stages"].push_back(st);
    write_text(dir, "measure.csv", os.str());
  });
  finish(r, dir);
  return r;
}

RunReport cmd_selfcheck(const RunConfig& cfg, const std::string& dir) {
  RunReport r = start("selfcheck", cfg);
  std::string stage = "selfcheck";
  guarded(r, stage, [&] {
    SelfCheckReport sc = run_selfcheck(cfg.seed);
    json checks = json::array();
    for (const auto& c : sc.checks)
      checks.push_back(
          {{"module", c.module}, {"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}});
    r.doc["checks"] = checks;
    if (!sc.all_pass()) {
      r.exit_code = kExitSelfcheck;
      r.doc["outcome"] = "selfcheck_failed";
      r.doc["exit_code"] = kExitSelfcheck;
    }
  });
  finish(r, dir);
  return r;
}

}  // namespace qpr
