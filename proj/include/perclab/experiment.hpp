#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "perclab/csv.hpp"
#include "perclab/ensemble.hpp"
#include "perclab/exponents.hpp"
#include "perclab/regularity.hpp"
#include "perclab/shape.hpp"
#include "perclab/version.hpp"

namespace perclab {

using nlohmann::json;

// Declarative run description. The config file is strict: unknown keys are
// rejected so a typo cannot silently disable a task.
struct ExperimentSpec {
  BoxSpec box;
  SamplerSpec sampler;
  std::uint64_t seed = 0;
  std::int64_t replicas = 1;
  std::set<std::string> tasks;
  std::vector<Coords> directions;   // alpha, mu, rate, shape
  std::vector<double> lambda_grid;  // alpha, rate
  std::int64_t n_regen = 16;
  std::vector<double> t_grid;       // shape
  double tail_c1 = 1.5;
  std::vector<std::int64_t> tail_radii;
  Coords triple_z1, triple_z2;
  std::int64_t triple_n = 16;
  std::vector<std::int64_t> r_event_scales;
  std::string output_dir = "out";
  int workers = 1;

  json canonical;  // parsed document, used for the spec hash
};

inline const std::set<std::string>& known_tasks() {
  static const std::set<std::string> tasks{"tail",  "alpha",  "mu",     "rate",
                                           "shape", "triple", "r-event"};
  return tasks;
}

inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  for (int k = 0; k <= 8; ++k) grid.push_back(0.05 * static_cast<double>(1 << k));
  return grid;
}

namespace detail {

inline void reject_unknown_keys(const json& obj, const char* where,
                                const std::set<std::string>& known,
                                std::vector<std::string>& errs) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      errs.push_back(std::string("unknown key '") + it.key() + "' in " + where);
}

inline bool parse_coords(const json& j, std::int32_t d, Coords* out) {
  if (!j.is_array() || static_cast<std::int32_t>(j.size()) != d) return false;
  out->clear();
  for (const auto& v : j) {
    if (!v.is_number_integer()) return false;
    out->push_back(v.get<std::int64_t>());
  }
  return true;
}

}  // namespace detail

// Parses and validates in one pass; on return, `errors` carries every
// violation found (empty means `spec` is runnable).
inline ExperimentSpec parse_experiment_spec(const json& root,
                                            std::vector<std::string>& errors) {
  ExperimentSpec spec;
  spec.canonical = root;
  errors.clear();
  if (!root.is_object()) {
    errors.push_back("spec root must be a JSON object");
    return spec;
  }
  detail::reject_unknown_keys(
      root, "spec",
      {"box", "sampler", "seed", "replicas", "tasks", "directions",
       "lambda_grid", "n_regen", "t_grid", "tail", "triple", "r_event",
       "output_dir", "workers"},
      errors);

  // --- box ---
  std::int32_t d = 2;
  std::int64_t L = 2;
  Mode mode = Mode::Bond;
  Boundary boundary = Boundary::Wrapped;
  if (!root.contains("box") || !root["box"].is_object()) {
    errors.push_back("'box' object is required");
  } else {
    const auto& b = root["box"];
    detail::reject_unknown_keys(b, "box", {"d", "L", "mode", "boundary"}, errors);
    if (!b.contains("d") || !b["d"].is_number_integer())
      errors.push_back("box.d must be an integer");
    else
      d = b["d"].get<std::int32_t>();
    if (!b.contains("L") || !b["L"].is_number_integer())
      errors.push_back("box.L must be an integer");
    else
      L = b["L"].get<std::int64_t>();
    const std::string mode_s = b.value("mode", "bond");
    if (mode_s == "bond")
      mode = Mode::Bond;
    else if (mode_s == "site")
      mode = Mode::Site;
    else
      errors.push_back("box.mode must be 'bond' or 'site'");
    const std::string bd_s = b.value("boundary", "wrapped");
    if (bd_s == "free")
      boundary = Boundary::Free;
    else if (bd_s == "wrapped")
      boundary = Boundary::Wrapped;
    else
      errors.push_back("box.boundary must be 'free' or 'wrapped'");
  }
  try {
    spec.box = BoxSpec(d, L, mode, boundary);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
    return spec;  // everything downstream depends on the box
  }

  // --- sampler ---
  if (!root.contains("sampler") || !root["sampler"].is_object()) {
    errors.push_back("'sampler' object is required");
  } else {
    const auto& s = root["sampler"];
    detail::reject_unknown_keys(
        s, "sampler", {"model", "p", "q", "bc", "dynamics", "sweeps"}, errors);
    const std::string model = s.value("model", "");
    if (model == "bernoulli-bond")
      spec.sampler.model = ModelKind::BernoulliBond;
    else if (model == "bernoulli-site")
      spec.sampler.model = ModelKind::BernoulliSite;
    else if (model == "random-cluster")
      spec.sampler.model = ModelKind::RandomCluster;
    else
      errors.push_back("sampler.model must be bernoulli-bond, bernoulli-site "
                       "or random-cluster");
    if (!s.contains("p") || !s["p"].is_number())
      errors.push_back("sampler.p must be a number");
    else
      spec.sampler.p = s["p"].get<double>();
    spec.sampler.q = s.value("q", 1.0);
    const std::string bc = s.value("bc", "free");
    if (bc == "free")
      spec.sampler.bc = RcBoundaryCondition::Free;
    else if (bc == "wired")
      spec.sampler.bc = RcBoundaryCondition::Wired;
    else
      errors.push_back("sampler.bc must be 'free' or 'wired'");
    const std::string dyn = s.value("dynamics", "auto");
    if (dyn == "auto")
      spec.sampler.dynamics = RcDynamics::Auto;
    else if (dyn == "heat-bath")
      spec.sampler.dynamics = RcDynamics::HeatBath;
    else if (dyn == "swendsen-wang")
      spec.sampler.dynamics = RcDynamics::SwendsenWang;
    else
      errors.push_back("sampler.dynamics must be auto, heat-bath or swendsen-wang");
    // Burn-in default: 10 L sweeps.
    spec.sampler.sweeps = s.value("sweeps", 10 * spec.box.L);
    for (const auto& err : validate_sampler(spec.box, spec.sampler))
      errors.push_back(err);
  }

  // --- scalars ---
  if (!root.contains("seed") || !root["seed"].is_number_integer())
    errors.push_back("'seed' (integer) is required");
  else
    spec.seed = root["seed"].get<std::uint64_t>();
  spec.sampler.seed = spec.seed;
  if (!root.contains("replicas") || !root["replicas"].is_number_integer())
    errors.push_back("'replicas' (integer) is required");
  else
    spec.replicas = root["replicas"].get<std::int64_t>();
  if (spec.replicas < 1) errors.push_back("replicas must be >= 1");
  spec.output_dir = root.value("output_dir", std::string("out"));
  spec.workers = root.value("workers", 1);
  if (spec.workers < 1) errors.push_back("workers must be >= 1");
  spec.n_regen = root.value("n_regen", std::int64_t{16});
  if (spec.n_regen < 4) errors.push_back("n_regen must be >= 4");

  // --- tasks ---
  if (!root.contains("tasks") || !root["tasks"].is_array() ||
      root["tasks"].empty()) {
    errors.push_back("'tasks' must be a nonempty array");
  } else {
    for (const auto& t : root["tasks"]) {
      const std::string name = t.is_string() ? t.get<std::string>() : "";
      if (!known_tasks().count(name))
        errors.push_back("unknown task '" + name + "'");
      else
        spec.tasks.insert(name);
    }
  }

  // --- directions ---
  if (root.contains("directions")) {
    if (!root["directions"].is_array())
      errors.push_back("directions must be an array of integer vectors");
    else
      for (const auto& dj : root["directions"]) {
        Coords x;
        if (!detail::parse_coords(dj, spec.box.d, &x))
          errors.push_back("directions entries must be integer vectors of size d");
        else
          spec.directions.push_back(std::move(x));
      }
  }
  const bool needs_directions = spec.tasks.count("alpha") ||
                                spec.tasks.count("mu") ||
                                spec.tasks.count("rate") ||
                                spec.tasks.count("shape");
  if (needs_directions) {
    if (spec.directions.empty())
      errors.push_back("alpha/mu/rate/shape tasks need a 'directions' list");
    for (const auto& x : spec.directions)
      if (linf_norm(x) == 0)
        errors.push_back("directions must be nonzero for alpha/mu tasks");
  }

  // --- lambda grid ---
  if (root.contains("lambda_grid")) {
    if (!root["lambda_grid"].is_array())
      errors.push_back("lambda_grid must be an array of numbers");
    else
      for (const auto& v : root["lambda_grid"]) {
        if (!v.is_number())
          errors.push_back("lambda_grid entries must be numbers");
        else
          spec.lambda_grid.push_back(v.get<double>());
      }
  } else {
    spec.lambda_grid = default_lambda_grid();
  }
  for (std::size_t i = 0; i + 1 < spec.lambda_grid.size(); ++i)
    if (!(spec.lambda_grid[i] < spec.lambda_grid[i + 1]))
      errors.push_back("lambda_grid must be strictly increasing");
  if (!spec.lambda_grid.empty() && spec.lambda_grid.front() < 0)
    errors.push_back("lambda_grid must be nonnegative");
  if (spec.tasks.count("rate") && spec.lambda_grid.size() < 8)
    errors.push_back("rate task needs a lambda_grid with >= 8 points");

  // --- t grid ---
  if (root.contains("t_grid")) {
    if (!root["t_grid"].is_array())
      errors.push_back("t_grid must be an array of numbers");
    else
      for (const auto& v : root["t_grid"]) {
        if (!v.is_number())
          errors.push_back("t_grid entries must be numbers");
        else
          spec.t_grid.push_back(v.get<double>());
      }
  }
  if (spec.tasks.count("shape")) {
    if (spec.box.d != 2)
      errors.push_back("shape task is implemented for d = 2");
    if (spec.t_grid.empty())
      errors.push_back("shape task needs a 't_grid'");
    for (double t : spec.t_grid)
      if (t < 1.0 || t > static_cast<double>(spec.box.L / 2 - 1))
        errors.push_back("t_grid values must lie in [1, L/2 - 1]");
  }

  // --- tail ---
  if (root.contains("tail")) {
    const auto& t = root["tail"];
    if (!t.is_object()) {
      errors.push_back("'tail' must be an object");
    } else {
      detail::reject_unknown_keys(t, "tail", {"c1", "radii"}, errors);
      spec.tail_c1 = t.value("c1", 1.5);
      if (t.contains("radii") && t["radii"].is_array())
        for (const auto& r : t["radii"])
          spec.tail_radii.push_back(r.get<std::int64_t>());
    }
  }
  if (spec.tasks.count("tail")) {
    if (spec.tail_radii.empty())
      errors.push_back("tail task needs tail.radii");
    if (!(spec.tail_c1 > 0)) errors.push_back("tail.c1 must be positive");
    for (auto r : spec.tail_radii)
      if (r < 1 || r > spec.box.L / 2)
        errors.push_back("tail radii must lie in [1, L/2]");
  }

  // --- triple ---
  if (root.contains("triple")) {
    const auto& t = root["triple"];
    if (!t.is_object()) {
      errors.push_back("'triple' must be an object");
    } else {
      detail::reject_unknown_keys(t, "triple", {"z1", "z2", "n"}, errors);
      if (t.contains("z1") && !detail::parse_coords(t["z1"], spec.box.d, &spec.triple_z1))
        errors.push_back("triple.z1 must be an integer vector of size d");
      if (t.contains("z2") && !detail::parse_coords(t["z2"], spec.box.d, &spec.triple_z2))
        errors.push_back("triple.z2 must be an integer vector of size d");
      spec.triple_n = t.value("n", std::int64_t{16});
    }
  }
  if (spec.tasks.count("triple")) {
    if (spec.triple_z1.empty() || spec.triple_z2.empty())
      errors.push_back("triple task needs triple.z1 and triple.z2");
    else if (linf_norm(spec.triple_z1) == 0 && linf_norm(spec.triple_z2) == 0)
      errors.push_back("triple shifts must not both be zero");
    if (spec.triple_n < 1) errors.push_back("triple.n must be >= 1");
    if (spec.box.boundary != Boundary::Wrapped)
      errors.push_back("triple task needs a wrapped box");
  }

  // --- r-event ---
  if (root.contains("r_event")) {
    const auto& t = root["r_event"];
    if (!t.is_object()) {
      errors.push_back("'r_event' must be an object");
    } else {
      detail::reject_unknown_keys(t, "r_event", {"scales"}, errors);
      if (t.contains("scales") && t["scales"].is_array())
        for (const auto& v : t["scales"])
          spec.r_event_scales.push_back(v.get<std::int64_t>());
    }
  }
  if (spec.tasks.count("r-event")) {
    if (spec.r_event_scales.empty())
      errors.push_back("r-event task needs r_event.scales");
    for (auto N : spec.r_event_scales) {
      if (N < 1) {
        errors.push_back("r-event scales must be >= 1");
      } else {
        const std::int64_t radius = (5 * N) / 4;
        if (spec.box.L / 2 - radius < 0 ||
            spec.box.L / 2 + radius >= spec.box.L)
          errors.push_back("r-event scale " + std::to_string(N) +
                           " does not fit in the box");
      }
    }
  }

  // Regeneration depth vs wrap budget for the directional tasks.
  if (needs_directions && !spec.directions.empty()) {
    for (const auto& x : spec.directions) {
      if (linf_norm(x) == 0) continue;
      const std::int64_t cap = (spec.box.L / 2 - 1) / linf_norm(x);
      if (spec.n_regen > cap)
        errors.push_back("n_regen " + std::to_string(spec.n_regen) +
                         " can exceed the wrap budget " + std::to_string(cap) +
                         " for direction " + fmt_coords(x) +
                         "; enlarge the box or lower n_regen");
    }
  }

  return spec;
}

struct TaskStatus {
  std::string status = "ok";  // "ok" or "failed: <reason>"
  std::vector<std::string> files;
  json extra;  // task-specific summary payload
};

struct ResultRecord {
  std::string spec_hash;
  std::uint64_t master_seed = 0;
  std::int64_t wall_ms = 0;
  std::string version;
  std::string output_dir;
  std::map<std::string, TaskStatus> tasks;
  double p_omega0 = -1.0;  // acceptance fraction when conditioning ran
  json rc_diagnostic;       // autocorrelation info for random-cluster runs

  bool all_ok() const {
    for (const auto& [name, st] : tasks)
      if (st.status != "ok") return false;
    return true;
  }
};

namespace detail {

inline std::string csv_interval_rows(
    const std::vector<std::int64_t>& r, const std::vector<std::int64_t>& count,
    const std::vector<std::int64_t>& total) {
  std::string out = "r,count,total,freq,ci_lo,ci_hi\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double freq =
        static_cast<double>(count[i]) / static_cast<double>(total[i]);
    const auto ci = wilson_interval(count[i], total[i]);
    out += std::to_string(r[i]) + "," + std::to_string(count[i]) + "," +
           std::to_string(total[i]) + "," + fmt_double(freq) + "," +
           fmt_double(ci.lo) + "," + fmt_double(ci.hi) + "\n";
  }
  return out;
}

inline json property_report_json(const PropertyReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back(json{{"name", c.name},
                          {"pass", c.pass},
                          {"lhs", c.lhs},
                          {"rhs", c.rhs},
                          {"slack", c.slack},
                          {"margin", c.margin}});
  }
  return json{{"complete", rep.complete},
              {"all_pass", rep.all_pass},
              {"checks", checks}};
}

// Integrated autocorrelation time of the open-bond fraction along one
// dedicated chain, the convergence diagnostic for the sweeps knob.
inline json rc_autocorrelation_diagnostic(const BoxSpec& box,
                                          const SamplerSpec& spec) {
  const std::int64_t sweeps = std::max<std::int64_t>(64, spec.sweeps);
  const bool wired = spec.bc == RcBoundaryCondition::Wired;
  const bool use_sw = spec.dynamics == RcDynamics::SwendsenWang ||
                      (spec.dynamics == RcDynamics::Auto && rc_q_is_integer(spec.q));
  Rng rng(spec.seed, 0, kTagRandomCluster, /*salt=*/0xd1a6u);
  Configuration c(box);
  c.fill(true);
  std::optional<perclab::detail::RcGraph> graph;
  if (!use_sw) graph.emplace(box, wired);
  std::vector<double> series;
  series.reserve(static_cast<std::size_t>(sweeps));
  const double nb = static_cast<double>(box.num_bonds());
  for (std::int64_t i = 0; i < sweeps; ++i) {
    if (use_sw)
      rc_swendsen_wang_sweep(c, spec.p, static_cast<std::int64_t>(spec.q), wired, rng);
    else
      rc_heat_bath_sweep(c, spec.p, spec.q, wired, *graph, rng);
    series.push_back(static_cast<double>(c.open_count()) / nb);
  }
  Accumulator acc;
  for (double v : series) acc.add(v);
  const double var = acc.variance();
  double tau = 0.5;
  std::int64_t window = 0;
  if (var > 0) {
    for (std::int64_t k = 1; k < sweeps / 4; ++k) {
      double cov = 0.0;
      for (std::int64_t i = 0; i + k < sweeps; ++i)
        cov += (series[i] - acc.mean) * (series[i + k] - acc.mean);
      cov /= static_cast<double>(sweeps - k - 1);
      const double rho = cov / var;
      if (rho < 0.05) break;
      tau += rho;
      window = k;
    }
  }
  return json{{"sweeps", sweeps},
              {"mean_open_fraction", acc.mean},
              {"tau_int", tau},
              {"window", window},
              {"sweeps_per_tau", tau > 0 ? static_cast<double>(spec.sweeps) / tau
                                         : 0.0}};
}

}  // namespace detail

// Runs the selected tasks, writing one CSV (and for some tasks a JSON or
// SVG sidecar) per task plus summary.json into spec.output_dir. Replica
// parallelism only; reductions are ordered by replica index, so outputs do
// not depend on the worker count.
inline ResultRecord run_experiment(const ExperimentSpec& spec) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  ResultRecord rec;
  rec.master_seed = spec.seed;
  rec.version = kVersion;
  rec.output_dir = spec.output_dir;
  rec.spec_hash = hex64(fnv1a(spec.canonical.dump()));

  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec) throw IoError("cannot create output dir: " + ec.message());
  const auto out_path = [&](const std::string& name) {
    return fs::path(spec.output_dir) / name;
  };

  const bool needs_conditioned = spec.tasks.count("alpha") ||
                                 spec.tasks.count("mu") ||
                                 spec.tasks.count("rate") ||
                                 spec.tasks.count("shape");
  const bool needs_raw = spec.tasks.count("tail") || spec.tasks.count("triple") ||
                         spec.tasks.count("r-event");

  std::optional<Ensemble> cond, raw;
  if (needs_conditioned) {
    cond = make_ensemble(spec.box, spec.sampler, spec.replicas, true, spec.workers);
    rec.p_omega0 = cond->p_omega0();
  }
  if (needs_raw)
    raw = make_ensemble(spec.box, spec.sampler, spec.replicas, false, spec.workers);

  if (spec.sampler.model == ModelKind::RandomCluster)
    rec.rc_diagnostic = detail::rc_autocorrelation_diagnostic(spec.box, spec.sampler);

  // Results shared between tasks.
  std::optional<std::vector<MuEstimate>> mus;
  std::optional<std::vector<AlphaCurve>> curves;
  std::optional<double> c3;
  const auto ensure_c3 = [&]() {
    if (!c3) c3 = estimate_c3(cond->members, spec.directions);
    return *c3;
  };
  const auto ensure_mus = [&]() -> const std::vector<MuEstimate>& {
    if (!mus)
      mus = estimate_mu_multi(cond->members, cond->p_omega0(), spec.directions,
                              spec.n_regen, spec.workers);
    return *mus;
  };
  const auto ensure_curves = [&]() -> const std::vector<AlphaCurve>& {
    if (!curves) {
      curves.emplace();
      for (const auto& x : spec.directions)
        curves->push_back(estimate_alpha(cond->members, cond->p_omega0(), x,
                                         spec.lambda_grid, spec.n_regen,
                                         spec.workers));
    }
    return *curves;
  };

  const auto run_task = [&](const std::string& name, auto&& body) {
    if (!spec.tasks.count(name)) return;
    TaskStatus st;
    try {
      body(st);
    } catch (const std::exception& e) {
      st.status = std::string("failed: ") + e.what();
    }
    rec.tasks[name] = std::move(st);
  };

  run_task("tail", [&](TaskStatus& st) {
    std::vector<Configuration> configs;
    for (const auto& m : raw->members) configs.push_back(m.config);
    const auto curve = empirical_tail(configs, spec.tail_c1, spec.tail_radii);
    std::string csv = "r,count,total,freq,ci_lo,ci_hi\n";
    for (const auto& pt : curve.points)
      csv += std::to_string(pt.r) + "," + std::to_string(pt.count) + "," +
             std::to_string(pt.total) + "," + fmt_double(pt.freq) + "," +
             fmt_double(pt.ci_lo) + "," + fmt_double(pt.ci_hi) + "\n";
    atomic_write_file(out_path("tail.csv"), csv);
    st.files.push_back("tail.csv");
    st.extra = json{{"c1", curve.c1},
                    {"fit_ok", curve.fit_ok},
                    {"c2_hat", curve.c2_hat},
                    {"c3_hat", curve.c3_hat}};
  });

  run_task("r-event", [&](TaskStatus& st) {
    std::vector<std::int64_t> rs, counts, totals;
    for (auto N : spec.r_event_scales) {
      std::int64_t hit = 0;
      for (const auto& m : raw->members)
        hit += check_regularity_event(m.config, Coords(spec.box.d, 0), N) ? 1 : 0;
      rs.push_back(N);
      counts.push_back(hit);
      totals.push_back(static_cast<std::int64_t>(raw->members.size()));
    }
    atomic_write_file(out_path("r_event.csv"),
                      detail::csv_interval_rows(rs, counts, totals));
    st.files.push_back("r_event.csv");
  });

  run_task("triple", [&](TaskStatus& st) {
    const auto tr = estimate_triple_density(raw->members, spec.triple_z1,
                                            spec.triple_z2, spec.triple_n);
    std::string csv = "n,cesaro_mean,ci\n";
    for (std::size_t i = 0; i < tr.partial_mean.size(); ++i)
      csv += std::to_string(i + 1) + "," + fmt_double(tr.partial_mean[i]) + "," +
             fmt_double(tr.partial_ci[i]) + "\n";
    atomic_write_file(out_path("triple.csv"), csv);
    st.files.push_back("triple.csv");
    st.extra = json{{"complete", tr.complete},
                    {"n_used", tr.n_used},
                    {"final_mean", tr.final_mean},
                    {"final_ci", tr.final_ci}};
  });

  run_task("mu", [&](TaskStatus& st) {
    const auto& ms = ensure_mus();
    std::string csv = "x,n,estimate,ci,replicas\n";
    for (const auto& m : ms)
      for (const auto& tp : m.trace)
        csv += fmt_coords(m.x) + "," + std::to_string(tp.n) + "," +
               fmt_double(tp.estimate) + "," + fmt_double(tp.ci) + "," +
               std::to_string(m.replicas) + "\n";
    atomic_write_file(out_path("mu.csv"), csv);
    st.files.push_back("mu.csv");
    const auto rep = mu_property_report(ms, ensure_c3());
    atomic_write_file(out_path("mu_properties.json"),
                      detail::property_report_json(rep).dump(2) + "\n");
    st.files.push_back("mu_properties.json");
    st.extra = json{{"c3_hat", ensure_c3()},
                    {"properties_all_pass", rep.all_pass},
                    {"properties_complete", rep.complete}};
  });

  run_task("alpha", [&](TaskStatus& st) {
    const auto& cs = ensure_curves();
    std::string csv = "lambda,x,n,estimate,ci,replicas\n";
    for (const auto& c : cs)
      for (const auto& pt : c.points)
        for (const auto& tp : pt.trace)
          csv += fmt_double(pt.lambda) + "," + fmt_coords(c.x) + "," +
                 std::to_string(tp.n) + "," + fmt_double(tp.estimate) + "," +
                 fmt_double(tp.ci) + "," + std::to_string(c.replicas) + "\n";
    atomic_write_file(out_path("alpha.csv"), csv);
    st.files.push_back("alpha.csv");
    const auto rep = alpha_property_report(cs, ensure_c3());
    atomic_write_file(out_path("alpha_properties.json"),
                      detail::property_report_json(rep).dump(2) + "\n");
    st.files.push_back("alpha_properties.json");
    st.extra = json{{"c3_hat", ensure_c3()},
                    {"p_omega0", cond->p_omega0()},
                    {"properties_all_pass", rep.all_pass},
                    {"properties_complete", rep.complete}};
  });

  run_task("rate", [&](TaskStatus& st) {
    const auto& cs = ensure_curves();
    std::string csv = "x,value,lambda_star,diverged\n";
    const auto zero = rate_function(make_zero_curve(spec.lambda_grid, spec.box.d));
    csv += fmt_coords(zero.x) + "," + fmt_double(zero.value) + "," +
           fmt_double(zero.lambda_star) + ",0\n";
    for (const auto& c : cs) {
      const auto rf = rate_function(c);
      csv += fmt_coords(rf.x) + "," + fmt_double(rf.value) + "," +
             fmt_double(rf.lambda_star) + "," + (rf.diverged ? "1" : "0") + "\n";
    }
    atomic_write_file(out_path("rate.csv"), csv);
    st.files.push_back("rate.csv");
  });

  run_task("shape", [&](TaskStatus& st) {
    const auto& ms = ensure_mus();
    const auto limit = build_limit_shape(ms);
    const auto rep =
        shape_convergence_scan(cond->members, limit, spec.t_grid, spec.workers);
    std::string csv = "t,mean_dist,ci\n";
    for (std::size_t i = 0; i < rep.t.size(); ++i)
      csv += fmt_double(rep.t[i]) + "," + fmt_double(rep.mean_dist[i]) + "," +
             fmt_double(rep.ci[i]) + "\n";
    atomic_write_file(out_path("shape.csv"), csv);
    st.files.push_back("shape.csv");

    {
      std::ostringstream os;
      write_shape_svg(os, limit);
      atomic_write_file(out_path("shape_limit.svg"), os.str());
      st.files.push_back("shape_limit.svg");
    }
    for (double t : spec.t_grid) {
      const auto& m0 = cond->members.front();
      const auto emp = empirical_ball_shape(m0.config, m0.labeling, t);
      std::ostringstream os;
      write_shape_svg(os, limit, &emp);
      const std::string name = "shape_t" + fmt_double(t) + ".svg";
      atomic_write_file(out_path(name), os.str());
      st.files.push_back(name);
    }
    st.extra = json{{"trend_spearman", rep.trend_spearman}};
  });

  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();

  // summary.json (schema: schemas/summary.schema.json)
  json tasks_json = json::object();
  for (const auto& [name, st] : rec.tasks) {
    json tj{{"status", st.status}, {"files", st.files}};
    if (!st.extra.is_null()) tj["extra"] = st.extra;
    tasks_json[name] = tj;
  }
  json summary{{"schema_version", 1},
               {"version", rec.version},
               {"spec_hash", rec.spec_hash},
               {"master_seed", rec.master_seed},
               {"wall_ms", rec.wall_ms},
               {"output_dir", rec.output_dir},
               {"tasks", tasks_json}};
  if (rec.p_omega0 >= 0) summary["p_omega0"] = rec.p_omega0;
  if (!rec.rc_diagnostic.is_null()) summary["rc_diagnostic"] = rec.rc_diagnostic;
  atomic_write_file(out_path("summary.json"), summary.dump(2) + "\n");
  return rec;
}

// Structural check of a summary document against the shipped schema.
inline std::vector<std::string> validate_summary_json(const json& s) {
  std::vector<std::string> errs;
  const auto need = [&](const char* key, bool ok) {
    if (!ok) errs.push_back(std::string("summary.") + key + " missing or mistyped");
  };
  need("schema_version", s.contains("schema_version") &&
                             s["schema_version"].is_number_integer());
  need("version", s.contains("version") && s["version"].is_string());
  need("spec_hash", s.contains("spec_hash") && s["spec_hash"].is_string() &&
                        s["spec_hash"].get<std::string>().size() == 16);
  need("master_seed", s.contains("master_seed") && s["master_seed"].is_number());
  need("wall_ms", s.contains("wall_ms") && s["wall_ms"].is_number());
  need("output_dir", s.contains("output_dir") && s["output_dir"].is_string());
  need("tasks", s.contains("tasks") && s["tasks"].is_object());
  if (s.contains("tasks") && s["tasks"].is_object()) {
    for (auto it = s["tasks"].begin(); it != s["tasks"].end(); ++it) {
      if (!known_tasks().count(it.key()))
        errs.push_back("summary.tasks has unknown task '" + it.key() + "'");
      if (!it.value().contains("status") || !it.value()["status"].is_string())
        errs.push_back("summary.tasks." + it.key() + ".status missing");
      if (!it.value().contains("files") || !it.value()["files"].is_array())
        errs.push_back("summary.tasks." + it.key() + ".files missing");
    }
  }
  return errs;
}

}  // namespace perclab
