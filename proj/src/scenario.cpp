#include "bstab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "bstab/errors.hpp"
#include "bstab/format.hpp"
#include "bstab/sampling.hpp"

namespace bstab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
  }
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where, "expected a finite number");
  return d;
}

double positive(const json& v, const std::string& where) {
  const double d = get_number(v, where);
  if (!(d > 0.0)) fail(where, "must be positive");
  return d;
}

long long get_int(const json& v, const std::string& where, long long lo) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  const long long i = v.get<long long>();
  if (i < lo) fail(where, "must be >= " + std::to_string(lo));
  return i;
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

Vector get_vector(const json& v, const std::string& where, int n) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  if (n >= 0 && static_cast<int>(v.size()) != n) {
    fail(where, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = get_number(v[i], where);
  return out;
}

[[noreturn]] void rethrow_parse(const std::string& where, const ParseError& e) {
  std::string msg = e.what();
  const auto cut = msg.rfind(" (at byte ");
  if (cut != std::string::npos) msg.erase(cut);
  throw ParseError(where + ": " + msg, e.offset());
}

ScalarExpr state_expr(const std::string& text, int n, const std::string& where) {
  try {
    return parse_state_expression(text, n);
  } catch (const ParseError& e) {
    rethrow_parse(where, e);
  }
}

ScalarExpr rate_expr(const std::string& text, const std::string& where) {
  static const std::vector<std::string> names{"u"};
  try {
    return parse_expression(text, names);
  } catch (const ParseError& e) {
    rethrow_parse(where, e);
  }
}

Target parse_target(const json& j, int n) {
  check_keys(j, "system.target", {"type", "center", "radius", "distance", "box_lo", "box_hi"});
  const std::string type = get_string(j.value("type", json()), "system.target.type");
  if (type == "point") {
    return Target::point(get_vector(j.at("center"), "system.target.center", n));
  }
  if (type == "ball") {
    if (!j.contains("radius")) fail("system.target", "ball needs a radius");
    const double radius = get_number(j["radius"], "system.target.radius");
    if (radius < 0.0) fail("system.target.radius", "must be nonnegative");
    return Target::ball(get_vector(j.at("center"), "system.target.center", n), radius);
  }
  if (type == "expression") {
    for (const char* key : {"distance", "box_lo", "box_hi"}) {
      if (!j.contains(key)) fail("system.target", std::string("expression target needs '") + key + "'");
    }
    return Target::expression(state_expr(get_string(j["distance"], "system.target.distance"), n,
                                         "system.target.distance"),
                              get_vector(j["box_lo"], "system.target.box_lo", n),
                              get_vector(j["box_hi"], "system.target.box_hi", n));
  }
  fail("system.target.type", "expected point, ball or expression, got '" + type + "'");
}

System parse_system(const json& j, int k) {
  check_keys(j, "system", {"dimension", "fields", "lagrangian", "target"});
  for (const char* key : {"dimension", "fields", "target"}) {
    if (!j.contains(key)) fail("system", std::string("missing '") + key + "'");
  }
  const int n = static_cast<int>(get_int(j["dimension"], "system.dimension", 1));
  const json& fj = j["fields"];
  if (!fj.is_array() || fj.empty()) fail("system.fields", "expected a nonempty array of fields");
  std::vector<VectorFieldExpr> fields;
  for (std::size_t i = 0; i < fj.size(); ++i) {
    const std::string where = "system.fields[" + std::to_string(i) + "]";
    if (!fj[i].is_array() || static_cast<int>(fj[i].size()) != n) {
      fail(where, "expected " + std::to_string(n) + " component strings");
    }
    std::vector<ScalarExpr> comps;
    for (std::size_t c = 0; c < fj[i].size(); ++c) {
      const std::string w = where + "[" + std::to_string(c) + "]";
      comps.push_back(state_expr(get_string(fj[i][c], w), n, w));
    }
    fields.emplace_back(std::move(comps));
  }
  const std::size_t m = fields.size();
  std::vector<ScalarExpr> lag;
  const json lj = j.value("lagrangian", json("1"));
  if (lj.is_string()) {
    const ScalarExpr l = state_expr(lj.get<std::string>(), n, "system.lagrangian");
    lag.assign(2 * m, l);
  } else if (lj.is_array() && lj.size() == 2 * m) {
    for (std::size_t i = 0; i < lj.size(); ++i) {
      const std::string w = "system.lagrangian[" + std::to_string(i) + "]";
      lag.push_back(state_expr(get_string(lj[i], w), n, w));
    }
  } else {
    fail("system.lagrangian", "expected a string or an array of 2m strings ordered +e1, -e1, +e2, ...");
  }
  Target target = parse_target(j["target"], n);
  try {
    return System(std::move(fields), std::move(lag), std::move(target), k);
  } catch (const DomainError& e) {
    fail("system", e.what());
  } catch (const DimensionError& e) {
    fail("system", e.what());
  }
}

std::vector<Vector> parse_points(const json& j, const std::string& where, int n) {
  if (!j.is_array()) fail(where, "expected an array of points");
  std::vector<Vector> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_vector(j[i], where + "[" + std::to_string(i) + "]", n));
  return out;
}

template <class F>
void parallel_indices(std::size_t count, int jobs, F&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string mark(const ConditionResult& c) {
  if (!c.evaluated) return "n/a";
  return c.passed ? "pass" : "FAIL";
}

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : std::string("inf"); }

std::string fmt_vec(const Vector& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += format_double(x[i]);
  }
  return s + ")";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

Scenario load_scenario(const json& doc) {
  check_keys(doc, "scenario",
             {"name", "system", "k", "candidate", "radii", "initial_states", "grid", "integrator", "constants",
              "process", "asymptotic", "cost_audit", "seed", "jobs", "description"});
  Scenario sc;
  sc.source = doc;
  if (doc.contains("name")) sc.name = get_string(doc["name"], "name");
  if (!doc.contains("system")) fail("scenario", "missing 'system'");
  sc.k = static_cast<int>(get_int(doc.value("k", json(1)), "k", 1));
  if (sc.k > 8) fail("k", "degrees above 8 are not supported");
  sc.system.emplace(parse_system(doc["system"], sc.k));
  const System& sys = *sc.system;
  const int n = sys.n();

  // Candidate.
  const json cj = doc.value("candidate", json::object());
  check_keys(cj, "candidate", {"U", "scale", "p0", "gamma", "nu", "theta"});
  sc.candidate_U = cj.contains("U") ? get_string(cj["U"], "candidate.U") : "distance";
  sc.candidate_scale = cj.contains("scale") ? positive(cj["scale"], "candidate.scale") : 1.0;
  sc.p0_text = cj.contains("p0") ? get_string(cj["p0"], "candidate.p0") : "1";
  sc.gamma_text = cj.contains("gamma") ? get_string(cj["gamma"], "candidate.gamma") : "1";
  const double nu = cj.contains("nu") ? get_number(cj["nu"], "candidate.nu") : 0.0;
  if (nu < 0.0 || nu > 1.0) fail("candidate.nu", "must lie in [0, 1]");
  const double theta_pairs = cj.contains("theta") ? positive(cj["theta"], "candidate.theta") : 0.5;
  RealFunction p0 = rate_from_expression(rate_expr(sc.p0_text, "candidate.p0"));
  RealFunction gamma = rate_from_expression(rate_expr(sc.gamma_text, "candidate.gamma"));
  if (sc.candidate_U == "distance") {
    sc.candidate = MRFCandidate::distance(sys.target(), p0, gamma, nu, theta_pairs, sc.candidate_scale);
  } else {
    sc.candidate = MRFCandidate::expression(state_expr(sc.candidate_U, n, "candidate.U"), n, p0, gamma, nu,
                                            theta_pairs);
  }

  // Radii and initial states.
  if (!doc.contains("radii") || !doc["radii"].is_array() || doc["radii"].empty()) {
    fail("radii", "expected a nonempty array of {R, r}");
  }
  for (std::size_t i = 0; i < doc["radii"].size(); ++i) {
    const std::string where = "radii[" + std::to_string(i) + "]";
    const json& rj = doc["radii"][i];
    check_keys(rj, where, {"R", "r"});
    if (!rj.contains("R") || !rj.contains("r")) fail(where, "needs R and r");
    RadiusPair p{positive(rj["R"], where + ".R"), positive(rj["r"], where + ".r")};
    if (!(p.r < p.R)) fail(where, "r must be smaller than R");
    sc.radii.push_back(p);
  }
  if (doc.contains("initial_states")) sc.initial_states = parse_points(doc["initial_states"], "initial_states", n);

  // Sampling grids.
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    check_keys(g, "grid", {"per_axis", "random_samples", "check_per_axis", "check_random_samples", "check_d_lo",
                           "check_d_hi", "envelope_radius_factor"});
    if (g.contains("per_axis")) sc.grid_per_axis = static_cast<int>(get_int(g["per_axis"], "grid.per_axis", 0));
    if (g.contains("random_samples")) {
      sc.random_samples = static_cast<std::size_t>(get_int(g["random_samples"], "grid.random_samples", 0));
    }
    if (g.contains("check_per_axis")) {
      sc.check_grid_per_axis = static_cast<int>(get_int(g["check_per_axis"], "grid.check_per_axis", 0));
    }
    if (g.contains("check_random_samples")) {
      sc.check_random_samples =
          static_cast<std::size_t>(get_int(g["check_random_samples"], "grid.check_random_samples", 0));
    }
    if (g.contains("check_d_lo")) sc.check_d_lo = get_number(g["check_d_lo"], "grid.check_d_lo");
    if (g.contains("check_d_hi")) sc.check_d_hi = positive(g["check_d_hi"], "grid.check_d_hi");
    if (g.contains("envelope_radius_factor")) {
      sc.envelope_radius_factor = positive(g["envelope_radius_factor"], "grid.envelope_radius_factor");
      if (sc.envelope_radius_factor <= 1.0) fail("grid.envelope_radius_factor", "must exceed 1");
    }
  }
  sc.constants.grid_per_axis = sc.grid_per_axis;
  sc.constants.random_samples = sc.random_samples;

  if (doc.contains("integrator")) {
    const json& ij = doc["integrator"];
    check_keys(ij, "integrator", {"substeps", "target_epsilon", "divergence_bound"});
    if (ij.contains("substeps")) {
      sc.process.integrator.substeps = static_cast<int>(get_int(ij["substeps"], "integrator.substeps", 1));
    }
    if (ij.contains("target_epsilon")) {
      sc.process.integrator.target_epsilon = positive(ij["target_epsilon"], "integrator.target_epsilon");
    }
    if (ij.contains("divergence_bound")) {
      sc.process.integrator.divergence_bound = positive(ij["divergence_bound"], "integrator.divergence_bound");
    }
  }

  if (doc.contains("constants")) {
    const json& kj = doc["constants"];
    check_keys(kj, "constants", {"delta_bar", "inflation", "asymptotic_points", "asymptotic_substeps",
                                 "semiconcavity_trials", "inner_fraction", "override", "thresholds"});
    auto& co = sc.constants;
    if (kj.contains("delta_bar")) co.delta_bar = positive(kj["delta_bar"], "constants.delta_bar");
    if (kj.contains("inflation")) {
      co.inflation = get_number(kj["inflation"], "constants.inflation");
      if (co.inflation < 1.0) fail("constants.inflation", "must be >= 1");
    }
    if (kj.contains("asymptotic_points")) {
      co.asymptotic_points =
          static_cast<std::size_t>(get_int(kj["asymptotic_points"], "constants.asymptotic_points", 1));
    }
    if (kj.contains("asymptotic_substeps")) {
      co.asymptotic_substeps =
          static_cast<int>(get_int(kj["asymptotic_substeps"], "constants.asymptotic_substeps", 1));
    }
    if (kj.contains("semiconcavity_trials")) {
      co.semiconcavity_trials =
          static_cast<int>(get_int(kj["semiconcavity_trials"], "constants.semiconcavity_trials", 1));
    }
    if (kj.contains("inner_fraction")) co.inner_fraction = positive(kj["inner_fraction"], "constants.inner_fraction");
    if (kj.contains("override")) {
      json o = kj["override"];
      if (!o.contains("theta")) o["theta"] = sc.candidate.theta;
      if (!o.contains("delta_bar")) o["delta_bar"] = co.delta_bar;
      try {
        sc.constants_override = ConstantsEstimate::from_json(o);
      } catch (const ConfigError& e) {
        fail("constants.override", e.what());
      }
    }
    if (kj.contains("thresholds")) {
      const json& t = kj["thresholds"];
      check_keys(t, "constants.thresholds", {"u_hat_r", "U_hat_R", "R_tilde"});
      if (!t.contains("u_hat_r") || !t.contains("U_hat_R") || !t.contains("R_tilde")) {
        fail("constants.thresholds", "needs u_hat_r, U_hat_R and R_tilde");
      }
      sc.u_hat_r_override = positive(t["u_hat_r"], "constants.thresholds.u_hat_r");
      sc.U_hat_R_override = positive(t["U_hat_R"], "constants.thresholds.U_hat_R");
      sc.R_tilde_override = positive(t["R_tilde"], "constants.thresholds.R_tilde");
      if (!(*sc.u_hat_r_override < *sc.U_hat_R_override)) fail("constants.thresholds", "u_hat_r must be below U_hat_R");
    }
  }

  if (doc.contains("process")) {
    const json& pj = doc["process"];
    check_keys(pj, "process", {"step_fraction", "horizon", "max_steps", "post_entry_steps", "trace_stride"});
    if (pj.contains("step_fraction")) {
      sc.process.step_fraction = get_number(pj["step_fraction"], "process.step_fraction");
      const double Delta = static_cast<double>(sc.k - 1) / sc.k;
      if (!(sc.process.step_fraction > Delta) || sc.process.step_fraction > 1.0) {
        fail("process.step_fraction", "must lie in (" + format_double(Delta) + ", 1]");
      }
    }
    if (pj.contains("horizon")) sc.process.horizon = positive(pj["horizon"], "process.horizon");
    if (pj.contains("max_steps")) {
      sc.process.max_steps = static_cast<std::size_t>(get_int(pj["max_steps"], "process.max_steps", 1));
    }
    if (pj.contains("post_entry_steps")) {
      sc.process.post_entry_steps =
          static_cast<std::size_t>(get_int(pj["post_entry_steps"], "process.post_entry_steps", 0));
    }
    if (pj.contains("trace_stride")) {
      sc.trace_stride = static_cast<std::size_t>(get_int(pj["trace_stride"], "process.trace_stride", 1));
    }
  }

  if (doc.contains("asymptotic")) {
    const json& aj = doc["asymptotic"];
    check_keys(aj, "asymptotic", {"labels", "points", "horizons", "substeps", "min_slope"});
    if (aj.contains("labels")) {
      if (!aj["labels"].is_array()) fail("asymptotic.labels", "expected an array of label strings");
      for (std::size_t i = 0; i < aj["labels"].size(); ++i) {
        const std::string where = "asymptotic.labels[" + std::to_string(i) + "]";
        ControlLabel label;
        try {
          label = parse_control_label(get_string(aj["labels"][i], where));
        } catch (const ParseError& e) {
          rethrow_parse(where, e);
        }
        for (int f : label.fields) {
          if (f >= sys.m()) fail(where, "refers to a field beyond m = " + std::to_string(sys.m()));
        }
        sc.asymptotic.labels.push_back(label);
      }
    }
    if (aj.contains("points")) sc.asymptotic.points = parse_points(aj["points"], "asymptotic.points", n);
    if (aj.contains("horizons")) {
      sc.asymptotic.horizons.clear();
      for (const auto& h : aj["horizons"]) sc.asymptotic.horizons.push_back(positive(h, "asymptotic.horizons"));
      if (sc.asymptotic.horizons.size() < 2) fail("asymptotic.horizons", "need at least two horizons");
    }
    if (aj.contains("substeps")) {
      sc.asymptotic.substeps = static_cast<int>(get_int(aj["substeps"], "asymptotic.substeps", 1));
    }
    if (aj.contains("min_slope")) sc.asymptotic.min_slope = get_number(aj["min_slope"], "asymptotic.min_slope");
  }

  if (doc.contains("cost_audit")) {
    if (!doc["cost_audit"].is_boolean()) fail("cost_audit", "expected true or false");
    sc.cost_audit = doc["cost_audit"].get<bool>();
  }
  if (doc.contains("seed")) sc.seed = static_cast<std::uint64_t>(get_int(doc["seed"], "seed", 0));
  if (doc.contains("jobs")) sc.jobs = static_cast<int>(get_int(doc["jobs"], "jobs", 1));
  sc.constants.seed = sc.seed;
  sc.constants.jobs = sc.jobs;
  return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what(), e.byte);
  }
  return load_scenario(doc);
}

ScenarioResult run_scenario(const Scenario& sc, Stage stage) {
  if (!sc.system) throw ConfigError("scenario has no system");
  const System& sys = *sc.system;
  const int k = sc.k;
  ScenarioResult res;

  double R_max = 0.0;
  for (const auto& p : sc.radii) R_max = std::max(R_max, p.R);

  // Thresholds per radius pair.
  struct Thresholds {
    double U_hat_R, R_tilde, u_hat_r;
  };
  std::vector<Thresholds> th;
  const bool thresholds_given = sc.u_hat_r_override.has_value();
  if (!thresholds_given) {
    res.envelopes = du_envelopes(sys, sc.candidate, sc.envelope_radius_factor * R_max, sc.grid_per_axis,
                                 sc.random_samples, sc.seed);
  }
  for (const auto& p : sc.radii) {
    if (thresholds_given) {
      th.push_back({*sc.U_hat_R_override, *sc.R_tilde_override, *sc.u_hat_r_override});
      continue;
    }
    const DuEnvelopes& env = *res.envelopes;
    const double U_hat_R = env.d_minus_inverse(p.R);
    if (U_hat_R > env.u_max()) {
      throw DomainError("U^_R = " + format_double(U_hat_R) + " for R = " + format_double(p.R) +
                        " exceeds the trusted envelope range; raise grid.envelope_radius_factor");
    }
    th.push_back({U_hat_R, env.d_plus(U_hat_R), chi_inverse(env.d_plus_inverse(p.r), k)});
  }
  double R_tilde_max = 0.0;
  for (const auto& t : th) R_tilde_max = std::max(R_tilde_max, t.R_tilde);

  // Constants and schedules.
  res.constants = sc.constants_override ? *sc.constants_override
                                        : estimate_constants(sys, sc.candidate, R_tilde_max, sc.constants);
  for (std::size_t i = 0; i < sc.radii.size(); ++i) {
    res.schedules.push_back(step_schedule_from_thresholds(res.constants, sc.candidate, th[i].U_hat_R, th[i].R_tilde,
                                                          th[i].u_hat_r, sc.radii[i].R, sc.radii[i].r, k));
    for (std::size_t l = 0; l < res.schedules.back().delta_check.size(); ++l) {
      if (res.schedules.back().delta_check_residual[l] > 1e-12) {
        res.warnings.push_back("delta_check residual above 1e-12 for degree " + std::to_string(l + 1));
      }
    }
  }

  // Integrability of Theta near zero, needed for the cost bound.
  double U_top = 0.0;
  for (const auto& t : th) U_top = std::max(U_top, t.U_hat_R);
  try {
    (void)theta_integral_from_zero(sc.candidate, U_top, k);
  } catch (const NonIntegrableError& e) {
    res.integrability_failure = e.what();
    res.warnings.push_back(std::string("cost bound unavailable: ") + e.what());
  }

  if (stage == Stage::Asymptotic) {
    std::vector<ControlLabel> labels = sc.asymptotic.labels;
    if (labels.empty()) {
      for (const auto& l : enumerate_labels(sys, k)) {
        if (l.degree() >= 2 || k == 1) labels.push_back(l);
      }
    }
    std::vector<Vector> points = sc.asymptotic.points;
    if (points.empty()) points.push_back(Vector::Zero(sys.n()));
    std::vector<std::pair<std::string, AsymptoticStudy>> studies(labels.size() * points.size());
    parallel_indices(studies.size(), sc.jobs, [&](std::size_t i) {
      const auto& label = labels[i / points.size()];
      const auto& x = points[i % points.size()];
      studies[i] = {label.to_string() + " @ " + fmt_vec(x),
                    verify_asymptotic(sys, label, x, sc.asymptotic.horizons, sc.asymptotic.substeps)};
    });
    for (std::size_t i = 0; i < studies.size(); ++i) {
      const auto& label = labels[i / points.size()];
      const double need = sc.asymptotic.min_slope > 0.0 ? sc.asymptotic.min_slope : label.degree() + 1.0 - 0.1;
      const auto& st = studies[i].second;
      if (!st.exact && !(st.slope >= need)) {
        res.warnings.push_back("slope " + format_double(st.slope) + " below " + format_double(need) + " for " +
                               studies[i].first);
        res.exit_code = kExitAudit;
      }
    }
    res.asymptotic = std::move(studies);
    return res;
  }
  if (stage == Stage::Schedule) return res;

  // Dissipative check on the shell U^{-1}([u^_r / 2, U^_R]), enclosed by distances [d_lo, d_hi].
  const HamiltonianEvaluator evaluator(sys);
  {
    double d_lo = 0.0;
    if (sc.check_d_lo) {
      d_lo = *sc.check_d_lo;
    } else if (res.envelopes) {
      d_lo = std::numeric_limits<double>::infinity();
      for (const auto& t : th) d_lo = std::min(d_lo, res.envelopes->d_minus(t.u_hat_r / 2.0));
    }
    const double d_hi = sc.check_d_hi ? *sc.check_d_hi : R_tilde_max;
    if (!(d_hi > d_lo)) throw ConfigError("dissipative shell is empty: check_d_hi <= check_d_lo");
    std::vector<Vector> samples;
    if (sc.check_grid_per_axis >= 2) samples = shell_grid(sys.target(), d_lo, d_hi, sc.check_grid_per_axis);
    std::mt19937_64 rng(sc.seed + 17);
    auto extra = random_shell_points(sys.target(), d_lo, d_hi, sc.check_random_samples, rng);
    samples.insert(samples.end(), extra.begin(), extra.end());
    res.dissipative = check_dissipative(evaluator, sc.candidate, samples, sc.jobs);
    if (!res.dissipative->passed()) {
      res.warnings.push_back("dissipative inequality fails on " + std::to_string(res.dissipative->witnesses.size()) +
                             " of " + std::to_string(res.dissipative->evaluated) + " samples");
      if (stage == Stage::Check) res.exit_code = kExitAudit;
    }
  }
  if (stage == Stage::Check) return res;

  // Runs, one per (radius pair, initial state).
  const std::size_t S = sc.initial_states.size();
  res.runs.resize(sc.radii.size() * S);
  parallel_indices(res.runs.size(), sc.jobs, [&](std::size_t i) {
    RunResult& run = res.runs[i];
    run.radius_index = i / S;
    run.state_index = i % S;
    const StepSchedule& sched = res.schedules[run.radius_index];
    const Vector& x0 = sc.initial_states[run.state_index];
    const double d0 = sys.target().distance(x0);
    if (d0 > sched.R) {
      run.skipped = true;
      run.skip_reason = "initial distance " + format_double(d0) + " exceeds R = " + format_double(sched.R);
      run.record.x0 = x0;
      run.record.R = sched.R;
      run.record.r = sched.r;
      return;
    }
    run.record = run_process(evaluator, sc.candidate, sched, x0, sc.process);
    run.verdict = check_stabilizability(run.record, sched, sc.candidate, k);
  });

  bool audit_failed = false;
  bool numerical = false;
  for (const auto& run : res.runs) {
    if (run.skipped) {
      res.warnings.push_back("run skipped: " + run.skip_reason);
      continue;
    }
    if (run.record.termination == Termination::Diverged || run.record.termination == Termination::FeedbackFailure) {
      numerical = true;
      continue;
    }
    if (!run.record.certified) continue;
    const auto& v = run.verdict;
    const bool core = v.overshoot.passed && v.attractiveness.passed && v.entrapment.passed;
    const bool cost_ok = !sc.cost_audit || !v.cost.evaluated || v.cost.passed;
    if (!core || !cost_ok) audit_failed = true;
  }
  if (sc.cost_audit && res.integrability_failure) audit_failed = true;
  if (numerical) res.exit_code = kExitNumerical;
  else if (audit_failed) res.exit_code = kExitAudit;
  return res;
}

json ScenarioResult::summary_json(const Scenario& sc) const {
  json j;
  j["scenario"] = sc.name;
  j["seed"] = sc.seed;
  j["k"] = sc.k;
  if (sc.system) {
    j["system"] = {{"n", sc.system->n()},
                   {"m", sc.system->m()},
                   {"target", sc.system->target().kind()},
                   {"labels", enumerate_labels(*sc.system, sc.k).size()}};
  }
  j["candidate"] = {{"U", sc.candidate_U},   {"scale", sc.candidate_scale}, {"p0", sc.p0_text},
                    {"gamma", sc.gamma_text}, {"nu", sc.candidate.nu},       {"theta", sc.candidate.theta}};
  j["constants"] = constants.to_json();
  j["constants_source"] = sc.constants_override ? "override" : "estimated";
  j["schedules"] = json::array();
  for (const auto& s : schedules) j["schedules"].push_back(s.to_json());
  if (envelopes) j["envelopes"] = {{"nodes", envelopes->nodes().size()}, {"u_max", envelopes->u_max()}};
  if (dissipative) {
    j["dissipative"] = dissipative->to_json();
    j["dissipative"]["passed"] = dissipative->passed();
  }
  j["runs"] = json::array();
  for (const auto& run : runs) {
    json r = {{"radius_index", run.radius_index}, {"state_index", run.state_index}, {"skipped", run.skipped}};
    if (run.skipped) {
      r["skip_reason"] = run.skip_reason;
    } else {
      r["record"] = run.record.to_json();
      r["verdict"] = run.verdict.to_json();
      r["four_conditions"] = run.verdict.four_conditions();
    }
    j["runs"].push_back(std::move(r));
  }
  if (!asymptotic.empty()) {
    j["asymptotic"] = json::array();
    for (const auto& [name, study] : asymptotic) {
      json a = study.to_json();
      a["case"] = name;
      j["asymptotic"].push_back(std::move(a));
    }
  }
  j["warnings"] = warnings;
  j["integrability_failure"] = integrability_failure ? json(*integrability_failure) : json(nullptr);
  j["exit_code"] = exit_code;
  return j;
}

std::string ScenarioResult::report_markdown(const Scenario& sc) const {
  std::ostringstream os;
  os << "# Scenario `" << sc.name << "`\n\n";
  if (sc.system) {
    os << "System: n = " << sc.system->n() << ", m = " << sc.system->m() << ", k = " << sc.k
       << ", target " << sc.system->target().kind() << ".\n";
  }
  os << "Candidate U = " << sc.candidate_U << " (scale " << format_double(sc.candidate_scale) << "), p0(u) = "
     << sc.p0_text << ", gamma(u) = " << sc.gamma_text << ", nu = " << format_double(sc.candidate.nu) << ".\n\n";

  os << "## Constants (" << (sc.constants_override ? "override" : "estimated") << ")\n\n";
  os << "| M | omega | L_U | L_l | C_bar | theta | delta_bar |\n|---|---|---|---|---|---|---|\n";
  os << "| " << fmt(constants.M) << " | " << fmt(constants.omega) << " | " << fmt(constants.L_U) << " | "
     << fmt(constants.L_l) << " | " << fmt(constants.C_bar) << " | " << fmt(constants.theta) << " | "
     << fmt(constants.delta_bar) << " |\n\n";

  os << "## Schedules\n\n";
  os << "| R | r | U^_R | R~ | u^_r | delta_l | mu | J | T(R,r) | Lambda |\n|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& s : schedules) {
    std::string deltas;
    for (std::size_t l = 0; l < s.delta.size(); ++l) deltas += (l ? ", " : "") + fmt(s.delta[l]);
    os << "| " << fmt(s.R) << " | " << fmt(s.r) << " | " << fmt(s.U_hat_R) << " | " << fmt(s.R_tilde) << " | "
       << fmt(s.u_hat_r) << " | " << deltas << " | " << fmt(s.mu) << " | " << fmt(s.J) << " | " << fmt(s.T)
       << " | " << fmt(s.Lambda) << " |\n";
  }
  os << '\n';

  if (dissipative) {
    os << "## Dissipative check\n\n";
    os << (dissipative->passed() ? "Passed" : "Failed") << " on " << dissipative->evaluated << " of "
       << dissipative->samples << " samples; max of H + gamma(U) = " << fmt(dissipative->max_violation)
       << ", min margin " << fmt(dissipative->min_margin) << ".\n\n";
  }

  if (!runs.empty()) {
    os << "## Runs\n\n";
    os << "A priori bounds sit next to realized values.\n\n";
    os << "| run | R | r | x0 | steps | iota_r | entry time t | T bound | overshoot | Gamma | cost to entry | "
          "cost bound | (i) | (ii) | (iii) | (iv) | certified |\n";
    os << "|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& run = runs[i];
      const auto& rec = run.record;
      os << "| " << i << " | " << fmt(rec.R) << " | " << fmt(rec.r) << " | " << fmt_vec(rec.x0) << " | ";
      if (run.skipped) {
        os << "skipped: " << run.skip_reason << " | | | | | | | | | | | | |\n";
        continue;
      }
      const auto& v = run.verdict;
      os << rec.steps.size() << " | " << (rec.iota_r ? std::to_string(*rec.iota_r) : "-") << " | "
         << (rec.entry_time ? fmt(*rec.entry_time) : "-") << " | " << fmt(v.T_bound) << " | " << fmt(rec.overshoot)
         << " | " << fmt(v.Gamma) << " | " << (rec.entry_time ? fmt(rec.cost_at_entry) : "-") << " | "
         << fmt(v.cost_bound) << " | " << mark(v.overshoot) << " | " << mark(v.attractiveness) << " | "
         << mark(v.entrapment) << " | " << mark(v.cost) << " | " << (rec.certified ? "yes" : "no") << " |\n";
    }
    os << '\n';
  }

  if (!asymptotic.empty()) {
    os << "## Bracket asymptotics\n\n| case | slope | exact | fitted |\n|---|---|---|---|\n";
    for (const auto& [name, st] : asymptotic) {
      os << "| " << name << " | " << (st.exact ? "exact" : fmt(st.slope)) << " | " << (st.exact ? "yes" : "no")
         << " | " << st.fitted << " |\n";
    }
    os << '\n';
  }

  if (!warnings.empty()) {
    os << "## Warnings\n\n";
    for (const auto& w : warnings) os << "- " << w << '\n';
    os << '\n';
  }
  os << "Exit code: " << exit_code << '\n';
  return os.str();
}

void write_artifacts(const Scenario& sc, const ScenarioResult& res, Stage stage, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  write_file(out / "summary.json", res.summary_json(sc).dump(2) + "\n");
  write_file(out / "report.md", res.report_markdown(sc));
  json sched = json::array();
  for (const auto& s : res.schedules) sched.push_back(s.to_json());
  write_file(out / "schedule.json", sched.dump(2) + "\n");
  write_file(out / "constants.json", res.constants.to_json().dump(2) + "\n");
  if (res.envelopes) write_file(out / "envelopes.csv", res.envelopes->to_csv());
  if (stage == Stage::Simulate && sc.system) {
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
      if (res.runs[i].skipped) continue;
      write_file(out / ("trace_" + std::to_string(i) + ".csv"),
                 res.runs[i].record.trace_csv(sc.system->n(), sc.trace_stride));
    }
  }
}

}  // namespace bstab
