#include "bstab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bstab/errors.hpp"
#include "bstab/format.hpp"

namespace bstab {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTarget: return "reached_target";
    case Termination::SettledInside: return "settled_inside";
    case Termination::HorizonExhausted: return "horizon_exhausted";
    case Termination::MaxSteps: return "max_steps";
    case Termination::Diverged: return "diverged";
    case Termination::FeedbackFailure: return "feedback_failure";
  }
  return "unknown";
}

namespace {

nlohmann::json vec_json(const Vector& x) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

nlohmann::json maybe(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string ProcessRecord::trace_csv(int n, std::size_t stride) const {
  if (stride == 0) stride = 1;
  std::ostringstream os;
  os << 's';
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  os << ",U,d,cost,step_index,label_text\n";
  for (std::size_t idx = 0; idx < dense.size(); ++idx) {
    if (idx % stride != 0 && idx + 1 != dense.size()) continue;
    const auto& smp = dense[idx];
    os << format_double(smp.s);
    for (Eigen::Index i = 0; i < smp.x.size(); ++i) os << ',' << format_double(smp.x[i]);
    os << ',' << format_double(smp.U) << ',' << format_double(smp.d) << ',' << format_double(smp.cost) << ','
       << smp.step << ',';
    if (smp.step >= 1 && static_cast<std::size_t>(smp.step) <= steps.size()) {
      os << steps[static_cast<std::size_t>(smp.step - 1)].label.to_string();
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::json ProcessRecord::to_json() const {
  std::map<std::string, int> degree_counts;
  for (const auto& st : steps) ++degree_counts[std::to_string(st.degree)];
  nlohmann::json j = {{"x0", vec_json(x0)},
                      {"R", R},
                      {"r", r},
                      {"steps", steps.size()},
                      {"steps_by_degree", degree_counts},
                      {"termination", to_string(termination)},
                      {"overshoot", overshoot},
                      {"total_cost", total_cost},
                      {"certified", certified},
                      {"hit_target", hit_target}};
  if (!message.empty()) j["message"] = message;
  if (hit_target) {
    j["hit_time"] = hit_time;
    j["hit_state"] = vec_json(hit_state);
    j["hit_step_endpoint"] = vec_json(hit_step_endpoint);
  }
  j["entry_time"] = entry_time ? nlohmann::json(*entry_time) : nlohmann::json(nullptr);
  j["U_at_entry"] = entry_time ? nlohmann::json(u_at_entry) : nlohmann::json(nullptr);
  j["cost_at_entry"] = entry_time ? nlohmann::json(cost_at_entry) : nlohmann::json(nullptr);
  j["iota_r"] = iota_r ? nlohmann::json(*iota_r) : nlohmann::json(nullptr);
  return j;
}

ProcessRecord run_process(const HamiltonianEvaluator& evaluator, const MRFCandidate& candidate,
                          const StepSchedule& schedule, const Vector& x, const ProcessOptions& options) {
  const System& system = evaluator.system();
  const Target& target = system.target();
  const int k = system.k();
  const double Delta = static_cast<double>(k - 1) / k;
  if (!(options.step_fraction <= 1.0) || !(options.step_fraction > Delta)) {
    throw DomainError("step fraction must lie in (Delta(k), 1]");
  }
  if (x.size() != system.n()) throw DimensionError("initial state dimension does not match the system");

  ProcessRecord rec;
  rec.x0 = x;
  rec.R = schedule.R;
  rec.r = schedule.r;
  const double phi = schedule.phi;

  auto push_dense = [&](double s, const Vector& y, double cost, int step) {
    DenseSample smp{s, y, candidate.value(y), target.distance(y), cost, step};
    rec.overshoot = std::max(rec.overshoot, smp.d);
    if (!rec.entry_time && smp.U <= phi) {
      rec.entry_time = s;
      rec.entry_sample = rec.dense.size();
      rec.u_at_entry = smp.U;
      rec.cost_at_entry = cost;
    }
    rec.dense.push_back(std::move(smp));
  };

  Vector xj = x;
  double s = 0.0;
  double cost = 0.0;
  push_dense(0.0, xj, 0.0, 0);
  std::size_t entry_step = 0;

  if (target.distance(xj) <= std::max(options.integrator.target_epsilon, 0.0)) {
    rec.termination = Termination::ReachedTarget;
    rec.hit_target = true;
    rec.hit_state = xj;
    rec.hit_step_endpoint = xj;
    rec.total_cost = 0.0;
    return rec;
  }

  for (;;) {
    if (rec.steps.size() >= options.max_steps) {
      rec.termination = Termination::MaxSteps;
      break;
    }
    if (s >= options.horizon) {
      rec.termination = Termination::HorizonExhausted;
      break;
    }
    if (rec.entry_time && rec.steps.size() >= entry_step + options.post_entry_steps) {
      rec.termination = Termination::SettledInside;
      break;
    }

    FeedbackChoice choice;
    try {
      choice = feedback_generator(evaluator, candidate, xj);
    } catch (const Error& e) {
      rec.termination = Termination::FeedbackFailure;
      rec.message = e.what();
      rec.certified = false;
      break;
    }
    ProcessStep step;
    step.index = static_cast<int>(rec.steps.size()) + 1;
    step.s_start = s;
    step.label = choice.label;
    step.degree = choice.label.degree();
    step.switch_number = choice.label.switch_number();
    step.t = options.step_fraction * schedule.delta_for(step.degree);
    step.x = xj;
    step.u = choice.u;
    step.hamiltonian = choice.hamiltonian;
    step.margin_met = choice.margin_met;
    if (!choice.margin_met) rec.certified = false;

    Trajectory traj;
    try {
      traj = integrate(system, oriented_control(choice.label, step.t), xj, options.integrator);
    } catch (const DivergenceError& e) {
      rec.termination = Termination::Diverged;
      rec.message = std::string(e.what()) + " (last valid time " + format_double(s + e.last_valid_time()) + ")";
      rec.certified = false;
      break;
    }
    step.step_cost = traj.cost;
    step.u_endpoint = candidate.value(traj.endpoint);

    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
      const auto& smp = traj.samples[i];
      if (traj.hit_target && smp.s >= traj.hit_time) break;
      push_dense(s + smp.s, smp.x, cost + smp.cost, step.index);
    }
    if (rec.entry_time && entry_step == 0) entry_step = rec.steps.size() + 1;

    if (traj.hit_target) {
      push_dense(s + traj.hit_time, traj.hit_state, cost + traj.hit_cost, step.index);
      if (rec.entry_time && entry_step == 0) entry_step = rec.steps.size() + 1;
      step.hit_target = true;
      step.u_next = candidate.value(traj.hit_state);
      cost += traj.hit_cost;
      s += step.t;
      rec.steps.push_back(step);
      rec.hit_target = true;
      rec.hit_time = s - step.t + traj.hit_time;
      rec.hit_state = traj.hit_state;
      rec.hit_step_endpoint = traj.endpoint;
      rec.termination = Termination::ReachedTarget;
      break;
    }
    step.u_next = step.u_endpoint;
    cost += traj.cost;
    s += step.t;
    xj = traj.endpoint;
    rec.steps.push_back(step);
  }
  rec.total_cost = cost;

  for (const auto& st : rec.steps) {
    if (st.u_next < schedule.u_hat_r) {
      rec.iota_r = st.index;
      break;
    }
  }
  return rec;
}

nlohmann::json ConditionResult::to_json() const {
  nlohmann::json j = {{"passed", passed}, {"evaluated", evaluated}};
  if (!detail.empty()) j["detail"] = detail;
  if (first_offending) j["first_offending"] = *first_offending;
  return j;
}

bool StabilizabilityVerdict::four_conditions() const {
  return overshoot.passed && attractiveness.passed && entrapment.passed && cost.passed;
}

bool StabilizabilityVerdict::all() const {
  return four_conditions() && descent.passed && level_bounds.passed && iterations.passed && sublevel.passed &&
         cost_chain.passed && partition.passed;
}

nlohmann::json StabilizabilityVerdict::to_json() const {
  return {{"i_overshoot", overshoot.to_json()},
          {"ii_attractiveness", attractiveness.to_json()},
          {"iii_entrapment", entrapment.to_json()},
          {"iv_cost", cost.to_json()},
          {"descent", descent.to_json()},
          {"level_bounds", level_bounds.to_json()},
          {"iterations", iterations.to_json()},
          {"sublevel", sublevel.to_json()},
          {"cost_chain", cost_chain.to_json()},
          {"partition", partition.to_json()},
          {"T_bound", T_bound},
          {"Gamma", Gamma},
          {"cost_bound", maybe(cost_bound)},
          {"psi", maybe(psi_value)},
          {"chain_bound", maybe(chain_bound)},
          {"four_conditions", four_conditions()},
          {"all_checks", all()}};
}

StabilizabilityVerdict check_stabilizability(const ProcessRecord& record, const StepSchedule& schedule,
                                             const MRFCandidate& candidate, int k, double descent_tol) {
  StabilizabilityVerdict v;
  v.T_bound = schedule.T;
  v.Gamma = schedule.Gamma;
  const double phi = schedule.phi;
  const double u_r = schedule.u_hat_r;

  // (i) overshoot
  v.overshoot.name = "overshoot";
  for (std::size_t i = 0; i < record.dense.size(); ++i) {
    if (record.dense[i].d > schedule.Gamma) {
      v.overshoot.passed = false;
      v.overshoot.first_offending = i;
      v.overshoot.detail = "d = " + format_double(record.dense[i].d) + " > Gamma(R) = " + format_double(schedule.Gamma);
      break;
    }
  }
  if (v.overshoot.passed) v.overshoot.detail = "max d = " + format_double(record.overshoot);

  // (ii) attractiveness
  v.attractiveness.name = "attractiveness";
  if (!record.entry_time) {
    v.attractiveness.passed = false;
    v.attractiveness.detail = "never entered {U <= phi(r)}";
  } else {
    v.attractiveness.passed = *record.entry_time <= schedule.T;
    v.attractiveness.detail = "t = " + format_double(*record.entry_time) + ", T(R,r) = " + format_double(schedule.T);
  }

  // (iii) entrapment: after the first time with U <= phi, d <= r
  v.entrapment.name = "entrapment";
  if (record.entry_time) {
    for (std::size_t i = record.entry_sample; i < record.dense.size(); ++i) {
      if (record.dense[i].d > schedule.r) {
        v.entrapment.passed = false;
        v.entrapment.first_offending = i;
        v.entrapment.detail = "d = " + format_double(record.dense[i].d) + " > r at s = " + format_double(record.dense[i].s);
        break;
      }
    }
  } else {
    v.entrapment.detail = "vacuous: never entered {U <= phi(r)}";
  }
  v.sublevel.name = "sublevel";
  if (record.entry_time) {
    const double cap = chi_k(u_r, k);
    for (std::size_t i = record.entry_sample; i < record.dense.size(); ++i) {
      if (record.dense[i].U > cap) {
        v.sublevel.passed = false;
        v.sublevel.first_offending = i;
        v.sublevel.detail = "U = " + format_double(record.dense[i].U) + " > chi(u_r) = " + format_double(cap);
        break;
      }
    }
  }

  // (iv) cost
  v.cost.name = "cost";
  const double u0 = candidate.value(record.x0);
  if (!record.entry_time) {
    v.cost.passed = false;
    v.cost.evaluated = false;
    v.cost.detail = "no entry time";
  } else if (u0 <= phi) {
    v.cost.detail = "trivial: U(x) <= phi(r), t = 0";
    v.cost_bound = 0.0;
    v.cost.passed = record.cost_at_entry <= 0.0;
  } else {
    const double v2 = record.u_at_entry > 0.0 ? record.u_at_entry : phi;
    try {
      v.psi_value = psi(candidate, u0, v2, k);
      v.cost_bound = schedule.Lambda * v.psi_value;
      v.cost.passed = record.cost_at_entry <= v.cost_bound;
      v.cost.detail = "cost = " + format_double(record.cost_at_entry) + ", Lambda*Psi = " + format_double(v.cost_bound);
    } catch (const NonIntegrableError& e) {
      v.cost.passed = false;
      v.cost.evaluated = false;
      v.cost.detail = std::string("integrability hypothesis fails: ") + e.what();
    }
  }

  // Per-step descent and level bounds on steps starting in [u_r, U_R].
  v.descent.name = "descent";
  v.level_bounds.name = "level_bounds";
  v.partition.name = "partition";
  const double Delta = static_cast<double>(k - 1) / k;
  for (std::size_t j = 0; j < record.steps.size(); ++j) {
    const auto& st = record.steps[j];
    const double delta = schedule.delta_for(st.degree);
    if (st.t > delta * (1.0 + 1e-15) || st.t < Delta * delta) {
      if (v.partition.passed) {
        v.partition.passed = false;
        v.partition.first_offending = j;
        v.partition.detail = "t_j = " + format_double(st.t) + " outside [Delta delta, delta]";
      }
    }
    if (st.u < u_r || st.u > schedule.U_hat_R) continue;
    const double sl = static_cast<double>(st.switch_number);
    const double ratio = std::pow(st.t / sl, st.degree);
    const double lhs = st.u_endpoint - st.u +
                       std::pow(st.t, st.degree - 1) / std::pow(sl, st.degree) * candidate.p0(st.u) * st.step_cost;
    const double rhs = -0.5 * candidate.gamma(st.u) * ratio;
    if (lhs > rhs + descent_tol && v.descent.passed) {
      v.descent.passed = false;
      v.descent.first_offending = j;
      v.descent.detail = "step " + std::to_string(st.index) + ": " + format_double(lhs) + " > " + format_double(rhs);
    }
    if ((st.u_endpoint < u_r / 2.0 || !(st.u_endpoint < st.u)) && v.level_bounds.passed) {
      v.level_bounds.passed = false;
      v.level_bounds.first_offending = j;
      v.level_bounds.detail = "step " + std::to_string(st.index) + ": U(y) = " + format_double(st.u_endpoint) +
                              ", U(x) = " + format_double(st.u);
    }
  }

  v.iterations.name = "iterations";
  if (k >= 2) {
    if (record.iota_r) {
      v.iterations.passed = static_cast<double>(*record.iota_r) <= schedule.J;
      v.iterations.detail = "iota_r = " + std::to_string(*record.iota_r) + ", J = " + format_double(schedule.J);
    } else if (u0 >= u_r) {
      v.iterations.passed = false;
      v.iterations.detail = "iota_r undefined";
    }
  } else {
    v.iterations.detail = "not applicable for k = 1";
  }

  v.cost_chain.name = "cost_chain";
  if (record.entry_time && u0 > phi && record.iota_r) {
    double bound = 0.0;
    for (const auto& st : record.steps) {
      if (st.index > *record.iota_r) break;
      const double p0 = candidate.p0(st.u);
      const double sl = static_cast<double>(st.switch_number);
      bound += (p0 > 0.0 ? std::pow(sl, st.degree) / std::pow(st.t, st.degree - 1) * (st.u - st.u_next) / p0
                         : std::numeric_limits<double>::infinity());
    }
    v.chain_bound = bound;
    v.cost_chain.passed = record.cost_at_entry <= bound * (1.0 + 1e-12) + 1e-12;
    v.cost_chain.detail = "cost = " + format_double(record.cost_at_entry) + ", chain = " + format_double(bound);
  }
  return v;
}

}  // namespace bstab
