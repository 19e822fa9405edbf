#include "gmcf/flow.hpp"

#include <cmath>

namespace gmcf {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::reached_t_end: return "reached_t_end";
    case Termination::eta_degenerate: return "eta_degenerate";
    case Termination::speed_blowup: return "speed_blowup";
    case Termination::chart_exit: return "chart_exit";
  }
  return "unknown";
}

void FlowConfig::validate() const {
  if (dt_mode == DtMode::fixed) {
    if (!(dt > 0.0)) throw GeometryError("flow config: dt must be positive");
  } else {
    if (!(cfl_constant > 0.0 && cfl_constant <= 1.0))
      throw GeometryError("flow config: cfl constant must be in (0, 1]");
  }
  if (!(t_end > 0.0)) throw GeometryError("flow config: t_end must be positive");
  if (monitor_stride < 1) throw GeometryError("flow config: monitor stride must be >= 1");
}

std::vector<double> velocity_field(const ImmersedGrid& grid) {
  FrameField frames = compute_frames(grid);
  const int d = grid.geometry->dim;
  std::vector<double> v(static_cast<size_t>(grid.node_count()) * d, 0.0);
  for (int node = 0; node < grid.node_count(); ++node)
    gmc_vector_definition(frames.at(node), v.data() + static_cast<size_t>(node) * d);
  return v;
}

namespace {

struct StopSignal : std::runtime_error {
  Termination why;
  explicit StopSignal(Termination t) : std::runtime_error("stop"), why(t) {}
};

// box exits and numerical breakdown first, so evaluation failures get the
// right termination label
void classify_state(const ImmersedGrid& grid, double box_margin) {
  for (double v : grid.points)
    if (!std::isfinite(v)) throw StopSignal(Termination::speed_blowup);
  for (int node = 0; node < grid.node_count(); ++node)
    if (!grid.geometry->inside_box(grid.point(node), box_margin))
      throw StopSignal(Termination::chart_exit);
}

// Integrator-stage evaluation. A stage grid that jumps out of the box means
// the step exploded (gradual drifts are caught at the loop top with an
// adaptive margin first), so box violations here classify as blowup.
std::vector<double> velocity_checked(const ImmersedGrid& grid) {
  for (double v : grid.points)
    if (!std::isfinite(v)) throw StopSignal(Termination::speed_blowup);
  for (int node = 0; node < grid.node_count(); ++node)
    if (!grid.geometry->inside_box(grid.point(node), 2.0 * grid.scheme.step))
      throw StopSignal(Termination::speed_blowup);
  std::vector<double> v;
  try {
    v = velocity_field(grid);
  } catch (const SingularError&) {
    throw StopSignal(Termination::eta_degenerate);
  } catch (const GeometryError&) {
    throw StopSignal(Termination::eta_degenerate);
  }
  for (double x : v)
    if (!std::isfinite(x)) throw StopSignal(Termination::speed_blowup);
  return v;
}

ImmersedGrid displaced(const ImmersedGrid& g, const std::vector<double>& dir, double scale) {
  ImmersedGrid out = g;
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i] += scale * dir[i];
  return out;
}

ImmersedGrid advance(const ImmersedGrid& state, double dt,
                     FlowConfig::Integrator integrator, std::vector<double>&& k1) {
  if (integrator == FlowConfig::Integrator::euler) return displaced(state, k1, dt);
  std::vector<double> k2 = velocity_checked(displaced(state, k1, dt / 2.0));
  std::vector<double> k3 = velocity_checked(displaced(state, k2, dt / 2.0));
  std::vector<double> k4 = velocity_checked(displaced(state, k3, dt));
  ImmersedGrid out = state;
  for (std::size_t i = 0; i < out.points.size(); ++i)
    out.points[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace

ImmersedGrid step(const ImmersedGrid& state, double dt, FlowConfig::Integrator integrator) {
  std::vector<double> k1 = velocity_field(state);
  ImmersedGrid out;
  try {
    out = advance(state, dt, integrator, std::move(k1));
  } catch (const StopSignal& s) {
    if (s.why == Termination::eta_degenerate)
      throw SingularError("flow step: eta degenerate at an integrator stage");
    throw GeometryError("flow step: non-finite velocity");
  }
  for (double v : out.points)
    if (!std::isfinite(v)) throw GeometryError("flow step produced non-finite points");
  return out;
}

double grid_volume(const ImmersedGrid& grid, const FrameField& frames) {
  double cell = 1.0;
  for (double h : grid.spacing) cell *= h;
  double vol = 0.0;
  for (const NodeFrame& f : frames.frames) {
    double det = f.n == 1 ? f.g[0][0] : f.g[0][0] * f.g[1][1] - f.g[0][1] * f.g[1][0];
    vol += std::sqrt(std::max(0.0, det));
  }
  return vol * cell;
}

FlowResult run(const ImmersedGrid& initial, const FlowConfig& config, const StepHook& hook) {
  config.validate();
  initial.validate();
  FlowResult result;
  result.final_state = initial;
  ImmersedGrid state = initial;
  double t = 0.0;
  int step_idx = 0;
  Termination why = Termination::reached_t_end;

  double h_min = 1e300;
  for (double h : state.spacing) h_min = std::min(h_min, h);
  const double box_margin = 2.0 * state.scheme.step;

  auto emit = [&](const FrameField& frames, double sup_speed) {
    MonitorRecord rec;
    rec.t = t;
    rec.step = step_idx;
    LagrangianDiagnostics diag = lagrangian_diagnostics(state, frames);
    rec.max_pullback_omega = diag.max_pullback_omega;
    rec.eta_margin = diag.eta_margin;
    rec.dh_residual = diag.dh_residual;
    rec.vector_form_mismatch = diag.vector_form_mismatch;
    rec.volume = grid_volume(state, frames);
    rec.sup_speed = sup_speed;
    if (!result.records.empty() && !(t > result.records.back().t))
      result.records.pop_back();  // refresh the record for the final state
    result.records.push_back(rec);
  };

  try {
    while (true) {
      classify_state(state, box_margin);
      FrameField frames;
      try {
        frames = compute_frames(state);
      } catch (const SingularError&) {
        throw StopSignal(Termination::eta_degenerate);
      } catch (const GeometryError&) {
        throw StopSignal(Termination::eta_degenerate);
      }
      const int d = state.geometry->dim;
      std::vector<double> vel(static_cast<size_t>(state.node_count()) * d, 0.0);
      double sup_speed = 0.0;
      double eta_margin = 1e300;
      for (int node = 0; node < state.node_count(); ++node) {
        const NodeFrame& f = frames.at(node);
        gmc_vector_definition(f, vel.data() + static_cast<size_t>(node) * d);
        sup_speed = std::max(sup_speed, f.ambient_norm(f.H_generalized));
        eta_margin = std::min(eta_margin, f.min_eig_eta / f.min_eig_g);
      }
      for (double x : vel)
        if (!std::isfinite(x)) throw StopSignal(Termination::speed_blowup);

      const bool monitor_due = step_idx % config.monitor_stride == 0;
      if (monitor_due) emit(frames, sup_speed);
      if (hook) hook(state, step_idx, t);

      if (eta_margin < config.stop_eta_margin) throw StopSignal(Termination::eta_degenerate);
      if (sup_speed > config.stop_speed) throw StopSignal(Termination::speed_blowup);
      if (t >= config.t_end) break;

      double dt;
      if (config.dt_mode == FlowConfig::DtMode::fixed) {
        dt = config.dt;
      } else {
        dt = config.cfl_constant * h_min * h_min / std::max(1.0, sup_speed * h_min);
      }
      dt = std::min(dt, config.t_end - t);
      // a gradual drift reaches the boundary within one step's travel:
      // flag it as a chart exit before the integrator jumps past the edge
      classify_state(state, box_margin + dt * sup_speed);
      state = advance(state, dt, config.integrator, std::move(vel));
      t += dt;
      ++step_idx;
    }
  } catch (const StopSignal& s) {
    why = s.why;
  }

  result.termination = why;
  result.final_state = state;
  // guarantee the last record reflects the final state
  bool need_final = result.records.empty() || result.records.back().t < t ||
                    result.records.back().step != step_idx;
  if (need_final) {
    try {
      FrameField frames = compute_frames(state);
      double sup_speed = 0.0;
      for (const NodeFrame& f : frames.frames)
        sup_speed = std::max(sup_speed, f.ambient_norm(f.H_generalized));
      emit(frames, sup_speed);
      if (hook) hook(state, step_idx, t);
    } catch (...) {
      // state no longer evaluable (degenerate); keep existing records
    }
  }
  return result;
}

}  // namespace gmcf
