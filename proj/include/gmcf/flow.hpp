#pragma once

#include <functional>

#include "gmcf/frame.hpp"

namespace gmcf {

enum class Termination { reached_t_end, eta_degenerate, speed_blowup, chart_exit };

const char* termination_name(Termination t);

struct FlowConfig {
  enum class DtMode { fixed, cfl };
  enum class Integrator { euler, rk4 };

  DtMode dt_mode = DtMode::cfl;
  double dt = 1e-3;            // fixed mode
  double cfl_constant = 0.2;   // dt = c h^2 / max(1, sup|H| h)
  double t_end = 0.1;
  Integrator integrator = Integrator::rk4;
  int monitor_stride = 10;
  double stop_eta_margin = 1e-3;
  double stop_speed = 1e3;

  void validate() const;
};

struct MonitorRecord {
  double t = 0.0;
  int step = 0;
  double max_pullback_omega = 0.0;
  double volume = 0.0;
  double sup_speed = 0.0;
  double eta_margin = 0.0;
  double dh_residual = 0.0;
  double vector_form_mismatch = 0.0;
};

struct FlowResult {
  ImmersedGrid final_state;
  std::vector<MonitorRecord> records;
  Termination termination = Termination::reached_t_end;
};

/// Generalized mean curvature velocity (Definition 4.1 route) at every
/// node, flattened node-major. Throws SingularError on eta degeneracy.
std::vector<double> velocity_field(const ImmersedGrid& grid);

/// One explicit step of dF/dt = H_vec.
ImmersedGrid step(const ImmersedGrid& state, double dt, FlowConfig::Integrator integrator);

/// Volume = sum over nodes of sqrt(det g_ind) times the cell measure.
double grid_volume(const ImmersedGrid& grid, const FrameField& frames);

using StepHook = std::function<void(const ImmersedGrid&, int step, double t)>;

/// Integrate to t_end or a stop criterion. Deterministic: same config and
/// initial state give the same result. The final record always reflects the
/// final state.
FlowResult run(const ImmersedGrid& initial, const FlowConfig& config,
               const StepHook& hook = nullptr);

}  // namespace gmcf
