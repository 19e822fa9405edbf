#pragma once

#include <map>
#include <string>

#include "gmcf/grid.hpp"

namespace gmcf {

struct SpecError : std::runtime_error {
  explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Geometry selection by registry name plus parameter map.
/// Kinds: flat_cn (n), conformal_plane (psi_amp, psi_freq, psi_amp2,
/// psi_freq2), cotangent_bundle (p_box; base = flat_torus {n} or
/// torus_of_revolution {a, b}).
/// Testing knobs on any kind: corrupt_j (breaks J^2 = -Id by the given
/// amplitude), perturb_connection (adds deterministic per-point noise of the
/// given amplitude to the Christoffels).
struct GeometrySpec {
  std::string kind;
  std::map<std::string, double> params;
  std::string base_kind;
  std::map<std::string, double> base_params;

  double param(const std::string& key, double fallback) const;
  double base_param(const std::string& key, double fallback) const;
};

/// Initial immersion selection. Kinds: circle (r, cx, cy), product_torus
/// (r1, r2), zero_section, graph_of_one_form (c1, c2, pot_amp, pot_amp2),
/// perturbed (base via base_kind, eps, m1, m2 plus the base kind's params).
struct InitialSubmanifoldSpec {
  std::string kind;
  std::string base_kind;  // for kind == "perturbed"
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const;
};

struct BuiltGeometry {
  std::shared_ptr<const ChartGeometry> geometry;
  std::shared_ptr<const Connection> connection;
};

/// Construct the chart structure and its distinguished metric-and-complex
/// connection. Structure identities (and rho_hat = 0 where the construction
/// promises it) are spot-checked at build time unless a corruption knob is
/// set.
BuiltGeometry build_geometry(const GeometrySpec& spec);

/// Discretize an initial submanifold on a periodic [0,2pi)^n grid.
ImmersedGrid build_initial(const InitialSubmanifoldSpec& spec, const BuiltGeometry& built,
                           const std::vector<int>& shape, const FdScheme& scheme = {});

/// The 2-manifold base of a cotangent construction as a chart geometry of
/// its own (with the area-form compatible J). Used by tests and checks.
std::shared_ptr<const ChartGeometry> base_as_chart_geometry(
    const std::string& base_kind, const std::map<std::string, double>& base_params);

}  // namespace gmcf
