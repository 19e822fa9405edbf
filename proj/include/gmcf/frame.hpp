#pragma once

#include "gmcf/grid.hpp"

namespace gmcf {

inline constexpr int kMaxN = 2;  // intrinsic dimension bound

/// All per-node submanifold tensors: tangent frame, induced metric,
/// omega-pullback, eta, second fundamental tensors, the auxiliary r/s/h
/// tensors, the generalized mean curvature form and both mean curvature
/// vectors. Plain value type, fixed capacity.
struct NodeFrame {
  int n = 0;    // intrinsic dim
  int dim = 0;  // ambient dim = 2n

  double F[kMaxDim] = {};
  double F_i[kMaxN][kMaxDim] = {};        // tangent vectors dF(e_i)
  double F_ij[kMaxN][kMaxN][kMaxDim] = {};
  double g[kMaxN][kMaxN] = {};            // induced metric
  double gi[kMaxN][kMaxN] = {};
  double omega[kMaxN][kMaxN] = {};        // pullback F* omega
  double eta[kMaxN][kMaxN] = {};          // g_ij - omega_i^m omega_jm
  double etai[kMaxN][kMaxN] = {};         // matrix inverse of eta
  double phi[kMaxN][kMaxDim] = {};        // phi F_k = (J F_k)^perp
  double gamma_ind[kMaxN][kMaxN][kMaxN] = {};  // induced Christoffels [m][i][j]
  double A_hat[kMaxN][kMaxN][kMaxDim] = {};    // \hat A_{ij} (index [i][j][a])
  double A_cl[kMaxN][kMaxN][kMaxDim] = {};     // classical A_{ij}
  double r_hat[kMaxN][kMaxN][kMaxN] = {};      // omega(F_k, \hat A_{ij}) [k][i][j]
  double s_hat[kMaxN][kMaxN][kMaxN] = {};      // <F_k, \hat A_{ij}>
  double h_hat[kMaxN][kMaxN][kMaxN] = {};      // <phi F_k, \hat A_{ij}>
  double H_form[kMaxN] = {};                   // \hat H_i = g^{kj} h_{kij}
  double H_classical[kMaxDim] = {};
  double H_generalized[kMaxDim] = {};
  double amb_g[kMaxDim][kMaxDim] = {};  // ambient metric at F
  double torsion_amb[kMaxDim][kMaxDim][kMaxDim] = {};  // T^a_{bc} at F
  double min_eig_eta = 0.0;
  double min_eig_g = 0.0;

  double ambient_norm(const double* v) const;
};

struct LagrangianDiagnostics {
  double max_pullback_omega = 0.0;  // sup-node |F* omega| (2-form g-norm)
  double eta_margin = 0.0;          // min over nodes of min-eig(eta)/min-eig(g)
  double dh_residual = 0.0;         // sup-node |dH + F* rho| (0 when n = 1)
  double vector_form_mismatch = 0.0;
};

struct FrameField {
  std::vector<NodeFrame> frames;
  const NodeFrame& at(int node) const { return frames[static_cast<size_t>(node)]; }
};

/// Assemble the frame at one node from precomputed immersion derivatives.
/// Throws SingularError when eta is degenerate (min-eig(eta) <
/// 1e-6 min-eig(g): the node is no longer almost Lagrangian).
NodeFrame node_frame(const ImmersedGrid& grid, const ImmersionDerivatives& derivs,
                     int node);

FrameField compute_frames(const ImmersedGrid& grid);
FrameField compute_frames(const ImmersedGrid& grid, const ImmersionDerivatives& derivs);

/// Definition of the generalized mean curvature vector: classical mean
/// curvature plus the torsion contractions (the frame already carries it).
void gmc_vector_definition(const NodeFrame& frame, double* out);

/// The same vector through the mean curvature form:
/// eta^{ij} (H_i - div omega_i - omega-s contractions) phi F_j. Needs the
/// grid for the FD divergence of F* omega; returns one ambient vector per
/// node.
std::vector<double> gmc_vector_via_form(const ImmersedGrid& grid, const FrameField& frames);

/// Residual of the torsion relation between the connection and the
/// ambient Levi-Civita connection at a chart point and vector triple.
double connection_difference_residual(const Connection& conn, const ChartPoint& at,
                                      const double* X, const double* Y, const double* Z,
                                      const FdScheme& scheme = {}, bool force_fd = false);

LagrangianDiagnostics lagrangian_diagnostics(const ImmersedGrid& grid);
LagrangianDiagnostics lagrangian_diagnostics(const ImmersedGrid& grid,
                                             const FrameField& frames);

/// Heuristic scale for FD truncation in grid quantities: h^order times a
/// measured field magnitude. Tolerances of the "within 10x the FD error"
/// kind are built on this.
double propagated_fd_error(const ImmersedGrid& grid, const FrameField& frames);

}  // namespace gmcf
