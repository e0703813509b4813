#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridfreq/grid_model.hpp"

namespace gridfreq {

using SparseMatrix = Eigen::SparseMatrix<double>;

// L_ij = -B_ij V_i V_j off the diagonal, row sums zero.
SparseMatrix build_laplacian(const GridModel& grid);

template <typename Scalar>
struct SpectralModes {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eigenvalues;
  // Column a is u_{a+1}.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;
  Eigen::Index size() const { return eigenvectors.rows(); }
  Eigen::Index count() const { return eigenvectors.cols(); }
};
using Modes = SpectralModes<double>;

struct HomogeneousParams {
  double m = 1.0;
  double d = 1.0;
  double gamma() const { return d / m; }
};

// Dense above this size is replaced by shift-invert subspace iteration.
inline constexpr Eigen::Index kDenseEigenLimit = 2000;

// k smallest eigenpairs; each eigenvector's first nonzero component is positive.
Modes slow_modes(const SparseMatrix& laplacian, Eigen::Index k);
Modes slow_modes_iterative(const SparseMatrix& laplacian, Eigen::Index k);

struct FiedlerMode {
  double value = 0.0;
  Eigen::VectorXd vector;
};
FiedlerMode fiedler(const SparseMatrix& laplacian);

// Per-bus u_2i^2, summed over every mode degenerate with lambda_2.
Eigen::VectorXd fiedler_weight(const Modes& modes, double relative_tolerance = 1e-8);

// Same, computed from the full grid.
Eigen::VectorXd fiedler_weight(const GridModel& grid);

// Angular frequency sqrt(lambda/m - gamma^2/4) of mode a >= 2; throws naming a when overdamped.
double mode_frequency(const Modes& modes, const HomogeneousParams& params, Eigen::Index a);

// Response of a grid with homogeneous m, d to a power step +delta_p at bus position b.
Eigen::VectorXd analytic_delta_omega(const Modes& modes, const HomogeneousParams& params, Eigen::Index b,
                                     double delta_p, double t);

// Closed form of the windowed RoCoF [dw(t+dt) - dw(t)] / (2 pi dt), Hz/s.
Eigen::VectorXd analytic_rocof(const Modes& modes, const HomogeneousParams& params, Eigen::Index b, double delta_p,
                               double t, double dt);

// sqrt(lambda_a/m - gamma^2/4) * dt for a >= 2, ascending.
std::vector<double> mode_timescale_report(const Modes& modes, const HomogeneousParams& params, double dt);

}  // namespace gridfreq
