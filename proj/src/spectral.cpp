#include "gridfreq/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "gridfreq/error.hpp"
#include "gridfreq/random.hpp"

namespace gridfreq {

SparseMatrix build_laplacian(const GridModel& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  BusIndex index(grid);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * grid.lines.size());
  for (const auto& line : grid.lines) {
    const auto i = static_cast<Eigen::Index>(index.at(line.from));
    const auto j = static_cast<Eigen::Index>(index.at(line.to));
    if (i == j) continue;
    const double w =
        line.susceptance * grid.voltage_magnitude(grid.buses[i]) * grid.voltage_magnitude(grid.buses[j]);
    triplets.emplace_back(i, j, -w);
    triplets.emplace_back(j, i, -w);
    triplets.emplace_back(i, i, w);
    triplets.emplace_back(j, j, w);
  }
  SparseMatrix laplacian(n, n);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  laplacian.makeCompressed();
  return laplacian;
}

namespace {

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index a = 0; a < vectors.cols(); ++a) {
    const double scale = vectors.col(a).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, a)) > 1e-12 * scale) {
        if (vectors(i, a) < 0) vectors.col(a) *= -1.0;
        break;
      }
    }
  }
}

double norm_estimate(const SparseMatrix& laplacian) {
  double norm = 0.0;
  for (Eigen::Index j = 0; j < laplacian.outerSize(); ++j) {
    double column = 0.0;
    for (SparseMatrix::InnerIterator it(laplacian, j); it; ++it) column += std::abs(it.value());
    norm = std::max(norm, column);
  }
  return norm;
}

void check_residual(const SparseMatrix& laplacian, const Modes& modes) {
  const double norm = std::max(norm_estimate(laplacian), 1e-300);
  for (Eigen::Index a = 0; a < modes.count(); ++a) {
    const double residual =
        (laplacian * modes.eigenvectors.col(a) - modes.eigenvalues(a) * modes.eigenvectors.col(a)).norm();
    if (residual > 1e-8 * norm) {
      std::ostringstream os;
      os << "eigensolver did not converge: mode " << a + 1 << " residual " << residual << " exceeds "
         << 1e-8 * norm;
      throw NumericalError(os.str());
    }
  }
}

}  // namespace

Modes slow_modes(const SparseMatrix& laplacian, Eigen::Index k) {
  const Eigen::Index n = laplacian.rows();
  if (k < 2 || k > n) throw InputError("need 2 <= k <= N, got k = " + std::to_string(k));
  if (n > kDenseEigenLimit) return slow_modes_iterative(laplacian, k);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(laplacian)};
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  Modes modes;
  modes.eigenvalues = solver.eigenvalues().head(k);
  modes.eigenvectors = solver.eigenvectors().leftCols(k);
  fix_signs(modes.eigenvectors);
  check_residual(laplacian, modes);
  return modes;
}

Modes slow_modes_iterative(const SparseMatrix& laplacian, Eigen::Index k) {
  const Eigen::Index n = laplacian.rows();
  if (k < 2 || k > n) throw InputError("need 2 <= k <= N, got k = " + std::to_string(k));
  const Eigen::Index block = std::min(n, k + std::max<Eigen::Index>(k, 8));
  const double norm = std::max(norm_estimate(laplacian), 1e-300);

  SparseMatrix shifted = laplacian;
  const double shift = 1e-10 * norm;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
  if (solver.info() != Eigen::Success) throw NumericalError("factorization of the shifted Laplacian failed");

  Rng rng(12345);
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = uniform01(rng) - 0.5;

  Modes modes;
  double worst = 0.0;
  for (int iteration = 0; iteration < 2000; ++iteration) {
    Eigen::MatrixXd y = solver.solve(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    Eigen::MatrixXd projected = q.transpose() * (laplacian * q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(0.5 * (projected + projected.transpose()));
    x = q * small.eigenvectors();

    modes.eigenvalues = small.eigenvalues().head(k);
    modes.eigenvectors = x.leftCols(k);
    worst = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      worst = std::max(worst, (laplacian * modes.eigenvectors.col(a) -
                               modes.eigenvalues(a) * modes.eigenvectors.col(a)).norm());
    }
    if (worst < 1e-10 * norm) {
      fix_signs(modes.eigenvectors);
      return modes;
    }
  }
  std::ostringstream os;
  os << "subspace iteration did not converge after 2000 iterations: residual " << worst << ", norm " << norm;
  throw NumericalError(os.str());
}

FiedlerMode fiedler(const SparseMatrix& laplacian) {
  auto modes = slow_modes(laplacian, 2);
  return {modes.eigenvalues(1), modes.eigenvectors.col(1)};
}

Eigen::VectorXd fiedler_weight(const Modes& modes, double relative_tolerance) {
  if (modes.count() < 2) throw InputError("Fiedler weight needs at least two modes");
  const double lambda2 = modes.eigenvalues(1);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(modes.size());
  for (Eigen::Index a = 1; a < modes.count(); ++a) {
    if (std::abs(modes.eigenvalues(a) - lambda2) <= relative_tolerance * std::abs(lambda2))
      weight += modes.eigenvectors.col(a).cwiseAbs2();
  }
  return weight;
}

Eigen::VectorXd fiedler_weight(const GridModel& grid) {
  const auto laplacian = build_laplacian(grid);
  const Eigen::Index n = laplacian.rows();
  for (Eigen::Index k = std::min<Eigen::Index>(n, 4);; k = std::min(n, 2 * k)) {
    auto modes = slow_modes(laplacian, k);
    const double lambda2 = modes.eigenvalues(1);
    const bool complete = k == n || std::abs(modes.eigenvalues(k - 1) - lambda2) > 1e-8 * std::abs(lambda2);
    if (complete) return fiedler_weight(modes);
  }
}

double mode_frequency(const Modes& modes, const HomogeneousParams& params, Eigen::Index a) {
  const double gamma = params.gamma();
  const double nu_squared = modes.eigenvalues(a) / params.m - 0.25 * gamma * gamma;
  if (!(nu_squared > 0.0)) {
    std::ostringstream os;
    os << "mode " << a + 1 << " is overdamped: lambda/m - gamma^2/4 = " << nu_squared;
    throw InputError(os.str());
  }
  return std::sqrt(nu_squared);
}

namespace {

void check_homogeneous(const Modes& modes, const HomogeneousParams& params, Eigen::Index b) {
  if (!(params.m > 0.0) || !(params.d >= 0.0)) throw InputError("homogeneous m must be positive and d nonnegative");
  if (b < 0 || b >= modes.size()) throw InputError("fault bus position out of range");
}

}  // namespace

Eigen::VectorXd analytic_delta_omega(const Modes& modes, const HomogeneousParams& params, Eigen::Index b,
                                     double delta_p, double t) {
  check_homogeneous(modes, params, b);
  if (t < 0.0) throw InputError("t must be nonnegative");
  const double gamma = params.gamma();

  // Zero mode: limit of the oscillatory term as lambda -> 0.
  const double zero_mode = gamma > 0.0 ? -std::expm1(-gamma * t) / params.d : t / params.m;
  Eigen::VectorXd response = delta_p * zero_mode * modes.eigenvectors(b, 0) * modes.eigenvectors.col(0);

  const double envelope = delta_p * std::exp(-0.5 * gamma * t) / params.m;
  for (Eigen::Index a = 1; a < modes.count(); ++a) {
    const double nu = mode_frequency(modes, params, a);
    response += envelope * modes.eigenvectors(b, a) * std::sin(nu * t) / nu * modes.eigenvectors.col(a);
  }
  return response;
}

Eigen::VectorXd analytic_rocof(const Modes& modes, const HomogeneousParams& params, Eigen::Index b, double delta_p,
                               double t, double dt) {
  check_homogeneous(modes, params, b);
  if (t < 0.0) throw InputError("t must be nonnegative");
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  const double gamma = params.gamma();
  const double two_pi = 2.0 * std::numbers::pi;

  const double zero_mode =
      gamma > 0.0 ? std::exp(-gamma * t) * -std::expm1(-gamma * dt) / (two_pi * params.d * dt) : 1.0 / (two_pi * params.m);
  Eigen::VectorXd rocof = delta_p * zero_mode * modes.eigenvectors(b, 0) * modes.eigenvectors.col(0);

  const double envelope = delta_p * std::exp(-0.5 * gamma * t) / (two_pi * params.m);
  const double decay = std::exp(-0.5 * gamma * dt);
  for (Eigen::Index a = 1; a < modes.count(); ++a) {
    const double nu = mode_frequency(modes, params, a);
    const double bracket = decay * std::sin(nu * (t + dt)) - std::sin(nu * t);
    rocof += envelope * modes.eigenvectors(b, a) * bracket / (nu * dt) * modes.eigenvectors.col(a);
  }
  return rocof;
}

std::vector<double> mode_timescale_report(const Modes& modes, const HomogeneousParams& params, double dt) {
  std::vector<double> report;
  for (Eigen::Index a = 1; a < modes.count(); ++a) report.push_back(mode_frequency(modes, params, a) * dt);
  std::sort(report.begin(), report.end());
  return report;
}

}  // namespace gridfreq
