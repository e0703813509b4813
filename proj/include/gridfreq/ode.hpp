#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>

#include <Eigen/Dense>

#include "gridfreq/error.hpp"

namespace gridfreq {

template <typename Scalar>
struct OdeOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(1e-12);
  // Upper bound on the internal step; zero means unbounded.
  Scalar h_max = Scalar(0);
  Scalar h_min = Scalar(1e-14);
  std::size_t max_steps = 50'000'000;
};

template <typename Scalar>
struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_calls = 0;
};

// Dormand-Prince 5(4) with FSAL. Steps are clipped to land on every output time;
// `observe(t, y)` is called at each output time (including t0 if it is listed).
// `rhs(t, y, dydt)` must fill dydt.
template <typename Scalar, typename Rhs, typename Observer>
OdeStats<Scalar> integrate_dopri5(Rhs&& rhs, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, Scalar t0,
                                  std::span<const Scalar> output_times, const OdeOptions<Scalar>& options,
                                  Observer&& observe) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5, c5 = Scalar(8) / 9;
  constexpr Scalar a21 = Scalar(1) / 5;
  constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187, a53 = Scalar(64448) / 6561,
                   a54 = Scalar(-212) / 729;
  constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33, a63 = Scalar(46732) / 5247,
                   a64 = Scalar(49) / 176, a65 = Scalar(-5103) / 18656;
  constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113, a74 = Scalar(125) / 192,
                   a75 = Scalar(-2187) / 6784, a76 = Scalar(11) / 84;
  constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695, e4 = Scalar(71) / 1920,
                   e5 = Scalar(-17253) / 339200, e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;

  OdeStats<Scalar> stats;
  const Eigen::Index n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n);

  auto fail = [](const char* what, Scalar t) {
    std::ostringstream os;
    os.precision(10);
    os << what << " at t = " << t;
    throw NumericalError(os.str());
  };

  Scalar t = t0;
  rhs(t, y, k1);
  ++stats.rhs_calls;
  Scalar h = options.h_max > 0 ? options.h_max : Scalar(1e-3);

  for (Scalar t_out : output_times) {
    if (t_out < t) fail("output times must be nondecreasing", t_out);
    while (t < t_out) {
      if (stats.accepted + stats.rejected >= options.max_steps) fail("step limit exceeded", t);
      if (options.h_max > 0) h = std::min(h, options.h_max);
      const Scalar h_proposed = h;
      bool last = false;
      if (t + h >= t_out || t_out - (t + h) < options.h_min) {
        h = t_out - t;
        last = true;
      }

      tmp = y + h * a21 * k1;
      rhs(t + c2 * h, tmp, k2);
      tmp = y + h * (a31 * k1 + a32 * k2);
      rhs(t + c3 * h, tmp, k3);
      tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * h, tmp, k4);
      tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * h, tmp, k5);
      tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + h, tmp, k6);
      y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs(t + h, y_new, k7);
      stats.rhs_calls += 6;

      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const Vec scale = (options.atol + options.rtol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).matrix();
      const Scalar error = std::sqrt((err.cwiseQuotient(scale)).squaredNorm() / Scalar(std::max<Eigen::Index>(n, 1)));
      if (!std::isfinite(error)) fail("non-finite state", t);

      if (error <= Scalar(1)) {
        t = last ? t_out : t + h;
        y.swap(y_new);
        k1.swap(k7);
        ++stats.accepted;
        const Scalar factor = error == 0 ? Scalar(5) : std::clamp(Scalar(0.9) * std::pow(error, Scalar(-0.2)), Scalar(0.2), Scalar(5));
        h = last ? std::max(h * factor, h_proposed) : h * factor;
      } else {
        ++stats.rejected;
        h *= std::max(Scalar(0.2), Scalar(0.9) * std::pow(error, Scalar(-0.2)));
        if (h < options.h_min) fail("step size underflow", t);
      }
    }
    observe(t, static_cast<const Vec&>(y));
  }
  return stats;
}

}  // namespace gridfreq
