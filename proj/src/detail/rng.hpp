#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace turnpike::detail {

// Seeded generator with portable draw functions (distribution classes in the
// standard library are implementation-defined; these are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller.
  double gaussian() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    cache_ = rad * std::sin(ang);
    have_cache_ = true;
    return rad * std::cos(ang);
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gaussian();
    return v;
  }

  Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = gaussian();
    return m;
  }

  // Uniform in the Euclidean ball of the given radius.
  Eigen::VectorXd ball_vector(int n, double radius) {
    if (n == 0) return Eigen::VectorXd(0);
    Eigen::VectorXd dir = gaussian_vector(n);
    const double nrm = dir.norm();
    if (nrm == 0.0) return Eigen::VectorXd::Zero(n);
    const double r = radius * std::pow(uniform(), 1.0 / n);
    return dir * (r / nrm);
  }

 private:
  std::mt19937_64 eng_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

}  // namespace turnpike::detail
