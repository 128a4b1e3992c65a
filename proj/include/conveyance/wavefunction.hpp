#ifndef CONVEYANCE_WAVEFUNCTION_HPP
#define CONVEYANCE_WAVEFUNCTION_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "conveyance/error.hpp"

namespace conveyance {

using cplx = std::complex<double>;

/// Uniform 1D mesh x_j = x_min + j*dx, j = 0..n_points-1.
///
/// The wavefunction is taken to vanish one step outside either end (hard
/// walls), so the trapezoidal rule on the extended mesh reduces to dx times
/// the plain sum over the stored points. All inner products use that rule.
class Grid {
 public:
  Grid(double x_min, double x_max, double dx) : x_min_(x_min), x_max_(x_max), dx_(dx) {
    require(std::isfinite(x_min) && std::isfinite(x_max), ErrorKind::invalid_argument,
            "grid bounds must be finite");
    require(dx > 0.0, ErrorKind::invalid_argument, "grid spacing must be positive");
    require(x_max > x_min, ErrorKind::invalid_argument, "x_max must exceed x_min");
    const double span = (x_max - x_min) / dx;
    n_ = static_cast<std::size_t>(std::llround(span)) + 1;
    require(n_ >= 3, ErrorKind::invalid_argument, "grid needs at least 3 points");
  }

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double dx() const noexcept { return dx_; }
  std::size_t size() const noexcept { return n_; }
  double x(std::size_t j) const noexcept { return x_min_ + static_cast<double>(j) * dx_; }

  /// Nearest grid index to x, clamped into the mesh.
  std::size_t index_near(double x) const noexcept {
    const double j = std::round((x - x_min_) / dx_);
    if (j <= 0.0) return 0;
    if (j >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(j);
  }

  std::vector<double> points() const {
    std::vector<double> xs(n_);
    for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
    return xs;
  }

  bool same_as(const Grid& other) const noexcept {
    return n_ == other.n_ && std::abs(dx_ - other.dx_) <= 1e-12 * dx_ &&
           std::abs(x_min_ - other.x_min_) <= 1e-9 * dx_;
  }

 private:
  double x_min_;
  double x_max_;
  double dx_;
  std::size_t n_;
};

/// <a|b> with the hard-wall trapezoidal rule.
inline cplx inner_product(std::span<const cplx> a, std::span<const cplx> b, double dx) {
  require(a.size() == b.size(), ErrorKind::dimension, "inner product of mismatched vectors");
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::conj(a[j]) * b[j];
  return acc * dx;
}

inline double norm_squared(std::span<const cplx> a, double dx) {
  double acc = 0.0;
  for (const auto& z : a) acc += std::norm(z);
  return acc * dx;
}

/// Complex amplitudes sampled on a Grid.
class WaveFunction {
 public:
  explicit WaveFunction(Grid grid) : grid_(std::move(grid)), amp_(grid_.size(), cplx{}) {}

  WaveFunction(Grid grid, std::vector<cplx> amplitudes)
      : grid_(std::move(grid)), amp_(std::move(amplitudes)) {
    require(amp_.size() == grid_.size(), ErrorKind::dimension,
            "amplitude count does not match grid size");
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return amp_.size(); }

  std::span<const cplx> values() const noexcept { return amp_; }
  std::span<cplx> values() noexcept { return amp_; }

  cplx operator[](std::size_t j) const noexcept { return amp_[j]; }
  cplx& operator[](std::size_t j) noexcept { return amp_[j]; }

  double norm() const { return std::sqrt(norm_squared(amp_, grid_.dx())); }

  void normalize() {
    const double n = norm();
    require(n > 0.0 && std::isfinite(n), ErrorKind::numeric_failure,
            "cannot normalize a zero or non-finite state");
    for (auto& z : amp_) z /= n;
  }

  WaveFunction normalized() const {
    WaveFunction copy(*this);
    copy.normalize();
    return copy;
  }

  /// <this|other>
  cplx overlap(const WaveFunction& other) const {
    require(grid_.same_as(other.grid_), ErrorKind::dimension, "states live on different grids");
    return inner_product(amp_, other.amp_, grid_.dx());
  }

  /// Multiplies by exp(i k x); used for Galilean momentum boosts.
  WaveFunction boosted(double wave_number) const {
    WaveFunction out(*this);
    for (std::size_t j = 0; j < amp_.size(); ++j)
      out.amp_[j] *= std::polar(1.0, wave_number * grid_.x(j));
    return out;
  }

 private:
  Grid grid_;
  std::vector<cplx> amp_;
};

}  // namespace conveyance

#endif  // CONVEYANCE_WAVEFUNCTION_HPP
