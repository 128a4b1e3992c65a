#ifndef CONVEYANCE_TRIDIAGONAL_HPP
#define CONVEYANCE_TRIDIAGONAL_HPP

// Tridiagonal kernels: the Thomas solve used by every implicit step, and thin
// wrappers over LAPACK's symmetric tridiagonal eigensolvers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <Eigen/Dense>

#include "conveyance/error.hpp"

namespace conveyance::linalg {

/// Solves a tridiagonal system in place.
///
/// `lower[j]` couples row j to j-1 (lower[0] unused), `upper[j]` couples row j
/// to j+1 (upper[n-1] unused). `scratch` must hold n values; `rhs` is
/// overwritten with the solution.
template <typename T>
void solve_tridiagonal(std::span<const T> lower, std::span<const T> diag, std::span<const T> upper,
                       std::span<T> rhs, std::span<T> scratch) {
  const std::size_t n = diag.size();
  require(lower.size() == n && upper.size() == n && rhs.size() == n && scratch.size() >= n,
          ErrorKind::dimension, "tridiagonal solve: inconsistent sizes");
  constexpr double tiny = 1e-300;
  T pivot = diag[0];
  if (std::abs(pivot) < tiny) throw NumericFailure("tridiagonal solve: zero pivot at row 0", 0);
  rhs[0] /= pivot;
  for (std::size_t j = 1; j < n; ++j) {
    scratch[j] = upper[j - 1] / pivot;
    pivot = diag[j] - lower[j] * scratch[j];
    if (std::abs(pivot) < tiny)
      throw NumericFailure("tridiagonal solve: zero pivot at row " + std::to_string(j),
                           static_cast<long>(j));
    rhs[j] = (rhs[j] - lower[j] * rhs[j - 1]) / pivot;
  }
  for (std::size_t j = n - 1; j-- > 0;) rhs[j] -= scratch[j + 1] * rhs[j + 1];
}

/// Convenience overload for a constant off-diagonal (symmetric kinetic term).
template <typename T>
void solve_tridiagonal(T off, std::span<const T> diag, std::span<T> rhs, std::span<T> scratch) {
  const std::size_t n = diag.size();
  require(rhs.size() == n && scratch.size() >= n, ErrorKind::dimension,
          "tridiagonal solve: inconsistent sizes");
  constexpr double tiny = 1e-300;
  T pivot = diag[0];
  if (std::abs(pivot) < tiny) throw NumericFailure("tridiagonal solve: zero pivot at row 0", 0);
  rhs[0] /= pivot;
  for (std::size_t j = 1; j < n; ++j) {
    scratch[j] = off / pivot;
    pivot = diag[j] - off * scratch[j];
    if (std::abs(pivot) < tiny)
      throw NumericFailure("tridiagonal solve: zero pivot at row " + std::to_string(j),
                           static_cast<long>(j));
    rhs[j] = (rhs[j] - off * rhs[j - 1]) / pivot;
  }
  for (std::size_t j = n - 1; j-- > 0;) rhs[j] -= scratch[j + 1] * rhs[j + 1];
}

/// Eigenpairs of a real symmetric tridiagonal matrix; vectors are columns.
struct TridiagonalEigen {
  std::vector<double> values;
  Eigen::MatrixXd vectors;
};

namespace detail {
inline void check_info(lapack_int info, const char* routine) {
  if (info != 0)
    throw NumericFailure(std::string(routine) + " failed with info=" + std::to_string(info),
                         static_cast<long>(info));
}
}  // namespace detail

/// All eigenvalues (ascending), no vectors.
inline std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag,
                                                   std::span<const double> off) {
  const auto n = static_cast<lapack_int>(diag.size());
  require(off.size() + 1 == diag.size(), ErrorKind::dimension, "off-diagonal size must be n-1");
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> e(off.begin(), off.end());
  e.push_back(0.0);
  detail::check_info(LAPACKE_dsterf(n, d.data(), e.data()), "dsterf");
  return d;
}

/// Full spectrum with orthonormal eigenvectors (divide and conquer).
inline TridiagonalEigen tridiagonal_eigensystem(std::span<const double> diag,
                                                std::span<const double> off) {
  const auto n = static_cast<lapack_int>(diag.size());
  require(off.size() + 1 == diag.size(), ErrorKind::dimension, "off-diagonal size must be n-1");
  TridiagonalEigen out;
  out.values.assign(diag.begin(), diag.end());
  std::vector<double> e(off.begin(), off.end());
  e.push_back(0.0);
  out.vectors.resize(n, n);
  detail::check_info(LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, out.values.data(), e.data(),
                                    out.vectors.data(), n),
                     "dstevd");
  return out;
}

/// Eigenpairs with 0-based indices first..last (ascending order), by
/// bisection and inverse iteration; cost is linear in n per pair.
inline TridiagonalEigen tridiagonal_eigenpairs(std::span<const double> diag,
                                               std::span<const double> off, int first, int last) {
  const auto n = static_cast<lapack_int>(diag.size());
  require(off.size() + 1 == diag.size(), ErrorKind::dimension, "off-diagonal size must be n-1");
  require(0 <= first && first <= last && last < n, ErrorKind::invalid_argument,
          "eigenpair index range out of bounds");
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> e(off.begin(), off.end());
  e.push_back(0.0);
  const lapack_int count = last - first + 1;
  std::vector<double> w(n);
  std::vector<lapack_int> ifail(n);
  Eigen::MatrixXd z(n, count);
  lapack_int found = 0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  detail::check_info(LAPACKE_dstevx(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0,
                                    first + 1, last + 1, abstol, &found, w.data(), z.data(), n,
                                    ifail.data()),
                     "dstevx");
  require(found == count, ErrorKind::numeric_failure, "dstevx returned too few eigenpairs");
  TridiagonalEigen out;
  out.values.assign(w.begin(), w.begin() + count);
  out.vectors = std::move(z);
  return out;
}

/// Eigenpairs whose eigenvalues fall in (lower, upper].
inline TridiagonalEigen tridiagonal_eigenpairs_in(std::span<const double> diag,
                                                  std::span<const double> off, double lower,
                                                  double upper) {
  const auto n = static_cast<lapack_int>(diag.size());
  require(off.size() + 1 == diag.size(), ErrorKind::dimension, "off-diagonal size must be n-1");
  require(lower < upper, ErrorKind::invalid_argument, "empty eigenvalue interval");
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> e(off.begin(), off.end());
  e.push_back(0.0);
  // count first so the vector block is sized to fit
  lapack_int found = 0;
  std::vector<double> w(n);
  std::vector<lapack_int> ifail(n);
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  double dummy = 0.0;
  detail::check_info(LAPACKE_dstevx(LAPACK_COL_MAJOR, 'N', 'V', n, d.data(), e.data(), lower,
                                    upper, 0, 0, abstol, &found, w.data(), &dummy, 1,
                                    ifail.data()),
                     "dstevx");
  TridiagonalEigen out;
  if (found == 0) return out;
  d.assign(diag.begin(), diag.end());
  e.assign(off.begin(), off.end());
  e.push_back(0.0);
  Eigen::MatrixXd z(n, found);
  lapack_int again = 0;
  detail::check_info(LAPACKE_dstevx(LAPACK_COL_MAJOR, 'V', 'V', n, d.data(), e.data(), lower,
                                    upper, 0, 0, abstol, &again, w.data(), z.data(), n,
                                    ifail.data()),
                     "dstevx");
  require(again == found, ErrorKind::numeric_failure, "dstevx changed its eigenvalue count");
  out.values.assign(w.begin(), w.begin() + found);
  out.vectors = std::move(z);
  return out;
}

}  // namespace conveyance::linalg

#endif  // CONVEYANCE_TRIDIAGONAL_HPP
