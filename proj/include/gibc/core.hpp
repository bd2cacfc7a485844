// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_CORE_HPP
#define GIBC_CORE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gibc
{

using Real = double;
using Complex = std::complex<double>;

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846264338327950288;

//
// Error categories. Every contract violation raised by the library is a gibc::Error, so
// callers can distinguish numerical-library failures from unrelated exceptions.
//
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Precondition or argument-domain violation.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

// Requested index or spectral value lies beyond the computed truncation.
class TruncationExceeded : public Error
{
public:
  using Error::Error;
};

// Iterative solver did not reach the requested residual.
class NonConvergence : public Error
{
public:
  double residual;
  NonConvergence(const std::string &what, double res) : Error(what), residual(res) {}
};

inline void require(bool cond, const std::string &msg)
{
  if (!cond)
  {
    throw InvalidArgument(msg);
  }
}

// Shared tolerances. tol_psd is relative to the matrix norm with an absolute floor.
struct Tolerances
{
  double orth_curve = 1e-10;
  double orth_surface = 1e-8;
  double eigen_residual = 1e-8;
  double psd_relative = 1e-10;
  double psd_absolute = 1e-10;
  double halfplane = 1e-8;  // scaled by (1 + |lambda|)
};

inline const Tolerances &default_tolerances()
{
  static const Tolerances tol{};
  return tol;
}

// Smallest eigenvalue of the Hermitian part (A + A^*)/2.
inline double min_hermitian_eigenvalue(const CMat &a)
{
  if (a.size() == 0)
  {
    return 0.0;
  }
  const CMat h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double psd_tolerance(double matrix_norm, const Tolerances &tol = default_tolerances())
{
  return std::max(tol.psd_absolute, tol.psd_relative * matrix_norm);
}

//
// Singular values in decreasing order, from the Hermitian eigenproblem of the smaller Gram
// matrix. Values far below the largest lose relative accuracy (absolute error about
// eps * sigma_1^2 / sigma_k), which is adequate for norms and decay profiles.
//
inline Vec singular_values(const CMat &a)
{
  if (a.size() == 0)
  {
    return Vec();
  }
  const CMat g = a.rows() >= a.cols() ? CMat(a.adjoint() * a) : CMat(a * a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
  const Vec ev = es.eigenvalues();
  Vec sv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
  {
    sv(i) = std::sqrt(std::max(0.0, ev(ev.size() - 1 - i)));
  }
  return sv;
}

inline double spectral_norm(const CMat &a)
{
  return a.size() == 0 ? 0.0 : singular_values(a)(0);
}

inline double spectral_norm(const Mat &a)
{
  return spectral_norm(CMat(a.cast<Complex>()));
}

}  // namespace gibc

#endif  // GIBC_CORE_HPP
