// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_IMPEDANCE_HPP
#define GIBC_IMPEDANCE_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <regex>
#include <sstream>
#include <string>
#include <utility>

#include "gibc/boundary_spectrum.hpp"
#include "gibc/core.hpp"
#include "gibc/multipliers.hpp"

namespace gibc
{

//
// Symbol g(mu) = c2 (mu + c1)^{t/2} of a spectral function of the boundary Laplacian.
// c2 is complex so that the imaginary-unit prefix of the grammar is just a phase.
//
struct SpectralSymbol
{
  Complex c2 = 1.0;
  double c1 = 1.0;
  double t = 0.0;

  Complex operator()(double mu) const
  {
    if (c2 == Complex(0.0))
    {
      return 0.0;
    }
    return c2 * std::pow(mu + c1, 0.5 * t);
  }
  SpectralSymbol conj() const { return {std::conj(c2), c1, t}; }
};

//
// Grammar: [+|-][i*][c2*](mu+c1)^(t/2), or a bare "0" for the zero symbol. Whitespace is
// ignored. Examples: "(mu+1)^(1/2)", "-i*2.5*(mu+1)^(1/2)", "3*(mu+0.5)^(-1/2)".
//
inline SpectralSymbol parse_symbol(const std::string &text)
{
  std::string s;
  for (char ch : text)
  {
    if (!std::isspace(static_cast<unsigned char>(ch)))
    {
      s += ch;
    }
  }
  if (s == "0")
  {
    return {0.0, 1.0, 0.0};
  }
  static const std::regex re(
      R"(^([+-])?(i\*)?(?:([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\*)?\(mu\+([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\)\^\(([+-]?[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)/2\)$)");
  std::smatch m;
  if (!std::regex_match(s, m, re))
  {
    throw InvalidArgument("symbol '" + text + "' does not match [+|-][i*][c2*](mu+c1)^(t/2)");
  }
  SpectralSymbol sym;
  double c2 = m[3].matched ? std::stod(m[3].str()) : 1.0;
  if (m[1].matched && m[1].str() == "-")
  {
    c2 = -c2;
  }
  sym.c2 = m[2].matched ? Complex(0.0, c2) : Complex(c2, 0.0);
  sym.c1 = std::stod(m[4].str());
  sym.t = std::stod(m[5].str());
  require(sym.c1 > 0.0, "symbol shift c1 must be positive");
  return sym;
}

inline std::string to_string(const SpectralSymbol &sym)
{
  std::ostringstream os;
  os.precision(17);
  if (sym.c2.imag() != 0.0)
  {
    os << (sym.c2.imag() < 0 ? "-" : "") << "i*" << std::abs(sym.c2.imag());
  }
  else
  {
    os << sym.c2.real();
  }
  os << "*(mu+" << sym.c1 << ")^(" << sym.t << "/2)";
  return os.str();
}

//
// Boundary operator Z in the Y-basis. The realized matrix is computed once at
// construction and never changes.
//
class ImpedanceOperator
{
public:
  enum class Kind
  {
    Multiplier,
    Symbol,
    Matrix
  };

  static ImpedanceOperator multiplier(const SpectralFunction &phi, int n_trunc)
  {
    ImpedanceOperator z(phi.spectrum_ptr(), Kind::Multiplier, n_trunc);
    z.phi_ = std::make_shared<const SpectralFunction>(phi);
    z.matrix_ = build_multiplier(phi, 0.0, 0.0, n_trunc).entries;
    return z;
  }

  static ImpedanceOperator symbol(SpectrumPtr spec, const SpectralSymbol &sym, int n_trunc)
  {
    ImpedanceOperator z(spec, Kind::Symbol, n_trunc);
    z.symbol_ = sym;
    z.matrix_ = CMat::Zero(n_trunc, n_trunc);
    for (int i = 0; i < n_trunc; ++i)
    {
      z.matrix_(i, i) = sym(spec->mu(i));
    }
    return z;
  }

  static ImpedanceOperator matrix(SpectrumPtr spec, CMat zhat)
  {
    require(zhat.rows() == zhat.cols(), "impedance matrix must be square");
    ImpedanceOperator z(spec, Kind::Matrix, static_cast<int>(zhat.rows()));
    z.matrix_ = std::move(zhat);
    return z;
  }

  static ImpedanceOperator zero(SpectrumPtr spec, int n_trunc)
  {
    return matrix(std::move(spec), CMat::Zero(n_trunc, n_trunc));
  }

  Kind kind() const { return kind_; }
  const BoundarySpectrum &spectrum() const { return *spec_; }
  const SpectrumPtr &spectrum_ptr() const { return spec_; }
  int n_trunc() const { return n_; }
  const CMat &matrix() const { return matrix_; }
  const SpectralFunction &phi() const
  {
    require(kind_ == Kind::Multiplier, "not a multiplier impedance");
    return *phi_;
  }
  const SpectralSymbol &spectral_symbol() const
  {
    require(kind_ == Kind::Symbol, "not a symbol impedance");
    return symbol_;
  }

private:
  ImpedanceOperator(SpectrumPtr spec, Kind kind, int n) : spec_(std::move(spec)), kind_(kind), n_(n)
  {
    require(spec_ != nullptr, "impedance needs a spectrum");
    if (n_ > spec_->count())
    {
      throw TruncationExceeded("impedance truncation exceeds the spectrum");
    }
    require(n_ >= 1, "impedance truncation must be positive");
  }

  SpectrumPtr spec_;
  Kind kind_;
  int n_;
  std::shared_ptr<const SpectralFunction> phi_;
  SpectralSymbol symbol_{};
  CMat matrix_;
};

inline std::string to_string(ImpedanceOperator::Kind k)
{
  switch (k)
  {
  case ImpedanceOperator::Kind::Multiplier:
    return "multiplier";
  case ImpedanceOperator::Kind::Symbol:
    return "symbol";
  case ImpedanceOperator::Kind::Matrix:
    return "matrix";
  }
  return "matrix";
}

namespace detail
{
inline Vec quarter_weights(const BoundarySpectrum &spec, int n, double sign)
{
  // (mu + 1)^{sign/4}
  return fractional_power_weights(spec, 0.5 * sign, 1.0, n);
}
}  // namespace detail

// Z~ = L^{-1/4} Z L^{-1/4} with L = diag(mu + 1).
inline CMat conjugate_to_l2(const ImpedanceOperator &z)
{
  const Vec w = detail::quarter_weights(z.spectrum(), z.n_trunc(), -1.0);
  return w.cast<Complex>().asDiagonal() * z.matrix() * w.cast<Complex>().asDiagonal();
}

struct AccretivityResult
{
  bool verdict;
  double min_herm_eig;
  double tolerance;
};

// At finite truncation accretive and maximal accretive coincide.
inline AccretivityResult is_accretive(const CMat &zhat, const Tolerances &tol = default_tolerances())
{
  const double lam = min_hermitian_eigenvalue(zhat);
  const double t = psd_tolerance(spectral_norm(zhat), tol);
  return {lam >= -t, lam, t};
}

inline AccretivityResult is_accretive(const ImpedanceOperator &z,
                                      const Tolerances &tol = default_tolerances())
{
  return is_accretive(z.matrix(), tol);
}

inline ImpedanceOperator natural_adjoint(const ImpedanceOperator &z)
{
  switch (z.kind())
  {
  case ImpedanceOperator::Kind::Multiplier:
    return ImpedanceOperator::multiplier(z.phi().conj(), z.n_trunc());
  case ImpedanceOperator::Kind::Symbol:
    return ImpedanceOperator::symbol(z.spectrum_ptr(), z.spectral_symbol().conj(), z.n_trunc());
  case ImpedanceOperator::Kind::Matrix:
    break;
  }
  return ImpedanceOperator::matrix(z.spectrum_ptr(), z.matrix().adjoint());
}

// Z^nat = -Z, i.e. ||Z + Z^*|| within the positivity tolerance.
inline bool selfadjointness_criterion(const ImpedanceOperator &z,
                                      const Tolerances &tol = default_tolerances())
{
  const CMat &a = z.matrix();
  return spectral_norm(CMat(a + a.adjoint())) <= psd_tolerance(spectral_norm(a), tol);
}

struct CayleyPair
{
  CMat z_tilde;
  CMat k;
  double norm_k = 0.0;
};

// K = (Z~ - I)(Z~ + I)^{-1}.
inline CayleyPair cayley(const CMat &z_tilde)
{
  require(z_tilde.rows() == z_tilde.cols(), "Cayley transform needs a square matrix");
  const Eigen::Index n = z_tilde.rows();
  const CMat id = CMat::Identity(n, n);
  const CMat plus = z_tilde + id;
  Eigen::FullPivLU<CMat> lu(plus);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
  {
    throw Error("Z~ + I is singular: -1 is an eigenvalue of Z~, so Z is not accretive");
  }
  CayleyPair out;
  out.z_tilde = z_tilde;
  out.k = (z_tilde - id) * lu.solve(id);
  out.norm_k = spectral_norm(out.k);
  return out;
}

inline CayleyPair cayley(const ImpedanceOperator &z)
{
  return cayley(conjugate_to_l2(z));
}

// Z~ = (I + K)(I - K)^{-1}.
inline CMat inverse_cayley(const CMat &k)
{
  const Eigen::Index n = k.rows();
  const CMat id = CMat::Identity(n, n);
  Eigen::FullPivLU<CMat> lu(id - k);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
  {
    throw Error("I - K is singular: 1 is an eigenvalue of K");
  }
  return (id + k) * lu.solve(id);
}

//
// De-conjugates Z~ back to L^{1/4} Z~ L^{1/4}. At finite truncation the Friedrichs
// extension of a bounded accretive matrix is the matrix itself, so the result must equal
// the realized Z; the check is kept to document that degeneracy.
//
inline CMat friedrichs_conjugated(const ImpedanceOperator &z,
                                  const Tolerances &tol = default_tolerances())
{
  const CMat zt = conjugate_to_l2(z);
  const AccretivityResult acc = is_accretive(zt, tol);
  if (!acc.verdict)
  {
    throw InvalidArgument("Friedrichs construction needs a nonnegative Hermitian part");
  }
  const Vec w = detail::quarter_weights(z.spectrum(), z.n_trunc(), 1.0);
  CMat back = w.cast<Complex>().asDiagonal() * zt * w.cast<Complex>().asDiagonal();
  const double scale = std::max(1.0, z.matrix().norm());
  if ((back - z.matrix()).norm() > 1e-12 * scale)
  {
    throw Error("de-conjugated operator differs from the realized impedance");
  }
  return back;
}

}  // namespace gibc

#endif  // GIBC_IMPEDANCE_HPP
