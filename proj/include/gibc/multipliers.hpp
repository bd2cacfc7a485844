// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_MULTIPLIERS_HPP
#define GIBC_MULTIPLIERS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gibc/boundary_spectrum.hpp"
#include "gibc/core.hpp"
#include "gibc/random.hpp"

namespace gibc
{

//
// Triple products G[k][m][n] = int Y_k Y_m Y_n dSigma for m, n < n_trunc and k over every
// retained mode of the spectrum.
//
// On curves the products are exact (product-to-sum identities) and stored as the sparse
// expansion of each product Y_m Y_n (at most four terms). On surfaces they are evaluated
// on demand from a quadrature: the vertex rule when the spectrum uses lumped mass, a
// degree-4 triangle rule when it uses consistent mass, so that G contracted with a kernel
// mode reproduces the spectrum's own Gram matrix.
//
class TripleProductTensor
{
public:
  using Expansion = std::vector<std::pair<int, double>>;

  TripleProductTensor(SpectrumPtr spec, int n_trunc) : spec_(std::move(spec)), n_(n_trunc)
  {
    require(spec_ != nullptr, "triple products need a spectrum");
    require(n_trunc >= 1 && n_trunc <= spec_->count(), "truncation exceeds the spectrum");
    if (spec_->dim() == 2)
    {
      build_curve();
    }
    else
    {
      build_surface_quadrature();
    }
  }

  const BoundarySpectrum &spectrum() const { return *spec_; }
  const SpectrumPtr &spectrum_ptr() const { return spec_; }
  int truncation() const { return n_; }

  // Expansion of Y_m Y_n in the retained modes: pairs (k, G[k][m][n]).
  Expansion product(int m, int n) const
  {
    if (spec_->dim() == 2)
    {
      return curve_products_[static_cast<std::size_t>(m) * n_ + n];
    }
    const Vec prod = quad_values_.col(m).cwiseProduct(quad_values_.col(n));
    const Vec g = quad_values_.transpose() * quad_weights_.cwiseProduct(prod);
    Expansion out;
    for (int k = 0; k < g.size(); ++k)
    {
      if (std::abs(g(k)) > 1e-15)
      {
        out.emplace_back(k, g(k));
      }
    }
    return out;
  }

  double operator()(int k, int m, int n) const
  {
    if (spec_->dim() == 2)
    {
      for (const auto &[kk, v] : curve_products_[static_cast<std::size_t>(m) * n_ + n])
      {
        if (kk == k)
        {
          return v;
        }
      }
      return 0.0;
    }
    return (quad_weights_.array() * quad_values_.col(k).array() * quad_values_.col(m).array() *
            quad_values_.col(n).array())
        .sum();
  }

  // A[m][n] = sum_k c_k G[k][n][m], the compression of multiplication by sum_k c_k Y_k.
  CMat contract(const CVec &c) const
  {
    CMat a = CMat::Zero(n_, n_);
    if (spec_->dim() == 2)
    {
      for (int m = 0; m < n_; ++m)
      {
        for (int n = 0; n <= m; ++n)
        {
          Complex acc = 0.0;
          for (const auto &[k, g] : curve_products_[static_cast<std::size_t>(m) * n_ + n])
          {
            if (k < c.size())
            {
              acc += c(k) * g;
            }
          }
          a(m, n) = acc;
          a(n, m) = acc;
        }
      }
      return a;
    }
    const Eigen::Index kk = std::min<Eigen::Index>(c.size(), quad_values_.cols());
    const CVec phi = quad_values_.leftCols(kk).cast<Complex>() * c.head(kk);
    const CVec wphi = quad_weights_.cast<Complex>().cwiseProduct(phi);
    const Mat &q = quad_values_;
    const CMat qn = q.leftCols(n_).cast<Complex>();
    a = qn.transpose() * wphi.asDiagonal() * qn;
    return a;
  }

  // Coefficients h_k = sum_{m,n} G[k][m][n] conj(g_m) g_n of |g|^2, for k < out_size.
  Vec modulus_squared_coeffs(const CVec &g, int out_size) const
  {
    Vec h = Vec::Zero(out_size);
    const int gn = std::min<int>(static_cast<int>(g.size()), n_);
    if (spec_->dim() == 2)
    {
      for (int m = 0; m < gn; ++m)
      {
        for (int n = 0; n < gn; ++n)
        {
          const double w = (std::conj(g(m)) * g(n)).real();
          for (const auto &[k, gv] : curve_products_[static_cast<std::size_t>(m) * n_ + n])
          {
            if (k < out_size)
            {
              h(k) += w * gv;
            }
          }
        }
      }
      return h;
    }
    const CVec gq = quad_values_.leftCols(gn).cast<Complex>() * g.head(gn);
    const Vec mod2 = gq.cwiseAbs2();
    const int kk = std::min<int>(out_size, static_cast<int>(quad_values_.cols()));
    h.head(kk) = quad_values_.leftCols(kk).transpose() * quad_weights_.cwiseProduct(mod2);
    return h;
  }

private:
  void build_curve()
  {
    const BoundarySpectrum &s = *spec_;
    // (component, kind, k) -> mode index
    std::map<std::tuple<int, int, int>, int> index;
    for (int i = 0; i < s.count(); ++i)
    {
      const auto &m = s.curve_modes()[static_cast<std::size_t>(i)];
      index[{m.component, static_cast<int>(m.kind), m.k}] = i;
    }
    auto lookup = [&](int comp, CurveMode::Kind kind, int k) -> int {
      auto it = index.find({comp, static_cast<int>(kind), k});
      return it == index.end() ? -1 : it->second;
    };
    curve_products_.assign(static_cast<std::size_t>(n_) * n_, {});
    for (int a = 0; a < n_; ++a)
    {
      for (int b = 0; b < n_; ++b)
      {
        const auto &ma = s.curve_modes()[static_cast<std::size_t>(a)];
        const auto &mb = s.curve_modes()[static_cast<std::size_t>(b)];
        if (ma.component != mb.component)
        {
          continue;
        }
        const int comp = ma.component;
        const double len =
            s.geometry().curve_components()[static_cast<std::size_t>(comp)].length();
        Expansion &out = curve_products_[static_cast<std::size_t>(a) * n_ + b];
        std::map<int, double> acc;
        // Adds amp * cos(f theta) or amp * sin(f theta) expressed in modes.
        auto add_cos = [&](int f, double amp) {
          f = std::abs(f);
          if (f == 0)
          {
            const int k = lookup(comp, CurveMode::Kind::Constant, 0);
            if (k >= 0)
            {
              acc[k] += amp * std::sqrt(len);
            }
            return;
          }
          const int k = lookup(comp, CurveMode::Kind::Cos, f);
          if (k >= 0)
          {
            acc[k] += amp * std::sqrt(len / 2.0);
          }
        };
        auto add_sin = [&](int f, double amp) {
          if (f == 0)
          {
            return;
          }
          if (f < 0)
          {
            f = -f;
            amp = -amp;
          }
          const int k = lookup(comp, CurveMode::Kind::Sin, f);
          if (k >= 0)
          {
            acc[k] += amp * std::sqrt(len / 2.0);
          }
        };
        using K = CurveMode::Kind;
        const double c1 = 1.0 / std::sqrt(len);
        const double c2 = std::sqrt(2.0 / len);
        if (ma.kind == K::Constant || mb.kind == K::Constant)
        {
          const CurveMode &other = ma.kind == K::Constant ? mb : ma;
          const double amp = c1 * (other.kind == K::Constant ? c1 : c2);
          if (other.kind == K::Sin)
          {
            add_sin(other.k, amp);
          }
          else
          {
            add_cos(other.k, amp);
          }
        }
        else
        {
          const double amp = 0.5 * c2 * c2;
          const int p = ma.k;
          const int q = mb.k;
          if (ma.kind == K::Cos && mb.kind == K::Cos)
          {
            add_cos(p - q, amp);
            add_cos(p + q, amp);
          }
          else if (ma.kind == K::Sin && mb.kind == K::Sin)
          {
            add_cos(p - q, amp);
            add_cos(p + q, -amp);
          }
          else
          {
            // sin(p) cos(q) = (sin(p+q) + sin(p-q)) / 2
            const int ps = ma.kind == K::Sin ? p : q;
            const int qc = ma.kind == K::Sin ? q : p;
            add_sin(ps + qc, amp);
            add_sin(ps - qc, amp);
          }
        }
        for (const auto &[k, v] : acc)
        {
          if (v != 0.0)
          {
            out.emplace_back(k, v);
          }
        }
      }
    }
  }

  void build_surface_quadrature()
  {
    const BoundarySpectrum &s = *spec_;
    const SurfaceMesh &mesh = s.geometry().surface_mesh();
    const Mat &modes = s.surface_modes();
    if (!s.consistent_mass())
    {
      quad_weights_ = s.mass().diagonal();
      quad_values_ = modes;
      return;
    }
    // Dunavant degree-4 rule, 6 points.
    const double a1 = 0.445948490915965, b1 = 0.108103018168070, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, b2 = 0.816847572980459, w2 = 0.109951743655322;
    const std::array<std::array<double, 4>, 6> rule{{{a1, a1, b1, w1},
                                                     {a1, b1, a1, w1},
                                                     {b1, a1, a1, w1},
                                                     {a2, a2, b2, w2},
                                                     {a2, b2, a2, w2},
                                                     {b2, a2, a2, w2}}};
    const Eigen::Index nq = static_cast<Eigen::Index>(mesh.triangles.size() * rule.size());
    quad_weights_.resize(nq);
    quad_values_.resize(nq, modes.cols());
    Eigen::Index q = 0;
    for (const auto &t : mesh.triangles)
    {
      const double area =
          detail::triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
      for (const auto &r : rule)
      {
        quad_weights_(q) = r[3] * area;
        quad_values_.row(q) = r[0] * modes.row(t[0]) + r[1] * modes.row(t[1]) + r[2] * modes.row(t[2]);
        ++q;
      }
    }
  }

  SpectrumPtr spec_;
  int n_;
  std::vector<Expansion> curve_products_;
  Vec quad_weights_;
  Mat quad_values_;
};

//
// Compression P_N M_phi P_N of a multiplication operator, with the Sobolev exponents of
// the intended mapping H^{s1} -> H^{-s2}.
//
struct MultiplierMatrix
{
  SpectrumPtr spectrum;
  CMat entries;
  double s1 = 0.5;
  double s2 = 0.5;
  int n_trunc = 0;

  // D(-s2) A D(-s1), the matrix whose spectral norm is the H^{s1} -> H^{-s2} norm.
  CMat weighted() const
  {
    const Vec w2 = ht_weights(*spectrum, -s2, n_trunc);
    const Vec w1 = ht_weights(*spectrum, -s1, n_trunc);
    return w2.cast<Complex>().asDiagonal() * entries * w1.cast<Complex>().asDiagonal();
  }
};

inline MultiplierMatrix build_multiplier(const TripleProductTensor &tensor,
                                         const SpectralFunction &phi, double s1, double s2)
{
  require(phi.spectrum_ptr().get() == &tensor.spectrum(),
          "multiplier symbol and tensor live on different spectra");
  MultiplierMatrix m;
  m.spectrum = tensor.spectrum_ptr();
  m.entries = tensor.contract(phi.coeffs());
  m.s1 = s1;
  m.s2 = s2;
  m.n_trunc = tensor.truncation();
  return m;
}

inline MultiplierMatrix build_multiplier(const SpectralFunction &phi, double s1, double s2,
                                         int n_trunc)
{
  if (n_trunc > phi.spectrum().count())
  {
    throw TruncationExceeded("multiplier truncation exceeds the spectrum");
  }
  const TripleProductTensor tensor(phi.spectrum_ptr(), n_trunc);
  return build_multiplier(tensor, phi, s1, s2);
}

inline Vec weighted_singular_values(const MultiplierMatrix &a)
{
  return singular_values(a.weighted());
}

inline double multiplier_norm(const MultiplierMatrix &a)
{
  return spectral_norm(a.weighted());
}

// Singular values sigma_k of the weighted matrix at the requested 1-based ranks.
inline std::vector<double> compactness_profile(const MultiplierMatrix &a,
                                               const std::vector<int> &ranks)
{
  const Vec sv = weighted_singular_values(a);
  std::vector<double> out;
  out.reserve(ranks.size());
  for (int r : ranks)
  {
    require(r >= 1 && r <= sv.size(), "rank outside the truncation");
    out.push_back(sv(r - 1));
  }
  return out;
}

struct PositivityResult
{
  bool is_nonneg;
  double min_eig;
  double tolerance;
};

// Multiplicative positivity at unit weights: phi is a nonnegative measure iff the
// Hermitian part of its multiplier is positive semidefinite.
inline PositivityResult positivity_test(const SpectralFunction &phi, int n_trunc,
                                        const Tolerances &tol = default_tolerances())
{
  const MultiplierMatrix a = build_multiplier(phi, 0.0, 0.0, n_trunc);
  const double lam = min_hermitian_eigenvalue(a.entries);
  const double t = psd_tolerance(spectral_norm(a.entries), tol);
  return {lam >= -t, lam, t};
}

//
// Checks int re(z) |g|^2 dSigma >= 0 over `test_count` random band-limited g (first n_trunc
// modes), evaluating |g|^2 through the triple-product tensor rather than the multiplier
// matrix. Tolerance is the positivity tolerance scaled by ||g||^2.
//
inline bool accretivity_integral_test(const SpectralFunction &z, int n_trunc, int test_count,
                                      std::uint64_t seed,
                                      const Tolerances &tol = default_tolerances())
{
  require(test_count >= 1, "need at least one test function");
  const TripleProductTensor tensor(z.spectrum_ptr(), n_trunc);
  const Vec re = z.coeffs().real();
  const int kk = static_cast<int>(re.size());
  // Same tolerance scale as positivity_test.
  const MultiplierMatrix a = build_multiplier(tensor, z.real(), 0.0, 0.0);
  const double t = psd_tolerance(spectral_norm(a.entries), tol);
  const CounterRng rng(seed, Stream::TestVectors);
  for (int trial = 0; trial < test_count; ++trial)
  {
    CVec g(n_trunc);
    for (int m = 0; m < n_trunc; ++m)
    {
      const std::uint64_t idx = static_cast<std::uint64_t>(trial) * n_trunc + m;
      g(m) = Complex(rng.normal(idx, 0), rng.normal(idx, 1));
    }
    const Vec h = tensor.modulus_squared_coeffs(g, kk);
    const double value = re.dot(h);
    if (value < -t * g.squaredNorm())
    {
      return false;
    }
  }
  return true;
}

//
// Case analysis for L^q(boundary) -> M(H^{s1}, H^{-s2}).
//
enum class LqCase
{
  I,
  II,
  III,
  IV,
  V,
  None
};

inline std::string to_string(LqCase c)
{
  switch (c)
  {
  case LqCase::I:
    return "i";
  case LqCase::II:
    return "ii";
  case LqCase::III:
    return "iii";
  case LqCase::IV:
    return "iv";
  case LqCase::V:
    return "v";
  case LqCase::None:
    return "none";
  }
  return "none";
}

struct LqEmbeddingQuery
{
  int d = 2;
  double s1 = 0.0;
  double s2 = 0.0;
  double q = 1.0;  // +infinity allowed

  double kappa1() const { return 2.0 * s1 / (d - 1); }
  double kappa2() const { return 2.0 * s2 / (d - 1); }
  double pi1() const { return 0.5 * (1.0 - kappa1()); }
  double pi2() const { return 0.5 * (1.0 - kappa2()); }
  double pi0() const { return (s1 + s2) / (d - 1); }
};

struct LqEmbeddingResult
{
  LqCase which;
  std::optional<bool> embeds;  // empty = unknown
};

//
// First matching sufficient condition among cases (i)-(v). Equalities are compared with a
// 1e-12 tolerance. In the two cases stated as q equal to a threshold, (iii) and (v), larger
// q also qualifies since L^q embeds into L^{q'} for q >= q' on a finite measure space.
//
inline LqEmbeddingResult lq_embedding_case(const LqEmbeddingQuery &qry)
{
  require(qry.d >= 2, "dimension d must be at least 2");
  require(qry.s1 >= 0.0 && qry.s1 <= 1.0 && qry.s2 >= 0.0 && qry.s2 <= 1.0,
          "Sobolev exponents must lie in [0, 1]");
  require(qry.q >= 1.0, "q must lie in [1, infinity]");
  constexpr double eps = 1e-12;
  const double inf = std::numeric_limits<double>::infinity();
  const double k1 = qry.kappa1();
  const double k2 = qry.kappa2();
  const double q = qry.q;
  auto eq = [&](double a, double b) { return std::abs(a - b) <= eps * std::max(1.0, std::abs(b)); };
  auto lt = [&](double a, double b) { return a < b && !eq(a, b); };
  auto le = [&](double a, double b) { return a < b || eq(a, b); };
  auto ge_q = [&](double thr) { return thr == inf ? q == inf : (q == inf || le(thr, q)); };
  auto gt_q = [&](double thr) { return thr == inf ? false : (q == inf || lt(thr, q)); };
  const double sum = qry.s1 + qry.s2;
  const double thr0 = sum > 0 ? (qry.d - 1) / sum : inf;
  const bool one1 = eq(k1, 1.0);
  const bool one2 = eq(k2, 1.0);

  if (lt(k1, 1.0) && lt(k2, 1.0) && ge_q(thr0))
  {
    return {LqCase::I, true};
  }
  if (le(k1, 1.0) && le(k2, 1.0) && (one1 || one2) && gt_q(thr0))
  {
    return {LqCase::II, true};
  }
  const double kmin = std::min(k1, k2);
  const double kmax = std::max(k1, k2);
  if (lt(kmin, 1.0) && lt(1.0, kmax) && ge_q(2.0 / (1.0 + kmin)))
  {
    return {LqCase::III, true};
  }
  if (lt(2.0, k1 + k2) && (one1 || one2) && gt_q(1.0))
  {
    return {LqCase::IV, true};
  }
  if (lt(1.0, k1) && lt(1.0, k2) && ge_q(1.0))
  {
    return {LqCase::V, true};
  }
  return {LqCase::None, std::nullopt};
}

//
// Coefficients c_n = int Y_n dmu of the symmetric Cantor probability measure with
// dissection ratio r, pushed forward to one curve component by the arclength map
// x -> x * L. The measure is sampled through its iterated function system
// {x -> r x, x -> r x + 1 - r}: the leading binary digits are stratified over the sample
// index, the rest are keyed random digits. The result is the exact coefficient vector of
// an empirical measure with equal positive weights.
//
inline SpectralFunction cantor_measure_coeffs(SpectrumPtr spec, double r, int component,
                                              int n_trunc, long samples = 1000000,
                                              std::uint64_t seed = 0)
{
  require(r > 0.0 && r < 0.5, "Cantor dissection ratio must lie in (0, 1/2)");
  require(spec != nullptr && spec->dim() == 2,
          "Cantor push-forward needs an arclength-parametrized curve (d = 2)");
  require(component >= 0 && component < spec->b0(), "unknown target component");
  require(samples >= 1, "need at least one sample");
  if (n_trunc > spec->count())
  {
    throw TruncationExceeded("Cantor coefficients exceed the spectrum truncation");
  }
  const double len =
      spec->geometry().curve_components()[static_cast<std::size_t>(component)].length();
  int kmax = 0;
  for (int i = 0; i < n_trunc; ++i)
  {
    const auto &m = spec->curve_modes()[static_cast<std::size_t>(i)];
    if (m.component == component)
    {
      kmax = std::max(kmax, m.k);
    }
  }
  // Digits until r^depth is below double resolution.
  const int depth = static_cast<int>(std::ceil(std::log(1e-17) / std::log(r)));
  int strat_bits = 0;
  while (strat_bits < 24 && (1L << (strat_bits + 1)) <= samples)
  {
    ++strat_bits;
  }
  const CounterRng rng(seed, Stream::Cantor);
  std::vector<double> csum(static_cast<std::size_t>(kmax) + 1, 0.0);
  std::vector<double> ssum(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (long i = 0; i < samples; ++i)
  {
    double x = 0.0;
    double scale = 1.0 - r;
    const std::uint64_t strat = static_cast<std::uint64_t>(i) & ((1ULL << strat_bits) - 1ULL);
    for (int j = 0; j < depth; ++j)
    {
      int digit;
      if (j < strat_bits)
      {
        digit = static_cast<int>((strat >> j) & 1ULL);
      }
      else
      {
        digit = static_cast<int>((rng.bits32(static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(j / 32)) >> (j % 32)) & 1u);
      }
      x += digit * scale;
      scale *= r;
    }
    const double theta = 2.0 * kPi * x;
    const Complex step(std::cos(theta), std::sin(theta));
    Complex z(1.0, 0.0);
    for (int k = 0; k <= kmax; ++k)
    {
      csum[static_cast<std::size_t>(k)] += z.real();
      ssum[static_cast<std::size_t>(k)] += z.imag();
      z *= step;
      if ((k & 63) == 63)
      {
        // Re-anchor to limit drift of the repeated product.
        const double th = theta * (k + 1);
        z = Complex(std::cos(th), std::sin(th));
      }
    }
  }
  CVec c = CVec::Zero(n_trunc);
  const double inv = 1.0 / static_cast<double>(samples);
  for (int i = 0; i < n_trunc; ++i)
  {
    const auto &m = spec->curve_modes()[static_cast<std::size_t>(i)];
    if (m.component != component)
    {
      continue;
    }
    switch (m.kind)
    {
    case CurveMode::Kind::Constant:
      c(i) = 1.0 / std::sqrt(len);
      break;
    case CurveMode::Kind::Cos:
      c(i) = std::sqrt(2.0 / len) * csum[static_cast<std::size_t>(m.k)] * inv;
      break;
    case CurveMode::Kind::Sin:
      c(i) = std::sqrt(2.0 / len) * ssum[static_cast<std::size_t>(m.k)] * inv;
      break;
    }
  }
  return SpectralFunction(std::move(spec), c);
}

}  // namespace gibc

#endif  // GIBC_MULTIPLIERS_HPP
