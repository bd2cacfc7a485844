// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_FGF_HPP
#define GIBC_FGF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gibc/boundary_spectrum.hpp"
#include "gibc/core.hpp"
#include "gibc/parallel.hpp"
#include "gibc/random.hpp"

namespace gibc
{

//
// One realization of the fractional Gaussian field Xi_s = sum_{n > b0} xi_n mu_n^{-s/2} Y_n,
// truncated to n_trunc modes. xi_n is keyed by (seed, n), so extending the truncation never
// changes earlier coefficients.
//
struct FgfSample
{
  SpectrumPtr spectrum;
  double s = 0.0;
  int n_trunc = 0;
  std::uint64_t seed = 0;
  Vec xi;  // zero on kernel modes
  Vec coeffs;

  // Boundary analogue of the Hurst parameter, s - (d-1)/2.
  double hurst() const { return s - 0.5 * (spectrum->dim() - 1); }
  SpectralFunction as_function() const { return {spectrum, coeffs.cast<Complex>()}; }
};

inline double fgf_gaussian(std::uint64_t seed, int mode)
{
  return CounterRng(seed, Stream::FgfGaussian).normal(static_cast<std::uint64_t>(mode));
}

inline FgfSample sample_fgf(SpectrumPtr spec, double s, int n_trunc, std::uint64_t seed)
{
  require(spec != nullptr, "FGF needs a spectrum");
  if (n_trunc > spec->count())
  {
    throw TruncationExceeded("FGF truncation exceeds the spectrum");
  }
  require(spec->b0() >= spec->count() || spec->mu(spec->b0()) > 0.0,
          "spectrum has no positive eigenvalue after the kernel");
  FgfSample out;
  out.spectrum = spec;
  out.s = s;
  out.n_trunc = n_trunc;
  out.seed = seed;
  out.xi = Vec::Zero(n_trunc);
  out.coeffs = Vec::Zero(n_trunc);
  for (int i = spec->b0(); i < n_trunc; ++i)
  {
    out.xi(i) = fgf_gaussian(seed, i);
    out.coeffs(i) = out.xi(i) * std::pow(spec->mu(i), -0.5 * s);
  }
  return out;
}

//
// H^t norms of the partial sums S_N = sum_{b0 < n <= N} alpha_n mu_n^{-s/2} Y_n at each
// checkpoint N, for a given coefficient sequence alpha (one realization).
//
inline std::vector<double> partial_sum_norms(const BoundarySpectrum &spec, const Vec &alpha,
                                             double s, double t,
                                             const std::vector<int> &checkpoints)
{
  for (std::size_t i = 0; i < checkpoints.size(); ++i)
  {
    require(i == 0 || checkpoints[i] > checkpoints[i - 1], "checkpoints must increase");
  }
  if (!checkpoints.empty() && checkpoints.back() > std::min<int>(spec.count(), static_cast<int>(alpha.size())))
  {
    throw TruncationExceeded("checkpoint beyond the available modes");
  }
  std::vector<double> out;
  out.reserve(checkpoints.size());
  double acc = 0.0;
  int n = spec.b0();
  for (int cp : checkpoints)
  {
    for (; n < cp; ++n)
    {
      const double w = ht_weight(spec.mu(n), t, false);
      const double c = alpha(n) * std::pow(spec.mu(n), -0.5 * s);
      acc += w * w * c * c;
    }
    out.push_back(std::sqrt(acc));
  }
  return out;
}

// Partial-sum norms of one FGF realization.
inline std::vector<double> partial_sum_norms(SpectrumPtr spec, double s, std::uint64_t seed,
                                             double t, const std::vector<int> &checkpoints)
{
  require(!checkpoints.empty(), "need at least one checkpoint");
  const FgfSample smp = sample_fgf(spec, s, checkpoints.back(), seed);
  return partial_sum_norms(*spec, smp.xi, s, t, checkpoints);
}

enum class Verdict
{
  Converges,
  Diverges,
  Indeterminate
};

inline std::string to_string(Verdict v)
{
  switch (v)
  {
  case Verdict::Converges:
    return "converges";
  case Verdict::Diverges:
    return "diverges";
  case Verdict::Indeterminate:
    return "indeterminate";
  }
  return "indeterminate";
}

struct ClassifierOptions
{
  double eps_conv = 0.01;
  double margin = 0.1;
  int workers = 1;
  std::uint64_t first_seed = 0;
};

struct ClassifierReport
{
  Verdict verdict = Verdict::Indeterminate;
  double threshold = 0.0;     // s - (d-1)/2
  double final_ratio = 0.0;   // median |S_2N|_t / |S_N|_t at the last doubling
  bool in_margin_band = false;
  std::vector<int> checkpoints;
  std::vector<double> median_ratios;  // one per doubling
  std::vector<double> ratio_q10;
  std::vector<double> ratio_q90;
  int seeds = 0;
};

namespace detail
{
inline double quantile(std::vector<double> v, double p)
{
  std::sort(v.begin(), v.end());
  const double pos = p * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}
}  // namespace detail

//
// Empirical H^t convergence of the FGF series: the median over seeds of the doubling ratio
// |S_2N|_t / |S_N|_t at the last checkpoint pair, against 1 + eps_conv. Inputs with
// |t - (s - (d-1)/2)| below the margin report Indeterminate; the ratios are still filled.
//
inline ClassifierReport convergence_classifier(SpectrumPtr spec, double s, double t, int seeds,
                                               const std::vector<int> &checkpoints,
                                               const ClassifierOptions &opts = {})
{
  require(seeds >= 30, "classifier needs at least 30 seeds");
  require(checkpoints.size() >= 4, "classifier needs at least 4 doubling checkpoints");
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
  {
    require(checkpoints[i] == 2 * checkpoints[i - 1], "checkpoints must double");
  }
  ClassifierReport rep;
  rep.threshold = s - 0.5 * (spec->dim() - 1);
  rep.checkpoints = checkpoints;
  rep.seeds = seeds;

  std::vector<std::vector<double>> norms(static_cast<std::size_t>(seeds));
  parallel_for(seeds, opts.workers, [&](int i) {
    norms[static_cast<std::size_t>(i)] =
        partial_sum_norms(spec, s, opts.first_seed + static_cast<std::uint64_t>(i), t, checkpoints);
  });
  for (std::size_t c = 1; c < checkpoints.size(); ++c)
  {
    std::vector<double> ratios;
    ratios.reserve(static_cast<std::size_t>(seeds));
    for (const auto &nv : norms)
    {
      ratios.push_back(nv[c] / nv[c - 1]);
    }
    rep.median_ratios.push_back(detail::quantile(ratios, 0.5));
    rep.ratio_q10.push_back(detail::quantile(ratios, 0.1));
    rep.ratio_q90.push_back(detail::quantile(ratios, 0.9));
  }
  rep.final_ratio = rep.median_ratios.back();
  rep.in_margin_band = std::abs(t - rep.threshold) < opts.margin;
  if (rep.in_margin_band)
  {
    rep.verdict = Verdict::Indeterminate;
  }
  else
  {
    rep.verdict = rep.final_ratio <= 1.0 + opts.eps_conv ? Verdict::Converges : Verdict::Diverges;
  }
  return rep;
}

//
// Nonnegative law of the kernel-mode amplitudes eta_n.
//
struct KernelLaw
{
  enum class Kind
  {
    Exponential,
    Uniform,
    Constant
  };
  Kind kind = Kind::Exponential;
  double a = 1.0;  // rate (exponential), lower bound (uniform), value (constant)
  double b = 2.0;  // upper bound (uniform)

  double draw(const CounterRng &rng, std::uint64_t index) const
  {
    switch (kind)
    {
    case Kind::Exponential:
      return rng.exponential(index, a);
    case Kind::Uniform:
      return a + (b - a) * rng.uniform(index);
    case Kind::Constant:
      return a;
    }
    return a;
  }

  void validate() const
  {
    switch (kind)
    {
    case Kind::Exponential:
      require(a > 0.0, "exponential kernel law needs a positive rate");
      break;
    case Kind::Uniform:
      require(a >= 0.0 && b > a, "uniform kernel law needs 0 <= lo < hi");
      break;
    case Kind::Constant:
      require(a > 0.0, "constant kernel law needs a positive value");
      break;
    }
  }
};

//
// Random impedance coefficient zeta = i c Xi_s + sum_{n <= b0} c_n eta_n Y_n. The FGF part
// enters with the imaginary unit, so re(zeta) is carried by the nonnegative kernel part
// alone and the multiplier by zeta is accretive for every realization.
//
struct RandomImpedanceSpec
{
  double c = 0.0;
  double s = 0.5;
  std::vector<double> kernel_weights;  // c_1..c_b0, missing entries are 0
  KernelLaw kernel_law{};

  void validate() const
  {
    require(s > 0.0, "random impedance needs an FGF index s > 0");
    for (double w : kernel_weights)
    {
      require(w >= 0.0, "kernel weights c_n must be nonnegative");
    }
    kernel_law.validate();
  }
  bool all_kernel_weights_zero() const
  {
    return std::all_of(kernel_weights.begin(), kernel_weights.end(),
                       [](double w) { return w == 0.0; });
  }
};

// The impedance theorem covers d = 2 only; other dimensions are computed but flagged.
inline bool random_impedance_in_theorem_regime(const BoundarySpectrum &spec)
{
  return spec.dim() == 2;
}

inline SpectralFunction sample_random_impedance(SpectrumPtr spec, const RandomImpedanceSpec &rs,
                                                int n_trunc, std::uint64_t seed)
{
  rs.validate();
  require(static_cast<int>(rs.kernel_weights.size()) <= spec->b0(),
          "more kernel weights than kernel modes");
  const FgfSample xi = sample_fgf(spec, rs.s, n_trunc, seed);
  CVec z = CVec::Zero(n_trunc);
  for (int i = spec->b0(); i < n_trunc; ++i)
  {
    z(i) = Complex(0.0, rs.c * xi.coeffs(i));
  }
  const CounterRng krng(seed, Stream::KernelLaw);
  for (std::size_t j = 0; j < rs.kernel_weights.size() && static_cast<int>(j) < n_trunc; ++j)
  {
    const double eta = rs.kernel_law.draw(krng, j);
    z(static_cast<Eigen::Index>(j)) = Complex(rs.kernel_weights[j] * eta, 0.0);
  }
  return {std::move(spec), z};
}

}  // namespace gibc

#endif  // GIBC_FGF_HPP
