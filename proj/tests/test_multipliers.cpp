// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gibc/fgf.hpp"
#include "gibc/multipliers.hpp"

using namespace gibc;

namespace
{

SpectrumPtr circle_spectrum(int n, double radius = 1.0)
{
  auto g = std::make_shared<const BoundaryGeometry>(BoundaryGeometry::curves({CurveComponent::circle({0, 0}, radius)}));
  return std::make_shared<const BoundarySpectrum>(build_spectrum(g, n));
}

// Mode i of an arclength Fourier basis, from the mode descriptor alone.
double fourier_mode(const CurveMode &m, double len, double s)
{
  switch (m.kind)
  {
  case CurveMode::Kind::Constant:
    return 1.0 / std::sqrt(len);
  case CurveMode::Kind::Cos:
    return std::sqrt(2.0 / len) * std::cos(2.0 * kPi * m.k * s / len);
  case CurveMode::Kind::Sin:
    return std::sqrt(2.0 / len) * std::sin(2.0 * kPi * m.k * s / len);
  }
  return 0.0;
}

// Coefficients of a function sampled on a uniform arclength grid; trapezoid is exact for
// trigonometric polynomials of degree below the sample count.
CVec project(const SpectrumPtr &spec, int n, const std::function<double(double)> &f, int samples = 4096)
{
  const double len = spec->geometry().total_measure();
  CVec c = CVec::Zero(n);
  for (int q = 0; q < samples; ++q)
  {
    const double s = len * q / samples;
    const double v = f(s);
    for (int i = 0; i < n; ++i)
    {
      c(i) += v * fourier_mode(spec->curve_modes()[static_cast<std::size_t>(i)], len, s) * len / samples;
    }
  }
  return c;
}

}  // namespace

TEST(TripleProducts, MatchQuadratureOracle)
{
  const auto spec = circle_spectrum(41, 1.3);
  const TripleProductTensor g(spec, 15);
  const double len = spec->geometry().total_measure();
  const int samples = 512;
  for (int k = 0; k < 41; k += 3)
  {
    for (int m = 0; m < 15; ++m)
    {
      for (int n = 0; n < 15; n += 2)
      {
        double ref = 0.0;
        for (int q = 0; q < samples; ++q)
        {
          const double s = len * q / samples;
          ref += fourier_mode(spec->curve_modes()[k], len, s) * fourier_mode(spec->curve_modes()[m], len, s) *
                 fourier_mode(spec->curve_modes()[n], len, s);
        }
        ref *= len / samples;
        EXPECT_NEAR(g(k, m, n), ref, 1e-12) << k << "," << m << "," << n;
      }
    }
  }
}

TEST(TripleProducts, SurfaceKernelContractionIsGram)
{
  auto geom = std::make_shared<const BoundaryGeometry>(BoundaryGeometry::surface(icosphere(2)));
  const auto spec = std::make_shared<const BoundarySpectrum>(build_spectrum(geom, 12));
  const TripleProductTensor g(spec, 8);
  const SpectralFunction one = SpectralFunction::constant(spec, 12);
  const CMat a = g.contract(one.coeffs());
  EXPECT_LT((a - spec->gram(8).cast<Complex>()).norm(), 1e-10);
}

TEST(Multiplier, ConstantOneIsIdentity)
{
  const auto spec = circle_spectrum(81);
  const MultiplierMatrix a = build_multiplier(SpectralFunction::constant(spec, 81), 0.0, 0.0, 40);
  EXPECT_LT((a.entries - CMat::Identity(40, 40)).norm(), 1e-12);
  // Weighted at s1 = s2 = 1/2: diag(1 / (mu^{1/2} + 1)), norm attained at the kernel mode.
  const MultiplierMatrix w = build_multiplier(SpectralFunction::constant(spec, 81), 0.5, 0.5, 40);
  EXPECT_NEAR(multiplier_norm(w), 1.0, 1e-12);
  const Vec sv = weighted_singular_values(w);
  EXPECT_NEAR(sv(39), 1.0 / (std::sqrt(spec->mu(39)) + 1.0), 1e-12);
}

TEST(Multiplier, ConjugateSymbolGivesAdjoint)
{
  const auto spec = circle_spectrum(61);
  CVec c(61);
  const CounterRng rng(5);
  for (int i = 0; i < 61; ++i)
  {
    c(i) = Complex(rng.normal(i, 0), rng.normal(i, 1)) / (1.0 + i);
  }
  const SpectralFunction phi(spec, c);
  const CMat a = build_multiplier(phi, 0, 0, 30).entries;
  const CMat b = build_multiplier(phi.conj(), 0, 0, 30).entries;
  EXPECT_LT((b - a.adjoint()).norm(), 1e-12 * a.norm());
  const CMat re = build_multiplier(phi.real(), 0, 0, 30).entries;
  EXPECT_LT((re - re.adjoint()).norm(), 1e-12 * re.norm());
}

TEST(Multiplier, TruncationBeyondSpectrumThrows)
{
  const auto spec = circle_spectrum(21);
  EXPECT_THROW(build_multiplier(SpectralFunction::constant(spec, 21), 0, 0, 22), TruncationExceeded);
}

// |q|^2 for a random trigonometric polynomial q is nonnegative (Fejer-Riesz), so its
// multiplier is PSD; a mean-zero oscillation takes both signs and is not.
TEST(Positivity, FejerRieszSquaresPassOscillationsFail)
{
  const auto spec = circle_spectrum(81);
  const double len = 2.0 * kPi;
  for (int trial = 0; trial < 10; ++trial)
  {
    const CounterRng rng(100 + trial);
    std::vector<Complex> a(6);
    for (int j = 0; j < 6; ++j)
    {
      a[j] = Complex(rng.normal(j, 0), rng.normal(j, 1));
    }
    auto p = [&](double s) {
      Complex q = 0.0;
      for (int j = 0; j < 6; ++j)
      {
        q += a[j] * std::exp(Complex(0.0, 2.0 * kPi * j * s / len));
      }
      return std::norm(q);
    };
    const SpectralFunction f(spec, project(spec, 81, p, 512));
    const PositivityResult pos = positivity_test(f, 30);
    EXPECT_TRUE(pos.is_nonneg) << pos.min_eig;
    EXPECT_TRUE(accretivity_integral_test(f, 30, 40, trial));

    const int k = 1 + trial % 5;
    const SpectralFunction osc = SpectralFunction::mode(spec, 81, 2 * k - 1, 1.0);
    EXPECT_FALSE(positivity_test(osc, 30).is_nonneg);
    EXPECT_FALSE(accretivity_integral_test(osc, 30, 40, trial));
  }
}

TEST(Positivity, ImaginarySymbolIsAccretive)
{
  const auto spec = circle_spectrum(41);
  const SpectralFunction iy5 = SpectralFunction::mode(spec, 41, 4, Complex(0, 1));
  EXPECT_TRUE(accretivity_integral_test(iy5, 20, 20, 1));
  EXPECT_TRUE(accretivity_integral_test(SpectralFunction::constant(spec, 41), 20, 20, 1));
  EXPECT_FALSE(accretivity_integral_test(SpectralFunction::constant(spec, 41, -1.0), 20, 20, 1));
}

// Fourier transform of the symmetric Cantor measure:
// int cos(2 pi k x) dmu = (-1)^k prod_j cos(pi k (1 - r) r^j); sine moments vanish.
TEST(Cantor, CoefficientsMatchInfiniteProduct)
{
  const double r = 1.0 / 3.0;
  const auto spec = circle_spectrum(41);
  const double len = 2.0 * kPi;
  const SpectralFunction c = cantor_measure_coeffs(spec, r, 0, 41, 200000, 9);
  EXPECT_NEAR(c[0].real(), 1.0 / std::sqrt(len), 1e-14);
  for (int i = 1; i < 41; ++i)
  {
    const CurveMode &m = spec->curve_modes()[static_cast<std::size_t>(i)];
    double ref = 0.0;
    if (m.kind == CurveMode::Kind::Cos)
    {
      double prod = (m.k % 2 == 0) ? 1.0 : -1.0;
      for (int j = 0; j < 60; ++j)
      {
        prod *= std::cos(kPi * m.k * (1.0 - r) * std::pow(r, j));
      }
      ref = std::sqrt(2.0 / len) * prod;
    }
    EXPECT_NEAR(c[i].real(), ref, 2e-3) << "mode " << i;
    EXPECT_EQ(c[i].imag(), 0.0);
  }
  EXPECT_TRUE(positivity_test(c, 20).is_nonneg);
}

TEST(Cantor, RejectsBadRatio)
{
  const auto spec = circle_spectrum(11);
  EXPECT_THROW(cantor_measure_coeffs(spec, 0.5, 0, 11, 100), Error);
  EXPECT_THROW(cantor_measure_coeffs(spec, 0.3, 1, 11, 100), Error);
}

TEST(Compactness, ProfileIsNonincreasing)
{
  const auto spec = circle_spectrum(257);
  const SpectralFunction c = cantor_measure_coeffs(spec, 1.0 / 3.0, 0, 257, 100000, 1);
  const MultiplierMatrix a = build_multiplier(c, 0.5, 0.5, 128);
  const auto prof = compactness_profile(a, {1, 2, 4, 8, 16, 32, 64, 128});
  for (std::size_t i = 1; i < prof.size(); ++i)
  {
    EXPECT_LE(prof[i], prof[i - 1]);
  }
  EXPECT_LT(prof.back() / prof.front(), 0.05);
  EXPECT_THROW(compactness_profile(a, {129}), Error);
}

namespace
{

struct LqRow
{
  int d;
  double s1, s2, q;
  std::string label;
};

double parse_rational(const std::string &s)
{
  if (s == "inf")
  {
    return std::numeric_limits<double>::infinity();
  }
  const auto slash = s.find('/');
  if (slash == std::string::npos)
  {
    return std::stod(s);
  }
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

std::vector<LqRow> load_lq_table()
{
  std::ifstream in(std::string(GIBC_FIXTURE_DIR) + "/lq_cases.csv");
  std::vector<LqRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line))
  {
    std::stringstream ss(line);
    std::string f[5];
    for (auto &x : f)
    {
      std::getline(ss, x, ',');
    }
    rows.push_back({std::stoi(f[0]), parse_rational(f[1]), parse_rational(f[2]), parse_rational(f[3]), f[4]});
  }
  return rows;
}

}  // namespace

TEST(LqEmbedding, MatchesReferenceTable)
{
  const auto rows = load_lq_table();
  ASSERT_EQ(rows.size(), 200u);
  for (const auto &r : rows)
  {
    const LqEmbeddingResult res = lq_embedding_case({r.d, r.s1, r.s2, r.q});
    EXPECT_EQ(to_string(res.which), r.label) << r.d << " " << r.s1 << " " << r.s2 << " " << r.q;
    EXPECT_EQ(res.embeds.has_value(), r.label != "none");
  }
}

TEST(LqEmbedding, NamedPoints)
{
  EXPECT_EQ(lq_embedding_case({3, 0.5, 0.5, 2.0}).which, LqCase::I);
  EXPECT_EQ(lq_embedding_case({2, 0.5, 0.5, 1.5}).which, LqCase::II);
  EXPECT_EQ(lq_embedding_case({2, 1.0, 1.0, 1.0}).which, LqCase::V);
  EXPECT_EQ(lq_embedding_case({2, 0.5, 0.5, 1.0}).which, LqCase::None);
  EXPECT_THROW(lq_embedding_case({2, 1.5, 0.5, 2.0}), Error);
  EXPECT_THROW(lq_embedding_case({2, 0.5, 0.5, 0.5}), Error);
  EXPECT_THROW(lq_embedding_case({1, 0.5, 0.5, 2.0}), Error);
}

TEST(Fgf, ExtendingTruncationKeepsCoefficients)
{
  const auto spec = circle_spectrum(201);
  const FgfSample a = sample_fgf(spec, 1.0, 100, 17);
  const FgfSample b = sample_fgf(spec, 1.0, 200, 17);
  EXPECT_EQ(a.coeffs, b.coeffs.head(100));
  EXPECT_EQ(a.coeffs(0), 0.0);
  EXPECT_DOUBLE_EQ(a.hurst(), 0.5);
  EXPECT_NE(sample_fgf(spec, 1.0, 100, 18).coeffs, a.coeffs);
  EXPECT_THROW(sample_fgf(spec, 1.0, 202, 1), TruncationExceeded);
}

TEST(Fgf, ModeVarianceFollowsPowerLaw)
{
  const auto spec = circle_spectrum(64);
  const double s = 0.7;
  const int m = 2000;
  for (int mode : {1, 2, 7, 20, 63})
  {
    double acc = 0.0;
    for (int seed = 0; seed < m; ++seed)
    {
      const double c = fgf_gaussian(seed, mode) * std::pow(spec->mu(mode), -0.5 * s);
      acc += c * c;
    }
    const double expect = std::pow(spec->mu(mode), -s);
    EXPECT_NEAR(acc / m / expect, 1.0, 5.0 / std::sqrt(m)) << mode;
  }
}

TEST(Fgf, ClassifierOnCircle)
{
  const auto spec = circle_spectrum(4096);
  const std::vector<int> cps{64, 128, 256, 512, 1024, 2048, 4096};
  EXPECT_EQ(convergence_classifier(spec, 1.0, 0.0, 50, cps).verdict, Verdict::Converges);
  EXPECT_EQ(convergence_classifier(spec, 1.0, 1.0, 50, cps).verdict, Verdict::Diverges);
  const ClassifierReport band = convergence_classifier(spec, 1.0, 0.52, 50, cps);
  EXPECT_EQ(band.verdict, Verdict::Indeterminate);
  EXPECT_TRUE(band.in_margin_band);
  EXPECT_EQ(band.median_ratios.size(), cps.size() - 1);
  EXPECT_THROW(convergence_classifier(spec, 1.0, 0.0, 10, cps), Error);
  EXPECT_THROW(convergence_classifier(spec, 1.0, 0.0, 50, {64, 128, 256}), Error);
}

// Sphere: the median doubling ratio tracks the ratio of expected squared norms,
// sum w_t(mu)^2 mu^{-s}, summed directly.
TEST(Fgf, ClassifierOnSphereAgreesWithExpectedSeries)
{
  auto geom = std::make_shared<const BoundaryGeometry>(BoundaryGeometry::surface(icosphere(3)));
  const auto spec = std::make_shared<const BoundarySpectrum>(build_spectrum(geom, 128));
  const std::vector<int> cps{16, 32, 64, 128};
  const double s = 1.0;
  for (double t : {-1.0, 0.5})
  {
    const ClassifierReport r = convergence_classifier(spec, s, t, 60, cps);
    EXPECT_EQ(r.verdict, t < 0.0 ? Verdict::Converges : Verdict::Diverges) << t;
    double e64 = 0, e128 = 0;
    for (int n = spec->b0(); n < 128; ++n)
    {
      const double mu = spec->mu(n);
      const double w2 = t >= 0 ? std::pow(mu, t) + 1.0 : 1.0 / (std::pow(mu, -t) + 1.0);
      (n < 64 ? e64 : e128) += w2 * std::pow(mu, -s);
    }
    const double expected_ratio = std::sqrt((e64 + e128) / e64);
    EXPECT_NEAR(r.final_ratio, expected_ratio, 0.1 * (expected_ratio - 1.0) + 0.005) << t;
  }
}

TEST(RandomImpedance, FgfPartIsImaginaryKernelPartNonnegative)
{
  const auto spec = circle_spectrum(101);
  RandomImpedanceSpec rs;
  rs.c = 2.0;
  rs.s = 0.3;
  rs.kernel_weights = {1.5};
  for (std::uint64_t seed = 0; seed < 20; ++seed)
  {
    const SpectralFunction z = sample_random_impedance(spec, rs, 101, seed);
    EXPECT_EQ(z.coeffs().tail(100).real().norm(), 0.0);
    EXPECT_GT(z[0].real(), 0.0);
    EXPECT_EQ(z[0].imag(), 0.0);
    EXPECT_TRUE(positivity_test(z.real(), 30).is_nonneg);
    const FgfSample xi = sample_fgf(spec, 0.3, 101, seed);
    EXPECT_NEAR(z[7].imag(), 2.0 * xi.coeffs(7), 1e-15);
  }
  rs.kernel_weights = {1.0, 1.0};
  EXPECT_THROW(sample_random_impedance(spec, rs, 101, 0), Error);
  rs.kernel_weights = {-1.0};
  EXPECT_THROW(sample_random_impedance(spec, rs, 101, 0), Error);
  EXPECT_TRUE(random_impedance_in_theorem_regime(*spec));
}

TEST(RandomImpedance, KernelLawsDrawInRange)
{
  const CounterRng rng(3, Stream::KernelLaw);
  KernelLaw u{KernelLaw::Kind::Uniform, 0.5, 2.0};
  KernelLaw c{KernelLaw::Kind::Constant, 3.0, 0.0};
  for (int i = 0; i < 1000; ++i)
  {
    const double v = u.draw(rng, i);
    EXPECT_GE(v, 0.5);
    EXPECT_LE(v, 2.0);
    EXPECT_EQ(c.draw(rng, i), 3.0);
  }
  EXPECT_THROW((KernelLaw{KernelLaw::Kind::Exponential, 0.0, 0.0}.validate()), Error);
  EXPECT_THROW((KernelLaw{KernelLaw::Kind::Uniform, 2.0, 1.0}.validate()), Error);
}
