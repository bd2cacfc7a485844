// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "gibc/boundary_spectrum.hpp"
#include "gibc/random.hpp"

using namespace gibc;

namespace
{

std::shared_ptr<const BoundaryGeometry> unit_circle()
{
  return std::make_shared<const BoundaryGeometry>(BoundaryGeometry::curves({CurveComponent::circle({0, 0}, 1.0)}));
}

std::shared_ptr<const BoundaryGeometry> unit_square()
{
  return std::make_shared<const BoundaryGeometry>(
      BoundaryGeometry::curves({CurveComponent::polyline({{0, 0}, {1, 0}, {1, 1}, {0, 1}})}));
}

SpectrumPtr spectrum(std::shared_ptr<const BoundaryGeometry> g, int n)
{
  return std::make_shared<const BoundarySpectrum>(build_spectrum(std::move(g), n));
}

}  // namespace

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerVectors)
{
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::generate(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, DrawsArePureFunctionsOfKeyAndIndex)
{
  const CounterRng a(42, Stream::FgfGaussian);
  const CounterRng b(42, Stream::FgfGaussian);
  const CounterRng other_stream(42, Stream::KernelLaw);
  EXPECT_EQ(a.uniform(1000), b.uniform(1000));
  EXPECT_NE(a.uniform(1000), other_stream.uniform(1000));
  EXPECT_NE(a.uniform(1000), CounterRng(43, Stream::FgfGaussian).uniform(1000));
  EXPECT_NE(a.uniform(1000, 0), a.uniform(1000, 1));
}

TEST(CounterRng, MomentsOfUniformAndNormal)
{
  const CounterRng rng(7);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i)
  {
    const double u = rng.uniform(i);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double z = rng.normal(i);
    sn += z;
    sn2 += z * z;
    se += rng.exponential(i, 2.0, 3);
  }
  EXPECT_GT(umin, 0.0);
  EXPECT_LT(umax, 1.0);
  EXPECT_NEAR(su / n, 0.5, 5.0 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sn / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(se / n, 0.5, 5.0 * 0.5 / std::sqrt(n));
}

TEST(CurveSpectrum, UnitCircleEigenvaluesAreSquaredIntegers)
{
  const auto spec = spectrum(unit_circle(), 41);
  EXPECT_EQ(spec->b0(), 1);
  EXPECT_DOUBLE_EQ(spec->mu(0), 0.0);
  for (int i = 1; i < 41; ++i)
  {
    const int k = (i + 1) / 2;
    EXPECT_NEAR(spec->mu(i), static_cast<double>(k * k), 1e-12 * k * k) << i;
  }
}

TEST(CurveSpectrum, ModesAreOrthonormal)
{
  EXPECT_LT(spectrum(unit_circle(), 101)->orthonormality_error(101), 1e-10);
  EXPECT_LT(spectrum(unit_square(), 101)->orthonormality_error(101), 1e-10);
}

// Periodic second-difference Laplacian in arclength on the square: its low eigenvalues
// converge to the exact ones at second order.
TEST(CurveSpectrum, SquareMatchesFiniteDifferenceLaplacian)
{
  const auto spec = spectrum(unit_square(), 9);
  const int m = 800;
  const double len = 4.0;
  const double h = len / m;
  Mat lap = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i)
  {
    lap(i, i) = 2.0 / (h * h);
    lap(i, (i + 1) % m) = -1.0 / (h * h);
    lap(i, (i + m - 1) % m) = -1.0 / (h * h);
  }
  const Vec fd = Eigen::SelfAdjointEigenSolver<Mat>(lap, Eigen::EigenvaluesOnly).eigenvalues();
  for (int i = 0; i < 9; ++i)
  {
    EXPECT_NEAR(spec->mu(i), fd(i), 1e-4 * (1.0 + spec->mu(i))) << i;
  }
  // Each mode satisfies -Y'' = mu Y pointwise (central differences).
  for (int i = 1; i < 9; ++i)
  {
    for (double s : {0.3, 1.7, 3.9})
    {
      const double e = 1e-3;
      const double d2 = (spec->curve_mode_value(i, 0, s + e) - 2 * spec->curve_mode_value(i, 0, s) +
                         spec->curve_mode_value(i, 0, s - e)) /
                        (e * e);
      EXPECT_NEAR(-d2, spec->mu(i) * spec->curve_mode_value(i, 0, s), 1e-4 * (1 + spec->mu(i)));
    }
  }
}

TEST(CurveSpectrum, KernelDimensionCountsComponents)
{
  auto g = std::make_shared<const BoundaryGeometry>(BoundaryGeometry::curves(
      {CurveComponent::circle({0, 0}, 1.0), CurveComponent::circle({5, 0}, 0.5), regular_polygon(5, 1.0, {0, 5})}));
  const auto spec = spectrum(g, 30);
  EXPECT_EQ(spec->b0(), 3);
  for (int i = 0; i < 3; ++i)
  {
    EXPECT_EQ(spec->mu(i), 0.0);
  }
  EXPECT_GT(spec->mu(3), 0.0);
  EXPECT_LT(spec->orthonormality_error(30), 1e-10);
}

TEST(CurveSpectrum, EigenvaluesNondecreasing)
{
  for (const auto &g : {unit_circle(), unit_square()})
  {
    const auto spec = spectrum(g, 200);
    for (int i = 1; i < spec->count(); ++i)
    {
      EXPECT_LE(spec->mu(i - 1), spec->mu(i));
    }
  }
}

TEST(Weyl, CircleAndPolygonSlopeIsTwo)
{
  for (const auto &g : {unit_circle(), std::make_shared<const BoundaryGeometry>(
                                           BoundaryGeometry::curves({regular_polygon(12, 1.0)}))})
  {
    const WeylDiagnostic d = weyl_diagnostic(*spectrum(g, 400), 21, 200);
    EXPECT_NEAR(d.slope, 2.0, 0.05);
    EXPECT_GT(d.c_lower, 0.0);
    EXPECT_LT(d.c_upper, 2.0 * d.c_lower);
  }
}

TEST(Weyl, RejectsShortOrKernelRanges)
{
  const auto spec = spectrum(unit_circle(), 100);
  EXPECT_THROW(weyl_diagnostic(*spec, 1, 50), Error);
  EXPECT_THROW(weyl_diagnostic(*spec, 21, 30), Error);
  EXPECT_THROW(weyl_diagnostic(*spec, 21, 101), Error);
}

TEST(CountingFunction, CountsAndRefusesBeyondTruncation)
{
  const auto spec = spectrum(unit_circle(), 21);  // mu up to 100
  EXPECT_EQ(counting_function(*spec, 0.0), 1);
  EXPECT_EQ(counting_function(*spec, 1.0), 3);
  EXPECT_EQ(counting_function(*spec, 24.9), 9);
  EXPECT_THROW(counting_function(*spec, 100.0), TruncationExceeded);
}

TEST(SobolevWeights, GraphNormAndDualWeights)
{
  const auto spec = spectrum(unit_circle(), 11);
  const Vec w = ht_weights(*spec, 1.0);
  const Vec wd = ht_weights(*spec, -1.0);
  EXPECT_DOUBLE_EQ(w(0), 1.0);
  EXPECT_DOUBLE_EQ(wd(0), 1.0);
  for (int i = 1; i < 11; ++i)
  {
    EXPECT_NEAR(w(i), std::sqrt(spec->mu(i) + 1.0), 1e-14);
    EXPECT_NEAR(w(i) * wd(i), 1.0, 1e-14);
  }
}

TEST(SurfaceSpectrum, SphereApproximatesSphericalHarmonics)
{
  auto g = std::make_shared<const BoundaryGeometry>(BoundaryGeometry::surface(icosphere(3)));
  const auto spec = spectrum(g, 16);
  EXPECT_EQ(spec->b0(), 1);
  EXPECT_LT(std::abs(spec->mu(0)), 1e-8);
  // l(l+1) with multiplicity 2l+1.
  int i = 1;
  for (int l = 1; l <= 3; ++l)
  {
    for (int m = 0; m < 2 * l + 1; ++m, ++i)
    {
      EXPECT_NEAR(spec->mu(i), l * (l + 1.0), 0.03 * l * (l + 1.0)) << "l=" << l;
    }
  }
  EXPECT_LT(spec->orthonormality_error(16), 1e-8);
  EXPECT_LT(spec->residuals().maxCoeff(), 1e-8);
}

TEST(SurfaceSpectrum, TwoSpheresHaveTwoKernelModes)
{
  auto g = std::make_shared<const BoundaryGeometry>(
      BoundaryGeometry::surface(merge_meshes(icosphere(2), icosphere(2, 1.0, {3, 0, 0}))));
  const auto spec = spectrum(g, 10);
  EXPECT_EQ(spec->b0(), 2);
  EXPECT_LT(std::abs(spec->mu(1)), 1e-8);
  EXPECT_GT(spec->mu(2), 1.0);
}

TEST(SpectrumIo, BinaryDumpRoundTrips)
{
  for (const auto &g : {unit_square(), std::make_shared<const BoundaryGeometry>(BoundaryGeometry::surface(icosphere(2)))})
  {
    const auto spec = spectrum(g, 12);
    std::stringstream ss;
    save_spectrum(ss, *spec);
    const BoundarySpectrum back = load_spectrum(ss, g);
    EXPECT_EQ(back.count(), spec->count());
    EXPECT_EQ(back.b0(), spec->b0());
    EXPECT_EQ((back.mu() - spec->mu()).norm(), 0.0);
    if (g->dim() == 3)
    {
      EXPECT_EQ((back.surface_modes() - spec->surface_modes()).norm(), 0.0);
    }
  }
}

TEST(GeometryIo, JsonRoundTrip)
{
  const BoundaryGeometry g = BoundaryGeometry::curves({CurveComponent::circle({1, 2}, 3.0), regular_polygon(7, 1.0, {9, 9})});
  const BoundaryGeometry back = geometry_from_json(geometry_to_json(g));
  EXPECT_EQ(geometry_to_json(back), geometry_to_json(g));
  EXPECT_NEAR(back.total_measure(), g.total_measure(), 1e-14);
}

TEST(SpectralFunction, ConstantFunctionHasUnitMean)
{
  const auto spec = spectrum(unit_square(), 9);
  const SpectralFunction one = SpectralFunction::constant(spec, 9);
  // (1, Y_0) = |boundary| / sqrt(|boundary|)
  EXPECT_NEAR(one[0].real(), 2.0, 1e-14);
  EXPECT_NEAR(ht_norm(one, 0.0), 2.0, 1e-14);
  EXPECT_THROW(SpectralFunction(spec, CVec::Zero(10)), Error);
}
