// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failed
// criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "gibc/acoustic.hpp"
#include "gibc/fgf.hpp"
#include "gibc/multipliers.hpp"

using namespace gibc;

namespace
{

struct Outcome
{
  bool passed;
  std::string detail;
};

std::string fmt(const char *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SpectrumPtr curve_spectrum(std::vector<CurveComponent> comps, int n)
{
  auto g = std::make_shared<const BoundaryGeometry>(BoundaryGeometry::curves(std::move(comps)));
  return std::make_shared<const BoundarySpectrum>(build_spectrum(g, n));
}

SpectrumPtr unit_circle(int n) { return curve_spectrum({CurveComponent::circle({0, 0}, 1.0)}, n); }

// ---------------------------------------------------------------------------------------

Outcome weyl_law()
{
  const auto t0 = std::chrono::steady_clock::now();
  const double circle = weyl_diagnostic(*unit_circle(400), 21, 200).slope;
  const double gon = weyl_diagnostic(*curve_spectrum({regular_polygon(12, 1.0)}, 400), 21, 200).slope;
  const SurfaceMesh sm = icosphere(5);
  auto g = std::make_shared<const BoundaryGeometry>(BoundaryGeometry::surface(sm));
  const double sphere = weyl_diagnostic(build_spectrum(g, 150), 21, 150).slope;
  const double secs = seconds_since(t0);
  const bool ok = std::abs(circle - 2.0) <= 0.05 && std::abs(gon - 2.0) <= 0.05 && std::abs(sphere - 1.0) <= 0.15 &&
                  sm.vertices.size() >= 10000 && secs <= 60.0;
  return {ok, fmt("circle %.4f, 12-gon %.4f, sphere(%zu vertices) %.4f, %.1f s", circle, gon, sm.vertices.size(),
                  sphere, secs)};
}

Outcome fgf_threshold()
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = unit_circle(4096);
  const std::vector<int> cps{64, 128, 256, 512, 1024, 2048, 4096};
  int match = 0, cells = 0;
  std::string misses;
  for (double s : {0.5, 1.0, 2.0})
  {
    for (double off : {-0.6, -0.3, 0.3, 0.6})
    {
      const double t = s - 0.5 + off;
      const Verdict want = off < 0.0 ? Verdict::Converges : Verdict::Diverges;
      const ClassifierReport r = convergence_classifier(spec, s, t, 50, cps);
      ++cells;
      if (r.verdict == want)
      {
        ++match;
      }
      else
      {
        misses += fmt(" (s=%g,t=%g ratio %.4f)", s, t, r.final_ratio);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {match == cells && secs <= 120.0, fmt("%d/%d cells, %.1f s%s", match, cells, secs, misses.c_str())};
}

Outcome variance_law()
{
  const int m = 10000;
  const double s = 1.0;
  const auto spec = unit_circle(64);
  const std::vector<int> modes{1, 2, 3, 5, 8, 13, 21, 34, 47, 63};
  std::vector<double> sum(modes.size(), 0.0), sum2(modes.size(), 0.0);
  for (int seed = 0; seed < m; ++seed)
  {
    const FgfSample x = sample_fgf(spec, s, 64, static_cast<std::uint64_t>(seed));
    for (std::size_t k = 0; k < modes.size(); ++k)
    {
      const double c = x.coeffs(modes[k]);
      sum[k] += c;
      sum2[k] += c * c;
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < modes.size(); ++k)
  {
    const double mean = sum[k] / m;
    const double var = (sum2[k] - m * mean * mean) / (m - 1);
    worst = std::max(worst, std::abs(var / std::pow(spec->mu(modes[k]), -s) - 1.0));
  }
  const double tol = 4.0 / std::sqrt(m);
  return {worst <= tol, fmt("max relative error %.4f over %zu modes (tolerance %.4f)", worst, modes.size(), tol)};
}

Outcome multiplier_positivity()
{
  const int n_phi = 81;
  const int n_trunc = 30;
  const auto spec = unit_circle(n_phi);
  const double len = 2.0 * kPi;
  const int samples = 512;
  // Coefficients of a sampled function; the trapezoid rule is exact at these degrees.
  auto project = [&](const std::function<double(double)> &f) {
    CVec c = CVec::Zero(n_phi);
    for (int q = 0; q < samples; ++q)
    {
      const double x = len * q / samples;
      const double v = f(x);
      for (int i = 0; i < n_phi; ++i)
      {
        c(i) += v * spec->curve_mode_value(i, 0, x) * len / samples;
      }
    }
    return SpectralFunction(spec, c);
  };
  int fr_pass = 0, osc_fail = 0, agree = 0;
  double worst_fr = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial)
  {
    const CounterRng rng(1000 + trial);
    const int deg = 1 + trial % 8;
    std::vector<Complex> a(static_cast<std::size_t>(deg + 1));
    for (int j = 0; j <= deg; ++j)
    {
      a[static_cast<std::size_t>(j)] = Complex(rng.normal(j, 0), rng.normal(j, 1));
    }
    const SpectralFunction sq = project([&](double x) {
      Complex q = 0.0;
      for (int j = 0; j <= deg; ++j)
      {
        q += a[static_cast<std::size_t>(j)] * std::exp(Complex(0.0, j * x));
      }
      return std::norm(q);
    });
    const PositivityResult p = positivity_test(sq, n_trunc);
    worst_fr = std::min(worst_fr, p.min_eig);
    fr_pass += p.min_eig >= -1e-10 ? 1 : 0;
    agree += p.is_nonneg == accretivity_integral_test(sq, n_trunc, 40, trial) ? 1 : 0;

    // Mean-zero real oscillation: random cos/sin coefficients, zero constant term.
    std::vector<double> b(static_cast<std::size_t>(2 * deg));
    for (int j = 0; j < 2 * deg; ++j)
    {
      b[static_cast<std::size_t>(j)] = rng.normal(100 + j);
    }
    const SpectralFunction osc = project([&](double x) {
      double v = 0.0;
      for (int j = 1; j <= deg; ++j)
      {
        v += b[static_cast<std::size_t>(2 * j - 2)] * std::cos(j * x) + b[static_cast<std::size_t>(2 * j - 1)] * std::sin(j * x);
      }
      return v;
    });
    const PositivityResult po = positivity_test(osc, n_trunc);
    osc_fail += po.min_eig < -1e-10 ? 1 : 0;
    agree += po.is_nonneg == accretivity_integral_test(osc, n_trunc, 40, 500 + trial) ? 1 : 0;
  }
  return {fr_pass == 50 && osc_fail == 50 && agree == 100,
          fmt("Fejer-Riesz %d/50 pass (min eig %.2e), oscillations %d/50 fail, agreement %d/100", fr_pass, worst_fr,
              osc_fail, agree)};
}

Outcome compactness_indicator()
{
  const auto spec = unit_circle(1025);
  const SpectralFunction c = cantor_measure_coeffs(spec, 1.0 / 3.0, 0, 1025, 1000000, 1);
  const MultiplierMatrix a256 = build_multiplier(c, 0.5, 0.5, 256);
  const MultiplierMatrix a512 = build_multiplier(c, 0.5, 0.5, 512);
  const Vec sv = weighted_singular_values(a512);
  const double ratio = sv(63) / sv(0);
  const double n256 = multiplier_norm(a256);
  const double change = std::abs(multiplier_norm(a512) - n256) / n256;
  return {ratio <= 0.2 && change <= 0.02,
          fmt("s1 = s2 = 1/2: sigma_64/sigma_1 = %.4f, norm change 256->512 = %.2f%%", ratio, 100.0 * change)};
}

Outcome cayley_equivalence()
{
  const auto spec = unit_circle(129);
  const int n = 64;
  int agree = 0, acc_count = 0;
  double worst_rt = 0.0;
  for (int trial = 0; trial < 100; ++trial)
  {
    const CounterRng rng(5000 + trial);
    CMat a(n, n);
    for (int i = 0; i < n; ++i)
    {
      for (int j = 0; j < n; ++j)
      {
        const std::uint64_t idx = static_cast<std::uint64_t>(i) * n + j;
        a(i, j) = Complex(rng.normal(idx, 0), rng.normal(idx, 1));
      }
    }
    // Shift the Hermitian part so its least eigenvalue is +0.05 (accretive) or -0.05.
    const bool want = trial % 2 == 0;
    a += Complex((want ? 0.05 : -0.05) - min_hermitian_eigenvalue(a)) * CMat::Identity(n, n);
    const ImpedanceOperator z = ImpedanceOperator::matrix(spec, a);
    const bool c1 = is_accretive(z).verdict;
    const bool c2 = is_accretive(conjugate_to_l2(z)).verdict;
    const CayleyPair cp = cayley(z);
    const bool c3 = cp.norm_k <= 1.0 + 1e-12;
    agree += (c1 == c2 && c2 == c3 && c1 == want) ? 1 : 0;
    acc_count += c1 ? 1 : 0;
    worst_rt = std::max(worst_rt, (inverse_cayley(cp.k) - cp.z_tilde).norm() / cp.z_tilde.norm());
  }
  return {agree == 100 && worst_rt <= 1e-10,
          fmt("three-way agreement %d/100 (%d accretive), worst round trip %.2e", agree, acc_count, worst_rt)};
}

// k-th positive zero of J_m'.
double bessel_derivative_zero(int m, int k)
{
  auto f = [m](double x) {
    return m == 0 ? -std::cyl_bessel_j(1.0, x) : 0.5 * (std::cyl_bessel_j(m - 1.0, x) - std::cyl_bessel_j(m + 1.0, x));
  };
  int found = 0;
  for (double a = 1e-3; a < 100.0; a += 1e-3)
  {
    double lo = a, hi = a + 1e-3;
    if (f(lo) * f(hi) < 0.0)
    {
      for (int it = 0; it < 100; ++it)
      {
        const double mid = 0.5 * (lo + hi);
        (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
      }
      if (++found == k)
      {
        return 0.5 * (lo + hi);
      }
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Outcome disk_oracle()
{
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> oracle;
  for (int m = 0; m <= 4; ++m)
  {
    for (int k = 1; k <= 2; ++k)
    {
      const double z = bessel_derivative_zero(m, k);
      oracle.insert(oracle.end(), m == 0 ? 1 : 2, z);
    }
  }
  std::sort(oracle.begin(), oracle.end());
  oracle.resize(5);
  // Ring spacing h = 1/rings: 0.05, 0.025, 0.0125.
  const std::vector<DomainMesh> meshes{disk_mesh(1.0, 20), disk_mesh(1.0, 40), disk_mesh(1.0, 80)};
  RefinementOptions ro;
  ro.n_track = 5;
  ro.solve.n_wanted = 14;
  ro.reference = oracle;
  const RefinementTable tab = refinement_study(
      meshes, [](SpectrumPtr s, int n) { return ImpedanceOperator::zero(s, n); }, ro);
  const double secs = seconds_since(t0);
  if (tab.ambiguous || tab.matched.empty())
  {
    return {false, "tracking ambiguous"};
  }
  double worst_rel = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
  {
    worst_rel = std::max(worst_rel, std::abs(tab.matched[0][i].real() / oracle[i] - 1.0));
  }
  const double min_order = *std::min_element(tab.observed_order.begin(), tab.observed_order.end());
  return {worst_rel <= 0.02 && min_order >= 1.7 && secs <= 120.0,
          fmt("h = 0.05 worst relative error %.3f%%, min observed order %.3f, %.1f s", 100.0 * worst_rel, min_order,
              secs)};
}

Outcome halfplane_confinement()
{
  const DomainMesh mesh = disk_mesh(1.0, 8);
  const int nb = default_boundary_modes(mesh);
  const SpectrumPtr spec = boundary_spectrum_for(mesh, 2 * nb + 2);
  const int n_phi = spec->count();
  std::vector<std::pair<std::string, SpectralFunction>> cases;
  cases.emplace_back("z0=1", SpectralFunction::constant(spec, n_phi, 1.0));
  // Cantor measure normalized to unit mass, times c = 1 + 0.5i.
  const SpectralFunction cm = cantor_measure_coeffs(spec, 1.0 / 3.0, 0, n_phi, 200000, 3);
  cases.emplace_back("cantor", cm * (Complex(1.0, 0.5) / (cm[0].real() * std::sqrt(spec->geometry().total_measure()))));
  RandomImpedanceSpec rs;
  rs.c = 1.0;
  rs.s = 0.3;
  rs.kernel_weights = {1.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed)
  {
    cases.emplace_back("zeta" + std::to_string(seed), sample_random_impedance(spec, rs, n_phi, seed));
  }
  SolveOptions so;
  so.n_wanted = 12;
  double worst_half = -std::numeric_limits<double>::infinity();
  double worst_res = 0.0;
  int certified = 0, grid_points = 0;
  std::string bad;
  for (const auto &[name, phi] : cases)
  {
    const AcousticPencil pen = assemble_pencil(mesh, ImpedanceOperator::multiplier(phi, nb), nb);
    const EigenReport rep = solve_pencil(pen, so);
    const DissipativityReport d = verify_mdissipativity(pen, rep);
    for (std::size_t i = 0; i < rep.size(); ++i)
    {
      if (rep.converged[i])
      {
        ++certified;
        const Complex l = rep.lambda[i];
        worst_half = std::max(worst_half, l.imag() / (1.0 + std::abs(l)));
      }
    }
    grid_points = static_cast<int>(d.resolvent.size());
    worst_res = std::max(worst_res, d.max_violation);
    if (rep.unconverged > 0 || !d.halfplane_ok || d.max_violation > 1e-6 || grid_points != 9)
    {
      bad += " " + name;
    }
  }
  return {bad.empty() && worst_half <= 1e-8,
          fmt("%zu impedances, %d certified eigenvalues, max Im/(1+|l|) = %.2e, %d-point resolvent max violation %.2e%s",
              cases.size(), certified, worst_half, grid_points, worst_res, bad.empty() ? "" : (" failing:" + bad).c_str())};
}

Outcome selfadjoint_dichotomy()
{
  const auto t0 = std::chrono::steady_clock::now();
  const DomainMesh mesh = disk_mesh(1.0, 8);
  MonteCarloOptions mo;
  mo.n_samples = 50;
  mo.first_seed = 1;
  mo.solve.n_wanted = 10;
  RandomImpedanceSpec rs;
  rs.c = 1.0;
  rs.s = 0.3;
  const MonteCarloReport sa = monte_carlo_spectrum(mesh, rs, mo);
  rs.kernel_weights = {1.0};
  const MonteCarloReport diss = monte_carlo_spectrum(mesh, rs, mo);
  const double secs = seconds_since(t0);
  return {sa.failures == 0 && diss.failures == 0 && sa.fraction_real == 1.0 && diss.fraction_real == 0.0 &&
              secs <= 600.0,
          fmt("c_n = 0: %.0f%% real; c_1 = 1: %.0f%% real; failures %d/%d; %.1f s", 100.0 * sa.fraction_real,
              100.0 * diss.fraction_real, sa.failures, diss.failures, secs)};
}

double parse_rational(const std::string &s)
{
  if (s == "inf")
  {
    return std::numeric_limits<double>::infinity();
  }
  const auto slash = s.find('/');
  return slash == std::string::npos ? std::stod(s) : std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

Outcome lq_case_checker()
{
  std::ifstream in(std::string(GIBC_FIXTURE_DIR) + "/lq_cases.csv");
  if (!in)
  {
    return {false, "fixture missing"};
  }
  std::string line;
  std::getline(in, line);
  int rows = 0, match = 0;
  bool corollary = false, critical = false;
  while (std::getline(in, line))
  {
    std::stringstream ss(line);
    std::string f[5];
    for (auto &x : f)
    {
      std::getline(ss, x, ',');
    }
    const LqEmbeddingQuery p{std::stoi(f[0]), parse_rational(f[1]), parse_rational(f[2]), parse_rational(f[3])};
    ++rows;
    match += to_string(lq_embedding_case(p).which) == f[4] ? 1 : 0;
    corollary = corollary || (p.d == 3 && p.s1 == 0.5 && p.s2 == 0.5 && p.q == 2.0);
    critical = critical || (p.d == 2 && p.s1 + p.s2 == 1.0);
  }
  return {rows == 200 && match == rows && corollary && critical,
          fmt("%d/%d rows match; (3, 1/2, 1/2, 2) %s; d = 2 critical row %s", match, rows,
              corollary ? "present" : "missing", critical ? "present" : "missing")};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1 weyl_law", weyl_law},
      {"C2 fgf_threshold", fgf_threshold},
      {"C3 variance_law", variance_law},
      {"C4 multiplier_positivity", multiplier_positivity},
      {"C5 compactness_indicator", compactness_indicator},
      {"C6 cayley_equivalence", cayley_equivalence},
      {"C7 disk_oracle", disk_oracle},
      {"C8 halfplane_confinement", halfplane_confinement},
      {"C9 selfadjoint_dichotomy", selfadjoint_dichotomy},
      {"C10 lq_case_checker", lq_case_checker}};
  int failed = 0;
  for (const auto &[name, fn] : criteria)
  {
    Outcome o;
    try
    {
      o = fn();
    }
    catch (const std::exception &e)
    {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
