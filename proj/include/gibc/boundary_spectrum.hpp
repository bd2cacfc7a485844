// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_BOUNDARY_SPECTRUM_HPP
#define GIBC_BOUNDARY_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "gibc/core.hpp"
#include "gibc/geometry.hpp"
#include "gibc/sym_eigs.hpp"

namespace gibc
{

// Trigonometric eigenfunction of -d^2/ds^2 on one closed curve component.
struct CurveMode
{
  enum class Kind : int
  {
    Constant = 0,
    Cos = 1,
    Sin = 2
  };
  int component = 0;
  int k = 0;  // frequency: Y ~ cos/sin(2 pi k s / L)
  Kind kind = Kind::Constant;
};

struct SurfaceSpectrumOptions
{
  bool consistent_mass = false;
  SymEigsOptions solver{};
};

//
// Truncated eigen-decomposition of the Laplace-Beltrami operator of a closed boundary.
// Indices are 0-based in the API: mode i corresponds to the (i+1)-th eigenvalue. The
// first b0() modes span the kernel (locally constant, nonnegative).
//
// Curves (d = 2) are exact: modes are trigonometric in arclength. Surfaces (d = 3) are P1
// finite element eigenvectors stored by vertex value and orthonormal in the mass inner
// product.
//
class BoundarySpectrum
{
public:
  const BoundaryGeometry &geometry() const { return *geometry_; }
  std::shared_ptr<const BoundaryGeometry> geometry_ptr() const { return geometry_; }
  int dim() const { return geometry_->dim(); }
  int count() const { return static_cast<int>(mu_.size()); }
  int b0() const { return b0_; }
  const Vec &mu() const { return mu_; }
  double mu(int i) const { return mu_(i); }

  // d = 2
  const std::vector<CurveMode> &curve_modes() const { return curve_modes_; }
  // Value of mode i at arclength s on the given curve component.
  double curve_mode_value(int i, int component, double s) const
  {
    const CurveMode &m = curve_modes_[static_cast<std::size_t>(i)];
    if (m.component != component)
    {
      return 0.0;
    }
    const double len = geometry_->curve_components()[static_cast<std::size_t>(component)].length();
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

  // d = 3
  const Mat &surface_modes() const { return modes_; }
  const SpMat &stiffness() const { return stiffness_; }
  const SpMat &mass() const { return mass_; }
  bool consistent_mass() const { return consistent_mass_; }
  const Vec &residuals() const { return residuals_; }

  // Gram matrix of the first `n` modes in L^2(boundary). Curves are sampled on a grid fine
  // enough for the trapezoid rule to be exact on trigonometric polynomials.
  Mat gram(int n) const
  {
    n = std::min(n, count());
    if (dim() == 3)
    {
      return modes_.leftCols(n).transpose() * (mass_ * modes_.leftCols(n));
    }
    Mat g = Mat::Zero(n, n);
    int kmax = 0;
    for (int i = 0; i < n; ++i)
    {
      kmax = std::max(kmax, curve_modes_[static_cast<std::size_t>(i)].k);
    }
    const int samples = 2 * kmax + 8;
    for (std::size_t c = 0; c < geometry_->curve_components().size(); ++c)
    {
      const double len = geometry_->curve_components()[c].length();
      Mat vals(samples, n);
      for (int q = 0; q < samples; ++q)
      {
        for (int i = 0; i < n; ++i)
        {
          vals(q, i) = curve_mode_value(i, static_cast<int>(c), len * q / samples);
        }
      }
      g += (len / samples) * vals.transpose() * vals;
    }
    return g;
  }

  double orthonormality_error(int n) const
  {
    n = std::min(n, count());
    return (gram(n) - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
  }

  friend BoundarySpectrum build_curve_spectrum(std::shared_ptr<const BoundaryGeometry>, int);
  friend BoundarySpectrum build_surface_spectrum(std::shared_ptr<const BoundaryGeometry>, int,
                                                 const SurfaceSpectrumOptions &);
  friend BoundarySpectrum load_spectrum(std::istream &, std::shared_ptr<const BoundaryGeometry>);

private:
  std::shared_ptr<const BoundaryGeometry> geometry_;
  Vec mu_;
  int b0_ = 0;
  std::vector<CurveMode> curve_modes_;
  Mat modes_;
  SpMat stiffness_;
  SpMat mass_;
  bool consistent_mass_ = false;
  Vec residuals_;
};

using SpectrumPtr = std::shared_ptr<const BoundarySpectrum>;

//
// Exact spectrum of the arclength Laplacian on a union of closed curves. Each component of
// length L contributes 0 and (2 pi k / L)^2 (twice, cos and sin). Components are merged in
// non-decreasing order; ties are broken by (component, cos before sin, k).
//
inline BoundarySpectrum build_curve_spectrum(std::shared_ptr<const BoundaryGeometry> geom,
                                             int count)
{
  require(geom != nullptr && geom->dim() == 2, "curve spectrum needs a d = 2 geometry");
  const int b0 = geom->component_count();
  require(count >= b0, "truncation N must be at least the number of components");

  struct Cand
  {
    double mu;
    CurveMode mode;
  };
  std::vector<Cand> cands;
  const auto &comps = geom->curve_components();
  // Enough frequencies per component to fill N slots even if all come from one component.
  const int kmax = count / 2 + 1;
  for (std::size_t c = 0; c < comps.size(); ++c)
  {
    const double len = comps[c].length();
    require(len > 0.0, "degenerate boundary component");
    cands.push_back({0.0, {static_cast<int>(c), 0, CurveMode::Kind::Constant}});
    for (int k = 1; k <= kmax; ++k)
    {
      const double w = 2.0 * kPi * k / len;
      cands.push_back({w * w, {static_cast<int>(c), k, CurveMode::Kind::Cos}});
      cands.push_back({w * w, {static_cast<int>(c), k, CurveMode::Kind::Sin}});
    }
  }
  auto before = [](const Cand &a, const Cand &b) {
    const double tol = 1e-12 * std::max(1.0, std::max(a.mu, b.mu));
    if (std::abs(a.mu - b.mu) > tol)
    {
      return a.mu < b.mu;
    }
    if (a.mode.component != b.mode.component)
    {
      return a.mode.component < b.mode.component;
    }
    if (a.mode.kind != b.mode.kind)
    {
      return static_cast<int>(a.mode.kind) < static_cast<int>(b.mode.kind);
    }
    return a.mode.k < b.mode.k;
  };
  std::stable_sort(cands.begin(), cands.end(), before);

  BoundarySpectrum s;
  s.geometry_ = std::move(geom);
  s.b0_ = b0;
  s.mu_.resize(count);
  s.curve_modes_.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
  {
    s.mu_(i) = cands[static_cast<std::size_t>(i)].mu;
    s.curve_modes_.push_back(cands[static_cast<std::size_t>(i)].mode);
  }
  s.residuals_ = Vec::Zero(count);
  return s;
}

namespace detail
{

inline double cot(const Eigen::Vector3d &a, const Eigen::Vector3d &b)
{
  return a.dot(b) / a.cross(b).norm();
}

// Cotangent stiffness and (lumped or consistent) P1 mass on a triangle mesh.
inline void assemble_surface_fem(const SurfaceMesh &mesh, bool consistent, SpMat &stiff,
                                 SpMat &mass)
{
  const int nv = static_cast<int>(mesh.vertices.size());
  std::vector<Eigen::Triplet<double>> ks;
  std::vector<Eigen::Triplet<double>> ms;
  ks.reserve(mesh.triangles.size() * 9);
  ms.reserve(mesh.triangles.size() * 9);
  for (const auto &t : mesh.triangles)
  {
    const Eigen::Vector3d &p0 = mesh.vertices[t[0]];
    const Eigen::Vector3d &p1 = mesh.vertices[t[1]];
    const Eigen::Vector3d &p2 = mesh.vertices[t[2]];
    const double area = triangle_area(p0, p1, p2);
    // Angle at vertex k sits opposite edge (k+1, k+2).
    const std::array<double, 3> c{cot(p1 - p0, p2 - p0), cot(p2 - p1, p0 - p1),
                                  cot(p0 - p2, p1 - p2)};
    for (int k = 0; k < 3; ++k)
    {
      const int i = t[(k + 1) % 3];
      const int j = t[(k + 2) % 3];
      const double w = 0.5 * c[static_cast<std::size_t>(k)];
      ks.emplace_back(i, j, -w);
      ks.emplace_back(j, i, -w);
      ks.emplace_back(i, i, w);
      ks.emplace_back(j, j, w);
    }
    for (int a = 0; a < 3; ++a)
    {
      if (consistent)
      {
        for (int b = 0; b < 3; ++b)
        {
          ms.emplace_back(t[a], t[b], area / (a == b ? 6.0 : 12.0));
        }
      }
      else
      {
        ms.emplace_back(t[a], t[a], area / 3.0);
      }
    }
  }
  stiff.resize(nv, nv);
  mass.resize(nv, nv);
  stiff.setFromTriplets(ks.begin(), ks.end());
  mass.setFromTriplets(ms.begin(), ms.end());
}

}  // namespace detail

//
// P1 finite element Laplace-Beltrami spectrum on a closed triangulated surface: cotangent
// stiffness, lumped mass by default. The kernel is replaced by the exact normalized
// component indicators so kernel modes are nonnegative and locally constant.
//
inline BoundarySpectrum build_surface_spectrum(std::shared_ptr<const BoundaryGeometry> geom,
                                               int count,
                                               const SurfaceSpectrumOptions &opts = {})
{
  require(geom != nullptr && geom->dim() == 3, "surface spectrum needs a d = 3 geometry");
  const SurfaceMesh &mesh = geom->surface_mesh();
  const int nv = static_cast<int>(mesh.vertices.size());
  const int b0 = geom->component_count();
  require(count >= b0, "truncation N must be at least the number of components");
  require(count <= nv, "truncation N too large for mesh (" + std::to_string(count) + " > " +
                           std::to_string(nv) + " vertices)");

  BoundarySpectrum s;
  s.geometry_ = geom;
  s.consistent_mass_ = opts.consistent_mass;
  detail::assemble_surface_fem(mesh, opts.consistent_mass, s.stiffness_, s.mass_);

  SymEigsOptions so = opts.solver;
  const SymEigsResult r = smallest_generalized_eigs(s.stiffness_, s.mass_, count, so);
  s.mu_ = r.values;
  s.modes_ = r.vectors;

  // Exact kernel: normalized indicator of each component.
  const std::vector<double> meas = geom->component_measures();
  for (int c = 0; c < b0; ++c)
  {
    Vec ind = Vec::Zero(nv);
    for (int v = 0; v < nv; ++v)
    {
      if (geom->vertex_component()[static_cast<std::size_t>(v)] == c)
      {
        ind(v) = 1.0;
      }
    }
    const double nrm = std::sqrt(ind.dot(s.mass_ * ind));
    s.modes_.col(c) = ind / nrm;
    s.mu_(c) = 0.0;
  }
  require(b0 == count || s.mu_(b0) > 1e-8 * std::max(1.0, s.mu_(count - 1)),
          "mesh kernel dimension exceeds the number of components");
  // Re-orthogonalize the nonzero modes against the exact kernel (they already are, up to
  // solver accuracy).
  if (b0 < count)
  {
    const Mat ker = s.modes_.leftCols(b0);
    for (int i = b0; i < count; ++i)
    {
      Vec v = s.modes_.col(i);
      v -= ker * (ker.transpose() * (s.mass_ * v));
      s.modes_.col(i) = v / std::sqrt(v.dot(s.mass_ * v));
    }
  }
  // Sign convention: first nonzero vertex coefficient positive.
  for (int i = 0; i < count; ++i)
  {
    for (int v = 0; v < nv; ++v)
    {
      if (std::abs(s.modes_(v, i)) > 1e-12)
      {
        if (s.modes_(v, i) < 0)
        {
          s.modes_.col(i) *= -1.0;
        }
        break;
      }
    }
  }
  s.b0_ = b0;
  s.residuals_ = detail::dual_residuals(s.stiffness_, s.mass_, s.mass_.diagonal(),
                                        !opts.consistent_mass, s.mu_, s.modes_);
  return s;
}

inline BoundarySpectrum build_spectrum(std::shared_ptr<const BoundaryGeometry> geom, int count,
                                       const SurfaceSpectrumOptions &opts = {})
{
  require(geom != nullptr, "null geometry");
  return geom->dim() == 2 ? build_curve_spectrum(std::move(geom), count)
                          : build_surface_spectrum(std::move(geom), count, opts);
}

//
// H^t graph-norm weights. For t >= 0, w = (mu^t + 1)^{1/2}; for t < 0 the dual weight
// (mu^{-t} + 1)^{-1/2}. Kernel modes carry weight 1 for every t.
//
inline double ht_weight(double mu, double t, bool kernel)
{
  if (kernel)
  {
    return 1.0;
  }
  if (t >= 0)
  {
    return std::sqrt(std::pow(mu, t) + 1.0);
  }
  return 1.0 / std::sqrt(std::pow(mu, -t) + 1.0);
}

inline Vec ht_weights(const BoundarySpectrum &spec, double t, int n = -1)
{
  if (n < 0)
  {
    n = spec.count();
  }
  Vec w(n);
  for (int i = 0; i < n; ++i)
  {
    w(i) = ht_weight(spec.mu(i), t, i < spec.b0());
  }
  return w;
}

// Diagonal of (Delta + c)^{s/2} in the eigenbasis.
inline Vec fractional_power_weights(const BoundarySpectrum &spec, double s, double c, int n = -1)
{
  require(c > 0.0, "fractional power needs c > 0");
  if (n < 0)
  {
    n = spec.count();
  }
  Vec w(n);
  for (int i = 0; i < n; ++i)
  {
    w(i) = std::pow(spec.mu(i) + c, 0.5 * s);
  }
  return w;
}

//
// A boundary function or distribution f = sum_n c_n Y_n, stored by its coefficients.
//
class SpectralFunction
{
public:
  SpectralFunction() = default;
  SpectralFunction(SpectrumPtr spec, CVec coeffs) : spec_(std::move(spec)), coeffs_(std::move(coeffs))
  {
    require(spec_ != nullptr, "spectral function needs a spectrum");
    require(coeffs_.size() <= spec_->count(), "more coefficients than spectrum modes");
  }

  static SpectralFunction zero(SpectrumPtr spec, int n)
  {
    return SpectralFunction(std::move(spec), CVec::Zero(n));
  }
  static SpectralFunction mode(SpectrumPtr spec, int n, int index, Complex value = 1.0)
  {
    CVec c = CVec::Zero(n);
    c(index) = value;
    return SpectralFunction(std::move(spec), c);
  }
  // The constant function 1: sqrt(measure_j) on each kernel mode.
  static SpectralFunction constant(SpectrumPtr spec, int n, Complex value = 1.0)
  {
    CVec c = CVec::Zero(n);
    const auto meas = spec->geometry().component_measures();
    for (int j = 0; j < spec->b0(); ++j)
    {
      c(j) = value * std::sqrt(meas[static_cast<std::size_t>(j)]);
    }
    return SpectralFunction(std::move(spec), c);
  }

  const BoundarySpectrum &spectrum() const { return *spec_; }
  const SpectrumPtr &spectrum_ptr() const { return spec_; }
  const CVec &coeffs() const { return coeffs_; }
  int size() const { return static_cast<int>(coeffs_.size()); }
  Complex operator[](int i) const { return coeffs_(i); }

  SpectralFunction conj() const { return {spec_, coeffs_.conjugate()}; }
  SpectralFunction real() const { return {spec_, coeffs_.real().cast<Complex>()}; }
  SpectralFunction imag() const { return {spec_, coeffs_.imag().cast<Complex>()}; }
  SpectralFunction truncated(int n) const
  {
    n = std::min(n, size());
    return {spec_, coeffs_.head(n)};
  }
  SpectralFunction operator*(Complex a) const { return {spec_, a * coeffs_}; }
  SpectralFunction operator+(const SpectralFunction &o) const
  {
    const int n = std::max(size(), o.size());
    CVec c = CVec::Zero(n);
    c.head(size()) += coeffs_;
    c.head(o.size()) += o.coeffs_;
    return {spec_, c};
  }

private:
  SpectrumPtr spec_;
  CVec coeffs_;
};

inline double ht_norm(const SpectralFunction &f, double t)
{
  const Vec w = ht_weights(f.spectrum(), t, f.size());
  return std::sqrt((w.array().square() * f.coeffs().array().abs2()).sum());
}

struct WeylDiagnostic
{
  double slope;
  double c_lower;
  double c_upper;
};

// Log-log least-squares slope of mu_n against n over [first, last] (1-based, inclusive),
// and the extreme ratios mu_n / n^{2/(d-1)}.
inline WeylDiagnostic weyl_diagnostic(const BoundarySpectrum &spec, int first, int last)
{
  require(first > spec.b0(), "fit range must start after the kernel modes");
  require(last <= spec.count(), "fit range exceeds the truncation");
  require(last - first + 1 >= 20, "fit range needs at least 20 eigenvalues");
  const double expo = 2.0 / (spec.dim() - 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  WeylDiagnostic d{0.0, std::numeric_limits<double>::infinity(), 0.0};
  const int m = last - first + 1;
  for (int n = first; n <= last; ++n)
  {
    const double mu = spec.mu(n - 1);
    require(mu > 0.0, "fit range contains a zero eigenvalue");
    const double x = std::log(static_cast<double>(n));
    const double y = std::log(mu);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    const double ratio = mu / std::pow(static_cast<double>(n), expo);
    d.c_lower = std::min(d.c_lower, ratio);
    d.c_upper = std::max(d.c_upper, ratio);
  }
  d.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return d;
}

// #{n : mu_n <= lambda}. Throws TruncationExceeded when lambda >= mu_N, where the count
// would depend on eigenvalues that were not computed.
inline int counting_function(const BoundarySpectrum &spec, double lambda)
{
  require(lambda >= 0.0, "counting function needs lambda >= 0");
  if (lambda >= spec.mu(spec.count() - 1))
  {
    throw TruncationExceeded("lambda reaches the largest computed eigenvalue");
  }
  const auto &mu = spec.mu();
  return static_cast<int>(std::upper_bound(mu.data(), mu.data() + mu.size(), lambda) - mu.data());
}

// CSV with columns n, mu_n (1-based n).
inline void write_spectrum_csv(std::ostream &os, const BoundarySpectrum &spec)
{
  os << "n,mu_n\n";
  os.precision(17);
  for (int i = 0; i < spec.count(); ++i)
  {
    os << (i + 1) << ',' << spec.mu(i) << '\n';
  }
}

//
// Binary dump: magic, dim, N, b0, then mu, then either curve mode descriptors or the
// vertex-by-mode matrix (column-major). Geometry is not stored; the caller keys dumps by a
// geometry hash.
//
inline void save_spectrum(std::ostream &os, const BoundarySpectrum &spec)
{
  auto put = [&](auto v) { os.write(reinterpret_cast<const char *>(&v), sizeof(v)); };
  put(std::uint32_t{0x47494243});
  put(static_cast<std::int32_t>(spec.dim()));
  put(static_cast<std::int32_t>(spec.count()));
  put(static_cast<std::int32_t>(spec.b0()));
  os.write(reinterpret_cast<const char *>(spec.mu().data()),
           static_cast<std::streamsize>(sizeof(double) * spec.mu().size()));
  if (spec.dim() == 2)
  {
    for (const auto &m : spec.curve_modes())
    {
      put(static_cast<std::int32_t>(m.component));
      put(static_cast<std::int32_t>(m.k));
      put(static_cast<std::int32_t>(m.kind));
    }
  }
  else
  {
    put(static_cast<std::int32_t>(spec.surface_modes().rows()));
    put(static_cast<std::int32_t>(spec.consistent_mass() ? 1 : 0));
    os.write(reinterpret_cast<const char *>(spec.surface_modes().data()),
             static_cast<std::streamsize>(sizeof(double) * spec.surface_modes().size()));
  }
}

inline BoundarySpectrum load_spectrum(std::istream &is, std::shared_ptr<const BoundaryGeometry> geom)
{
  auto get = [&](auto &v) {
    is.read(reinterpret_cast<char *>(&v), sizeof(v));
    if (!is)
    {
      throw Error("truncated spectrum dump");
    }
  };
  std::uint32_t magic = 0;
  std::int32_t dim = 0, n = 0, b0 = 0;
  get(magic);
  get(dim);
  get(n);
  get(b0);
  require(magic == 0x47494243, "not a spectrum dump");
  require(geom != nullptr && dim == geom->dim() && b0 == geom->component_count(),
          "spectrum dump does not match geometry");
  BoundarySpectrum s;
  s.geometry_ = std::move(geom);
  s.b0_ = b0;
  s.mu_.resize(n);
  is.read(reinterpret_cast<char *>(s.mu_.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (dim == 2)
  {
    for (int i = 0; i < n; ++i)
    {
      std::int32_t c = 0, k = 0, kind = 0;
      get(c);
      get(k);
      get(kind);
      s.curve_modes_.push_back({c, k, static_cast<CurveMode::Kind>(kind)});
    }
    s.residuals_ = Vec::Zero(n);
  }
  else
  {
    std::int32_t rows = 0, consistent = 0;
    get(rows);
    get(consistent);
    require(rows == static_cast<std::int32_t>(s.geometry_->surface_mesh().vertices.size()),
            "spectrum dump vertex count mismatch");
    s.modes_.resize(rows, n);
    is.read(reinterpret_cast<char *>(s.modes_.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * n));
    s.consistent_mass_ = consistent != 0;
    detail::assemble_surface_fem(s.geometry_->surface_mesh(), s.consistent_mass_, s.stiffness_,
                                 s.mass_);
    s.residuals_ = detail::dual_residuals(s.stiffness_, s.mass_, s.mass_.diagonal(),
                                          !s.consistent_mass_, s.mu_, s.modes_);
  }
  if (!is)
  {
    throw Error("truncated spectrum dump");
  }
  return s;
}

}  // namespace gibc

#endif  // GIBC_BOUNDARY_SPECTRUM_HPP
