// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_ACOUSTIC_HPP
#define GIBC_ACOUSTIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "gibc/boundary_spectrum.hpp"
#include "gibc/core.hpp"
#include "gibc/fgf.hpp"
#include "gibc/impedance.hpp"
#include "gibc/mesh.hpp"
#include "gibc/parallel.hpp"
#include "gibc/random.hpp"

namespace gibc
{

using SpCMat = Eigen::SparseMatrix<Complex>;

namespace detail
{
// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double> &x, std::vector<double> &w)
{
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i)
  {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it)
    {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k)
      {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1)
      {
        p1 = z;
        p0 = 1.0;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16)
      {
        break;
      }
    }
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    w[static_cast<std::size_t>(i)] = wi;
    w[static_cast<std::size_t>(n - 1 - i)] = wi;
  }
}

inline SpCMat to_complex(const SpMat &a) { return a.cast<Complex>(); }
}  // namespace detail

//
// Checks that the spectrum lives on the polygonal boundary of the mesh: same number of
// components, same vertices in the same order, arclengths within 1e-10.
//
inline void require_matching_boundary(const DomainMesh &mesh, const BoundarySpectrum &spec)
{
  require(spec.dim() == 2, "acoustic problems need a curve spectrum");
  const auto &comps = spec.geometry().curve_components();
  const auto &loops = mesh.boundary_loops();
  require(comps.size() == loops.size(), "boundary geometry mismatch: component count differs");
  for (std::size_t c = 0; c < comps.size(); ++c)
  {
    require(!comps[c].is_circle(), "boundary geometry mismatch: spectrum uses an exact circle");
    const auto &vs = comps[c].vertices();
    require(vs.size() == loops[c].vertices.size(),
            "boundary geometry mismatch: vertex count differs on component " + std::to_string(c));
    for (std::size_t i = 0; i < vs.size(); ++i)
    {
      require((vs[i] - mesh.vertices()[loops[c].vertices[i]]).norm() <= 1e-10,
              "boundary geometry mismatch: vertex position differs on component " +
                  std::to_string(c));
      require(std::abs(comps[c].vertex_arclength()[i + 1] - loops[c].arclength[i + 1]) <= 1e-10,
              "boundary geometry mismatch: arclength differs on component " + std::to_string(c));
    }
  }
}

//
// P[n][j] = int Y_n phi_j dSigma for the first n_b boundary modes and the boundary DOFs,
// by Gauss-Legendre on each boundary segment (rule order grows with the mode frequency).
//
struct BoundaryProjector
{
  std::vector<int> dofs;  // global vertex index of each column
  Mat p;                  // n_b x dofs.size()
};

inline BoundaryProjector boundary_projector(const DomainMesh &mesh, const BoundarySpectrum &spec,
                                            int n_b)
{
  require_matching_boundary(mesh, spec);
  if (n_b > spec.count())
  {
    throw TruncationExceeded("boundary-mode truncation exceeds the spectrum");
  }
  BoundaryProjector bp;
  std::vector<int> column(static_cast<std::size_t>(mesh.vertex_count()), -1);
  for (const auto &loop : mesh.boundary_loops())
  {
    for (int v : loop.vertices)
    {
      column[static_cast<std::size_t>(v)] = static_cast<int>(bp.dofs.size());
      bp.dofs.push_back(v);
    }
  }
  bp.p = Mat::Zero(n_b, static_cast<Eigen::Index>(bp.dofs.size()));
  const auto &comps = spec.geometry().curve_components();
  double max_freq = 0.0;
  for (int n = 0; n < n_b; ++n)
  {
    const auto &md = spec.curve_modes()[static_cast<std::size_t>(n)];
    max_freq = std::max(max_freq, 2.0 * kPi * md.k / comps[static_cast<std::size_t>(md.component)].length());
  }
  for (std::size_t c = 0; c < comps.size(); ++c)
  {
    const auto &loop = mesh.boundary_loops()[c];
    const std::size_t nv = loop.vertices.size();
    for (std::size_t i = 0; i < nv; ++i)
    {
      const double s0 = loop.arclength[i];
      const double s1 = loop.arclength[i + 1];
      const double len = s1 - s0;
      const int order = 6 + static_cast<int>(std::ceil(max_freq * len));
      std::vector<double> gx;
      std::vector<double> gw;
      detail::gauss_legendre(order, gx, gw);
      const int ca = column[static_cast<std::size_t>(loop.vertices[i])];
      const int cb = column[static_cast<std::size_t>(loop.vertices[(i + 1) % nv])];
      for (int n = 0; n < n_b; ++n)
      {
        if (spec.curve_modes()[static_cast<std::size_t>(n)].component != static_cast<int>(c))
        {
          continue;
        }
        double ia = 0.0;
        double ib = 0.0;
        for (std::size_t q = 0; q < gx.size(); ++q)
        {
          const double u = 0.5 * (gx[q] + 1.0);
          const double y = spec.curve_mode_value(n, static_cast<int>(c), s0 + u * len);
          const double wq = 0.5 * len * gw[q];
          ia += wq * y * (1.0 - u);
          ib += wq * y * u;
        }
        bp.p(n, ca) += ia;
        bp.p(n, cb) += ib;
      }
    }
  }
  return bp;
}

// Directly assembled boundary mass int phi_i phi_j dSigma over the boundary DOFs.
inline Mat boundary_mass(const DomainMesh &mesh, const BoundaryProjector &bp)
{
  std::vector<int> column(static_cast<std::size_t>(mesh.vertex_count()), -1);
  for (std::size_t k = 0; k < bp.dofs.size(); ++k)
  {
    column[static_cast<std::size_t>(bp.dofs[k])] = static_cast<int>(k);
  }
  Mat mb = Mat::Zero(static_cast<Eigen::Index>(bp.dofs.size()), static_cast<Eigen::Index>(bp.dofs.size()));
  for (const auto &loop : mesh.boundary_loops())
  {
    const std::size_t nv = loop.vertices.size();
    for (std::size_t i = 0; i < nv; ++i)
    {
      const double len = loop.arclength[i + 1] - loop.arclength[i];
      const int a = column[static_cast<std::size_t>(loop.vertices[i])];
      const int b = column[static_cast<std::size_t>(loop.vertices[(i + 1) % nv])];
      mb(a, a) += len / 3.0;
      mb(b, b) += len / 3.0;
      mb(a, b) += len / 6.0;
      mb(b, a) += len / 6.0;
    }
  }
  return mb;
}

//
// Quadratic pencil P(lambda) = K - i lambda B - lambda^2 M with B = P^T Z P.
//
struct AcousticPencil
{
  SpMat stiffness;
  SpMat mass;
  SpMat gradient;  // K = G^T G
  SpCMat boundary;
  BoundaryProjector projector;
  CMat zhat;  // n_b x n_b block of the impedance used
  int n_b = 0;
  int domain_components = 1;

  int size() const { return static_cast<int>(stiffness.rows()); }

  SpCMat at(Complex lambda) const
  {
    SpCMat p = detail::to_complex(stiffness) - (kI * lambda) * boundary -
               (lambda * lambda) * detail::to_complex(mass);
    p.makeCompressed();
    return p;
  }

  // Dense boundary block B restricted to the boundary DOFs.
  CMat boundary_block() const
  {
    const CMat pc = projector.p.cast<Complex>();
    return pc.transpose() * zhat * pc;
  }
};

inline int default_boundary_modes(const DomainMesh &mesh)
{
  int nb = 0;
  for (const auto &l : mesh.boundary_loops())
  {
    nb += static_cast<int>(l.vertices.size());
  }
  return std::max(1, std::min(64, nb / 2));
}

inline AcousticPencil assemble_pencil(const DomainMesh &mesh, const ImpedanceOperator &z,
                                      int n_b = 0)
{
  if (n_b <= 0)
  {
    n_b = default_boundary_modes(mesh);
  }
  if (n_b > z.n_trunc())
  {
    throw TruncationExceeded("boundary-mode truncation exceeds the impedance truncation");
  }
  AcousticPencil pen;
  const FemMatrices fem = assemble_fem(mesh);
  pen.stiffness = fem.stiffness;
  pen.mass = fem.mass;
  pen.gradient = fem.gradient;
  pen.projector = boundary_projector(mesh, z.spectrum(), n_b);
  pen.n_b = n_b;
  pen.zhat = z.matrix().topLeftCorner(n_b, n_b);
  pen.domain_components = mesh.domain_components();
  const CMat blk = pen.boundary_block();
  std::vector<Eigen::Triplet<Complex>> bt;
  const auto &dofs = pen.projector.dofs;
  for (std::size_t a = 0; a < dofs.size(); ++a)
  {
    for (std::size_t b = 0; b < dofs.size(); ++b)
    {
      const Complex v = blk(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (v != Complex(0.0))
      {
        bt.emplace_back(dofs[a], dofs[b], v);
      }
    }
  }
  pen.boundary.resize(mesh.vertex_count(), mesh.vertex_count());
  pen.boundary.setFromTriplets(bt.begin(), bt.end());
  return pen;
}

struct SolveOptions
{
  int n_wanted = 10;
  Complex shift{0.0, 0.5};
  double residual_tol = 1e-8;
  double zero_tol = 1e-6;  // |lambda| below this counts as the zero cluster
  int max_krylov = 800;
  std::uint64_t seed = 0;
  Tolerances tol{};
};

struct EigenReport
{
  std::vector<Complex> lambda;  // sorted by |lambda|
  std::vector<double> residual;
  std::vector<bool> converged;
  std::vector<double> q_factor;  // NaN unless Im lambda < 0
  std::vector<CVec> vectors;
  int zero_cluster_size = 0;
  bool in_lower_halfplane = true;  // excluding the zero cluster
  bool real_within_tol = true;     // excluding the zero cluster
  double max_imag_scaled = -std::numeric_limits<double>::infinity();
  double max_abs_imag_scaled = 0.0;
  int unconverged = 0;
  int krylov_dim = 0;

  std::size_t size() const { return lambda.size(); }
  bool in_zero_cluster(std::size_t i, double zero_tol) const { return std::abs(lambda[i]) <= zero_tol; }
};

// |P(lambda) x| / |x|
inline double pencil_residual(const AcousticPencil &pen, Complex lambda, const CVec &x)
{
  const CVec kx = pen.stiffness * x;
  const CVec bx = pen.boundary * x;
  const CVec mx = pen.mass * x;
  return (kx - kI * lambda * bx - lambda * lambda * mx).norm() / x.norm();
}

inline void classify(EigenReport &rep, const SolveOptions &opts)
{
  rep.zero_cluster_size = 0;
  rep.in_lower_halfplane = true;
  rep.real_within_tol = true;
  rep.max_imag_scaled = -std::numeric_limits<double>::infinity();
  rep.max_abs_imag_scaled = 0.0;
  rep.unconverged = 0;
  rep.q_factor.assign(rep.lambda.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < rep.lambda.size(); ++i)
  {
    const Complex l = rep.lambda[i];
    if (!rep.converged[i])
    {
      ++rep.unconverged;
    }
    if (std::abs(l.imag()) > opts.tol.halfplane * (1.0 + std::abs(l)) && l.imag() < 0.0)
    {
      rep.q_factor[i] = std::abs(l.real()) / (-2.0 * l.imag());
    }
    if (std::abs(l) <= opts.zero_tol)
    {
      ++rep.zero_cluster_size;
      continue;
    }
    const double scaled = l.imag() / (1.0 + std::abs(l));
    rep.max_imag_scaled = std::max(rep.max_imag_scaled, scaled);
    rep.max_abs_imag_scaled = std::max(rep.max_abs_imag_scaled, std::abs(scaled));
    if (scaled > opts.tol.halfplane)
    {
      rep.in_lower_halfplane = false;
    }
    if (std::abs(scaled) > opts.tol.halfplane)
    {
      rep.real_within_tol = false;
    }
  }
}

//
// Eigenvalues of the pencil closest to the shift, by Arnoldi on the shift-inverted
// companion form A - sigma E with A = [[0, I], [K, -iB]], E = diag(I, M). One sparse LU of
// P(sigma) serves every step. The Krylov space is extended until the wanted Ritz pairs
// certify and cover the n_wanted eigenvalues of smallest modulus.
//
inline EigenReport solve_pencil(const AcousticPencil &pen, const SolveOptions &opts = {})
{
  const int n = pen.size();
  require(opts.n_wanted >= 1 && opts.n_wanted <= n, "n_wanted must lie in [1, matrix size]");
  const Complex sigma = opts.shift;
  Eigen::SparseLU<SpCMat> lu;
  lu.compute(pen.at(sigma));
  require(lu.info() == Eigen::Success, "shift is an eigenvalue of the pencil (singular P(shift))");
  const SpCMat mc = detail::to_complex(pen.mass);
  auto apply = [&](const CVec &v) {
    const CVec r1 = v.head(n);
    const CVec r2 = v.tail(n);
    const CVec mr1 = mc * r1;
    const CVec rhs = mc * r2 + kI * (pen.boundary * r1) + sigma * mr1;
    const CVec x = lu.solve(rhs);
    CVec out(2 * n);
    out.head(n) = x;
    out.tail(n) = r1 + sigma * x;
    return out;
  };

  const int dim = 2 * n;
  const int m_cap = std::min(dim, std::max(opts.max_krylov, 2 * opts.n_wanted + 20));
  CMat v(dim, m_cap + 1);
  CMat h = CMat::Zero(m_cap + 1, m_cap);
  const CounterRng rng(opts.seed, Stream::Generic);
  auto random_vec = [&](std::uint64_t salt) {
    CVec r(dim);
    for (int i = 0; i < dim; ++i)
    {
      const std::uint64_t idx = salt * static_cast<std::uint64_t>(dim) + static_cast<std::uint64_t>(i);
      r(i) = Complex(rng.normal(idx, 0), rng.normal(idx, 1));
    }
    return r;
  };
  v.col(0) = random_vec(0);
  v.col(0).normalize();

  EigenReport rep;
  int built = 0;
  int target = std::min(m_cap, std::max(2 * opts.n_wanted + 20, 40));
  int want = std::min(opts.n_wanted + 4, dim);
  while (true)
  {
    for (int j = built; j < target; ++j)
    {
      CVec w = apply(v.col(j));
      for (int pass = 0; pass < 2; ++pass)
      {
        const CVec c = v.leftCols(j + 1).adjoint() * w;
        w -= v.leftCols(j + 1) * c;
        h.col(j).head(j + 1) += c;
      }
      double beta = w.norm();
      h(j + 1, j) = beta;
      if (beta <= 1e-14 * h.col(j).head(j + 1).norm())
      {
        // Invariant subspace: continue with a fresh direction.
        h(j + 1, j) = 0.0;
        w = random_vec(static_cast<std::uint64_t>(j) + 1);
        for (int pass = 0; pass < 2; ++pass)
        {
          w -= v.leftCols(j + 1) * (v.leftCols(j + 1).adjoint() * w);
        }
        beta = w.norm();
      }
      v.col(j + 1) = w / beta;
    }
    built = target;

    Eigen::ComplexEigenSolver<CMat> es(h.topLeftCorner(built, built));
    const CVec theta = es.eigenvalues();
    std::vector<int> order(static_cast<std::size_t>(built));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(theta(a)) > std::abs(theta(b)); });
    const int take = std::min(want, built);

    rep = EigenReport{};
    rep.krylov_dim = built;
    bool all_ok = true;
    double max_mod = 0.0;
    for (int q = 0; q < take; ++q)
    {
      const int idx = order[static_cast<std::size_t>(q)];
      const Complex lam = sigma + 1.0 / theta(idx);
      const CVec y = v.leftCols(built) * es.eigenvectors().col(idx);
      CVec x = y.head(n);
      if (x.norm() == 0.0)
      {
        x = y.tail(n);
      }
      x /= x.norm();
      const double res = pencil_residual(pen, lam, x);
      rep.lambda.push_back(lam);
      rep.residual.push_back(res);
      rep.converged.push_back(res <= opts.residual_tol);
      rep.vectors.push_back(x);
      all_ok = all_ok && res <= opts.residual_tol;
    }
    // Sort by modulus and keep the n_wanted smallest.
    std::vector<std::size_t> perm(rep.lambda.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(rep.lambda[a]) < std::abs(rep.lambda[b]);
    });
    for (int q = 0; q < std::min<int>(opts.n_wanted, static_cast<int>(perm.size())); ++q)
    {
      max_mod = std::max(max_mod, std::abs(rep.lambda[perm[static_cast<std::size_t>(q)]]));
    }
    // Every eigenvalue with |lambda| <= max_mod is within max_mod + |sigma| of the shift,
    // so the computed set covers them once its farthest member is beyond that distance.
    double farthest = 0.0;
    for (const Complex &l : rep.lambda)
    {
      farthest = std::max(farthest, std::abs(l - sigma));
    }
    const bool covered = farthest >= max_mod + std::abs(sigma) || take >= dim;
    if (all_ok && covered)
    {
      EigenReport sorted;
      sorted.krylov_dim = built;
      for (int q = 0; q < opts.n_wanted && q < static_cast<int>(perm.size()); ++q)
      {
        const std::size_t i = perm[static_cast<std::size_t>(q)];
        sorted.lambda.push_back(rep.lambda[i]);
        sorted.residual.push_back(rep.residual[i]);
        sorted.converged.push_back(rep.converged[i]);
        sorted.vectors.push_back(rep.vectors[i]);
      }
      rep = std::move(sorted);
      break;
    }
    if (!covered)
    {
      want = std::min(dim, want + std::max(4, want / 2));
    }
    if (built >= m_cap)
    {
      // Report what we have; unconverged pairs stay flagged.
      EigenReport sorted;
      sorted.krylov_dim = built;
      for (int q = 0; q < opts.n_wanted && q < static_cast<int>(perm.size()); ++q)
      {
        const std::size_t i = perm[static_cast<std::size_t>(q)];
        sorted.lambda.push_back(rep.lambda[i]);
        sorted.residual.push_back(rep.residual[i]);
        sorted.converged.push_back(rep.converged[i]);
        sorted.vectors.push_back(rep.vectors[i]);
      }
      rep = std::move(sorted);
      break;
    }
    target = std::min(m_cap, std::max(static_cast<int>(1.6 * built), 2 * want + 20));
  }
  classify(rep, opts);
  return rep;
}

//
// Norm of (A - z)^{-1} for the first-order system in (y, b) = (lambda x, R x) with
// K = R^T R: A = [[-i M^{-1} B, M^{-1} R^T], [R, 0]], measured in the energy norm
// |y|_M^2 + |b|^2. Largest eigenvalue of T^* T by Lanczos, T the weighted resolvent.
//
inline double energy_resolvent_norm(const AcousticPencil &pen, Complex z, int iterations = 80)
{
  const int n = pen.size();
  const int nr = static_cast<int>(pen.gradient.rows());
  const SpCMat mc = detail::to_complex(pen.mass);
  const SpCMat rc = detail::to_complex(pen.gradient);
  std::vector<Eigen::Triplet<Complex>> st;
  const SpCMat top_left = SpCMat(-kI * pen.boundary - z * mc);
  for (int k = 0; k < top_left.outerSize(); ++k)
  {
    for (SpCMat::InnerIterator it(top_left, k); it; ++it)
    {
      st.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (int k = 0; k < rc.outerSize(); ++k)
  {
    for (SpCMat::InnerIterator it(rc, k); it; ++it)
    {
      st.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      st.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()), it.value());
    }
  }
  for (int i = 0; i < nr; ++i)
  {
    st.emplace_back(n + i, n + i, -z);
  }
  SpCMat s(n + nr, n + nr);
  s.setFromTriplets(st.begin(), st.end());
  s.makeCompressed();
  Eigen::SparseLU<SpCMat> lu(s);
  require(lu.info() == Eigen::Success, "resolvent point is an eigenvalue");
  const SpCMat sh = SpCMat(s.adjoint());
  Eigen::SparseLU<SpCMat> luh(sh);
  require(luh.info() == Eigen::Success, "resolvent point is an eigenvalue");
  Eigen::SimplicialLLT<SpMat> chol(pen.mass);
  require(chol.info() == Eigen::Success, "mass matrix is not positive definite");
  // M = P^T L L^T P; with W = L^T P the energy norm of y is |W y|.
  const SpCMat lc = detail::to_complex(SpMat(chol.matrixL()));
  const SpCMat uc = SpCMat(lc.transpose());
  const auto &perm = chol.permutationP();
  auto w_apply = [&](const CVec &y) -> CVec { return uc * (perm * y); };
  auto w_inv = [&](const CVec &u) -> CVec {
    const CVec t = uc.triangularView<Eigen::Upper>().solve(u);
    return perm.inverse() * t;
  };
  // W^{-*} = L^{-1} P and W^* = P^T L.
  auto w_inv_adj = [&](const CVec &u) -> CVec {
    const CVec pu = perm * u;
    return lc.triangularView<Eigen::Lower>().solve(pu);
  };
  auto w_adj = [&](const CVec &u) -> CVec { return perm.inverse() * (lc * u); };
  // T = W S^{-1} D W^{-1}, D = diag(M, I); T^* = W^{-*} D S^{-*} W^*.
  auto t_apply = [&](const CVec &v) {
    CVec rhs(n + nr);
    rhs.head(n) = mc * w_inv(v.head(n));
    rhs.tail(nr) = v.tail(nr);
    const CVec u = lu.solve(rhs);
    CVec out(n + nr);
    out.head(n) = w_apply(u.head(n));
    out.tail(nr) = u.tail(nr);
    return out;
  };
  auto t_adj = [&](const CVec &v) {
    CVec rhs(n + nr);
    rhs.head(n) = w_adj(v.head(n));
    rhs.tail(nr) = v.tail(nr);
    const CVec u = luh.solve(rhs);
    CVec out(n + nr);
    out.head(n) = w_inv_adj(mc * u.head(n));
    out.tail(nr) = u.tail(nr);
    return out;
  };
  const int dim = n + nr;
  const int m = std::min(iterations, dim);
  CMat q(dim, m + 1);
  Vec alpha = Vec::Zero(m);
  Vec beta = Vec::Zero(m);
  const CounterRng rng(12345, Stream::Generic);
  CVec q0(dim);
  for (int i = 0; i < dim; ++i)
  {
    q0(i) = Complex(rng.normal(static_cast<std::uint64_t>(i), 0), rng.normal(static_cast<std::uint64_t>(i), 1));
  }
  q.col(0) = q0.normalized();
  double last = 0.0;
  double estimate = 0.0;
  int used = 0;
  for (int j = 0; j < m; ++j)
  {
    CVec w = t_adj(t_apply(q.col(j)));
    alpha(j) = q.col(j).dot(w).real();
    for (int pass = 0; pass < 2; ++pass)
    {
      w -= q.leftCols(j + 1) * (q.leftCols(j + 1).adjoint() * w);
    }
    beta(j) = w.norm();
    used = j + 1;
    Eigen::SelfAdjointEigenSolver<Mat> es;
    Mat tri = Mat::Zero(used, used);
    for (int i = 0; i < used; ++i)
    {
      tri(i, i) = alpha(i);
      if (i + 1 < used)
      {
        tri(i, i + 1) = beta(i);
        tri(i + 1, i) = beta(i);
      }
    }
    es.compute(tri, Eigen::EigenvaluesOnly);
    estimate = es.eigenvalues()(used - 1);
    if (beta(j) <= 1e-14 * std::abs(estimate) || (j > 5 && std::abs(estimate - last) <= 1e-13 * estimate))
    {
      break;
    }
    last = estimate;
    q.col(j + 1) = w / beta(j);
  }
  return std::sqrt(std::max(estimate, 0.0));
}

struct ResolventSample
{
  Complex z;
  double norm;
  double bound;
  double violation;
};

struct DissipativityReport
{
  double herm_check = 0.0;        // min eigenvalue of Herm(B)
  double halfplane_check = 0.0;   // max Im(lambda) / (1 + |lambda|) outside the zero cluster
  bool halfplane_ok = true;
  std::vector<ResolventSample> resolvent;
  double max_violation = 0.0;
};

inline std::vector<Complex> default_resolvent_grid()
{
  std::vector<Complex> g;
  for (double x : {0.5, 2.0, 5.0})
  {
    for (double y : {0.1, 0.5, 2.0})
    {
      g.emplace_back(x, y);
    }
  }
  return g;
}

inline DissipativityReport verify_mdissipativity(const AcousticPencil &pen, const EigenReport &rep,
                                                 const std::vector<Complex> &grid = default_resolvent_grid(),
                                                 const Tolerances &tol = default_tolerances())
{
  DissipativityReport out;
  const CMat blk = pen.boundary_block();
  const double block_min = min_hermitian_eigenvalue(blk);
  const bool has_interior = static_cast<int>(pen.projector.dofs.size()) < pen.size();
  out.herm_check = has_interior ? std::min(0.0, block_min) : block_min;
  out.halfplane_check = rep.max_imag_scaled;
  if (!std::isfinite(out.halfplane_check))
  {
    out.halfplane_check = 0.0;
  }
  out.halfplane_ok = out.halfplane_check <= tol.halfplane;
  for (const Complex &z : grid)
  {
    require(z.imag() > 0.0, "resolvent grid must lie in the upper half-plane");
    const double nrm = energy_resolvent_norm(pen, z);
    const double bound = 1.0 / z.imag();
    out.resolvent.push_back({z, nrm, bound, std::max(0.0, nrm - bound)});
    out.max_violation = std::max(out.max_violation, nrm - bound);
  }
  return out;
}

//
// Eigenvalue tracking across a mesh family. `make_impedance` receives the boundary
// spectrum of each mesh and the boundary-mode count. Tracked eigenvalues are the first
// n_track outside the zero cluster with Re lambda >= 0, sorted by modulus.
//
struct RefinementLevel
{
  double h = 0.0;
  int dofs = 0;
  std::vector<Complex> tracked;
  EigenReport report;
};

struct RefinementTable
{
  std::vector<RefinementLevel> levels;
  std::vector<std::vector<Complex>> matched;  // [level][track], aligned with level 0
  std::vector<double> observed_order;         // per track, from the last three levels
  std::vector<double> min_gap;                // per level, min pairwise distance of distinct tracks
  std::vector<double> last_relative_change;   // per track
  bool ambiguous = false;
  std::vector<std::string> notes;
};

struct RefinementOptions
{
  int n_track = 5;
  int n_b = 0;  // 0: default per mesh
  int spectrum_extra = 2;
  SolveOptions solve{};
  std::optional<std::vector<double>> reference;  // exact tracked values, if known
  int workers = 1;
  double gap_ratio = 0.5;
};

inline SpectrumPtr boundary_spectrum_for(const DomainMesh &mesh, int count)
{
  auto geom = std::make_shared<const BoundaryGeometry>(mesh.boundary_geometry());
  return std::make_shared<const BoundarySpectrum>(build_curve_spectrum(geom, count));
}

inline std::vector<Complex> tracked_eigenvalues(const EigenReport &rep, int n_track, double zero_tol)
{
  std::vector<Complex> out;
  for (std::size_t i = 0; i < rep.lambda.size() && static_cast<int>(out.size()) < n_track; ++i)
  {
    const Complex l = rep.lambda[i];
    if (std::abs(l) > zero_tol && l.real() >= -1e-8 * (1.0 + std::abs(l)))
    {
      out.push_back(l);
    }
  }
  return out;
}

inline RefinementTable refinement_study(
    const std::vector<DomainMesh> &meshes,
    const std::function<ImpedanceOperator(SpectrumPtr, int)> &make_impedance,
    const RefinementOptions &opts)
{
  require(meshes.size() >= 3, "refinement study needs at least 3 meshes");
  RefinementTable tab;
  tab.levels.resize(meshes.size());
  parallel_for(static_cast<int>(meshes.size()), opts.workers, [&](int li) {
    const DomainMesh &mesh = meshes[static_cast<std::size_t>(li)];
    const int nb = opts.n_b > 0 ? opts.n_b : default_boundary_modes(mesh);
    const SpectrumPtr spec = boundary_spectrum_for(mesh, 2 * nb + opts.spectrum_extra);
    const ImpedanceOperator z = make_impedance(spec, nb);
    const AcousticPencil pen = assemble_pencil(mesh, z, nb);
    SolveOptions so = opts.solve;
    so.n_wanted = std::min(pen.size(), std::max(so.n_wanted, 2 * opts.n_track + 4 * mesh.domain_components() + 4));
    RefinementLevel lvl;
    lvl.h = mesh.max_edge();
    lvl.dofs = pen.size();
    lvl.report = solve_pencil(pen, so);
    lvl.tracked = tracked_eigenvalues(lvl.report, opts.n_track, so.zero_tol);
    tab.levels[static_cast<std::size_t>(li)] = std::move(lvl);
  });
  for (const auto &lvl : tab.levels)
  {
    if (static_cast<int>(lvl.tracked.size()) < opts.n_track)
    {
      tab.ambiguous = true;
      tab.notes.push_back("fewer tracked eigenvalues than requested at h = " + std::to_string(lvl.h));
      return tab;
    }
  }
  // Nearest-neighbour matching against the previous level, with a gap-ratio guard.
  tab.matched.push_back(tab.levels[0].tracked);
  for (std::size_t li = 1; li < tab.levels.size(); ++li)
  {
    const auto &prev = tab.matched.back();
    const auto &cand = tab.levels[li].tracked;
    std::vector<bool> used(cand.size(), false);
    std::vector<Complex> row;
    for (std::size_t k = 0; k < prev.size(); ++k)
    {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < cand.size(); ++c)
      {
        if (!used[c] && std::abs(cand[c] - prev[k]) < best)
        {
          best = std::abs(cand[c] - prev[k]);
          arg = c;
        }
      }
      // Distance to the nearest distinct eigenvalue of the previous level.
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < prev.size(); ++o)
      {
        const double d = std::abs(prev[o] - prev[k]);
        if (o != k && d > 1e-6 * (1.0 + std::abs(prev[k])))
        {
          gap = std::min(gap, d);
        }
      }
      if (best > opts.gap_ratio * gap)
      {
        tab.ambiguous = true;
        tab.notes.push_back("tracking ambiguity for eigenvalue " + std::to_string(k) + " at level " +
                            std::to_string(li));
      }
      used[arg] = true;
      row.push_back(cand[arg]);
    }
    tab.matched.push_back(std::move(row));
  }
  for (const auto &row : tab.matched)
  {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < row.size(); ++a)
    {
      for (std::size_t b = a + 1; b < row.size(); ++b)
      {
        const double d = std::abs(row[a] - row[b]);
        if (d > 1e-6 * (1.0 + std::abs(row[a])))
        {
          g = std::min(g, d);
        }
      }
    }
    tab.min_gap.push_back(g);
  }
  const std::size_t nl = tab.matched.size();
  for (int k = 0; k < opts.n_track; ++k)
  {
    const Complex l1 = tab.matched[nl - 3][static_cast<std::size_t>(k)];
    const Complex l2 = tab.matched[nl - 2][static_cast<std::size_t>(k)];
    const Complex l3 = tab.matched[nl - 1][static_cast<std::size_t>(k)];
    const double h2 = tab.levels[nl - 2].h;
    const double h3 = tab.levels[nl - 1].h;
    double order;
    if (opts.reference)
    {
      const double ref = (*opts.reference)[static_cast<std::size_t>(k)];
      order = std::log(std::abs(l2 - ref) / std::abs(l3 - ref)) / std::log(h2 / h3);
    }
    else
    {
      // Assumes a constant refinement ratio over the last three levels.
      order = std::log(std::abs(l1 - l2) / std::abs(l2 - l3)) / std::log(h2 / h3);
    }
    tab.observed_order.push_back(order);
    tab.last_relative_change.push_back(std::abs(l3 - l2) / std::abs(l3));
  }
  return tab;
}

//
// Monte Carlo over random impedances zeta = i c Xi_s + sum c_n eta_n Y_n on a fixed mesh.
//
struct MonteCarloOptions
{
  int n_samples = 50;
  std::uint64_t first_seed = 0;
  int n_b = 0;
  int spectrum_extra = 2;
  SolveOptions solve{};
  int workers = 1;
};

struct MonteCarloSample
{
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EigenReport report;
  bool selfadjoint = false;
  bool accretive = false;
};

struct MonteCarloReport
{
  std::vector<MonteCarloSample> samples;
  int failures = 0;
  double fraction_halfplane = 0.0;
  double fraction_real = 0.0;
  bool theorem_regime = true;
};

inline MonteCarloReport monte_carlo_spectrum(const DomainMesh &mesh, const RandomImpedanceSpec &rs,
                                             const MonteCarloOptions &opts)
{
  rs.validate();
  require(opts.n_samples >= 1, "Monte Carlo needs at least one sample");
  const int nb = opts.n_b > 0 ? opts.n_b : default_boundary_modes(mesh);
  const SpectrumPtr spec = boundary_spectrum_for(mesh, 2 * nb + opts.spectrum_extra);
  MonteCarloReport out;
  out.theorem_regime = random_impedance_in_theorem_regime(*spec);
  out.samples.resize(static_cast<std::size_t>(opts.n_samples));
  const TripleProductTensor tensor(spec, nb);
  parallel_for(opts.n_samples, opts.workers, [&](int i) {
    MonteCarloSample &smp = out.samples[static_cast<std::size_t>(i)];
    smp.seed = opts.first_seed + static_cast<std::uint64_t>(i);
    try
    {
      const SpectralFunction zeta = sample_random_impedance(spec, rs, spec->count(), smp.seed);
      const ImpedanceOperator z = ImpedanceOperator::matrix(spec, build_multiplier(tensor, zeta, 0.0, 0.0).entries);
      smp.selfadjoint = selfadjointness_criterion(z);
      smp.accretive = is_accretive(z).verdict;
      const AcousticPencil pen = assemble_pencil(mesh, z, nb);
      SolveOptions so = opts.solve;
      so.seed = smp.seed;
      smp.report = solve_pencil(pen, so);
      smp.ok = smp.report.unconverged == 0;
      if (!smp.ok)
      {
        smp.error = std::to_string(smp.report.unconverged) + " unconverged eigenpairs";
      }
    }
    catch (const std::exception &e)
    {
      smp.ok = false;
      smp.error = e.what();
    }
  });
  int good = 0;
  int half = 0;
  int real = 0;
  for (const auto &s : out.samples)
  {
    if (!s.ok)
    {
      ++out.failures;
      continue;
    }
    ++good;
    half += s.report.in_lower_halfplane ? 1 : 0;
    real += s.report.real_within_tol ? 1 : 0;
  }
  if (good > 0)
  {
    out.fraction_halfplane = static_cast<double>(half) / good;
    out.fraction_real = static_cast<double>(real) / good;
  }
  return out;
}

}  // namespace gibc

#endif  // GIBC_ACOUSTIC_HPP
