// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_SYM_EIGS_HPP
#define GIBC_SYM_EIGS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "gibc/core.hpp"

namespace gibc
{

using SpMat = Eigen::SparseMatrix<double>;

struct SymEigsOptions
{
  // Shift for the shift-invert operator (S - shift*M)^{-1} M. Must lie below the spectrum
  // so that the factored matrix is positive definite; NaN selects a small negative default.
  double shift = std::numeric_limits<double>::quiet_NaN();
  int block_size = 6;
  // Initial Krylov dimension as a multiple of the number of wanted pairs.
  double krylov_factor = 2.5;
  int max_restarts = 4;
  double residual_tol = 1e-8;
  // Problems with at most this many unknowns are solved densely.
  int dense_limit = 1200;
  unsigned seed = 12345;
};

struct SymEigsResult
{
  Vec values;
  Mat vectors;  // M-orthonormal columns
  Vec residuals;  // ||S x - mu M x||_{M^{-1}} per pair
  int krylov_dim = 0;
};

namespace detail
{

inline Vec dual_residuals(const SpMat &s, const SpMat &m, const Vec &mass_diag, bool lumped,
                          const Vec &vals, const Mat &vecs)
{
  Vec res(vals.size());
  Eigen::SimplicialLDLT<SpMat> mfac;
  if (!lumped)
  {
    mfac.compute(m);
  }
  for (Eigen::Index i = 0; i < vals.size(); ++i)
  {
    const Vec r = s * vecs.col(i) - vals(i) * (m * vecs.col(i));
    if (lumped)
    {
      res(i) = std::sqrt((r.array().square() / mass_diag.array()).sum());
    }
    else
    {
      res(i) = std::sqrt(std::max(0.0, r.dot(mfac.solve(r))));
    }
  }
  return res;
}

}  // namespace detail

//
// Smallest `count` eigenpairs of the symmetric-definite pencil S x = mu M x with S positive
// semidefinite and M positive definite. Large problems use block Lanczos with full
// M-reorthogonalization on the shift-inverted operator; blocks resolve exact multiplicities
// up to the block size (symmetric meshes produce them). The Krylov dimension grows on
// restart until every wanted residual is below tolerance.
//
inline SymEigsResult smallest_generalized_eigs(const SpMat &s, const SpMat &m, int count,
                                               const SymEigsOptions &opts = {})
{
  const Eigen::Index n = s.rows();
  require(s.cols() == n && m.rows() == n && m.cols() == n, "eigenproblem size mismatch");
  require(count >= 1 && count <= n, "requested eigenpair count exceeds problem size");

  // Lumped (diagonal) mass is detected from the sparsity pattern.
  bool lumped = true;
  Vec mass_diag = m.diagonal();
  for (int k = 0; k < m.outerSize() && lumped; ++k)
  {
    for (SpMat::InnerIterator it(m, k); it; ++it)
    {
      if (it.row() != it.col() && it.value() != 0.0)
      {
        lumped = false;
        break;
      }
    }
  }

  SymEigsResult out;
  if (n <= opts.dense_limit || 3 * count + 2 * opts.block_size >= n)
  {
    const Mat sd = Mat(s);
    const Mat md = Mat(m);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sd, md);
    require(es.info() == Eigen::Success, "dense generalized eigensolver failed");
    out.values = es.eigenvalues().head(count);
    out.vectors = es.eigenvectors().leftCols(count);
    out.residuals = detail::dual_residuals(s, m, mass_diag, lumped, out.values, out.vectors);
    out.krylov_dim = static_cast<int>(n);
    return out;
  }

  double shift = opts.shift;
  if (std::isnan(shift))
  {
    // Well below the first positive eigenvalue, far enough from zero for a stable
    // factorization of the singular stiffness.
    const double scale = s.diagonal().mean() / m.diagonal().mean();
    shift = -1e-6 * scale;
  }
  const SpMat shifted = s - shift * m;
  Eigen::SimplicialLDLT<SpMat> fac(shifted);
  require(fac.info() == Eigen::Success, "factorization of shifted stiffness failed");

  const int b = std::max(1, opts.block_size);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;

  // M-orthonormalizes w against the first `cols` columns of v (two passes) and itself.
  // Returns the projection coefficients; rank-deficient columns are refilled randomly.
  auto orthonormalize = [&](Mat &v, Eigen::Index cols, Mat &w, Mat &coef) {
    coef = Mat::Zero(cols + w.cols(), w.cols());
    for (int pass = 0; pass < 2; ++pass)
    {
      if (cols > 0)
      {
        const Mat c = v.leftCols(cols).transpose() * (m * w);
        w -= v.leftCols(cols) * c;
        coef.topRows(cols) += c;
      }
    }
    for (Eigen::Index j = 0; j < w.cols(); ++j)
    {
      for (int pass = 0; pass < 2; ++pass)
      {
        for (Eigen::Index i = 0; i < j; ++i)
        {
          const double c = w.col(i).dot(m * w.col(j));
          w.col(j) -= c * w.col(i);
          coef(cols + i, j) += c;
        }
      }
      double nrm = std::sqrt(std::max(0.0, w.col(j).dot(m * w.col(j))));
      if (nrm < 1e-12)
      {
        // Breakdown: continue with a fresh random direction.
        for (Eigen::Index r = 0; r < n; ++r)
        {
          w(r, j) = gauss(rng);
        }
        for (int pass = 0; pass < 2; ++pass)
        {
          if (cols > 0)
          {
            w.col(j) -= v.leftCols(cols) * (v.leftCols(cols).transpose() * (m * w.col(j)));
          }
          for (Eigen::Index i = 0; i < j; ++i)
          {
            w.col(j) -= w.col(i).dot(m * w.col(j)) * w.col(i);
          }
        }
        coef(cols + j, j) = 0.0;
        nrm = std::sqrt(w.col(j).dot(m * w.col(j)));
      }
      else
      {
        coef(cols + j, j) = nrm;
      }
      w.col(j) /= nrm;
    }
  };

  int krylov = static_cast<int>(std::ceil(opts.krylov_factor * count)) + 2 * b;
  for (int attempt = 0; attempt <= opts.max_restarts; ++attempt)
  {
    krylov = std::min<int>(krylov, static_cast<int>(n) - b);
    const int steps = (krylov + b - 1) / b;
    const Eigen::Index dim = static_cast<Eigen::Index>(steps) * b;
    Mat v = Mat::Zero(n, dim + b);
    Mat h = Mat::Zero(dim + b, dim);

    Mat w(n, b);
    for (Eigen::Index i = 0; i < w.size(); ++i)
    {
      w.data()[i] = gauss(rng);
    }
    Mat coef;
    orthonormalize(v, 0, w, coef);
    v.leftCols(b) = w;

    for (int j = 0; j < steps; ++j)
    {
      const Eigen::Index c0 = static_cast<Eigen::Index>(j) * b;
      Mat blk = m * v.middleCols(c0, b);
      for (Eigen::Index c = 0; c < b; ++c)
      {
        blk.col(c) = fac.solve(Vec(blk.col(c)));
      }
      orthonormalize(v, c0 + b, blk, coef);
      h.block(0, c0, c0 + 2 * b, b) = coef;
      v.middleCols(c0 + b, b) = blk;
    }

    Mat t = h.topRows(dim);
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(t);
    // Largest theta <=> smallest mu.
    const Vec theta = es.eigenvalues().reverse();
    const Mat svecs = es.eigenvectors().rowwise().reverse();

    Vec vals(count);
    Mat vecs(n, count);
    for (int i = 0; i < count; ++i)
    {
      vals(i) = shift + 1.0 / theta(i);
      vecs.col(i) = v.leftCols(dim) * svecs.col(i);
      vecs.col(i) /= std::sqrt(vecs.col(i).dot(m * vecs.col(i)));
    }
    // Ascending order (theta ordering already gives it, guard against ties).
    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int c) { return vals(a) < vals(c); });
    out.values.resize(count);
    out.vectors.resize(n, count);
    for (int i = 0; i < count; ++i)
    {
      out.values(i) = vals(order[static_cast<std::size_t>(i)]);
      out.vectors.col(i) = vecs.col(order[static_cast<std::size_t>(i)]);
    }
    out.residuals = detail::dual_residuals(s, m, mass_diag, lumped, out.values, out.vectors);
    out.krylov_dim = static_cast<int>(dim);
    if (out.residuals.maxCoeff() <= opts.residual_tol)
    {
      return out;
    }
    if (krylov >= static_cast<int>(n) - b)
    {
      break;
    }
    krylov = static_cast<int>(krylov * 1.6);
  }
  throw NonConvergence("generalized eigensolver did not converge: max residual " +
                           std::to_string(out.residuals.maxCoeff()),
                       out.residuals.maxCoeff());
}

}  // namespace gibc

#endif  // GIBC_SYM_EIGS_HPP
