// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_MESH_HPP
#define GIBC_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "gibc/core.hpp"
#include "gibc/geometry.hpp"
#include "gibc/sym_eigs.hpp"

namespace gibc
{

// A closed chain of boundary vertices; arclength has one more entry than vertices.
struct BoundaryLoop
{
  std::vector<int> vertices;
  std::vector<double> arclength;
};

//
// Triangulated polygonal domain with piecewise-constant materials: alpha is a symmetric
// positive-definite 2x2 tensor and beta a positive scalar on each triangle.
//
class DomainMesh
{
public:
  DomainMesh(std::vector<Eigen::Vector2d> vertices, std::vector<std::array<int, 3>> triangles)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles))
  {
    require(!triangles_.empty(), "mesh has no triangles");
    for (auto &t : triangles_)
    {
      for (int v : t)
      {
        require(v >= 0 && v < static_cast<int>(vertices_.size()), "triangle index out of range");
      }
      double a = signed_area(t);
      require(std::abs(a) > 0.0, "degenerate triangle");
      if (a < 0.0)
      {
        std::swap(t[1], t[2]);
      }
    }
    alpha_.assign(triangles_.size(), Eigen::Matrix2d::Identity());
    beta_.assign(triangles_.size(), 1.0);
    build_loops();
    count_components();
  }

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  const std::vector<Eigen::Vector2d> &vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>> &triangles() const { return triangles_; }
  const std::vector<BoundaryLoop> &boundary_loops() const { return loops_; }
  const std::vector<Eigen::Matrix2d> &alpha() const { return alpha_; }
  const std::vector<double> &beta() const { return beta_; }
  int domain_components() const { return domain_components_; }

  double signed_area(const std::array<int, 3> &t) const
  {
    const Eigen::Vector2d e1 = vertices_[t[1]] - vertices_[t[0]];
    const Eigen::Vector2d e2 = vertices_[t[2]] - vertices_[t[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
  }

  // Longest edge over the mesh.
  double max_edge() const
  {
    double h = 0.0;
    for (const auto &t : triangles_)
    {
      for (int k = 0; k < 3; ++k)
      {
        h = std::max(h, (vertices_[t[k]] - vertices_[t[(k + 1) % 3]]).norm());
      }
    }
    return h;
  }

  void set_materials(std::vector<Eigen::Matrix2d> alpha, std::vector<double> beta)
  {
    require(alpha.size() == triangles_.size() && beta.size() == triangles_.size(),
            "one material value per triangle");
    for (std::size_t i = 0; i < alpha.size(); ++i)
    {
      require((alpha[i] - alpha[i].transpose()).norm() <= 1e-14 * alpha[i].norm(),
              "alpha must be symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(alpha[i]);
      require(es.eigenvalues()(0) > 0.0, "alpha must be positive definite");
      require(beta[i] > 0.0, "beta must be positive");
    }
    alpha_ = std::move(alpha);
    beta_ = std::move(beta);
  }

  void set_uniform_materials(const Eigen::Matrix2d &alpha, double beta)
  {
    set_materials(std::vector<Eigen::Matrix2d>(triangles_.size(), alpha),
                  std::vector<double>(triangles_.size(), beta));
  }

  // Boundary geometry traced by the loops, one polyline component per loop.
  BoundaryGeometry boundary_geometry() const
  {
    std::vector<CurveComponent> comps;
    for (const auto &loop : loops_)
    {
      std::vector<Eigen::Vector2d> pts;
      for (int v : loop.vertices)
      {
        pts.push_back(vertices_[v]);
      }
      comps.push_back(CurveComponent::polyline(std::move(pts)));
    }
    return BoundaryGeometry::curves(std::move(comps));
  }

  // Replaces the computed loops by user-supplied ones after checking they trace the same
  // boundary edges.
  void set_boundary_loops(const std::vector<std::vector<int>> &loops)
  {
    std::map<std::pair<int, int>, int> edges;
    for (const auto &l : loops_)
    {
      for (std::size_t i = 0; i < l.vertices.size(); ++i)
      {
        const int a = l.vertices[i];
        const int b = l.vertices[(i + 1) % l.vertices.size()];
        edges[{std::min(a, b), std::max(a, b)}] = 0;
      }
    }
    std::size_t seen = 0;
    for (const auto &l : loops)
    {
      require(l.size() >= 3, "boundary loop needs at least 3 vertices");
      for (std::size_t i = 0; i < l.size(); ++i)
      {
        const int a = l[i];
        const int b = l[(i + 1) % l.size()];
        auto it = edges.find({std::min(a, b), std::max(a, b)});
        require(it != edges.end(), "boundary loop uses a non-boundary edge");
        require(it->second == 0, "boundary edge listed twice");
        it->second = 1;
        ++seen;
      }
    }
    require(seen == edges.size(), "boundary loops do not cover the boundary");
    loops_.clear();
    for (const auto &l : loops)
    {
      loops_.push_back(make_loop(l));
    }
  }

private:
  BoundaryLoop make_loop(const std::vector<int> &vs) const
  {
    BoundaryLoop loop;
    loop.vertices = vs;
    loop.arclength.push_back(0.0);
    for (std::size_t i = 0; i < vs.size(); ++i)
    {
      const double seg = (vertices_[vs[(i + 1) % vs.size()]] - vertices_[vs[i]]).norm();
      loop.arclength.push_back(loop.arclength.back() + seg);
    }
    return loop;
  }

  void build_loops()
  {
    // Directed boundary edges follow the (counter-clockwise) triangle orientation.
    std::map<std::pair<int, int>, int> count;
    for (const auto &t : triangles_)
    {
      for (int k = 0; k < 3; ++k)
      {
        const int a = t[k];
        const int b = t[(k + 1) % 3];
        ++count[{std::min(a, b), std::max(a, b)}];
      }
    }
    std::map<int, int> next;
    for (const auto &t : triangles_)
    {
      for (int k = 0; k < 3; ++k)
      {
        const int a = t[k];
        const int b = t[(k + 1) % 3];
        const int c = count[{std::min(a, b), std::max(a, b)}];
        require(c <= 2, "edge shared by more than two triangles");
        if (c == 1)
        {
          require(next.count(a) == 0, "boundary is not a disjoint union of simple loops");
          next[a] = b;
        }
      }
    }
    require(!next.empty(), "mesh has no boundary");
    std::map<int, bool> used;
    for (const auto &[start, unused] : next)
    {
      (void)unused;
      if (used[start])
      {
        continue;
      }
      std::vector<int> vs;
      int v = start;
      do
      {
        used[v] = true;
        vs.push_back(v);
        auto it = next.find(v);
        require(it != next.end(), "open boundary chain");
        v = it->second;
      } while (v != start);
      loops_.push_back(make_loop(vs));
    }
  }

  void count_components()
  {
    detail::UnionFind uf(static_cast<int>(vertices_.size()));
    std::vector<bool> touched(vertices_.size(), false);
    for (const auto &t : triangles_)
    {
      uf.unite(t[0], t[1]);
      uf.unite(t[1], t[2]);
      for (int v : t)
      {
        touched[static_cast<std::size_t>(v)] = true;
      }
    }
    for (bool b : touched)
    {
      require(b, "mesh has isolated vertices");
    }
    std::vector<int> roots;
    for (int v = 0; v < vertex_count(); ++v)
    {
      roots.push_back(uf.find(v));
    }
    std::sort(roots.begin(), roots.end());
    domain_components_ = static_cast<int>(std::unique(roots.begin(), roots.end()) - roots.begin());
  }

  std::vector<Eigen::Vector2d> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Eigen::Matrix2d> alpha_;
  std::vector<double> beta_;
  std::vector<BoundaryLoop> loops_;
  int domain_components_ = 1;
};

namespace detail
{
struct Ring
{
  std::vector<int> ids;
  std::vector<double> frac;  // position along the ring in [0, 1)
};

// Triangulates the band between two closed rings by merging their fractional positions.
inline void zip_rings(const Ring &in, const Ring &out, std::vector<std::array<int, 3>> &tris)
{
  const std::size_t n1 = in.ids.size();
  const std::size_t n2 = out.ids.size();
  std::size_t i = 0;
  std::size_t j = 0;
  auto fr = [](const Ring &r, std::size_t k) {
    return k < r.frac.size() ? r.frac[k] : 1.0 + r.frac[k - r.frac.size()];
  };
  while (i < n1 || j < n2)
  {
    const bool advance_outer = (i == n1) || (j < n2 && fr(out, j + 1) <= fr(in, i + 1));
    if (advance_outer)
    {
      tris.push_back({in.ids[i % n1], out.ids[j % n2], out.ids[(j + 1) % n2]});
      ++j;
    }
    else
    {
      tris.push_back({in.ids[i % n1], out.ids[j % n2], in.ids[(i + 1) % n1]});
      ++i;
    }
  }
}

inline std::vector<std::array<int, 3>> fan(int center, const Ring &r)
{
  std::vector<std::array<int, 3>> tris;
  const std::size_t n = r.ids.size();
  for (std::size_t k = 0; k < n; ++k)
  {
    tris.push_back({center, r.ids[k], r.ids[(k + 1) % n]});
  }
  return tris;
}
}  // namespace detail

//
// Disk of given radius: `rings` concentric rings, ring k holding round(segments k / rings)
// nodes (at least 6), so the boundary is a regular polygon with `segments` sides. The
// default segments = 6 rings gives near-equilateral triangles with h = radius / rings.
//
inline DomainMesh disk_mesh(double radius, int rings, int segments = 0,
                            Eigen::Vector2d center = Eigen::Vector2d::Zero())
{
  require(radius > 0.0 && rings >= 1, "disk needs a positive radius and at least one ring");
  if (segments <= 0)
  {
    segments = 6 * rings;
  }
  require(segments >= 6, "disk boundary needs at least 6 segments");
  std::vector<Eigen::Vector2d> pts{center};
  std::vector<std::array<int, 3>> tris;
  detail::Ring prev;
  for (int k = 1; k <= rings; ++k)
  {
    const int n = k == rings ? segments
                             : std::max(6, static_cast<int>(std::lround(
                                               static_cast<double>(segments) * k / rings)));
    const double r = radius * k / rings;
    detail::Ring ring;
    for (int j = 0; j < n; ++j)
    {
      const double f = static_cast<double>(j) / n;
      ring.ids.push_back(static_cast<int>(pts.size()));
      ring.frac.push_back(f);
      pts.push_back(center + r * Eigen::Vector2d(std::cos(2.0 * kPi * f), std::sin(2.0 * kPi * f)));
    }
    if (k == 1)
    {
      tris = detail::fan(0, ring);
    }
    else
    {
      detail::zip_rings(prev, ring, tris);
    }
    prev = std::move(ring);
  }
  return {std::move(pts), std::move(tris)};
}

// Annulus r_in < |x| < r_out with `layers` radial layers; ring node counts scale with radius.
inline DomainMesh annulus_mesh(double r_in, double r_out, int layers, int segments,
                               Eigen::Vector2d center = Eigen::Vector2d::Zero())
{
  require(r_in > 0.0 && r_out > r_in, "annulus needs 0 < r_in < r_out");
  require(layers >= 1 && segments >= 6, "annulus needs layers >= 1 and segments >= 6");
  std::vector<Eigen::Vector2d> pts;
  std::vector<std::array<int, 3>> tris;
  detail::Ring prev;
  for (int k = layers; k >= 0; --k)
  {
    const double r = r_in + (r_out - r_in) * k / layers;
    const int n = k == layers ? segments
                              : std::max(6, static_cast<int>(std::lround(segments * r / r_out)));
    detail::Ring ring;
    for (int j = 0; j < n; ++j)
    {
      const double f = static_cast<double>(j) / n;
      ring.ids.push_back(static_cast<int>(pts.size()));
      ring.frac.push_back(f);
      pts.push_back(center + r * Eigen::Vector2d(std::cos(2.0 * kPi * f), std::sin(2.0 * kPi * f)));
    }
    if (k < layers)
    {
      detail::zip_rings(ring, prev, tris);
    }
    prev = std::move(ring);
  }
  return {std::move(pts), std::move(tris)};
}

//
// Polygon star-shaped with respect to `center` (counter-clockwise vertices). Ring k is the
// polygon scaled by k / rings about the center, with each edge split into
// max(1, round(k * per_edge_e / rings)) pieces; per_edge_e grows with the edge length so
// that boundary segments are at most `h` long.
//
inline DomainMesh star_polygon_mesh(const std::vector<Eigen::Vector2d> &poly, double h,
                                    std::optional<Eigen::Vector2d> center_opt = std::nullopt)
{
  const std::size_t nv = poly.size();
  require(nv >= 3, "polygon needs at least 3 vertices");
  require(h > 0.0, "mesh size must be positive");
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  if (center_opt)
  {
    center = *center_opt;
  }
  else
  {
    for (const auto &p : poly)
    {
      center += p / static_cast<double>(nv);
    }
  }
  double perim = 0.0;
  double min_dist = std::numeric_limits<double>::infinity();
  std::vector<double> edge_len(nv);
  for (std::size_t e = 0; e < nv; ++e)
  {
    const Eigen::Vector2d a = poly[e];
    const Eigen::Vector2d b = poly[(e + 1) % nv];
    const Eigen::Vector2d d = b - a;
    edge_len[e] = d.norm();
    require(edge_len[e] > 0.0, "polygon has a zero-length edge");
    const Eigen::Vector2d rel = center - a;
    const double cross = d.x() * rel.y() - d.y() * rel.x();
    require(cross > 0.0, "polygon is not counter-clockwise star-shaped about the center");
    min_dist = std::min(min_dist, cross / edge_len[e]);
    perim += edge_len[e];
  }
  const int rings = std::max(1, static_cast<int>(std::ceil(min_dist / h)));
  std::vector<int> per_edge(nv);
  for (std::size_t e = 0; e < nv; ++e)
  {
    per_edge[e] = std::max(1, static_cast<int>(std::ceil(edge_len[e] / h - 1e-9)));
  }
  std::vector<Eigen::Vector2d> pts{center};
  std::vector<std::array<int, 3>> tris;
  detail::Ring prev;
  for (int k = 1; k <= rings; ++k)
  {
    const double scale = static_cast<double>(k) / rings;
    detail::Ring ring;
    double s0 = 0.0;
    for (std::size_t e = 0; e < nv; ++e)
    {
      const int m = k == rings ? per_edge[e]
                               : std::max(1, static_cast<int>(std::lround(
                                                 static_cast<double>(per_edge[e]) * k / rings)));
      for (int j = 0; j < m; ++j)
      {
        const double u = static_cast<double>(j) / m;
        const Eigen::Vector2d p = poly[e] + u * (poly[(e + 1) % nv] - poly[e]);
        ring.ids.push_back(static_cast<int>(pts.size()));
        ring.frac.push_back((s0 + u * edge_len[e]) / perim);
        pts.push_back(center + scale * (p - center));
      }
      s0 += edge_len[e];
    }
    if (k == 1)
    {
      tris = detail::fan(0, ring);
    }
    else
    {
      detail::zip_rings(prev, ring, tris);
    }
    prev = std::move(ring);
  }
  return {std::move(pts), std::move(tris)};
}

//
// P1 finite-element matrices: stiffness int alpha^{-1} grad u . grad v and mass
// int beta u v (consistent).
//
struct FemMatrices
{
  SpMat stiffness;
  SpMat mass;
  SpMat gradient;  // rows (2 per triangle) with K = G^T G
};

inline FemMatrices assemble_fem(const DomainMesh &mesh)
{
  const int nv = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> kt;
  std::vector<Eigen::Triplet<double>> mt;
  std::vector<Eigen::Triplet<double>> gt;
  kt.reserve(9 * mesh.triangles().size());
  mt.reserve(9 * mesh.triangles().size());
  gt.reserve(6 * mesh.triangles().size());
  for (int ti = 0; ti < mesh.triangle_count(); ++ti)
  {
    const auto &t = mesh.triangles()[ti];
    const Eigen::Vector2d p0 = mesh.vertices()[t[0]];
    const Eigen::Vector2d p1 = mesh.vertices()[t[1]];
    const Eigen::Vector2d p2 = mesh.vertices()[t[2]];
    const double area = mesh.signed_area(t);
    // Gradients of the barycentric coordinates.
    Eigen::Matrix<double, 2, 3> g;
    g.col(0) = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / (2.0 * area);
    g.col(1) = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / (2.0 * area);
    g.col(2) = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / (2.0 * area);
    const Eigen::Matrix2d ainv = mesh.alpha()[static_cast<std::size_t>(ti)].inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(ainv);
    const Eigen::Matrix2d root = es.operatorSqrt();
    const Eigen::Matrix<double, 2, 3> r = std::sqrt(area) * root * g;
    const Eigen::Matrix3d ke = r.transpose() * r;
    const double beta = mesh.beta()[static_cast<std::size_t>(ti)];
    for (int a = 0; a < 3; ++a)
    {
      for (int b = 0; b < 3; ++b)
      {
        kt.emplace_back(t[a], t[b], ke(a, b));
        mt.emplace_back(t[a], t[b], beta * area * (a == b ? 2.0 : 1.0) / 12.0);
      }
      gt.emplace_back(2 * ti, t[a], r(0, a));
      gt.emplace_back(2 * ti + 1, t[a], r(1, a));
    }
  }
  FemMatrices fem;
  fem.stiffness.resize(nv, nv);
  fem.stiffness.setFromTriplets(kt.begin(), kt.end());
  fem.mass.resize(nv, nv);
  fem.mass.setFromTriplets(mt.begin(), mt.end());
  fem.gradient.resize(2 * mesh.triangle_count(), nv);
  fem.gradient.setFromTriplets(gt.begin(), gt.end());
  return fem;
}

//
// JSON: {"vertices": [[x,y],...], "triangles": [[i,j,k],...], optional "boundary_loops":
// [[v,...],...], optional "alpha": [a11,a12,a22] or one such triple per triangle,
// optional "beta": scalar or one value per triangle}.
//
inline DomainMesh mesh_from_json(const nlohmann::json &j)
{
  require(j.contains("vertices") && j.contains("triangles"),
          "mesh JSON needs 'vertices' and 'triangles'");
  std::vector<Eigen::Vector2d> vs;
  for (const auto &v : j.at("vertices"))
  {
    require(v.size() == 2, "mesh vertices must have 2 coordinates");
    vs.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  std::vector<std::array<int, 3>> ts;
  for (const auto &t : j.at("triangles"))
  {
    require(t.size() == 3, "triangles must have 3 indices");
    ts.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
  }
  DomainMesh mesh(std::move(vs), std::move(ts));
  if (j.contains("boundary_loops"))
  {
    mesh.set_boundary_loops(j.at("boundary_loops").get<std::vector<std::vector<int>>>());
  }
  const std::size_t nt = static_cast<std::size_t>(mesh.triangle_count());
  auto to_alpha = [](const nlohmann::json &a) {
    require(a.size() == 3, "alpha entries are [a11, a12, a22]");
    Eigen::Matrix2d m;
    m << a[0].get<double>(), a[1].get<double>(), a[1].get<double>(), a[2].get<double>();
    return m;
  };
  std::vector<Eigen::Matrix2d> alpha(nt, Eigen::Matrix2d::Identity());
  std::vector<double> beta(nt, 1.0);
  if (j.contains("alpha"))
  {
    const auto &a = j.at("alpha");
    if (!a.empty() && a[0].is_array())
    {
      require(a.size() == nt, "alpha needs one entry per triangle");
      for (std::size_t i = 0; i < nt; ++i)
      {
        alpha[i] = to_alpha(a[i]);
      }
    }
    else
    {
      std::fill(alpha.begin(), alpha.end(), to_alpha(a));
    }
  }
  if (j.contains("beta"))
  {
    const auto &b = j.at("beta");
    if (b.is_array())
    {
      require(b.size() == nt, "beta needs one entry per triangle");
      beta = b.get<std::vector<double>>();
    }
    else
    {
      std::fill(beta.begin(), beta.end(), b.get<double>());
    }
  }
  mesh.set_materials(std::move(alpha), std::move(beta));
  return mesh;
}

inline nlohmann::json mesh_to_json(const DomainMesh &mesh)
{
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto &v : mesh.vertices())
  {
    j["vertices"].push_back({v.x(), v.y()});
  }
  j["triangles"] = nlohmann::json::array();
  for (const auto &t : mesh.triangles())
  {
    j["triangles"].push_back({t[0], t[1], t[2]});
  }
  j["boundary_loops"] = nlohmann::json::array();
  for (const auto &l : mesh.boundary_loops())
  {
    j["boundary_loops"].push_back(l.vertices);
  }
  j["alpha"] = nlohmann::json::array();
  for (const auto &a : mesh.alpha())
  {
    j["alpha"].push_back({a(0, 0), a(0, 1), a(1, 1)});
  }
  j["beta"] = mesh.beta();
  return j;
}

}  // namespace gibc

#endif  // GIBC_MESH_HPP
