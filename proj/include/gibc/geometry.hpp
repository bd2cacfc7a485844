// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_GEOMETRY_HPP
#define GIBC_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gibc/core.hpp"

namespace gibc
{

//
// One closed component of a boundary curve (d = 2). Either an explicit polyline that wraps
// around, or an exact circle. Arclength runs from 0 at the first vertex to length().
//
class CurveComponent
{
public:
  static CurveComponent polyline(std::vector<Eigen::Vector2d> pts)
  {
    require(pts.size() >= 3, "closed polyline needs at least 3 vertices");
    CurveComponent c;
    c.is_circle_ = false;
    c.vertices_ = std::move(pts);
    c.cumulative_.assign(c.vertices_.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.vertices_.size(); ++i)
    {
      const auto &a = c.vertices_[i];
      const auto &b = c.vertices_[(i + 1) % c.vertices_.size()];
      const double seg = (b - a).norm();
      require(seg > 0.0, "degenerate (zero-length) segment in boundary polyline");
      c.cumulative_[i + 1] = c.cumulative_[i] + seg;
    }
    c.length_ = c.cumulative_.back();
    return c;
  }

  static CurveComponent circle(Eigen::Vector2d center, double radius)
  {
    require(radius > 0.0, "circle radius must be positive");
    CurveComponent c;
    c.is_circle_ = true;
    c.center_ = center;
    c.radius_ = radius;
    c.length_ = 2.0 * kPi * radius;
    return c;
  }

  bool is_circle() const { return is_circle_; }
  double length() const { return length_; }
  const std::vector<Eigen::Vector2d> &vertices() const { return vertices_; }
  // Arclength coordinate of each polyline vertex (size = vertex count + 1, last = length).
  const std::vector<double> &vertex_arclength() const { return cumulative_; }
  Eigen::Vector2d center() const { return center_; }
  double radius() const { return radius_; }

  Eigen::Vector2d point_at(double s) const
  {
    s = std::fmod(s, length_);
    if (s < 0)
    {
      s += length_;
    }
    if (is_circle_)
    {
      const double th = s / radius_;
      return center_ + radius_ * Eigen::Vector2d(std::cos(th), std::sin(th));
    }
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    const std::size_t i = std::min<std::size_t>(
        static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cumulative_.begin() - 1, 0)),
        vertices_.size() - 1);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double u = (s - cumulative_[i]) / seg;
    return (1 - u) * vertices_[i] + u * vertices_[(i + 1) % vertices_.size()];
  }

private:
  bool is_circle_ = false;
  std::vector<Eigen::Vector2d> vertices_;
  std::vector<double> cumulative_;
  Eigen::Vector2d center_ = Eigen::Vector2d::Zero();
  double radius_ = 0.0;
  double length_ = 0.0;
};

struct SurfaceMesh
{
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
};

namespace detail
{

struct UnionFind
{
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n))
  {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x)
  {
    while (parent[x] != x)
    {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

inline double triangle_area(const Eigen::Vector3d &a, const Eigen::Vector3d &b,
                            const Eigen::Vector3d &c)
{
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace detail

//
// A closed boundary: a union of closed curves in the plane (d = 2) or one closed,
// orientable triangulated surface in space (d = 3), possibly with several components.
//
class BoundaryGeometry
{
public:
  static BoundaryGeometry curves(std::vector<CurveComponent> comps)
  {
    require(!comps.empty(), "boundary needs at least one component");
    BoundaryGeometry g;
    g.dim_ = 2;
    g.curves_ = std::move(comps);
    g.total_measure_ = 0.0;
    for (const auto &c : g.curves_)
    {
      require(c.length() > 0.0, "boundary component of zero length");
      g.total_measure_ += c.length();
    }
    g.component_count_ = static_cast<int>(g.curves_.size());
    return g;
  }

  static BoundaryGeometry surface(SurfaceMesh mesh)
  {
    BoundaryGeometry g;
    g.dim_ = 3;
    g.surface_ = std::move(mesh);
    g.validate_surface();
    return g;
  }

  int dim() const { return dim_; }
  double total_measure() const { return total_measure_; }
  int component_count() const { return component_count_; }
  const std::vector<CurveComponent> &curve_components() const { return curves_; }
  const SurfaceMesh &surface_mesh() const { return surface_; }
  // Component label per surface vertex (d = 3), labels 0..component_count-1 ordered by
  // smallest vertex index.
  const std::vector<int> &vertex_component() const { return vertex_component_; }
  std::vector<double> component_measures() const
  {
    std::vector<double> out;
    if (dim_ == 2)
    {
      for (const auto &c : curves_)
      {
        out.push_back(c.length());
      }
      return out;
    }
    out.assign(static_cast<std::size_t>(component_count_), 0.0);
    for (const auto &t : surface_.triangles)
    {
      out[static_cast<std::size_t>(vertex_component_[t[0]])] += detail::triangle_area(
          surface_.vertices[t[0]], surface_.vertices[t[1]], surface_.vertices[t[2]]);
    }
    return out;
  }

private:
  void validate_surface()
  {
    const int nv = static_cast<int>(surface_.vertices.size());
    require(nv >= 4 && !surface_.triangles.empty(), "surface mesh is empty");
    // Edge -> incident (triangle, orientation sign).
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edges;
    total_measure_ = 0.0;
    detail::UnionFind uf(nv);
    for (std::size_t t = 0; t < surface_.triangles.size(); ++t)
    {
      const auto &tri = surface_.triangles[t];
      for (int k = 0; k < 3; ++k)
      {
        require(tri[k] >= 0 && tri[k] < nv, "triangle references a missing vertex");
      }
      require(tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2],
              "degenerate triangle index triple");
      const double area = detail::triangle_area(surface_.vertices[tri[0]],
                                                surface_.vertices[tri[1]],
                                                surface_.vertices[tri[2]]);
      require(area > 0.0, "zero-area triangle");
      total_measure_ += area;
      for (int k = 0; k < 3; ++k)
      {
        const int a = tri[k];
        const int b = tri[(k + 1) % 3];
        uf.unite(a, b);
        const auto key = std::minmax(a, b);
        edges[{key.first, key.second}].push_back({static_cast<int>(t), a < b ? 1 : -1});
      }
    }
    // Closed: every edge has exactly two triangles. Orientable: a consistent flip
    // assignment exists (adjacent triangles traverse the shared edge in opposite order).
    std::vector<std::vector<std::pair<int, int>>> adj(surface_.triangles.size());
    for (const auto &[e, inc] : edges)
    {
      require(inc.size() == 2, "surface mesh is not closed (edge with " +
                                   std::to_string(inc.size()) + " incident triangles)");
      // same traversal sign => relative flip needed
      const int rel = inc[0].second == inc[1].second ? 1 : 0;
      adj[static_cast<std::size_t>(inc[0].first)].push_back({inc[1].first, rel});
      adj[static_cast<std::size_t>(inc[1].first)].push_back({inc[0].first, rel});
    }
    std::vector<int> flip(surface_.triangles.size(), -1);
    for (std::size_t s = 0; s < flip.size(); ++s)
    {
      if (flip[s] >= 0)
      {
        continue;
      }
      flip[s] = 0;
      std::vector<int> stack{static_cast<int>(s)};
      while (!stack.empty())
      {
        const int t = stack.back();
        stack.pop_back();
        for (auto [u, rel] : adj[static_cast<std::size_t>(t)])
        {
          const int want = flip[static_cast<std::size_t>(t)] ^ rel;
          if (flip[static_cast<std::size_t>(u)] < 0)
          {
            flip[static_cast<std::size_t>(u)] = want;
            stack.push_back(u);
          }
          else
          {
            require(flip[static_cast<std::size_t>(u)] == want, "surface mesh is not orientable");
          }
        }
      }
    }
    // Components, labelled in order of first vertex.
    vertex_component_.assign(static_cast<std::size_t>(nv), -1);
    std::map<int, int> label;
    std::vector<char> used(static_cast<std::size_t>(nv), 0);
    for (const auto &t : surface_.triangles)
    {
      for (int v : t)
      {
        used[static_cast<std::size_t>(v)] = 1;
      }
    }
    for (int v = 0; v < nv; ++v)
    {
      require(used[static_cast<std::size_t>(v)] != 0, "surface mesh has an isolated vertex");
      const int r = uf.find(v);
      auto it = label.find(r);
      if (it == label.end())
      {
        it = label.emplace(r, static_cast<int>(label.size())).first;
      }
      vertex_component_[static_cast<std::size_t>(v)] = it->second;
    }
    component_count_ = static_cast<int>(label.size());
  }

  int dim_ = 2;
  std::vector<CurveComponent> curves_;
  SurfaceMesh surface_;
  std::vector<int> vertex_component_;
  double total_measure_ = 0.0;
  int component_count_ = 0;
};

//
// Builders used by tests, the CLI and the mesher.
//

inline CurveComponent regular_polygon(int sides, double circumradius,
                                      Eigen::Vector2d center = Eigen::Vector2d::Zero(),
                                      double phase = 0.0)
{
  require(sides >= 3, "polygon needs at least 3 sides");
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < sides; ++i)
  {
    const double th = phase + 2.0 * kPi * i / sides;
    pts.push_back(center + circumradius * Eigen::Vector2d(std::cos(th), std::sin(th)));
  }
  return CurveComponent::polyline(std::move(pts));
}

// Subdivided icosahedron projected onto a sphere. Level L has 10*4^L + 2 vertices.
inline SurfaceMesh icosphere(int level, double radius = 1.0,
                             Eigen::Vector3d center = Eigen::Vector3d::Zero())
{
  require(level >= 0, "icosphere level must be nonnegative");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  SurfaceMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto &v : m.vertices)
  {
    v.normalize();
  }
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l)
  {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find({key.first, key.second});
      if (it != mid.end())
      {
        return it->second;
      }
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const int id = static_cast<int>(m.vertices.size()) - 1;
      mid.emplace(std::make_pair(key.first, key.second), id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto &tri : m.triangles)
    {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  for (auto &v : m.vertices)
  {
    v = center + radius * v;
  }
  return m;
}

inline SurfaceMesh merge_meshes(const SurfaceMesh &a, const SurfaceMesh &b)
{
  SurfaceMesh out = a;
  const int off = static_cast<int>(a.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (auto t : b.triangles)
  {
    out.triangles.push_back({t[0] + off, t[1] + off, t[2] + off});
  }
  return out;
}

//
// JSON geometry input:
//   {"dim": 2, "components": [[[x,y],...], ...], "circles": [{"center":[x,y],"radius":r}]}
//   {"dim": 3, "vertices": [[x,y,z],...], "triangles": [[i,j,k],...]}
// "circles" is an optional extension for exact circular components.
//
inline BoundaryGeometry geometry_from_json(const nlohmann::json &j)
{
  require(j.contains("dim"), "geometry JSON needs a \"dim\" field");
  const int dim = j.at("dim").get<int>();
  if (dim == 2)
  {
    std::vector<CurveComponent> comps;
    if (j.contains("components"))
    {
      for (const auto &c : j.at("components"))
      {
        std::vector<Eigen::Vector2d> pts;
        for (const auto &p : c)
        {
          require(p.size() == 2, "2-D vertex needs two coordinates");
          pts.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
        comps.push_back(CurveComponent::polyline(std::move(pts)));
      }
    }
    if (j.contains("circles"))
    {
      for (const auto &c : j.at("circles"))
      {
        const auto &ctr = c.at("center");
        comps.push_back(CurveComponent::circle({ctr[0].get<double>(), ctr[1].get<double>()},
                                               c.at("radius").get<double>()));
      }
    }
    return BoundaryGeometry::curves(std::move(comps));
  }
  if (dim == 3)
  {
    SurfaceMesh m;
    for (const auto &p : j.at("vertices"))
    {
      require(p.size() == 3, "3-D vertex needs three coordinates");
      m.vertices.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
    for (const auto &t : j.at("triangles"))
    {
      require(t.size() == 3, "triangle needs three indices");
      m.triangles.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
    }
    return BoundaryGeometry::surface(std::move(m));
  }
  throw InvalidArgument("geometry dim must be 2 or 3");
}

inline nlohmann::json geometry_to_json(const BoundaryGeometry &g)
{
  nlohmann::json j;
  j["dim"] = g.dim();
  if (g.dim() == 2)
  {
    j["components"] = nlohmann::json::array();
    for (const auto &c : g.curve_components())
    {
      if (c.is_circle())
      {
        j["circles"].push_back(
            {{"center", {c.center().x(), c.center().y()}}, {"radius", c.radius()}});
        continue;
      }
      nlohmann::json pts = nlohmann::json::array();
      for (const auto &p : c.vertices())
      {
        pts.push_back({p.x(), p.y()});
      }
      j["components"].push_back(pts);
    }
    return j;
  }
  j["vertices"] = nlohmann::json::array();
  for (const auto &v : g.surface_mesh().vertices)
  {
    j["vertices"].push_back({v.x(), v.y(), v.z()});
  }
  j["triangles"] = nlohmann::json::array();
  for (const auto &t : g.surface_mesh().triangles)
  {
    j["triangles"].push_back({t[0], t[1], t[2]});
  }
  return j;
}

}  // namespace gibc

#endif  // GIBC_GEOMETRY_HPP
