#pragma once

// Closed triangulated surfaces: the reference triangulation of Gamma_0, its
// edge adjacency, and per-time snapshots of the moved flat triangles.
//
// Local edge e of triangle (v0, v1, v2) runs from v[e] to v[(e+1)%3]; the
// opposite vertex is v[(e+2)%3]. Global edges are numbered in ascending order
// of their sorted vertex-index pair, and that order is the canonical
// summation order used everywhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "moverfv/errors.hpp"
#include "moverfv/motion.hpp"
#include "moverfv/parallel.hpp"
#include "moverfv/vec3.hpp"

namespace moverfv {

using Triangle = std::array<std::size_t, 3>;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

/// Cell and local edge on the other side of an edge; cell == npos on a boundary.
struct EdgeNeighbor {
  std::size_t cell = npos;
  int local = -1;
};

/// One undirected edge. sides[0] is the first incident (cell, local edge) in
/// cell order; sides[1] the second, if any. Edges with more than two incident
/// cells keep the first two and record the true count.
struct Edge {
  std::size_t v0 = 0;  // v0 < v1
  std::size_t v1 = 0;
  std::array<EdgeNeighbor, 2> sides{};
  std::size_t incidence = 0;
};

class ReferenceMesh {
 public:
  /// Builds adjacency for an arbitrary triangle soup. Only index range and
  /// repeated vertices are rejected here; closedness and orientation are
  /// reported by check_manifold().
  ReferenceMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    for (std::size_t j = 0; j < triangles_.size(); ++j) {
      const auto& t = triangles_[j];
      for (auto v : t) {
        if (v >= vertices_.size()) {
          std::ostringstream os;
          os << "triangle " << j << " references vertex " << v << " of " << vertices_.size();
          throw ConfigError(os.str());
        }
      }
      if (t[0] == t[1] || t[1] == t[2] || t[2] == t[0]) {
        std::ostringstream os;
        os << "triangle " << j << " repeats a vertex";
        throw ConfigError(os.str());
      }
    }
    build_adjacency();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  /// Global index of local edge e of cell j.
  std::size_t edge_index(std::size_t j, int e) const { return cell_edges_[j][e]; }

  /// l(j, e): the cell sharing local edge e of cell j, and its matching local edge.
  EdgeNeighbor neighbor(std::size_t j, int e) const {
    const Edge& edge = edges_[cell_edges_[j][e]];
    if (edge.sides[0].cell == j && edge.sides[0].local == e) return edge.sides[1];
    return edge.sides[0];
  }

  /// Directed endpoints of local edge e of cell j.
  std::pair<std::size_t, std::size_t> local_edge(std::size_t j, int e) const {
    const auto& t = triangles_[j];
    return {t[e], t[(e + 1) % 3]};
  }

 private:
  void build_adjacency() {
    struct HalfEdge {
      std::size_t lo, hi, cell;
      int local;
    };
    std::vector<HalfEdge> half;
    half.reserve(3 * triangles_.size());
    for (std::size_t j = 0; j < triangles_.size(); ++j) {
      for (int e = 0; e < 3; ++e) {
        auto [a, b] = local_edge(j, e);
        half.push_back({std::min(a, b), std::max(a, b), j, e});
      }
    }
    std::sort(half.begin(), half.end(), [](const HalfEdge& x, const HalfEdge& y) {
      return std::tie(x.lo, x.hi, x.cell, x.local) < std::tie(y.lo, y.hi, y.cell, y.local);
    });
    cell_edges_.assign(triangles_.size(), {npos, npos, npos});
    edges_.clear();
    for (std::size_t i = 0; i < half.size();) {
      Edge edge;
      edge.v0 = half[i].lo;
      edge.v1 = half[i].hi;
      std::size_t k = i;
      for (; k < half.size() && half[k].lo == edge.v0 && half[k].hi == edge.v1; ++k) {
        if (edge.incidence < 2) edge.sides[edge.incidence] = {half[k].cell, half[k].local};
        ++edge.incidence;
        cell_edges_[half[k].cell][half[k].local] = edges_.size();
      }
      edges_.push_back(edge);
      i = k;
    }
  }

  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<std::size_t, 3>> cell_edges_;
};

struct ManifoldReport {
  bool ok = true;
  std::string first_violation;
};

/// Closed oriented 2-manifold check: every edge shared by exactly two cells
/// that traverse it in opposite directions, and an involutive neighbor map.
inline ManifoldReport check_manifold(const ReferenceMesh& mesh) {
  auto fail = [](std::string msg) { return ManifoldReport{false, std::move(msg)}; };
  for (std::size_t i = 0; i < mesh.num_edges(); ++i) {
    const Edge& edge = mesh.edges()[i];
    if (edge.incidence != 2) {
      std::ostringstream os;
      os << "edge (" << edge.v0 << ", " << edge.v1 << ") with " << edge.incidence
         << " incident triangle" << (edge.incidence == 1 ? "" : "s");
      return fail(os.str());
    }
    const auto [a0, b0] = mesh.local_edge(edge.sides[0].cell, edge.sides[0].local);
    const auto [a1, b1] = mesh.local_edge(edge.sides[1].cell, edge.sides[1].local);
    if (!(a0 == b1 && b0 == a1)) {
      std::ostringstream os;
      os << "orientation violation: triangles " << edge.sides[0].cell << " and "
         << edge.sides[1].cell << " traverse edge (" << edge.v0 << ", " << edge.v1
         << ") in the same direction";
      return fail(os.str());
    }
  }
  for (std::size_t j = 0; j < mesh.num_cells(); ++j) {
    for (int e = 0; e < 3; ++e) {
      const EdgeNeighbor n = mesh.neighbor(j, e);
      const EdgeNeighbor back = mesh.neighbor(n.cell, n.local);
      if (back.cell != j || back.local != e) {
        std::ostringstream os;
        os << "adjacency is not an involution at cell " << j << " edge " << e;
        return fail(os.str());
      }
    }
  }
  return {};
}

/// Half the norm of (p1-p0) x (p2-p0). Throws DegenerateCellError for
/// (numerically) collinear points.
inline double cell_measure(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  const double area = 0.5 * norm(cross(p1 - p0, p2 - p0));
  if (!(area >= 1e-300)) throw DegenerateCellError("degenerate cell: collinear vertices");
  return area;
}

struct EdgeGeometry {
  double length = 0.0;
  Vec3 conormal;   // unit, orthogonal to the edge, pointing out of the cell
  Vec3 midpoint;
  Vec3 direction;  // unit tangent along the edge
};

/// Geometry of the edge (p_a, p_b) seen from the flat triangle whose third
/// vertex is p_opp. The conormal lies in the triangle plane; its sign is fixed
/// by requiring conormal . (p_opp - midpoint) < 0.
inline EdgeGeometry edge_geometry(const Vec3& p_a, const Vec3& p_b, const Vec3& p_opp) {
  const Vec3 d = p_b - p_a;
  const Vec3 n = cross(d, p_opp - p_a);
  const double n_norm = norm(n);
  if (!(0.5 * n_norm >= 1e-300)) throw DegenerateCellError("degenerate cell: collinear vertices");
  EdgeGeometry g;
  g.length = norm(d);
  g.midpoint = 0.5 * (p_a + p_b);
  g.direction = d / g.length;
  Vec3 c = normalized(cross(d, n));
  if (dot(c, p_opp - g.midpoint) > 0.0) c = -c;
  g.conormal = c;
  return g;
}

/// Geometry of the moved flat triangulation at one time level.
///
/// Besides the per-cell conormals (in each triangle's own plane) every global
/// edge carries one shared conormal, oriented out of edge.sides[0].cell. It is
/// the normalized difference of the two cell conormals, so that the flux leaving
/// one cell through an edge is exactly the flux entering its neighbor.
class MeshSnapshot {
 public:
  double time() const { return time_; }
  const ReferenceMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const ReferenceMesh>& mesh_ptr() const { return mesh_; }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<double>& cell_measure() const { return cell_measure_; }
  const std::vector<Vec3>& barycenter() const { return barycenter_; }
  std::size_t num_cells() const { return cell_measure_.size(); }

  /// Geometry of local edge e as seen from cell j (conormal in cell j's plane).
  const EdgeGeometry& cell_edge(std::size_t j, int e) const { return cell_edges_[j][e]; }

  /// Shared geometry of global edge i, conormal pointing out of sides[0].
  const EdgeGeometry& edge(std::size_t i) const { return edges_[i]; }

  double edge_length(std::size_t j, int e) const { return cell_edges_[j][e].length; }
  const Vec3& edge_conormal(std::size_t j, int e) const { return cell_edges_[j][e].conormal; }

  double total_area() const {
    return std::accumulate(cell_measure_.begin(), cell_measure_.end(), 0.0);
  }

  /// Assemble a snapshot from already-moved vertex positions.
  static MeshSnapshot from_positions(std::shared_ptr<const ReferenceMesh> mesh,
                                     std::vector<Vec3> positions, double time) {
    if (positions.size() != mesh->num_vertices()) {
      throw ConfigError("snapshot positions do not match the reference vertex count");
    }
    MeshSnapshot s;
    s.time_ = time;
    s.mesh_ = std::move(mesh);
    s.vertices_ = std::move(positions);
    const ReferenceMesh& m = *s.mesh_;
    const std::size_t nc = m.num_cells();
    s.cell_measure_.resize(nc);
    s.barycenter_.resize(nc);
    s.cell_edges_.resize(nc);

    parallel_for(nc, [&](std::size_t j) {
      const auto& t = m.triangles()[j];
      const Vec3& p0 = s.vertices_[t[0]];
      const Vec3& p1 = s.vertices_[t[1]];
      const Vec3& p2 = s.vertices_[t[2]];
      s.cell_measure_[j] = 0.5 * norm(cross(p1 - p0, p2 - p0));
      s.barycenter_[j] = (p0 + p1 + p2) / 3.0;
    });

    const double mean_area = nc ? s.total_area() / static_cast<double>(nc) : 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      if (!(s.cell_measure_[j] >= 1e-14 * mean_area) || !(s.cell_measure_[j] >= 1e-300)) {
        std::ostringstream os;
        os << "geometry collapse: triangle " << j << " has area " << s.cell_measure_[j]
           << " at t=" << time << " (mean area " << mean_area << ")";
        throw GeometryCollapseError(j, os.str());
      }
    }

    parallel_for(nc, [&](std::size_t j) {
      const auto& t = m.triangles()[j];
      for (int e = 0; e < 3; ++e) {
        s.cell_edges_[j][e] = edge_geometry(s.vertices_[t[e]], s.vertices_[t[(e + 1) % 3]],
                                            s.vertices_[t[(e + 2) % 3]]);
      }
    });

    s.edges_.resize(m.num_edges());
    parallel_for(m.num_edges(), [&](std::size_t i) {
      const Edge& edge = m.edges()[i];
      const Vec3& a = s.vertices_[edge.v0];
      const Vec3& b = s.vertices_[edge.v1];
      EdgeGeometry g;
      g.length = norm(b - a);
      g.midpoint = 0.5 * (a + b);
      g.direction = (b - a) / g.length;
      const Vec3& inner = s.cell_edges_[edge.sides[0].cell][edge.sides[0].local].conormal;
      if (edge.sides[1].cell == npos) {
        g.conormal = inner;
      } else {
        const Vec3& outer = s.cell_edges_[edge.sides[1].cell][edge.sides[1].local].conormal;
        g.conormal = normalized(inner - outer);
      }
      s.edges_[i] = g;
    });
    return s;
  }

 private:
  MeshSnapshot() = default;

  double time_ = 0.0;
  std::shared_ptr<const ReferenceMesh> mesh_;
  std::vector<Vec3> vertices_;
  std::vector<double> cell_measure_;
  std::vector<Vec3> barycenter_;
  std::vector<std::array<EdgeGeometry, 3>> cell_edges_;
  std::vector<EdgeGeometry> edges_;
};

/// Moves every reference vertex with the motion and rebuilds the flat geometry.
inline MeshSnapshot snapshot(std::shared_ptr<const ReferenceMesh> mesh, const MotionMap& motion,
                             double t) {
  std::vector<Vec3> moved(mesh->num_vertices());
  const auto& v0 = mesh->vertices();
  // Evaluate serially: the domain check may throw.
  if (!(t >= 0.0 && t <= motion.t_max())) (void)motion.evaluate(Vec3{}, t);
  parallel_for(moved.size(), [&](std::size_t i) { moved[i] = motion.evaluate(v0[i], t); });
  return MeshSnapshot::from_positions(std::move(mesh), std::move(moved), t);
}

/// Arithmetic mean over cells of the longest edge length.
inline double mean_diameter(const MeshSnapshot& snap) {
  double sum = 0.0;
  for (std::size_t j = 0; j < snap.num_cells(); ++j) {
    sum += std::max({snap.edge_length(j, 0), snap.edge_length(j, 1), snap.edge_length(j, 2)});
  }
  return snap.num_cells() ? sum / static_cast<double>(snap.num_cells()) : 0.0;
}

/// Icosahedron refined `level` times by edge bisection, vertices projected to
/// the unit sphere, triangles counter-clockwise seen from outside.
inline ReferenceMesh build_icosphere(int level) {
  if (level < 0 || level > 8) {
    throw ConfigError("mesh.level must lie in [0, 8], got " + std::to_string(level));
  }
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                         {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                         {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) p = normalized(p);
  std::vector<Triangle> tri = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
    auto mid = [&](std::size_t a, std::size_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back(normalized(0.5 * (v[a] + v[b])));
      midpoint.emplace(key, v.size() - 1);
      return v.size() - 1;
    };
    std::vector<Triangle> next;
    next.reserve(4 * tri.size());
    for (const auto& t : tri) {
      const std::size_t ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tri = std::move(next);
  }
  return ReferenceMesh(std::move(v), std::move(tri));
}

/// Same triangulation with every vertex scaled componentwise by `axes`
/// (unit icosphere -> ellipsoid with these semi-axes).
inline ReferenceMesh scale_axes(const ReferenceMesh& mesh, const Vec3& axes) {
  std::vector<Vec3> v = mesh.vertices();
  for (auto& p : v) p = {axes.x * p.x, axes.y * p.y, axes.z * p.z};
  return ReferenceMesh(std::move(v), mesh.triangles());
}

}  // namespace moverfv
