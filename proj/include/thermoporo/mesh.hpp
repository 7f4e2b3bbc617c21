#pragma once

// Structured conforming triangulations of axis-aligned rectangles, with the
// oriented-edge connectivity needed by lowest-order Raviart-Thomas spaces.

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace thermoporo {

enum class Side { Left, Right, Bottom, Top };

inline const char* side_name(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Bottom: return "bottom";
        case Side::Top: return "top";
    }
    return "?";
}

inline Side side_from_name(const std::string& s) {
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    if (s == "bottom") return Side::Bottom;
    if (s == "top") return Side::Top;
    throw std::invalid_argument("unknown boundary side: " + s);
}

struct Domain {
    double width = 1.0;
    double height = 1.0;
    int nx = 1;
    int ny = 1;
};

// Edges are globally oriented from the lower to the higher vertex index; the
// per-triangle sign relates that orientation to the triangle's outward normal.
struct TriEdge {
    int edge;
    int sign;  // +1 or -1
};

struct Mesh {
    std::vector<std::array<double, 2>> vertices;
    std::vector<std::array<int, 3>> triangles;          // counter-clockwise
    std::vector<std::array<int, 2>> edges;              // lo -> hi vertex index
    std::vector<std::array<TriEdge, 3>> triangle_edges; // entry k is opposite local vertex k
    std::vector<std::array<int, 2>> edge_triangles;     // adjacent triangles, -1 if none
    std::vector<int> edge_tag;                          // -1 interior, else Side cast to int
    double width = 0.0, height = 0.0;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    double area(int t) const {
        const auto& [a, b, c] = tri_coords(t);
        return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    }

    std::array<std::array<double, 2>, 3> tri_coords(int t) const {
        const auto& v = triangles[t];
        return {vertices[v[0]], vertices[v[1]], vertices[v[2]]};
    }

    std::array<double, 2> centroid(int t) const {
        const auto [a, b, c] = tri_coords(t);
        return {(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
    }

    double edge_length(int e) const {
        const auto& a = vertices[edges[e][0]];
        const auto& b = vertices[edges[e][1]];
        return std::hypot(b[0] - a[0], b[1] - a[1]);
    }

    bool is_boundary_edge(int e) const { return edge_tag[e] >= 0; }
};

// Regular triangulation: every grid cell split along its bottom-left ->
// top-right diagonal, so runs are reproducible.
inline Mesh build_rect_mesh(const Domain& dom) {
    if (dom.nx < 1 || dom.ny < 1)
        throw std::invalid_argument("build_rect_mesh: nx and ny must be >= 1");
    if (!(dom.width > 0.0) || !(dom.height > 0.0))
        throw std::invalid_argument("build_rect_mesh: width and height must be positive");

    Mesh m;
    m.width = dom.width;
    m.height = dom.height;
    const int npx = dom.nx + 1, npy = dom.ny + 1;
    m.vertices.reserve(static_cast<std::size_t>(npx) * npy);
    for (int j = 0; j < npy; ++j)
        for (int i = 0; i < npx; ++i)
            m.vertices.push_back({dom.width * i / dom.nx, dom.height * j / dom.ny});

    auto vid = [&](int i, int j) { return j * npx + i; };
    m.triangles.reserve(2u * dom.nx * dom.ny);
    for (int j = 0; j < dom.ny; ++j) {
        for (int i = 0; i < dom.nx; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }

    std::unordered_map<std::uint64_t, int> edge_index;
    edge_index.reserve(3 * m.triangles.size());
    m.triangle_edges.resize(m.triangles.size());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& v = m.triangles[t];
        for (int k = 0; k < 3; ++k) {
            // Edge opposite local vertex k, traversed in CCW boundary order.
            const int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
            const int lo = std::min(a, b), hi = std::max(a, b);
            const std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi);
            auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(m.edges.size()));
            if (inserted) {
                m.edges.push_back({lo, hi});
                m.edge_triangles.push_back({t, -1});
            } else {
                m.edge_triangles[it->second][1] = t;
            }
            m.triangle_edges[t][k] = {it->second, a < b ? +1 : -1};
        }
    }

    m.edge_tag.assign(m.edges.size(), -1);
    const double tolx = 1e-12 * dom.width, toly = 1e-12 * dom.height;
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.edge_triangles[e][1] != -1) continue;
        const auto& a = m.vertices[m.edges[e][0]];
        const auto& b = m.vertices[m.edges[e][1]];
        Side side;
        if (std::abs(a[0]) < tolx && std::abs(b[0]) < tolx) side = Side::Left;
        else if (std::abs(a[0] - dom.width) < tolx && std::abs(b[0] - dom.width) < tolx) side = Side::Right;
        else if (std::abs(a[1]) < toly && std::abs(b[1]) < toly) side = Side::Bottom;
        else if (std::abs(a[1] - dom.height) < toly && std::abs(b[1] - dom.height) < toly) side = Side::Top;
        else throw std::logic_error("build_rect_mesh: boundary edge not axis-aligned");
        m.edge_tag[e] = static_cast<int>(side);
    }
    return m;
}

inline std::vector<int> boundary_edges(const Mesh& m, Side side) {
    std::vector<int> out;
    for (int e = 0; e < m.n_edges(); ++e)
        if (m.edge_tag[e] == static_cast<int>(side)) out.push_back(e);
    return out;
}

// Plain-text dump: one section each for vertices, triangles, edges.
inline void write_mesh(const Mesh& m, std::ostream& os) {
    os << "vertices " << m.n_vertices() << "\n";
    for (int v = 0; v < m.n_vertices(); ++v)
        os << v << " " << m.vertices[v][0] << " " << m.vertices[v][1] << "\n";
    os << "triangles " << m.n_triangles() << "\n";
    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& v = m.triangles[t];
        os << t << " " << v[0] << " " << v[1] << " " << v[2] << "\n";
    }
    os << "edges " << m.n_edges() << "\n";
    for (int e = 0; e < m.n_edges(); ++e) {
        os << e << " " << m.edges[e][0] << " " << m.edges[e][1] << " "
           << (m.edge_tag[e] < 0 ? "interior" : side_name(static_cast<Side>(m.edge_tag[e]))) << "\n";
    }
}

}  // namespace thermoporo
