#pragma once

// Local and global assembly for the RT0 x P0 mixed heat/flow subproblems and
// the vector-P1 mechanics subproblem, plus field evaluation and L2 errors.
//
// RT0 dof convention: the dof of edge e is the signed total flux across e,
// integral of v.n with n the global edge normal (edge oriented low -> high
// vertex index, normal = tangent rotated by -90 degrees). The basis function
// attached to edge e of triangle K is sign_{K,e} (x - P_e) / (2|K|), with P_e
// the vertex opposite e.

#include "thermoporo/linalg.hpp"
#include "thermoporo/mesh.hpp"
#include "thermoporo/model.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace thermoporo {

struct FeSpaces {
    int n_T = 0;  // P0 (temperature)
    int n_r = 0;  // RT0 (heat flux)
    int n_p = 0;  // P0 (pressure)
    int n_w = 0;  // RT0 (Darcy flux)
    int n_u = 0;  // vector P1 (displacement), interleaved (2v, 2v+1)

    explicit FeSpaces(const Mesh& m)
        : n_T(m.n_triangles()), n_r(m.n_edges()), n_p(m.n_triangles()), n_w(m.n_edges()),
          n_u(2 * m.n_vertices()) {}

    int total() const { return n_T + n_r + n_p + n_w + n_u; }
};

struct FieldState {
    Vector T, r, p, w, u;

    static FieldState zero(const FeSpaces& s) {
        FieldState f;
        f.T = Vector::Zero(s.n_T);
        f.r = Vector::Zero(s.n_r);
        f.p = Vector::Zero(s.n_p);
        f.w = Vector::Zero(s.n_w);
        f.u = Vector::Zero(s.n_u);
        return f;
    }

    Vector stacked() const {
        Vector x(T.size() + r.size() + p.size() + w.size() + u.size());
        x << T, r, p, w, u;
        return x;
    }
};

// ---------------------------------------------------------------------------
// element geometry and quadrature

struct TriGeom {
    std::array<Vector2, 3> v;
    double area;
    std::array<Vector2, 3> grad_hat;  // gradients of the P1 hat functions

    TriGeom(const Mesh& m, int t) {
        const auto c = m.tri_coords(t);
        for (int k = 0; k < 3; ++k) v[k] = Vector2(c[k][0], c[k][1]);
        area = m.area(t);
        for (int k = 0; k < 3; ++k) {
            const Vector2& pj = v[(k + 1) % 3];
            const Vector2& pk = v[(k + 2) % 3];
            grad_hat[k] = Vector2(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * area);
        }
    }

    Vector2 point(const std::array<double, 3>& bary) const {
        return bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2];
    }
};

struct QuadRule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> weight;  // sums to 1, scale by element area
};

// Edge-midpoint rule, exact for quadratics.
inline const QuadRule& quad_midpoint3() {
    static const QuadRule q{
        {{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}},
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    return q;
}

// Six-point rule, exact for quartics.
inline const QuadRule& quad_degree4() {
    const double a1 = 0.816847572980459, b1 = 0.091576213509771, w1 = 0.109951743655322;
    const double a2 = 0.108103018168070, b2 = 0.445948490915965, w2 = 0.223381589678011;
    static const QuadRule q{
        {{a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1}, {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}},
        {w1, w1, w1, w2, w2, w2}};
    return q;
}

// ---------------------------------------------------------------------------
// cut-off operator

inline Vector2 apply_cutoff(const Vector2& v, double M) {
    if (!(M > 0.0)) throw std::invalid_argument("apply_cutoff: M must be positive");
    const double n = v.norm();
    if (n <= M) return v;
    return (M / n) * v;
}

// ---------------------------------------------------------------------------
// RT0 basis

inline Vector2 rt0_basis(const TriGeom& g, int local_edge, int sign, const Vector2& x) {
    return sign * (x - g.v[local_edge]) / (2.0 * g.area);
}

inline Vector2 rt0_evaluate_local(const Mesh& m, const TriGeom& g, const Vector& dofs, int t,
                                  const Vector2& x) {
    Vector2 val = Vector2::Zero();
    for (int k = 0; k < 3; ++k) {
        const auto [e, sign] = m.triangle_edges[t][k];
        val += dofs[e] * rt0_basis(g, k, sign, x);
    }
    return val;
}

inline Vector2 rt0_evaluate(const Mesh& m, const Vector& dofs, int t, const Vector2& x) {
    const TriGeom g(m, t);
    // barycentric inside check
    const Vector2 d = x - g.v[0];
    const Vector2 e1 = g.v[1] - g.v[0], e2 = g.v[2] - g.v[0];
    const double det = e1.x() * e2.y() - e1.y() * e2.x();
    const double l1 = (d.x() * e2.y() - d.y() * e2.x()) / det;
    const double l2 = (e1.x() * d.y() - e1.y() * d.x()) / det;
    const double tol = 1e-10;
    if (l1 < -tol || l2 < -tol || l1 + l2 > 1.0 + tol)
        throw std::invalid_argument("rt0_evaluate: point outside element");
    return rt0_evaluate_local(m, g, dofs, t, x);
}

inline Vector2 p1_evaluate(const Mesh& m, const TriGeom& g, const Vector& u, int t, const Vector2& x) {
    // barycentric coordinates via the hat gradients
    Vector2 val = Vector2::Zero();
    for (int k = 0; k < 3; ++k) {
        const double lam = 1.0 / 3.0 + g.grad_hat[k].dot(x - (g.v[0] + g.v[1] + g.v[2]) / 3.0);
        const int v = m.triangles[t][k];
        val += lam * Vector2(u[2 * v], u[2 * v + 1]);
    }
    return val;
}

// Interpolate a smooth vector field into RT0 (edge-midpoint flux).
inline Vector rt0_interpolate(const Mesh& m, const std::function<Vector2(const Vector2&)>& f) {
    Vector dofs = Vector::Zero(m.n_edges());
    for (int e = 0; e < m.n_edges(); ++e) {
        const Vector2 a(m.vertices[m.edges[e][0]][0], m.vertices[m.edges[e][0]][1]);
        const Vector2 b(m.vertices[m.edges[e][1]][0], m.vertices[m.edges[e][1]][1]);
        const Vector2 t = b - a;
        const Vector2 n(t.y(), -t.x());  // length |e| already
        // two-point Gauss on the edge, exact for cubics along the edge
        const double s1 = 0.5 - std::sqrt(3.0) / 6.0, s2 = 0.5 + std::sqrt(3.0) / 6.0;
        dofs[e] = 0.5 * (f(a + s1 * t).dot(n) + f(a + s2 * t).dot(n));
    }
    return dofs;
}

// ---------------------------------------------------------------------------
// global assembly

// (tensor^{-1} v, v') mass matrix on RT0; tensor must be SPD.
inline SparseMatrix assemble_weighted_rt0_mass(const Mesh& m, const Matrix2& tensor) {
    PhysParams::check_spd(tensor, "weight tensor");
    const Matrix2 inv = tensor.inverse();
    const auto& q = quad_midpoint3();
    MatrixBuilder bld(m.n_edges(), m.n_edges());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        std::array<std::array<Vector2, 3>, 3> phi;  // [quad][local edge]
        for (std::size_t iq = 0; iq < q.bary.size(); ++iq) {
            const Vector2 x = g.point(q.bary[iq]);
            for (int k = 0; k < 3; ++k) {
                const auto [e, sign] = m.triangle_edges[t][k];
                (void)e;
                phi[iq][k] = rt0_basis(g, k, sign, x);
            }
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (std::size_t iq = 0; iq < q.bary.size(); ++iq)
                    s += q.weight[iq] * phi[iq][i].dot(inv * phi[iq][j]);
                bld.add(m.triangle_edges[t][i].edge, m.triangle_edges[t][j].edge, g.area * s);
            }
        }
    }
    return bld.finalize();
}

// Divergence matrix B of size n_triangles x n_edges: row K holds the signed
// edge incidences, since int_K div(phi_e) = sign_{K,e} in the flux convention.
inline SparseMatrix assemble_rt0_div(const Mesh& m) {
    MatrixBuilder bld(m.n_triangles(), m.n_edges());
    for (int t = 0; t < m.n_triangles(); ++t)
        for (int k = 0; k < 3; ++k)
            bld.add(t, m.triangle_edges[t][k].edge, static_cast<double>(m.triangle_edges[t][k].sign));
    return bld.finalize();
}

inline SparseMatrix assemble_p0_mass(const Mesh& m) {
    MatrixBuilder bld(m.n_triangles(), m.n_triangles());
    for (int t = 0; t < m.n_triangles(); ++t) bld.add(t, t, m.area(t));
    return bld.finalize();
}

// 2 mu (eps(u), eps(v)) + lambda (div u, div v) on vector P1.
inline SparseMatrix assemble_elasticity(const Mesh& m, double mu, double lambda) {
    if (!(mu > 0.0)) throw std::invalid_argument("assemble_elasticity: mu must be positive");
    if (lambda < 0.0) throw std::invalid_argument("assemble_elasticity: lambda must be >= 0");
    MatrixBuilder bld(2 * m.n_vertices(), 2 * m.n_vertices());
    Eigen::Matrix3d D;  // Voigt (exx, eyy, gxy)
    D << 2.0 * mu + lambda, lambda, 0.0,
         lambda, 2.0 * mu + lambda, 0.0,
         0.0, 0.0, mu;
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
        for (int k = 0; k < 3; ++k) {
            B(0, 2 * k) = g.grad_hat[k].x();
            B(1, 2 * k + 1) = g.grad_hat[k].y();
            B(2, 2 * k) = g.grad_hat[k].y();
            B(2, 2 * k + 1) = g.grad_hat[k].x();
        }
        const Eigen::Matrix<double, 6, 6> Ke = g.area * B.transpose() * D * B;
        for (int a = 0; a < 3; ++a)
            for (int ca = 0; ca < 2; ++ca)
                for (int b = 0; b < 3; ++b)
                    for (int cb = 0; cb < 2; ++cb)
                        bld.add(2 * m.triangles[t][a] + ca, 2 * m.triangles[t][b] + cb,
                                Ke(2 * a + ca, 2 * b + cb));
    }
    return bld.finalize();
}

// D of size n_triangles x n_u with (D u)[K] = int_K div(u_h).
inline SparseMatrix assemble_div_coupling(const Mesh& m) {
    MatrixBuilder bld(m.n_triangles(), 2 * m.n_vertices());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        for (int k = 0; k < 3; ++k) {
            bld.add(t, 2 * m.triangles[t][k], g.area * g.grad_hat[k].x());
            bld.add(t, 2 * m.triangles[t][k] + 1, g.area * g.grad_hat[k].y());
        }
    }
    return bld.finalize();
}

// Convective coupling matrix C(w) of size n_triangles x n_edges with
// (C r)[K] ~ c_f int_K cutoff(w_h) . Theta^{-1} r_h. The cut-off is applied
// to the lagged field w only; the unknown r enters linearly.
inline SparseMatrix assemble_convection(const Mesh& m, const Vector& w_dofs, const Matrix2& theta,
                                        double c_f, double M) {
    if (w_dofs.size() != m.n_edges())
        throw std::invalid_argument("assemble_convection: w dof size mismatch");
    const Matrix2 inv = theta.inverse();
    const auto& q = quad_midpoint3();
    MatrixBuilder bld(m.n_triangles(), m.n_edges());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        std::array<double, 3> acc{0.0, 0.0, 0.0};
        for (std::size_t iq = 0; iq < q.bary.size(); ++iq) {
            const Vector2 x = g.point(q.bary[iq]);
            const Vector2 wq = apply_cutoff(rt0_evaluate_local(m, g, w_dofs, t, x), M);
            const Vector2 lhs = inv.transpose() * wq;  // (cutoff(w))^T Theta^{-1} phi
            for (int k = 0; k < 3; ++k) {
                const auto [e, sign] = m.triangle_edges[t][k];
                (void)e;
                acc[k] += q.weight[iq] * lhs.dot(rt0_basis(g, k, sign, x));
            }
        }
        for (int k = 0; k < 3; ++k)
            bld.add(t, m.triangle_edges[t][k].edge, c_f * g.area * acc[k]);
    }
    return bld.finalize();
}

// Vector-P1 mass matrix (optional mass-weighted stopping norm).
inline SparseMatrix assemble_p1_vector_mass(const Mesh& m) {
    MatrixBuilder bld(2 * m.n_vertices(), 2 * m.n_vertices());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const double a = m.area(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double mij = a * (i == j ? 1.0 / 6.0 : 1.0 / 12.0);
                for (int c = 0; c < 2; ++c)
                    bld.add(2 * m.triangles[t][i] + c, 2 * m.triangles[t][j] + c, mij);
            }
    }
    return bld.finalize();
}

// ---------------------------------------------------------------------------
// load functionals

inline Vector assemble_p0_load(const Mesh& m, const std::function<double(const Vector2&)>& f) {
    const auto& q = quad_degree4();
    Vector b = Vector::Zero(m.n_triangles());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        double s = 0.0;
        for (std::size_t iq = 0; iq < q.bary.size(); ++iq) s += q.weight[iq] * f(g.point(q.bary[iq]));
        b[t] = g.area * s;
    }
    return b;
}

inline Vector assemble_p1_vector_load(const Mesh& m,
                                      const std::function<Vector2(const Vector2&)>& f) {
    const auto& q = quad_degree4();
    Vector b = Vector::Zero(2 * m.n_vertices());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        for (std::size_t iq = 0; iq < q.bary.size(); ++iq) {
            const Vector2 fx = f(g.point(q.bary[iq]));
            for (int k = 0; k < 3; ++k) {
                const double lam = q.bary[iq][k];
                b[2 * m.triangles[t][k]] += g.area * q.weight[iq] * lam * fx.x();
                b[2 * m.triangles[t][k] + 1] += g.area * q.weight[iq] * lam * fx.y();
            }
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// L2 error measurement

struct ExactFields {
    std::function<double(const Vector2&)> T;
    std::function<Vector2(const Vector2&)> r;
    std::function<double(const Vector2&)> p;
    std::function<Vector2(const Vector2&)> w;
    std::function<Vector2(const Vector2&)> u;
};

struct L2Errors {
    double T = 0, r = 0, p = 0, w = 0, u = 0;
};

inline L2Errors l2_errors(const Mesh& m, const FieldState& s, const ExactFields& exact) {
    const auto& q = quad_degree4();
    L2Errors e2;
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        for (std::size_t iq = 0; iq < q.bary.size(); ++iq) {
            const Vector2 x = g.point(q.bary[iq]);
            const double wgt = g.area * q.weight[iq];
            const double dT = s.T[t] - exact.T(x);
            const double dp = s.p[t] - exact.p(x);
            e2.T += wgt * dT * dT;
            e2.p += wgt * dp * dp;
            e2.r += wgt * (rt0_evaluate_local(m, g, s.r, t, x) - exact.r(x)).squaredNorm();
            e2.w += wgt * (rt0_evaluate_local(m, g, s.w, t, x) - exact.w(x)).squaredNorm();
            Vector2 uh = Vector2::Zero();
            for (int k = 0; k < 3; ++k) {
                const int v = m.triangles[t][k];
                uh += q.bary[iq][k] * Vector2(s.u[2 * v], s.u[2 * v + 1]);
            }
            e2.u += wgt * (uh - exact.u(x)).squaredNorm();
        }
    }
    return {std::sqrt(e2.T), std::sqrt(e2.r), std::sqrt(e2.p), std::sqrt(e2.w), std::sqrt(e2.u)};
}

}  // namespace thermoporo
