#pragma once

// The two experiment setups: a manufactured smooth solution on the unit
// square, and Mandel's consolidation problem extended with heat transport on
// the quarter domain [0,a] x [0,b]. The isothermal Mandel series doubles as
// the validation oracle and supplies the time-dependent top displacement.

#include "thermoporo/fem.hpp"
#include "thermoporo/mesh.hpp"
#include "thermoporo/model.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

namespace thermoporo {

enum class Field { T = 0, R = 1, P = 2, W = 3, U = 4 };

struct BcEntry {
    Field field;
    int dof;
    double value;
};

struct ProblemSpec {
    Domain domain;  // width/height fixed by the problem; nx, ny are defaults
    std::function<std::vector<BcEntry>(const Mesh&, const FeSpaces&, double)> essential_bcs;
    std::function<double(const Vector2&, double)> source_z;
    std::function<double(const Vector2&, double)> source_g;
    std::function<Vector2(const Vector2&, double)> source_f;
    std::function<FieldState(const Mesh&, const FeSpaces&)> initial;
    double t_ref = 1.0;
};

// ---------------------------------------------------------------------------
// manufactured smooth solution on the unit square
//
// T = p = t x1 (1-x1) x2 (1-x2), u = T [1,1]^T; r = -Theta grad T,
// w = -K grad p. Sources follow by substituting into the strong equations.

namespace bump {
inline double s(const Vector2& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); }
inline Vector2 grad(const Vector2& x) {
    return {(1 - 2 * x.x()) * x.y() * (1 - x.y()), x.x() * (1 - x.x()) * (1 - 2 * x.y())};
}
inline double dxx(const Vector2& x) { return -2 * x.y() * (1 - x.y()); }
inline double dyy(const Vector2& x) { return -2 * x.x() * (1 - x.x()); }
inline double dxy(const Vector2& x) { return (1 - 2 * x.x()) * (1 - 2 * x.y()); }
}  // namespace bump

struct ManufacturedValues {
    double T, p;
    Vector2 u, r, w;
};

inline ManufacturedValues manufactured_exact(const PhysParams& pp, double t, const Vector2& x) {
    ManufacturedValues v;
    const double s = bump::s(x);
    const Vector2 gs = bump::grad(x);
    v.T = v.p = t * s;
    v.u = t * s * Vector2::Ones();
    v.r = -t * (pp.Theta * gs);
    v.w = -t * (pp.K * gs);
    return v;
}

struct ManufacturedRhs {
    double z, g;
    Vector2 f;
};

inline ManufacturedRhs manufactured_rhs(const PhysParams& pp, double t, const Vector2& x) {
    const double s = bump::s(x);
    const Vector2 gs = bump::grad(x);
    const double sxx = bump::dxx(x), syy = bump::dyy(x), sxy = bump::dxy(x);
    const double div_rate = gs.x() + gs.y();  // d/dt of div(u)
    // second-order contractions tensor : hess(s)
    const double theta_lap = pp.Theta(0, 0) * sxx + 2 * pp.Theta(0, 1) * sxy + pp.Theta(1, 1) * syy;
    const double k_lap = pp.K(0, 0) * sxx + 2 * pp.K(0, 1) * sxy + pp.K(1, 1) * syy;

    ManufacturedRhs r;
    r.z = (pp.a0 - pp.b0) * s + pp.beta * div_rate + pp.c_f * t * t * gs.dot(pp.K * gs) -
          t * theta_lap;
    r.g = (pp.c0 - pp.b0) * s + pp.alpha * div_rate - t * k_lap;
    r.f.x() = -t * (pp.mu * (2 * sxx + syy + sxy) + pp.lambda * (sxx + sxy)) +
              (pp.alpha + pp.beta) * t * gs.x();
    r.f.y() = -t * (pp.mu * (2 * syy + sxx + sxy) + pp.lambda * (sxy + syy)) +
              (pp.alpha + pp.beta) * t * gs.y();
    return r;
}

inline ExactFields manufactured_exact_fields(const PhysParams& pp, double t) {
    return {
        [pp, t](const Vector2& x) { return manufactured_exact(pp, t, x).T; },
        [pp, t](const Vector2& x) { return manufactured_exact(pp, t, x).r; },
        [pp, t](const Vector2& x) { return manufactured_exact(pp, t, x).p; },
        [pp, t](const Vector2& x) { return manufactured_exact(pp, t, x).w; },
        [pp, t](const Vector2& x) { return manufactured_exact(pp, t, x).u; },
    };
}

inline std::vector<int> boundary_vertices(const Mesh& m) {
    std::set<int> vs;
    for (int e = 0; e < m.n_edges(); ++e)
        if (m.is_boundary_edge(e)) {
            vs.insert(m.edges[e][0]);
            vs.insert(m.edges[e][1]);
        }
    return {vs.begin(), vs.end()};
}

// Homogeneous Dirichlet throughout: u pinned on the whole boundary, T and p
// enter the mixed flux equations weakly with zero data (nothing to assemble).
inline ProblemSpec manufactured_problem(const PhysParams& pp) {
    ProblemSpec spec;
    spec.domain = {1.0, 1.0, 16, 16};
    spec.t_ref = 1.0;
    spec.essential_bcs = [](const Mesh& m, const FeSpaces&, double) {
        std::vector<BcEntry> bc;
        for (int v : boundary_vertices(m)) {
            bc.push_back({Field::U, 2 * v, 0.0});
            bc.push_back({Field::U, 2 * v + 1, 0.0});
        }
        return bc;
    };
    spec.source_z = [pp](const Vector2& x, double t) { return manufactured_rhs(pp, t, x).z; };
    spec.source_g = [pp](const Vector2& x, double t) { return manufactured_rhs(pp, t, x).g; };
    spec.source_f = [pp](const Vector2& x, double t) { return manufactured_rhs(pp, t, x).f; };
    spec.initial = [](const Mesh&, const FeSpaces& s) { return FieldState::zero(s); };
    return spec;
}

// ---------------------------------------------------------------------------
// Mandel's problem

struct MandelConfig {
    double a = 100.0;        // half-width of the slab (m)
    double b = 10.0;         // half-height (m)
    double force = 2e8;      // applied force magnitude F (Pa m)
    double heat_source = 0;  // constant z (0 or 2e-4)
    double tau = 10.0;       // time step (s)
    int n_series = 200;      // series truncation
    PhysParams params;
};

inline MandelConfig mandel_config(LameConvention conv = LameConvention::Alt,
                                  double heat_source = 0.0) {
    MandelConfig cfg;
    cfg.heat_source = heat_source;
    PhysParams& pp = cfg.params;
    const double E = 5.94e9, nu = 0.2;
    std::tie(pp.mu, pp.lambda) = lame_from_engineering(E, nu, conv);
    pp.c0 = 6.06e-11;
    pp.alpha = 1.0;
    pp.K = (9.87e-14 / 1.0e-3) * Matrix2::Identity();  // permeability / viscosity
    pp.Theta = 1.7 * Matrix2::Identity();
    pp.b0 = 3.03e-11;
    pp.beta = 9.9e6;
    pp.a0 = 0.92e3;
    pp.T_ref = 298.15;
    pp.c_f = 4.18e6;
    pp.cutoff_M = 1e3;
    pp.validate();
    return cfg;
}

// Poroelastic constants derived from the isothermal part of the parameter
// set: Skempton coefficient, undrained Poisson ratio, consolidation
// coefficient, and the eigenvalues of tan(x) = (1-nu)/(nu_u-nu) x.
struct MandelMaterial {
    double nu, nu_u, skempton, consolidation;
    std::vector<double> roots;
    double tail_bound = 0.0;  // magnitude bound of the first omitted p-mode at query time
};

inline std::vector<double> mandel_roots(double c_ratio, int n) {
    if (!(c_ratio > 1.0)) throw std::runtime_error("mandel_roots: need (1-nu)/(nu_u-nu) > 1");
    std::vector<double> roots;
    roots.reserve(n);
    const double pi = 4.0 * std::atan(1.0);
    for (int k = 1; k <= n; ++k) {
        // One root per branch, in ((k-1) pi, (k-1) pi + pi/2). Bisect on
        // sin(x) - c x cos(x), which stays smooth through the tangent pole;
        // orient the sign by the branch parity.
        const double par = (k % 2 == 1) ? 1.0 : -1.0;
        auto g = [&](double x) { return par * (std::sin(x) - c_ratio * x * std::cos(x)); };
        double lo = (k - 1) * pi + 1e-6, hi = (k - 1) * pi + pi / 2;
        if (!(g(lo) < 0.0 && g(hi) > 0.0))
            throw std::runtime_error("mandel_roots: bracket failure");
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) < 0.0 ? lo : hi) = mid;
        }
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 4; ++it) {  // Newton polish
            const double gx = std::sin(x) - c_ratio * x * std::cos(x);
            const double dgx = (1.0 - c_ratio) * std::cos(x) + c_ratio * x * std::sin(x);
            if (dgx == 0.0) break;
            x -= gx / dgx;
        }
        if (!(x > (k - 1) * pi && x < (k - 1) * pi + pi / 2))
            throw std::runtime_error("mandel_roots: refinement left the bracket");
        roots.push_back(x);
    }
    return roots;
}

inline MandelMaterial mandel_material(const PhysParams& pp, int n_terms) {
    MandelMaterial mat;
    const double mu = pp.mu, lam = pp.lambda;
    mat.nu = lam / (2.0 * (lam + mu));
    const double k_dr = lam + 2.0 * mu / 3.0;
    const double m_biot = 1.0 / pp.c0;
    const double k_u = k_dr + pp.alpha * pp.alpha * m_biot;
    mat.skempton = pp.alpha * m_biot / k_u;
    mat.nu_u = (3.0 * k_u - 2.0 * mu) / (2.0 * (3.0 * k_u + mu));
    const double k_perm = pp.K(0, 0);
    mat.consolidation = k_perm * m_biot * (k_dr + 4.0 * mu / 3.0) / (k_u + 4.0 * mu / 3.0);
    mat.roots = mandel_roots((1.0 - mat.nu) / (mat.nu_u - mat.nu), n_terms);
    return mat;
}

struct MandelAnalytic {
    double p, u1, u2;
    double dp_dx1;  // used to seed the Darcy flux
};

inline MandelAnalytic mandel_analytic_isothermal(const MandelConfig& cfg, const MandelMaterial& mat,
                                                 const Vector2& x, double t) {
    if (!(t > 0.0))
        throw std::invalid_argument("mandel_analytic_isothermal: series requires t > 0");
    const double a = cfg.a, F = cfg.force, mu = cfg.params.mu;
    const double nu = mat.nu, nu_u = mat.nu_u, c = mat.consolidation;

    double p = 0.0, dp = 0.0, sum_sc = 0.0, sum_u1 = 0.0;
    for (double al : mat.roots) {
        const double den = al - std::sin(al) * std::cos(al);
        const double decay = std::exp(-al * al * c * t / (a * a));
        p += std::sin(al) / den * (std::cos(al * x.x() / a) - std::cos(al)) * decay;
        dp += std::sin(al) / den * (-(al / a) * std::sin(al * x.x() / a)) * decay;
        sum_sc += std::sin(al) * std::cos(al) / den * decay;
        sum_u1 += std::cos(al) / den * std::sin(al * x.x() / a) * decay;
    }
    const double p_scale = 2.0 * F * mat.skempton * (1.0 + nu_u) / (3.0 * a);

    MandelAnalytic out;
    out.p = p_scale * p;
    out.dp_dx1 = p_scale * dp;
    out.u1 = (F * nu / (2.0 * mu * a) - F * nu_u / (mu * a) * sum_sc) * x.x() + F / mu * sum_u1;
    out.u2 = (-F * (1.0 - nu) / (2.0 * mu * a) + F * (1.0 - nu_u) / (mu * a) * sum_sc) * x.y();
    return out;
}

// Convenience overload deriving the material constants on the fly.
inline MandelAnalytic mandel_analytic_isothermal(const MandelConfig& cfg, const Vector2& x,
                                                 double t, int n_terms) {
    if (n_terms < 1) throw std::invalid_argument("mandel_analytic_isothermal: n_terms >= 1");
    return mandel_analytic_isothermal(cfg, mandel_material(cfg.params, n_terms), x, t);
}

// Quarter-domain setup: impermeable and insulated on top/left/bottom
// (flux dofs pinned to zero), drained p = T = 0 on the right (weak, nothing
// to assemble), symmetry conditions u1(0,.) = 0 and u2(.,0) = 0, and the
// plate load imposed through the analytic vertical displacement on the top.
// Initial (p, u, w) is the undrained analytic response at t = tau/10.
inline ProblemSpec mandel_problem(const MandelConfig& cfg) {
    ProblemSpec spec;
    spec.domain = {cfg.a, cfg.b, 40, 40};
    spec.t_ref = cfg.params.T_ref;
    const auto mat = mandel_material(cfg.params, cfg.n_series);

    spec.essential_bcs = [cfg, mat](const Mesh& m, const FeSpaces&, double t) {
        std::vector<BcEntry> bc;
        for (Side s : {Side::Top, Side::Left, Side::Bottom})
            for (int e : boundary_edges(m, s)) {
                bc.push_back({Field::R, e, 0.0});
                bc.push_back({Field::W, e, 0.0});
            }
        const double u2_top =
            mandel_analytic_isothermal(cfg, mat, Vector2(0.0, cfg.b), t).u2;
        const double tol = 1e-12 * std::max(cfg.a, cfg.b);
        for (int v = 0; v < m.n_vertices(); ++v) {
            const auto& x = m.vertices[v];
            if (std::abs(x[0]) < tol) bc.push_back({Field::U, 2 * v, 0.0});
            if (std::abs(x[1]) < tol) bc.push_back({Field::U, 2 * v + 1, 0.0});
            if (std::abs(x[1] - cfg.b) < tol) bc.push_back({Field::U, 2 * v + 1, u2_top});
        }
        return bc;
    };

    spec.source_z = [z = cfg.heat_source](const Vector2&, double) { return z; };
    spec.source_g = [](const Vector2&, double) { return 0.0; };
    spec.source_f = [](const Vector2&, double) { return Vector2::Zero(); };

    spec.initial = [cfg, mat](const Mesh& m, const FeSpaces& s) {
        FieldState f = FieldState::zero(s);
        const double t0 = cfg.tau / 10.0;  // proxy for the 0+ undrained state
        for (int t = 0; t < m.n_triangles(); ++t) {
            const auto c = m.centroid(t);
            f.p[t] = mandel_analytic_isothermal(cfg, mat, Vector2(c[0], c[1]), t0).p;
        }
        for (int v = 0; v < m.n_vertices(); ++v) {
            const auto an =
                mandel_analytic_isothermal(cfg, mat, Vector2(m.vertices[v][0], m.vertices[v][1]), t0);
            f.u[2 * v] = an.u1;
            f.u[2 * v + 1] = an.u2;
        }
        const double k_perm = cfg.params.K(0, 0);
        f.w = rt0_interpolate(m, [&](const Vector2& x) {
            return Vector2(-k_perm * mandel_analytic_isothermal(cfg, mat, x, t0).dp_dx1, 0.0);
        });
        return f;
    };
    return spec;
}

}  // namespace thermoporo
