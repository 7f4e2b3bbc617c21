#include "thermoporo/fem.hpp"

#include <doctest.h>

#include <random>

using namespace thermoporo;

// ---------------------------------------------------------------------------
// independent dense oracle: its own quadrature (degree-5, 7 points) and its
// own basis evaluation, so assembly bugs cannot cancel against themselves.

namespace oracle {

struct QP {
    double l0, l1, l2, w;
};

const std::vector<QP>& rule7() {
    static const std::vector<QP> q = [] {
        std::vector<QP> r;
        r.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225});
        const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
        r.push_back({a1, b1, b1, w1});
        r.push_back({b1, a1, b1, w1});
        r.push_back({b1, b1, a1, w1});
        r.push_back({a2, b2, b2, w2});
        r.push_back({b2, a2, b2, w2});
        r.push_back({b2, b2, a2, w2});
        return r;
    }();
    return q;
}

Vector2 vertex(const Mesh& m, int t, int k) {
    const auto& v = m.vertices[m.triangles[t][k]];
    return {v[0], v[1]};
}

Vector2 rt0(const Mesh& m, int t, int k, const Vector2& x) {
    return m.triangle_edges[t][k].sign * (x - vertex(m, t, k)) / (2.0 * m.area(t));
}

// 3x3 weighted RT0 element mass by the 7-point rule
Eigen::Matrix3d rt0_mass_element(const Mesh& m, int t, const Matrix2& tensor) {
    const Matrix2 inv = tensor.inverse();
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    for (const auto& qp : rule7()) {
        const Vector2 x = qp.l0 * vertex(m, t, 0) + qp.l1 * vertex(m, t, 1) + qp.l2 * vertex(m, t, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                out(i, j) += qp.w * m.area(t) * rt0(m, t, i, x).dot(inv * rt0(m, t, j, x));
    }
    return out;
}

// 6x6 elasticity element matrix via quadrature of the strain-energy integrand
Eigen::Matrix<double, 6, 6> elasticity_element(const Mesh& m, int t, double mu, double lambda) {
    std::array<Vector2, 3> g;
    for (int k = 0; k < 3; ++k) {
        const Vector2 pj = vertex(m, t, (k + 1) % 3), pk = vertex(m, t, (k + 2) % 3);
        g[k] = Vector2(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * m.area(t));
    }
    auto strain = [&](int dof) {
        Eigen::Matrix2d e = Eigen::Matrix2d::Zero();
        const int k = dof / 2, c = dof % 2;
        Eigen::Matrix2d gradu = Eigen::Matrix2d::Zero();
        gradu.row(c) = g[k].transpose();
        e = 0.5 * (gradu + gradu.transpose());
        return e;
    };
    Eigen::Matrix<double, 6, 6> out;
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
            const Eigen::Matrix2d ea = strain(a), eb = strain(b);
            out(a, b) = m.area(t) * (2.0 * mu * (ea.cwiseProduct(eb)).sum() +
                                     lambda * ea.trace() * eb.trace());
        }
    return out;
}

}  // namespace oracle

namespace {

Vector random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("weighted RT0 mass matches the dense quadrature oracle") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 1, 1});
    const Matrix2 eye = Matrix2::Identity();
    const SparseMatrix mass = assemble_weighted_rt0_mass(m, eye);

    // assemble the oracle edge-indexed matrix from both triangles
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(m.n_edges(), m.n_edges());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const Eigen::Matrix3d el = oracle::rt0_mass_element(m, t, eye);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                ref(m.triangle_edges[t][i].edge, m.triangle_edges[t][j].edge) += el(i, j);
    }
    CHECK((Eigen::MatrixXd(mass) - ref).norm() <= 1e-14 * ref.norm());
}

TEST_CASE("weighted RT0 mass: scaling the tensor scales the inverse weight") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 2, 2});
    const SparseMatrix m1 = assemble_weighted_rt0_mass(m, Matrix2::Identity());
    const SparseMatrix m2 = assemble_weighted_rt0_mass(m, 2.0 * Matrix2::Identity());
    CHECK((Eigen::MatrixXd(m2) - 0.5 * Eigen::MatrixXd(m1)).norm() <= 1e-14);
}

TEST_CASE("weighted RT0 mass with the physical permeability is SPD") {
    const Mesh m = build_rect_mesh({100.0, 10.0, 8, 8});
    const Matrix2 k = (9.87e-14 / 1.0e-3) * Matrix2::Identity();
    const SparseMatrix mass = assemble_weighted_rt0_mass(m, k);
    LuSolver lu;
    CHECK_NOTHROW(lu.factorize(mass));
    for (unsigned seed = 0; seed < 5; ++seed) {
        const Vector v = random_vector(m.n_edges(), seed);
        CHECK(v.dot(mass * v) > 0.0);
    }
    Matrix2 bad;
    bad << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(assemble_weighted_rt0_mass(m, bad), std::invalid_argument);
}

TEST_CASE("RT0 divergence matrix carries signed unit entries") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 1, 1});
    const SparseMatrix b = assemble_rt0_div(m);
    for (int t = 0; t < m.n_triangles(); ++t)
        for (const auto& te : m.triangle_edges[t]) {
            CHECK(b.coeff(t, te.edge) == doctest::Approx(te.sign));
        }
}

TEST_CASE("divergence of a stream-function loop vanishes") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 2, 2});
    const SparseMatrix b = assemble_rt0_div(m);
    // curl of the P1 hat at the interior vertex: dof_e = hat(hi) - hat(lo)
    int center = -1;
    for (int v = 0; v < m.n_vertices(); ++v)
        if (std::abs(m.vertices[v][0] - 0.5) < 1e-14 && std::abs(m.vertices[v][1] - 0.5) < 1e-14)
            center = v;
    REQUIRE(center >= 0);
    Vector dofs = Vector::Zero(m.n_edges());
    for (int e = 0; e < m.n_edges(); ++e) {
        const double hi = m.edges[e][1] == center ? 1.0 : 0.0;
        const double lo = m.edges[e][0] == center ? 1.0 : 0.0;
        dofs[e] = hi - lo;
    }
    CHECK((b * dofs).norm() <= 1e-13);
}

TEST_CASE("interpolated constant field is divergence free") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 3, 3});
    const Vector dofs = rt0_interpolate(m, [](const Vector2&) { return Vector2(1.0, 0.0); });
    const Vector div = assemble_rt0_div(m) * dofs;
    CHECK(div.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(div.sum()) <= 1e-12);
}

TEST_CASE("P0 mass is the element-area diagonal") {
    {
        const Mesh m = build_rect_mesh({1.0, 1.0, 1, 1});
        const SparseMatrix mt = assemble_p0_mass(m);
        CHECK(mt.coeff(0, 0) == doctest::Approx(0.5));
        CHECK(mt.coeff(1, 1) == doctest::Approx(0.5));
        CHECK(Eigen::MatrixXd(mt).trace() == doctest::Approx(1.0));
    }
    {
        const Mesh m = build_rect_mesh({100.0, 10.0, 40, 40});
        const SparseMatrix mt = assemble_p0_mass(m);
        for (int t : {0, 17, 3199})
            CHECK(mt.coeff(t, t) == doctest::Approx(1000.0 / 3200.0).epsilon(1e-12));
    }
}

TEST_CASE("elasticity annihilates rigid body modes") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 4, 4});
    const SparseMatrix a = assemble_elasticity(m, 0.1, 0.1);
    Vector trans = Vector::Zero(2 * m.n_vertices());
    Vector rot = Vector::Zero(2 * m.n_vertices());
    for (int v = 0; v < m.n_vertices(); ++v) {
        trans[2 * v] = 1.0;
        rot[2 * v] = -m.vertices[v][1];
        rot[2 * v + 1] = m.vertices[v][0];
    }
    CHECK((a * trans).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((a * rot).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK_THROWS_AS(assemble_elasticity(m, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("elasticity element matrix matches the dense quadrature oracle") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 1, 1});
    const SparseMatrix a = assemble_elasticity(m, 0.1, 0.1);
    // isolate triangle 0's contribution by assembling a one-triangle mesh copy
    Mesh single = m;
    single.triangles.resize(1);
    single.triangle_edges.resize(1);
    const SparseMatrix a0 = assemble_elasticity(single, 0.1, 0.1);
    const auto ref = oracle::elasticity_element(m, 0, 0.1, 0.1);
    for (int ia = 0; ia < 3; ++ia)
        for (int ca = 0; ca < 2; ++ca)
            for (int jb = 0; jb < 3; ++jb)
                for (int cb = 0; cb < 2; ++cb) {
                    const int gi = 2 * m.triangles[0][ia] + ca;
                    const int gj = 2 * m.triangles[0][jb] + cb;
                    CHECK(a0.coeff(gi, gj) == doctest::Approx(ref(2 * ia + ca, 2 * jb + cb))
                                                  .epsilon(1e-12));
                }
    CHECK(a.rows() == a0.rows());
}

TEST_CASE("divergence coupling matrix") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 2, 2});
    const SparseMatrix d = assemble_div_coupling(m);

    Vector ux = Vector::Zero(2 * m.n_vertices());
    Vector trans = Vector::Zero(2 * m.n_vertices());
    for (int v = 0; v < m.n_vertices(); ++v) {
        ux[2 * v] = m.vertices[v][0];  // u = (x, 0), div = 1
        trans[2 * v] = 0.3;
        trans[2 * v + 1] = -0.7;
    }
    const Vector divs = d * ux;
    for (int t = 0; t < m.n_triangles(); ++t) CHECK(divs[t] == doctest::Approx(m.area(t)));
    CHECK((d * trans).cwiseAbs().maxCoeff() <= 1e-14);

    // random P1 field against location-wise quadrature of div
    const Mesh m2 = build_rect_mesh({1.0, 1.0, 1, 1});
    const SparseMatrix d2 = assemble_div_coupling(m2);
    const Vector u = random_vector(2 * m2.n_vertices(), 3);
    for (int t = 0; t < m2.n_triangles(); ++t) {
        double ref = 0.0;
        // constant divergence: evaluate from the hat gradients directly
        std::array<Vector2, 3> g;
        for (int k = 0; k < 3; ++k) {
            const Vector2 pj = oracle::vertex(m2, t, (k + 1) % 3);
            const Vector2 pk = oracle::vertex(m2, t, (k + 2) % 3);
            g[k] = Vector2(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * m2.area(t));
        }
        for (int k = 0; k < 3; ++k)
            ref += g[k].x() * u[2 * m2.triangles[t][k]] + g[k].y() * u[2 * m2.triangles[t][k] + 1];
        ref *= m2.area(t);
        CHECK((d2 * u)[t] == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("cut-off operator") {
    CHECK((apply_cutoff(Vector2(3, 4), 10.0) - Vector2(3, 4)).norm() == 0.0);
    CHECK((apply_cutoff(Vector2(3, 4), 5.0) - Vector2(3, 4)).norm() == 0.0);  // |v| = M
    CHECK((apply_cutoff(Vector2(6, 8), 5.0) - Vector2(3, 4)).norm() <= 1e-15);
    CHECK(apply_cutoff(Vector2(0, 0), 1.0).norm() == 0.0);
    CHECK_THROWS_AS(apply_cutoff(Vector2(1, 1), 0.0), std::invalid_argument);
}

TEST_CASE("cut-off is 1-Lipschitz and bounded (randomized)") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    std::uniform_real_distribution<double> mdist(0.01, 8.0);
    for (int k = 0; k < 1000; ++k) {
        const Vector2 v1(val(rng), val(rng)), v2(val(rng), val(rng));
        const double m = mdist(rng);
        CHECK((apply_cutoff(v1, m) - apply_cutoff(v2, m)).norm() <= (v1 - v2).norm() + 1e-14);
        CHECK(apply_cutoff(v1, m).norm() <= m + 1e-14);
    }
}

TEST_CASE("convection matrix") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 2, 2});
    const Matrix2 eye = Matrix2::Identity();

    const SparseMatrix c0 = assemble_convection(m, Vector::Zero(m.n_edges()), eye, 1.0, 10.0);
    CHECK(Eigen::MatrixXd(c0).norm() == 0.0);

    const Vector wdofs = rt0_interpolate(m, [](const Vector2&) { return Vector2(1.0, 0.0); });
    const SparseMatrix c = assemble_convection(m, wdofs, eye, 1.0, 10.0);
    CHECK((c * wdofs).sum() == doctest::Approx(1.0).epsilon(1e-13));  // int of w.r over the square

    const SparseMatrix chalf = assemble_convection(m, wdofs, eye, 1.0, 0.5);
    CHECK((chalf * wdofs).sum() == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("convection assembly matches the un-cut dense integral for bounded fields") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 4, 4});
    Matrix2 theta;
    theta << 0.2, 0.05, 0.05, 0.3;
    Vector w = random_vector(m.n_edges(), 9) * 0.05;  // fields stay far below M
    const double big_m = 1e3;
    const SparseMatrix c = assemble_convection(m, w, theta, 0.7, big_m);

    const Matrix2 inv = theta.inverse();
    const Vector r = random_vector(m.n_edges(), 10);
    for (int t = 0; t < m.n_triangles(); ++t) {
        double ref = 0.0;
        for (const auto& qp : oracle::rule7()) {
            const Vector2 x = qp.l0 * oracle::vertex(m, t, 0) + qp.l1 * oracle::vertex(m, t, 1) +
                              qp.l2 * oracle::vertex(m, t, 2);
            Vector2 wv = Vector2::Zero(), rv = Vector2::Zero();
            for (int k = 0; k < 3; ++k) {
                wv += w[m.triangle_edges[t][k].edge] * oracle::rt0(m, t, k, x);
                rv += r[m.triangle_edges[t][k].edge] * oracle::rt0(m, t, k, x);
            }
            ref += qp.w * m.area(t) * 0.7 * wv.dot(inv * rv);
        }
        CHECK((c * r)[t] == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("RT0 evaluation") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 2, 2});
    const Vector dofs = rt0_interpolate(m, [](const Vector2&) { return Vector2(1.0, 0.0); });
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> bary(0.05, 0.3);
    for (int t = 0; t < m.n_triangles(); ++t) {
        const TriGeom g(m, t);
        const double l1 = bary(rng), l2 = bary(rng);
        const Vector2 x = (1 - l1 - l2) * g.v[0] + l1 * g.v[1] + l2 * g.v[2];
        CHECK((rt0_evaluate(m, dofs, t, x) - Vector2(1.0, 0.0)).norm() <= 1e-13);
    }
    CHECK(rt0_evaluate(m, Vector::Zero(m.n_edges()), 0, Vector2(m.centroid(0)[0], m.centroid(0)[1]))
              .norm() == 0.0);

    // a single basis function vanishes at its opposite vertex
    Vector e0 = Vector::Zero(m.n_edges());
    e0[m.triangle_edges[0][0].edge] = 1.0;
    for (int k = 1; k < 3; ++k) e0[m.triangle_edges[0][k].edge] = 0.0;
    const TriGeom g0(m, 0);
    CHECK(rt0_evaluate(m, e0, 0, g0.v[0]).norm() <= 1e-14);

    CHECK_THROWS_AS(rt0_evaluate(m, dofs, 0, Vector2(5.0, 5.0)), std::invalid_argument);
}

TEST_CASE("divergence compatibility: B applied to dofs is exact") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 3, 2});
    const SparseMatrix b = assemble_rt0_div(m);
    const Vector dofs = random_vector(m.n_edges(), 13);
    for (int t = 0; t < m.n_triangles(); ++t) {
        double ref = 0.0;  // int_K div v_h = sum over edges of sign * dof
        for (const auto& te : m.triangle_edges[t]) ref += te.sign * dofs[te.edge];
        CHECK((b * dofs)[t] == doctest::Approx(ref).epsilon(1e-14));
    }
}

TEST_CASE("L2 errors") {
    const Mesh m = build_rect_mesh({1.0, 1.0, 4, 4});
    const FeSpaces sp(m);
    FieldState s = FieldState::zero(sp);
    ExactFields zero{[](const Vector2&) { return 0.0; }, [](const Vector2&) { return Vector2::Zero(); },
                     [](const Vector2&) { return 0.0; }, [](const Vector2&) { return Vector2::Zero(); },
                     [](const Vector2&) { return Vector2::Zero(); }};
    const L2Errors e0 = l2_errors(m, s, zero);
    CHECK(e0.T == 0.0);
    CHECK(e0.u == 0.0);

    ExactFields ones = zero;
    ones.T = [](const Vector2&) { return 1.0; };
    const L2Errors e1 = l2_errors(m, s, ones);
    CHECK(e1.T == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("assembled operators are symmetric, weighted masses SPD up to 16x16") {
    for (int n : {2, 8, 16}) {
        const Mesh m = build_rect_mesh({1.0, 1.0, n, n});
        Matrix2 th;
        th << 0.1, 0.02, 0.02, 0.2;
        const SparseMatrix mr = assemble_weighted_rt0_mass(m, th);
        const SparseMatrix a = assemble_elasticity(m, 0.1, 0.1);
        const Eigen::MatrixXd mrd(mr), ad(a);
        CHECK((mrd - mrd.transpose()).norm() <= 1e-12 * mrd.norm());
        CHECK((ad - ad.transpose()).norm() <= 1e-12 * ad.norm());
        LuSolver lu;
        CHECK_NOTHROW(lu.factorize(mr));
        for (unsigned seed = 0; seed < 4; ++seed) {
            const Vector v = random_vector(m.n_edges(), 100 + seed);
            CHECK(v.dot(mr * v) > 0.0);
        }
    }
}
