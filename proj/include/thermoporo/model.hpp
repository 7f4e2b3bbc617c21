#pragma once

// Physical coefficients of the thermo-poroelastic model, the heat/fluid
// content functionals, and the derived stabilization / time-step quantities.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace thermoporo {

using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;

enum class LameConvention {
    Alt,       // lambda = E nu / ((1+nu)(1+2nu))
    Standard,  // lambda = E nu / ((1+nu)(1-2nu))
};

struct PhysParams {
    double a0 = 0.1;      // effective thermal capacity
    double b0 = 0.05;     // thermal dilation coefficient
    double c0 = 0.1;      // constrained-specific storage
    double c_f = 0.1;     // volumetric heat capacity of the fluid
    double alpha = 0.1;   // Biot-Willis constant
    double beta = 0.1;    // thermal stress coefficient
    double mu = 0.1;      // Lame shear modulus
    double lambda = 0.1;  // Lame first parameter
    Matrix2 K = 0.1 * Matrix2::Identity();      // permeability / fluid viscosity
    Matrix2 Theta = 0.1 * Matrix2::Identity();  // effective thermal conductivity
    double T_ref = 1.0;   // reference temperature (1 in dimensionless runs)
    double cutoff_M = 1e6;
    int d = 2;

    double k_min() const { return spd_eigs(K).first; }
    double k_max() const { return spd_eigs(K).second; }
    double theta_min() const { return spd_eigs(Theta).first; }
    double theta_max() const { return spd_eigs(Theta).second; }

    void validate() const {
        if (!(a0 > 0.0 && c0 > 0.0) || c_f < 0.0)
            throw std::invalid_argument("PhysParams: a0, c0 must be positive and c_f >= 0");
        if (b0 < 0.0 || alpha < 0.0 || beta < 0.0)
            throw std::invalid_argument("PhysParams: coupling coefficients must be non-negative");
        if (!(c0 - b0 > 0.0 && a0 - b0 > 0.0))
            throw std::invalid_argument("PhysParams: need c0 - b0 > 0 and a0 - b0 > 0");
        if (!(mu > 0.0) || lambda < 0.0)
            throw std::invalid_argument("PhysParams: need mu > 0 and lambda >= 0");
        if (!(T_ref > 0.0) || !(cutoff_M > 0.0))
            throw std::invalid_argument("PhysParams: T_ref and cutoff_M must be positive");
        check_spd(K, "K");
        check_spd(Theta, "Theta");
    }

    static void check_spd(const Matrix2& m, const char* name) {
        const double scale = m.cwiseAbs().maxCoeff();
        if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * std::max(scale, 1.0))
            throw std::invalid_argument(std::string("PhysParams: ") + name + " not symmetric");
        if (!(m(0, 0) > 0.0) || !(m.determinant() > 0.0))
            throw std::invalid_argument(std::string("PhysParams: ") + name + " not positive definite");
    }

private:
    static std::pair<double, double> spd_eigs(const Matrix2& m) {
        const double tr = m.trace(), det = m.determinant();
        const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
        return {tr / 2.0 - disc, tr / 2.0 + disc};
    }
};

// Heat and fluid content: psi = a0 T - b0 p + beta div(u),
//                         phi = c0 p - b0 T + alpha div(u).
inline std::pair<double, double> content_functionals(const PhysParams& pp, double p, double T,
                                                     double div_u) {
    return {pp.a0 * T - pp.b0 * p + pp.beta * div_u, pp.c0 * p - pp.b0 * T + pp.alpha * div_u};
}

// Stabilization parameters taken with equality in the contraction bound:
// L_p = 4 alpha^2 / (3 (2 mu / d + lambda)), and likewise L_T with beta.
inline std::pair<double, double> stabilization_from_theory(const PhysParams& pp) {
    const double denom = 3.0 * (2.0 * pp.mu / pp.d + pp.lambda);
    if (!(denom > 0.0)) throw std::invalid_argument("stabilization_from_theory: 2 mu/d + lambda = 0");
    return {4.0 * pp.beta * pp.beta / denom, 4.0 * pp.alpha * pp.alpha / denom};  // (L_T, L_p)
}

// Time-step bound tau < 2 (a0 - b0) / (c_f^2 M^2 (k_max/theta_min + 1) - theta_min/(4 c_omega)).
// Reported as a diagnostic only; +inf when the denominator is non-positive.
inline double time_step_bound(const PhysParams& pp, double c_omega) {
    if (!(c_omega > 0.0)) throw std::invalid_argument("time_step_bound: c_omega must be positive");
    const double m = pp.cutoff_M;
    const double denom = pp.c_f * pp.c_f * m * m * (pp.k_max() / pp.theta_min() + 1.0) -
                         pp.theta_min() / (4.0 * c_omega);
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return 2.0 * (pp.a0 - pp.b0) / denom;
}

inline std::pair<double, double> lame_from_engineering(double E, double nu,
                                                       LameConvention conv = LameConvention::Alt) {
    if (!(E > 0.0)) throw std::invalid_argument("lame_from_engineering: E must be positive");
    if (!(nu > -1.0 && nu < 0.5)) throw std::invalid_argument("lame_from_engineering: nu out of range");
    const double mu = E / (2.0 * (1.0 + nu));
    const double lambda = conv == LameConvention::Alt
                              ? E * nu / ((1.0 + nu) * (1.0 + 2.0 * nu))
                              : E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    return {mu, lambda};
}

// Dimensionless parameter regimes: everything 0.1 except the coupling
// coefficients (alpha, beta, b0), with a0 = c0 = 2 b0.
enum class Regime { PR1, PR2, PR3, PR4, PR5 };

inline Regime regime_from_name(const std::string& s) {
    if (s == "PR1" || s == "pr1") return Regime::PR1;
    if (s == "PR2" || s == "pr2") return Regime::PR2;
    if (s == "PR3" || s == "pr3") return Regime::PR3;
    if (s == "PR4" || s == "pr4") return Regime::PR4;
    if (s == "PR5" || s == "pr5") return Regime::PR5;
    throw std::invalid_argument("unknown parameter regime: " + s);
}

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::PR1: return "PR1";
        case Regime::PR2: return "PR2";
        case Regime::PR3: return "PR3";
        case Regime::PR4: return "PR4";
        case Regime::PR5: return "PR5";
    }
    return "?";
}

inline PhysParams regime(Regime r) {
    double alpha = 0.1, beta = 0.1, b0 = 0.1;
    switch (r) {
        case Regime::PR1: alpha = 1.0; beta = 1.0; b0 = 1.0; break;
        case Regime::PR2: alpha = 0.1; beta = 0.1; b0 = 1.0; break;
        case Regime::PR3: alpha = 0.1; beta = 1.0; b0 = 0.1; break;
        case Regime::PR4: alpha = 1.0; beta = 0.1; b0 = 0.1; break;
        case Regime::PR5: alpha = 0.1; beta = 0.1; b0 = 0.1; break;
    }
    PhysParams pp;
    pp.alpha = alpha;
    pp.beta = beta;
    pp.b0 = b0;
    pp.a0 = pp.c0 = 2.0 * b0;
    pp.c_f = 0.1;
    pp.mu = pp.lambda = 0.1;
    pp.K = 0.1 * Matrix2::Identity();
    pp.Theta = 0.1 * Matrix2::Identity();
    pp.T_ref = 1.0;
    pp.cutoff_M = 1e6;
    pp.validate();
    return pp;
}

}  // namespace thermoporo
