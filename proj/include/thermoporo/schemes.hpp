#pragma once

// The six iterative coupling algorithms for the backward-Euler discrete
// system, from monolithic (HFM) through partially decoupled (HF-M, HM-F,
// FM-H) to fully decoupled (H-F-M, F-H-M). Every algorithm adds the L-scheme
// stabilization L_T(T^i - T^{i-1}, S) and L_p(p^i - p^{i-1}, q) to the heat
// and flow content equations and lags the convective coupling, so each
// iteration only solves linear subsystems.

#include "thermoporo/fem.hpp"
#include "thermoporo/linalg.hpp"
#include "thermoporo/mesh.hpp"
#include "thermoporo/model.hpp"
#include "thermoporo/problems.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermoporo {

enum class SchemeKind { HFM, HF_M, HM_F, FM_H, H_F_M, F_H_M };

inline const char* scheme_name(SchemeKind k) {
    switch (k) {
        case SchemeKind::HFM: return "HFM";
        case SchemeKind::HF_M: return "HF-M";
        case SchemeKind::HM_F: return "HM-F";
        case SchemeKind::FM_H: return "FM-H";
        case SchemeKind::H_F_M: return "H-F-M";
        case SchemeKind::F_H_M: return "F-H-M";
    }
    return "?";
}

inline SchemeKind scheme_from_name(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "HFM") return SchemeKind::HFM;
    if (s == "HF-M" || s == "HF_M") return SchemeKind::HF_M;
    if (s == "HM-F" || s == "HM_F") return SchemeKind::HM_F;
    if (s == "FM-H" || s == "FM_H") return SchemeKind::FM_H;
    if (s == "H-F-M" || s == "H_F_M") return SchemeKind::H_F_M;
    if (s == "F-H-M" || s == "F_H_M") return SchemeKind::F_H_M;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct StabilizationMode {
    enum class Kind { Theory, None, Custom };
    Kind kind = Kind::Theory;
    double L_T = 0.0, L_p = 0.0;

    static StabilizationMode theory() { return {Kind::Theory, 0.0, 0.0}; }
    static StabilizationMode none() { return {Kind::None, 0.0, 0.0}; }
    static StabilizationMode custom(double lt, double lp) {
        if (lt < 0.0 || lp < 0.0) throw std::invalid_argument("stabilization: L values must be >= 0");
        return {Kind::Custom, lt, lp};
    }

    std::pair<double, double> resolve(const PhysParams& pp) const {
        switch (kind) {
            case Kind::Theory: return stabilization_from_theory(pp);
            case Kind::None: return {0.0, 0.0};
            case Kind::Custom: return {L_T, L_p};
        }
        return {0.0, 0.0};
    }
};

struct IterationReport {
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;  // stopping-criterion left-hand side per iteration
    std::vector<double> F_successive;      // weighted error functional of successive differences
    std::vector<double> F_vs_limit;        // same against the converged state (when recorded)
};

struct RunOptions {
    double atol = 1e-6;
    double rtol = 1e-6;
    int max_iter = 100;
    bool warm_start = true;           // initial iterate = previous time step's state
    bool mass_weighted_norm = false;  // stopping norm weighted by the mass matrices
    bool record_contraction = false;
    bool scale_beta_coupling = true;  // divide the momentum beta T term by T_ref
    // Divide the heat-content dilation term beta div(u) by T_ref as well, so
    // the energy balance is consistently nondimensionalized in T/T_ref. With
    // the raw coefficient, mechanical compaction alone heats the medium by
    // tens of kelvins in dimensional runs. No effect when T_ref = 1.
    bool scale_content_beta = true;
};

// Euclidean norm of the stacked dof vector of all five fields.
inline bool stopping_check(const FieldState& current, const FieldState& previous, double atol,
                           double rtol) {
    const double diff = (current.stacked() - previous.stacked()).norm();
    return diff <= atol + rtol * current.stacked().norm();
}

// ---------------------------------------------------------------------------
// assembled operators shared by all schemes

struct Assemblies {
    FeSpaces spaces;
    SparseMatrix Mt, Mr, Mw, B, Bt, D, Dt, A;
    Vector area;
    SparseMatrix Mu;  // vector-P1 mass, only for the weighted stopping norm

    Assemblies(const Mesh& m, const PhysParams& pp)
        : spaces(m),
          Mt(assemble_p0_mass(m)),
          Mr(assemble_weighted_rt0_mass(m, pp.Theta)),
          Mw(assemble_weighted_rt0_mass(m, pp.K)),
          B(assemble_rt0_div(m)),
          Bt(B.transpose()),
          D(assemble_div_coupling(m)),
          Dt(D.transpose()),
          A(assemble_elasticity(m, pp.mu, pp.lambda)),
          Mu(assemble_p1_vector_mass(m)) {
        area = Vector::Zero(m.n_triangles());
        for (int t = 0; t < m.n_triangles(); ++t) area[t] = m.area(t);
    }
};

using BcSet = std::array<std::vector<std::pair<int, double>>, 5>;

inline BcSet split_bcs(const std::vector<BcEntry>& entries) {
    BcSet set;
    for (const auto& e : entries) set[static_cast<int>(e.field)].emplace_back(e.dof, e.value);
    return set;
}

struct StepLoads {
    Vector z, g, f;
};

inline StepLoads assemble_loads(const Mesh& m, const ProblemSpec& prob, double t) {
    return {assemble_p0_load(m, [&](const Vector2& x) { return prob.source_z(x, t); }),
            assemble_p0_load(m, [&](const Vector2& x) { return prob.source_g(x, t); }),
            assemble_p1_vector_load(m, [&](const Vector2& x) { return prob.source_f(x, t); })};
}

namespace detail {

inline int field_size(const FeSpaces& s, Field f) {
    switch (f) {
        case Field::T: return s.n_T;
        case Field::R: return s.n_r;
        case Field::P: return s.n_p;
        case Field::W: return s.n_w;
        case Field::U: return s.n_u;
    }
    return 0;
}

inline Vector& field_vec(FieldState& x, Field f) {
    switch (f) {
        case Field::T: return x.T;
        case Field::R: return x.r;
        case Field::P: return x.p;
        case Field::W: return x.w;
        case Field::U: return x.u;
    }
    return x.T;
}

inline const Vector& field_vec(const FieldState& x, Field f) {
    return field_vec(const_cast<FieldState&>(x), f);
}

// Matrices that stay fixed for the whole transient run.
struct StaticBlocks {
    SparseMatrix heat_T;   // (a0/T_ref + L_T) Mt
    SparseMatrix heat_P;   // -b0 Mt
    SparseMatrix heat_U;   // beta D
    SparseMatrix flux_T;   // -(1/T_ref) B^T
    SparseMatrix flow_P;   // (c0 + L_p) Mt
    SparseMatrix flow_T;   // -b0 Mt
    SparseMatrix flow_U;   // alpha D
    SparseMatrix flow_W;   // tau B
    SparseMatrix darcy_P;  // -B^T
    SparseMatrix mech_T;   // -beta_mech D^T
    SparseMatrix mech_P;   // -alpha D^T
    double tau, L_T, L_p, sT;

    double beta_content = 0.0;

    StaticBlocks(const Assemblies& as, const PhysParams& pp, double tau_, double lt, double lp,
                 bool scale_beta, bool scale_content)
        : tau(tau_), L_T(lt), L_p(lp), sT(1.0 / pp.T_ref) {
        const double beta_mech = scale_beta ? pp.beta / pp.T_ref : pp.beta;
        beta_content = scale_content ? pp.beta * sT : pp.beta;
        heat_T = (pp.a0 * sT + L_T) * as.Mt;
        heat_P = -pp.b0 * as.Mt;
        heat_U = beta_content * as.D;
        flux_T = -sT * as.Bt;
        flow_P = (pp.c0 + L_p) * as.Mt;
        flow_T = -pp.b0 * as.Mt;
        flow_U = pp.alpha * as.D;
        flow_W = tau * as.B;
        darcy_P = -as.Bt;
        mech_T = -beta_mech * as.Dt;
        mech_P = -pp.alpha * as.Dt;
    }
};

struct SubsystemCache {
    SparseMatrix a_orig;
    LuSolver lu;
    bool factored = false;
};

struct StepContext {
    const Mesh* mesh = nullptr;
    const Assemblies* as = nullptr;
    const PhysParams* pp = nullptr;
    const StaticBlocks* blocks = nullptr;
    const StepLoads* loads = nullptr;
    const BcSet* bcs = nullptr;
    const FieldState* prev = nullptr;  // previous time level
    Vector psi_prev, phi_prev;         // content of the previous time level, tested with P0

    void build_prev_content() {
        const auto& b = *blocks;
        const auto& a = *as;
        psi_prev = pp->a0 * b.sT * (a.Mt * prev->T) - pp->b0 * (a.Mt * prev->p) +
                   b.beta_content * (a.D * prev->u);
        phi_prev = pp->c0 * (a.Mt * prev->p) - pp->b0 * (a.Mt * prev->T) + pp->alpha * (a.D * prev->u);
    }
};

// Solve one (sub)system for the given unknown fields. Fields not being
// solved contribute through the right-hand side with their current values in
// x_new (already-updated fields of this iteration) while the L-scheme lag
// terms always read the previous iterate x_old.
inline void solve_subsystem(const std::vector<Field>& unknowns, const StepContext& cx,
                            const FieldState& x_old, FieldState& x_new, SubsystemCache* cache) {
    const auto& as = *cx.as;
    const auto& bl = *cx.blocks;
    const bool has_T = std::find(unknowns.begin(), unknowns.end(), Field::T) != unknowns.end();

    const bool reuse = cache && cache->factored && !has_T;

    // convective block from the latest available Darcy flux
    std::optional<SparseMatrix> heat_R;
    if (has_T && !reuse) {
        const SparseMatrix C =
            assemble_convection(*cx.mesh, x_new.w, cx.pp->Theta, cx.pp->c_f, cx.pp->cutoff_M);
        heat_R = bl.tau * (as.B + C);
    }

    std::vector<int> sizes;
    for (Field f : unknowns) sizes.push_back(field_size(as.spaces, f));
    BlockSystem sys(sizes, sizes);

    // per-row descriptors: (column field, block) pairs over all five fields
    auto columns_of = [&](Field row) {
        std::vector<std::pair<Field, const SparseMatrix*>> cols;
        switch (row) {
            case Field::T:
                cols = {{Field::T, &bl.heat_T}, {Field::R, heat_R ? &*heat_R : nullptr},
                        {Field::P, &bl.heat_P}, {Field::U, &bl.heat_U}};
                break;
            case Field::R:
                cols = {{Field::T, &bl.flux_T}, {Field::R, &as.Mr}};
                break;
            case Field::P:
                cols = {{Field::T, &bl.flow_T}, {Field::P, &bl.flow_P},
                        {Field::W, &bl.flow_W}, {Field::U, &bl.flow_U}};
                break;
            case Field::W:
                cols = {{Field::P, &bl.darcy_P}, {Field::W, &as.Mw}};
                break;
            case Field::U:
                cols = {{Field::T, &bl.mech_T}, {Field::P, &bl.mech_P}, {Field::U, &as.A}};
                break;
        }
        return cols;
    };

    auto base_rhs = [&](Field row) -> Vector {
        switch (row) {
            case Field::T:
                return (bl.tau * cx.loads->z + cx.psi_prev + bl.L_T * (as.Mt * x_old.T)).eval();
            case Field::R: return Vector::Zero(as.spaces.n_r);
            case Field::P:
                return (bl.tau * cx.loads->g + cx.phi_prev + bl.L_p * (as.Mt * x_old.p)).eval();
            case Field::W: return Vector::Zero(as.spaces.n_w);
            case Field::U: return cx.loads->f;
        }
        return {};
    };

    Vector rhs_full;  // assembled below
    {
        std::vector<Vector> rhs_rows;
        for (std::size_t bi = 0; bi < unknowns.size(); ++bi) {
            Vector rhs = base_rhs(unknowns[bi]);
            for (const auto& [colf, blk] : columns_of(unknowns[bi])) {
                if (!blk) continue;
                auto it = std::find(unknowns.begin(), unknowns.end(), colf);
                if (it != unknowns.end()) {
                    if (!reuse)
                        sys.set(static_cast<int>(bi), static_cast<int>(it - unknowns.begin()), *blk);
                } else {
                    rhs -= *blk * field_vec(x_new, colf);
                }
            }
            rhs_rows.push_back(std::move(rhs));
        }
        rhs_full = Vector::Zero(std::accumulate(sizes.begin(), sizes.end(), 0));
        int off = 0;
        for (std::size_t bi = 0; bi < unknowns.size(); ++bi) {
            rhs_full.segment(off, sizes[bi]) = rhs_rows[bi];
            off += sizes[bi];
        }
    }

    // essential constraints mapped into the stacked index space
    std::vector<int> bc_idx;
    std::vector<double> bc_val;
    {
        int off = 0;
        for (std::size_t bi = 0; bi < unknowns.size(); ++bi) {
            for (const auto& [dof, val] : (*cx.bcs)[static_cast<int>(unknowns[bi])]) {
                bc_idx.push_back(off + dof);
                bc_val.push_back(val);
            }
            off += sizes[bi];
        }
    }

    SubsystemCache local;
    SubsystemCache& c = cache ? *cache : local;
    Vector x;
    if (reuse) {
        const Vector b = eliminate_rhs(c.a_orig, rhs_full, bc_idx, bc_val);
        x = c.lu.solve(b);
    } else {
        SparseMatrix a = assemble_block(sys);
        auto [a_bc, b_bc] = apply_essential_bc(a, rhs_full, bc_idx, bc_val);
        c.a_orig = std::move(a);
        c.lu.factorize(a_bc);
        c.factored = true;
        x = c.lu.solve(b_bc);
    }

    int off = 0;
    for (std::size_t bi = 0; bi < unknowns.size(); ++bi) {
        field_vec(x_new, unknowns[bi]) = x.segment(off, sizes[bi]);
        off += sizes[bi];
    }
}

inline const std::vector<std::vector<Field>>& scheme_steps(SchemeKind k) {
    using F = Field;
    static const std::vector<std::vector<Field>> hfm = {{F::T, F::R, F::P, F::W, F::U}};
    static const std::vector<std::vector<Field>> hf_m = {{F::T, F::R, F::P, F::W}, {F::U}};
    static const std::vector<std::vector<Field>> hm_f = {{F::T, F::R, F::U}, {F::P, F::W}};
    static const std::vector<std::vector<Field>> fm_h = {{F::P, F::W, F::U}, {F::T, F::R}};
    static const std::vector<std::vector<Field>> h_f_m = {{F::T, F::R}, {F::P, F::W}, {F::U}};
    static const std::vector<std::vector<Field>> f_h_m = {{F::P, F::W}, {F::T, F::R}, {F::U}};
    switch (k) {
        case SchemeKind::HFM: return hfm;
        case SchemeKind::HF_M: return hf_m;
        case SchemeKind::HM_F: return hm_f;
        case SchemeKind::FM_H: return fm_h;
        case SchemeKind::H_F_M: return h_f_m;
        case SchemeKind::F_H_M: return f_h_m;
    }
    return hfm;
}

}  // namespace detail

// One full iteration of the chosen scheme. Decoupled subproblems consume the
// already-updated fields of this iteration exactly per the step structure;
// in particular the convection is rebuilt from the Darcy flux available at
// the time the heat subproblem is solved (lagged for HFM/HF-M/HM-F/H-F-M,
// current for FM-H/F-H-M step 2).
inline FieldState iterate_once(SchemeKind scheme, const FieldState& lagged, const FieldState& prev,
                               const Assemblies& as, const PhysParams& pp, double tau, double L_T,
                               double L_p, const Mesh& mesh, const StepLoads& loads,
                               const BcSet& bcs, const RunOptions& opt = {},
                               std::vector<detail::SubsystemCache>* caches = nullptr) {
    detail::StaticBlocks blocks(as, pp, tau, L_T, L_p, opt.scale_beta_coupling,
                                opt.scale_content_beta);
    detail::StepContext cx;
    cx.mesh = &mesh;
    cx.as = &as;
    cx.pp = &pp;
    cx.blocks = &blocks;
    cx.loads = &loads;
    cx.bcs = &bcs;
    cx.prev = &prev;
    cx.build_prev_content();

    const auto& steps = detail::scheme_steps(scheme);
    FieldState x_new = lagged;
    for (std::size_t s = 0; s < steps.size(); ++s)
        detail::solve_subsystem(steps[s], cx, lagged, x_new,
                                caches ? &(*caches)[s] : nullptr);
    return x_new;
}

// ---------------------------------------------------------------------------
// transient driver

struct TransientResult {
    std::vector<FieldState> states;
    std::vector<IterationReport> reports;
    double L_T = 0.0, L_p = 0.0;

    bool all_converged() const {
        for (const auto& r : reports)
            if (!r.converged) return false;
        return true;
    }
};

namespace detail {

inline double weighted_norm2(const Assemblies& as, const FieldState& x) {
    return x.T.dot(as.Mt * x.T) + x.r.dot(as.Mr * x.r) + x.p.dot(as.Mt * x.p) +
           x.w.dot(as.Mw * x.w) + x.u.dot(as.Mu * x.u);
}

inline double contraction_F(const Assemblies& as, const FieldState& a, const FieldState& b,
                            double L_T, double L_p, double tau) {
    const Vector ep = a.p - b.p, eT = a.T - b.T, ew = a.w - b.w;
    return 0.5 * L_p * ep.dot(as.Mt * ep) + 0.5 * L_T * eT.dot(as.Mt * eT) +
           0.25 * tau * ew.dot(as.Mw * ew);
}

}  // namespace detail

inline TransientResult run_transient(SchemeKind scheme, const Mesh& mesh, const PhysParams& pp,
                                     const ProblemSpec& problem, double tau, int n_steps,
                                     const StabilizationMode& stab, const RunOptions& opt = {}) {
    if (!(tau > 0.0)) throw std::invalid_argument("run_transient: tau must be positive");
    pp.validate();
    // theory stabilization follows the couplings actually present in the
    // momentum balance
    PhysParams pp_eff = pp;
    if (opt.scale_beta_coupling) pp_eff.beta = pp.beta / pp.T_ref;
    const auto [L_T, L_p] = stab.resolve(pp_eff);

    Assemblies as(mesh, pp);
    TransientResult out;
    out.L_T = L_T;
    out.L_p = L_p;

    const auto& steps = detail::scheme_steps(scheme);
    std::vector<detail::SubsystemCache> caches(steps.size());

    FieldState state = problem.initial(mesh, as.spaces);
    for (int n = 1; n <= n_steps; ++n) {
        const double t = n * tau;
        const StepLoads loads = assemble_loads(mesh, problem, t);
        const BcSet bcs = split_bcs(problem.essential_bcs(mesh, as.spaces, t));

        const FieldState prev = state;
        FieldState x_old = opt.warm_start ? prev : FieldState::zero(as.spaces);
        IterationReport rep;
        std::vector<FieldState> history;

        try {
            for (int i = 1; i <= opt.max_iter; ++i) {
                FieldState x_new = iterate_once(scheme, x_old, prev, as, pp, tau, L_T, L_p, mesh,
                                                loads, bcs, opt, &caches);
                double diff, norm;
                if (opt.mass_weighted_norm) {
                    FieldState d = x_new;
                    d.T -= x_old.T; d.r -= x_old.r; d.p -= x_old.p; d.w -= x_old.w; d.u -= x_old.u;
                    diff = std::sqrt(detail::weighted_norm2(as, d));
                    norm = std::sqrt(detail::weighted_norm2(as, x_new));
                } else {
                    diff = (x_new.stacked() - x_old.stacked()).norm();
                    norm = x_new.stacked().norm();
                }
                rep.residual_history.push_back(diff);
                rep.F_successive.push_back(detail::contraction_F(as, x_new, x_old, L_T, L_p, tau));
                if (opt.record_contraction) history.push_back(x_new);
                x_old = std::move(x_new);
                rep.iterations = i;
                if (diff <= opt.atol + opt.rtol * norm) {
                    rep.converged = true;
                    break;
                }
            }
        } catch (const SolveError& e) {
            throw SolveError("step " + std::to_string(n) + ", iteration " +
                             std::to_string(rep.iterations + 1) + ": " + e.what());
        }

        if (opt.record_contraction)
            for (const auto& it : history)
                rep.F_vs_limit.push_back(detail::contraction_F(as, it, x_old, L_T, L_p, tau));

        state = x_old;
        out.states.push_back(state);
        out.reports.push_back(std::move(rep));
    }
    return out;
}

// ---------------------------------------------------------------------------
// contraction diagnostics

struct ContractionDiagnostic {
    std::vector<double> factors_successive;  // F^i / F^{i-1} of successive-difference functionals
    std::vector<double> factors_vs_limit;    // same against the converged state (if recorded)
    double theory_factor = std::numeric_limits<double>::quiet_NaN();  // 1/(1+delta), c_Omega term dropped
};

inline ContractionDiagnostic contraction_diagnostic(const IterationReport& rep,
                                                    const PhysParams& pp, double tau, double L_T,
                                                    double L_p) {
    ContractionDiagnostic d;
    auto ratios = [](const std::vector<double>& f) {
        std::vector<double> r;
        for (std::size_t i = 1; i < f.size(); ++i)
            if (f[i - 1] > 0.0) r.push_back(f[i] / f[i - 1]);
        return r;
    };
    d.factors_successive = ratios(rep.F_successive);
    d.factors_vs_limit = ratios(rep.F_vs_limit);

    const double inf = std::numeric_limits<double>::infinity();
    const double m = pp.cutoff_M;
    const double heat_margin =
        pp.a0 - pp.b0 - 0.5 * tau * pp.c_f * pp.c_f * m * m * (pp.k_max() / pp.theta_min() + 1.0);
    const double d1 = L_p > 0.0 ? 2.0 * (pp.c0 - pp.b0) / L_p : inf;
    const double d2 = L_T > 0.0 ? 2.0 / L_T * heat_margin : (heat_margin >= 0.0 ? inf : -inf);
    const double delta = std::min({d1, d2, 0.5});
    d.theory_factor = 1.0 / (1.0 + delta);
    return d;
}

}  // namespace thermoporo
