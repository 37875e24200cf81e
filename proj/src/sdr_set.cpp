#include "lierc/sdr_set.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace lierc {

namespace {

Eigen::VectorXd interior_direction(const ConeBlock& cone) {
    if (cone.kind == ConeKind::RotatedSecondOrder) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(cone.rows());
        c[cone.dim - 2] = 1.0 / std::sqrt(2.0);
        c[cone.dim - 1] = 1.0 / std::sqrt(2.0);
        return c;
    }
    return incenter(cone);
}

// Lower a block's affine rows to the solver's cone layout. SecondOrder data
// is vector-first here but scalar-first in the solver; rotated cones map to
// plain SOC via (u, v, z) -> (v+z, 2u, v-z).
struct LoweredBlock {
    VarCone cone;
    int dim;
    Eigen::MatrixXd A;
    Eigen::MatrixXd G;
    Eigen::VectorXd e;
};

LoweredBlock lower_block(const SdrBlock& blk) {
    LoweredBlock out;
    const int r = blk.cone.rows();
    switch (blk.cone.kind) {
        case ConeKind::Nonnegative:
            out = {VarCone::Nonneg, blk.cone.dim, blk.A, blk.G, blk.e};
            break;
        case ConeKind::Psd:
            out = {VarCone::Psd, blk.cone.dim, blk.A, blk.G, blk.e};
            break;
        case ConeKind::SecondOrder: {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(r, r);
            T(0, r - 1) = 1.0;
            for (int i = 0; i + 1 < r; ++i) T(i + 1, i) = 1.0;
            out = {VarCone::Soc, blk.cone.dim, T * blk.A, T * blk.G, T * blk.e};
            break;
        }
        case ConeKind::RotatedSecondOrder: {
            const int n = blk.cone.dim - 2;
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(r, r);
            T(0, n) = 1.0;
            T(0, n + 1) = 1.0;
            for (int i = 0; i < n; ++i) T(1 + i, i) = 2.0;
            T(n + 1, n) = 1.0;
            T(n + 1, n + 1) = -1.0;
            out = {VarCone::Soc, blk.cone.dim, T * blk.A, T * blk.G, T * blk.e};
            break;
        }
    }
    return out;
}

double block_margin(const SdrBlock& blk, const Eigen::VectorXd& s) {
    switch (blk.cone.kind) {
        case ConeKind::Nonnegative:
            return s.minCoeff();
        case ConeKind::SecondOrder: {
            const int r = static_cast<int>(s.size());
            return s[r - 1] - s.head(r - 1).norm();
        }
        case ConeKind::RotatedSecondOrder: {
            const int n = blk.cone.dim - 2;
            const double v = s[n], z = s[n + 1];
            const double q = (v + z) - std::sqrt(4.0 * s.head(n).squaredNorm() + (v - z) * (v - z));
            return std::min({q, v, z});
        }
        case ConeKind::Psd: {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(smat(s));
            return eig.eigenvalues().minCoeff();
        }
    }
    return 0.0;
}

}  // namespace

bool SdrSet::has_lift() const {
    for (const auto& b : blocks)
        if (b.G.cols() > 0) return true;
    return false;
}

SdrSet SdrSet::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    const int L = static_cast<int>(lo.size());
    Polytope P;
    P.gamma.resize(2 * L, L);
    P.gamma << Eigen::MatrixXd::Identity(L, L), -Eigen::MatrixXd::Identity(L, L);
    P.h.resize(2 * L);
    P.h << hi, -lo;
    return P.to_sdr();
}

SdrSet SdrSet::spectahedron(const Eigen::MatrixXd& A0, const std::vector<Eigen::MatrixXd>& Al,
                            const std::vector<Eigen::MatrixXd>& Gk) {
    SdrSet W;
    W.L = static_cast<int>(Al.size());
    SdrBlock blk;
    blk.cone = {ConeKind::Psd, static_cast<int>(A0.rows())};
    blk.e = svec(A0);
    blk.A.resize(blk.e.size(), W.L);
    for (int l = 0; l < W.L; ++l) blk.A.col(l) = svec(Al[l]);
    blk.G.resize(blk.e.size(), static_cast<int>(Gk.size()));
    for (std::size_t k = 0; k < Gk.size(); ++k) blk.G.col(k) = svec(Gk[k]);
    W.blocks.push_back(std::move(blk));
    return W;
}

SdrSet SdrSet::soc_ball(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
                        const Eigen::VectorXd& e, double r) {
    if (r < 0) throw SdrError("negative radius");
    SdrSet W;
    W.L = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows());
    SdrBlock blk;
    blk.cone = {ConeKind::SecondOrder, m + 1};
    blk.A = Eigen::MatrixXd::Zero(m + 1, W.L);
    blk.A.topRows(m) = A;
    blk.G = Eigen::MatrixXd::Zero(m + 1, G.cols());
    if (G.cols() > 0) blk.G.topRows(m) = G;
    blk.e.resize(m + 1);
    blk.e << e, r;
    W.blocks.push_back(std::move(blk));
    return W;
}

SdrSet SdrSet::elliptope3() {
    auto sym = [](int i, int j) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 3);
        M(i, j) = 1.0;
        M(j, i) = 1.0;
        return M;
    };
    return spectahedron(Eigen::MatrixXd::Identity(3, 3), {sym(0, 1), sym(0, 2), sym(1, 2)});
}

SdrSet SdrSet::singleton(const Eigen::VectorXd& theta) {
    SdrSet W;
    W.L = static_cast<int>(theta.size());
    W.equalities = {Eigen::MatrixXd::Identity(W.L, W.L), theta};
    return W;
}

SdrSet Polytope::to_sdr() const {
    SdrSet W;
    W.L = L();
    SdrBlock blk;
    blk.cone = {ConeKind::Nonnegative, faces()};
    blk.A = -gamma;
    blk.G.resize(faces(), 0);
    blk.e = h;
    W.blocks.push_back(std::move(blk));
    return W;
}

Eigen::VectorXd incenter(const ConeBlock& cone) {
    switch (cone.kind) {
        case ConeKind::Nonnegative:
            return Eigen::VectorXd::Ones(cone.dim);
        case ConeKind::SecondOrder: {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(cone.dim);
            c[cone.dim - 1] = 1.0;
            return c;
        }
        case ConeKind::Psd: {
            const int n = cone.dim;
            return svec(Eigen::MatrixXd::Identity(n, n) / std::sqrt(static_cast<double>(n)));
        }
        default:
            throw SdrError("unsupported cone kind for incenter");
    }
}

std::vector<int> append_sdr_constraints(ConicProblem& prob, const SdrSet& W,
                                        const std::vector<int>& w_cols,
                                        const std::string& id_prefix) {
    if (static_cast<int>(w_cols.size()) != W.L) throw SdrError("w column count mismatch");
    int q_total = 0;
    for (const auto& b : W.blocks) q_total += static_cast<int>(b.G.cols());
    int lam_off = -1;
    if (q_total > 0) lam_off = prob.add_block(VarCone::Free, q_total, id_prefix + "_lambda");

    std::vector<int> slack_blocks;
    int q_used = 0;
    for (std::size_t s = 0; s < W.blocks.size(); ++s) {
        LoweredBlock lb = lower_block(W.blocks[s]);
        const int off =
            prob.add_block(lb.cone, lb.dim, id_prefix + "_slack_" + std::to_string(s));
        slack_blocks.push_back(static_cast<int>(prob.blocks.size()) - 1);
        const int rows = static_cast<int>(lb.e.size());
        for (int r = 0; r < rows; ++r) {
            const int row = prob.add_row(lb.e[r], id_prefix + "_row");
            prob.add_entry(row, off + r, 1.0);
            for (int l = 0; l < W.L; ++l) prob.add_entry(row, w_cols[l], -lb.A(r, l));
            for (int k = 0; k < lb.G.cols(); ++k)
                prob.add_entry(row, lam_off + q_used + k, -lb.G(r, k));
        }
        q_used += static_cast<int>(lb.G.cols());
    }
    if (W.equalities) {
        const auto& [B, theta] = *W.equalities;
        for (int r = 0; r < B.rows(); ++r) {
            const int row = prob.add_row(theta[r], id_prefix + "_eq");
            for (int l = 0; l < W.L; ++l) prob.add_entry(row, w_cols[l], B(r, l));
        }
    }
    return slack_blocks;
}

namespace {

// Margin program over W: variables (w, sigma), maximize sigma subject to
// A w + G lam + e - sigma * c_s in K_s and sigma <= 1. Optionally pins w.
struct MarginProgram {
    ConicProblem prob;
    int w_off = 0;
    int sigma_col = 0;
};

MarginProgram build_margin_program(const SdrSet& W, const Eigen::VectorXd* pin_w) {
    MarginProgram mp;
    SdrSet Wa = W;
    Wa.L = W.L + 1;
    for (auto& blk : Wa.blocks) {
        Eigen::MatrixXd A2(blk.A.rows(), W.L + 1);
        A2.leftCols(W.L) = blk.A;
        A2.col(W.L) = -interior_direction(blk.cone);
        blk.A = std::move(A2);
    }
    if (Wa.equalities) {
        auto& [B, theta] = *Wa.equalities;
        Eigen::MatrixXd B2(B.rows(), W.L + 1);
        B2.leftCols(W.L) = B;
        B2.col(W.L).setZero();
        B = std::move(B2);
    }
    mp.w_off = mp.prob.add_block(VarCone::Free, W.L + 1, "w_sigma");
    mp.sigma_col = mp.w_off + W.L;
    std::vector<int> wcols(W.L + 1);
    for (int l = 0; l <= W.L; ++l) wcols[l] = mp.w_off + l;
    append_sdr_constraints(mp.prob, Wa, wcols, "margin");
    // sigma <= 1
    const int cap = mp.prob.add_block(VarCone::Nonneg, 1, "sigma_cap");
    const int row = mp.prob.add_row(1.0, "sigma_cap");
    mp.prob.add_entry(row, mp.sigma_col, 1.0);
    mp.prob.add_entry(row, cap, 1.0);
    if (pin_w) {
        for (int l = 0; l < W.L; ++l) {
            const int r = mp.prob.add_row((*pin_w)[l], "pin_w");
            mp.prob.add_entry(r, mp.w_off + l, 1.0);
        }
    }
    mp.prob.c = Eigen::VectorXd::Zero(mp.prob.cols());
    mp.prob.c[mp.sigma_col] = -1.0;  // maximize sigma
    return mp;
}

}  // namespace

bool membership(const SdrSet& W, const Eigen::VectorXd& w, double tol) {
    if (w.size() != W.L) throw SdrError("membership: dimension mismatch");
    if (W.equalities) {
        const auto& [B, theta] = *W.equalities;
        if (((B * w - theta).lpNorm<Eigen::Infinity>()) > tol) return false;
    }
    if (!W.has_lift()) {
        for (const auto& blk : W.blocks)
            if (block_margin(blk, blk.A * w + blk.e) < -tol) return false;
        return true;
    }
    MarginProgram mp = build_margin_program(W, &w);
    auto sol = solve_embedded(mp.prob);
    if (sol.status == SolveStatus::PrimalInfeasible) return false;
    if (!sol.usable()) throw SolverFailure("membership feasibility solve failed: " + to_string(sol.status));
    return sol.x[mp.sigma_col] >= -tol;
}

SlaterResult check_slater(const SdrSet& W) {
    SlaterResult out;
    // The cone margin is only informative when cone blocks exist; a set cut
    // out by equalities alone goes straight to the width probe.
    if (!W.blocks.empty()) {
        MarginProgram mp = build_margin_program(W, nullptr);
        auto sol = solve_embedded(mp.prob);
        if (sol.status == SolveStatus::PrimalInfeasible) {
            out.kind = SlaterResult::Kind::None;
            return out;
        }
        if (!sol.usable()) throw SolverFailure("slater margin solve failed: " + to_string(sol.status));
        out.margin = sol.x[mp.sigma_col];
        if (out.margin > 1e-7) {
            out.kind = SlaterResult::Kind::SlaterPoint;
            out.w = sol.x.segment(mp.w_off, W.L);
            return out;
        }
    }
    // no interior: probe coordinate widths to detect a singleton
    Eigen::VectorXd lo(W.L), hi(W.L);
    for (int l = 0; l < W.L; ++l) {
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(W.L);
        dir[l] = 1.0;
        try {
            hi[l] = support_point(W, dir).second;
            lo[l] = -support_point(W, -dir).second;
        } catch (const SdrError&) {
            out.kind = SlaterResult::Kind::None;
            return out;
        }
    }
    if ((hi - lo).lpNorm<Eigen::Infinity>() <= 1e-6) {
        out.kind = SlaterResult::Kind::Singleton;
        out.w = 0.5 * (hi + lo);
    } else {
        out.kind = SlaterResult::Kind::None;
    }
    return out;
}

std::pair<Eigen::VectorXd, double> support_point(const SdrSet& W, const Eigen::VectorXd& theta) {
    ConicProblem prob;
    const int w_off = prob.add_block(VarCone::Free, W.L, "w");
    std::vector<int> wcols(W.L);
    for (int l = 0; l < W.L; ++l) wcols[l] = w_off + l;
    append_sdr_constraints(prob, W, wcols, "support");
    prob.c = Eigen::VectorXd::Zero(prob.cols());
    for (int l = 0; l < W.L; ++l) prob.c[w_off + l] = -theta[l];
    auto sol = solve_embedded(prob);
    if (sol.status == SolveStatus::PrimalInfeasible) throw SdrError("support_point: empty set");
    if (sol.status == SolveStatus::DualInfeasible)
        throw SdrError("support_point: unbounded direction");
    if (!sol.usable()) throw SolverFailure("support solve failed: " + to_string(sol.status));
    return {sol.x.segment(w_off, W.L), -sol.objective};
}

std::vector<Eigen::VectorXd> vertices(const Polytope& P) {
    const int L = P.L(), m = P.faces();
    if (L > 6 || m > 32) throw SdrError("vertices: size guard exceeded (L <= 6, faces <= 32)");
    // boundedness probe
    SdrSet W = P.to_sdr();
    for (int l = 0; l < L; ++l) {
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(L);
        dir[l] = 1.0;
        support_point(W, dir);
        support_point(W, -dir);  // throws when unbounded
    }

    std::vector<Eigen::VectorXd> out;
    std::vector<int> idx(L);
    auto visit = [&](auto&& self, int start, int depth) -> void {
        if (depth == L) {
            Eigen::MatrixXd Gam(L, L);
            Eigen::VectorXd rhs(L);
            for (int i = 0; i < L; ++i) {
                Gam.row(i) = P.gamma.row(idx[i]);
                rhs[i] = P.h[idx[i]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(Gam);
            if (!lu.isInvertible()) return;
            Eigen::VectorXd v = lu.solve(rhs);
            if (((P.gamma * v - P.h).array() > 1e-9).any()) return;
            for (const auto& u : out)
                if ((u - v).norm() <= 1e-9) return;
            out.push_back(v);
            return;
        }
        for (int i = start; i <= m - (L - depth); ++i) {
            idx[depth] = i;
            self(self, i + 1, depth + 1);
        }
    };
    if (L > 0 && m >= L) visit(visit, 0, 0);
    return out;
}

std::pair<Eigen::VectorXd, double> chebyshev_center(const Polytope& P) {
    const int L = P.L(), m = P.faces();
    if (m == 0) throw SdrError("chebyshev_center: unbounded polytope");
    ConicProblem prob;
    const int w_off = prob.add_block(VarCone::Free, L, "w");
    const int r_off = prob.add_block(VarCone::Nonneg, 1 + m, "r_slack");
    for (int i = 0; i < m; ++i) {
        const int row = prob.add_row(P.h[i], "face");
        for (int l = 0; l < L; ++l) prob.add_entry(row, w_off + l, P.gamma(i, l));
        prob.add_entry(row, r_off, P.gamma.row(i).norm());
        prob.add_entry(row, r_off + 1 + i, 1.0);
    }
    prob.c = Eigen::VectorXd::Zero(prob.cols());
    prob.c[r_off] = -1.0;
    auto sol = solve_embedded(prob);
    if (sol.status == SolveStatus::PrimalInfeasible) throw SdrError("chebyshev_center: empty polytope");
    if (sol.status == SolveStatus::DualInfeasible)
        throw SdrError("chebyshev_center: unbounded polytope");
    if (!sol.usable()) throw SolverFailure("chebyshev solve failed: " + to_string(sol.status));
    return {sol.x.segment(w_off, L), sol.x[r_off]};
}

Eigen::VectorXd project_onto(const SdrSet& W, const Eigen::VectorXd& point) {
    ConicProblem prob;
    const int w_off = prob.add_block(VarCone::Free, W.L, "w");
    const int t_off = prob.add_block(VarCone::Soc, W.L + 1, "dist");
    std::vector<int> wcols(W.L);
    for (int l = 0; l < W.L; ++l) wcols[l] = w_off + l;
    for (int l = 0; l < W.L; ++l) {
        const int row = prob.add_row(-point[l], "diff");
        prob.add_entry(row, t_off + 1 + l, 1.0);
        prob.add_entry(row, w_off + l, -1.0);
    }
    append_sdr_constraints(prob, W, wcols, "proj");
    prob.c = Eigen::VectorXd::Zero(prob.cols());
    prob.c[t_off] = 1.0;
    auto sol = solve_embedded(prob);
    if (!sol.usable()) throw SolverFailure("projection solve failed: " + to_string(sol.status));
    return sol.x.segment(w_off, W.L);
}

int MatrixPoly::degree() const {
    int d = 0;
    for (const auto& row : entries)
        for (const auto& p : row) d = std::max(d, p.degree());
    return d;
}

bool BsaSet::contains(std::span<const double> point, double tol) const {
    for (const auto& g : inequalities)
        if (g.eval(point) < -tol) return false;
    for (const auto& h : equalities)
        if (std::abs(h.eval(point)) > tol) return false;
    for (const auto& M : matrix_inequalities) {
        const int s = M.side();
        Eigen::MatrixXd val(s, s);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) val(i, j) = M.entries[i][j].eval(point);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (val + val.transpose()));
        if (eig.eigenvalues().minCoeff() < -tol) return false;
    }
    return true;
}

BsaSet BsaSet::box(const std::vector<std::string>& vars, const Eigen::VectorXd& lo,
                   const Eigen::VectorXd& hi) {
    BsaSet s;
    s.vars = vars;
    for (int i = 0; i < lo.size(); ++i) {
        auto xi = Polynomial::variable(vars, vars[i]);
        s.inequalities.push_back((xi - Polynomial::constant(vars, lo[i])) *
                                 (Polynomial::constant(vars, hi[i]) - xi));
    }
    return s;
}

BsaSet BsaSet::ball(const std::vector<std::string>& vars, const Eigen::VectorXd& center,
                    double radius) {
    BsaSet s;
    s.vars = vars;
    Polynomial g = Polynomial::constant(vars, radius * radius);
    for (int i = 0; i < center.size(); ++i) {
        auto d = Polynomial::variable(vars, vars[i]) - Polynomial::constant(vars, center[i]);
        g -= d * d;
    }
    s.inequalities.push_back(g);
    return s;
}

BsaSet BsaSet::point(const std::vector<std::string>& vars, const Eigen::VectorXd& value) {
    BsaSet s;
    s.vars = vars;
    for (int i = 0; i < value.size(); ++i)
        s.equalities.push_back(Polynomial::variable(vars, vars[i]) -
                               Polynomial::constant(vars, value[i]));
    return s;
}

bool BsaSet::is_point(Eigen::VectorXd* value) const {
    if (!inequalities.empty() || !matrix_inequalities.empty()) return false;
    if (equalities.size() != vars.size()) return false;
    Eigen::VectorXd v(vars.size());
    std::vector<bool> seen(vars.size(), false);
    for (const auto& h : equalities) {
        int var = -1;
        double c0 = 0.0;
        for (const auto& [alpha, c] : h.terms()) {
            const int deg = multi_index_degree(alpha);
            if (deg == 0) {
                c0 = c;
            } else if (deg == 1) {
                for (std::size_t i = 0; i < alpha.size(); ++i)
                    if (alpha[i] == 1) {
                        if (var >= 0 || c != 1.0) return false;
                        var = static_cast<int>(i);
                    }
            } else {
                return false;
            }
        }
        if (var < 0 || seen[var]) return false;
        seen[var] = true;
        v[var] = -c0;
    }
    if (value) *value = v;
    return true;
}

}  // namespace lierc
