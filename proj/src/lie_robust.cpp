#include "lierc/lie_robust.hpp"

#include <cmath>

namespace lierc {

namespace {

// Lowers SecondOrder/RotatedSecondOrder block rows into the plain SOC layout
// used by the multiplier construction: vector rows first, scalar row last.
SdrBlock as_plain_soc(const SdrBlock& blk) {
    if (blk.cone.kind == ConeKind::SecondOrder) return blk;
    const int n = blk.cone.dim - 2;
    const int r = blk.cone.rows();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(r, r);
    for (int i = 0; i < n; ++i) T(i, i) = 2.0;       // 2u
    T(n, n) = 1.0;                                    // v - z
    T(n, n + 1) = -1.0;
    T(n + 1, n) = 1.0;                                // v + z (scalar)
    T(n + 1, n + 1) = 1.0;
    SdrBlock out = blk;
    out.cone = {ConeKind::SecondOrder, blk.cone.dim};
    out.A = T * blk.A;
    out.G = T * blk.G;
    out.e = T * blk.e;
    return out;
}

}  // namespace

int RobustConstraintSystem::find_multiplier(const std::string& name) const {
    for (std::size_t i = 0; i < multipliers.size(); ++i)
        if (multipliers[i].name == name) return static_cast<int>(i);
    return -1;
}

RobustConstraintSystem robustify(const LieData& lie, const SdrSet& W) {
    if (lie.channels() != W.L) throw SdrError("robustify: channel count does not match W");
    RobustConstraintSystem sys;
    sys.vars = lie.base.vars();
    sys.domain = lie.domain;
    sys.inequality.constant = lie.base;

    // channel identities start from the Lie gradient terms
    sys.equalities.resize(W.L);
    for (int l = 0; l < W.L; ++l) sys.equalities[l].constant = lie.per_channel[l];

    for (std::size_t s = 0; s < W.blocks.size(); ++s) {
        const SdrBlock* blk = &W.blocks[s];
        SdrBlock lowered;
        if (blk->cone.kind == ConeKind::RotatedSecondOrder) {
            lowered = as_plain_soc(*blk);
            blk = &lowered;
        }
        const std::string tag = "zeta" + std::to_string(s);
        switch (blk->cone.kind) {
            case ConeKind::Nonnegative: {
                const int d = blk->cone.dim;
                const int mi = static_cast<int>(sys.multipliers.size());
                sys.multipliers.push_back({tag, MultKind::SosScalar, d});
                for (int r = 0; r < d; ++r) sys.inequality.add({mi, r}, blk->e[r]);
                for (int l = 0; l < W.L; ++l)
                    for (int r = 0; r < d; ++r) sys.equalities[l].add({mi, r}, blk->A(r, l));
                for (int k = 0; k < blk->G.cols(); ++k) {
                    LinExpr ge;
                    ge.constant = Polynomial(sys.vars);
                    for (int r = 0; r < d; ++r) ge.add({mi, r}, blk->G(r, k));
                    sys.equalities.push_back(std::move(ge));
                }
                break;
            }
            case ConeKind::Psd: {
                const int side = blk->cone.dim;
                const int mi = static_cast<int>(sys.multipliers.size());
                sys.multipliers.push_back({tag, MultKind::SosMatrix, side});
                // trace pairing against plain (i<=j) entry symbols
                auto add_trace = [&](LinExpr& ex, const Eigen::VectorXd& svec_coef) {
                    Eigen::MatrixXd M = smat(svec_coef);
                    int comp = 0;
                    for (int j = 0; j < side; ++j)
                        for (int i = 0; i <= j; ++i, ++comp)
                            ex.add({mi, comp}, (i == j) ? M(i, j) : 2.0 * M(i, j));
                };
                add_trace(sys.inequality, blk->e);
                for (int l = 0; l < W.L; ++l) add_trace(sys.equalities[l], blk->A.col(l));
                for (int k = 0; k < blk->G.cols(); ++k) {
                    LinExpr ge;
                    ge.constant = Polynomial(sys.vars);
                    add_trace(ge, blk->G.col(k));
                    sys.equalities.push_back(std::move(ge));
                }
                break;
            }
            case ConeKind::SecondOrder: {
                const int d = blk->cone.dim;  // rows: vector 0..d-2, scalar d-1
                const int m = d - 1;
                const int bu = static_cast<int>(sys.multipliers.size());
                sys.multipliers.push_back({tag + "_beta", MultKind::FreePoly, m});
                const int bt = static_cast<int>(sys.multipliers.size());
                sys.multipliers.push_back({tag + "_tau", MultKind::FreePoly, 1});
                const int bw = static_cast<int>(sys.multipliers.size());
                sys.multipliers.push_back({tag + "_omega", MultKind::FreePoly, m});

                for (int r = 0; r < m; ++r) sys.inequality.add({bu, r}, blk->e[r]);
                sys.inequality.add({bt, 0}, blk->e[m]);
                for (int l = 0; l < W.L; ++l) {
                    for (int r = 0; r < m; ++r) sys.equalities[l].add({bu, r}, blk->A(r, l));
                    sys.equalities[l].add({bt, 0}, blk->A(m, l));
                }
                for (int k = 0; k < blk->G.cols(); ++k) {
                    LinExpr ge;
                    ge.constant = Polynomial(sys.vars);
                    for (int r = 0; r < m; ++r) ge.add({bu, r}, blk->G(r, k));
                    ge.add({bt, 0}, blk->G(m, k));
                    sys.equalities.push_back(std::move(ge));
                }
                // omega lift: [tau, beta_j; beta_j, omega_j] psd, tau = sum omega
                for (int j = 0; j < m; ++j) {
                    MatrixExpr blk2;
                    blk2.entries.assign(2, std::vector<LinExpr>(2));
                    for (auto& row : blk2.entries)
                        for (auto& e : row) e.constant = Polynomial(sys.vars);
                    blk2.entries[0][0].add({bt, 0}, 1.0);
                    blk2.entries[0][1].add({bu, j}, 1.0);
                    blk2.entries[1][0].add({bu, j}, 1.0);
                    blk2.entries[1][1].add({bw, j}, 1.0);
                    sys.lift_blocks.push_back(std::move(blk2));
                }
                LinExpr ident;
                ident.constant = Polynomial(sys.vars);
                ident.add({bt, 0}, 1.0);
                for (int j = 0; j < m; ++j) ident.add({bw, j}, -1.0);
                sys.lift_identities.push_back(std::move(ident));
                break;
            }
            default:
                throw SdrError("robustify: unsupported cone kind");
        }
    }

    if (W.equalities) {
        const auto& [B, theta] = *W.equalities;
        const int r = static_cast<int>(B.rows());
        if (r > 0) {
            const int mi = static_cast<int>(sys.multipliers.size());
            sys.multipliers.push_back({"mu", MultKind::FreePoly, r});
            // base + e'zeta - theta'mu <= 0, channel_l + (A'zeta)_l + (B'mu)_l = 0
            for (int k = 0; k < r; ++k) sys.inequality.add({mi, k}, -theta[k]);
            for (int l = 0; l < W.L; ++l)
                for (int k = 0; k < r; ++k) sys.equalities[l].add({mi, k}, B(k, l));
        }
    }
    return sys;
}

RobustConstraintSystem robustify_polytope(const LieData& lie, const Polytope& P) {
    if (P.faces() == 0 && lie.channels() > 0) throw SdrError("robustify_polytope: empty description");
    if (lie.channels() == 0) {
        SdrSet empty;
        empty.L = 0;
        return robustify(lie, empty);
    }
    return robustify(lie, P.to_sdr());
}

RobustConstraintSystem robustify_psd(const LieData& lie, const SdrSet& W) {
    if (W.blocks.size() != 1 || W.blocks[0].cone.kind != ConeKind::Psd)
        throw SdrError("robustify_psd: expected a single Psd block");
    return robustify(lie, W);
}

RobustConstraintSystem robustify_soc(const LieData& lie, const SdrSet& W) {
    if (W.blocks.size() != 1 || (W.blocks[0].cone.kind != ConeKind::SecondOrder &&
                                 W.blocks[0].cone.kind != ConeKind::RotatedSecondOrder))
        throw SdrError("robustify_soc: expected a single SecondOrder block");
    return robustify(lie, W);
}

RobustConstraintSystem robustify_equality(const LieData& lie, const SdrSet& W) {
    if (!W.equalities) throw SdrError("robustify_equality: W has no equality part");
    return robustify(lie, W);
}

std::pair<LieData, SdrSet> lift_integral_cost(const LieData& lie, const SdrSet& W,
                                              const IntegralCost& cost) {
    LieData out = lie;
    SdrSet Wl = W;
    const auto& vars = lie.base.vars();
    const int L = W.L;

    auto widen_blocks = [&](int extra) {
        Wl.L = L + extra;
        for (auto& blk : Wl.blocks) {
            Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(blk.A.rows(), L + extra);
            A2.leftCols(L) = blk.A;
            blk.A = std::move(A2);
        }
        if (Wl.equalities) {
            auto& [B, theta] = *Wl.equalities;
            Eigen::MatrixXd B2 = Eigen::MatrixXd::Zero(B.rows(), L + extra);
            B2.leftCols(L) = B;
            B = std::move(B2);
        }
    };

    switch (cost.kind) {
        case IntegralCost::Kind::Linf: {
            const int c = static_cast<int>(cost.C.rows());
            if (cost.C.cols() != L) throw SdrError("lift_integral_cost: C has wrong width");
            widen_blocks(1);
            SdrBlock nb;
            nb.cone = {ConeKind::Nonnegative, 2 * c};
            nb.A = Eigen::MatrixXd::Zero(2 * c, L + 1);
            nb.A.topLeftCorner(c, L) = -cost.C;
            nb.A.bottomLeftCorner(c, L) = cost.C;
            nb.A.col(L).setOnes();
            nb.G.resize(2 * c, 0);
            nb.e = Eigen::VectorXd::Zero(2 * c);
            Wl.blocks.push_back(std::move(nb));
            out.per_channel.push_back(Polynomial::constant(vars, 1.0));
            break;
        }
        case IntegralCost::Kind::L1: {
            widen_blocks(L);
            SdrBlock nb;
            nb.cone = {ConeKind::Nonnegative, 2 * L};
            nb.A = Eigen::MatrixXd::Zero(2 * L, 2 * L);
            nb.A.topLeftCorner(L, L) = -Eigen::MatrixXd::Identity(L, L);
            nb.A.topRightCorner(L, L) = Eigen::MatrixXd::Identity(L, L);
            nb.A.bottomLeftCorner(L, L) = Eigen::MatrixXd::Identity(L, L);
            nb.A.bottomRightCorner(L, L) = Eigen::MatrixXd::Identity(L, L);
            nb.G.resize(2 * L, 0);
            nb.e = Eigen::VectorXd::Zero(2 * L);
            Wl.blocks.push_back(std::move(nb));
            for (int l = 0; l < L; ++l)
                out.per_channel.push_back(Polynomial::constant(vars, 1.0));
            break;
        }
        case IntegralCost::Kind::Quadratic: {
            // x'Px and 2w'Nx are polynomial in (t,x): fold them into the Lie
            // data; only w'Rw needs the rotated-SOC lift.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigR(cost.R);
            if (cost.R.size() > 0 && eigR.eigenvalues().minCoeff() < -1e-10)
                throw SdrError("lift_integral_cost: R not positive semidefinite");
            if (cost.P.size() > 0) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigP(cost.P);
                if (eigP.eigenvalues().minCoeff() < -1e-10)
                    throw SdrError("lift_integral_cost: P not positive semidefinite");
                const int n = static_cast<int>(cost.P.rows());
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        if (cost.P(i, j) != 0.0)
                            out.base += Polynomial::variable(vars, vars[1 + i]) *
                                        Polynomial::variable(vars, vars[1 + j]) * cost.P(i, j);
            }
            if (cost.N.size() > 0) {
                const int n = static_cast<int>(cost.N.cols());
                for (int l = 0; l < L; ++l)
                    for (int j = 0; j < n; ++j)
                        if (cost.N(l, j) != 0.0)
                            out.per_channel[l] +=
                                Polynomial::variable(vars, vars[1 + j]) * (2.0 * cost.N(l, j));
            }
            widen_blocks(1);
            Eigen::MatrixXd Rhalf = eigR.operatorSqrt();
            SdrBlock nb;
            nb.cone = {ConeKind::RotatedSecondOrder, L + 2};
            nb.A = Eigen::MatrixXd::Zero(L + 2, L + 1);
            nb.A.topLeftCorner(L, L) = Rhalf;
            nb.A(L, L) = 1.0;  // v = wtilde
            nb.G.resize(L + 2, 0);
            nb.e = Eigen::VectorXd::Zero(L + 2);
            nb.e[L + 1] = cost.rotated_z;  // z fixed; see documented scaling choice
            Wl.blocks.push_back(std::move(nb));
            out.per_channel.push_back(Polynomial::constant(vars, 1.0));
            break;
        }
    }
    return {out, Wl};
}

double pointwise_margin(const RobustConstraintSystem& sys, std::span<const double> point) {
    ConicProblem prob;
    std::vector<int> mult_off(sys.multipliers.size());
    std::vector<VarCone> mult_cone(sys.multipliers.size());
    for (std::size_t i = 0; i < sys.multipliers.size(); ++i) {
        const auto& d = sys.multipliers[i];
        switch (d.kind) {
            case MultKind::SosScalar:
                mult_off[i] = prob.add_block(VarCone::Nonneg, d.count, d.name);
                mult_cone[i] = VarCone::Nonneg;
                break;
            case MultKind::SosMatrix:
                mult_off[i] = prob.add_block(VarCone::Psd, d.count, d.name);
                mult_cone[i] = VarCone::Psd;
                break;
            case MultKind::FreePoly:
                mult_off[i] = prob.add_block(VarCone::Free, d.count, d.name);
                mult_cone[i] = VarCone::Free;
                break;
        }
    }
    const int m_col = prob.add_block(VarCone::Free, 1, "margin");

    const double inv_r2 = 1.0 / std::sqrt(2.0);
    // column and scale of a symbol: SosMatrix comps are plain (i<=j) entries
    // while the block stores svec coordinates.
    auto sym_col = [&](SymRef s) -> std::pair<int, double> {
        if (mult_cone[s.mult] == VarCone::Psd) {
            // component index already matches svec layout; scale converts
            // the entry symbol to the svec coordinate
            int comp = s.comp;
            // determine whether comp is a diagonal position
            int j = 0, k = comp;
            while (k > j) {
                ++j;
                k = comp - j * (j + 1) / 2;
            }
            const bool diag = (k == j);
            return {mult_off[s.mult] + comp, diag ? 1.0 : inv_r2};
        }
        return {mult_off[s.mult] + s.comp, 1.0};
    };

    auto add_expr_row = [&](const LinExpr& ex, double extra_rhs, int slack_col, double m_coef) {
        const int row = prob.add_row(-ex.constant.eval(point) + extra_rhs, "pt");
        for (const auto& [s, coef] : ex.terms) {
            auto [col, scale] = sym_col(s);
            prob.add_entry(row, col, coef * scale);
        }
        if (slack_col >= 0) prob.add_entry(row, slack_col, 1.0);
        if (m_coef != 0.0) prob.add_entry(row, m_col, m_coef);
        return row;
    };

    const int slack = prob.add_block(VarCone::Nonneg, 1, "ineq_slack");
    add_expr_row(sys.inequality, 0.0, slack, 1.0);  // const + terms + m + s = 0
    for (const auto& eq : sys.equalities) add_expr_row(eq, 0.0, -1, 0.0);
    for (const auto& eq : sys.lift_identities) add_expr_row(eq, 0.0, -1, 0.0);

    for (const auto& mb : sys.lift_blocks) {
        const int side = mb.side();
        const int blkoff = prob.add_block(VarCone::Psd, side, "lift");
        int k = 0;
        for (int j = 0; j < side; ++j)
            for (int i = 0; i <= j; ++i, ++k) {
                const auto& ex = mb.entries[i][j];
                const double scale = (i == j) ? 1.0 : std::sqrt(2.0);
                const int row = prob.add_row(scale * ex.constant.eval(point), "lift");
                prob.add_entry(row, blkoff + k, 1.0);
                for (const auto& [s, coef] : ex.terms) {
                    auto [col, cscale] = sym_col(s);
                    prob.add_entry(row, col, -scale * coef * cscale);
                }
            }
    }

    prob.c = Eigen::VectorXd::Zero(prob.cols());
    prob.c[m_col] = -1.0;  // maximize margin
    auto sol = solve_embedded(prob);
    if (sol.status == SolveStatus::PrimalInfeasible)
        return -std::numeric_limits<double>::infinity();
    if (sol.status == SolveStatus::DualInfeasible)
        return std::numeric_limits<double>::infinity();
    if (!sol.usable()) throw SolverFailure("pointwise margin solve failed");
    return sol.x[m_col];
}

}  // namespace lierc
