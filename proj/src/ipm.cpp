#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "lierc/conic.hpp"

// Homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector over the cone product Free x Nonneg x SOC x PSD.
//
// Each iteration eliminates the cone variables against the NT scaling H and
// factors the dense Schur complement S = A_c H^{-1} A_c'. Free columns stay
// in the KKT system and are resolved through a second, much smaller
// factorization of A_f' S^{-1} A_f.

namespace lierc {

namespace {

constexpr double kStepFraction = 0.99;

struct MatEntry {
    int i, j;    // matrix coordinates, i <= j
    double val;  // symmetric matrix entry (duplicated to (j,i) when i < j)
};

struct BlockData {
    VarBlock meta;
    int offset = 0;
    std::vector<std::vector<std::pair<int, double>>> cols;  // CSC, svec coords for PSD
    std::vector<int> touching_rows;                         // PSD only
    std::vector<std::vector<MatEntry>> row_entries;         // PSD only, parallel to touching_rows
};

struct Scaling {
    Eigen::VectorXd lp_d;       // Nonneg: H^{-1} diagonal = x/z
    double soc_eta2 = 0.0;      // SOC: eta^2 = sqrt(x'Jx)/sqrt(z'Jz)
    Eigen::VectorXd soc_q;      // SOC: unit-J scaling point
    Eigen::MatrixXd psd_G;      // PSD: G Z G = X
    Eigen::MatrixXd psd_R;      // G = R R'
    Eigen::MatrixXd psd_Rinv;
    Eigen::VectorXd psd_lambda; // eigenvalues of the scaled point
    Eigen::VectorXd lambda;     // scaled point, block coordinates
};

double safe_sqrt(double v) { return std::sqrt(std::max(v, 0.0)); }

class HsdSolver {
  public:
    HsdSolver(const ConicProblem& prob, const SolverOptions& opts) : p_(prob), opts_(opts) {
        build();
    }
    ConicSolution run();

  private:
    void build();
    void equilibrate();
    void init_point();
    bool compute_scalings();
    bool factor_kkt();
    void solve_kkt(const Eigen::VectorXd& pv, const Eigen::VectorXd& qv, Eigen::VectorXd& dx,
                   Eigen::VectorXd& dy) const;
    void solve_kkt_once(const Eigen::VectorXd& pv, const Eigen::VectorXd& qv, Eigen::VectorXd& dx,
                        Eigen::VectorXd& dy) const;

    // Block-wise linear algebra on cone coordinates.
    Eigen::VectorXd apply_Hinv(const Eigen::VectorXd& u) const;
    Eigen::VectorXd apply_H(const Eigen::VectorXd& u) const;
    Eigen::VectorXd apply_Wop(const Eigen::VectorXd& u) const;     // W u
    Eigen::VectorXd apply_Wadj(const Eigen::VectorXd& u) const;    // W* u
    Eigen::VectorXd apply_Wadjinv(const Eigen::VectorXd& u) const; // W^{-*} u
    Eigen::VectorXd cone_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    Eigen::VectorXd cone_div_lambda(const Eigen::VectorXd& d) const;
    Eigen::VectorXd cone_identity() const;
    double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const;

    Eigen::VectorXd apply_A(const Eigen::VectorXd& x) const;
    Eigen::VectorXd apply_At(const Eigen::VectorXd& y) const;

    Eigen::VectorXd gather_cone(const Eigen::VectorXd& full) const {
        Eigen::VectorXd out(n_cone_);
        for (int j = 0; j < n_; ++j) out[cone_pos_[j]] = full[j];
        return out;
    }
    Eigen::VectorXd pad_cone(const Eigen::VectorXd& conev) const {
        Eigen::VectorXd out(n_);
        for (int j = 0; j < n_; ++j) out[j] = conev[cone_pos_[j]];
        return out;
    }

    const ConicProblem& p_;
    SolverOptions opts_;

    int n_ = 0;       // internal columns (free blocks carry a cone head)
    int n_orig_ = 0;  // columns of the caller's problem
    int n_cone_ = 0;
    int m_ = 0;
    double nu_ = 0.0;

    std::vector<BlockData> blocks_;
    std::vector<int> cone_block_idx_;
    std::vector<int> cone_pos_;    // internal column -> cone coordinate
    std::vector<int> col_map_;     // original column -> internal column
    std::vector<int> split_mate_;  // original free column -> negative-part column

    Eigen::VectorXd row_scale_, col_scale_;
    Eigen::VectorXd b_, c_;
    double b_norm_ = 1.0, c_norm_ = 1.0;

    Eigen::VectorXd x_, y_, z_;  // z on cone coordinates
    double tau_ = 1.0, kappa_ = 1.0;

    std::vector<Scaling> scalings_;
    Eigen::LLT<Eigen::MatrixXd> schur_llt_;
    Eigen::VectorXd lambda_;

    double reg_ = 5e-13;
};

void HsdSolver::build() {
    // Free columns are split internally as differences of nonnegative pairs
    // (u - v). The split keeps every constraint row coupled to scaled cone
    // columns, which keeps the Schur complement well posed; the paired dual
    // slacks z_u, z_v squeeze c - A'y to zero from both sides.
    n_orig_ = p_.cols();
    m_ = std::max(p_.num_rows, 1);  // keep at least one (possibly empty) row
    col_map_.assign(n_orig_, -1);
    split_mate_.assign(n_orig_, -1);

    int off = 0;       // internal offset
    int src_off = 0;   // original offset
    for (const auto& vb : p_.blocks) {
        BlockData bd;
        if (vb.cone == VarCone::Free) {
            bd.meta = {VarCone::Nonneg, 2 * vb.dim};
            for (int j = 0; j < vb.dim; ++j) {
                col_map_[src_off + j] = off + j;
                split_mate_[src_off + j] = off + vb.dim + j;
            }
        } else {
            bd.meta = vb;
            for (int j = 0; j < vb.len(); ++j) col_map_[src_off + j] = off + j;
        }
        bd.offset = off;
        bd.cols.resize(bd.meta.len());
        blocks_.push_back(std::move(bd));
        off += bd.meta.len();
        src_off += vb.len();
    }
    n_ = off;
    cone_pos_.assign(n_, -1);

    for (const auto& t : p_.entries) {
        const int col = col_map_[t.col()];
        const int mate = split_mate_[t.col()];
        for (auto& bd : blocks_) {
            if (col >= bd.offset && col < bd.offset + bd.meta.len()) {
                bd.cols[col - bd.offset].emplace_back(t.row(), t.value());
                if (mate >= 0) bd.cols[mate - bd.offset].emplace_back(t.row(), -t.value());
                break;
            }
        }
    }
    for (auto& bd : blocks_) {
        for (auto& col : bd.cols) {
            std::sort(col.begin(), col.end());
            std::size_t w = 0;
            for (std::size_t r = 0; r < col.size(); ++r) {
                if (w > 0 && col[w - 1].first == col[r].first)
                    col[w - 1].second += col[r].second;
                else
                    col[w++] = col[r];
            }
            col.resize(w);
        }
    }

    b_ = Eigen::VectorXd::Zero(m_);
    b_.head(p_.b.size()) = p_.b;
    c_ = Eigen::VectorXd::Zero(n_);
    for (int j = 0; j < n_orig_; ++j) {
        c_[col_map_[j]] = p_.c[j];
        if (split_mate_[j] >= 0) c_[split_mate_[j]] = -p_.c[j];
    }
    equilibrate();

    int cpos = 0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        auto& bd = blocks_[k];
        for (int j = 0; j < bd.meta.len(); ++j) cone_pos_[bd.offset + j] = cpos++;
        cone_block_idx_.push_back(static_cast<int>(k));
        switch (bd.meta.cone) {
            case VarCone::Nonneg: nu_ += bd.meta.dim; break;
            case VarCone::Soc: nu_ += 2; break;
            case VarCone::Psd: nu_ += bd.meta.dim; break;
            default: break;
        }
    }
    n_cone_ = cpos;

    for (int bi : cone_block_idx_) {
        auto& bd = blocks_[bi];
        if (bd.meta.cone != VarCone::Psd) continue;
        const int side = bd.meta.dim;
        std::vector<std::vector<MatEntry>> byrow(m_);
        int k = 0;
        for (int j = 0; j < side; ++j) {
            for (int i = 0; i <= j; ++i, ++k) {
                for (const auto& [row, val] : bd.cols[k]) {
                    const double mval = (i == j) ? val : val / std::sqrt(2.0);
                    byrow[row].push_back({i, j, mval});
                }
            }
        }
        for (int r = 0; r < m_; ++r) {
            if (byrow[r].empty()) continue;
            bd.touching_rows.push_back(r);
            bd.row_entries.push_back(std::move(byrow[r]));
        }
    }

}

void HsdSolver::equilibrate() {
    row_scale_ = Eigen::VectorXd::Ones(m_);
    col_scale_ = Eigen::VectorXd::Ones(n_);
    for (int pass = 0; pass < 3; ++pass) {
        Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m_);
        for (auto& bd : blocks_)
            for (auto& col : bd.cols)
                for (auto& [row, val] : col) rmax[row] = std::max(rmax[row], std::abs(val));
        Eigen::VectorXd rs(m_);
        for (int r = 0; r < m_; ++r) rs[r] = rmax[r] > 0 ? 1.0 / safe_sqrt(rmax[r]) : 1.0;
        row_scale_ = row_scale_.cwiseProduct(rs);

        std::vector<double> bmax(blocks_.size(), 0.0);
        for (std::size_t k = 0; k < blocks_.size(); ++k)
            for (auto& col : blocks_[k].cols)
                for (auto& [row, val] : col) {
                    val *= rs[row];
                    bmax[k] = std::max(bmax[k], std::abs(val));
                }
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const double s = bmax[k] > 0 ? 1.0 / safe_sqrt(bmax[k]) : 1.0;
            for (int j = 0; j < blocks_[k].meta.len(); ++j) {
                for (auto& [row, val] : blocks_[k].cols[j]) val *= s;
                col_scale_[blocks_[k].offset + j] *= s;
            }
        }
    }
    b_ = b_.cwiseProduct(row_scale_);
    c_ = c_.cwiseProduct(col_scale_);
    b_norm_ = std::max(1.0, b_.lpNorm<Eigen::Infinity>());
    c_norm_ = std::max(1.0, c_.lpNorm<Eigen::Infinity>());
}

void HsdSolver::init_point() {
    x_ = Eigen::VectorXd::Zero(n_);
    z_ = Eigen::VectorXd::Zero(n_cone_);
    y_ = Eigen::VectorXd::Zero(m_);
    for (int bi : cone_block_idx_) {
        const auto& bd = blocks_[bi];
        if (bd.meta.cone == VarCone::Nonneg) {
            for (int j = 0; j < bd.meta.dim; ++j) {
                x_[bd.offset + j] = 1.0;
                z_[cone_pos_[bd.offset + j]] = 1.0;
            }
        } else if (bd.meta.cone == VarCone::Soc) {
            x_[bd.offset] = 1.0;
            z_[cone_pos_[bd.offset]] = 1.0;
        } else if (bd.meta.cone == VarCone::Psd) {
            const int side = bd.meta.dim;
            int k = 0;
            for (int j = 0; j < side; ++j)
                for (int i = 0; i <= j; ++i, ++k)
                    if (i == j) {
                        x_[bd.offset + k] = 1.0;
                        z_[cone_pos_[bd.offset + k]] = 1.0;
                    }
        }
    }
    tau_ = 1.0;
    kappa_ = 1.0;
}

Eigen::VectorXd HsdSolver::apply_A(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    for (const auto& bd : blocks_)
        for (int j = 0; j < bd.meta.len(); ++j) {
            const double xv = x[bd.offset + j];
            if (xv == 0.0) continue;
            for (const auto& [row, val] : bd.cols[j]) out[row] += val * xv;
        }
    return out;
}

Eigen::VectorXd HsdSolver::apply_At(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (const auto& bd : blocks_)
        for (int j = 0; j < bd.meta.len(); ++j) {
            double acc = 0.0;
            for (const auto& [row, val] : bd.cols[j]) acc += val * y[row];
            out[bd.offset + j] = acc;
        }
    return out;
}

bool HsdSolver::compute_scalings() {
    scalings_.assign(cone_block_idx_.size(), {});
    lambda_.resize(n_cone_);
    for (std::size_t si = 0; si < cone_block_idx_.size(); ++si) {
        const auto& bd = blocks_[cone_block_idx_[si]];
        auto& sc = scalings_[si];
        const int len = bd.meta.len();
        Eigen::VectorXd xb(len), zb(len);
        for (int j = 0; j < len; ++j) {
            xb[j] = x_[bd.offset + j];
            zb[j] = z_[cone_pos_[bd.offset + j]];
        }
        switch (bd.meta.cone) {
            case VarCone::Nonneg: {
                if ((xb.array() <= 0).any() || (zb.array() <= 0).any()) return false;
                sc.lp_d = xb.cwiseQuotient(zb);
                sc.lambda = (xb.cwiseProduct(zb)).cwiseSqrt();
                break;
            }
            case VarCone::Soc: {
                const int d = len;
                auto jnorm2 = [&](const Eigen::VectorXd& v) {
                    return v[0] * v[0] - v.tail(d - 1).squaredNorm();
                };
                const double xJ = jnorm2(xb), zJ = jnorm2(zb);
                if (xJ <= 0 || zJ <= 0 || xb[0] <= 0 || zb[0] <= 0) return false;
                const double a = std::sqrt(xJ), bn = std::sqrt(zJ);
                Eigen::VectorXd xbar = xb / a, zbar = zb / bn;
                const double gamma = safe_sqrt((1.0 + xbar.dot(zbar)) / 2.0);
                if (gamma <= 0) return false;
                Eigen::VectorXd q(d);
                q[0] = (xbar[0] + zbar[0]) / (2 * gamma);
                q.tail(d - 1) = (xbar.tail(d - 1) - zbar.tail(d - 1)) / (2 * gamma);
                sc.soc_q = q;
                sc.soc_eta2 = a / bn;
                // Q_w z = x with Q_w = eta2 (2qq' - J), so H^{-1} = Q_w and
                // W^{-1} = eta U_q; lambda = W^{-1} z = eta U_q z.
                const double eta = std::sqrt(sc.soc_eta2);
                const auto q1 = q.tail(d - 1);
                const auto z1 = zb.tail(d - 1) * bn;
                Eigen::VectorXd uz(d);
                uz[0] = q[0] * zb[0] * bn + q1.dot(z1);
                uz.tail(d - 1) = q1 * (zb[0] * bn) + z1 + q1 * (q1.dot(z1) / (1 + q[0]));
                sc.lambda = eta * uz;
                break;
            }
            case VarCone::Psd: {
                const int side = bd.meta.dim;
                Eigen::MatrixXd X = smat(xb), Z = smat(zb);
                Eigen::LLT<Eigen::MatrixXd> lltx(X);
                if (lltx.info() != Eigen::Success) return false;
                Eigen::MatrixXd Lx = lltx.matrixL();
                Eigen::MatrixXd M = Lx.transpose() * Z * Lx;
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
                if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0) return false;
                const Eigen::VectorXd lam = eig.eigenvalues().cwiseSqrt();
                const Eigen::MatrixXd& Q = eig.eigenvectors();
                // R = Lx Q D^{-1/4}, G = R R', lambda_mat = R' Z R = diag(lam)
                sc.psd_R = Lx * Q * lam.cwiseSqrt().cwiseInverse().asDiagonal();
                sc.psd_Rinv = lam.cwiseSqrt().asDiagonal() * Q.transpose() *
                              Lx.triangularView<Eigen::Lower>()
                                  .solve(Eigen::MatrixXd::Identity(side, side));
                sc.psd_G = sc.psd_R * sc.psd_R.transpose();
                sc.psd_lambda = lam;
                Eigen::MatrixXd lam_mat = lam.asDiagonal();
                sc.lambda = svec(lam_mat);
                break;
            }
            default: break;
        }
        for (int j = 0; j < len; ++j) lambda_[cone_pos_[bd.offset + j]] = sc.lambda[j];
    }
    return true;
}

// Helper running a per-block transform over cone coordinates.
#define LIERC_BLOCK_LOOP(OUT, IN, BODY)                                        \
    Eigen::VectorXd OUT = Eigen::VectorXd::Zero(n_cone_);                      \
    for (std::size_t si = 0; si < cone_block_idx_.size(); ++si) {              \
        const auto& bd = blocks_[cone_block_idx_[si]];                         \
        const auto& sc = scalings_[si];                                        \
        (void)sc;                                                              \
        const int len = bd.meta.len();                                         \
        Eigen::VectorXd ub(len);                                               \
        for (int j = 0; j < len; ++j) ub[j] = (IN)[cone_pos_[bd.offset + j]];  \
        Eigen::VectorXd r;                                                     \
        BODY;                                                                  \
        for (int j = 0; j < len; ++j) OUT[cone_pos_[bd.offset + j]] = r[j];    \
    }

Eigen::VectorXd HsdSolver::apply_Hinv(const Eigen::VectorXd& u) const {
    LIERC_BLOCK_LOOP(out, u, {
        switch (bd.meta.cone) {
            case VarCone::Nonneg: r = sc.lp_d.cwiseProduct(ub); break;
            case VarCone::Soc: {
                const int d = len;
                const auto& q = sc.soc_q;
                Eigen::VectorXd ju = ub;
                ju.tail(d - 1) *= -1.0;
                r = sc.soc_eta2 * (2.0 * q.dot(ub) * q - ju);
                break;
            }
            case VarCone::Psd: r = svec(sc.psd_G * smat(ub) * sc.psd_G); break;
            default: break;
        }
    });
    return out;
}

Eigen::VectorXd HsdSolver::apply_H(const Eigen::VectorXd& u) const {
    LIERC_BLOCK_LOOP(out, u, {
        switch (bd.meta.cone) {
            case VarCone::Nonneg: r = ub.cwiseQuotient(sc.lp_d); break;
            case VarCone::Soc: {
                const int d = len;
                Eigen::VectorXd jq = sc.soc_q;
                jq.tail(d - 1) *= -1.0;
                Eigen::VectorXd ju = ub;
                ju.tail(d - 1) *= -1.0;
                r = (2.0 * jq.dot(ub) * jq - ju) / sc.soc_eta2;
                break;
            }
            case VarCone::Psd: {
                Eigen::MatrixXd Ginv = sc.psd_Rinv.transpose() * sc.psd_Rinv;
                r = svec(Ginv * smat(ub) * Ginv);
                break;
            }
            default: break;
        }
    });
    return out;
}

namespace {
// U_q u with U_q = [q0 q1'; q1  I + q1 q1'/(1+q0)] for a unit-J vector q.
Eigen::VectorXd soc_apply_u(const Eigen::VectorXd& q, const Eigen::VectorXd& u) {
    const int d = static_cast<int>(q.size());
    const auto q1 = q.tail(d - 1);
    const auto u1 = u.tail(d - 1);
    Eigen::VectorXd r(d);
    r[0] = q[0] * u[0] + q1.dot(u1);
    r.tail(d - 1) = q1 * u[0] + u1 + q1 * (q1.dot(u1) / (1 + q[0]));
    return r;
}
}  // namespace

Eigen::VectorXd HsdSolver::apply_Wop(const Eigen::VectorXd& u) const {
    LIERC_BLOCK_LOOP(out, u, {
        switch (bd.meta.cone) {
            case VarCone::Nonneg: r = ub.cwiseQuotient(sc.lp_d.cwiseSqrt()); break;
            case VarCone::Soc: {
                const int d = len;
                const double eta = std::sqrt(sc.soc_eta2);
                // W = (1/eta) J U_q J
                Eigen::VectorXd ju = ub;
                ju.tail(d - 1) *= -1.0;
                r = soc_apply_u(sc.soc_q, ju);
                r.tail(d - 1) *= -1.0;
                r /= eta;
                break;
            }
            case VarCone::Psd:
                r = svec(sc.psd_Rinv * smat(ub) * sc.psd_Rinv.transpose());
                break;
            default: break;
        }
    });
    return out;
}

Eigen::VectorXd HsdSolver::apply_Wadj(const Eigen::VectorXd& u) const {
    LIERC_BLOCK_LOOP(out, u, {
        switch (bd.meta.cone) {
            case VarCone::Nonneg: r = ub.cwiseQuotient(sc.lp_d.cwiseSqrt()); break;
            case VarCone::Soc: {
                const int d = len;
                const double eta = std::sqrt(sc.soc_eta2);
                Eigen::VectorXd ju = ub;
                ju.tail(d - 1) *= -1.0;
                r = soc_apply_u(sc.soc_q, ju);
                r.tail(d - 1) *= -1.0;
                r /= eta;
                break;
            }
            case VarCone::Psd:
                r = svec(sc.psd_Rinv.transpose() * smat(ub) * sc.psd_Rinv);
                break;
            default: break;
        }
    });
    return out;
}

Eigen::VectorXd HsdSolver::apply_Wadjinv(const Eigen::VectorXd& u) const {
    LIERC_BLOCK_LOOP(out, u, {
        switch (bd.meta.cone) {
            case VarCone::Nonneg: r = ub.cwiseProduct(sc.lp_d.cwiseSqrt()); break;
            case VarCone::Soc: {
                const double eta = std::sqrt(sc.soc_eta2);
                r = eta * soc_apply_u(sc.soc_q, ub);  // W^{-1} = eta U_q
                break;
            }
            case VarCone::Psd:
                r = svec(sc.psd_R.transpose() * smat(ub) * sc.psd_R);
                break;
            default: break;
        }
    });
    return out;
}

Eigen::VectorXd HsdSolver::cone_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_cone_);
    for (std::size_t si = 0; si < cone_block_idx_.size(); ++si) {
        const auto& bd = blocks_[cone_block_idx_[si]];
        const int len = bd.meta.len();
        Eigen::VectorXd ub(len), vb(len);
        for (int j = 0; j < len; ++j) {
            ub[j] = u[cone_pos_[bd.offset + j]];
            vb[j] = v[cone_pos_[bd.offset + j]];
        }
        Eigen::VectorXd r;
        switch (bd.meta.cone) {
            case VarCone::Nonneg: r = ub.cwiseProduct(vb); break;
            case VarCone::Soc: {
                r.resize(len);
                r[0] = ub.dot(vb);
                r.tail(len - 1) = ub[0] * vb.tail(len - 1) + vb[0] * ub.tail(len - 1);
                break;
            }
            case VarCone::Psd: {
                Eigen::MatrixXd U = smat(ub), V = smat(vb);
                r = svec(0.5 * (U * V + V * U));
                break;
            }
            default: break;
        }
        for (int j = 0; j < len; ++j) out[cone_pos_[bd.offset + j]] = r[j];
    }
    return out;
}

Eigen::VectorXd HsdSolver::cone_div_lambda(const Eigen::VectorXd& d) const {
    LIERC_BLOCK_LOOP(out, d, {
        switch (bd.meta.cone) {
            case VarCone::Nonneg: r = ub.cwiseQuotient(sc.lambda); break;
            case VarCone::Soc: {
                const int dd = len;
                const auto& lam = sc.lambda;
                const auto l1 = lam.tail(dd - 1);
                const auto d1 = ub.tail(dd - 1);
                const double det = lam[0] * lam[0] - l1.squaredNorm();
                r.resize(dd);
                r[0] = (lam[0] * ub[0] - l1.dot(d1)) / det;
                r.tail(dd - 1) = (d1 - r[0] * l1) / lam[0];
                break;
            }
            case VarCone::Psd: {
                const auto& lam = sc.psd_lambda;
                Eigen::MatrixXd D = smat(ub);
                Eigen::MatrixXd R(D.rows(), D.cols());
                for (int i = 0; i < D.rows(); ++i)
                    for (int j = 0; j < D.cols(); ++j) R(i, j) = 2.0 * D(i, j) / (lam[i] + lam[j]);
                r = svec(R);
                break;
            }
            default: break;
        }
    });
    return out;
}

Eigen::VectorXd HsdSolver::cone_identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_cone_);
    for (int bi : cone_block_idx_) {
        const auto& bd = blocks_[bi];
        if (bd.meta.cone == VarCone::Nonneg) {
            for (int j = 0; j < bd.meta.dim; ++j) e[cone_pos_[bd.offset + j]] = 1.0;
        } else if (bd.meta.cone == VarCone::Soc) {
            e[cone_pos_[bd.offset]] = 1.0;
        } else if (bd.meta.cone == VarCone::Psd) {
            int k = 0;
            for (int j = 0; j < bd.meta.dim; ++j)
                for (int i = 0; i <= j; ++i, ++k)
                    if (i == j) e[cone_pos_[bd.offset + k]] = 1.0;
        }
    }
    return e;
}

double HsdSolver::max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t si = 0; si < cone_block_idx_.size(); ++si) {
        const auto& bd = blocks_[cone_block_idx_[si]];
        const int len = bd.meta.len();
        Eigen::VectorXd vb(len), db(len);
        for (int j = 0; j < len; ++j) {
            vb[j] = v[cone_pos_[bd.offset + j]];
            db[j] = dv[cone_pos_[bd.offset + j]];
        }
        switch (bd.meta.cone) {
            case VarCone::Nonneg:
                for (int j = 0; j < len; ++j)
                    if (db[j] < 0) alpha = std::min(alpha, -vb[j] / db[j]);
                break;
            case VarCone::Soc: {
                const int d = len;
                const double A = db[0] * db[0] - db.tail(d - 1).squaredNorm();
                const double B = vb[0] * db[0] - vb.tail(d - 1).dot(db.tail(d - 1));
                const double C = vb[0] * vb[0] - vb.tail(d - 1).squaredNorm();
                double root = std::numeric_limits<double>::infinity();
                if (std::abs(A) < 1e-300) {
                    if (B < 0) root = -C / (2 * B);
                } else {
                    const double disc = B * B - A * C;
                    if (A > 0) {
                        if (disc >= 0 && B < 0) root = (-B - std::sqrt(disc)) / A;
                    } else {
                        root = (-B - std::sqrt(std::max(disc, 0.0))) / A;
                    }
                }
                if (root > 0) alpha = std::min(alpha, root);
                if (db[0] < 0) alpha = std::min(alpha, -vb[0] / db[0]);
                break;
            }
            case VarCone::Psd: {
                Eigen::MatrixXd V = smat(vb), D = smat(db);
                Eigen::LLT<Eigen::MatrixXd> llt(V);
                if (llt.info() != Eigen::Success) return 0.0;
                Eigen::MatrixXd L = llt.matrixL();
                Eigen::MatrixXd Y = L.triangularView<Eigen::Lower>().solve(D).transpose();
                Eigen::MatrixXd W = L.triangularView<Eigen::Lower>().solve(Y);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (W + W.transpose()));
                const double lmin = eig.eigenvalues().minCoeff();
                if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
                break;
            }
            default: break;
        }
    }
    return alpha;
}

bool HsdSolver::factor_kkt() {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m_, m_);

    for (std::size_t si = 0; si < cone_block_idx_.size(); ++si) {
        const auto& bd = blocks_[cone_block_idx_[si]];
        const auto& sc = scalings_[si];
        switch (bd.meta.cone) {
            case VarCone::Nonneg: {
                for (int j = 0; j < bd.meta.len(); ++j) {
                    const auto& col = bd.cols[j];
                    const double d = sc.lp_d[j];
                    for (std::size_t a = 0; a < col.size(); ++a)
                        for (std::size_t b2 = a; b2 < col.size(); ++b2)
                            S(col[a].first, col[b2].first) += d * col[a].second * col[b2].second;
                }
                break;
            }
            case VarCone::Soc: {
                const int d = bd.meta.len();
                // A H^{-1} A' = eta2 (2 (Aq)(Aq)' - A J A')
                Eigen::VectorXd aq = Eigen::VectorXd::Zero(m_);
                std::vector<int> nzrows;
                for (int j = 0; j < d; ++j)
                    for (const auto& [row, val] : bd.cols[j]) {
                        if (aq[row] == 0.0 && val * sc.soc_q[j] != 0.0) nzrows.push_back(row);
                        aq[row] += val * sc.soc_q[j];
                    }
                std::sort(nzrows.begin(), nzrows.end());
                nzrows.erase(std::unique(nzrows.begin(), nzrows.end()), nzrows.end());
                const double s2 = 2.0 * sc.soc_eta2;
                for (std::size_t a = 0; a < nzrows.size(); ++a)
                    for (std::size_t b2 = a; b2 < nzrows.size(); ++b2)
                        S(nzrows[a], nzrows[b2]) += s2 * aq[nzrows[a]] * aq[nzrows[b2]];
                for (int j = 0; j < d; ++j) {
                    const double sgn = (j == 0) ? 1.0 : -1.0;
                    const auto& col = bd.cols[j];
                    for (std::size_t a = 0; a < col.size(); ++a)
                        for (std::size_t b2 = a; b2 < col.size(); ++b2)
                            S(col[a].first, col[b2].first) -=
                                sgn * sc.soc_eta2 * col[a].second * col[b2].second;
                }
                break;
            }
            case VarCone::Psd: {
                const auto& G = sc.psd_G;
                const int nrows = static_cast<int>(bd.touching_rows.size());
                for (int a = 0; a < nrows; ++a) {
                    const auto& ea = bd.row_entries[a];
                    const int ra = bd.touching_rows[a];
                    for (int b2 = a; b2 < nrows; ++b2) {
                        const auto& eb = bd.row_entries[b2];
                        double acc = 0.0;
                        for (const auto& u : ea) {
                            for (const auto& w : eb) {
                                double term = G(u.j, w.i) * G(w.j, u.i);
                                if (w.i != w.j) term += G(u.j, w.j) * G(w.i, u.i);
                                if (u.i != u.j) {
                                    term += G(u.i, w.i) * G(w.j, u.j);
                                    if (w.i != w.j) term += G(u.i, w.j) * G(w.i, u.j);
                                }
                                acc += u.val * w.val * term;
                            }
                        }
                        S(ra, bd.touching_rows[b2]) += acc;
                    }
                }
                break;
            }
            default: break;
        }
    }

    const double dmax = std::max(1.0, S.diagonal().maxCoeff());
    S.diagonal().array() += reg_ * dmax;
    Eigen::MatrixXd Ssym = S.selfadjointView<Eigen::Upper>();
    schur_llt_.compute(Ssym);
    return schur_llt_.info() == Eigen::Success;
}

void HsdSolver::solve_kkt_once(const Eigen::VectorXd& pv, const Eigen::VectorXd& qv,
                               Eigen::VectorXd& dx, Eigen::VectorXd& dy) const {
    Eigen::VectorXd p_cone = gather_cone(pv);
    Eigen::VectorXd r = qv - apply_A(pad_cone(apply_Hinv(p_cone)));
    dy = schur_llt_.solve(r);
    Eigen::VectorXd aty = apply_At(dy);
    Eigen::VectorXd s(n_cone_);
    for (int j = 0; j < n_; ++j) s[cone_pos_[j]] = p_cone[cone_pos_[j]] + aty[j];
    dx = pad_cone(apply_Hinv(s));
}

void HsdSolver::solve_kkt(const Eigen::VectorXd& pv, const Eigen::VectorXd& qv,
                          Eigen::VectorXd& dx, Eigen::VectorXd& dy) const {
    solve_kkt_once(pv, qv, dx, dy);
    // iterative refinement against the exact KKT relations; the Schur
    // elimination of free columns loses accuracy on ill-conditioned scalings
    const double scale =
        1.0 + pv.lpNorm<Eigen::Infinity>() + qv.lpNorm<Eigen::Infinity>();
    double prev = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 8; ++pass) {
        Eigen::VectorXd dxc = gather_cone(dx);
        Eigen::VectorXd hx = pad_cone(apply_H(dxc));
        Eigen::VectorXd aty = apply_At(dy);
        Eigen::VectorXd res_x = pv - (hx - aty);
        Eigen::VectorXd res_q = qv - apply_A(dx);
        const double err = res_x.lpNorm<Eigen::Infinity>() + res_q.lpNorm<Eigen::Infinity>();
        if (opts_.verbose && std::getenv("LIERC_KKT_DEBUG"))
            std::printf("    kkt refine pass %d err %.3e scale %.3e\n", pass, err, scale);
        if (err <= 1e-14 * scale || err >= 0.9 * prev) break;
        prev = err;
        Eigen::VectorXd cx, cy;
        solve_kkt_once(res_x, res_q, cx, cy);
        dx += cx;
        dy += cy;
    }
}

ConicSolution HsdSolver::run() {
    const auto t0 = std::chrono::steady_clock::now();
    ConicSolution sol;
    auto finish = [&](SolveStatus st) {
        sol.status = st;
        sol.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    };

    if (n_ == 0) {
        sol.x = Eigen::VectorXd::Zero(n_orig_);
        sol.y = Eigen::VectorXd::Zero(p_.num_rows);
        sol.z = Eigen::VectorXd::Zero(n_orig_);
        const bool feas = p_.b.size() == 0 || p_.b.lpNorm<Eigen::Infinity>() < 1e-12;
        return finish(feas ? SolveStatus::Optimal : SolveStatus::PrimalInfeasible);
    }

    init_point();

    Eigen::VectorXd best_x = x_, best_y = y_, best_z;
    double best_tau = 1.0;
    double best_metric = std::numeric_limits<double>::infinity();
    double best_pres = 0, best_dres = 0, best_gap = 0;
    int small_steps = 0;

    Eigen::VectorXd zpad, res_p, res_d;
    double res_g = 0, pres = 0, dres = 0, relgap = 0;

    auto fill_solution = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& yy,
                             const Eigen::VectorXd& zz, double tt) {
        sol.x.resize(n_orig_);
        sol.z.resize(n_orig_);
        for (int j = 0; j < n_orig_; ++j) {
            const int cj = col_map_[j];
            sol.x[j] = xx[cj] / tt * col_scale_[cj];
            sol.z[j] = zz[cj] / tt / col_scale_[cj];
            if (split_mate_[j] >= 0)
                sol.x[j] -= xx[split_mate_[j]] / tt * col_scale_[split_mate_[j]];
        }
        // dual slack of free columns is identically zero at optimality
        int src_off = 0;
        for (const auto& vb : p_.blocks) {
            if (vb.cone == VarCone::Free)
                for (int j = 0; j < vb.dim; ++j) sol.z[src_off + j] = 0.0;
            src_off += vb.len();
        }
        sol.y = (yy / tt).cwiseProduct(row_scale_);
        sol.y.conservativeResize(p_.num_rows);
        sol.objective = p_.c.dot(sol.x);
        sol.dual_objective = sol.y.size() == p_.b.size() ? p_.b.dot(sol.y) : 0.0;
        sol.primal_residual = pres;
        sol.dual_residual = dres;
        sol.gap = relgap;
    };

    const double b_norm_orig = std::max(1.0, p_.b.size() ? p_.b.lpNorm<Eigen::Infinity>() : 0.0);
    const double c_norm_orig = std::max(1.0, p_.c.size() ? p_.c.lpNorm<Eigen::Infinity>() : 0.0);

    for (int iter = 0; iter < opts_.max_iters; ++iter) {
        sol.iterations = iter + 1;
        zpad = pad_cone(z_);
        res_p = apply_A(x_) - b_ * tau_;
        res_d = -apply_At(y_) - zpad + c_ * tau_;
        const double cx = c_.dot(x_), by = b_.dot(y_);
        res_g = cx - by + kappa_;
        const double mu = (x_.dot(zpad) + tau_ * kappa_) / (nu_ + 1.0);

        // residuals measured against the original (unequilibrated) data
        pres = (res_p.cwiseQuotient(row_scale_)).lpNorm<Eigen::Infinity>() / (tau_ * b_norm_orig);
        dres = (res_d.cwiseQuotient(col_scale_)).lpNorm<Eigen::Infinity>() / (tau_ * c_norm_orig);
        const double pobj = cx / tau_, dobj = by / tau_;
        const double gap_abs = x_.dot(zpad) / (tau_ * tau_);
        relgap = gap_abs / std::max({1.0, std::abs(pobj), std::abs(dobj)});

        if (opts_.verbose)
            std::printf("it %3d  mu %9.2e  pres %9.2e  dres %9.2e  gap %9.2e  tau %8.2e  kap %8.2e\n",
                        iter, mu, pres, dres, relgap, tau_, kappa_);

        const double metric = pres + dres + relgap;
        if (metric < best_metric && tau_ > 1e-10) {
            best_metric = metric;
            best_x = x_;
            best_y = y_;
            best_z = zpad;
            best_tau = tau_;
            best_pres = pres;
            best_dres = dres;
            best_gap = relgap;
        }

        if (pres <= opts_.tol_feas && dres <= opts_.tol_feas && relgap <= opts_.tol_gap) {
            fill_solution(x_, y_, zpad, tau_);
            return finish(SolveStatus::Optimal);
        }

        // numerical breakdown guard: once the iterate degrades far past the
        // best visited point, further factorizations only add noise
        if (best_metric < 1e-4 && metric > 50.0 * best_metric) {
            pres = best_pres;
            dres = best_dres;
            relgap = best_gap;
            fill_solution(best_x, best_y, best_z, best_tau);
            const bool opt = best_pres <= opts_.tol_feas && best_dres <= opts_.tol_feas &&
                             best_gap <= opts_.tol_gap;
            return finish(opt ? SolveStatus::Optimal : SolveStatus::SlowProgress);
        }

        // infeasibility certificates once tau collapses
        if (tau_ < 1e-7 * std::max(1.0, kappa_) || (mu < 1e-12 && tau_ < 1e-5)) {
            if (by > 1e-10) {
                const double cert =
                    ((apply_At(y_) + zpad).cwiseQuotient(col_scale_)).lpNorm<Eigen::Infinity>() /
                    by;
                if (cert < 1e-5) {
                    sol.y = y_.cwiseProduct(row_scale_) / by;
                    sol.y.conservativeResize(p_.num_rows);
                    sol.x = Eigen::VectorXd::Zero(n_orig_);
                    sol.z = Eigen::VectorXd::Zero(n_orig_);
                    return finish(SolveStatus::PrimalInfeasible);
                }
            }
            if (cx < -1e-10) {
                const double cert =
                    (apply_A(x_).cwiseQuotient(row_scale_)).lpNorm<Eigen::Infinity>() / (-cx);
                if (cert < 1e-5) {
                    sol.x.resize(n_orig_);
                    for (int j = 0; j < n_orig_; ++j) {
                        sol.x[j] = x_[col_map_[j]] * col_scale_[col_map_[j]] / (-cx);
                        if (split_mate_[j] >= 0)
                            sol.x[j] -= x_[split_mate_[j]] * col_scale_[split_mate_[j]] / (-cx);
                    }
                    sol.y = Eigen::VectorXd::Zero(p_.num_rows);
                    sol.z = Eigen::VectorXd::Zero(n_orig_);
                    return finish(SolveStatus::DualInfeasible);
                }
            }
            fill_solution(best_x, best_y, best_z, best_tau);
            return finish(SolveStatus::SlowProgress);
        }

        if (!compute_scalings()) {
            pres = best_pres;
            dres = best_dres;
            relgap = best_gap;
            fill_solution(best_x, best_y, best_z, best_tau);
            return finish(best_metric < 1e-4 ? SolveStatus::SlowProgress
                                             : SolveStatus::NumericalError);
        }
        bool factored = false;
        for (int attempt = 0; attempt < 3 && !factored; ++attempt) {
            factored = factor_kkt();
            if (!factored) reg_ *= 100;
        }
        if (!factored) {
            fill_solution(best_x, best_y, best_z, best_tau);
            return finish(best_metric < 1e-4 ? SolveStatus::SlowProgress
                                             : SolveStatus::NumericalError);
        }

        Eigen::VectorXd vx, vy;
        solve_kkt(-c_, b_, vx, vy);
        const double denom = c_.dot(vx) - b_.dot(vy) - kappa_ / tau_;

        Eigen::VectorXd xc = gather_cone(x_);

        auto direction = [&](const Eigen::VectorXd& ds, double dk, double sigma,
                             Eigen::VectorXd& dx, Eigen::VectorXd& dyv, Eigen::VectorXd& dz,
                             double& dtau, double& dkappa) {
            const double oms = 1.0 - sigma;
            Eigen::VectorXd zhat = apply_Wadj(cone_div_lambda(ds));
            Eigen::VectorXd pvec = -oms * res_d + pad_cone(zhat);
            Eigen::VectorXd qvec = -oms * res_p;
            Eigen::VectorXd ux, uy;
            solve_kkt(pvec, qvec, ux, uy);
            const double rhs_g = -oms * res_g;
            dtau = (rhs_g - c_.dot(ux) + b_.dot(uy) - dk / tau_) / denom;
            dx = ux + dtau * vx;
            dyv = uy + dtau * vy;
            Eigen::VectorXd dxc = gather_cone(dx);
            dz = zhat - apply_Wadj(apply_Wop(dxc));
            dkappa = (dk - kappa_ * dtau) / tau_;
        };

        // predictor
        Eigen::VectorXd ds_aff = -cone_product(lambda_, lambda_);
        Eigen::VectorXd dx_a, dy_a, dz_a;
        double dtau_a, dkappa_a;
        direction(ds_aff, -tau_ * kappa_, 0.0, dx_a, dy_a, dz_a, dtau_a, dkappa_a);

        Eigen::VectorXd dxc_a = gather_cone(dx_a);
        const double mu_cur = mu;
        double alpha = std::min(max_step(xc, dxc_a), max_step(z_, dz_a));
        if (dtau_a < 0) alpha = std::min(alpha, -tau_ / dtau_a);
        if (dkappa_a < 0) alpha = std::min(alpha, -kappa_ / dkappa_a);
        alpha = std::min(alpha, 1.0);

        const double mu_aff = ((x_ + alpha * dx_a).dot(zpad + alpha * pad_cone(dz_a)) +
                               (tau_ + alpha * dtau_a) * (kappa_ + alpha * dkappa_a)) /
                              (nu_ + 1.0);
        double sigma = std::pow(std::clamp(mu_aff / mu_cur, 0.0, 1.0), 3.0);
        sigma = std::clamp(sigma, 1e-8, 0.999);

        // combined step with Mehrotra correction
        Eigen::VectorXd corr = cone_product(apply_Wop(dxc_a), apply_Wadjinv(dz_a));
        Eigen::VectorXd ds = ds_aff - corr + sigma * mu_cur * cone_identity();
        const double dk = -tau_ * kappa_ - dtau_a * dkappa_a + sigma * mu_cur;

        Eigen::VectorXd dx, dy, dz;
        double dtau, dkappa;
        direction(ds, dk, sigma, dx, dy, dz, dtau, dkappa);

        Eigen::VectorXd dxc = gather_cone(dx);
        double step = std::min(max_step(xc, dxc), max_step(z_, dz));
        if (dtau < 0) step = std::min(step, -tau_ / dtau);
        if (dkappa < 0) step = std::min(step, -kappa_ / dkappa);
        step = std::min(kStepFraction * step, 1.0);

        if (!std::isfinite(step) || step <= 1e-9) {
            if (++small_steps >= 3) {
                fill_solution(best_x, best_y, best_z, best_tau);
                return finish(best_metric < 1e-2 ? SolveStatus::SlowProgress
                                                 : SolveStatus::NumericalError);
            }
            continue;
        }
        small_steps = 0;

        x_ += step * dx;
        y_ += step * dy;
        z_ += step * dz;
        tau_ += step * dtau;
        kappa_ += step * dkappa;
    }

    fill_solution(best_x, best_y, best_z, best_tau);
    return finish(SolveStatus::SlowProgress);
}

}  // namespace

ConicSolution solve_embedded(const ConicProblem& p, const SolverOptions& opts) {
    HsdSolver solver(p, opts);
    return solver.run();
}

}  // namespace lierc
