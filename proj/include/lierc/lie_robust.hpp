#pragma once

#include <string>
#include <vector>

#include "lierc/polynomial.hpp"
#include "lierc/sdr_set.hpp"

namespace lierc {

/// Split Lie derivative data over (t, x): the semi-infinite constraint is
/// base + sum_l w_l per_channel[l] <= 0 for all (t,x) in `domain`, w in W.
struct LieData {
    Polynomial base;
    std::vector<Polynomial> per_channel;
    BsaSet domain;

    int channels() const { return static_cast<int>(per_channel.size()); }
};

/// Reference to one scalar component of a declared multiplier.
struct SymRef {
    int mult = 0;
    int comp = 0;
    bool operator==(const SymRef&) const = default;
};

/// Affine expression in multiplier symbols with a polynomial constant part.
struct LinExpr {
    Polynomial constant;
    std::vector<std::pair<SymRef, double>> terms;

    void add(SymRef s, double coef) {
        if (coef != 0.0) terms.emplace_back(s, coef);
    }
};

enum class MultKind {
    SosScalar,  // each component nonnegative on the domain (scalar WSOS)
    SosMatrix,  // symmetric matrix, PSD on the domain (matrix WSOS); comps are (i<=j)
    FreePoly,   // unconstrained polynomial components
};

struct MultiplierDecl {
    std::string name;
    MultKind kind = MultKind::SosScalar;
    int count = 1;  // components for SosScalar/FreePoly, matrix side for SosMatrix

    int components() const {
        return kind == MultKind::SosMatrix ? count * (count + 1) / 2 : count;
    }
};

/// Small symmetric matrix of expressions required PSD on the domain (the
/// 2x2 blocks of the SOC lift).
struct MatrixExpr {
    std::vector<std::vector<LinExpr>> entries;
    int side() const { return static_cast<int>(entries.size()); }
};

/// Finite multiplier reformulation of the robustified Lie inequality.
struct RobustConstraintSystem {
    std::vector<std::string> vars;  // (t, x...)
    BsaSet domain;
    std::vector<MultiplierDecl> multipliers;
    LinExpr inequality;                     // <= 0 on domain
    std::vector<LinExpr> equalities;        // == 0 identically in (t, x)
    std::vector<LinExpr> lift_identities;   // SOC lift: tau - sum_j omega_j == 0
    std::vector<MatrixExpr> lift_blocks;    // SOC lift: [tau b; b w] >= 0 on domain

    int find_multiplier(const std::string& name) const;
};

/// General robust counterpart over an SdrSet (any product of supported cone
/// blocks plus affine equalities). The named entry points below specialize.
RobustConstraintSystem robustify(const LieData& lie, const SdrSet& W);

RobustConstraintSystem robustify_polytope(const LieData& lie, const Polytope& P);
RobustConstraintSystem robustify_psd(const LieData& lie, const SdrSet& W);
RobustConstraintSystem robustify_soc(const LieData& lie, const SdrSet& W);
RobustConstraintSystem robustify_equality(const LieData& lie, const SdrSet& W);

/// Integral running-cost lifts: augments the channel list with the lifted
/// coordinates and returns the lifted uncertainty set.
struct IntegralCost {
    enum class Kind { Linf, L1, Quadratic } kind = Kind::L1;
    Eigen::MatrixXd C;  // Linf weight (c x L)
    Eigen::MatrixXd P, R, N;  // quadratic data
    double rotated_z = 0.5;   // z entry of the rotated-SOC lift
};

std::pair<LieData, SdrSet> lift_integral_cost(const LieData& lie, const SdrSet& W,
                                              const IntegralCost& cost);

/// Optimal pointwise margin of the multiplier system at a fixed (t, x):
/// max { m : system feasible with inequality <= -m }. Under a compact W this
/// equals -max_{w in W} [base + sum w_l chan_l](t, x).
double pointwise_margin(const RobustConstraintSystem& sys, std::span<const double> point);

}  // namespace lierc
