#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lierc/conic.hpp"
#include "lierc/lie_robust.hpp"
#include "lierc/polynomial.hpp"
#include "lierc/sdr_set.hpp"

namespace lierc {

/// block * C(n_vars + half_degree, half_degree): the side of the Gram matrix
/// representing a matrix-SOS multiplier of block side `block` truncated at
/// half-degree `half_degree` in `n_vars` variables.
std::int64_t gram_size(int n_vars, int half_degree, int block = 1);

/// Polynomial whose coefficients are affine functions of scalar decision
/// variables (columns of the conic problem under assembly).
struct LinFormD {
    double c0 = 0.0;
    std::vector<std::pair<int, double>> terms;  // (column, coefficient)
};

struct PolyLin {
    std::vector<std::string> vars;
    std::map<MultiIndex, LinFormD, GrevlexLess> coeffs;

    explicit PolyLin(std::vector<std::string> v = {}) : vars(std::move(v)) {}
    static PolyLin from(const Polynomial& p);

    int degree() const;
    bool empty() const { return coeffs.empty(); }
    void add_poly(const Polynomial& p, double scale = 1.0);
    void add_col_times_poly(int col, const Polynomial& p, double scale = 1.0);
    void add_col_times_mono(int col, const MultiIndex& alpha, double scale);
    void add_scaled(const PolyLin& other, double scale);
    PolyLin operator-() const;
};

/// Gram block bookkeeping for the structural audit and moment recovery.
struct GramBlockInfo {
    std::string id;
    int block_index = 0;   // index into ConicProblem::blocks
    int matrix_side = 1;   // n_i of the represented multiplier
    int basis_half_degree = 0;
    std::vector<MultiIndex> basis;
    Polynomial shift;      // descriptor multiplying the Gram form (1 for sigma_0)
    int side() const { return matrix_side * static_cast<int>(basis.size()); }
};

/// Named unknown polynomial: one decision column per basis monomial.
struct UnknownPoly {
    int offset = 0;
    std::vector<MultiIndex> basis;
    std::vector<std::string> vars;

    PolyLin poly() const;
    Polynomial value(const Eigen::VectorXd& x) const;
};

struct RowGroup {
    std::string id;
    std::vector<MultiIndex> monos;
    std::vector<int> rows;
};

/// Incrementally builds a standard-form cone program out of weighted-SOS
/// constraints and coefficient identities.
class SosAssembler {
  public:
    explicit SosAssembler(std::vector<std::string> vars) : vars_(std::move(vars)) {}

    int add_free_scalar(const std::string& id);
    UnknownPoly add_unknown_poly(const std::string& id, int max_degree);

    /// WSOS-parameterized polynomial on `domain`: sigma_0 + sum_i g_i sigma_i
    /// with inlined Gram blocks (no identity rows).
    PolyLin add_wsos_value(const std::string& id, const BsaSet& domain, int half_degree);
    /// Matrix variant: symmetric side x side PSD-valued polynomial on domain.
    std::vector<std::vector<PolyLin>> add_wsos_matrix_value(const std::string& id,
                                                            const BsaSet& domain, int side,
                                                            int half_degree);

    /// p must lie in the weighted-SOS cone of `domain`; half-degree taken
    /// from the actual expression degree unless `half_degree` >= 0.
    void require_wsos(const std::string& id, const PolyLin& p, const BsaSet& domain,
                      int half_degree = -1);
    /// Scherer constraint: matrix descriptors of `domain` get matrix-SOS
    /// multipliers of side n_i * C(n + d - d_i, d - d_i).
    void require_wsos_matrix(const std::string& id, const std::vector<std::vector<PolyLin>>& M,
                             const BsaSet& domain, int half_degree = -1);
    void require_zero(const std::string& id, const PolyLin& p);

    void add_objective(int col, double coef);

    const std::vector<GramBlockInfo>& grams() const { return grams_; }
    const std::vector<RowGroup>& row_groups() const { return row_groups_; }
    const std::vector<std::string>& vars() const { return vars_; }

    ConicProblem&& take_problem();
    const ConicProblem& problem() const { return prob_; }
    ConicProblem& mutable_problem() { return prob_; }

    int largest_block_side() const;

  private:
    GramBlockInfo& new_gram(const std::string& id, int matrix_side, int half_degree,
                            const Polynomial& shift);
    // contribution of a Gram block to the PolyLin value of its constraint
    void accumulate_gram(PolyLin& out, const GramBlockInfo& g, int entry_k, int entry_l);

    std::vector<std::string> vars_;
    ConicProblem prob_;
    std::vector<GramBlockInfo> grams_;
    std::vector<RowGroup> row_groups_;
    std::map<int, double> objective_;
};

/// Degree template for a hierarchy step. `multiplier_degree` caps every
/// multiplier polynomial; the default (2 * degree) matches the degree-d
/// tightening, with per-name overrides for experiments that need balanced
/// channel identities.
struct SosTemplate {
    int degree = 2;
    int aux_degree = -1;         // degree of v (and phi); default 2 * degree
    int multiplier_degree = -1;  // default 2 * degree
    std::map<std::string, int> multiplier_override;
    double epsilon = 0.0;        // strictness margin subtracted from the Lie inequality
    bool add_ball = true;        // append R^2 - |(t,x)|^2 to the Lie domain

    int v_deg() const { return aux_degree > 0 ? aux_degree : 2 * degree; }
    int mult_deg(const std::string& name) const {
        auto it = multiplier_override.find(name);
        if (it != multiplier_override.end()) return it->second;
        return multiplier_degree > 0 ? multiplier_degree : 2 * degree;
    }
};

/// Instantiates the multipliers of a robust constraint system at the given
/// template and emits the Lie inequality, channel identities, and SOC lift
/// blocks into the assembler. `substitute` maps multiplier symbols to their
/// PolyLin values; returned so callers can inspect multipliers afterwards.
struct InstantiatedSystem {
    std::vector<std::vector<PolyLin>> multiplier_values;  // [mult][component]
    PolyLin inequality;  // base + multiplier terms (constraint was ineq <= 0)
};

InstantiatedSystem emit_robust_system(SosAssembler& as, const RobustConstraintSystem& sys,
                                      const SosTemplate& tmpl, const PolyLin& base,
                                      const std::vector<PolyLin>& channels,
                                      const std::string& id_prefix = "lie");

}  // namespace lierc
