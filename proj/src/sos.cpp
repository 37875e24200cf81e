#include "lierc/sos.hpp"

#include <algorithm>
#include <cmath>

namespace lierc {

std::int64_t gram_size(int n_vars, int half_degree, int block) {
    if (n_vars < 0 || half_degree < 0 || block < 0) throw PolynomialError("gram_size: negative argument");
    // C(n_vars + half_degree, half_degree)
    std::int64_t num = 1;
    for (int k = 1; k <= half_degree; ++k) {
        num = num * (n_vars + k);
        num /= k;
        if (num < 0 || num > (std::int64_t{1} << 60)) throw PolynomialError("gram_size overflow");
    }
    return block * num;
}

PolyLin PolyLin::from(const Polynomial& p) {
    PolyLin out(p.vars());
    out.add_poly(p);
    return out;
}

int PolyLin::degree() const {
    int d = 0;
    for (const auto& [alpha, lf] : coeffs) d = std::max(d, multi_index_degree(alpha));
    return d;
}

void PolyLin::add_poly(const Polynomial& p, double scale) {
    if (vars.empty()) vars = p.vars();
    for (const auto& [alpha, c] : p.terms()) coeffs[alpha].c0 += c * scale;
}

void PolyLin::add_col_times_mono(int col, const MultiIndex& alpha, double scale) {
    if (scale == 0.0) return;
    auto& lf = coeffs[alpha];
    for (auto& [c, v] : lf.terms)
        if (c == col) {
            v += scale;
            return;
        }
    lf.terms.emplace_back(col, scale);
}

void PolyLin::add_col_times_poly(int col, const Polynomial& p, double scale) {
    if (vars.empty()) vars = p.vars();
    for (const auto& [alpha, c] : p.terms()) add_col_times_mono(col, alpha, c * scale);
}

void PolyLin::add_scaled(const PolyLin& other, double scale) {
    if (vars.empty()) vars = other.vars;
    for (const auto& [alpha, lf] : other.coeffs) {
        auto& dst = coeffs[alpha];
        dst.c0 += lf.c0 * scale;
        for (const auto& [col, v] : lf.terms) add_col_times_mono(col, alpha, v * scale);
    }
}

PolyLin PolyLin::operator-() const {
    PolyLin out(vars);
    out.add_scaled(*this, -1.0);
    return out;
}

PolyLin UnknownPoly::poly() const {
    PolyLin out(vars);
    for (std::size_t j = 0; j < basis.size(); ++j)
        out.add_col_times_mono(offset + static_cast<int>(j), basis[j], 1.0);
    return out;
}

Polynomial UnknownPoly::value(const Eigen::VectorXd& x) const {
    Polynomial out(vars);
    for (std::size_t j = 0; j < basis.size(); ++j)
        out += Polynomial::monomial(vars, basis[j], x[offset + static_cast<int>(j)]);
    return out;
}

int SosAssembler::add_free_scalar(const std::string& id) {
    return prob_.add_block(VarCone::Free, 1, id);
}

UnknownPoly SosAssembler::add_unknown_poly(const std::string& id, int max_degree) {
    UnknownPoly u;
    u.vars = vars_;
    u.basis = monomials_up_to(static_cast<int>(vars_.size()), max_degree);
    u.offset = prob_.add_block(VarCone::Free, static_cast<int>(u.basis.size()), id);
    return u;
}

GramBlockInfo& SosAssembler::new_gram(const std::string& id, int matrix_side, int half_degree,
                                      const Polynomial& shift) {
    GramBlockInfo g;
    g.id = id;
    g.matrix_side = matrix_side;
    g.basis_half_degree = half_degree;
    g.basis = monomials_up_to(static_cast<int>(vars_.size()), half_degree);
    g.shift = shift;
    const int side = g.side();
    prob_.add_block(VarCone::Psd, side, id);
    g.block_index = static_cast<int>(prob_.blocks.size()) - 1;
    grams_.push_back(std::move(g));
    return grams_.back();
}

void SosAssembler::accumulate_gram(PolyLin& out, const GramBlockInfo& g, int entry_k, int entry_l) {
    const int q = g.matrix_side;
    const int nb = static_cast<int>(g.basis.size());
    const int off = prob_.block_offset(g.block_index);
    const int side = g.side();
    const double inv_r2 = 1.0 / std::sqrt(2.0);
    // S(k,l) = sum over ordered pairs (a,b) of Q[(a,k),(b,l)] m_a m_b; every
    // ordered pair contributes once to the svec coordinate it references.
    MultiIndex mu(vars_.size());
    for (int a = 0; a < nb; ++a) {
        for (int b = 0; b < nb; ++b) {
            int P1 = a * q + entry_k;
            int P2 = b * q + entry_l;
            const double sym = (P1 == P2) ? 1.0 : inv_r2;
            if (P1 > P2) std::swap(P1, P2);
            for (const auto& [gamma, gc] : g.shift.terms()) {
                for (std::size_t i = 0; i < mu.size(); ++i)
                    mu[i] = g.basis[a][i] + g.basis[b][i] + gamma[i];
                out.add_col_times_mono(off + svec_index(P1, P2, side), mu, gc * sym);
            }
        }
    }
}

PolyLin SosAssembler::add_wsos_value(const std::string& id, const BsaSet& domain,
                                     int half_degree) {
    PolyLin out(vars_);
    auto& g0 = new_gram(id + ":g0", 1, half_degree, Polynomial::constant(vars_, 1.0));
    accumulate_gram(out, g0, 0, 0);
    for (std::size_t i = 0; i < domain.inequalities.size(); ++i) {
        const int di = domain.inequalities[i].degree() / 2;
        if (half_degree - di < 0) continue;
        auto& gi = new_gram(id + ":g" + std::to_string(i + 1), 1, half_degree - di,
                            domain.inequalities[i]);
        accumulate_gram(out, gi, 0, 0);
    }
    for (std::size_t j = 0; j < domain.equalities.size(); ++j) {
        const int hd = 2 * half_degree - domain.equalities[j].degree();
        if (hd < 0) continue;
        UnknownPoly phi = add_unknown_poly(id + ":h" + std::to_string(j), hd);
        PolyLin term = phi.poly();
        PolyLin scaled(vars_);
        for (const auto& [alpha, lf] : term.coeffs)
            for (const auto& [gamma, gc] : domain.equalities[j].terms()) {
                MultiIndex mu(vars_.size());
                for (std::size_t k = 0; k < mu.size(); ++k) mu[k] = alpha[k] + gamma[k];
                for (const auto& [col, v] : lf.terms) scaled.add_col_times_mono(col, mu, v * gc);
            }
        out.add_scaled(scaled, 1.0);
    }
    return out;
}

std::vector<std::vector<PolyLin>> SosAssembler::add_wsos_matrix_value(const std::string& id,
                                                                      const BsaSet& domain,
                                                                      int side, int half_degree) {
    std::vector<std::vector<PolyLin>> out(side, std::vector<PolyLin>(side, PolyLin(vars_)));
    auto emit = [&](const std::string& gid, int hd, const Polynomial& shift) {
        if (hd < 0) return;
        auto& g = new_gram(gid, side, hd, shift);
        for (int k = 0; k < side; ++k)
            for (int l = k; l < side; ++l) {
                accumulate_gram(out[k][l], g, k, l);
            }
    };
    emit(id + ":g0", half_degree, Polynomial::constant(vars_, 1.0));
    for (std::size_t i = 0; i < domain.inequalities.size(); ++i)
        emit(id + ":g" + std::to_string(i + 1), half_degree - domain.inequalities[i].degree() / 2,
             domain.inequalities[i]);
    for (int k = 0; k < side; ++k)
        for (int l = 0; l < k; ++l) out[k][l] = out[l][k];
    return out;
}

namespace {

int polylin_half_degree(const PolyLin& p) { return (p.degree() + 1) / 2; }

}  // namespace

void SosAssembler::require_wsos(const std::string& id, const PolyLin& p, const BsaSet& domain,
                                int half_degree) {
    const int d = half_degree >= 0 ? half_degree : polylin_half_degree(p);
    // value of the WSOS side
    PolyLin rhs = add_wsos_value(id, domain, d);
    // matrix descriptors of the domain get Scherer multipliers
    for (std::size_t i = 0; i < domain.matrix_inequalities.size(); ++i) {
        const auto& M = domain.matrix_inequalities[i];
        const int q = M.side();
        const int di = M.degree() / 2;
        if (d - di < 0) continue;
        auto mv = add_wsos_matrix_value(id + ":m" + std::to_string(i), BsaSet{vars_, {}, {}, {}},
                                        q, d - di);
        // trace pairing <M, sigma>
        for (int k = 0; k < q; ++k)
            for (int l = 0; l < q; ++l) {
                PolyLin prod(vars_);
                for (const auto& [alpha, lf] : mv[k][l].coeffs)
                    for (const auto& [gamma, gc] : M.entries[k][l].terms()) {
                        MultiIndex mu(vars_.size());
                        for (std::size_t t = 0; t < mu.size(); ++t) mu[t] = alpha[t] + gamma[t];
                        prod.coeffs[mu].c0 += lf.c0 * gc;
                        for (const auto& [col, v] : lf.terms)
                            prod.add_col_times_mono(col, mu, v * gc);
                    }
                rhs.add_scaled(prod, 1.0);
            }
    }

    PolyLin diff = p;
    diff.add_scaled(rhs, -1.0);
    require_zero(id, diff);
}

void SosAssembler::require_wsos_matrix(const std::string& id,
                                       const std::vector<std::vector<PolyLin>>& M,
                                       const BsaSet& domain, int half_degree) {
    const int q = static_cast<int>(M.size());
    int d = half_degree;
    if (d < 0) {
        int deg = 0;
        for (const auto& row : M)
            for (const auto& e : row) deg = std::max(deg, e.degree());
        d = (deg + 1) / 2;
    }
    auto rhs = add_wsos_matrix_value(id, domain, q, d);
    for (int k = 0; k < q; ++k)
        for (int l = k; l < q; ++l) {
            PolyLin diff = M[k][l];
            diff.add_scaled(rhs[k][l], -1.0);
            require_zero(id + ":e" + std::to_string(k) + std::to_string(l), diff);
        }
}

void SosAssembler::require_zero(const std::string& id, const PolyLin& p) {
    RowGroup rg;
    rg.id = id;
    for (const auto& [alpha, lf] : p.coeffs) {
        if (lf.terms.empty()) {
            if (std::abs(lf.c0) > 1e-11)
                throw PolynomialError("identity '" + id + "' is structurally infeasible");
            continue;
        }
        const int row = prob_.add_row(-lf.c0, id);
        for (const auto& [col, v] : lf.terms) prob_.add_entry(row, col, v);
        rg.monos.push_back(alpha);
        rg.rows.push_back(row);
    }
    row_groups_.push_back(std::move(rg));
}

void SosAssembler::add_objective(int col, double coef) { objective_[col] += coef; }

ConicProblem&& SosAssembler::take_problem() {
    prob_.c = Eigen::VectorXd::Zero(prob_.cols());
    for (const auto& [col, coef] : objective_) prob_.c[col] = coef;
    return std::move(prob_);
}

int SosAssembler::largest_block_side() const {
    int side = 0;
    for (const auto& g : grams_) side = std::max(side, g.side());
    return side;
}

InstantiatedSystem emit_robust_system(SosAssembler& as, const RobustConstraintSystem& sys,
                                      const SosTemplate& tmpl, const PolyLin& base,
                                      const std::vector<PolyLin>& channels,
                                      const std::string& id_prefix) {
    InstantiatedSystem out;
    const auto& vars = as.vars();
    const int L = static_cast<int>(channels.size());

    // multiplier values
    for (const auto& decl : sys.multipliers) {
        const int cap = tmpl.mult_deg(decl.name);
        std::vector<PolyLin> comps;
        switch (decl.kind) {
            case MultKind::SosScalar:
                for (int c = 0; c < decl.count; ++c)
                    comps.push_back(as.add_wsos_value(
                        id_prefix + ":" + decl.name + "[" + std::to_string(c) + "]", sys.domain,
                        cap / 2));
                break;
            case MultKind::SosMatrix: {
                auto mv = as.add_wsos_matrix_value(id_prefix + ":" + decl.name, sys.domain,
                                                   decl.count, cap / 2);
                for (int j = 0; j < decl.count; ++j)
                    for (int i = 0; i <= j; ++i) comps.push_back(mv[i][j]);
                break;
            }
            case MultKind::FreePoly:
                for (int c = 0; c < decl.count; ++c)
                    comps.push_back(as.add_unknown_poly(id_prefix + ":" + decl.name + "[" +
                                                            std::to_string(c) + "]",
                                                        cap)
                                        .poly());
                break;
        }
        out.multiplier_values.push_back(std::move(comps));
    }

    auto expr_value = [&](const LinExpr& ex, const PolyLin* constant) {
        PolyLin val(vars);
        if (constant) val.add_scaled(*constant, 1.0);
        for (const auto& [s, coef] : ex.terms)
            val.add_scaled(out.multiplier_values[s.mult][s.comp], coef);
        return val;
    };

    // robustified Lie inequality: expr <= 0, tightened as -expr - eps in WSOS
    out.inequality = expr_value(sys.inequality, &base);
    PolyLin neg = -out.inequality;
    if (tmpl.epsilon != 0.0)
        neg.add_poly(Polynomial::constant(vars, -tmpl.epsilon));
    as.require_wsos(id_prefix + "_ineq", neg, sys.domain);

    // channel identities, then lifted-row identities
    for (std::size_t k = 0; k < sys.equalities.size(); ++k) {
        const PolyLin* cst = (static_cast<int>(k) < L) ? &channels[k] : nullptr;
        as.require_zero(id_prefix + "_chan" + std::to_string(k),
                        expr_value(sys.equalities[k], cst));
    }
    for (std::size_t k = 0; k < sys.lift_identities.size(); ++k)
        as.require_zero(id_prefix + "_lift_id" + std::to_string(k),
                        expr_value(sys.lift_identities[k], nullptr));
    for (std::size_t j = 0; j < sys.lift_blocks.size(); ++j) {
        const auto& mb = sys.lift_blocks[j];
        std::vector<std::vector<PolyLin>> M(mb.side(), std::vector<PolyLin>(mb.side()));
        for (int a = 0; a < mb.side(); ++a)
            for (int b = 0; b < mb.side(); ++b) M[a][b] = expr_value(mb.entries[a][b], nullptr);
        as.require_wsos_matrix(id_prefix + "_lift" + std::to_string(j), M, sys.domain);
    }
    return out;
}

}  // namespace lierc
