#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lierc {

/// Exponent vector, one entry per indeterminate of the owning polynomial.
using MultiIndex = std::vector<int>;

int multi_index_degree(const MultiIndex& alpha);

/// Graded reverse lexicographic order. Total degree first; ties broken so
/// that among equal-degree monomials the one with the larger exponent in the
/// last differing variable sorts lower.
bool grevlex_less(const MultiIndex& a, const MultiIndex& b);

struct GrevlexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        return grevlex_less(a, b);
    }
};

/// All exponent vectors in `nvars` variables of total degree <= max_degree,
/// listed in ascending grevlex order. This is the monomial basis ordering
/// used for every Gram and moment matrix in the project.
std::vector<MultiIndex> monomials_up_to(int nvars, int max_degree);

class PolynomialError : public std::runtime_error {
  public:
    explicit PolynomialError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse failure; `offset` is the byte position in the input text.
class ParseError : public PolynomialError {
  public:
    ParseError(const std::string& what, std::size_t offset)
        : PolynomialError(what + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

/// Sparse multivariate polynomial over a named, ordered variable list.
/// Immutable value type: all operations return new polynomials.
class Polynomial {
  public:
    using TermMap = std::map<MultiIndex, double, GrevlexLess>;

    Polynomial() = default;
    explicit Polynomial(std::vector<std::string> vars) : vars_(std::move(vars)) {}

    static Polynomial constant(std::vector<std::string> vars, double value);
    static Polynomial variable(std::vector<std::string> vars, const std::string& name);
    static Polynomial monomial(std::vector<std::string> vars, MultiIndex alpha, double coef);

    /// Parses the text grammar: signed sums of terms `c * v1^k1 * v2^k2`,
    /// `*` optional between coefficient and variable, `/` division by a
    /// numeric constant, parentheses, decimal and scientific coefficients.
    static Polynomial parse(const std::string& text, const std::vector<std::string>& vars);

    const std::vector<std::string>& vars() const { return vars_; }
    int nvars() const { return static_cast<int>(vars_.size()); }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    int degree() const;

    double coeff(const MultiIndex& alpha) const;
    double constant_term() const;

    int var_index(const std::string& name) const;  // -1 when absent

    Polynomial operator-() const;
    Polynomial operator+(const Polynomial& rhs) const;
    Polynomial operator-(const Polynomial& rhs) const;
    Polynomial operator*(const Polynomial& rhs) const;
    Polynomial operator*(double s) const;
    Polynomial operator/(double s) const;
    Polynomial& operator+=(const Polynomial& rhs);
    Polynomial& operator-=(const Polynomial& rhs);

    Polynomial pow(int k) const;

    bool operator==(const Polynomial& rhs) const;

    Polynomial differentiate(const std::string& var) const;
    Polynomial differentiate(int var) const;

    /// Exact numeric evaluation by recursive Horner factoring, one variable
    /// at a time.
    double eval(std::span<const double> point) const;

    /// Re-embeds this polynomial over a new variable list; every current
    /// variable must appear in `new_vars` by name.
    Polynomial with_vars(const std::vector<std::string>& new_vars) const;

    /// Substitutes var := value, folding the exponent into the coefficient.
    /// The variable list is unchanged (the result has degree 0 in `var`).
    Polynomial partial_eval(int var, double value) const;

    /// Substitutes var := factor * var.
    Polynomial scale_var(int var, double factor) const;

    /// Canonical printer; output re-parses to the same polynomial.
    std::string print() const;

    /// Largest absolute coefficient (0 for the zero polynomial).
    double max_abs_coeff() const;

  private:
    void add_term(const MultiIndex& alpha, double coef);
    void normalize();
    void check_same_vars(const Polynomial& rhs) const;

    std::vector<std::string> vars_;
    TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

/// Vector of polynomials over one shared variable list.
struct PolynomialVector {
    std::vector<Polynomial> entries;

    PolynomialVector() = default;
    explicit PolynomialVector(std::vector<Polynomial> e) : entries(std::move(e)) {}

    int size() const { return static_cast<int>(entries.size()); }
    const Polynomial& operator[](int i) const { return entries.at(i); }

    std::vector<double> eval(std::span<const double> point) const;
};

/// Split Lie derivative of v(t, x) along input-affine dynamics
/// f0 + sum_l w_l f_l: `base` collects the drift part dv/dt + f0 . grad_x v,
/// `per_channel[l]` is f_l . grad_x v.
struct LieTerms {
    Polynomial base;
    std::vector<Polynomial> per_channel;
};

/// `v` lives over (t, x1..xn); `f0` and each channel are n-dimensional over
/// the same variable list. Throws on dimension mismatch.
LieTerms lie_terms(const Polynomial& v, const PolynomialVector& f0,
                   const std::vector<PolynomialVector>& channels);

}  // namespace lierc
