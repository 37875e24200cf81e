#include "lierc/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace lierc {

namespace {
constexpr double kRelativePruneTol = 1e-14;
}

int multi_index_degree(const MultiIndex& alpha) {
    int d = 0;
    for (int a : alpha) d += a;
    return d;
}

bool grevlex_less(const MultiIndex& a, const MultiIndex& b) {
    const int da = multi_index_degree(a);
    const int db = multi_index_degree(b);
    if (da != db) return da < db;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = n; i-- > 0;) {
        const int ai = i < a.size() ? a[i] : 0;
        const int bi = i < b.size() ? b[i] : 0;
        if (ai != bi) return ai > bi;
    }
    return false;
}

std::vector<MultiIndex> monomials_up_to(int nvars, int max_degree) {
    std::vector<MultiIndex> out;
    MultiIndex cur(nvars, 0);
    // Enumerate by total degree, recursively distributing the remainder.
    for (int d = 0; d <= max_degree; ++d) {
        std::vector<MultiIndex> level;
        MultiIndex alpha(nvars, 0);
        auto rec = [&](auto&& self, int pos, int rem) -> void {
            if (pos == nvars - 1) {
                alpha[pos] = rem;
                level.push_back(alpha);
                return;
            }
            for (int k = rem; k >= 0; --k) {
                alpha[pos] = k;
                self(self, pos + 1, rem - k);
            }
            alpha[pos] = 0;
        };
        if (nvars == 0) {
            if (d == 0) out.push_back({});
            continue;
        }
        rec(rec, 0, d);
        std::sort(level.begin(), level.end(), grevlex_less);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

Polynomial Polynomial::constant(std::vector<std::string> vars, double value) {
    Polynomial p(std::move(vars));
    p.add_term(MultiIndex(p.nvars(), 0), value);
    p.normalize();
    return p;
}

Polynomial Polynomial::variable(std::vector<std::string> vars, const std::string& name) {
    Polynomial p(std::move(vars));
    const int idx = p.var_index(name);
    if (idx < 0) throw PolynomialError("unknown variable '" + name + "'");
    MultiIndex alpha(p.nvars(), 0);
    alpha[idx] = 1;
    p.add_term(alpha, 1.0);
    return p;
}

Polynomial Polynomial::monomial(std::vector<std::string> vars, MultiIndex alpha, double coef) {
    Polynomial p(std::move(vars));
    if (static_cast<int>(alpha.size()) != p.nvars())
        throw PolynomialError("multi-index length does not match variable count");
    for (int a : alpha)
        if (a < 0) throw PolynomialError("negative exponent");
    p.add_term(alpha, coef);
    p.normalize();
    return p;
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto& [alpha, c] : terms_) d = std::max(d, multi_index_degree(alpha));
    return d;
}

double Polynomial::coeff(const MultiIndex& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::constant_term() const { return coeff(MultiIndex(nvars(), 0)); }

int Polynomial::var_index(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) return static_cast<int>(i);
    return -1;
}

void Polynomial::add_term(const MultiIndex& alpha, double coef) {
    auto [it, inserted] = terms_.emplace(alpha, coef);
    if (!inserted) it->second += coef;
}

void Polynomial::normalize() {
    double maxc = 0.0;
    for (const auto& [alpha, c] : terms_) maxc = std::max(maxc, std::abs(c));
    const double tol = kRelativePruneTol * maxc;
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) <= tol || it->second == 0.0)
            it = terms_.erase(it);
        else
            ++it;
    }
}

void Polynomial::check_same_vars(const Polynomial& rhs) const {
    if (vars_ != rhs.vars_) throw PolynomialError("variable lists differ");
}

Polynomial Polynomial::operator-() const {
    Polynomial out(vars_);
    for (const auto& [alpha, c] : terms_) out.terms_.emplace(alpha, -c);
    return out;
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
    Polynomial out = *this;
    out += rhs;
    return out;
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const {
    Polynomial out = *this;
    out -= rhs;
    return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
    if (vars_.empty() && terms_.empty()) vars_ = rhs.vars_;
    check_same_vars(rhs);
    for (const auto& [alpha, c] : rhs.terms_) add_term(alpha, c);
    normalize();
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
    if (vars_.empty() && terms_.empty()) vars_ = rhs.vars_;
    check_same_vars(rhs);
    for (const auto& [alpha, c] : rhs.terms_) add_term(alpha, -c);
    normalize();
    return *this;
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
    check_same_vars(rhs);
    Polynomial out(vars_);
    MultiIndex gamma(nvars(), 0);
    for (const auto& [a, ca] : terms_) {
        for (const auto& [b, cb] : rhs.terms_) {
            for (int i = 0; i < nvars(); ++i) gamma[i] = a[i] + b[i];
            out.add_term(gamma, ca * cb);
        }
    }
    out.normalize();
    return out;
}

Polynomial Polynomial::operator*(double s) const {
    Polynomial out(vars_);
    for (const auto& [alpha, c] : terms_) out.terms_.emplace(alpha, c * s);
    out.normalize();
    return out;
}

Polynomial Polynomial::operator/(double s) const {
    if (s == 0.0) throw PolynomialError("division by zero");
    return *this * (1.0 / s);
}

Polynomial Polynomial::pow(int k) const {
    if (k < 0) throw PolynomialError("negative power");
    Polynomial out = Polynomial::constant(vars_, 1.0);
    Polynomial base = *this;
    while (k > 0) {
        if (k & 1) out = out * base;
        base = (k >>= 1) ? base * base : base;
    }
    return out;
}

bool Polynomial::operator==(const Polynomial& rhs) const {
    return vars_ == rhs.vars_ && terms_ == rhs.terms_;
}

Polynomial Polynomial::differentiate(const std::string& var) const {
    const int idx = var_index(var);
    if (idx < 0) throw PolynomialError("unknown variable '" + var + "'");
    return differentiate(idx);
}

Polynomial Polynomial::differentiate(int var) const {
    if (var < 0 || var >= nvars()) throw PolynomialError("variable index out of range");
    Polynomial out(vars_);
    for (const auto& [alpha, c] : terms_) {
        if (alpha[var] == 0) continue;
        MultiIndex beta = alpha;
        beta[var] -= 1;
        out.add_term(beta, c * alpha[var]);
    }
    out.normalize();
    return out;
}

namespace {

// Horner evaluation over a lexicographically sorted term span, recursing on
// the variable index.
double horner_eval(const std::vector<std::pair<const MultiIndex*, double>>& terms, std::size_t lo,
                   std::size_t hi, int var, int nvars, std::span<const double> point) {
    if (lo >= hi) return 0.0;
    if (var == nvars) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += terms[i].second;
        return s;
    }
    // Terms are sorted descending by exponent of `var` within [lo, hi).
    double acc = 0.0;
    int cur_exp = (*terms[lo].first)[var];
    std::size_t i = lo;
    int pending = 0;  // power of point[var] still to apply to acc
    while (i < hi) {
        std::size_t j = i;
        while (j < hi && (*terms[j].first)[var] == cur_exp) ++j;
        for (; pending > 0; --pending) acc *= point[var];
        acc += horner_eval(terms, i, j, var + 1, nvars, point);
        const int next_exp = (j < hi) ? (*terms[j].first)[var] : 0;
        pending = cur_exp - next_exp;
        cur_exp = next_exp;
        i = j;
    }
    for (; pending > 0; --pending) acc *= point[var];
    return acc;
}

}  // namespace

double Polynomial::eval(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != nvars())
        throw PolynomialError("evaluation point has wrong dimension");
    std::vector<std::pair<const MultiIndex*, double>> sorted;
    sorted.reserve(terms_.size());
    for (const auto& [alpha, c] : terms_) sorted.emplace_back(&alpha, c);
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return std::lexicographical_compare(b.first->begin(), b.first->end(), a.first->begin(),
                                            a.first->end());
    });
    return horner_eval(sorted, 0, sorted.size(), 0, nvars(), point);
}

Polynomial Polynomial::with_vars(const std::vector<std::string>& new_vars) const {
    Polynomial out(new_vars);
    std::vector<int> where(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        where[i] = out.var_index(vars_[i]);
        if (where[i] < 0) throw PolynomialError("variable '" + vars_[i] + "' missing from target list");
    }
    for (const auto& [alpha, c] : terms_) {
        MultiIndex beta(out.nvars(), 0);
        for (std::size_t i = 0; i < vars_.size(); ++i) beta[where[i]] = alpha[i];
        out.add_term(beta, c);
    }
    out.normalize();
    return out;
}

Polynomial Polynomial::partial_eval(int var, double value) const {
    if (var < 0 || var >= nvars()) throw PolynomialError("variable index out of range");
    Polynomial out(vars_);
    for (const auto& [alpha, c] : terms_) {
        MultiIndex beta = alpha;
        const int k = beta[var];
        beta[var] = 0;
        out.add_term(beta, c * std::pow(value, k));
    }
    out.normalize();
    return out;
}

Polynomial Polynomial::scale_var(int var, double factor) const {
    if (var < 0 || var >= nvars()) throw PolynomialError("variable index out of range");
    Polynomial out(vars_);
    for (const auto& [alpha, c] : terms_) out.add_term(alpha, c * std::pow(factor, alpha[var]));
    out.normalize();
    return out;
}

double Polynomial::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [alpha, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

std::string Polynomial::print() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    // Highest-degree terms first for readability.
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [alpha, c] = *it;
        double mag = std::abs(c);
        if (first) {
            if (c < 0) os << "-";
            first = false;
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        const bool has_vars = multi_index_degree(alpha) > 0;
        if (!has_vars || mag != 1.0) {
            os << mag;
            if (has_vars) os << "*";
        }
        bool first_var = true;
        for (int i = 0; i < nvars(); ++i) {
            if (alpha[i] == 0) continue;
            if (!first_var) os << "*";
            first_var = false;
            os << vars_[i];
            if (alpha[i] > 1) os << "^" << alpha[i];
        }
    }
    return os.str();
}

// --- parser -----------------------------------------------------------------

namespace {

struct Parser {
    const std::string& text;
    const std::vector<std::string>& vars;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool peek_is(char ch) {
        skip_ws();
        return pos < text.size() && text[pos] == ch;
    }

    bool consume(char ch) {
        if (peek_is(ch)) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) { throw ParseError(what, pos); }

    Polynomial parse_expr() {
        Polynomial acc = parse_term();
        while (true) {
            skip_ws();
            if (consume('+'))
                acc += parse_term();
            else if (consume('-'))
                acc -= parse_term();
            else
                break;
        }
        return acc;
    }

    Polynomial parse_term() {
        Polynomial acc = parse_factor();
        while (true) {
            skip_ws();
            if (consume('*')) {
                acc = acc * parse_factor();
            } else if (consume('/')) {
                Polynomial d = parse_factor();
                if (d.degree() != 0) fail("divisor must be a numeric constant");
                const double dv = d.constant_term();
                if (dv == 0.0) fail("division by zero");
                acc = acc / dv;
            } else if (pos < text.size() &&
                       (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '(' ||
                        text[pos] == '_')) {
                // implicit multiplication: `3x1`, `x1 x2`, `2(x1+1)`
                acc = acc * parse_factor();
            } else {
                break;
            }
        }
        return acc;
    }

    Polynomial parse_factor() {
        skip_ws();
        int sign = 1;
        while (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
            if (text[pos] == '-') sign = -sign;
            ++pos;
            skip_ws();
        }
        Polynomial base = parse_atom();
        skip_ws();
        if (consume('^')) {
            skip_ws();
            std::size_t start = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            if (pos == start) fail("expected nonnegative integer exponent");
            base = base.pow(std::stoi(text.substr(start, pos - start)));
        }
        return sign < 0 ? -base : base;
    }

    Polynomial parse_atom() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of input");
        const char ch = text[pos];
        if (ch == '(') {
            ++pos;
            Polynomial inner = parse_expr();
            skip_ws();
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') return parse_name();
        fail(std::string("unexpected character '") + ch + "'");
    }

    Polynomial parse_number() {
        const std::size_t start = pos;
        while (pos < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t epos = pos + 1;
            if (epos < text.size() && (text[epos] == '+' || text[epos] == '-')) ++epos;
            if (epos < text.size() && std::isdigit(static_cast<unsigned char>(text[epos]))) {
                pos = epos;
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            }
        }
        try {
            return Polynomial::constant(vars, std::stod(text.substr(start, pos - start)));
        } catch (const std::exception&) {
            pos = start;
            fail("malformed number");
        }
    }

    Polynomial parse_name() {
        const std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        const std::string name = text.substr(start, pos - start);
        for (const auto& v : vars)
            if (v == name) return Polynomial::variable(vars, name);
        pos = start;
        fail("unknown variable '" + name + "'");
    }
};

}  // namespace

Polynomial Polynomial::parse(const std::string& text, const std::vector<std::string>& vars) {
    Parser p{text, vars};
    p.skip_ws();
    if (p.pos >= text.size()) return Polynomial::constant(vars, 0.0) - Polynomial::constant(vars, 0.0);
    Polynomial result = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    if (result.vars().empty()) result.vars_ = vars;
    return result;
}

std::vector<double> PolynomialVector::eval(std::span<const double> point) const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& p : entries) out.push_back(p.eval(point));
    return out;
}

LieTerms lie_terms(const Polynomial& v, const PolynomialVector& f0,
                   const std::vector<PolynomialVector>& channels) {
    const auto& vars = v.vars();
    if (vars.empty()) throw PolynomialError("v has no variables");
    const int n = static_cast<int>(vars.size()) - 1;  // first variable is time
    if (f0.size() != n) throw PolynomialError("f0 dimension does not match state dimension");
    for (const auto& ch : channels)
        if (ch.size() != n) throw PolynomialError("channel dimension does not match state dimension");

    LieTerms out;
    out.base = v.differentiate(0);
    std::vector<Polynomial> grad;
    grad.reserve(n);
    for (int i = 0; i < n; ++i) grad.push_back(v.differentiate(i + 1));
    for (int i = 0; i < n; ++i) out.base += f0[i].with_vars(vars) * grad[i];

    for (const auto& ch : channels) {
        Polynomial acc(vars);
        for (int i = 0; i < n; ++i) acc += ch[i].with_vars(vars) * grad[i];
        out.per_channel.push_back(std::move(acc));
    }
    return out;
}

}  // namespace lierc
