#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "fracfem/errors.hpp"
#include "fracfem/special.hpp"

namespace fracfem {

/// One product term c * x^xe * (1-x)^ome * chi_[lo,hi].
/// Exponents must exceed -1 so that every term is integrable.
struct ExprTerm {
    double coeff = 0.0;
    double xe = 0.0;
    double ome = 0.0;
    double lo = 0.0;
    double hi = 1.0;

    bool has_indicator() const { return lo != 0.0 || hi != 1.0; }
};

/// Closed algebraic source/potential expression: a sum of product terms.
/// Each factor carries its endpoint exponents so quadrature can absorb the
/// singular parts into Gauss-Jacobi weights.
class FunctionExpr {
public:
    FunctionExpr() = default;
    explicit FunctionExpr(std::vector<ExprTerm> terms) : terms_(std::move(terms)) { validate(); }

    static FunctionExpr constant(double c) { return FunctionExpr({ExprTerm{c, 0, 0, 0, 1}}); }
    static FunctionExpr power(double coeff, double exponent) {
        return FunctionExpr({ExprTerm{coeff, exponent, 0, 0, 1}});
    }
    static FunctionExpr one_minus_x_power(double coeff, double exponent) {
        return FunctionExpr({ExprTerm{coeff, 0, exponent, 0, 1}});
    }
    static FunctionExpr step(double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("step: need lo < hi");
        return FunctionExpr({ExprTerm{1.0, 0, 0, lo, hi}});
    }

    const std::vector<ExprTerm>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    double operator()(double x) const {
        double v = 0.0;
        for (const auto& t : terms_) {
            if (x < t.lo || x > t.hi) continue;
            double f = t.coeff;
            if (t.xe != 0.0) f *= std::pow(x, t.xe);
            if (t.ome != 0.0) f *= std::pow(1.0 - x, t.ome);
            v += f;
        }
        return v;
    }

    /// Indicator bounds falling strictly inside (0,1); integration panels are
    /// split here so discontinuities land on panel boundaries.
    std::vector<double> breakpoints() const {
        std::vector<double> bp;
        for (const auto& t : terms_) {
            if (t.lo > 0.0 && t.lo < 1.0) bp.push_back(t.lo);
            if (t.hi > 0.0 && t.hi < 1.0) bp.push_back(t.hi);
        }
        std::sort(bp.begin(), bp.end());
        bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
        return bp;
    }

    FunctionExpr operator+(const FunctionExpr& other) const {
        std::vector<ExprTerm> t = terms_;
        t.insert(t.end(), other.terms_.begin(), other.terms_.end());
        return FunctionExpr(std::move(t));
    }

    FunctionExpr operator-() const {
        std::vector<ExprTerm> t = terms_;
        for (auto& term : t) term.coeff = -term.coeff;
        return FunctionExpr(std::move(t));
    }

    FunctionExpr operator-(const FunctionExpr& other) const { return *this + (-other); }

    FunctionExpr operator*(const FunctionExpr& other) const {
        std::vector<ExprTerm> t;
        for (const auto& a : terms_)
            for (const auto& b : other.terms_) {
                ExprTerm p;
                p.coeff = a.coeff * b.coeff;
                p.xe = a.xe + b.xe;
                p.ome = a.ome + b.ome;
                p.lo = std::max(a.lo, b.lo);
                p.hi = std::min(a.hi, b.hi);
                if (p.lo >= p.hi || p.coeff == 0.0) continue; // empty support
                t.push_back(p);
            }
        return FunctionExpr(std::move(t));
    }

    /// Canonical form: round-trips through parse_function_expr.
    std::string str() const {
        if (terms_.empty()) return "0";
        std::string out;
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            const ExprTerm& t = terms_[i];
            double c = t.coeff;
            if (i == 0) {
                if (c < 0.0) { out += "-"; c = -c; }
            } else {
                out += c < 0.0 ? " - " : " + ";
                if (c < 0.0) c = -c;
            }
            std::string factors;
            if (t.xe != 0.0) {
                factors += t.xe == 1.0 ? "x" : "x^" + num(t.xe);
            }
            if (t.ome != 0.0) {
                factors += factors.empty() ? "" : "*";
                factors += t.ome == 1.0 ? "(1-x)" : "(1-x)^" + num(t.ome);
            }
            if (t.has_indicator()) {
                factors += factors.empty() ? "" : "*";
                factors += "step(" + num(t.lo) + "," + num(t.hi) + ")";
            }
            if (factors.empty()) {
                out += num(c);
            } else {
                if (c != 1.0) out += num(c) + "*";
                out += factors;
            }
        }
        return out;
    }

private:
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    void validate() const {
        for (const auto& t : terms_) {
            if (t.xe <= -1.0 || t.ome <= -1.0)
                throw unsupported_expression_error("FunctionExpr: exponent <= -1");
            if (!(t.lo >= 0.0 && t.hi <= 1.0 && t.lo < t.hi))
                throw unsupported_expression_error("FunctionExpr: bad indicator bounds");
        }
    }

    std::vector<ExprTerm> terms_;
};

// ---------------------------------------------------------------------------
// Parser for the expression mini-grammar:
//   expr   := ['-'] term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := number | 'x' ['^' number] | '(1-x)' ['^' number]
//           | 'step' '(' number ',' number ')'
//   number := decimal, optionally a fraction p/q
// ---------------------------------------------------------------------------

namespace detail {

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    FunctionExpr parse() {
        FunctionExpr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing input");
        return e;
    }

private:
    FunctionExpr parse_expr() {
        skip_ws();
        bool neg = consume('-');
        FunctionExpr e = parse_term();
        if (neg) e = -e;
        for (;;) {
            skip_ws();
            if (consume('+')) e = e + parse_term();
            else if (consume('-')) e = e - parse_term();
            else break;
        }
        return e;
    }

    FunctionExpr parse_term() {
        FunctionExpr e = parse_factor();
        for (;;) {
            skip_ws();
            if (!consume('*')) break;
            e = e * parse_factor();
        }
        return e;
    }

    FunctionExpr parse_factor() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        if (match("(1-x)")) {
            double e = consume('^') ? parse_number() : 1.0;
            if (e <= -1.0) fail("exponent <= -1");
            return FunctionExpr::one_minus_x_power(1.0, e);
        }
        if (match("step(")) {
            const double a = parse_number();
            skip_ws();
            if (!consume(',')) fail("expected ',' in step()");
            const double b = parse_number();
            skip_ws();
            if (!consume(')')) fail("expected ')' in step()");
            if (!(a >= 0.0 && b <= 1.0 && a < b)) fail("step bounds must satisfy 0 <= a < b <= 1");
            return FunctionExpr::step(a, b);
        }
        if (text_[pos_] == 'x') {
            ++pos_;
            double e = consume('^') ? parse_number() : 1.0;
            if (e <= -1.0) fail("exponent <= -1");
            return FunctionExpr::power(1.0, e);
        }
        return FunctionExpr::constant(parse_number());
    }

    double parse_number() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
        bool digits = false;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '.')) {
            digits = digits || std::isdigit(static_cast<unsigned char>(text_[pos_]));
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;
            }
        }
        if (!digits) fail("expected a number");
        double v = std::strtod(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr);
        if (consume('/')) { // simple fraction p/q
            std::size_t dstart = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ == dstart) fail("expected denominator after '/'");
            const double den =
                std::strtod(std::string(text_.substr(dstart, pos_ - dstart)).c_str(), nullptr);
            if (den == 0.0) fail("zero denominator");
            v /= den;
        }
        return v;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool consume(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    bool match(std::string_view word) {
        if (text_.substr(pos_, word.size()) == word) { pos_ += word.size(); return true; }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw unsupported_expression_error("expression parse error at position " +
                                           std::to_string(pos_) + ": " + what);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline FunctionExpr parse_function_expr(std::string_view text) {
    return detail::ExprParser(text).parse();
}

// ---------------------------------------------------------------------------
// Problem specification
// ---------------------------------------------------------------------------

/// One BVP/FSLP instance: -D_0^alpha u + q u = f (or = lambda u) on (0,1)
/// with u(0) = u(1) = 0, solved through the transformed variable w with
/// reconstruction exponent mu. Valid choices: mu >= alpha, or mu = alpha - 1.
struct ProblemSpec {
    double alpha;
    double mu;
    bool mu_is_alpha_minus_1 = false;
    FunctionExpr q;
    FunctionExpr f;
    double c0 = 0.0; // Gamma(mu+1)/Gamma(1+mu-alpha); exactly 0 when mu = alpha-1

    ProblemSpec(double alpha_, double mu_, FunctionExpr q_, FunctionExpr f_)
        : alpha(alpha_), mu(mu_), q(std::move(q_)), f(std::move(f_)) {
        if (!(alpha > 1.0 && alpha < 2.0))
            throw std::invalid_argument("ProblemSpec: alpha must lie in (1,2)");
        mu_is_alpha_minus_1 = (mu == alpha - 1.0);
        if (!mu_is_alpha_minus_1 && !(mu >= alpha))
            throw std::invalid_argument("ProblemSpec: need mu >= alpha or mu = alpha-1");
        c0 = mu_is_alpha_minus_1 ? 0.0 : gamma_fn(mu + 1.0) / gamma_fn(1.0 + mu - alpha);
    }

    static ProblemSpec with_mu_alpha_minus_1(double alpha_, FunctionExpr q_, FunctionExpr f_) {
        return ProblemSpec(alpha_, alpha_ - 1.0, std::move(q_), std::move(f_));
    }

    /// p(x) = c0 x^{mu-alpha} - q(x) x^mu, the moment weight of the rank-one term.
    FunctionExpr p_expr() const {
        FunctionExpr p = q.is_zero() ? FunctionExpr()
                                     : -(q * FunctionExpr::power(1.0, mu));
        if (c0 != 0.0) p = FunctionExpr::power(c0, mu - alpha) + p;
        return p;
    }
};

} // namespace fracfem
