#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracfem/parallel.hpp"
#include "fracfem/problem.hpp"
#include "fracfem/reference.hpp"
#include "fracfem/solver.hpp"

namespace fracfem {

enum class MeshFamily { pow2, pow2plus1, ten_pow2 };

inline int family_elements(MeshFamily f, int m) {
    switch (f) {
        case MeshFamily::pow2: return 1 << m;
        case MeshFamily::pow2plus1: return (1 << m) + 1;
        case MeshFamily::ten_pow2: return 10 * (1 << m);
    }
    return 0;
}

inline const char* family_name(MeshFamily f) {
    switch (f) {
        case MeshFamily::pow2: return "pow2";
        case MeshFamily::pow2plus1: return "pow2plus1";
        case MeshFamily::ten_pow2: return "ten_pow2";
    }
    return "?";
}

/// Per-level errors and empirical rates of one (alpha, mu, degree) run,
/// with the theoretical rate where the theory defines one.
struct ConvergenceReport {
    std::string example_id;
    double alpha = 0.0;
    double mu = 0.0;
    int degree = 1;
    std::vector<int> levels;
    std::vector<double> hs;
    std::vector<double> errors;
    std::vector<double> rates; // between consecutive levels
    double theoretical_rate = 0.0;
    bool theory_defined = false;
    std::string oracle_note;

    double final_rate() const {
        for (auto it = rates.rbegin(); it != rates.rend(); ++it)
            if (std::isfinite(*it)) return *it;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

/// Theoretical L2 rate printed in parentheses next to the empirical one.
/// k = degree-1; the smooth-data estimate gives alpha+k-1+beta with beta up
/// to 1/2, the q=0, mu=alpha-1 regime improves to alpha+k, the indicator
/// source drops the P1/P2 rates to alpha-1+beta and alpha-1/2+beta. Below
/// alpha = 3/2 (and for P2 with mu < alpha+1/2) the theory is silent.
inline std::optional<double> theoretical_rate(const ProblemSpec& prob, int degree,
                                              bool indicator_source) {
    const int k = degree - 1;
    if (prob.mu_is_alpha_minus_1 && prob.q.is_zero()) return prob.alpha + k;
    if (prob.alpha <= 1.5) return std::nullopt;
    if (indicator_source) return prob.alpha + (degree == 1 ? -0.5 : 0.0);
    if (degree == 2 && !prob.mu_is_alpha_minus_1 && prob.mu < prob.alpha + 0.5)
        return std::nullopt;
    return prob.alpha + k - 0.5;
}

namespace detail {

inline std::vector<double> values_on_grid(const std::function<double(double)>& fn,
                                          const ErrorGrid& grid) {
    std::vector<double> v(grid.pts.size());
    parallel_for(0, static_cast<int>(grid.pts.size()), [&](int i) { v[i] = fn(grid.pts[i]); });
    return v;
}

inline bool nodes_subset(const std::vector<double>& coarse, const std::vector<double>& fine) {
    for (double x : coarse)
        if (!std::binary_search(fine.begin(), fine.end(), x)) return false;
    return true;
}

} // namespace detail

/// Error oracle for one (f, q, alpha): the closed-form solution when q = 0,
/// otherwise a fine-mesh P2 reference solve. Reference values are cached on
/// the reference-mesh grid and reused whenever the coarse mesh is nested.
class SourceErrorOracle {
public:
    SourceErrorOracle(const ProblemSpec& prob, int ref_n, int ref_degree = 2, int quad_pts = 12) {
        f_breaks_ = prob.f.breakpoints();
        if (prob.q.is_zero()) {
            exact_ = std::make_unique<ExactSolution>(prob.f, prob.alpha);
            note_ = "closed-form solution (q = 0)";
        } else {
            // the reconstruction exponent of the reference solve is immaterial
            // for the reference values of u; keep the problem's own mu
            ref_ = std::make_unique<SolutionField>(reference_solution(prob, ref_n, ref_degree,
                                                                      quad_pts));
            note_ = "reference: P2 solve at h = 1/" + std::to_string(ref_n);
        }
    }

    const std::string& note() const { return note_; }
    const ExactSolution* exact() const { return exact_.get(); }
    const SolutionField* reference() const { return ref_.get(); }

    double error(const SolutionField& coarse) const {
        std::vector<double> bounds = coarse.space.mesh().nodes();
        bounds.insert(bounds.end(), f_breaks_.begin(), f_breaks_.end());
        if (exact_) {
            const auto& eb = exact_->breakpoints();
            bounds.insert(bounds.end(), eb.begin(), eb.end());
            const ErrorGrid grid = build_error_grid(std::move(bounds));
            const auto uh = detail::values_on_grid([&](double x) { return coarse.u(x); }, grid);
            const auto ue = detail::values_on_grid([&](double x) { return (*exact_)(x); }, grid);
            return l2_norm_on_grid(grid, uh, ue);
        }
        const std::vector<double>& ref_nodes = ref_->space.mesh().nodes();
        if (detail::nodes_subset(coarse.space.mesh().nodes(), ref_nodes) &&
            detail::nodes_subset(f_breaks_, ref_nodes)) {
            ensure_ref_grid();
            const auto uh = detail::values_on_grid([&](double x) { return coarse.u(x); }, *grid_);
            return l2_norm_on_grid(*grid_, uh, ref_values_);
        }
        bounds.insert(bounds.end(), ref_nodes.begin(), ref_nodes.end());
        const ErrorGrid grid = build_error_grid(std::move(bounds));
        const auto uh = detail::values_on_grid([&](double x) { return coarse.u(x); }, grid);
        const auto ur = detail::values_on_grid([&](double x) { return ref_->u(x); }, grid);
        return l2_norm_on_grid(grid, uh, ur);
    }

private:
    void ensure_ref_grid() const {
        if (grid_) return;
        std::vector<double> bounds = ref_->space.mesh().nodes();
        grid_ = std::make_unique<ErrorGrid>(build_error_grid(std::move(bounds)));
        ref_values_ = detail::values_on_grid([&](double x) { return ref_->u(x); }, *grid_);
    }

    std::unique_ptr<ExactSolution> exact_;
    std::unique_ptr<SolutionField> ref_;
    std::vector<double> f_breaks_;
    std::string note_;
    mutable std::unique_ptr<ErrorGrid> grid_;
    mutable std::vector<double> ref_values_;
};

/// One row of a source-problem table: solve every level, measure L2 errors
/// of the reconstructed u_h against the oracle, report empirical rates.
inline ConvergenceReport source_convergence_study(const ProblemSpec& prob, int degree,
                                                  const std::vector<int>& levels, MeshFamily family,
                                                  const SourceErrorOracle& oracle,
                                                  const std::string& example_id,
                                                  int quad_pts = 12) {
    ConvergenceReport rep;
    rep.example_id = example_id;
    rep.alpha = prob.alpha;
    rep.mu = prob.mu;
    rep.degree = degree;
    rep.levels = levels;
    rep.oracle_note = oracle.note();
    const bool indicator = !prob.f.breakpoints().empty() ||
                           std::any_of(prob.f.terms().begin(), prob.f.terms().end(),
                                       [](const ExprTerm& t) { return t.has_indicator(); });
    if (auto tr = theoretical_rate(prob, degree, indicator)) {
        rep.theoretical_rate = *tr;
        rep.theory_defined = true;
    }
    for (int m : levels) {
        const int n = family_elements(family, m);
        const FESpace space(make_uniform_mesh(n), degree);
        const SolutionField sol = solve_source(prob, space, quad_pts);
        rep.hs.push_back(1.0 / n);
        rep.errors.push_back(oracle.error(sol));
    }
    rep.rates = empirical_rates(rep.errors, rep.hs);
    return rep;
}

// ---------------------------------------------------------------------------
// Eigenvalue study
// ---------------------------------------------------------------------------

struct EigenStudyResult {
    double alpha = 0.0, mu = 0.0;
    int degree = 1;
    int count = 0;
    std::vector<int> levels;
    std::vector<double> hs;
    bool all_real = true;
    // [eigen index][level]
    std::vector<std::vector<double>> lambda_errors;
    std::vector<std::vector<double>> lambda_rates;
    // [function index][level], first min(5, count) eigenfunctions
    std::vector<std::vector<double>> fun_errors;
    std::vector<std::vector<double>> fun_rates;
    std::vector<double> lambda_ref;
    std::string oracle_note;
};

/// Reference eigenpairs (shared across the P1 and P2 rows of one table).
struct EigenReference {
    std::vector<EigenPair> pairs;
    ErrorGrid grid;
    std::vector<std::vector<double>> u_values; // [function index][grid point]
    std::string note;

    EigenReference(const ProblemSpec& prob, int ref_n, int count, int fun_count, int quad_pts = 12) {
        const FESpace space(make_uniform_mesh(ref_n), 2);
        pairs = solve_fslp(prob, space, count, quad_pts);
        note = "reference: P2 shift-invert at h = 1/" + std::to_string(ref_n);
        grid = build_error_grid(space.mesh().nodes());
        for (int k = 0; k < fun_count && k < static_cast<int>(pairs.size()); ++k) {
            if (!pairs[k].field) { u_values.emplace_back(); continue; }
            const SolutionField& f = *pairs[k].field;
            u_values.push_back(detail::values_on_grid([&](double x) { return f.u(x); }, grid));
        }
    }
};

inline EigenStudyResult eigen_convergence_study(const ProblemSpec& prob, int degree,
                                                const std::vector<int>& levels, MeshFamily family,
                                                const EigenReference& ref, int count,
                                                int quad_pts = 12) {
    EigenStudyResult res;
    res.alpha = prob.alpha;
    res.mu = prob.mu;
    res.degree = degree;
    res.count = count;
    res.levels = levels;
    res.oracle_note = ref.note;
    const int fun_count = static_cast<int>(ref.u_values.size());
    res.lambda_errors.assign(count, {});
    res.fun_errors.assign(fun_count, {});
    for (int k = 0; k < count; ++k) {
        res.lambda_ref.push_back(ref.pairs[k].lambda.real());
        if (!ref.pairs[k].is_real) res.all_real = false;
    }

    for (int m : levels) {
        const int n = family_elements(family, m);
        res.hs.push_back(1.0 / n);
        const FESpace space(make_uniform_mesh(n), degree);
        const std::vector<EigenPair> pairs = solve_fslp(prob, space, count, quad_pts);
        for (int k = 0; k < count; ++k) {
            if (!pairs[k].is_real) res.all_real = false;
            res.lambda_errors[k].push_back(
                std::abs(ref.pairs[k].lambda.real() - pairs[k].lambda.real()));
        }
        for (int k = 0; k < fun_count; ++k) {
            if (!pairs[k].field || ref.u_values[k].empty()) {
                res.fun_errors[k].push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            const SolutionField& f = *pairs[k].field;
            auto uh = detail::values_on_grid([&](double x) { return f.u(x); }, ref.grid);
            // sign-align with the reference by the L2 inner product
            double ip = 0.0;
            for (std::size_t i = 0; i < ref.grid.pts.size(); ++i)
                ip += ref.grid.wts[i] * uh[i] * ref.u_values[k][i];
            if (ip < 0.0)
                for (double& v : uh) v = -v;
            res.fun_errors[k].push_back(l2_norm_on_grid(ref.grid, uh, ref.u_values[k]));
        }
    }
    for (int k = 0; k < count; ++k)
        res.lambda_rates.push_back(empirical_rates(res.lambda_errors[k], res.hs));
    for (int k = 0; k < fun_count; ++k)
        res.fun_rates.push_back(empirical_rates(res.fun_errors[k], res.hs));
    return res;
}

// ---------------------------------------------------------------------------
// Condition-number study (P1, Table-9 layout)
// ---------------------------------------------------------------------------

struct ConditionStudyRow {
    int m = 0;
    double kappa_plain = 0.0;
    double kappa_precond = 0.0;
};

inline std::vector<ConditionStudyRow> condition_study(const ProblemSpec& prob,
                                                      const std::vector<int>& levels,
                                                      MeshFamily family = MeshFamily::pow2,
                                                      int degree = 1, int quad_pts = 12) {
    std::vector<ConditionStudyRow> rows;
    for (int m : levels) {
        const int n = family_elements(family, m);
        const FESpace space(make_uniform_mesh(n), degree);
        const ConditionResult c = condition_numbers(prob, space, quad_pts);
        rows.push_back({m, c.kappa_plain, c.kappa_precond});
    }
    return rows;
}

} // namespace fracfem
