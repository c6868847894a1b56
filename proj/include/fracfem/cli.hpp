#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fracfem/problem.hpp"
#include "fracfem/reference.hpp"
#include "fracfem/solver.hpp"
#include "fracfem/study.hpp"
#include "fracfem/tables.hpp"

namespace fracfem {

/// Thrown when --help is requested; carries the help text.
struct help_requested {
    std::string text;
};

/// Validated configuration of one CLI invocation.
struct RunConfig {
    std::string subcommand; // solve | converge | eigen | cond
    double alpha = 1.75;
    std::string mu_text; // number or the token "alpha-1"; empty = subcommand default
    int degree = 1;
    std::vector<int> m_range;
    std::string example; // a | b1 | b2 | c, or empty when --f is given
    std::string f_text;
    std::string q_text = "0";
    MeshFamily family = MeshFamily::pow2;
    std::string format = "csv"; // csv | md
    std::string output = "-";
    int ref_level = -1; // reference-level override (family exponent m)
    int quad_points = 12;
    int eigen_count = 8;
    bool seed_tables = false;

    double mu_value() const {
        if (mu_text == "alpha-1") return alpha - 1.0;
        return std::stod(mu_text);
    }

    FunctionExpr f_expr() const {
        if (!f_text.empty()) return parse_function_expr(f_text);
        if (example == "a") return parse_function_expr("x*(1-x)");
        if (example == "b1") return parse_function_expr("1");
        if (example == "b2") return parse_function_expr("(1-x)^3/5");
        if (example == "c") return parse_function_expr("step(0,0.5)");
        throw std::invalid_argument("no source term: give --example or --f");
    }

    FunctionExpr q_expr() const {
        if (q_text == "0" || q_text.empty()) return FunctionExpr();
        return parse_function_expr(q_text);
    }

    ProblemSpec problem() const {
        const double mu = mu_value();
        return ProblemSpec(alpha, mu, q_expr(), f_expr());
    }
};

namespace detail {

inline std::vector<int> parse_m_range(const std::string& text) {
    const auto dots = text.find("..");
    std::vector<int> out;
    if (dots == std::string::npos) {
        out.push_back(std::stoi(text));
    } else {
        const int lo = std::stoi(text.substr(0, dots));
        const int hi = std::stoi(text.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("--m: descending range " + text);
        for (int m = lo; m <= hi; ++m) out.push_back(m);
    }
    if (out.empty()) throw std::invalid_argument("--m: empty range");
    return out;
}

inline MeshFamily parse_family(const std::string& text) {
    if (text == "pow2") return MeshFamily::pow2;
    if (text == "pow2plus1") return MeshFamily::pow2plus1;
    if (text == "ten_pow2") return MeshFamily::ten_pow2;
    throw std::invalid_argument("--mesh: unknown family " + text);
}

} // namespace detail

/// Parse argv into a validated RunConfig. Throws CLI::ParseError for flag
/// errors and std::invalid_argument for domain violations; both are usage
/// errors (exit code 2).
inline RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig cfg;
    std::string m_text = "3..8";
    std::string family_text = "pow2";

    CLI::App app{"fracfem: transformed-FEM solver for Riemann-Liouville boundary value problems"};
    app.require_subcommand(0, 1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--alpha", cfg.alpha, "fractional order in (1,2)");
        sub->add_option("--mu", cfg.mu_text, "reconstruction exponent (number or 'alpha-1')");
        sub->add_option("--degree", cfg.degree, "finite element degree (1 or 2)");
        sub->add_option("--m", m_text, "level range, e.g. 3..8 or a single level");
        sub->add_option("--example", cfg.example, "built-in source: a | b1 | b2 | c");
        sub->add_option("--f", cfg.f_text, "explicit source expression");
        sub->add_option("--q", cfg.q_text, "potential expression (default 0)");
        sub->add_option("--mesh", family_text, "mesh family: pow2 | pow2plus1 | ten_pow2");
        sub->add_option("--format", cfg.format, "output format: csv | md");
        sub->add_option("--output", cfg.output, "output path, '-' for stdout");
        sub->add_option("--ref-level", cfg.ref_level, "reference level override");
        sub->add_option("--quad-points", cfg.quad_points, "points per quadrature panel");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve one instance and print nodal values");
    CLI::App* converge = app.add_subcommand("converge", "L2 convergence study of u_h");
    CLI::App* eigen = app.add_subcommand("eigen", "eigenvalue/eigenfunction convergence study");
    CLI::App* cond = app.add_subcommand("cond", "condition numbers with and without the "
                                                "Laplacian preconditioner");
    for (CLI::App* sub : {solve, converge, eigen, cond}) add_common(sub);
    eigen->add_option("--count", cfg.eigen_count, "number of eigenpairs");
    app.add_flag("--seed-tables", cfg.seed_tables,
                 "run the full built-in reproduction suite into --output dir");
    app.add_option("--output", cfg.output, "output directory for --seed-tables");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev); // CLI11 consumes reversed argv-style vectors
    } catch (const CLI::CallForHelp&) {
        throw help_requested{app.help()};
    }

    for (CLI::App* sub : {solve, converge, eigen, cond})
        if (sub->parsed()) cfg.subcommand = sub->get_name();
    if (cfg.subcommand.empty() && !cfg.seed_tables)
        throw std::invalid_argument("expected a subcommand (solve|converge|eigen|cond) or --seed-tables");

    cfg.m_range = detail::parse_m_range(m_text);
    cfg.family = detail::parse_family(family_text);
    if (cfg.mu_text.empty())
        cfg.mu_text = cfg.subcommand == "eigen" ? "3" : "4"; // table defaults

    if (!(cfg.alpha > 1.0 && cfg.alpha < 2.0))
        throw std::invalid_argument("--alpha must lie strictly inside (1,2)");
    if (cfg.degree != 1 && cfg.degree != 2) throw std::invalid_argument("--degree must be 1 or 2");
    if (cfg.format != "csv" && cfg.format != "md")
        throw std::invalid_argument("--format must be csv or md");
    if (cfg.quad_points < 2 || cfg.quad_points > 64)
        throw std::invalid_argument("--quad-points must lie in [2,64]");
    if (cfg.eigen_count < 1 || cfg.eigen_count > 16)
        throw std::invalid_argument("--count must lie in [1,16]");
    const double mu = cfg.mu_value();
    if (!(mu >= cfg.alpha || mu == cfg.alpha - 1.0))
        throw std::invalid_argument("--mu must satisfy mu >= alpha or equal alpha-1");
    return cfg;
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

namespace detail {

inline void write_with_full_precision(const Table& display, const Table& full,
                                      const std::string& format, const std::string& path) {
    emit_table(display, format, path);
    if (path != "-") emit_table(full, "csv", path + ".full.csv");
}

} // namespace detail

inline int run_solve(const RunConfig& cfg) {
    const ProblemSpec prob = cfg.problem();
    const int n = family_elements(cfg.family, cfg.m_range.front());
    const FESpace space(make_uniform_mesh(n), cfg.degree);
    std::cerr << "solving: alpha=" << cfg.alpha << " mu=" << cfg.mu_value() << " n=" << n
              << " degree=" << cfg.degree << "\n";
    const SolutionField sol = solve_source(prob, space, cfg.quad_points);

    std::optional<ExactSolution> exact;
    if (prob.q.is_zero()) exact.emplace(prob.f, prob.alpha);

    Table t, tf;
    t.title = "u_h at the mesh nodes; alpha=" + std::to_string(cfg.alpha) +
              ", mu=" + cfg.mu_text + ", n=" + std::to_string(n) +
              ", P" + std::to_string(cfg.degree);
    t.header = {"x", "w_h", "u_h"};
    if (exact) { t.header.push_back("u"); t.header.push_back("|u-u_h|"); }
    tf = t;
    for (int i = 0; i <= n; ++i) {
        const double x = space.mesh().node(i);
        const double wv = i == 0 || i == n ? 0.0 : sol.w(x);
        const double uv = sol.u(x);
        std::vector<std::string> row{format_sci3(x), format_sci3(wv), format_sci3(uv)};
        std::vector<std::string> frow{format_full(x), format_full(wv), format_full(uv)};
        if (exact) {
            const double ue = (*exact)(x);
            row.push_back(format_sci3(ue));
            row.push_back(format_sci3(std::abs(ue - uv)));
            frow.push_back(format_full(ue));
            frow.push_back(format_full(std::abs(ue - uv)));
        }
        t.rows.push_back(std::move(row));
        tf.rows.push_back(std::move(frow));
    }
    detail::write_with_full_precision(t, tf, cfg.format, cfg.output);
    return 0;
}

inline int run_converge(const RunConfig& cfg) {
    const ProblemSpec prob = cfg.problem();
    const int ref_m = cfg.ref_level > 0 ? cfg.ref_level : 12;
    const int ref_n = 1 << ref_m;
    std::cerr << "convergence study: alpha=" << cfg.alpha << " mu=" << cfg.mu_value()
              << " degree=" << cfg.degree << " mesh=" << family_name(cfg.family) << "\n";
    const SourceErrorOracle oracle(prob, ref_n, 2, cfg.quad_points);
    const ConvergenceReport rep =
        source_convergence_study(prob, cfg.degree, cfg.m_range, cfg.family, oracle,
                                 cfg.example.empty() ? "custom" : cfg.example, cfg.quad_points);

    Table t, tf;
    t.title = "L2 errors, example " + rep.example_id + ", q=" + cfg.q_text +
              ", mu=" + cfg.mu_text + ", alpha=" + std::to_string(cfg.alpha) + ", mesh " +
              family_name(cfg.family) + "; " + rep.oracle_note;
    t.header = {"alpha", "P"};
    for (int m : rep.levels) t.header.push_back("m=" + std::to_string(m));
    t.header.push_back("rate");
    tf = t;
    std::vector<std::string> row{std::to_string(cfg.alpha), "P" + std::to_string(cfg.degree)};
    std::vector<std::string> frow = row;
    for (double e : rep.errors) { row.push_back(format_sci3(e)); frow.push_back(format_full(e)); }
    row.push_back(format_rate(rep.final_rate(), rep.theory_defined, rep.theoretical_rate));
    frow.push_back(format_full(rep.final_rate()));
    t.rows.push_back(row);
    tf.rows.push_back(frow);
    detail::write_with_full_precision(t, tf, cfg.format, cfg.output);
    return 0;
}

inline int run_eigen(const RunConfig& cfg) {
    const ProblemSpec prob(cfg.alpha, cfg.mu_value(), cfg.q_expr(), FunctionExpr::constant(1.0));
    const int ref_m = cfg.ref_level > 0 ? cfg.ref_level : 7;
    const int ref_n = family_elements(MeshFamily::ten_pow2, ref_m);
    std::cerr << "eigen study: alpha=" << cfg.alpha << " mu=" << cfg.mu_value()
              << " q=" << cfg.q_text << " count=" << cfg.eigen_count << " reference n=" << ref_n
              << "\n";
    const int fun_count = std::min(5, cfg.eigen_count);
    const EigenReference ref(prob, ref_n, cfg.eigen_count, fun_count, cfg.quad_points);
    const EigenStudyResult res = eigen_convergence_study(prob, cfg.degree, cfg.m_range, cfg.family,
                                                         ref, cfg.eigen_count, cfg.quad_points);

    Table t, tf;
    t.title = "eigenvalue errors |lambda - lambda_h|, alpha=" + std::to_string(cfg.alpha) +
              ", q=" + cfg.q_text + ", mu=" + cfg.mu_text + ", P" + std::to_string(cfg.degree) +
              ", mesh " + family_name(cfg.family) + "; " + res.oracle_note +
              (res.all_real ? "; all computed eigenvalues real" : "; COMPLEX eigenvalues present");
    t.header = {"eig"};
    for (int m : res.levels) t.header.push_back("m=" + std::to_string(m));
    t.header.push_back("rate");
    tf = t;
    for (int k = 0; k < res.count; ++k) {
        std::vector<std::string> row{"lambda_" + std::to_string(k + 1)};
        std::vector<std::string> frow = row;
        for (double e : res.lambda_errors[k]) {
            row.push_back(format_sci3(e));
            frow.push_back(format_full(e));
        }
        const double rate = res.lambda_rates[k].empty() ? NAN : res.lambda_rates[k].back();
        row.push_back(format_rate(rate, false, 0.0));
        frow.push_back(format_full(rate));
        t.rows.push_back(row);
        tf.rows.push_back(frow);
    }
    for (std::size_t k = 0; k < res.fun_errors.size(); ++k) {
        std::vector<std::string> row{"u_" + std::to_string(k + 1)};
        std::vector<std::string> frow = row;
        for (double e : res.fun_errors[k]) {
            row.push_back(format_sci3(e));
            frow.push_back(format_full(e));
        }
        const double rate = res.fun_rates[k].empty() ? NAN : res.fun_rates[k].back();
        row.push_back(format_rate(rate, false, 0.0));
        frow.push_back(format_full(rate));
        t.rows.push_back(row);
        tf.rows.push_back(frow);
    }
    detail::write_with_full_precision(t, tf, cfg.format, cfg.output);
    return 0;
}

inline int run_cond(const RunConfig& cfg) {
    const ProblemSpec prob(cfg.alpha, cfg.mu_value(), cfg.q_expr(), FunctionExpr::constant(1.0));
    std::cerr << "condition study: alpha=" << cfg.alpha << " mu=" << cfg.mu_value()
              << " q=" << cfg.q_text << "\n";
    const auto rows = condition_study(prob, cfg.m_range, cfg.family, cfg.degree, cfg.quad_points);

    Table t, tf;
    t.title = "condition numbers, alpha=" + std::to_string(cfg.alpha) + ", mu=" + cfg.mu_text +
              ", q=" + cfg.q_text + ", P" + std::to_string(cfg.degree) +
              " (P - preconditioned, W - without preconditioner)";
    t.header = {"variant"};
    for (const auto& r : rows) t.header.push_back("m=" + std::to_string(r.m));
    tf = t;
    std::vector<std::string> prow{"P"}, wrow{"W"}, fprow{"P"}, fwrow{"W"};
    for (const auto& r : rows) {
        prow.push_back(format_sci3(r.kappa_precond));
        wrow.push_back(format_sci3(r.kappa_plain));
        fprow.push_back(format_full(r.kappa_precond));
        fwrow.push_back(format_full(r.kappa_plain));
    }
    t.rows = {prow, wrow};
    tf.rows = {fprow, fwrow};
    detail::write_with_full_precision(t, tf, cfg.format, cfg.output);
    return 0;
}

inline int run_seed_tables(const RunConfig& cfg); // defined below (drives all runners)

inline int dispatch(const RunConfig& cfg) {
    if (cfg.seed_tables) return run_seed_tables(cfg);
    if (cfg.subcommand == "solve") return run_solve(cfg);
    if (cfg.subcommand == "converge") return run_converge(cfg);
    if (cfg.subcommand == "eigen") return run_eigen(cfg);
    if (cfg.subcommand == "cond") return run_cond(cfg);
    throw std::invalid_argument("unknown subcommand " + cfg.subcommand);
}

/// Full reproduction suite: the source tables, the eigenvalue tables and the
/// preconditioning table, written into an output directory.
inline int run_seed_tables(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    const std::string dir = cfg.output == "-" ? "tables" : cfg.output;
    fs::create_directories(dir);
    const std::string ext = cfg.format == "md" ? ".md" : ".csv";
    const int src_ref_m = cfg.ref_level > 0 ? cfg.ref_level : 12;

    auto source_table = [&](const std::string& name, const std::string& f_text,
                            const std::string& q_text, double mu_or_alpha_minus_1,
                            bool mu_is_am1, const std::vector<double>& alphas,
                            MeshFamily family, const std::vector<int>& levels) {
        Table t, tf;
        t.header = {"alpha", "P"};
        for (int m : levels) t.header.push_back("m=" + std::to_string(m));
        t.header.push_back("rate");
        tf = t;
        for (double alpha : alphas) {
            const double mu = mu_is_am1 ? alpha - 1.0 : mu_or_alpha_minus_1;
            const ProblemSpec prob(alpha, mu, q_text == "0" ? FunctionExpr()
                                                            : parse_function_expr(q_text),
                                   parse_function_expr(f_text));
            std::cerr << "[seed-tables] " << name << " alpha=" << alpha << "\n";
            const SourceErrorOracle oracle(prob, 1 << src_ref_m, 2, cfg.quad_points);
            for (int degree : {1, 2}) {
                const ConvergenceReport rep = source_convergence_study(
                    prob, degree, levels, family, oracle, name, cfg.quad_points);
                std::vector<std::string> row{std::to_string(alpha), "P" + std::to_string(degree)};
                std::vector<std::string> frow = row;
                for (double e : rep.errors) {
                    row.push_back(format_sci3(e));
                    frow.push_back(format_full(e));
                }
                row.push_back(format_rate(rep.final_rate(), rep.theory_defined,
                                          rep.theoretical_rate));
                frow.push_back(format_full(rep.final_rate()));
                t.rows.push_back(row);
                tf.rows.push_back(frow);
                t.title = "L2 errors, example " + name + ", q=" + q_text + "; " + rep.oracle_note;
                tf.title = t.title;
            }
        }
        detail::write_with_full_precision(t, tf, cfg.format, dir + "/" + name + ext);
    };

    const std::vector<int> m38{3, 4, 5, 6, 7, 8};
    // Table 1: example (a), q=0, mu=4
    source_table("table1_example_a", "x*(1-x)", "0", 4.0, false, {1.55, 1.75, 1.95},
                 MeshFamily::pow2, m38);
    // Theorem-4.5 regime: example (a), q=0, mu=alpha-1
    source_table("table1b_example_a_mu_alpha_minus_1", "x*(1-x)", "0", 0.0, true,
                 {1.55, 1.75, 1.95}, MeshFamily::pow2, m38);
    // Table 2: example (b1), q=x, mu=4
    source_table("table2_example_b1", "1", "x", 4.0, false, {1.55, 1.75, 1.95}, MeshFamily::pow2,
                 m38);
    // Table 3: alpha below 3/2
    source_table("table3_example_b1_small_alpha", "1", "x", 4.0, false, {1.05, 1.25, 1.45},
                 MeshFamily::pow2, m38);
    // Table 4: mu variation at alpha = 1.75
    {
        Table t, tf;
        t.header = {"mu", "P"};
        for (int m : m38) t.header.push_back("m=" + std::to_string(m));
        t.header.push_back("rate");
        tf = t;
        const ProblemSpec base(1.75, 4.0, parse_function_expr("x"), parse_function_expr("1"));
        const SourceErrorOracle oracle(base, 1 << src_ref_m, 2, cfg.quad_points);
        for (double mu : {3.0, 2.5, 2.0}) {
            const ProblemSpec prob(1.75, mu, parse_function_expr("x"), parse_function_expr("1"));
            std::cerr << "[seed-tables] table4 mu=" << mu << "\n";
            for (int degree : {1, 2}) {
                const ConvergenceReport rep = source_convergence_study(
                    prob, degree, m38, MeshFamily::pow2, oracle, "b1", cfg.quad_points);
                std::vector<std::string> row{std::to_string(mu), "P" + std::to_string(degree)};
                std::vector<std::string> frow = row;
                for (double e : rep.errors) {
                    row.push_back(format_sci3(e));
                    frow.push_back(format_full(e));
                }
                row.push_back(format_rate(rep.final_rate(), rep.theory_defined,
                                          rep.theoretical_rate));
                frow.push_back(format_full(rep.final_rate()));
                t.rows.push_back(row);
                tf.rows.push_back(frow);
                t.title = "L2 errors, example b1, q=x, alpha=1.75, varying mu; " + rep.oracle_note;
                tf.title = t.title;
            }
        }
        detail::write_with_full_precision(t, tf, cfg.format, dir + "/table4_example_b1_mu" + ext);
    }
    // Table 6: example (c) with the jump off the grid, h = 1/(2^m+1)
    source_table("table6_example_c_offgrid", "step(0,0.5)", "x", 4.0, false, {1.55, 1.75, 1.95},
                 MeshFamily::pow2plus1, m38);
    // grid-aligned companion of example (c)
    source_table("table6b_example_c_ongrid", "step(0,0.5)", "x", 4.0, false, {1.55, 1.75, 1.95},
                 MeshFamily::pow2, m38);

    // Eigen tables (5/7 analogues, scaled-down levels)
    for (const std::string q_text : {std::string("0"), std::string("x")}) {
        RunConfig ecfg = cfg;
        ecfg.subcommand = "eigen";
        ecfg.seed_tables = false;
        ecfg.alpha = 1.75;
        ecfg.mu_text = "3";
        ecfg.q_text = q_text;
        ecfg.family = MeshFamily::ten_pow2;
        ecfg.eigen_count = 8;
        ecfg.ref_level = cfg.ref_level > 0 ? cfg.ref_level : 7;
        ecfg.degree = 1;
        ecfg.m_range = {3, 4, 5, 6};
        ecfg.output = dir + "/table5_eigen_q" + (q_text == "0" ? "1" : "2") + "_p1" + ext;
        run_eigen(ecfg);
        ecfg.degree = 2;
        ecfg.m_range = {1, 2, 3, 4};
        ecfg.output = dir + "/table5_eigen_q" + (q_text == "0" ? "1" : "2") + "_p2" + ext;
        run_eigen(ecfg);
    }

    // Table 9: condition numbers, q = x
    {
        Table t, tf;
        const std::vector<int> levels{3, 4, 5, 6, 7, 8, 9};
        t.header = {"alpha", "mu", "variant"};
        for (int m : levels) t.header.push_back("m=" + std::to_string(m));
        tf = t;
        for (double alpha : {1.55, 1.75, 1.95}) {
            for (const std::string mu_text : {std::string("alpha-1"), std::string("3"),
                                              std::string("4")}) {
                const double mu = mu_text == "alpha-1" ? alpha - 1.0 : std::stod(mu_text);
                const ProblemSpec prob(alpha, mu, parse_function_expr("x"),
                                       parse_function_expr("1"));
                std::cerr << "[seed-tables] table9 alpha=" << alpha << " mu=" << mu_text << "\n";
                const auto rows = condition_study(prob, levels, MeshFamily::pow2, 1,
                                                  cfg.quad_points);
                std::vector<std::string> prow{std::to_string(alpha), mu_text, "P"};
                std::vector<std::string> wrow{std::to_string(alpha), mu_text, "W"};
                std::vector<std::string> fprow = prow, fwrow = wrow;
                for (const auto& r : rows) {
                    prow.push_back(format_sci3(r.kappa_precond));
                    wrow.push_back(format_sci3(r.kappa_plain));
                    fprow.push_back(format_full(r.kappa_precond));
                    fwrow.push_back(format_full(r.kappa_plain));
                }
                t.rows.push_back(prow);
                t.rows.push_back(wrow);
                tf.rows.push_back(fprow);
                tf.rows.push_back(fwrow);
            }
        }
        t.title = "condition numbers for P1, q=x (P - preconditioned, W - without preconditioner)";
        tf.title = t.title;
        detail::write_with_full_precision(t, tf, cfg.format, dir + "/table9_condition" + ext);
    }
    std::cerr << "[seed-tables] done; output in " << dir << "\n";
    return 0;
}

/// Entry point used by the fracfem binary. Exit codes: 0 success, 2 usage
/// error, 3 numeric failure.
inline int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const RunConfig cfg = parse_args(args);
        return dispatch(cfg);
    } catch (const help_requested& h) {
        std::cout << h.text;
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace fracfem
