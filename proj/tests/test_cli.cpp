#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracfem/cli.hpp"

using namespace fracfem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(std::initializer_list<const char*> args) {
    std::vector<const char*> argv{"fracfem"};
    argv.insert(argv.end(), args.begin(), args.end());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("parse_args on the table-driver invocations", "[cli]") {
    const RunConfig c1 = parse_args({"converge", "--alpha", "1.55", "--mu", "4", "--degree", "1",
                                     "--example", "a", "--m", "3..8"});
    REQUIRE(c1.subcommand == "converge");
    REQUIRE(c1.alpha == 1.55);
    REQUIRE(c1.mu_value() == 4.0);
    REQUIRE(c1.degree == 1);
    REQUIRE(c1.example == "a");
    REQUIRE(c1.m_range == std::vector<int>{3, 4, 5, 6, 7, 8});
    REQUIRE(c1.family == MeshFamily::pow2);

    const RunConfig c2 = parse_args({"eigen", "--alpha", "1.75", "--mu", "3", "--q", "x",
                                     "--count", "8", "--m", "3..8", "--mesh", "ten_pow2"});
    REQUIRE(c2.subcommand == "eigen");
    REQUIRE(c2.eigen_count == 8);
    REQUIRE(c2.family == MeshFamily::ten_pow2);
    REQUIRE(c2.q_text == "x");
    REQUIRE(c2.mu_value() == 3.0);

    // eigen defaults to mu = 3, source subcommands to mu = 4
    REQUIRE(parse_args({"eigen", "--alpha", "1.75"}).mu_value() == 3.0);
    REQUIRE(parse_args({"converge", "--alpha", "1.75", "--example", "a"}).mu_value() == 4.0);

    // mu = alpha-1 token
    const RunConfig c3 = parse_args({"converge", "--alpha", "1.6", "--mu", "alpha-1",
                                     "--example", "a"});
    REQUIRE(c3.mu_value() == Catch::Approx(0.6).margin(1e-15));

    REQUIRE_THROWS_AS(parse_args({"converge", "--alpha", "2.5", "--example", "a"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_args({"converge", "--alpha", "1.75", "--mu", "1.0",
                                  "--example", "a"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_args({"converge", "--alpha", "1.75", "--m", "8..3"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_args({"frobnicate"}), CLI::ParseError);
}

TEST_CASE("exit codes", "[cli]") {
    REQUIRE(run_cli({"converge", "--alpha", "2.5", "--example", "a"}) == 2);
    REQUIRE(run_cli({"--bogus-flag"}) == 2);
    // io-error surfaces as a numeric failure (exit 3)
    REQUIRE(run_cli({"solve", "--alpha", "1.75", "--example", "a", "--m", "3", "--output",
                     "/nonexistent-dir/x.csv"}) == 3);
}

TEST_CASE("number formatting matches the reference tables' style", "[cli]") {
    REQUIRE(format_sci3(2.62e-3) == "2.62e-3");
    REQUIRE(format_sci3(1.98e-10) == "1.98e-10");
    REQUIRE(format_sci3(1.17) == "1.17e0");
    REQUIRE(format_sci3(1.61e6) == "1.61e6");
    REQUIRE(format_sci3(9.996e-3) == "1.00e-2"); // mantissa rounding carries
    REQUIRE(format_sci3(0.0) == "0");
    REQUIRE(format_sci3(-3.5e2) == "-3.50e2");
    REQUIRE(format_rate(1.55, true, 1.05) == "1.55 (1.05)");
    REQUIRE(format_rate(2.04, false, 0.0) == "2.04 (--)");
}

TEST_CASE("CSV quoting follows RFC 4180", "[cli]") {
    Table t;
    t.header = {"plain", "with,comma", "with\"quote"};
    t.rows = {{"a", "b,c", "d\"e"}};
    const std::string csv = to_csv(t);
    REQUIRE(csv.find("\"with,comma\"") != std::string::npos);
    REQUIRE(csv.find("\"with\"\"quote\"") != std::string::npos);
    REQUIRE(csv.find("\"b,c\"") != std::string::npos);
    REQUIRE(csv.find("\"d\"\"e\"") != std::string::npos);
    REQUIRE(csv.find("\r\n") != std::string::npos);
}

TEST_CASE("markdown alignment", "[cli]") {
    Table t;
    t.title = "demo";
    t.header = {"a", "bbbb"};
    t.rows = {{"xxxx", "y"}};
    const std::string md = to_markdown(t);
    REQUIRE(md.find("| a    | bbbb |") != std::string::npos);
    REQUIRE(md.find("| xxxx | y    |") != std::string::npos);
}

TEST_CASE("solve subcommand writes tables and the full-precision sibling", "[cli]") {
    namespace fs = std::filesystem;
    const std::string dir = fs::temp_directory_path() / "fracfem_cli_test";
    fs::create_directories(dir);
    const std::string out = dir + "/solve.csv";
    REQUIRE(run_cli({"solve", "--alpha", "1.75", "--example", "a", "--m", "3", "--output",
                     out.c_str()}) == 0);
    const std::string body = read_file(out);
    REQUIRE(body.find("x,w_h,u_h,u,|u-u_h|") != std::string::npos);
    REQUIRE(fs::exists(out + ".full.csv"));

    // determinism: a second run produces byte-identical output
    REQUIRE(run_cli({"solve", "--alpha", "1.75", "--example", "a", "--m", "3", "--output",
                     (out + ".again").c_str()}) == 0);
    REQUIRE(read_file(out + ".again") == body);
    fs::remove_all(dir);
}

TEST_CASE("converge subcommand on a small fast case", "[cli]") {
    namespace fs = std::filesystem;
    const std::string dir = fs::temp_directory_path() / "fracfem_cli_conv";
    fs::create_directories(dir);
    const std::string out = dir + "/conv.md";
    // q = 0 uses the closed-form oracle, so no reference solve is involved
    REQUIRE(run_cli({"converge", "--alpha", "1.75", "--example", "a", "--degree", "1", "--m",
                     "3..5", "--format", "md", "--output", out.c_str()}) == 0);
    const std::string body = read_file(out);
    REQUIRE(body.find("m=3") != std::string::npos);
    REQUIRE(body.find("rate") != std::string::npos);
    REQUIRE(body.find("(1.25)") != std::string::npos); // alpha + k - 1/2 = 1.25
    fs::remove_all(dir);
}

TEST_CASE("cond subcommand", "[cli]") {
    namespace fs = std::filesystem;
    const std::string dir = fs::temp_directory_path() / "fracfem_cli_cond";
    fs::create_directories(dir);
    const std::string out = dir + "/cond.csv";
    REQUIRE(run_cli({"cond", "--alpha", "1.95", "--mu", "alpha-1", "--q", "x", "--m", "3..4",
                     "--output", out.c_str()}) == 0);
    const std::string body = read_file(out);
    REQUIRE(body.find("P,") != std::string::npos);
    REQUIRE(body.find("W,") != std::string::npos);
    fs::remove_all(dir);
}
