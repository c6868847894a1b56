#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracfem/errors.hpp"

namespace fracfem {

/// Scientific notation with 3 significant digits used by the reference tables:
/// 2.62e-3, 1.17e0, 1.61e6.
inline std::string format_sci3(double v) {
    if (std::isnan(v)) return "--";
    if (v == 0.0) return "0";
    const bool neg = v < 0.0;
    double a = std::abs(v);
    int k = static_cast<int>(std::floor(std::log10(a)));
    double mant = a / std::pow(10.0, k);
    // rounding the mantissa to 2 decimals can push it to 10.00
    char mbuf[16];
    std::snprintf(mbuf, sizeof(mbuf), "%.2f", mant);
    if (std::string(mbuf) == "10.00") { mant = 1.0; ++k; std::snprintf(mbuf, sizeof(mbuf), "%.2f", mant); }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%se%d", neg ? "-" : "", mbuf, k);
    return buf;
}

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Empirical rate with the theoretical one in brackets, reference-table style:
/// "1.55 (1.05)" or "2.04 (--)" when the theory is silent.
inline std::string format_rate(double empirical, bool theory_defined, double theoretical) {
    char buf[48];
    if (std::isnan(empirical)) return "--";
    if (theory_defined)
        std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", empirical, theoretical);
    else
        std::snprintf(buf, sizeof(buf), "%.2f (--)", empirical);
    return buf;
}

struct Table {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace detail

inline std::string to_csv(const Table& t) {
    std::ostringstream os;
    if (!t.title.empty()) os << "# " << t.title << "\n";
    for (std::size_t i = 0; i < t.header.size(); ++i)
        os << (i ? "," : "") << detail::csv_quote(t.header[i]);
    os << "\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << detail::csv_quote(row[i]);
        os << "\r\n";
    }
    return os.str();
}

inline std::string to_markdown(const Table& t) {
    std::vector<std::size_t> width(t.header.size(), 0);
    auto grow = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size() && i < width.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    };
    grow(t.header);
    for (const auto& row : t.rows) grow(row);

    std::ostringstream os;
    if (!t.title.empty()) os << "### " << t.title << "\n\n";
    auto emit = [&](const std::vector<std::string>& row) {
        os << "|";
        for (std::size_t i = 0; i < width.size(); ++i) {
            const std::string& cell = i < row.size() ? row[i] : "";
            os << " " << cell << std::string(width[i] - cell.size(), ' ') << " |";
        }
        os << "\n";
    };
    emit(t.header);
    os << "|";
    for (std::size_t i = 0; i < width.size(); ++i) os << std::string(width[i] + 2, '-') << "|";
    os << "\n";
    for (const auto& row : t.rows) emit(row);
    return os.str();
}

/// Write a table as CSV or markdown; path "-" goes to stdout.
inline void emit_table(const Table& t, const std::string& format, const std::string& path) {
    const std::string body = format == "md" ? to_markdown(t) : to_csv(t);
    if (path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("emit_table: cannot open output path " + path);
    out << body;
    if (!out) throw io_error("emit_table: write failed for " + path);
}

} // namespace fracfem
