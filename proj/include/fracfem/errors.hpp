#pragma once

#include <stdexcept>
#include <string>

namespace fracfem {

// Numerical failures that are not caller contract violations. Contract
// violations (bad arguments) throw std::invalid_argument directly.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

class singular_matrix_error : public numeric_error {
public:
    explicit singular_matrix_error(const std::string& msg) : numeric_error(msg) {}
};

class convergence_error : public numeric_error {
public:
    explicit convergence_error(const std::string& msg) : numeric_error(msg) {}
};

class divergent_integral_error : public std::invalid_argument {
public:
    explicit divergent_integral_error(const std::string& msg)
        : std::invalid_argument(msg) {}
};

class unsupported_expression_error : public std::invalid_argument {
public:
    explicit unsupported_expression_error(const std::string& msg)
        : std::invalid_argument(msg) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fracfem
