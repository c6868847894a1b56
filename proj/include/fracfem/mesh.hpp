#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracfem/errors.hpp"

namespace fracfem {

/// Partition of the unit interval: nodes x_0 = 0 < x_1 < ... < x_n = 1.
/// Immutable after construction.
class Mesh {
public:
    explicit Mesh(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 3)
            throw std::invalid_argument("Mesh: need at least 2 elements");
        if (nodes_.front() != 0.0 || nodes_.back() != 1.0)
            throw std::invalid_argument("Mesh: nodes must start at 0 and end at 1");
        for (std::size_t i = 1; i < nodes_.size(); ++i)
            if (!(nodes_[i] > nodes_[i - 1]))
                throw std::invalid_argument("Mesh: nodes must be strictly increasing");
    }

    int num_elements() const { return static_cast<int>(nodes_.size()) - 1; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    double node(int i) const { return nodes_[i]; }
    double width(int e) const { return nodes_[e + 1] - nodes_[e]; }
    double max_width() const {
        double h = 0.0;
        for (int e = 0; e < num_elements(); ++e) h = std::max(h, width(e));
        return h;
    }
    const std::vector<double>& nodes() const { return nodes_; }

    /// Element index e with x in (x_e, x_{e+1}]; x = 0 maps to element 0.
    /// Picking the left element at interior nodes gives the left-limit
    /// convention for one-sided derivative evaluation.
    int element_of(double x) const {
        if (x < 0.0 || x > 1.0) throw std::invalid_argument("Mesh: point outside [0,1]");
        if (x <= nodes_[1]) return 0;
        const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
        return static_cast<int>(it - nodes_.begin()) - 1;
    }

private:
    std::vector<double> nodes_;
};

inline Mesh make_uniform_mesh(int n) {
    if (n < 2) throw std::invalid_argument("make_uniform_mesh: need n >= 2 elements");
    std::vector<double> nodes(n + 1);
    for (int i = 0; i <= n; ++i) nodes[i] = static_cast<double>(i) / n;
    nodes[n] = 1.0;
    return Mesh(std::move(nodes));
}

/// Continuous piecewise P1/P2 space on a Mesh with homogeneous Dirichlet
/// conditions; only interior degrees of freedom are enumerated.
///
/// Dof order is left to right. For P2, vertex and midpoint dofs interleave
/// in node order: dof 0 is the midpoint of element 0, dof 1 is vertex x_1,
/// dof 2 the midpoint of element 1, and so on.
class FESpace {
public:
    FESpace(Mesh mesh, int degree) : mesh_(std::move(mesh)), degree_(degree) {
        if (degree != 1 && degree != 2)
            throw std::invalid_argument("FESpace: degree must be 1 or 2");
    }

    const Mesh& mesh() const { return mesh_; }
    int degree() const { return degree_; }
    int dof_count() const {
        const int n = mesh_.num_elements();
        return degree_ == 1 ? n - 1 : 2 * n - 1;
    }

    bool is_vertex_dof(int j) const { return degree_ == 1 || (j % 2 == 1); }
    /// Mesh node index of a vertex dof.
    int vertex_of(int j) const { return degree_ == 1 ? j + 1 : (j + 1) / 2; }
    /// Element index of a midpoint dof (P2 only).
    int element_of_midpoint(int j) const { return j / 2; }

    /// Coordinate of the interpolation node of dof j.
    double dof_node(int j) const {
        check_dof(j);
        if (is_vertex_dof(j)) return mesh_.node(vertex_of(j));
        const int e = element_of_midpoint(j);
        return 0.5 * (mesh_.node(e) + mesh_.node(e + 1));
    }

    /// First and last element of supp(phi_j).
    int support_first_element(int j) const {
        check_dof(j);
        if (is_vertex_dof(j)) return vertex_of(j) - 1;
        return element_of_midpoint(j);
    }
    int support_last_element(int j) const {
        check_dof(j);
        if (is_vertex_dof(j)) return vertex_of(j);
        return element_of_midpoint(j);
    }

    /// Dofs active on element e, in dof order.
    void element_dofs(int e, int out[3], int& count) const {
        count = 0;
        const int n = mesh_.num_elements();
        if (degree_ == 1) {
            if (e >= 1) out[count++] = e - 1;
            if (e + 1 <= n - 1) out[count++] = e;
        } else {
            if (e >= 1) out[count++] = 2 * e - 1;
            out[count++] = 2 * e;
            if (e <= n - 2) out[count++] = 2 * e + 1;
        }
    }

    double basis_eval(int j, double x) const {
        check_dof(j);
        check_point(x);
        const int e = mesh_.element_of(x);
        return local_value(j, e, x, false);
    }

    /// Basis value with the containing element already known (assembly path).
    double basis_eval_on(int j, int e, double x) const { return local_value(j, e, x, false); }

    /// One-sided derivative; at interior breakpoints returns the left limit.
    double basis_deriv(int j, double x) const {
        check_dof(j);
        check_point(x);
        const int e = mesh_.element_of(x);
        return local_value(j, e, x, true);
    }

    /// Nodal interpolant: c_j = fn(dof node j).
    std::vector<double> interpolate(const std::function<double(double)>& fn) const {
        std::vector<double> c(dof_count());
        for (int j = 0; j < dof_count(); ++j) {
            c[j] = fn(dof_node(j));
            if (!std::isfinite(c[j]))
                throw numeric_error("interpolate: non-finite value at node " +
                                    std::to_string(dof_node(j)));
        }
        return c;
    }

    /// FE expansion sum_j c_j phi_j(x); O(1) per point.
    double eval(const std::vector<double>& coeffs, double x) const {
        if (static_cast<int>(coeffs.size()) != dof_count())
            throw std::invalid_argument("FESpace::eval: coefficient size mismatch");
        check_point(x);
        const int e = mesh_.element_of(x);
        int dofs[3], cnt;
        element_dofs(e, dofs, cnt);
        double v = 0.0;
        for (int k = 0; k < cnt; ++k) v += coeffs[dofs[k]] * local_value(dofs[k], e, x, false);
        return v;
    }

private:
    void check_dof(int j) const {
        if (j < 0 || j >= dof_count()) throw std::invalid_argument("FESpace: dof index out of range");
    }
    static void check_point(double x) {
        if (x < 0.0 || x > 1.0) throw std::invalid_argument("FESpace: point outside [0,1]");
    }

    // Value or derivative of phi_j restricted to element e (zero off support).
    double local_value(int j, int e, double x, bool deriv) const {
        const double l = mesh_.node(e);
        const double h = mesh_.width(e);
        const double xi = (x - l) / h;
        if (degree_ == 1) {
            const int i = vertex_of(j); // global node index of the hat
            if (e == i - 1) return deriv ? 1.0 / h : xi;
            if (e == i) return deriv ? -1.0 / h : 1.0 - xi;
            return 0.0;
        }
        if (is_vertex_dof(j)) {
            const int i = vertex_of(j);
            if (e == i - 1) // rising piece: xi*(2*xi - 1)
                return deriv ? (4.0 * xi - 1.0) / h : xi * (2.0 * xi - 1.0);
            if (e == i) // falling piece: (1 - xi)*(1 - 2*xi)
                return deriv ? (4.0 * xi - 3.0) / h : (1.0 - xi) * (1.0 - 2.0 * xi);
            return 0.0;
        }
        if (e == element_of_midpoint(j)) // bubble: 4*xi*(1 - xi)
            return deriv ? (4.0 - 8.0 * xi) / h : 4.0 * xi * (1.0 - xi);
        return 0.0;
    }

    Mesh mesh_;
    int degree_;
};

} // namespace fracfem
