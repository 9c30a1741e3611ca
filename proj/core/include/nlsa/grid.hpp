#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "nlsa/params.hpp"

namespace nlsa {

// How the innermost node is placed. A geometric ratio q is turned into
// r_1 = r_max (q-1)/(q^n-1) before the map is solved.
struct Grading {
    enum class Kind { FirstNode, GeometricRatio };
    Kind kind = Kind::FirstNode;
    double value = 1e-4;

    static Grading first_node(double r1) { return {Kind::FirstNode, r1}; }
    static Grading ratio(double q) { return {Kind::GeometricRatio, q}; }
};

// Cell-centred nodes in xi with rho = r^beta = A sinh(xi):
// xi_k = (k - 1/2) dxi, k = 1..n, and r_n = r_max exactly.
class RadialGrid {
public:
    RadialGrid(const PhysParams& p, int n, double r_max, double r1);

    const PhysParams& params() const { return params_; }
    int n() const { return n_; }
    double r_max() const { return r_max_; }
    double r1() const { return r1_; }
    double dxi() const { return dxi_; }
    double scale() const { return A_; }
    double beta() const { return beta_; }

    // Nodes and box weights, 0-based (entry i is node k = i+1).
    const Eigen::VectorXd& r() const { return r_; }
    const Eigen::VectorXd& weights() const { return w_; }

    double xi(int k) const { return (k - 0.5) * dxi_; }
    double r_of_xi(double x) const;
    double dr_dxi(double x) const;
    double xi_of_r(double r) const;

    // int_0^{r_max} f(r) 4 pi r^2 dr
    double integrate(const Eigen::VectorXd& f) const { return w_.dot(f); }

    std::string fingerprint() const;

private:
    PhysParams params_;
    int n_;
    double r_max_, r1_, dxi_, A_, beta_, log_A_;
    Eigen::VectorXd r_, w_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr build_grid(const PhysParams& p, int n, double r_max, const Grading& grading = {});

}  // namespace nlsa
