#pragma once

#include <Eigen/Dense>

namespace nlsa::lapack {

// False when the linked BLAS/LAPACK fails a small accuracy probe; the
// routines below then fall back to Eigen's solvers.
bool backend_ok();

struct SymEig {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns
};

// k smallest eigenpairs of a dense symmetric matrix (dsyevr)
SymEig lowest(const Eigen::MatrixXd& S, int k);
// full spectrum (dsyevd)
SymEig all(const Eigen::MatrixXd& S);
// A x = lambda B x with B positive definite (dsygvd), k smallest kept
SymEig generalized(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k);
// eigenvalues of a general real matrix (dgeev)
Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A);

}  // namespace nlsa::lapack
