#include "nlsa/lapack.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <mutex>
#include <string>
#include <vector>

#include "nlsa/errors.hpp"

namespace nlsa::lapack {

namespace {

void check(lapack_int info, const char* what) {
    if (info != 0) throw NumericalError(std::string(what) + " failed, info=" + std::to_string(info));
}

// Some OpenBLAS builds pick a kernel at load time that returns garbage
// eigenvectors on this hardware. Probe once with a matrix large enough to hit
// the blocked code paths; fall back to Eigen if the answer is wrong.
bool probe() {
    const int n = 200;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = 1.0 / (1.0 + std::abs(i - j)) + (i == j ? 0.01 * i : 0.0);
    Eigen::MatrixXd v = A;
    Eigen::VectorXd w(n);
    if (LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, v.data(), n, w.data()) != 0) return false;
    const double res = (A * v - v * w.asDiagonal()).cwiseAbs().maxCoeff();
    const double orth = (v.transpose() * v - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    return res < 1e-10 && orth < 1e-10;
}

SymEig eigen_sym(const Eigen::MatrixXd& S, int k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    return {es.eigenvalues().head(k), es.eigenvectors().leftCols(k)};
}

}  // namespace

bool backend_ok() {
    static std::once_flag flag;
    static bool ok = false;
    std::call_once(flag, [] { ok = probe(); });
    return ok;
}

SymEig lowest(const Eigen::MatrixXd& S, int k) {
    const lapack_int n = static_cast<lapack_int>(S.rows());
    if (k > n) k = n;
    if (!backend_ok()) return eigen_sym(S, k);
    Eigen::MatrixXd a = S;  // column-major, overwritten
    std::vector<double> w(n);
    Eigen::MatrixXd z(n, k);
    std::vector<lapack_int> isuppz(2 * static_cast<size_t>(k));
    lapack_int m = 0;
    check(LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, 1, k, 0.0, &m, w.data(),
                         z.data(), n, isuppz.data()),
          "dsyevr");
    SymEig out;
    out.values = Eigen::Map<Eigen::VectorXd>(w.data(), m);
    out.vectors = z.leftCols(m);
    return out;
}

SymEig all(const Eigen::MatrixXd& S) {
    const lapack_int n = static_cast<lapack_int>(S.rows());
    if (!backend_ok()) return eigen_sym(S, n);
    SymEig out;
    out.vectors = S;
    out.values.resize(n);
    check(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, out.vectors.data(), n, out.values.data()), "dsyevd");
    return out;
}

SymEig generalized(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k) {
    const lapack_int n = static_cast<lapack_int>(A.rows());
    if (k > n) k = n;
    if (!backend_ok()) {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
        if (es.info() != Eigen::Success) throw NumericalError("generalized eigensolver failed");
        return {es.eigenvalues().head(k), es.eigenvectors().leftCols(k)};
    }
    Eigen::MatrixXd a = A, b = B;
    Eigen::VectorXd w(n);
    check(LAPACKE_dsygvd(LAPACK_COL_MAJOR, 1, 'V', 'U', n, a.data(), n, b.data(), n, w.data()), "dsygvd");
    return {w.head(k), a.leftCols(k)};
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A) {
    const lapack_int n = static_cast<lapack_int>(A.rows());
    if (!backend_ok()) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
        if (es.info() != Eigen::Success) throw NumericalError("nonsymmetric eigensolver failed");
        return es.eigenvalues();
    }
    Eigen::MatrixXd a = A;
    std::vector<double> wr(n), wi(n);
    check(LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(), wi.data(), nullptr, 1, nullptr, 1),
          "dgeev");
    Eigen::VectorXcd out(n);
    for (lapack_int i = 0; i < n; ++i) out(i) = {wr[i], wi[i]};
    return out;
}

}  // namespace nlsa::lapack
