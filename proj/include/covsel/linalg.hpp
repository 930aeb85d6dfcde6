#pragma once

// Small dense-matrix helpers shared by the distribution code.

#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace covsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Raised when a matrix that must be positive definite is not, or when a
// numeric routine cannot proceed.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Matrix submatrix(const Matrix& m, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (size_t a = 0; a < rows.size(); ++a)
        for (size_t b = 0; b < cols.size(); ++b)
            out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                m(rows[a], cols[b]);
    return out;
}

inline Matrix submatrix(const Matrix& m, const std::vector<int>& idx) {
    return submatrix(m, idx, idx);
}

inline Eigen::LLT<Matrix> llt_or_throw(const Matrix& m, const char* what) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw numeric_error(what);
    return llt;
}

inline bool is_positive_definite(const Matrix& m) {
    if (m.rows() != m.cols()) return false;
    return Eigen::LLT<Matrix>(m).info() == Eigen::Success;
}

inline double log_det_cholesky(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline double log_det_pd(const Matrix& m, const char* what = "log_det: not positive definite") {
    return log_det_cholesky(llt_or_throw(m, what));
}

inline Matrix inverse_pd(const Matrix& m, const char* what = "inverse: not positive definite") {
    return llt_or_throw(m, what).solve(Matrix::Identity(m.rows(), m.cols()));
}

}  // namespace covsel
