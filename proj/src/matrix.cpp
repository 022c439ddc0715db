#include "nsm/matrix.hpp"

#include <stdexcept>

namespace nsm {

namespace {

constexpr long kParallelFlops = 1 << 15;

void check_mul(int ac, int br, const char* what) {
    if (ac != br) throw std::invalid_argument(std::string(what) + ": inner dimension mismatch");
}

// Each output row is produced by one iteration; bit-identical for any thread
// count. Inner loops ordered for sequential access of b.
Matrix matmul_impl(const Matrix& a, const Matrix& b, bool parallel) {
    check_mul(a.cols, b.rows, "matmul");
    Matrix c(a.rows, b.cols);
    const long flops = static_cast<long>(a.rows) * a.cols * b.cols;
#pragma omp parallel for if (parallel && flops >= kParallelFlops)
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt_impl(const Matrix& a, const Matrix& b, bool parallel) {
    check_mul(a.cols, b.cols, "matmul_nt");
    Matrix c(a.rows, b.rows);
    const long flops = static_cast<long>(a.rows) * a.cols * b.rows;
#pragma omp parallel for if (parallel && flops >= kParallelFlops)
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
    return c;
}

Matrix matmul_tn_impl(const Matrix& a, const Matrix& b, bool parallel) {
    check_mul(a.rows, b.rows, "matmul_tn");
    Matrix c(a.cols, b.cols);
    const long flops = static_cast<long>(a.cols) * a.rows * b.cols;
    // Parallel over output rows (columns of a); inner accumulation stays serial.
#pragma omp parallel for if (parallel && flops >= kParallelFlops)
    for (int i = 0; i < a.cols; ++i) {
        double* crow = c.row(i);
        for (int k = 0; k < a.rows; ++k) {
            const double aki = a.at(k, i);
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) { return matmul_impl(a, b, true); }
Matrix matmul_nt(const Matrix& a, const Matrix& b) { return matmul_nt_impl(a, b, true); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return matmul_tn_impl(a, b, true); }

namespace ref {
Matrix matmul(const Matrix& a, const Matrix& b) { return matmul_impl(a, b, false); }
Matrix matmul_nt(const Matrix& a, const Matrix& b) { return matmul_nt_impl(a, b, false); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return matmul_tn_impl(a, b, false); }
}  // namespace ref

}  // namespace nsm
