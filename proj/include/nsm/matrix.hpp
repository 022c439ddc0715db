#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsm {

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major matrix of 64-bit floats. All heavy products have an OpenMP
// path (rows of the output are independent, so results are bit-identical for
// any thread count) plus a serial reference under nsm::ref.
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative shape");
    }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a·b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a·bᵀ
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ·b

namespace ref {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
}  // namespace ref

inline void check_finite(const Matrix& m, const char* where) {
    if (!m.all_finite()) throw NumericError(std::string(where) + ": non-finite value");
}

}  // namespace nsm
