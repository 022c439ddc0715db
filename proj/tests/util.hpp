#pragma once

// Shared helpers for the test suite: temp directories, random data, and a
// plain (tape-free) MLP evaluator used as an independent oracle.

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nsm/io.hpp"
#include "nsm/matrix.hpp"
#include "nsm/nn.hpp"
#include "nsm/rng.hpp"
#include "nsm/vec3.hpp"

namespace testutil {

struct TmpDir {
    std::filesystem::path path;

    explicit TmpDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               (tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str(const std::string& rel) const { return (path / rel).string(); }
};

inline bool files_equal(const std::string& a, const std::string& b) {
    return nsm::io::slurp(a) == nsm::io::slurp(b);
}

inline std::vector<nsm::Vec3> rand_cloud(nsm::Rng& rng, int n, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<nsm::Vec3> pts(static_cast<size_t>(n));
    for (auto& p : pts) p = {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
    return pts;
}

inline nsm::Matrix rand_matrix(nsm::Rng& rng, int r, int c, double scale = 1.0) {
    nsm::Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(-scale, scale);
    return m;
}

inline double max_abs_diff(const nsm::Matrix& a, const nsm::Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) return 1e300;
    double worst = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

inline bool bit_equal(const nsm::Matrix& a, const nsm::Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) return false;
    for (size_t i = 0; i < a.data.size(); ++i)
        if (a.data[i] != b.data[i]) return false;
    return true;
}

inline void set_param(nsm::ParameterStore& store, const std::string& name,
                      const nsm::Matrix& value) {
    int idx = store.index_of(name);
    if (idx < 0) throw std::invalid_argument("set_param: no parameter named " + name);
    auto& p = store.at(idx);
    if (p.value.rows != value.rows || p.value.cols != value.cols)
        throw std::invalid_argument("set_param: shape mismatch for " + name);
    p.value = value;
}

inline const nsm::Matrix& param_value(const nsm::ParameterStore& store, const std::string& name) {
    int idx = store.index_of(name);
    if (idx < 0) throw std::invalid_argument("param_value: no parameter named " + name);
    return store.at(idx).value;
}

inline nsm::Matrix identity_matrix(int n) {
    nsm::Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

// Plain forward pass of an MlpSpec, no tape involved: the oracle path for
// feature-block examples. Hidden layers ReLU, output layer affine.
inline nsm::Matrix mlp_manual(const nsm::MlpSpec& spec, const nsm::ParameterStore& store,
                              const nsm::Matrix& x) {
    nsm::Matrix h = x;
    int layers = static_cast<int>(spec.dims.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        const nsm::Matrix& w = store.at(store.index_of(spec.prefix + ".w" + std::to_string(l))).value;
        const nsm::Matrix& b = store.at(store.index_of(spec.prefix + ".b" + std::to_string(l))).value;
        nsm::Matrix next(h.rows, w.cols);
        for (int r = 0; r < h.rows; ++r)
            for (int c = 0; c < w.cols; ++c) {
                double acc = 0.0;
                for (int k = 0; k < h.cols; ++k) acc += h.at(r, k) * w.at(k, c);
                next.at(r, c) = acc + b.at(0, c);
            }
        if (l + 1 < layers)
            for (double& v : next.data) v = v > 0.0 ? v : 0.0;
        h = std::move(next);
    }
    return h;
}

}  // namespace testutil
