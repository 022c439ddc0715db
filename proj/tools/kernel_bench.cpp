// Timing table for the OpenMP kernels against their serial references, plus
// an equality check on each pair (the references are the test oracles).
#include <chrono>
#include <cstdio>
#include <vector>

#include "nsm/geom.hpp"
#include "nsm/matrix.hpp"
#include "nsm/rng.hpp"

using nsm::Matrix;
using nsm::Vec3;

namespace {

double ms_of(const std::chrono::steady_clock::duration& d) {
    return std::chrono::duration<double, std::milli>(d).count();
}

template <class F>
double time_ms(F&& f, int reps) {
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    return ms_of(std::chrono::steady_clock::now() - t0) / reps;
}

std::vector<Vec3> random_cloud(nsm::Rng& rng, int n, double extent) {
    std::vector<Vec3> pts(static_cast<size_t>(n));
    for (auto& p : pts)
        p = {rng.uniform(-extent, extent), rng.uniform(-extent, extent),
             rng.uniform(-extent, extent)};
    return pts;
}

void row(const char* name, double par_ms, double ser_ms, bool equal) {
    std::printf("%-14s %10.3f ms %10.3f ms %7.2fx  %s\n", name, par_ms, ser_ms,
                ser_ms / par_ms, equal ? "match" : "MISMATCH");
}

}  // namespace

int main() {
    nsm::Rng rng(20260819);
    const int reps = 5;

    std::printf("%-14s %13s %13s %8s  %s\n", "kernel", "parallel", "serial", "speedup",
                "check");

    {
        const int m = 384, k = 256, n = 384;
        Matrix a(m, k), b(k, n);
        for (double& v : a.data) v = rng.uniform(-1.0, 1.0);
        for (double& v : b.data) v = rng.uniform(-1.0, 1.0);
        Matrix out_par, out_ser;
        double par = time_ms([&] { out_par = nsm::matmul(a, b); }, reps);
        double ser = time_ms([&] { out_ser = nsm::ref::matmul(a, b); }, reps);
        row("matmul", par, ser, out_par.data == out_ser.data);
    }
    {
        auto pts = random_cloud(rng, 8192, 4.0);
        std::vector<int> out_par, out_ser;
        double par = time_ms([&] { out_par = nsm::farthest_point_sample(pts, 512); }, reps);
        double ser = time_ms([&] { out_ser = nsm::ref::farthest_point_sample(pts, 512); }, reps);
        row("fps", par, ser, out_par == out_ser);
    }
    {
        auto pts = random_cloud(rng, 8192, 4.0);
        auto centers = random_cloud(rng, 512, 4.0);
        std::vector<std::vector<int>> out_par, out_ser;
        double par = time_ms([&] { out_par = nsm::ball_query(centers, pts, 0.9, 32); }, reps);
        double ser =
            time_ms([&] { out_ser = nsm::ref::ball_query(centers, pts, 0.9, 32); }, reps);
        row("ball_query", par, ser, out_par == out_ser);
    }
    {
        auto pts = random_cloud(rng, 8192, 4.0);
        auto queries = random_cloud(rng, 2048, 4.0);
        nsm::KnnResult out_par, out_ser;
        double par = time_ms([&] { out_par = nsm::k_nearest(queries, pts, 8); }, reps);
        double ser = time_ms([&] { out_ser = nsm::ref::k_nearest(queries, pts, 8); }, reps);
        row("knn", par, ser,
            out_par.indices == out_ser.indices && out_par.distances == out_ser.distances);
    }
    return 0;
}
