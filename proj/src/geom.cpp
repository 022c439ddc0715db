#include "nsm/geom.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace nsm {

namespace {

constexpr int kParallelCutoff = 512;  // skip OpenMP setup for tiny inputs

struct Pick {
    double dist2 = -1.0;
    int index = -1;
};

// Candidate order for the next FPS pick: larger min-distance wins, then
// lexicographically smaller position, then smaller index. Partition-invariant,
// so chunked parallel reduction gives the same answer as a serial scan.
inline bool pick_better(const Pick& a, const Pick& b, std::span<const Vec3> pts) {
    if (a.dist2 != b.dist2) return a.dist2 > b.dist2;
    if (a.index == b.index) return false;
    const Vec3 &pa = pts[a.index], &pb = pts[b.index];
    if (lex_less(pa, pb)) return true;
    if (lex_less(pb, pa)) return false;
    return a.index < b.index;
}

int lex_smallest_index(std::span<const Vec3> pts) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(pts.size()); ++i)
        if (lex_less(pts[i], pts[best])) best = i;
    return best;
}

std::vector<int> fps_impl(std::span<const Vec3> pts, int count, bool parallel) {
    const int n = static_cast<int>(pts.size());
    if (count <= 0 || count > n)
        throw std::invalid_argument("farthest_point_sample: count out of range");

    std::vector<int> selected;
    selected.reserve(count);
    int seed = lex_smallest_index(pts);
    selected.push_back(seed);

    std::vector<double> min_d2(n);
    for (int i = 0; i < n; ++i) min_d2[i] = squared_distance(pts[i], pts[seed]);

    for (int s = 1; s < count; ++s) {
        Pick best;
        if (parallel && n >= kParallelCutoff) {
            Pick global;
#pragma omp parallel
            {
                Pick local;
#pragma omp for nowait
                for (int i = 0; i < n; ++i) {
                    Pick c{min_d2[i], i};
                    if (local.index < 0 || pick_better(c, local, pts)) local = c;
                }
#pragma omp critical
                {
                    if (global.index < 0 ||
                        (local.index >= 0 && pick_better(local, global, pts)))
                        global = local;
                }
            }
            best = global;
        } else {
            for (int i = 0; i < n; ++i) {
                Pick c{min_d2[i], i};
                if (best.index < 0 || pick_better(c, best, pts)) best = c;
            }
        }
        selected.push_back(best.index);
        const Vec3 p = pts[best.index];
#pragma omp parallel for if (parallel && n >= kParallelCutoff)
        for (int i = 0; i < n; ++i) {
            double d2 = squared_distance(pts[i], p);
            if (d2 < min_d2[i]) min_d2[i] = d2;
        }
    }
    return selected;
}

// Nearest candidates for one center; shared by ball_query and k_nearest.
void ball_for_center(const Vec3& c, std::span<const Vec3> pts, double r2,
                     int max_samples, std::vector<int>& out) {
    out.clear();
    const int n = static_cast<int>(pts.size());
    std::vector<std::pair<double, int>> within;
    double nearest_d2 = std::numeric_limits<double>::infinity();
    int nearest = 0;
    for (int i = 0; i < n; ++i) {
        double d2 = squared_distance(c, pts[i]);
        if (d2 <= r2) within.emplace_back(d2, i);
        if (d2 < nearest_d2) {
            nearest_d2 = d2;
            nearest = i;
        }
    }
    if (within.empty()) {
        out.push_back(nearest);
        return;
    }
    std::sort(within.begin(), within.end());
    const int take = std::min<int>(max_samples, static_cast<int>(within.size()));
    for (int i = 0; i < take; ++i) out.push_back(within[i].second);
}

std::vector<std::vector<int>> ball_query_impl(std::span<const Vec3> centers,
                                              std::span<const Vec3> pts,
                                              double radius, int max_samples,
                                              bool parallel) {
    if (pts.empty()) throw std::invalid_argument("ball_query: empty positions");
    if (radius <= 0.0) throw std::invalid_argument("ball_query: radius must be positive");
    if (max_samples <= 0) throw std::invalid_argument("ball_query: max_samples must be positive");

    const int m = static_cast<int>(centers.size());
    const double r2 = radius * radius;
    std::vector<std::vector<int>> result(m);
#pragma omp parallel for if (parallel && m > 1 && pts.size() >= kParallelCutoff)
    for (int q = 0; q < m; ++q) ball_for_center(centers[q], pts, r2, max_samples, result[q]);
    return result;
}

KnnResult knn_impl(std::span<const Vec3> queries, std::span<const Vec3> pts, int k,
                   bool parallel) {
    const int n = static_cast<int>(pts.size());
    const int m = static_cast<int>(queries.size());
    if (k <= 0 || k > n) throw std::invalid_argument("k_nearest: k out of range");

    KnnResult res;
    res.k = k;
    res.indices.resize(static_cast<size_t>(m) * k);
    res.distances.resize(static_cast<size_t>(m) * k);
#pragma omp parallel for if (parallel && m > 1 && pts.size() >= kParallelCutoff)
    for (int q = 0; q < m; ++q) {
        std::vector<std::pair<double, int>> cand(n);
        for (int i = 0; i < n; ++i) cand[i] = {squared_distance(queries[q], pts[i]), i};
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        for (int j = 0; j < k; ++j) {
            res.indices[static_cast<size_t>(q) * k + j] = cand[j].second;
            res.distances[static_cast<size_t>(q) * k + j] = std::sqrt(cand[j].first);
        }
    }
    return res;
}

std::vector<Vec3> apply_rigid_impl(std::span<const Vec3> pts, const RigidMotion& motion,
                                   bool parallel) {
    const int n = static_cast<int>(pts.size());
    std::vector<Vec3> out(n);
#pragma omp parallel for if (parallel && n >= kParallelCutoff)
    for (int i = 0; i < n; ++i) out[i] = motion.apply(pts[i]);
    return out;
}

}  // namespace

std::vector<int> farthest_point_sample(std::span<const Vec3> p, int count) {
    return fps_impl(p, count, true);
}
std::vector<std::vector<int>> ball_query(std::span<const Vec3> c, std::span<const Vec3> p,
                                         double radius, int max_samples) {
    return ball_query_impl(c, p, radius, max_samples, true);
}
KnnResult k_nearest(std::span<const Vec3> q, std::span<const Vec3> p, int k) {
    return knn_impl(q, p, k, true);
}
std::vector<Vec3> apply_rigid(std::span<const Vec3> p, const RigidMotion& m) {
    return apply_rigid_impl(p, m, true);
}

namespace ref {
std::vector<int> farthest_point_sample(std::span<const Vec3> p, int count) {
    return fps_impl(p, count, false);
}
std::vector<std::vector<int>> ball_query(std::span<const Vec3> c, std::span<const Vec3> p,
                                         double radius, int max_samples) {
    return ball_query_impl(c, p, radius, max_samples, false);
}
KnnResult k_nearest(std::span<const Vec3> q, std::span<const Vec3> p, int k) {
    return knn_impl(q, p, k, false);
}
std::vector<Vec3> apply_rigid(std::span<const Vec3> p, const RigidMotion& m) {
    return apply_rigid_impl(p, m, false);
}
}  // namespace ref

RigidMotion RigidMotion::rotate_axis(const Vec3& axis, double angle, const Vec3& t) {
    const double n = axis.norm();
    if (n <= 0.0) throw std::invalid_argument("rotate_axis: zero axis");
    const Vec3 u = axis / n;
    const double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
    RigidMotion m;
    m.rotation = {c + u.x * u.x * v,       u.x * u.y * v - u.z * s, u.x * u.z * v + u.y * s,
                  u.y * u.x * v + u.z * s, c + u.y * u.y * v,       u.y * u.z * v - u.x * s,
                  u.z * u.x * v - u.y * s, u.z * u.y * v + u.x * s, c + u.z * u.z * v};
    m.translation = t;
    return m;
}

RigidMotion RigidMotion::inverse() const {
    RigidMotion inv;
    const auto& r = rotation;
    inv.rotation = {r[0], r[3], r[6], r[1], r[4], r[7], r[2], r[5], r[8]};
    inv.translation = -inv.rotate(translation);
    return inv;
}

RigidMotion RigidMotion::compose(const RigidMotion& inner) const {
    RigidMotion out;
    const auto& a = rotation;
    const auto& b = inner.rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
            out.rotation[i * 3 + j] = s;
        }
    out.translation = rotate(inner.translation) + translation;
    return out;
}

bool RigidMotion::valid(double tol) const {
    const auto& r = rotation;
    // R·Rᵀ = I
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += r[i * 3 + k] * r[j * 3 + k];
            if (std::abs(s - (i == j ? 1.0 : 0.0)) > tol) return false;
        }
    double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                 r[2] * (r[3] * r[7] - r[4] * r[6]);
    return std::abs(det - 1.0) <= tol;
}

}  // namespace nsm
