#pragma once

#include <span>
#include <utility>
#include <vector>

#include "nsm/vec3.hpp"

namespace nsm {

// Greedy farthest point sampling. Seeded at the lexicographically smallest
// point; each next pick maximizes min squared distance to the selected set,
// ties broken by lexicographically smaller position, then smaller index.
// The selected positions are therefore invariant to input permutation.
std::vector<int> farthest_point_sample(std::span<const Vec3> positions, int count);

// For each center, indices of up to max_samples points within radius, nearest
// first (ties by index). An empty ball falls back to the single nearest point.
std::vector<std::vector<int>> ball_query(std::span<const Vec3> centers,
                                         std::span<const Vec3> positions,
                                         double radius, int max_samples);

struct KnnResult {
    int k = 0;
    std::vector<int> indices;      // query-major, q*k + j
    std::vector<double> distances; // Euclidean, ascending per query

    int index(int q, int j) const { return indices[static_cast<size_t>(q) * k + j]; }
    double distance(int q, int j) const { return distances[static_cast<size_t>(q) * k + j]; }
};

// Exact k nearest neighbours per query, ascending distance, ties by index.
KnnResult k_nearest(std::span<const Vec3> queries, std::span<const Vec3> positions, int k);

std::vector<Vec3> apply_rigid(std::span<const Vec3> positions, const RigidMotion& motion);

// Serial reference implementations, kept bit-equal to the parallel ones.
namespace ref {
std::vector<int> farthest_point_sample(std::span<const Vec3> positions, int count);
std::vector<std::vector<int>> ball_query(std::span<const Vec3> centers,
                                         std::span<const Vec3> positions,
                                         double radius, int max_samples);
KnnResult k_nearest(std::span<const Vec3> queries, std::span<const Vec3> positions, int k);
std::vector<Vec3> apply_rigid(std::span<const Vec3> positions, const RigidMotion& motion);
}  // namespace ref

}  // namespace nsm
