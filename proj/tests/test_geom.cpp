#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "nsm/geom.hpp"
#include "nsm/rng.hpp"
#include "util.hpp"

using namespace nsm;
using testutil::rand_cloud;

namespace {

// Full-sort brute force, independent of the heap/partial-select path.
std::vector<int> brute_knn(std::span<const Vec3> queries, std::span<const Vec3> pts, int k) {
    std::vector<int> out;
    for (const Vec3& q : queries) {
        std::vector<int> idx(pts.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            double da = squared_distance(q, pts[a]), db = squared_distance(q, pts[b]);
            if (da != db) return da < db;
            return a < b;
        });
        for (int j = 0; j < k; ++j) out.push_back(idx[static_cast<size_t>(j)]);
    }
    return out;
}

}  // namespace

TEST_CASE("fps picks the two extremes of a line") {
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0.1, 0, 0}, {2, 0, 0}};
    auto sel = farthest_point_sample(pts, 2);
    REQUIRE(sel.size() == 2);
    CHECK(sel[0] == 0);  // lexicographically smallest seed
    CHECK(sel[1] == 3);  // farthest from it
}

TEST_CASE("fps count equal to n returns every index") {
    Rng rng(11);
    auto pts = rand_cloud(rng, 17);
    auto sel = farthest_point_sample(pts, 17);
    std::set<int> got(sel.begin(), sel.end());
    CHECK(got.size() == 17);
    CHECK(*got.begin() == 0);
    CHECK(*got.rbegin() == 16);
}

TEST_CASE("fps count one returns the lexicographically smallest point") {
    std::vector<Vec3> pts = {{0.5, 0, 0}, {-0.5, 2, 0}, {-0.5, -1, 3}, {1, 1, 1}};
    auto sel = farthest_point_sample(pts, 1);
    REQUIRE(sel.size() == 1);
    CHECK(sel[0] == 2);
}

TEST_CASE("fps rejects degenerate counts") {
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS((void)farthest_point_sample(pts, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)farthest_point_sample(pts, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)farthest_point_sample({}, 1), std::invalid_argument);
}

TEST_CASE("fps selection is invariant to input permutation") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        auto pts = rand_cloud(rng, 40);
        auto sel = farthest_point_sample(pts, 12);

        std::vector<int> perm(pts.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<Vec3> shuffled(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) shuffled[i] = pts[perm[i]];
        auto sel2 = farthest_point_sample(shuffled, 12);

        REQUIRE(sel2.size() == sel.size());
        for (size_t i = 0; i < sel.size(); ++i) {
            const Vec3& a = pts[static_cast<size_t>(sel[i])];
            const Vec3& b = shuffled[static_cast<size_t>(sel2[i])];
            CHECK(a.x == b.x);
            CHECK(a.y == b.y);
            CHECK(a.z == b.z);
        }
    }
}

TEST_CASE("fps spreads duplicated points across distinct positions first") {
    // Duplicates add no coverage; with count 3 over two distinct positions
    // plus a far outlier, all three distinct positions must be selected.
    std::vector<Vec3> pts = {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {5, 5, 5}};
    auto sel = farthest_point_sample(pts, 3);
    std::set<double> xs;
    for (int i : sel) xs.insert(pts[static_cast<size_t>(i)].x);
    CHECK(xs == std::set<double>{0.0, 1.0, 5.0});
}

TEST_CASE("ball query membership, ordering, and truncation") {
    std::vector<Vec3> pts = {{0, 0, 0}, {0.5, 0, 0}, {0.85, 0, 0}, {0.95, 0, 0}, {2, 0, 0}};
    std::vector<Vec3> centers = {{0, 0, 0}};

    auto groups = ball_query(centers, pts, 0.9, 8);
    REQUIRE(groups.size() == 1);
    // within 0.9 of the origin: indices 0, 0.5, 0.85 — nearest first
    CHECK(groups[0] == std::vector<int>{0, 1, 2});

    auto truncated = ball_query(centers, pts, 0.9, 2);
    CHECK(truncated[0] == std::vector<int>{0, 1});
}

TEST_CASE("empty ball falls back to the single nearest point") {
    std::vector<Vec3> pts = {{5, 0, 0}, {7, 0, 0}};
    std::vector<Vec3> centers = {{0, 0, 0}};
    auto groups = ball_query(centers, pts, 0.9, 4);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0] == std::vector<int>{0});
}

TEST_CASE("ball query rejects empty inputs and bad radius") {
    std::vector<Vec3> pts = {{0, 0, 0}};
    std::vector<Vec3> centers = {{0, 0, 0}};
    CHECK_THROWS_AS((void)ball_query(centers, {}, 0.9, 4), std::invalid_argument);
    CHECK_THROWS_AS((void)ball_query(centers, pts, -1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS((void)ball_query(centers, pts, 0.9, 0), std::invalid_argument);
}

TEST_CASE("knn matches a full-sort brute force") {
    Rng rng(37);
    auto pts = rand_cloud(rng, 200);
    auto queries = rand_cloud(rng, 50);
    auto res = k_nearest(queries, pts, 5);
    auto expect = brute_knn(queries, pts, 5);
    REQUIRE(res.indices.size() == expect.size());
    for (size_t i = 0; i < expect.size(); ++i) CHECK(res.indices[i] == expect[i]);
    for (int q = 0; q < 50; ++q)
        for (int j = 0; j + 1 < 5; ++j)
            CHECK(res.distance(q, j) <= res.distance(q, j + 1));
}

TEST_CASE("knn query on a data point reports distance zero first") {
    std::vector<Vec3> pts = {{1, 2, 3}, {4, 5, 6}, {0, 0, 0}};
    std::vector<Vec3> q = {{4, 5, 6}};
    auto res = k_nearest(q, pts, 1);
    CHECK(res.index(0, 0) == 1);
    CHECK(res.distance(0, 0) == 0.0);
}

TEST_CASE("knn breaks distance ties by smaller index") {
    std::vector<Vec3> pts = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}};
    std::vector<Vec3> q = {{0, 0, 0}};
    auto res = k_nearest(q, pts, 3);
    CHECK(res.index(0, 0) == 0);
    CHECK(res.index(0, 1) == 1);
    CHECK(res.index(0, 2) == 2);
}

TEST_CASE("knn rejects k larger than the point count") {
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}};
    std::vector<Vec3> q = {{0, 0, 0}};
    CHECK_THROWS_AS((void)k_nearest(q, pts, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)k_nearest(q, pts, 0), std::invalid_argument);
}

TEST_CASE("rigid transform: quarter turn about z") {
    auto m = RigidMotion::rotate_axis({0, 0, 1}, 1.5707963267948966);
    std::vector<Vec3> pts = {{1, 0, 0}};
    auto out = apply_rigid(pts, m);
    CHECK(std::abs(out[0].x - 0.0) < 1e-12);
    CHECK(std::abs(out[0].y - 1.0) < 1e-12);
    CHECK(std::abs(out[0].z - 0.0) < 1e-12);
}

TEST_CASE("rigid transform preserves pairwise distances") {
    Rng rng(41);
    auto pts = rand_cloud(rng, 30, -2.0, 2.0);
    auto m = RigidMotion::rotate_axis({0.6, 0.8, 0.0}, 0.7, {0.3, -1.2, 2.5});
    REQUIRE(m.valid());
    auto out = apply_rigid(pts, m);
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            double before = (pts[i] - pts[j]).norm();
            double after = (out[i] - out[j]).norm();
            CHECK(std::abs(before - after) < 1e-9);
        }
}

TEST_CASE("rigid identity is exact and compose/inverse round-trips") {
    Rng rng(43);
    auto pts = rand_cloud(rng, 10);
    auto out = apply_rigid(pts, RigidMotion::identity());
    for (size_t i = 0; i < pts.size(); ++i) {
        CHECK(out[i].x == pts[i].x);
        CHECK(out[i].y == pts[i].y);
        CHECK(out[i].z == pts[i].z);
    }

    auto m = RigidMotion::rotate_axis({0, 1, 0}, 0.4, {1, 2, 3});
    auto round = m.inverse().compose(m);
    for (const Vec3& p : pts) {
        Vec3 q = round.apply(p);
        CHECK(std::abs(q.x - p.x) < 1e-12);
        CHECK(std::abs(q.y - p.y) < 1e-12);
        CHECK(std::abs(q.z - p.z) < 1e-12);
    }
}

TEST_CASE("parallel geometry kernels are bit-identical to the serial reference") {
    Rng rng(47);
    for (int trial = 0; trial < 5; ++trial) {
        auto pts = rand_cloud(rng, 300, -3.0, 3.0);
        auto centers = rand_cloud(rng, 40, -3.0, 3.0);

        CHECK(farthest_point_sample(pts, 50) == ref::farthest_point_sample(pts, 50));
        CHECK(ball_query(centers, pts, 0.9, 16) == ref::ball_query(centers, pts, 0.9, 16));

        auto a = k_nearest(centers, pts, 7);
        auto b = ref::k_nearest(centers, pts, 7);
        CHECK(a.indices == b.indices);
        REQUIRE(a.distances.size() == b.distances.size());
        for (size_t i = 0; i < a.distances.size(); ++i) CHECK(a.distances[i] == b.distances[i]);

        auto m = RigidMotion::rotate_axis({0, 0, 1}, 0.3, {0.1, 0.2, 0.3});
        auto pa = apply_rigid(pts, m);
        auto pb = ref::apply_rigid(pts, m);
        for (size_t i = 0; i < pa.size(); ++i) {
            CHECK(pa[i].x == pb[i].x);
            CHECK(pa[i].y == pb[i].y);
            CHECK(pa[i].z == pb[i].z);
        }
    }
}
