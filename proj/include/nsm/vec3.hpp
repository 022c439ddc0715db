#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nsm {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    bool operator==(const Vec3&) const = default;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double squared_norm() const { return dot(*this); }
    double norm() const { return std::sqrt(squared_norm()); }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline double squared_distance(const Vec3& a, const Vec3& b) {
    return (a - b).squared_norm();
}

// Exact lexicographic (x, y, z) order; used for deterministic seeding and
// tie-breaking in sampling.
inline bool lex_less(const Vec3& a, const Vec3& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
}

// Rigid transform p -> R*p + t with R a proper rotation.
struct RigidMotion {
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    Vec3 translation{};

    static RigidMotion identity() { return {}; }
    static RigidMotion translate(const Vec3& t) {
        RigidMotion m;
        m.translation = t;
        return m;
    }
    // Rotation by `angle` radians about a unit axis, Rodrigues form.
    static RigidMotion rotate_axis(const Vec3& axis, double angle, const Vec3& t = {});

    Vec3 apply(const Vec3& p) const {
        const auto& r = rotation;
        return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation.x,
                r[3] * p.x + r[4] * p.y + r[5] * p.z + translation.y,
                r[6] * p.x + r[7] * p.y + r[8] * p.z + translation.z};
    }

    // Rotation part only (for transforming directions).
    Vec3 rotate(const Vec3& p) const {
        const auto& r = rotation;
        return {r[0] * p.x + r[1] * p.y + r[2] * p.z,
                r[3] * p.x + r[4] * p.y + r[5] * p.z,
                r[6] * p.x + r[7] * p.y + r[8] * p.z};
    }

    RigidMotion inverse() const;
    RigidMotion compose(const RigidMotion& inner) const;  // this ∘ inner

    // R orthonormal within tol and det(R) = +1 within tol.
    bool valid(double tol = 1e-9) const;
};

// One timestamped observation.
struct PointCloudFrame {
    std::vector<Vec3> positions;
    int frame_index = 0;
    std::vector<int> point_labels;  // empty when absent; else size() == positions.size()
    int action_label = -1;          // -1 when absent

    int size() const { return static_cast<int>(positions.size()); }

    void validate() const {
        if (positions.empty())
            throw std::invalid_argument("PointCloudFrame: no points");
        if (frame_index < 0)
            throw std::invalid_argument("PointCloudFrame: negative frame index");
        if (!point_labels.empty() && point_labels.size() != positions.size())
            throw std::invalid_argument("PointCloudFrame: label/point count mismatch");
        for (const auto& p : positions)
            if (!p.finite())
                throw std::invalid_argument("PointCloudFrame: non-finite coordinate");
    }
};

}  // namespace nsm
