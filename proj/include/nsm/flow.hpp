#pragma once

#include <cstdint>
#include <vector>

#include "nsm/vec3.hpp"

namespace nsm {

// Scene flow between two consecutive frames, carried in both coordinate
// views: forward_flow[i] is the displacement of PREVIOUS-frame point i into
// the current frame; current_displacement[j] is the displacement CURRENT
// point j underwent since the previous frame. Frame 0 carries all zeros.
struct PointFlowField {
    std::vector<Vec3> forward_flow;
    std::vector<Vec3> current_displacement;

    void validate(size_t prev_n, size_t cur_n) const;
};

// Ground-truth pose bookkeeping for one rendered frame of a scripted scene:
// enough to reconstruct any visible point's camera-frame trajectory.
struct SceneSnapshot {
    uint32_t frame_index = 0;
    std::vector<int> point_body;       // per visible point: owning body index
    std::vector<Vec3> point_local;     // per visible point: body-frame coords
    std::vector<RigidMotion> body_pose;  // per body: body→world at this frame
    RigidMotion camera;                  // camera→world at this frame
};

// Exact analytic flow (object motion and camera ego-motion combined) between
// consecutive snapshots of the same scripted scene.
PointFlowField oracle_flow(const SceneSnapshot& prev, const SceneSnapshot& cur);

// Nearest-neighbor stand-in for a learned flow network.
PointFlowField naive_flow_estimate(const PointCloudFrame& prev, const PointCloudFrame& cur);

// i.i.d. zero-mean Gaussian perturbation of both arrays; sigma = 0 is the
// identity (bit-exact).
PointFlowField inject_flow_noise(const PointFlowField& flow, double sigma, uint64_t seed);

}  // namespace nsm
