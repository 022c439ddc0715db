#include "nsm/flow.hpp"

#include <stdexcept>
#include <string>

#include "nsm/geom.hpp"
#include "nsm/rng.hpp"

namespace nsm {

void PointFlowField::validate(size_t prev_n, size_t cur_n) const {
    if (forward_flow.size() != prev_n)
        throw std::invalid_argument("flow: forward_flow length " +
                                    std::to_string(forward_flow.size()) +
                                    " does not match previous frame size " +
                                    std::to_string(prev_n));
    if (current_displacement.size() != cur_n)
        throw std::invalid_argument("flow: current_displacement length " +
                                    std::to_string(current_displacement.size()) +
                                    " does not match current frame size " + std::to_string(cur_n));
    for (const Vec3& v : forward_flow)
        if (!v.finite()) throw std::invalid_argument("flow: non-finite forward_flow entry");
    for (const Vec3& v : current_displacement)
        if (!v.finite()) throw std::invalid_argument("flow: non-finite displacement entry");
}

PointFlowField oracle_flow(const SceneSnapshot& prev, const SceneSnapshot& cur) {
    if (cur.frame_index != prev.frame_index + 1)
        throw std::invalid_argument("oracle_flow: snapshots must be consecutive frames");
    if (prev.body_pose.size() != cur.body_pose.size())
        throw std::invalid_argument("oracle_flow: snapshots disagree on body count");
    RigidMotion prev_cam_inv = prev.camera.inverse();
    RigidMotion cur_cam_inv = cur.camera.inverse();

    auto displacement = [&](int body, const Vec3& local) {
        Vec3 before = prev_cam_inv.apply(prev.body_pose[static_cast<size_t>(body)].apply(local));
        Vec3 after = cur_cam_inv.apply(cur.body_pose[static_cast<size_t>(body)].apply(local));
        return after - before;
    };

    PointFlowField flow;
    flow.forward_flow.reserve(prev.point_local.size());
    for (size_t i = 0; i < prev.point_local.size(); ++i)
        flow.forward_flow.push_back(displacement(prev.point_body[i], prev.point_local[i]));
    flow.current_displacement.reserve(cur.point_local.size());
    for (size_t j = 0; j < cur.point_local.size(); ++j)
        flow.current_displacement.push_back(displacement(cur.point_body[j], cur.point_local[j]));
    flow.validate(prev.point_local.size(), cur.point_local.size());
    return flow;
}

PointFlowField naive_flow_estimate(const PointCloudFrame& prev, const PointCloudFrame& cur) {
    if (prev.positions.empty() || cur.positions.empty())
        throw std::invalid_argument("naive_flow_estimate: frames must be non-empty");
    PointFlowField flow;
    KnnResult to_cur = k_nearest(prev.positions, cur.positions, 1);
    flow.forward_flow.resize(prev.positions.size());
    for (size_t i = 0; i < prev.positions.size(); ++i)
        flow.forward_flow[i] =
            cur.positions[static_cast<size_t>(to_cur.index(static_cast<int>(i), 0))] -
            prev.positions[i];
    KnnResult to_prev = k_nearest(cur.positions, prev.positions, 1);
    flow.current_displacement.resize(cur.positions.size());
    for (size_t j = 0; j < cur.positions.size(); ++j)
        flow.current_displacement[j] =
            cur.positions[j] -
            prev.positions[static_cast<size_t>(to_prev.index(static_cast<int>(j), 0))];
    return flow;
}

PointFlowField inject_flow_noise(const PointFlowField& flow, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("inject_flow_noise: sigma must be >= 0");
    PointFlowField out = flow;
    if (sigma == 0.0) return out;
    Rng rng(seed);
    for (Vec3& v : out.forward_flow) {
        v.x += sigma * rng.normal();
        v.y += sigma * rng.normal();
        v.z += sigma * rng.normal();
    }
    for (Vec3& v : out.current_displacement) {
        v.x += sigma * rng.normal();
        v.y += sigma * rng.normal();
        v.z += sigma * rng.normal();
    }
    return out;
}

}  // namespace nsm
