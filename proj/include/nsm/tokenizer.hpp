#pragma once

#include <span>
#include <vector>

#include "nsm/flow.hpp"
#include "nsm/model_params.hpp"
#include "nsm/tape.hpp"
#include "nsm/vec3.hpp"

namespace nsm {

// Per-frame tokens: r_s anchors with paired geometry and motion features
// living on the active tape.
struct FrameTokens {
    std::vector<Vec3> anchors;
    VarId geometry = kInvalidVar;  // r_s × d_g
    VarId motion = kInvalidVar;    // r_s × d_m
    int frame_index = 0;
};

// Shared grouping + shared-MLP + channelwise-max block. Each neighbor is
// encoded as (p − α), concatenated with its per-point feature row when
// `point_features` is valid. The MLP input width must match.
VarId set_abstraction(Tape& tape, const MlpSpec& mlp, const ParameterStore& store,
                      const std::vector<VarId>& leaves, std::span<const Vec3> anchors,
                      std::span<const Vec3> points, VarId point_features, double radius,
                      int k_samples);

std::vector<Vec3> sample_anchors(const PointCloudFrame& frame, int r_s);

VarId geometry_set_abstraction(Tape& tape, const ModelParams& params,
                               const std::vector<VarId>& leaves,
                               const std::vector<Vec3>& anchors, const PointCloudFrame& frame);

// Per-point motion features of the current frame (N × d_m): embed each
// point's displacement, then run the recurrent cell against the hidden state
// of its back-projected nearest previous point. prev_hidden = kInvalidVar at
// frame 0 (state starts at rest). The returned features are the new hidden
// state, aligned with the current frame's points.
VarId encode_point_motion(Tape& tape, const ModelParams& params,
                          const std::vector<VarId>& leaves, const PointFlowField& flow,
                          VarId prev_hidden, const std::vector<Vec3>& prev_positions,
                          const PointCloudFrame& cur);

VarId motion_set_abstraction(Tape& tape, const ModelParams& params,
                             const std::vector<VarId>& leaves, const std::vector<Vec3>& anchors,
                             const std::vector<Vec3>& points, VarId point_motion);

struct TokenizeResult {
    FrameTokens tokens;
    VarId point_motion = kInvalidVar;  // N × d_m; carried as the next hidden state
};

TokenizeResult tokenize_frame(Tape& tape, const ModelParams& params,
                              const std::vector<VarId>& leaves, const PointCloudFrame& frame,
                              const PointFlowField& flow, VarId prev_hidden,
                              const std::vector<Vec3>& prev_positions);

}  // namespace nsm
