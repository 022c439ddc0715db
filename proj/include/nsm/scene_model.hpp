#pragma once

#include <string>
#include <vector>

#include "nsm/tokenizer.hpp"

namespace nsm {

// The token memory: n anchors with geometry and motion feature rows on the
// active tape. Positions live outside the tape (their update is flow
// averaging, which carries no gradient by construction).
struct SceneModelState {
    std::vector<Vec3> positions;
    VarId geometry = kInvalidVar;  // n × d_g
    VarId motion = kInvalidVar;    // n × d_m
    int capacity = 0;
    int frames_absorbed = 0;
};

SceneModelState initialize(Tape& tape, const ModelParams& params, const FrameTokens& tokens,
                           int n);

// Token-level flow: mean forward flow over each token's ball in the previous
// frame; empty balls fall back to the nearest point's flow.
std::vector<Vec3> token_flow(const SceneModelState& model, const PointFlowField& flow,
                             const std::vector<Vec3>& prev_positions, double radius);

// positions ← ω + f^ω; features are untouched (geometry copy-and-paste).
void shift_tokens(SceneModelState& model, const std::vector<Vec3>& token_flows);

// Set abstraction over the current frame's point motion features at the
// shifted anchors, concatenated with the existing rows and fused.
void update_motion(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
                   SceneModelState& model, const std::vector<Vec3>& cur_points,
                   VarId point_motion);

// Union with the frame tokens, FPS back down to capacity, then the two
// sample convolutions rebuild both feature matrices at the new anchors.
void merge(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
           SceneModelState& model, const FrameTokens& tokens);

// Dual cross-attention: Q from the frame's geometry tokens; K/V from the
// model's geometry stream and motion stream; the two outputs add.
VarId query(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
            const FrameTokens& tokens, const SceneModelState& model);

enum class Variant { Full, GeometryOnly, MotionOnly, Memoryless };
Variant variant_from_name(const std::string& name);
const char* variant_name(Variant v);

struct StepResult {
    FrameTokens tokens;
    VarId fused = kInvalidVar;  // r_s × fused_dim
};

// Drives one sequence through the pipeline, owning all cross-frame state.
// Within one tape the state flows as live variables (gradients cross
// frames); detach() snapshots values so attach() can re-leaf them on a new
// tape, which truncates backpropagation at the boundary.
class StepEngine {
public:
    StepEngine(const ModelParams& params, Variant variant)
        : params_(&params), variant_(variant) {}

    StepResult step(Tape& tape, const std::vector<VarId>& leaves, const PointCloudFrame& frame,
                    const PointFlowField& flow);

    void detach(const Tape& tape);
    void attach(Tape& tape);
    void reset();

    const SceneModelState& model() const { return model_; }
    int frames_seen() const { return frames_seen_; }

private:
    void apply_variant_mask(Tape& tape, SceneModelState& model) const;

    const ModelParams* params_;
    Variant variant_;
    SceneModelState model_;
    std::vector<Vec3> prev_positions_;
    VarId motion_hidden_ = kInvalidVar;
    int frames_seen_ = 0;
    // tape-hop snapshots
    Matrix geometry_value_, motion_value_, hidden_value_;
    bool detached_ = false;
};

// Debug snapshot of a scene model: versioned binary of positions and both
// feature matrices.
void dump_scene_model(const SceneModelState& model, const Tape& tape, const std::string& path);

}  // namespace nsm
