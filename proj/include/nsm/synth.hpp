#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsm/flow.hpp"
#include "nsm/vec3.hpp"

namespace nsm {

enum class Primitive { Box, Sphere, Plane };

struct BodySpec {
    Primitive primitive = Primitive::Box;
    Vec3 size{0.5, 0.5, 0.5};  // box: half-extents; sphere: x = radius; plane: half-extents x,y
    int surface_points = 64;
    int static_label = 0;  // point class while the body rests
    int moving_label = 0;  // point class while the body moves
    RigidMotion initial_pose;
};

// One span of the global timeline: every frame inside it applies the same
// world-frame delta to each body and carries one action class.
struct Phase {
    int duration = 1;
    int action_class = 0;
    std::vector<RigidMotion> body_step;  // one delta per body
};

struct SceneScript {
    std::vector<BodySpec> bodies;
    std::vector<Phase> phases;
    std::vector<RigidMotion> camera;  // camera→world per frame; empty = static identity
    double noise_sigma = 0.0;         // sensor noise, meters
    double visible_fraction = 1.0;    // per-frame random subset of each body's points
    uint64_t seed = 0;
    int action_classes = 0;  // base count, before reverse augmentation
    int point_classes = 0;

    int total_frames() const;
    void validate() const;
};

// Generator provenance carried alongside a sequence: exact per-frame poses
// and per-body step displacements. Needed to reverse/stitch; not serialized.
struct GenMeta {
    std::vector<SceneSnapshot> snapshots;              // one per frame
    std::vector<std::vector<double>> body_step_disp;   // [frame][body], frame 0 all zero
    std::vector<std::pair<int, int>> body_labels;      // (static, moving) per body
    int base_action_classes = 0;
};

struct LabeledSequence {
    std::vector<PointCloudFrame> frames;
    std::vector<PointFlowField> flows;  // flows[t] covers step t-1→t; flows[0] all-zero
    uint64_t seed = 0;
    uint64_t script_hash = 0;
    bool has_meta = false;
    GenMeta meta;

    int length() const { return static_cast<int>(frames.size()); }
    void validate() const;
};

uint64_t script_hash(const SceneScript& script);

LabeledSequence generate_sequence(const SceneScript& script);

// Append the time-reversal (reverse phases become distinct classes: c ↦ c+C
// for c < C, else c−C), then rotate so playback begins at start_index. The
// stitched timeline is a closed loop, so both seams are duplicate frames with
// exactly zero flow. Requires generator metadata.
LabeledSequence reverse_stitch(const LabeledSequence& seq, int start_index);

// Contiguous crop [start, start+len); frame indices renumbered from 0 and the
// first frame's flow zeroed (it has no predecessor inside the crop).
LabeledSequence crop_sequence(const LabeledSequence& seq, int start, int len);

// Canonical task recipes. `frames` is the sequence length; point_budget is
// the total material points across bodies.
SceneScript make_action_script(uint64_t seed, int frames, int point_budget,
                               double visible_fraction, double noise_sigma);
SceneScript make_semantic_script(uint64_t seed, int frames, int point_budget,
                                 double visible_fraction, double noise_sigma);

constexpr int kActionClasses = 6;    // base classes of the action recipe
constexpr int kSemanticClasses = 7;  // 3 body kinds × {static, moving} + ground

}  // namespace nsm
