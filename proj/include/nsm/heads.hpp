#pragma once

#include <vector>

#include "nsm/model_params.hpp"
#include "nsm/tape.hpp"
#include "nsm/vec3.hpp"

namespace nsm {

// Channelwise max over all fused token rows, then the classifier MLP.
// Output: 1 × action_classes.
VarId action_logits(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
                    VarId fused);

// Per-point logits: each point takes the inverse-distance-weighted average
// (power 2, k anchors, weights normalized, exact hits short-circuit) of the
// fused rows at its nearest anchors, then the shared classifier MLP.
// Output: N × semantic_classes.
VarId semantic_logits(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
                      VarId fused, const std::vector<Vec3>& anchors,
                      const std::vector<Vec3>& points);

// The interpolation weights alone (testing hook): row-major N × k index and
// weight lists as used by semantic_logits.
struct InterpPlan {
    std::vector<int> indices;
    std::vector<double> weights;
    int k = 0;
};
InterpPlan interpolation_plan(const std::vector<Vec3>& anchors, const std::vector<Vec3>& points,
                              int k, int power);

}  // namespace nsm
