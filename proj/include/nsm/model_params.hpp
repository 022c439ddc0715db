#pragma once

#include <cstdint>

#include "nsm/nn.hpp"

namespace nsm {

struct ModelConfig {
    int r_s = 64;        // anchors per frame
    int n_tokens = 64;   // scene-model capacity
    double radius = 0.9;
    int k_samples = 32;
    int d_g = 64;
    int d_m = 64;
    int d_k = 32;        // attention key width
    int fused_dim = 64;  // attention value width (both streams)
    int sa_hidden = 64;
    int head_hidden = 64;
    int action_classes = 12;  // 2× the base classes, leaving room for reversed phases
    int semantic_classes = 7;
    int interp_k = 3;
    int interp_power = 2;

    void validate() const;
};

// All trainable pieces of the pipeline with a fixed registration order, so a
// checkpoint written by one run loads byte-compatibly into another.
struct ModelParams {
    ModelConfig cfg;

    MlpSpec geo_sa;        // (p−α) → d_g, the raw-level set abstraction
    MlpSpec motion_embed;  // displacement → d_m
    GruSpec gru;           // per-point recurrence
    MlpSpec motion_sa;     // (p−α) ⊕ motion feature → d_m
    MlpSpec update_sa;     // (p−α) ⊕ motion feature → d_m at shifted tokens
    MlpSpec fusion;        // old ⊕ new motion rows → d_m (single affine layer)
    MlpSpec merge_sg;      // sample convolution over geometry features
    MlpSpec merge_sm;      // sample convolution over motion features
    MlpSpec action_head;
    MlpSpec sem_head;
    // bias-free query projections (store indices), so zeroing a stream's
    // features zeroes its K/V exactly
    int wq = -1, wkg = -1, wvg = -1, wkm = -1, wvm = -1;

    ParameterStore store;

    static ModelParams create(const ModelConfig& cfg, uint64_t seed);
    // Same specs, parameters taken from a checkpoint; shape-checked.
    static ModelParams from_checkpoint(const ModelConfig& cfg, const std::string& path);
};

}  // namespace nsm
