#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsm/train.hpp"

namespace nsm {

// Human-readable sidecar written next to each checkpoint so eval can rebuild
// the exact model shape; round-trips through parse_model_config.
std::string model_config_text(const ModelConfig& cfg, Task task, uint64_t seed);

struct ModelSidecar {
    ModelConfig cfg;
    Task task = Task::Action;
    uint64_t seed = 0;
};
ModelSidecar parse_model_config(const std::string& text);

// checkpoint path → its sidecar path (swap a .ckpt suffix for .cfg).
std::string sidecar_path(const std::string& checkpoint_path);

struct BenchRow {
    std::string mode;  // "stream" | "sliding"
    int length = 0;    // frames processed
    int window = 0;    // sliding only
    double mean_step_ms = 0.0;
    long peak_rss_kb = 0;
};

// Streaming cost at several sequence lengths over prefixes of one master
// sequence (kept resident throughout, so its bytes cancel between rows).
std::vector<BenchRow> run_stream_bench(const ModelParams& params, const LabeledSequence& master,
                                       const std::vector<int>& lengths);

// Baseline that reprocesses the last W raw frames from scratch every frame.
std::vector<BenchRow> run_sliding_bench(const ModelParams& params, const LabeledSequence& master,
                                        int frames, const std::vector<int>& windows);

// Entry point behind main(): parses subcommands and runs them.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int run_cli(int argc, char** argv);

}  // namespace nsm
