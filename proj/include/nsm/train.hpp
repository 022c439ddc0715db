#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsm/dataset.hpp"
#include "nsm/metrics.hpp"
#include "nsm/scene_model.hpp"

namespace nsm {

enum class Task { Action, Semantic };
Task task_from_name(const std::string& name);
const char* task_name(Task t);

struct TrainConfig {
    double base_lr = 0.02;
    int warmup_epochs = 10;
    std::vector<int> decay_epochs = {35, 60, 80};
    double decay_factor = 0.1;
    double momentum = 0.9;
    int batch = 2;          // sequences per optimizer step
    int total_epochs = 50;
    uint64_t seed = 7;
    int unroll_window = 0;  // backprop window in frames; 0 = whole sequence

    void validate() const;
};

// Linear warm-up to base_lr, then ×decay_factor at each decay epoch passed.
double lr_at(const TrainConfig& cfg, int epoch);

// v ← momentum·v + g; p ← p − lr·v, over every parameter in the store.
void sgd_step(ParameterStore& store, double lr, double momentum);

// −log softmax(logits)[target] for a single 1×C logit row, max-shifted.
VarId cross_entropy(Tape& tape, VarId logits, int target);

enum class FlowSource { Stored, StoredNoisy, Naive };
FlowSource flow_source_from_name(const std::string& name);
const char* flow_source_name(FlowSource f);

struct FlowOptions {
    FlowSource source = FlowSource::Stored;
    double sigma = 0.0;       // StoredNoisy: Gaussian sigma in meters
    uint64_t noise_seed = 0;  // StoredNoisy: base of the per-frame noise stream
};

// What the model sees as flow: the stored field, a per-frame-seeded noisy
// copy, or a nearest-neighbor estimate computed from the raw frames. Frame 0
// has no predecessor, so every source yields the stored all-zero field there.
class FlowAdapter {
public:
    FlowAdapter(const FlowOptions& opt, int sequence_id) : opt_(opt), seq_id_(sequence_id) {}
    PointFlowField adapt(const PointCloudFrame& cur, PointFlowField stored, int t);

private:
    FlowOptions opt_;
    int seq_id_ = 0;
    PointCloudFrame prev_;  // kept only for the nearest-neighbor source
};

// One-way destructive frame iterator: next() moves the frame and flow out of
// the sequence, so a consumer can never revisit (or peek at) other frames.
class FrameStream {
public:
    explicit FrameStream(LabeledSequence seq) : seq_(std::move(seq)) {}
    bool next(PointCloudFrame& frame, PointFlowField& flow);
    int total() const { return static_cast<int>(seq_.frames.size()); }

private:
    LabeledSequence seq_;
    size_t pos_ = 0;
};

// Streams one sequence through the engine on a recording tape, accumulating
// per-frame losses (weighted 1/T each); backward at the end of each unroll
// window adds parameter gradients into the store. Returns the mean frame
// loss. engine must be freshly reset; seq is consumed.
double run_training_sequence(ModelParams& params, StepEngine& engine, LabeledSequence seq,
                             Task task, const FlowOptions& flow, int sequence_id,
                             int unroll_window);

struct EvalOptions {
    Task task = Task::Action;
    FlowOptions flow;
    Variant variant = Variant::Full;
    int max_frames = 0;      // 0 = all frames
    std::string dump_path;   // empty = no per-frame prediction dump
    uint64_t seed = 0;       // recorded in the dump header
};

// Strict streaming evaluation: each frame is processed on a fresh
// non-recording tape with the engine state carried across by value, so cost
// and memory per frame do not grow with history. Sequences are consumed.
MetricsReport evaluate_online(const ModelParams& params, std::vector<LabeledSequence> seqs,
                              const EvalOptions& opt);

struct TrainPaths {
    std::string log_csv;          // empty = keep the log in memory only
    std::string checkpoint;       // final parameters; empty = skip
    std::string best_checkpoint;  // best validation accuracy; empty = skip
};

struct TrainResult {
    std::vector<double> epoch_loss;     // mean frame loss per epoch
    std::vector<double> batch_loss;     // one entry per optimizer step
    std::vector<MetricsReport> epoch_val;
    int best_epoch = -1;
    double best_val_acc = 0.0;
};

struct TrainData {
    std::vector<LabeledSequence> train;
    std::vector<LabeledSequence> val;
};

TrainData load_dataset_sequences(const Dataset& data);

// Full training loop: shuffled batches per epoch, SGD with the warm-up/decay
// schedule, per-epoch validation, CSV log and checkpoints (atomic writes).
TrainResult train(ModelParams& params, const TrainData& data, Task task, const TrainConfig& cfg,
                  const FlowOptions& flow, Variant variant, const TrainPaths& paths);

// Majority label of one frame's point labels (ties break to the smaller
// label); the per-frame stream used for segment metrics on semantic tasks.
int majority_label(const std::vector<int>& labels);

}  // namespace nsm
