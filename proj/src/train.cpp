#include "nsm/train.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "nsm/heads.hpp"
#include "nsm/io.hpp"

namespace nsm {

Task task_from_name(const std::string& name) {
    if (name == "action") return Task::Action;
    if (name == "semantic") return Task::Semantic;
    throw std::invalid_argument("unknown task '" + name + "'");
}

const char* task_name(Task t) { return t == Task::Action ? "action" : "semantic"; }

FlowSource flow_source_from_name(const std::string& name) {
    if (name == "oracle") return FlowSource::Stored;
    if (name == "noisy") return FlowSource::StoredNoisy;
    if (name == "naive") return FlowSource::Naive;
    throw std::invalid_argument("unknown flow source '" + name + "'");
}

const char* flow_source_name(FlowSource f) {
    switch (f) {
        case FlowSource::Stored: return "oracle";
        case FlowSource::StoredNoisy: return "noisy";
        case FlowSource::Naive: return "naive";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (!(base_lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
    if (warmup_epochs < 0) throw std::invalid_argument("train config: negative warm-up");
    for (size_t i = 1; i < decay_epochs.size(); ++i)
        if (decay_epochs[i] <= decay_epochs[i - 1])
            throw std::invalid_argument("train config: decay epochs must be strictly increasing");
    if (!(decay_factor > 0.0)) throw std::invalid_argument("train config: decay factor must be > 0");
    if (momentum < 0.0) throw std::invalid_argument("train config: negative momentum");
    if (batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
    if (total_epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (unroll_window < 0) throw std::invalid_argument("train config: negative unroll window");
}

double lr_at(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw std::invalid_argument("lr_at: negative epoch");
    if (epoch < cfg.warmup_epochs)
        return cfg.base_lr * static_cast<double>(epoch + 1) / cfg.warmup_epochs;
    double lr = cfg.base_lr;
    for (int d : cfg.decay_epochs)
        if (epoch >= d) lr *= cfg.decay_factor;
    return lr;
}

void sgd_step(ParameterStore& store, double lr, double momentum) {
    for (int i = 0; i < store.count(); ++i) {
        auto& p = store.at(i);
        for (size_t j = 0; j < p.value.data.size(); ++j) {
            double v = momentum * p.momentum.data[j] + p.grad.data[j];
            p.momentum.data[j] = v;
            p.value.data[j] -= lr * v;
        }
        check_finite(p.value, ("sgd " + p.name).c_str());
    }
}

VarId cross_entropy(Tape& tape, VarId logits, int target) {
    return tape.softmax_xent_mean(logits, {target});
}

PointFlowField FlowAdapter::adapt(const PointCloudFrame& cur, PointFlowField stored, int t) {
    switch (opt_.source) {
        case FlowSource::Stored:
            return stored;
        case FlowSource::StoredNoisy: {
            if (t == 0 || opt_.sigma == 0.0) return stored;  // no estimate to perturb at t = 0
            uint64_t fseed = mix_seed(opt_.noise_seed,
                                      static_cast<uint64_t>(seq_id_) * 100000u +
                                          static_cast<uint64_t>(t));
            return inject_flow_noise(stored, opt_.sigma, fseed);
        }
        case FlowSource::Naive: {
            PointFlowField f;
            if (t == 0) {
                f.forward_flow.assign(cur.size(), Vec3{});
                f.current_displacement.assign(cur.size(), Vec3{});
            } else {
                f = naive_flow_estimate(prev_, cur);
            }
            prev_ = cur;
            return f;
        }
    }
    throw std::logic_error("unreachable flow source");
}

bool FrameStream::next(PointCloudFrame& frame, PointFlowField& flow) {
    if (pos_ >= seq_.frames.size()) return false;
    frame = std::move(seq_.frames[pos_]);
    flow = std::move(seq_.flows[pos_]);
    seq_.frames[pos_] = PointCloudFrame{};  // past frames are gone for good
    seq_.flows[pos_] = PointFlowField{};
    ++pos_;
    return true;
}

int majority_label(const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("majority_label: empty label set");
    int maxl = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("majority_label: negative label");
        maxl = std::max(maxl, l);
    }
    std::vector<int> cnt(static_cast<size_t>(maxl) + 1, 0);
    for (int l : labels) ++cnt[static_cast<size_t>(l)];
    int best = 0;
    for (int c = 1; c <= maxl; ++c)
        if (cnt[static_cast<size_t>(c)] > cnt[static_cast<size_t>(best)]) best = c;
    return best;
}

static int argmax_row(const Matrix& m, int row) {
    int best = 0;
    for (int c = 1; c < m.cols; ++c)
        if (m.at(row, c) > m.at(row, best)) best = c;
    return best;
}

static VarId frame_loss(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
                        const StepResult& res, const PointCloudFrame& frame, Task task) {
    if (task == Task::Action) {
        if (frame.action_label < 0)
            throw std::invalid_argument("frame " + std::to_string(frame.frame_index) +
                                        ": missing action label");
        VarId logits = action_logits(tape, params, leaves, res.fused);
        return cross_entropy(tape, logits, frame.action_label);
    }
    if (frame.point_labels.size() != frame.positions.size())
        throw std::invalid_argument("frame " + std::to_string(frame.frame_index) +
                                    ": missing point labels");
    VarId logits =
        semantic_logits(tape, params, leaves, res.fused, res.tokens.anchors, frame.positions);
    return tape.softmax_xent_mean(logits, frame.point_labels);
}

double run_training_sequence(ModelParams& params, StepEngine& engine, LabeledSequence seq,
                             Task task, const FlowOptions& flow, int sequence_id,
                             int unroll_window) {
    const int total = static_cast<int>(seq.frames.size());
    if (total == 0) throw std::invalid_argument("run_training_sequence: empty sequence");
    if (unroll_window < 0) throw std::invalid_argument("run_training_sequence: negative window");

    engine.reset();
    FlowAdapter adapter(flow, sequence_id);
    FrameStream stream(std::move(seq));

    auto tape = std::make_unique<Tape>(true);
    std::vector<VarId> leaves = leaf_params(*tape, params.store);

    double loss_sum = 0.0;
    std::vector<VarId> window;
    PointCloudFrame frame;
    PointFlowField stored;
    int t = 0;
    while (stream.next(frame, stored)) {
        PointFlowField field = adapter.adapt(frame, std::move(stored), t);
        StepResult res = engine.step(*tape, leaves, frame, field);
        window.push_back(frame_loss(*tape, params, leaves, res, frame, task));
        ++t;
        bool last = t == total;
        if (!last && !(unroll_window > 0 && static_cast<int>(window.size()) == unroll_window))
            continue;

        VarId sum = window[0];
        for (size_t i = 1; i < window.size(); ++i) sum = tape->add(sum, window[i]);
        loss_sum += tape->val(sum).at(0, 0);
        tape->backward(tape->scale(sum, 1.0 / total));
        harvest_grads(*tape, leaves, params.store);
        window.clear();
        if (!last) {  // hop to a fresh tape; gradients stop at the boundary
            engine.detach(*tape);
            tape = std::make_unique<Tape>(true);
            leaves = leaf_params(*tape, params.store);
            engine.attach(*tape);
        }
    }
    return loss_sum / total;
}

MetricsReport evaluate_online(const ModelParams& params, std::vector<LabeledSequence> seqs,
                              const EvalOptions& opt) {
    if (seqs.empty()) throw std::invalid_argument("evaluate_online: no sequences");
    const int classes =
        opt.task == Task::Action ? params.cfg.action_classes : params.cfg.semantic_classes;

    std::vector<std::vector<int>> frame_preds, frame_gts;  // semantic: per-frame majority labels
    std::vector<int> point_preds, point_gts;
    std::string dump;
    const bool dumping = !opt.dump_path.empty();
    if (dumping) {
        dump = "# seed=" + std::to_string(opt.seed) + "\n";
        dump += opt.task == Task::Action ? "seq,frame,pred,gt\n"
                                         : "seq,frame,pred_major,gt_major,point_acc\n";
    }

    for (size_t s = 0; s < seqs.size(); ++s) {
        StepEngine engine(params, opt.variant);
        FlowAdapter adapter(opt.flow, static_cast<int>(s));
        FrameStream stream(std::move(seqs[s]));
        std::vector<int> preds, gts;
        PointCloudFrame frame;
        PointFlowField stored;
        int t = 0;
        while ((opt.max_frames <= 0 || t < opt.max_frames) && stream.next(frame, stored)) {
            PointFlowField field = adapter.adapt(frame, std::move(stored), t);
            Tape tape(false);  // forward-only; freed when the frame is done
            std::vector<VarId> leaves = leaf_params(tape, params.store);
            engine.attach(tape);
            StepResult res = engine.step(tape, leaves, frame, field);
            char line[96];
            if (opt.task == Task::Action) {
                if (frame.action_label < 0)
                    throw std::invalid_argument("evaluate_online: frame without action label");
                VarId logits = action_logits(tape, params, leaves, res.fused);
                int pred = argmax_row(tape.val(logits), 0);
                preds.push_back(pred);
                gts.push_back(frame.action_label);
                if (dumping) {
                    std::snprintf(line, sizeof line, "%zu,%d,%d,%d\n", s, t, pred,
                                  frame.action_label);
                    dump += line;
                }
            } else {
                if (frame.point_labels.size() != frame.positions.size())
                    throw std::invalid_argument("evaluate_online: frame without point labels");
                VarId logits = semantic_logits(tape, params, leaves, res.fused,
                                               res.tokens.anchors, frame.positions);
                const Matrix& lv = tape.val(logits);
                std::vector<int> pp(static_cast<size_t>(lv.rows));
                int hits = 0;
                for (int r = 0; r < lv.rows; ++r) {
                    pp[static_cast<size_t>(r)] = argmax_row(lv, r);
                    point_preds.push_back(pp[static_cast<size_t>(r)]);
                    point_gts.push_back(frame.point_labels[static_cast<size_t>(r)]);
                    if (pp[static_cast<size_t>(r)] == frame.point_labels[static_cast<size_t>(r)])
                        ++hits;
                }
                int pm = majority_label(pp);
                int gm = majority_label(frame.point_labels);
                preds.push_back(pm);
                gts.push_back(gm);
                if (dumping) {
                    std::snprintf(line, sizeof line, "%zu,%d,%d,%d,%.6f\n", s, t, pm, gm,
                                  100.0 * hits / lv.rows);
                    dump += line;
                }
            }
            engine.detach(tape);
            ++t;
        }
        if (preds.empty()) throw std::invalid_argument("evaluate_online: empty sequence");
        frame_preds.push_back(std::move(preds));
        frame_gts.push_back(std::move(gts));
    }

    MetricsReport report;
    if (opt.task == Task::Action) {
        report = aggregate_metrics(frame_preds, frame_gts, classes);
    } else {
        report.acc = framewise_accuracy(point_preds, point_gts);
        report.miou =
            mean_iou(point_preds, point_gts, classes, &report.per_class_iou,
                     &report.classes_present);
        double edit_sum = 0.0;
        MatchCounts c10, c25, c50;
        auto add = [](MatchCounts& acc, const MatchCounts& x) {
            acc.tp += x.tp;
            acc.fp += x.fp;
            acc.fn += x.fn;
        };
        for (size_t s = 0; s < frame_preds.size(); ++s) {
            edit_sum += edit_score(frame_preds[s], frame_gts[s]);
            add(c10, f1_counts(frame_preds[s], frame_gts[s], 0.10));
            add(c25, f1_counts(frame_preds[s], frame_gts[s], 0.25));
            add(c50, f1_counts(frame_preds[s], frame_gts[s], 0.50));
        }
        report.edit = edit_sum / static_cast<double>(frame_preds.size());
        report.f1_10 = f1_from_counts(c10);
        report.f1_25 = f1_from_counts(c25);
        report.f1_50 = f1_from_counts(c50);
    }
    if (dumping) io::atomic_write(opt.dump_path, dump);
    return report;
}

TrainData load_dataset_sequences(const Dataset& data) {
    TrainData td;
    td.train.reserve(data.train_files.size());
    td.val.reserve(data.test_files.size());
    for (const auto& f : data.train_files) td.train.push_back(load_sequence(f));
    for (const auto& f : data.test_files) td.val.push_back(load_sequence(f));
    return td;
}

static std::string fmt_g(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.9g", v);
    return b;
}

static std::string fmt_f(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.6f", v);
    return b;
}

static const char* kEpochHeader =
    "epoch,lr,train_loss,val_acc,val_edit,val_f1_10,val_f1_25,val_f1_50,val_miou";

TrainResult train(ModelParams& params, const TrainData& data, Task task, const TrainConfig& cfg,
                  const FlowOptions& flow, Variant variant, const TrainPaths& paths) {
    cfg.validate();
    if (data.train.empty()) throw std::invalid_argument("train: no training sequences");
    const int n_train = static_cast<int>(data.train.size());

    TrainResult result;
    std::string csv = "# seed=" + std::to_string(cfg.seed) + "\n" + kEpochHeader + "\n";
    std::vector<int> order(static_cast<size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.total_epochs; ++epoch) {
        double lr = lr_at(cfg, epoch);
        Rng shuffle_rng(mix_seed(cfg.seed, 0xE000u + static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (int b = 0; b < n_train; b += cfg.batch) {
            int bn = std::min(cfg.batch, n_train - b);
            params.store.zero_grads();
            double batch_sum = 0.0;
            for (int i = 0; i < bn; ++i) {
                int id = order[static_cast<size_t>(b + i)];
                StepEngine engine(params, variant);
                try {
                    batch_sum += run_training_sequence(params, engine,
                                                       data.train[static_cast<size_t>(id)], task,
                                                       flow, id, cfg.unroll_window);
                } catch (const std::exception& e) {
                    throw std::runtime_error("epoch " + std::to_string(epoch) + " sequence " +
                                             std::to_string(id) + ": " + e.what());
                }
            }
            for (int pi = 0; pi < params.store.count(); ++pi)
                for (double& g : params.store.at(pi).grad.data) g /= bn;
            sgd_step(params.store, lr, cfg.momentum);
            result.batch_loss.push_back(batch_sum / bn);
            loss_sum += batch_sum;
        }
        result.epoch_loss.push_back(loss_sum / n_train);

        MetricsReport val;
        if (!data.val.empty()) {
            EvalOptions eo;
            eo.task = task;
            eo.flow = flow;
            eo.variant = variant;
            eo.seed = cfg.seed;
            val = evaluate_online(params, data.val, eo);
        }
        result.epoch_val.push_back(val);

        csv += std::to_string(epoch) + "," + fmt_g(lr) + "," +
               fmt_g(result.epoch_loss.back()) + "," + fmt_f(val.acc) + "," + fmt_f(val.edit) +
               "," + fmt_f(val.f1_10) + "," + fmt_f(val.f1_25) + "," + fmt_f(val.f1_50) + "," +
               fmt_f(val.miou) + "\n";
        if (!paths.log_csv.empty()) io::atomic_write(paths.log_csv, csv);

        if (result.best_epoch < 0 || val.acc > result.best_val_acc) {
            result.best_epoch = epoch;
            result.best_val_acc = val.acc;
            if (!paths.best_checkpoint.empty()) params.store.save(paths.best_checkpoint, cfg.seed);
        }
    }
    if (!paths.checkpoint.empty()) params.store.save(paths.checkpoint, cfg.seed);
    return result;
}

}  // namespace nsm
