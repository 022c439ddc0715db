#pragma once

#include <vector>

namespace nsm {

struct MetricsReport {
    double acc = 0.0;  // all fields percentages in [0, 100]
    double edit = 0.0;
    double f1_10 = 0.0;
    double f1_25 = 0.0;
    double f1_50 = 0.0;
    double miou = 0.0;
    std::vector<double> per_class_iou;  // only classes that occur; parallel to classes_present
    std::vector<int> classes_present;
};

struct Segment {
    int label = 0;
    int begin = 0;  // frame range [begin, end)
    int end = 0;
};

std::vector<Segment> collapse_runs(const std::vector<int>& labels);

double framewise_accuracy(const std::vector<int>& pred, const std::vector<int>& gt);

// 100·(1 − Levenshtein(pred segments, gt segments)/max(|pred|, |gt|))
double edit_score(const std::vector<int>& pred, const std::vector<int>& gt);

struct MatchCounts {
    int tp = 0, fp = 0, fn = 0;
};

// Greedy segment matching at IoU threshold tau: predicted segments in order
// each take the unmatched same-class ground-truth segment of highest IoU; a
// take with IoU ≥ tau is a true positive and consumes the segment.
MatchCounts f1_counts(const std::vector<int>& pred, const std::vector<int>& gt, double tau);

double f1_from_counts(const MatchCounts& c);  // 0 when precision+recall = 0

// Mean IoU over classes with TP+FP+FN > 0 (absent classes are excluded),
// computed from the pooled confusion counts.
double mean_iou(const std::vector<int>& pred, const std::vector<int>& gt, int num_classes,
                std::vector<double>* per_class = nullptr,
                std::vector<int>* classes_present = nullptr);

// Pools per-sequence label streams: accuracy and mIoU over all items, edit
// score averaged per sequence, F1 counts accumulated then folded.
MetricsReport aggregate_metrics(const std::vector<std::vector<int>>& preds,
                                const std::vector<std::vector<int>>& gts, int num_classes);

}  // namespace nsm
