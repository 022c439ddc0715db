#include "nsm/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace nsm {

std::vector<Segment> collapse_runs(const std::vector<int>& labels) {
    std::vector<Segment> segs;
    int n = static_cast<int>(labels.size());
    int i = 0;
    while (i < n) {
        int j = i + 1;
        while (j < n && labels[j] == labels[i]) ++j;
        segs.push_back({labels[i], i, j});
        i = j;
    }
    return segs;
}

static void check_same_length(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("metrics: prediction/ground-truth length mismatch");
}

double framewise_accuracy(const std::vector<int>& pred, const std::vector<int>& gt) {
    check_same_length(pred, gt);
    if (pred.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == gt[i]) ++hit;
    return 100.0 * static_cast<double>(hit) / static_cast<double>(pred.size());
}

static int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    std::vector<int> prev(m + 1), cur(m + 1);
    for (int j = 0; j <= m; ++j) prev[j] = j;
    for (int i = 1; i <= n; ++i) {
        cur[0] = i;
        for (int j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double edit_score(const std::vector<int>& pred, const std::vector<int>& gt) {
    check_same_length(pred, gt);
    auto ps = collapse_runs(pred);
    auto gs = collapse_runs(gt);
    std::vector<int> pl, gl;
    pl.reserve(ps.size());
    gl.reserve(gs.size());
    for (const auto& s : ps) pl.push_back(s.label);
    for (const auto& s : gs) gl.push_back(s.label);
    std::size_t denom = std::max(pl.size(), gl.size());
    if (denom == 0) return 100.0;
    double dist = static_cast<double>(levenshtein(pl, gl));
    return 100.0 * (1.0 - dist / static_cast<double>(denom));
}

static double segment_iou(const Segment& a, const Segment& b) {
    int inter = std::min(a.end, b.end) - std::max(a.begin, b.begin);
    if (inter <= 0) return 0.0;
    int uni = std::max(a.end, b.end) - std::min(a.begin, b.begin);
    return static_cast<double>(inter) / static_cast<double>(uni);
}

MatchCounts f1_counts(const std::vector<int>& pred, const std::vector<int>& gt, double tau) {
    check_same_length(pred, gt);
    auto ps = collapse_runs(pred);
    auto gs = collapse_runs(gt);
    std::vector<bool> used(gs.size(), false);
    MatchCounts c;
    for (const auto& p : ps) {
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t j = 0; j < gs.size(); ++j) {
            if (used[j] || gs[j].label != p.label) continue;
            double iou = segment_iou(p, gs[j]);
            if (iou > best_iou) {  // strict >: earliest wins ties
                best_iou = iou;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0 && best_iou >= tau) {
            used[static_cast<std::size_t>(best)] = true;
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    for (std::size_t j = 0; j < gs.size(); ++j)
        if (!used[j]) ++c.fn;
    return c;
}

double f1_from_counts(const MatchCounts& c) {
    int denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 0.0;
    return 100.0 * 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double mean_iou(const std::vector<int>& pred, const std::vector<int>& gt, int num_classes,
                std::vector<double>* per_class, std::vector<int>* classes_present) {
    check_same_length(pred, gt);
    if (num_classes <= 0) throw std::invalid_argument("mean_iou: num_classes must be positive");
    std::vector<long long> conf(static_cast<std::size_t>(num_classes) * num_classes, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= num_classes || gt[i] < 0 || gt[i] >= num_classes)
            throw std::invalid_argument("mean_iou: label out of range");
        ++conf[static_cast<std::size_t>(gt[i]) * num_classes + pred[i]];
    }
    if (per_class) per_class->clear();
    if (classes_present) classes_present->clear();
    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < num_classes; ++c) {
        long long tp = conf[static_cast<std::size_t>(c) * num_classes + c];
        long long fp = 0, fn = 0;
        for (int o = 0; o < num_classes; ++o) {
            if (o == c) continue;
            fp += conf[static_cast<std::size_t>(o) * num_classes + c];
            fn += conf[static_cast<std::size_t>(c) * num_classes + o];
        }
        if (tp + fp + fn == 0) continue;
        double iou = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
        sum += iou;
        ++counted;
        if (per_class) per_class->push_back(iou);
        if (classes_present) classes_present->push_back(c);
    }
    return counted == 0 ? 0.0 : sum / counted;
}

MetricsReport aggregate_metrics(const std::vector<std::vector<int>>& preds,
                                const std::vector<std::vector<int>>& gts, int num_classes) {
    if (preds.size() != gts.size())
        throw std::invalid_argument("aggregate_metrics: sequence count mismatch");
    MetricsReport r;
    std::vector<int> all_pred, all_gt;
    MatchCounts c10, c25, c50;
    double edit_sum = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        check_same_length(preds[s], gts[s]);
        all_pred.insert(all_pred.end(), preds[s].begin(), preds[s].end());
        all_gt.insert(all_gt.end(), gts[s].begin(), gts[s].end());
        edit_sum += edit_score(preds[s], gts[s]);
        auto add = [](MatchCounts& acc, const MatchCounts& x) {
            acc.tp += x.tp;
            acc.fp += x.fp;
            acc.fn += x.fn;
        };
        add(c10, f1_counts(preds[s], gts[s], 0.10));
        add(c25, f1_counts(preds[s], gts[s], 0.25));
        add(c50, f1_counts(preds[s], gts[s], 0.50));
    }
    r.acc = framewise_accuracy(all_pred, all_gt);
    r.edit = preds.empty() ? 0.0 : edit_sum / static_cast<double>(preds.size());
    r.f1_10 = f1_from_counts(c10);
    r.f1_25 = f1_from_counts(c25);
    r.f1_50 = f1_from_counts(c50);
    r.miou = mean_iou(all_pred, all_gt, num_classes, &r.per_class_iou, &r.classes_present);
    return r;
}

}  // namespace nsm
