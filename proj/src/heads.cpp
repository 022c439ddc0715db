#include "nsm/heads.hpp"

#include <cmath>
#include <stdexcept>

#include "nsm/geom.hpp"

namespace nsm {

VarId action_logits(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
                    VarId fused) {
    const Matrix& f = tape.val(fused);
    if (f.rows < 1) throw std::invalid_argument("action_logits: no tokens to pool");
    VarId pooled = tape.segment_max_rows(fused, {0, f.rows});
    return params.action_head.forward(tape, params.store, leaves, pooled);
}

InterpPlan interpolation_plan(const std::vector<Vec3>& anchors, const std::vector<Vec3>& points,
                              int k, int power) {
    if (k < 1 || k > static_cast<int>(anchors.size()))
        throw std::invalid_argument("interpolation: k must be in [1, anchor count]");
    constexpr double kExactHit = 1e-12;
    KnnResult nn = k_nearest(points, anchors, k);
    InterpPlan plan;
    plan.k = k;
    plan.indices.resize(points.size() * static_cast<size_t>(k));
    plan.weights.assign(points.size() * static_cast<size_t>(k), 0.0);
    for (size_t q = 0; q < points.size(); ++q) {
        for (int j = 0; j < k; ++j)
            plan.indices[q * static_cast<size_t>(k) + static_cast<size_t>(j)] =
                nn.index(static_cast<int>(q), j);
        if (nn.distance(static_cast<int>(q), 0) < kExactHit) {
            plan.weights[q * static_cast<size_t>(k)] = 1.0;  // coincident anchor wins outright
            continue;
        }
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            double w = 1.0 / std::pow(nn.distance(static_cast<int>(q), j), power);
            plan.weights[q * static_cast<size_t>(k) + static_cast<size_t>(j)] = w;
            sum += w;
        }
        for (int j = 0; j < k; ++j)
            plan.weights[q * static_cast<size_t>(k) + static_cast<size_t>(j)] /= sum;
    }
    return plan;
}

VarId semantic_logits(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
                      VarId fused, const std::vector<Vec3>& anchors,
                      const std::vector<Vec3>& points) {
    const Matrix& f = tape.val(fused);
    if (f.rows != static_cast<int>(anchors.size()))
        throw std::invalid_argument("semantic_logits: fused rows must match anchors");
    InterpPlan plan =
        interpolation_plan(anchors, points, params.cfg.interp_k, params.cfg.interp_power);
    // Offset of each point from its interpolation centroid. Without this the
    // head sees one shared feature per anchor neighborhood and cannot tell
    // the points in it apart.
    Matrix rel(static_cast<int>(points.size()), 3);
    for (size_t q = 0; q < points.size(); ++q) {
        Vec3 centroid{};
        for (int j = 0; j < plan.k; ++j) {
            size_t slot = q * static_cast<size_t>(plan.k) + static_cast<size_t>(j);
            centroid += anchors[static_cast<size_t>(plan.indices[slot])] * plan.weights[slot];
        }
        Vec3 d = points[q] - centroid;
        rel.at(static_cast<int>(q), 0) = d.x;
        rel.at(static_cast<int>(q), 1) = d.y;
        rel.at(static_cast<int>(q), 2) = d.z;
    }
    VarId per_point =
        tape.interp_rows(fused, std::move(plan.indices), std::move(plan.weights), plan.k);
    VarId with_rel = tape.concat_cols(per_point, tape.constant(std::move(rel)));
    return params.sem_head.forward(tape, params.store, leaves, with_rel);
}

}  // namespace nsm
