#include "nsm/tokenizer.hpp"

#include <stdexcept>
#include <string>

#include "nsm/geom.hpp"

namespace nsm {

VarId set_abstraction(Tape& tape, const MlpSpec& mlp, const ParameterStore& store,
                      const std::vector<VarId>& leaves, std::span<const Vec3> anchors,
                      std::span<const Vec3> points, VarId point_features, double radius,
                      int k_samples) {
    if (anchors.empty()) throw std::invalid_argument("set_abstraction: no anchors");
    int feat_dim = 0;
    if (point_features != kInvalidVar) {
        const Matrix& f = tape.val(point_features);
        if (f.rows != static_cast<int>(points.size()))
            throw std::invalid_argument("set_abstraction: feature rows must match point count");
        feat_dim = f.cols;
    }
    if (mlp.in_dim() != 3 + feat_dim)
        throw std::invalid_argument("set_abstraction: " + mlp.prefix + " expects input width " +
                                    std::to_string(mlp.in_dim()) + ", got " +
                                    std::to_string(3 + feat_dim));

    auto groups = ball_query(anchors, points, radius, k_samples);
    std::vector<int> offsets(1, 0);
    std::vector<int> flat;
    for (const auto& g : groups) {
        flat.insert(flat.end(), g.begin(), g.end());
        offsets.push_back(static_cast<int>(flat.size()));
    }

    Matrix rel(static_cast<int>(flat.size()), 3);
    for (size_t a = 0; a < groups.size(); ++a)
        for (int r = offsets[a]; r < offsets[a + 1]; ++r) {
            Vec3 d = points[static_cast<size_t>(flat[static_cast<size_t>(r)])] - anchors[a];
            rel.at(r, 0) = d.x;
            rel.at(r, 1) = d.y;
            rel.at(r, 2) = d.z;
        }
    VarId enc = tape.constant(std::move(rel));
    if (point_features != kInvalidVar)
        enc = tape.concat_cols(enc, tape.gather_rows(point_features, flat));
    VarId hidden = mlp.forward(tape, store, leaves, enc);
    return tape.segment_max_rows(hidden, std::move(offsets));
}

std::vector<Vec3> sample_anchors(const PointCloudFrame& frame, int r_s) {
    if (r_s > frame.size())
        throw std::invalid_argument("sample_anchors: r_s exceeds frame point count");
    std::vector<int> idx = farthest_point_sample(frame.positions, r_s);
    std::vector<Vec3> anchors;
    anchors.reserve(idx.size());
    for (int i : idx) anchors.push_back(frame.positions[static_cast<size_t>(i)]);
    return anchors;
}

VarId geometry_set_abstraction(Tape& tape, const ModelParams& params,
                               const std::vector<VarId>& leaves,
                               const std::vector<Vec3>& anchors, const PointCloudFrame& frame) {
    return set_abstraction(tape, params.geo_sa, params.store, leaves, anchors, frame.positions,
                           kInvalidVar, params.cfg.radius, params.cfg.k_samples);
}

VarId encode_point_motion(Tape& tape, const ModelParams& params,
                          const std::vector<VarId>& leaves, const PointFlowField& flow,
                          VarId prev_hidden, const std::vector<Vec3>& prev_positions,
                          const PointCloudFrame& cur) {
    const size_t n = cur.positions.size();
    if (flow.current_displacement.size() != n)
        throw std::invalid_argument("encode_point_motion: displacement/point count mismatch");
    if (prev_hidden != kInvalidVar && flow.forward_flow.size() != prev_positions.size())
        throw std::invalid_argument("encode_point_motion: forward flow/previous frame mismatch");

    Matrix disp(static_cast<int>(n), 3);
    for (size_t j = 0; j < n; ++j) {
        disp.at(static_cast<int>(j), 0) = flow.current_displacement[j].x;
        disp.at(static_cast<int>(j), 1) = flow.current_displacement[j].y;
        disp.at(static_cast<int>(j), 2) = flow.current_displacement[j].z;
    }
    VarId x = params.motion_embed.forward(tape, params.store, leaves, tape.constant(std::move(disp)));

    VarId h;
    if (prev_hidden == kInvalidVar) {
        h = tape.zeros(static_cast<int>(n), params.cfg.d_m);
    } else {
        if (tape.val(prev_hidden).rows != static_cast<int>(prev_positions.size()))
            throw std::invalid_argument("encode_point_motion: hidden/previous frame mismatch");
        std::vector<Vec3> back(n);
        for (size_t j = 0; j < n; ++j) back[j] = cur.positions[j] - flow.current_displacement[j];
        KnnResult nn = k_nearest(back, prev_positions, 1);
        std::vector<int> idx(n);
        for (size_t j = 0; j < n; ++j) idx[j] = nn.index(static_cast<int>(j), 0);
        h = tape.gather_rows(prev_hidden, std::move(idx));
    }
    return params.gru.step(tape, params.store, leaves, x, h);
}

VarId motion_set_abstraction(Tape& tape, const ModelParams& params,
                             const std::vector<VarId>& leaves, const std::vector<Vec3>& anchors,
                             const std::vector<Vec3>& points, VarId point_motion) {
    return set_abstraction(tape, params.motion_sa, params.store, leaves, anchors, points,
                           point_motion, params.cfg.radius, params.cfg.k_samples);
}

TokenizeResult tokenize_frame(Tape& tape, const ModelParams& params,
                              const std::vector<VarId>& leaves, const PointCloudFrame& frame,
                              const PointFlowField& flow, VarId prev_hidden,
                              const std::vector<Vec3>& prev_positions) {
    frame.validate();
    TokenizeResult out;
    out.tokens.frame_index = frame.frame_index;
    out.tokens.anchors = sample_anchors(frame, params.cfg.r_s);
    out.tokens.geometry = geometry_set_abstraction(tape, params, leaves, out.tokens.anchors, frame);
    out.point_motion =
        encode_point_motion(tape, params, leaves, flow, prev_hidden, prev_positions, frame);
    out.tokens.motion = motion_set_abstraction(tape, params, leaves, out.tokens.anchors,
                                               frame.positions, out.point_motion);
    return out;
}

}  // namespace nsm
