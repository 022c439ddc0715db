#include "nsm/scene_model.hpp"

#include <sstream>
#include <stdexcept>

#include "nsm/geom.hpp"
#include "nsm/io.hpp"

namespace nsm {

SceneModelState initialize(Tape& tape, const ModelParams& params, const FrameTokens& tokens,
                           int n) {
    int r_s = static_cast<int>(tokens.anchors.size());
    if (r_s == 0) throw std::invalid_argument("initialize: no frame tokens");
    if (n < 1) throw std::invalid_argument("initialize: capacity must be positive");
    (void)params;

    SceneModelState model;
    model.capacity = n;
    model.frames_absorbed = 1;
    if (r_s == n) {
        model.positions = tokens.anchors;
        model.geometry = tokens.geometry;
        model.motion = tokens.motion;
        return model;
    }
    std::vector<int> order = farthest_point_sample(tokens.anchors, std::min(r_s, n));
    std::vector<int> rows;
    rows.reserve(static_cast<size_t>(n));
    if (r_s < n) {
        // repeat the FPS-reselected tokens cyclically until the capacity fills
        for (int i = 0; i < n; ++i) rows.push_back(order[static_cast<size_t>(i % r_s)]);
    } else {
        rows = order;
    }
    model.positions.reserve(static_cast<size_t>(n));
    for (int r : rows) model.positions.push_back(tokens.anchors[static_cast<size_t>(r)]);
    model.geometry = tape.gather_rows(tokens.geometry, rows);
    model.motion = tape.gather_rows(tokens.motion, std::move(rows));
    return model;
}

std::vector<Vec3> token_flow(const SceneModelState& model, const PointFlowField& flow,
                             const std::vector<Vec3>& prev_positions, double radius) {
    if (flow.forward_flow.size() != prev_positions.size())
        throw std::invalid_argument("token_flow: forward flow/previous frame mismatch");
    if (prev_positions.empty()) throw std::invalid_argument("token_flow: empty previous frame");
    auto groups = ball_query(model.positions, prev_positions, radius,
                             static_cast<int>(prev_positions.size()));
    std::vector<Vec3> out;
    out.reserve(model.positions.size());
    for (const auto& g : groups) {
        Vec3 sum{};
        for (int idx : g) sum += flow.forward_flow[static_cast<size_t>(idx)];
        out.push_back(sum / static_cast<double>(g.size()));
    }
    return out;
}

void shift_tokens(SceneModelState& model, const std::vector<Vec3>& token_flows) {
    if (token_flows.size() != model.positions.size())
        throw std::invalid_argument("shift_tokens: one flow vector per token required");
    for (size_t i = 0; i < model.positions.size(); ++i) model.positions[i] += token_flows[i];
}

void update_motion(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
                   SceneModelState& model, const std::vector<Vec3>& cur_points,
                   VarId point_motion) {
    VarId new_part = set_abstraction(tape, params.update_sa, params.store, leaves,
                                     model.positions, cur_points, point_motion,
                                     params.cfg.radius, params.cfg.k_samples);
    VarId both = tape.concat_cols(model.motion, new_part);
    model.motion = params.fusion.forward(tape, params.store, leaves, both);
}

void merge(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
           SceneModelState& model, const FrameTokens& tokens) {
    std::vector<Vec3> union_pos = model.positions;
    union_pos.insert(union_pos.end(), tokens.anchors.begin(), tokens.anchors.end());
    VarId union_geo = tape.concat_rows(model.geometry, tokens.geometry);
    VarId union_mot = tape.concat_rows(model.motion, tokens.motion);

    std::vector<int> sel = farthest_point_sample(union_pos, model.capacity);
    std::vector<Vec3> new_pos;
    new_pos.reserve(sel.size());
    for (int i : sel) new_pos.push_back(union_pos[static_cast<size_t>(i)]);

    model.geometry = set_abstraction(tape, params.merge_sg, params.store, leaves, new_pos,
                                     union_pos, union_geo, params.cfg.radius,
                                     params.cfg.k_samples);
    model.motion = set_abstraction(tape, params.merge_sm, params.store, leaves, new_pos,
                                   union_pos, union_mot, params.cfg.radius, params.cfg.k_samples);
    model.positions = std::move(new_pos);
    model.frames_absorbed += 1;
}

VarId query(Tape& tape, const ModelParams& params, const std::vector<VarId>& leaves,
            const FrameTokens& tokens, const SceneModelState& model) {
    auto lv = [&](int idx) { return leaves[static_cast<size_t>(idx)]; };
    VarId q = tape.matmul(tokens.geometry, lv(params.wq));
    VarId kg = tape.matmul(model.geometry, lv(params.wkg));
    VarId vg = tape.matmul(model.geometry, lv(params.wvg));
    VarId km = tape.matmul(model.motion, lv(params.wkm));
    VarId vm = tape.matmul(model.motion, lv(params.wvm));
    Attention geo = scaled_dot_attention(tape, q, kg, vg);
    Attention mot = scaled_dot_attention(tape, q, km, vm);
    return tape.add(geo.output, mot.output);
}

Variant variant_from_name(const std::string& name) {
    if (name == "full") return Variant::Full;
    if (name == "geometry_only") return Variant::GeometryOnly;
    if (name == "motion_only") return Variant::MotionOnly;
    if (name == "memoryless") return Variant::Memoryless;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::GeometryOnly: return "geometry_only";
        case Variant::MotionOnly: return "motion_only";
        case Variant::Memoryless: return "memoryless";
    }
    return "?";
}

void StepEngine::apply_variant_mask(Tape& tape, SceneModelState& model) const {
    const Matrix& g = tape.val(model.geometry);
    const Matrix& m = tape.val(model.motion);
    if (variant_ == Variant::GeometryOnly) model.motion = tape.zeros(m.rows, m.cols);
    if (variant_ == Variant::MotionOnly) model.geometry = tape.zeros(g.rows, g.cols);
}

StepResult StepEngine::step(Tape& tape, const std::vector<VarId>& leaves,
                            const PointCloudFrame& frame, const PointFlowField& flow) {
    if (detached_) throw std::invalid_argument("step: engine is detached; attach a tape first");
    frame.validate();
    flow.validate(frames_seen_ == 0 ? frame.positions.size() : prev_positions_.size(),
                  frame.positions.size());

    StepResult out;
    if (variant_ == Variant::Memoryless) {
        // no history at all: rest-state motion encoding, model = this frame
        TokenizeResult tk = tokenize_frame(tape, *params_, leaves, frame, flow, kInvalidVar, {});
        model_ = initialize(tape, *params_, tk.tokens, params_->cfg.n_tokens);
        apply_variant_mask(tape, model_);
        out.tokens = tk.tokens;
        out.fused = query(tape, *params_, leaves, tk.tokens, model_);
        prev_positions_ = frame.positions;
        motion_hidden_ = kInvalidVar;
        frames_seen_ += 1;
        return out;
    }

    TokenizeResult tk =
        tokenize_frame(tape, *params_, leaves, frame, flow, motion_hidden_, prev_positions_);
    if (frames_seen_ == 0) {
        model_ = initialize(tape, *params_, tk.tokens, params_->cfg.n_tokens);
    } else {
        std::vector<Vec3> flows = token_flow(model_, flow, prev_positions_, params_->cfg.radius);
        shift_tokens(model_, flows);
        update_motion(tape, *params_, leaves, model_, frame.positions, tk.point_motion);
        merge(tape, *params_, leaves, model_, tk.tokens);
    }
    apply_variant_mask(tape, model_);
    out.tokens = tk.tokens;
    out.fused = query(tape, *params_, leaves, tk.tokens, model_);
    prev_positions_ = frame.positions;
    motion_hidden_ = tk.point_motion;
    frames_seen_ += 1;
    return out;
}

void StepEngine::detach(const Tape& tape) {
    if (frames_seen_ == 0 || detached_) return;
    if (variant_ != Variant::Memoryless) {
        geometry_value_ = tape.val(model_.geometry);
        motion_value_ = tape.val(model_.motion);
        hidden_value_ = tape.val(motion_hidden_);
    }
    detached_ = true;
}

void StepEngine::attach(Tape& tape) {
    if (!detached_) return;
    if (variant_ != Variant::Memoryless) {
        model_.geometry = tape.constant(geometry_value_);
        model_.motion = tape.constant(motion_value_);
        motion_hidden_ = tape.constant(hidden_value_);
    }
    detached_ = false;
}

void StepEngine::reset() {
    model_ = SceneModelState{};
    prev_positions_.clear();
    motion_hidden_ = kInvalidVar;
    frames_seen_ = 0;
    detached_ = false;
}

void dump_scene_model(const SceneModelState& model, const Tape& tape, const std::string& path) {
    std::ostringstream os(std::ios::binary);
    const char magic[8] = {'N', 'S', 'M', '4', 'D', 'S', 'N', 'P'};
    io::write_bytes(os, magic, sizeof magic);
    io::write_u32(os, 1);
    io::write_u32(os, static_cast<uint32_t>(model.positions.size()));
    const Matrix& g = tape.val(model.geometry);
    const Matrix& m = tape.val(model.motion);
    io::write_u32(os, static_cast<uint32_t>(g.cols));
    io::write_u32(os, static_cast<uint32_t>(m.cols));
    io::write_u32(os, static_cast<uint32_t>(model.frames_absorbed));
    for (const Vec3& p : model.positions) {
        io::write_f64(os, p.x);
        io::write_f64(os, p.y);
        io::write_f64(os, p.z);
    }
    for (double v : g.data) io::write_f64(os, v);
    for (double v : m.data) io::write_f64(os, v);
    io::atomic_write(path, os.str());
}

}  // namespace nsm
